use cerg_core::{DoubleIntegrator, PlantModel, Result, RrArm, State, StateDerivative};
use nalgebra::{Matrix2, Vector2};

/// The planar plants a scenario file can name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plant {
    DoubleIntegrator(DoubleIntegrator),
    RrArm(RrArm),
}

impl Plant {
    pub fn name(&self) -> &'static str {
        match self {
            Plant::DoubleIntegrator(_) => "double_integrator",
            Plant::RrArm(_) => "rr_arm",
        }
    }

    fn model(&self) -> &dyn PlantModel<2> {
        match self {
            Plant::DoubleIntegrator(p) => p,
            Plant::RrArm(p) => p,
        }
    }
}

impl PlantModel<2> for Plant {
    fn mass_matrix(&self, q: &Vector2<f64>) -> Matrix2<f64> {
        self.model().mass_matrix(q)
    }

    fn coriolis_matrix(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> Matrix2<f64> {
        self.model().coriolis_matrix(q, qd)
    }

    fn gravity_vector(&self, q: &Vector2<f64>) -> Vector2<f64> {
        self.model().gravity_vector(q)
    }

    fn potential_energy(&self, q: &Vector2<f64>) -> f64 {
        self.model().potential_energy(q)
    }

    fn forward_kinematics(&self, q: &Vector2<f64>) -> Vector2<f64> {
        self.model().forward_kinematics(q)
    }

    fn jacobian(&self, q: &Vector2<f64>) -> Matrix2<f64> {
        self.model().jacobian(q)
    }

    fn kinetic_energy(&self, x: &State<2>) -> f64 {
        self.model().kinetic_energy(x)
    }

    fn dynamics(&self, x: &State<2>, u: &Vector2<f64>, tau_ext: &Vector2<f64>) -> Result<StateDerivative<2>> {
        self.model().dynamics(x, u, tau_ext)
    }
}
