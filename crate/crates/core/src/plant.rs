//! Rigid-body plants of the form `M(q) q̈ + C(q, q̇) q̇ + g(q) = u + τ_ext`.

use nalgebra::{SMatrix, SVector, Vector2};

use crate::error::{invalid, numerical, Result};

/// Joint positions and velocities, `x = [q; q̇]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<const N: usize> {
    pub q: SVector<f64, N>,
    pub qd: SVector<f64, N>,
}

impl<const N: usize> State<N> {
    pub fn new(q: SVector<f64, N>, qd: SVector<f64, N>) -> Self {
        Self { q, qd }
    }

    /// Configuration `q` with zero velocity.
    pub fn at_rest(q: SVector<f64, N>) -> Self {
        Self { q, qd: SVector::zeros() }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite())
    }
}

/// Time derivative of a [`State`]: `[q̇; q̈]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative<const N: usize> {
    pub qd: SVector<f64, N>,
    pub qdd: SVector<f64, N>,
}

/// Euler-Lagrange plant with a planar end effector.
///
/// Implementors must return a symmetric positive definite mass matrix and a
/// Coriolis matrix built from Christoffel symbols, so that `Ṁ - 2C` is skew
/// symmetric.
pub trait PlantModel<const N: usize>: Send + Sync {
    fn mass_matrix(&self, q: &SVector<f64, N>) -> SMatrix<f64, N, N>;

    fn coriolis_matrix(&self, q: &SVector<f64, N>, qd: &SVector<f64, N>) -> SMatrix<f64, N, N>;

    /// `∂U/∂q` of the gravitational potential.
    fn gravity_vector(&self, q: &SVector<f64, N>) -> SVector<f64, N>;

    /// Gravitational potential `U(q)`.
    fn potential_energy(&self, q: &SVector<f64, N>) -> f64;

    /// End-effector position `p = f(q)` in the plane.
    fn forward_kinematics(&self, q: &SVector<f64, N>) -> Vector2<f64>;

    /// `∂f/∂q`.
    fn jacobian(&self, q: &SVector<f64, N>) -> SMatrix<f64, 2, N>;

    fn kinetic_energy(&self, x: &State<N>) -> f64 {
        0.5 * x.qd.dot(&(self.mass_matrix(&x.q) * x.qd))
    }

    /// `[q̇; M⁻¹(u + τ_ext - C q̇ - g)]`.
    fn dynamics(&self, x: &State<N>, u: &SVector<f64, N>, tau_ext: &SVector<f64, N>) -> Result<StateDerivative<N>> {
        let mass = self.mass_matrix(&x.q);
        let rhs = u + tau_ext - self.coriolis_matrix(&x.q, &x.qd) * x.qd - self.gravity_vector(&x.q);
        let chol = mass
            .cholesky()
            .ok_or_else(|| numerical(format!("mass matrix not positive definite at q = {:?}", x.q.as_slice())))?;
        Ok(StateDerivative { qd: x.qd, qdd: chol.solve(&rhs) })
    }
}

/// Planar point mass with unit mass and no gravity: `q̈ = u`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleIntegrator;

impl PlantModel<2> for DoubleIntegrator {
    fn mass_matrix(&self, _q: &Vector2<f64>) -> SMatrix<f64, 2, 2> {
        SMatrix::identity()
    }

    fn coriolis_matrix(&self, _q: &Vector2<f64>, _qd: &Vector2<f64>) -> SMatrix<f64, 2, 2> {
        SMatrix::zeros()
    }

    fn gravity_vector(&self, _q: &Vector2<f64>) -> Vector2<f64> {
        Vector2::zeros()
    }

    fn potential_energy(&self, _q: &Vector2<f64>) -> f64 {
        0.0
    }

    fn forward_kinematics(&self, q: &Vector2<f64>) -> Vector2<f64> {
        *q
    }

    fn jacobian(&self, _q: &Vector2<f64>) -> SMatrix<f64, 2, 2> {
        SMatrix::identity()
    }

    fn dynamics(&self, x: &State<2>, u: &Vector2<f64>, tau_ext: &Vector2<f64>) -> Result<StateDerivative<2>> {
        Ok(StateDerivative { qd: x.qd, qdd: u + tau_ext })
    }
}

/// Two-link revolute planar arm with point masses at the link tips.
///
/// Gravity acts along `-y` with magnitude `g0`; `g0 = 0` models an arm lying
/// in a horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrArm {
    pub l1: f64,
    pub l2: f64,
    pub m1: f64,
    pub m2: f64,
    pub g0: f64,
}

impl RrArm {
    pub const DEFAULT_GRAVITY: f64 = 9.81;

    pub fn new(l1: f64, l2: f64, m1: f64, m2: f64, g0: f64) -> Result<Self> {
        for (name, value) in [("l1", l1), ("l2", l2), ("m1", m1), ("m2", m2)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(format!("RR arm {name} must be positive, got {value}")));
            }
        }
        if !(g0.is_finite() && g0 >= 0.0) {
            return Err(invalid(format!("RR arm g0 must be non-negative, got {g0}")));
        }
        Ok(Self { l1, l2, m1, m2, g0 })
    }

    /// Link tip positions `(p1, p2)`; `p2` is the end effector.
    pub fn link_tips(&self, q: &Vector2<f64>) -> (Vector2<f64>, Vector2<f64>) {
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let p1 = Vector2::new(self.l1 * c1, self.l1 * s1);
        (p1, p1 + Vector2::new(self.l2 * c12, self.l2 * s12))
    }
}

impl PlantModel<2> for RrArm {
    fn mass_matrix(&self, q: &Vector2<f64>) -> SMatrix<f64, 2, 2> {
        let Self { l1, l2, m1, m2, .. } = *self;
        let c2 = q[1].cos();
        let m12 = m2 * (l2 * l2 + l1 * l2 * c2);
        SMatrix::<f64, 2, 2>::new(m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2), m12, m12, m2 * l2 * l2)
    }

    fn coriolis_matrix(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> SMatrix<f64, 2, 2> {
        let h = -self.m2 * self.l1 * self.l2 * q[1].sin();
        SMatrix::<f64, 2, 2>::new(h * qd[1], h * (qd[0] + qd[1]), -h * qd[0], 0.0)
    }

    fn gravity_vector(&self, q: &Vector2<f64>) -> Vector2<f64> {
        let Self { l1, l2, m1, m2, g0 } = *self;
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        let tip = m2 * g0 * l2 * c12;
        Vector2::new((m1 + m2) * g0 * l1 * c1 + tip, tip)
    }

    fn potential_energy(&self, q: &Vector2<f64>) -> f64 {
        let (p1, p2) = self.link_tips(q);
        self.g0 * (self.m1 * p1.y + self.m2 * p2.y)
    }

    fn forward_kinematics(&self, q: &Vector2<f64>) -> Vector2<f64> {
        self.link_tips(q).1
    }

    fn jacobian(&self, q: &Vector2<f64>) -> SMatrix<f64, 2, 2> {
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let (l1, l2) = (self.l1, self.l2);
        SMatrix::<f64, 2, 2>::new(-l1 * s1 - l2 * s12, -l2 * s12, l1 * c1 + l2 * c12, l2 * c12)
    }
}
