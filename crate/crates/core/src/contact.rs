//! Unidirectional spring-damper surface:
//! `F = -max(0, K s) ∇s - max(0, B s) ṗ`.
//!
//! Damping scales the full contact-point velocity by the penetration depth,
//! tangential components included.

use nalgebra::{SVector, Vector2};

use crate::constraints::SoftConstraint;
use crate::error::{invalid, Result};
use crate::plant::{PlantModel, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    /// Spring stiffness `K` (N/m).
    pub stiffness: f64,
    /// Damping `B` (N·s/m per metre of penetration).
    pub damping: f64,
}

impl ContactParams {
    pub fn new(stiffness: f64, damping: f64) -> Result<Self> {
        if !(stiffness.is_finite() && stiffness > 0.0) {
            return Err(invalid(format!("contact stiffness must be positive, got {stiffness}")));
        }
        if !(damping.is_finite() && damping >= 0.0) {
            return Err(invalid(format!("contact damping must be non-negative, got {damping}")));
        }
        Ok(Self { stiffness, damping })
    }
}

/// Force exerted by the surface, zero unless `penetration > 0`.
///
/// `normal` must be the unit outward normal (the gradient of `s`).
pub fn contact_force<const D: usize>(
    penetration: f64,
    normal: &SVector<f64, D>,
    velocity: &SVector<f64, D>,
    params: &ContactParams,
) -> SVector<f64, D> {
    if penetration <= 0.0 {
        return SVector::zeros();
    }
    -normal * (params.stiffness * penetration) - velocity * (params.damping * penetration)
}

/// `Jᵀ(q) F`.
pub fn generalized_contact_torque<const N: usize>(
    model: &dyn PlantModel<N>,
    q: &SVector<f64, N>,
    force: &Vector2<f64>,
) -> SVector<f64, N> {
    model.jacobian(q).transpose() * force
}

/// Contact state of the robot against the soft surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEval<const N: usize> {
    pub penetration: f64,
    /// Generalized force entering the dynamics.
    pub torque: SVector<f64, N>,
    /// Force for logging: the end-effector force for task-space surfaces,
    /// the leading two generalized-force components for joint-space ones.
    pub force: Vector2<f64>,
}

/// Evaluates the surface in its native space and maps the force to joints.
pub fn soft_contact<const N: usize>(
    model: &dyn PlantModel<N>,
    soft: &SoftConstraint<N>,
    x: &State<N>,
    params: &ContactParams,
) -> ContactEval<N> {
    match soft {
        SoftConstraint::Joint(surface) => {
            let penetration = surface.eval(&x.q);
            let normal = surface.gradient(&x.q).normalize();
            let torque = contact_force(penetration, &normal, &x.qd, params);
            let force = Vector2::from_fn(|i, _| if i < N { torque[i] } else { 0.0 });
            ContactEval { penetration, torque, force }
        }
        SoftConstraint::Task(surface) => {
            let p = model.forward_kinematics(&x.q);
            let penetration = surface.eval(&p);
            if penetration <= 0.0 {
                return ContactEval { penetration, torque: SVector::zeros(), force: Vector2::zeros() };
            }
            let jac = model.jacobian(&x.q);
            let normal = surface.gradient(&p).normalize();
            let force = contact_force(penetration, &normal, &(jac * x.qd), params);
            ContactEval { penetration, torque: jac.transpose() * force, force }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{DoubleIntegrator, RrArm};

    fn params() -> ContactParams {
        ContactParams::new(100.0, 10.0).unwrap()
    }

    #[test]
    fn no_force_outside() {
        let f = contact_force(-0.2, &Vector2::new(0.0, 1.0), &Vector2::new(3.0, -1.0), &params());
        assert_eq!(f, Vector2::zeros());
    }

    #[test]
    fn spring_and_damper_substitution() {
        let n = Vector2::new(0.0, 1.0);
        let f = contact_force(0.01, &n, &Vector2::zeros(), &params());
        assert!((f - Vector2::new(0.0, -1.0)).norm() < 1e-15);
        let f = contact_force(0.01, &n, &Vector2::new(0.5, 0.0), &params());
        assert!((f - Vector2::new(-0.05, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn continuous_at_surface() {
        let n = Vector2::new(0.0, 1.0);
        let v = Vector2::new(0.3, 2.0);
        assert!(contact_force(1e-12, &n, &v, &params()).norm() < 1e-9);
    }

    #[test]
    fn torque_mapping() {
        let q = Vector2::new(0.3, 0.1);
        assert_eq!(generalized_contact_torque(&DoubleIntegrator, &q, &Vector2::zeros()), Vector2::zeros());
        assert_eq!(
            generalized_contact_torque(&DoubleIntegrator, &q, &Vector2::new(0.0, -1.0)),
            Vector2::new(0.0, -1.0)
        );
    }

    #[test]
    fn virtual_work_matches() {
        let arm = RrArm::new(1.0, 0.5, 2.0, 1.5, 9.81).unwrap();
        let q = Vector2::new(0.7, -1.2);
        let f = Vector2::new(-2.0, 0.7);
        let tau = generalized_contact_torque(&arm, &q, &f);
        let dq = Vector2::new(1e-6, -2e-6);
        let dp = arm.forward_kinematics(&(q + dq)) - arm.forward_kinematics(&(q - dq));
        assert!((tau.dot(&(dq * 2.0)) - f.dot(&dp)).abs() < 1e-12);
    }

    #[test]
    fn joint_surface_contact_on_double_integrator() {
        let soft = SoftConstraint::joint_halfspace(Vector2::new(0.0, 1.0), 1.5).unwrap();
        let x = State::new(Vector2::new(0.5, 1.51), Vector2::new(0.5, 0.0));
        let c = soft_contact(&DoubleIntegrator, &soft, &x, &params());
        assert!((c.penetration - 0.01).abs() < 1e-12);
        assert!((c.force - Vector2::new(-0.05, -1.0)).norm() < 1e-9);
        assert_eq!(c.force, c.torque);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ContactParams::new(0.0, 1.0).is_err());
        assert!(ContactParams::new(1.0, -1.0).is_err());
        assert!(ContactParams::new(1.0, 0.0).is_ok());
    }
}
