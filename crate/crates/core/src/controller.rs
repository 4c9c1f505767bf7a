//! Constraint-agnostic prestabilizers and the Lyapunov energy they dissipate.
//!
//! Joint space: `u = -Kp (q - v) - Kd q̇ + g(q)` with
//! `V = ½ q̇ᵀ M q̇ + ½ (q - v)ᵀ Kp (q - v)`.
//!
//! Task space: `u = -kp Jᵀ (f(q) - f(v)) - kd q̇ + g(q)` with
//! `V = ½ q̇ᵀ M q̇ + ½ kp ‖f(q) - f(v)‖²`. The reference `v` stays a joint
//! configuration in both modes.
//!
//! In both cases `V̇ = -q̇ᵀ Kd q̇` along the unforced closed loop.

use nalgebra::{SMatrix, SVector};

use crate::error::{invalid, Result};
use crate::plant::{PlantModel, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    Joint,
    Task,
}

/// Prestabilizer gains.
///
/// `kp`/`kd` are the joint-space matrices. In task mode they hold
/// `task_kp·I` and `task_kd·I`, so the damping matrix is always `kd`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConfig<const N: usize> {
    pub kp: SMatrix<f64, N, N>,
    pub kd: SMatrix<f64, N, N>,
    pub mode: ControlMode,
    pub task_kp: f64,
    pub task_kd: f64,
}

fn check_spd<const N: usize>(name: &str, m: &SMatrix<f64, N, N>) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(invalid(format!("{name} has non-finite entries")));
    }
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * m.abs().max().max(1.0) {
        return Err(invalid(format!("{name} is not symmetric")));
    }
    if m.cholesky().is_none() {
        return Err(invalid(format!("{name} is not positive definite")));
    }
    Ok(())
}

impl<const N: usize> GainConfig<N> {
    pub fn joint(kp: SMatrix<f64, N, N>, kd: SMatrix<f64, N, N>) -> Result<Self> {
        check_spd("Kp", &kp)?;
        check_spd("Kd", &kd)?;
        Ok(Self { kp, kd, mode: ControlMode::Joint, task_kp: 0.0, task_kd: 0.0 })
    }

    /// Scalar gains expanded to `kp·I`, `kd·I`.
    pub fn joint_scalar(kp: f64, kd: f64) -> Result<Self> {
        Self::joint(SMatrix::identity() * kp, SMatrix::identity() * kd)
    }

    pub fn task(kp: f64, kd: f64) -> Result<Self> {
        if !(kp.is_finite() && kp > 0.0 && kd.is_finite() && kd > 0.0) {
            return Err(invalid(format!("task-space gains must be positive, got kp = {kp}, kd = {kd}")));
        }
        Ok(Self {
            kp: SMatrix::identity() * kp,
            kd: SMatrix::identity() * kd,
            mode: ControlMode::Task,
            task_kp: kp,
            task_kd: kd,
        })
    }

    /// Scalar stiffness for the `F_ss = Kp·δ_s` mapping, when one exists.
    pub fn scalar_stiffness(&self) -> Option<f64> {
        match self.mode {
            ControlMode::Task => Some(self.task_kp),
            ControlMode::Joint => {
                let k = self.kp[(0, 0)];
                let off = (self.kp - SMatrix::<f64, N, N>::identity() * k).abs().max();
                (off < 1e-12 * k.abs().max(1.0)).then_some(k)
            }
        }
    }
}

/// Joint-space PD with gravity compensation.
pub fn control_joint<P: PlantModel<N> + ?Sized, const N: usize>(
    x: &State<N>,
    v: &SVector<f64, N>,
    gains: &GainConfig<N>,
    model: &P,
) -> SVector<f64, N> {
    -gains.kp * (x.q - v) - gains.kd * x.qd + model.gravity_vector(&x.q)
}

/// End-effector PD with gravity compensation.
pub fn control_task<P: PlantModel<N> + ?Sized, const N: usize>(
    x: &State<N>,
    v: &SVector<f64, N>,
    gains: &GainConfig<N>,
    model: &P,
) -> SVector<f64, N> {
    let err = model.forward_kinematics(&x.q) - model.forward_kinematics(v);
    -model.jacobian(&x.q).transpose() * err * gains.task_kp - x.qd * gains.task_kd + model.gravity_vector(&x.q)
}

/// Dispatches on [`GainConfig::mode`].
pub fn control<P: PlantModel<N> + ?Sized, const N: usize>(
    x: &State<N>,
    v: &SVector<f64, N>,
    gains: &GainConfig<N>,
    model: &P,
) -> SVector<f64, N> {
    match gains.mode {
        ControlMode::Joint => control_joint(x, v, gains, model),
        ControlMode::Task => control_task(x, v, gains, model),
    }
}

/// Total energy `V(x, v)`: robot kinetic energy plus the controller's virtual
/// spring energy.
pub fn energy<P: PlantModel<N> + ?Sized, const N: usize>(
    x: &State<N>,
    v: &SVector<f64, N>,
    gains: &GainConfig<N>,
    model: &P,
) -> f64 {
    let kinetic = model.kinetic_energy(x);
    let spring = match gains.mode {
        ControlMode::Joint => {
            let e = x.q - v;
            0.5 * e.dot(&(gains.kp * e))
        }
        ControlMode::Task => {
            let e = model.forward_kinematics(&x.q) - model.forward_kinematics(v);
            0.5 * gains.task_kp * e.norm_squared()
        }
    };
    kinetic + spring
}

/// `V̇ = -q̇ᵀ Kd q̇` for the unforced closed loop.
pub fn energy_decay_rate<const N: usize>(x: &State<N>, gains: &GainConfig<N>) -> f64 {
    -x.qd.dot(&(gains.kd * x.qd))
}

/// Distance of `q` from the controller's equilibrium set for reference `v`.
pub fn equilibrium_error<P: PlantModel<N> + ?Sized, const N: usize>(
    q: &SVector<f64, N>,
    v: &SVector<f64, N>,
    gains: &GainConfig<N>,
    model: &P,
) -> f64 {
    match gains.mode {
        ControlMode::Joint => (q - v).norm(),
        ControlMode::Task => (model.forward_kinematics(q) - model.forward_kinematics(v)).norm(),
    }
}
