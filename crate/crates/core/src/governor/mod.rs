//! The compliant reference governor.
//!
//! Each tick computes the dynamic safety margin `Δ(x, v)` and the navigation
//! field `ρ(v, r)` and advances the applied reference by
//! `v ← v + dt_gov · clamp(Δ, 0, Δ_max) · ρ`. Between ticks `v` is held.

mod dsm;
mod field;
mod prediction;

use nalgebra::SVector;

use crate::constraints::{ConstraintSet, SoftConstraint};
use crate::controller::GainConfig;
use crate::error::{invalid, Result};
use crate::plant::{PlantModel, State};

pub use dsm::{dsm_compose, dsm_energy, dsm_hard, dsm_soft, dynamic_safety_margin, DsmBreakdown};
pub use field::{nav_attraction, nav_field, nav_hard_repulsion, nav_soft_repulsion, soft_interior_direction};
pub use prediction::{predict, predict_with, PredictionSample, PredictionTrace};

/// Governor tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorParams {
    /// Attraction smoothing radius `η`.
    pub eta: f64,
    /// Hard-repulsion influence margin `ζ`.
    pub zeta: f64,
    /// Hard-repulsion saturation margin `δ_h < ζ`.
    pub delta_h: f64,
    /// Maximum reference penetration into the soft surface `δ_s` (m).
    pub delta_s: f64,
    pub kappa_h: f64,
    pub kappa_s: f64,
    pub kappa_e: f64,
    /// Prediction horizon (s).
    pub t_pred: f64,
    /// Prediction step (s).
    pub dt_pred: f64,
    /// Governor tick (s).
    pub dt_gov: f64,
    /// Cap on the applied margin.
    pub delta_max: f64,
    pub settle_eps_q: f64,
    pub settle_eps_v: f64,
}

impl Default for GovernorParams {
    fn default() -> Self {
        Self {
            eta: 0.1,
            zeta: 0.2,
            delta_h: 0.05,
            delta_s: 0.1,
            kappa_h: 1.0,
            kappa_s: 1.0,
            kappa_e: 1.0,
            t_pred: 5.0,
            dt_pred: 1e-3,
            dt_gov: 1e-2,
            delta_max: 1.0,
            settle_eps_q: 1e-6,
            settle_eps_v: 1e-6,
        }
    }
}

impl GovernorParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("eta", self.eta),
            ("zeta", self.zeta),
            ("delta_h", self.delta_h),
            ("delta_s", self.delta_s),
            ("kappa_h", self.kappa_h),
            ("kappa_s", self.kappa_s),
            ("kappa_e", self.kappa_e),
            ("t_pred", self.t_pred),
            ("dt_pred", self.dt_pred),
            ("dt_gov", self.dt_gov),
            ("delta_max", self.delta_max),
            ("settle_eps_q", self.settle_eps_q),
            ("settle_eps_v", self.settle_eps_v),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(format!("governor.{name} must be positive, got {value}")));
            }
        }
        if self.zeta <= self.delta_h {
            return Err(invalid(format!(
                "hard repulsion margins must satisfy zeta > delta_h > 0, got zeta = {}, delta_h = {}",
                self.zeta, self.delta_h
            )));
        }
        if self.dt_pred > self.dt_gov {
            return Err(invalid(format!("dt_pred ({}) must not exceed dt_gov ({})", self.dt_pred, self.dt_gov)));
        }
        Ok(())
    }
}

/// Result of one governor tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GovernorUpdate<const N: usize> {
    pub reference: SVector<f64, N>,
    pub margin: DsmBreakdown,
    pub field: SVector<f64, N>,
}

pub fn governor_step<const N: usize>(
    model: &dyn PlantModel<N>,
    gains: &GainConfig<N>,
    set: &ConstraintSet<N>,
    params: &GovernorParams,
    x: &State<N>,
    v: &SVector<f64, N>,
    r: &SVector<f64, N>,
) -> Result<GovernorUpdate<N>> {
    let margin = dynamic_safety_margin(model, gains, set, params, x, v)?;
    let field = nav_field(model, set, v, r, params)?;
    let reference = if margin.applied > 0.0 { v + field * (params.dt_gov * margin.applied) } else { *v };
    Ok(GovernorUpdate { reference, margin, field })
}

/// Reference penetration needed for a steady contact force, and the spring
/// energy it stores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceMapping {
    /// `δ_s = F_ss / Kp`.
    pub delta_s: f64,
    /// `E_ss = ½ Kp δ_s²`.
    pub e_ss: f64,
}

impl ForceMapping {
    /// Whether the steady contact fits under the energy bound.
    pub fn admissible(&self, e_max: f64) -> bool {
        self.e_ss < e_max
    }
}

pub fn penetration_for_force(f_ss: f64, kp: f64) -> Result<ForceMapping> {
    if !(f_ss.is_finite() && f_ss > 0.0) {
        return Err(invalid(format!("steady-state force must be positive, got {f_ss}")));
    }
    if !(kp.is_finite() && kp > 0.0) {
        return Err(invalid(format!("stiffness must be positive, got {kp}")));
    }
    let delta_s = f_ss / kp;
    Ok(ForceMapping { delta_s, e_ss: 0.5 * kp * delta_s * delta_s })
}

/// Limit point of the governed reference for a joint-space halfspace soft
/// constraint: the projection of `r` onto `{v : s(v) ≤ δ_s}`.
pub fn steady_state_target<const N: usize>(
    r: &SVector<f64, N>,
    set: &ConstraintSet<N>,
    params: &GovernorParams,
) -> Result<SVector<f64, N>> {
    match &set.soft {
        SoftConstraint::Joint(surface) => match surface.as_halfspace() {
            Some(halfspace) => Ok(halfspace.project(r, params.delta_s)),
            None => Err(invalid("steady-state target needs a halfspace soft constraint")),
        },
        SoftConstraint::Task(_) => {
            Err(invalid("steady-state target has no closed form for task-space soft constraints"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::DoubleIntegrator;
    use nalgebra::Vector2;

    fn di_set() -> ConstraintSet<2> {
        ConstraintSet::new(vec![], SoftConstraint::joint_halfspace(Vector2::new(0.0, 1.0), 1.5).unwrap(), 0.1).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(GovernorParams::default().validate().is_ok());
        let p = GovernorParams { zeta: 0.05, delta_h: 0.05, ..Default::default() };
        assert!(p.validate().unwrap_err().to_string().contains("zeta > delta_h"));
        let p = GovernorParams { dt_pred: 0.1, ..Default::default() };
        assert!(p.validate().is_err());
        let p = GovernorParams { kappa_e: 0.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn force_mapping() {
        let m = penetration_for_force(1.0, 6.0).unwrap();
        assert!((m.delta_s - 1.0 / 6.0).abs() < 1e-15);
        assert!((m.e_ss - 0.083).abs() < 5e-4);
        assert!(m.admissible(0.1));
        assert!((penetration_for_force(0.6, 6.0).unwrap().delta_s - 0.1).abs() < 1e-15);
        assert!(penetration_for_force(0.0, 6.0).is_err());
        assert!(penetration_for_force(-1.0, 6.0).is_err());
    }

    #[test]
    fn projection_target() {
        let p = GovernorParams { delta_s: 1.0 / 6.0, ..Default::default() };
        let set = di_set();
        let t = steady_state_target(&Vector2::new(0.5, 1.8), &set, &p).unwrap();
        assert!((t - Vector2::new(0.5, 1.5 + 1.0 / 6.0)).norm() < 1e-15);
        let inside = Vector2::new(0.2, 1.0);
        assert_eq!(steady_state_target(&inside, &set, &p).unwrap(), inside);
        let boundary = Vector2::new(0.2, 1.5 + 1.0 / 6.0);
        assert!((steady_state_target(&boundary, &set, &p).unwrap() - boundary).norm() < 1e-15);
        let task =
            ConstraintSet::<2>::new(vec![], SoftConstraint::task_halfspace(Vector2::new(1.0, 0.0), 1.0).unwrap(), 0.1)
                .unwrap();
        assert!(steady_state_target(&inside, &task, &p).is_err());
    }

    #[test]
    fn frozen_when_margin_not_positive() {
        let gains = GainConfig::joint_scalar(6.0, 10.0).unwrap();
        let p = GovernorParams { delta_s: 1.0 / 6.0, ..Default::default() };
        let set = di_set();
        // Moving fast toward the wall with far too much energy: Δ < 0.
        let x = State::new(Vector2::new(0.5, 1.45), Vector2::new(0.0, 2.0));
        let v = Vector2::new(0.5, 1.45);
        let up = governor_step(&DoubleIntegrator, &gains, &set, &p, &x, &v, &Vector2::new(0.5, 1.8)).unwrap();
        assert!(up.margin.raw < 0.0);
        assert_eq!(up.reference, v);
    }

    #[test]
    fn at_target_nothing_moves() {
        let gains = GainConfig::joint_scalar(6.0, 10.0).unwrap();
        let p = GovernorParams::default();
        let v = Vector2::new(0.5, 0.5);
        let up = governor_step(&DoubleIntegrator, &gains, &di_set(), &p, &State::at_rest(v), &v, &v).unwrap();
        assert_eq!(up.reference, v);
        assert!(up.margin.applied > 0.0);
    }
}
