//! Dynamic safety margins and their composition
//! `Δ = min(Δ_h, max(Δ_s, Δ_E))`.
//!
//! `Δ_h` and `Δ_s` take the infimum of the negated constraint over the
//! predicted trajectory, including its equilibrium limit `x̄_v`. `Δ_E` uses
//! the current energy only, which is valid because `V` cannot increase while
//! `v` is held.

use nalgebra::SVector;

use super::prediction::{predict_with, PredictionTrace};
use super::GovernorParams;
use crate::constraints::ConstraintSet;
use crate::controller::{energy, GainConfig};
use crate::error::Result;
use crate::plant::{PlantModel, State};

/// Raw margins for one `(x, v)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsmBreakdown {
    /// `Δ_h`; the cap `delta_max` for an empty hard set.
    pub hard: f64,
    /// `Δ_s`.
    pub soft: f64,
    /// `Δ_E`.
    pub energy: f64,
    /// `Δ' = max(Δ_s, Δ_E)`: the no-contact OR bounded-energy margin.
    pub compliant: f64,
    /// `Δ = min(Δ_h, Δ')`, unclamped.
    pub raw: f64,
    /// `Δ` clamped to `[0, delta_max]`, as used by the reference update.
    pub applied: f64,
}

impl DsmBreakdown {
    /// True when the energy margin, not the no-contact margin, carries `Δ'`.
    pub fn energy_branch_active(&self) -> bool {
        self.energy >= self.soft
    }
}

pub fn dsm_compose(hard: f64, soft: f64, energy: f64, delta_max: f64) -> DsmBreakdown {
    let compliant = soft.max(energy);
    let raw = hard.min(compliant);
    DsmBreakdown { hard, soft, energy, compliant, raw, applied: raw.clamp(0.0, delta_max) }
}

fn terminal_hard<const N: usize>(
    set: &ConstraintSet<N>,
    model: &dyn PlantModel<N>,
    v: &SVector<f64, N>,
) -> Option<f64> {
    set.hard.iter().map(|h| h.steady_state(model, v)).reduce(f64::max)
}

/// `κ_h inf_τ (-ĥ(τ))`.
pub fn dsm_hard<const N: usize>(
    trace: &PredictionTrace<N>,
    set: &ConstraintSet<N>,
    model: &dyn PlantModel<N>,
    params: &GovernorParams,
) -> f64 {
    if set.hard.is_empty() {
        return params.delta_max;
    }
    let eq = trace.equilibrium(model);
    let worst = trace
        .samples
        .iter()
        .chain(std::iter::once(&eq))
        .filter_map(|s| set.worst_hard(model, &s.x, &s.u))
        .fold(f64::NEG_INFINITY, f64::max);
    -params.kappa_h * worst
}

/// `κ_s inf_τ (-ŝ(τ))`.
pub fn dsm_soft<const N: usize>(
    trace: &PredictionTrace<N>,
    set: &ConstraintSet<N>,
    model: &dyn PlantModel<N>,
    params: &GovernorParams,
) -> f64 {
    let worst = trace
        .samples
        .iter()
        .map(|s| set.soft.eval(model, &s.x.q))
        .fold(set.soft.eval(model, &trace.reference), f64::max);
    -params.kappa_s * worst
}

/// `κ_E (E_max - V(x, v))`.
pub fn dsm_energy<const N: usize>(
    x: &State<N>,
    v: &SVector<f64, N>,
    gains: &GainConfig<N>,
    model: &dyn PlantModel<N>,
    set: &ConstraintSet<N>,
    params: &GovernorParams,
) -> f64 {
    params.kappa_e * (set.e_max - energy(x, v, gains, model))
}

/// Full margin for `(x, v)`, streaming the prediction instead of storing it.
pub fn dynamic_safety_margin<const N: usize>(
    model: &dyn PlantModel<N>,
    gains: &GainConfig<N>,
    set: &ConstraintSet<N>,
    params: &GovernorParams,
    x: &State<N>,
    v: &SVector<f64, N>,
) -> Result<DsmBreakdown> {
    let mut worst_hard = terminal_hard(set, model, v).unwrap_or(f64::NEG_INFINITY);
    let mut worst_soft = set.soft.eval(model, v);
    predict_with(model, gains, params, x, v, |s| {
        if let Some(h) = set.worst_hard(model, &s.x, &s.u) {
            worst_hard = worst_hard.max(h);
        }
        worst_soft = worst_soft.max(set.soft.eval(model, &s.x.q));
    })?;
    let hard = if set.hard.is_empty() { params.delta_max } else { -params.kappa_h * worst_hard };
    Ok(dsm_compose(hard, -params.kappa_s * worst_soft, dsm_energy(x, v, gains, model, set, params), params.delta_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{AffineLimit, SoftConstraint};
    use crate::governor::prediction::{predict, PredictionSample};
    use crate::plant::DoubleIntegrator;
    use nalgebra::Vector2;
    use std::sync::Arc;

    fn wall_set(hard: bool) -> ConstraintSet<2> {
        let hard: Vec<Arc<dyn crate::constraints::HardConstraint<2>>> =
            if hard { vec![Arc::new(AffineLimit::<2>::joint_velocity(0, 2.0).unwrap())] } else { vec![] };
        ConstraintSet::new(hard, SoftConstraint::joint_halfspace(Vector2::new(0.0, 1.0), 1.5).unwrap(), 0.1).unwrap()
    }

    fn synthetic(reference: Vector2<f64>, samples: &[(f64, f64)]) -> PredictionTrace<2> {
        // (q̇₁, q_y) pairs on an otherwise idle trajectory.
        PredictionTrace {
            reference,
            samples: samples
                .iter()
                .enumerate()
                .map(|(k, &(qd1, qy))| PredictionSample {
                    t: k as f64,
                    x: State::new(Vector2::new(0.0, qy), Vector2::new(qd1, 0.0)),
                    u: Vector2::zeros(),
                })
                .collect(),
            settled: false,
        }
    }

    #[test]
    fn hard_margin() {
        let params = GovernorParams::default();
        let v = Vector2::new(0.0, 0.0);
        assert_eq!(dsm_hard(&synthetic(v, &[(0.0, 0.0)]), &wall_set(false), &DoubleIntegrator, &params), 1.0);
        let t = synthetic(v, &[(0.3, 0.0), (1.2, 0.0), (0.1, 0.0)]);
        assert!((dsm_hard(&t, &wall_set(true), &DoubleIntegrator, &params) - 0.8).abs() < 1e-12);
        let t = synthetic(v, &[(0.3, 0.0), (2.3, 0.0)]);
        assert!((dsm_hard(&t, &wall_set(true), &DoubleIntegrator, &params) + 0.3).abs() < 1e-12);
    }

    #[test]
    fn soft_margin() {
        let params = GovernorParams::default();
        let set = wall_set(false);
        let t = synthetic(Vector2::new(0.0, 1.0), &[(0.0, 1.2), (0.0, 1.4), (0.0, 1.3)]);
        assert!((dsm_soft(&t, &set, &DoubleIntegrator, &params) - 0.1).abs() < 1e-12);
        let t = synthetic(Vector2::new(0.0, 1.0), &[(0.0, 1.2), (0.0, 1.52)]);
        assert!((dsm_soft(&t, &set, &DoubleIntegrator, &params) + 0.02).abs() < 1e-12);

        let gains = GainConfig::joint_scalar(6.0, 10.0).unwrap();
        let v = Vector2::new(0.5, 1.5 - 0.25);
        let t = predict(&DoubleIntegrator, &gains, &params, &State::at_rest(v), &v).unwrap();
        assert!((dsm_soft(&t, &set, &DoubleIntegrator, &params) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn soft_margin_sees_the_equilibrium_limit() {
        // A short prediction that has not yet reached a reference inside the
        // wall must still report the violation.
        let params = GovernorParams::default();
        let t = synthetic(Vector2::new(0.0, 1.6), &[(0.0, 1.0), (0.0, 1.1)]);
        assert!((dsm_soft(&t, &wall_set(false), &DoubleIntegrator, &params) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn energy_margin() {
        let params = GovernorParams::default();
        let gains = GainConfig::joint_scalar(6.0, 10.0).unwrap();
        let set = wall_set(false);
        let v = Vector2::new(0.2, 0.3);
        let e = dsm_energy(&State::at_rest(v), &v, &gains, &DoubleIntegrator, &set, &params);
        assert!((e - 0.1).abs() < 1e-15);
        let x = State::new(v, Vector2::new(0.0, 0.1f64.sqrt() * 2f64.sqrt()));
        let e = dsm_energy(&x, &v, &gains, &DoubleIntegrator, &set, &params);
        assert!(e.abs() < 1e-15);
        let x = State::new(v, Vector2::new(0.0, 0.3f64.sqrt()));
        let e = dsm_energy(&x, &v, &gains, &DoubleIntegrator, &set, &params);
        assert!((e + 0.05).abs() < 1e-12);
    }

    #[test]
    fn composition() {
        let b = dsm_compose(0.5, -0.1, 0.04, 1.0);
        assert_eq!(b.raw, 0.04);
        assert!(b.energy_branch_active());
        let b = dsm_compose(0.5, 0.3, -0.2, 1.0);
        assert_eq!(b.raw, 0.3);
        assert!(!b.energy_branch_active());
        let b = dsm_compose(-0.1, 0.3, 0.3, 1.0);
        assert_eq!(b.raw, -0.1);
        assert_eq!(b.applied, 0.0);
        assert_eq!(dsm_compose(1.0, 5.0, 0.0, 1.0).applied, 1.0);
    }

    #[test]
    fn streaming_margin_matches_stored_trace() {
        let params = GovernorParams::default();
        let gains = GainConfig::joint_scalar(6.0, 10.0).unwrap();
        let set = wall_set(true);
        let x = State::new(Vector2::new(0.1, 0.9), Vector2::new(1.0, 0.5));
        let v = Vector2::new(0.6, 1.3);
        let trace = predict(&DoubleIntegrator, &gains, &params, &x, &v).unwrap();
        let b = dynamic_safety_margin(&DoubleIntegrator, &gains, &set, &params, &x, &v).unwrap();
        assert_eq!(b.hard, dsm_hard(&trace, &set, &DoubleIntegrator, &params));
        assert_eq!(b.soft, dsm_soft(&trace, &set, &DoubleIntegrator, &params));
    }
}
