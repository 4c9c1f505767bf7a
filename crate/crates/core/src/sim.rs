//! Deterministic closed-loop simulation: plant + prestabilizer + contact +
//! governor, integrated with fixed-step RK4.

use std::fmt;
use std::str::FromStr;

use nalgebra::{SVector, Vector2};

use crate::constraints::ConstraintSet;
use crate::contact::{soft_contact, ContactParams};
use crate::controller::{control, energy, GainConfig};
use crate::error::{invalid, CergError, Result};
use crate::governor::{dynamic_safety_margin, governor_step, DsmBreakdown, GovernorParams};
use crate::integrate::rk4_step;
use crate::plant::{PlantModel, State};

/// Minimum time a new phase label must persist before it counts as a phase
/// change.
pub const DEFAULT_PHASE_DWELL: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct Scenario<P, const N: usize> {
    pub plant: P,
    pub gains: GainConfig<N>,
    pub constraints: ConstraintSet<N>,
    pub contact: ContactParams,
    pub governor: GovernorParams,
    /// When false, `v ≡ r` from `t = 0` (ungoverned baseline).
    pub governor_enabled: bool,
    pub initial_state: State<N>,
    pub reference: SVector<f64, N>,
    pub duration: f64,
    pub dt: f64,
}

impl<P: PlantModel<N>, const N: usize> Scenario<P, N> {
    pub fn validate(&self) -> Result<()> {
        self.governor.validate()?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("sim dt must be positive, got {}", self.dt)));
        }
        if self.dt > self.governor.dt_gov {
            return Err(invalid(format!(
                "sim dt ({}) must not exceed the governor tick ({})",
                self.dt, self.governor.dt_gov
            )));
        }
        let ratio = self.governor.dt_gov / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio {
            return Err(invalid(format!(
                "governor tick ({}) must be an integer multiple of sim dt ({})",
                self.governor.dt_gov, self.dt
            )));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(invalid(format!("duration must be non-negative, got {}", self.duration)));
        }
        if !self.initial_state.is_finite() || !self.reference.iter().all(|v| v.is_finite()) {
            return Err(invalid("initial state and reference must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    FreeMotion,
    ApproachingContact,
    Contact,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::FreeMotion => "free-motion",
            Phase::ApproachingContact => "approaching-contact",
            Phase::Contact => "contact",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = CergError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free-motion" => Ok(Phase::FreeMotion),
            "approaching-contact" => Ok(Phase::ApproachingContact),
            "contact" => Ok(Phase::Contact),
            other => Err(invalid(format!("unknown phase label {other:?}"))),
        }
    }
}

/// Operating regime at one instant.
///
/// Contact when `s ≥ 0`. Otherwise the robot is approaching contact once the
/// energy margin carries the OR constraint and `V ≤ E_max` holds, and is in
/// free motion while the no-contact margin does (so `V > E_max` is allowed).
pub fn classify_phase(soft: f64, energy: f64, margin: &DsmBreakdown, e_max: f64) -> Phase {
    if soft >= 0.0 {
        Phase::Contact
    } else if energy <= e_max && margin.energy_branch_active() {
        Phase::ApproachingContact
    } else {
        Phase::FreeMotion
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEvent {
    pub phase: Phase,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord<const N: usize> {
    pub t: f64,
    pub q: SVector<f64, N>,
    pub qd: SVector<f64, N>,
    pub v: SVector<f64, N>,
    pub u: SVector<f64, N>,
    /// `V(x, v)`.
    pub energy: f64,
    /// `s(q)`.
    pub soft: f64,
    /// Raw margins from the latest governor tick.
    pub margin: DsmBreakdown,
    pub force: Vector2<f64>,
    pub phase: Phase,
}

/// One record per simulation step, uniformly spaced by `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog<const N: usize> {
    pub dt: f64,
    pub records: Vec<TraceRecord<N>>,
}

impl<const N: usize> TraceLog<N> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord<N>> {
        self.records.last()
    }

    pub fn peak_force(&self) -> f64 {
        self.records.iter().map(|r| r.force.norm()).fold(0.0, f64::max)
    }

    /// Time of the first record with `s ≥ 0`.
    pub fn first_contact_time(&self) -> Option<f64> {
        self.records.iter().find(|r| r.soft >= 0.0).map(|r| r.t)
    }

    /// Records where `min(s, V - E_max)` exceeds `tol`.
    pub fn or_violations(&self, e_max: f64, tol: f64) -> usize {
        self.records.iter().filter(|r| r.soft.min(r.energy - e_max) > tol).count()
    }

    /// Largest value of `min(s, V - E_max)` over the trace.
    pub fn worst_or_residual(&self, e_max: f64) -> f64 {
        self.records.iter().map(|r| r.soft.min(r.energy - e_max)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A finished (or aborted) run. `error` is set when integration failed; the
/// trace then holds every record up to the failure.
#[derive(Debug, Clone)]
pub struct RunOutcome<const N: usize> {
    pub trace: TraceLog<N>,
    pub error: Option<CergError>,
}

/// Simulates the scenario. Only validation errors are returned as `Err`;
/// numerical failures mid-run end the trace early and are reported in
/// [`RunOutcome::error`].
pub fn run_closed_loop<P: PlantModel<N>, const N: usize>(scenario: &Scenario<P, N>) -> Result<RunOutcome<N>> {
    scenario.validate()?;
    let model: &dyn PlantModel<N> = &scenario.plant;
    let Scenario { gains, constraints: set, contact, governor: params, reference: r, dt, .. } = scenario;
    let dt = *dt;
    let steps = (scenario.duration / dt).round() as usize;
    let tick = (params.dt_gov / dt).round() as usize;

    let mut x = scenario.initial_state;
    let mut v = if scenario.governor_enabled { x.q } else { *r };
    let mut margin = dsm_nan();
    let mut records = Vec::with_capacity(steps + 1);
    let mut error = None;

    for k in 0..=steps {
        if k % tick == 0 {
            let update = if scenario.governor_enabled {
                governor_step(model, gains, set, params, &x, &v, r).map(|up| {
                    v = up.reference;
                    up.margin
                })
            } else {
                dynamic_safety_margin(model, gains, set, params, &x, &v)
            };
            match update {
                Ok(m) => margin = m,
                Err(e) => {
                    error = Some(e);
                    break;
                }
            }
        }

        let u = control(&x, &v, gains, model);
        let c = soft_contact(model, &set.soft, &x, contact);
        let e = energy(&x, &v, gains, model);
        records.push(TraceRecord {
            t: k as f64 * dt,
            q: x.q,
            qd: x.qd,
            v,
            u,
            energy: e,
            soft: c.penetration,
            margin,
            force: c.force,
            phase: classify_phase(c.penetration, e, &margin, set.e_max),
        });
        if k == steps {
            break;
        }

        let closed_loop = |s: &State<N>| {
            let u = control(s, &v, gains, model);
            let c = soft_contact(model, &set.soft, s, contact);
            model.dynamics(s, &u, &c.torque)
        };
        match rk4_step(&x, dt, closed_loop) {
            Ok(next) => x = next,
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }

    Ok(RunOutcome { trace: TraceLog { dt, records }, error })
}

fn dsm_nan() -> DsmBreakdown {
    DsmBreakdown { hard: f64::NAN, soft: f64::NAN, energy: f64::NAN, compliant: f64::NAN, raw: f64::NAN, applied: 0.0 }
}

/// Phase changes along a trace. A new label must persist for `dwell`
/// seconds to count; short excursions are absorbed by the current phase.
pub fn detect_phases_with_dwell<const N: usize>(
    trace: &TraceLog<N>,
    set: &ConstraintSet<N>,
    dwell: f64,
) -> Vec<PhaseEvent> {
    let label = |r: &TraceRecord<N>| classify_phase(r.soft, r.energy, &r.margin, set.e_max);
    let Some(first) = trace.records.first() else {
        return Vec::new();
    };
    let mut current = label(first);
    let mut events = vec![PhaseEvent { phase: current, t: first.t }];
    let mut candidate: Option<PhaseEvent> = None;
    for rec in &trace.records[1..] {
        let phase = label(rec);
        if phase == current {
            candidate = None;
            continue;
        }
        match candidate {
            Some(c) if c.phase == phase => {
                if rec.t - c.t >= dwell - 1e-12 {
                    events.push(c);
                    current = phase;
                    candidate = None;
                }
            }
            _ => candidate = Some(PhaseEvent { phase, t: rec.t }),
        }
    }
    events
}

pub fn detect_phases<const N: usize>(trace: &TraceLog<N>, set: &ConstraintSet<N>) -> Vec<PhaseEvent> {
    detect_phases_with_dwell(trace, set, DEFAULT_PHASE_DWELL)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateMetrics<const N: usize> {
    pub v_final: SVector<f64, N>,
    pub q_final: SVector<f64, N>,
    /// Mean contact force magnitude over the window.
    pub force_mean: f64,
    /// Mean `V(x, v)` over the window.
    pub energy_mean: f64,
}

/// Averages over the trailing `window` seconds.
pub fn steady_state_metrics<const N: usize>(trace: &TraceLog<N>, window: f64) -> Result<SteadyStateMetrics<N>> {
    let (Some(first), Some(last)) = (trace.records.first(), trace.records.last()) else {
        return Err(invalid("empty trace"));
    };
    if window.is_nan() || window <= 0.0 || last.t - first.t < window {
        return Err(invalid(format!(
            "trace spans {} s, shorter than the {window} s averaging window",
            last.t - first.t
        )));
    }
    let tail: Vec<_> = trace.records.iter().filter(|r| r.t >= last.t - window - 1e-12).collect();
    let n = tail.len() as f64;
    Ok(SteadyStateMetrics {
        v_final: last.v,
        q_final: last.q,
        force_mean: tail.iter().map(|r| r.force.norm()).sum::<f64>() / n,
        energy_mean: tail.iter().map(|r| r.energy).sum::<f64>() / n,
    })
}
