//! Closed-loop trajectory prediction with the reference held constant.
//!
//! The predictor integrates the prestabilized plant without the contact
//! model. Integration stops at the horizon or as soon as the state settles
//! on the controller equilibrium.

use nalgebra::SVector;

use super::GovernorParams;
use crate::controller::{control, equilibrium_error, GainConfig};
use crate::error::Result;
use crate::integrate::rk4_step;
use crate::plant::{PlantModel, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionSample<const N: usize> {
    pub t: f64,
    pub x: State<N>,
    /// Prestabilizer output at `x`.
    pub u: SVector<f64, N>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace<const N: usize> {
    /// The reference held during the prediction.
    pub reference: SVector<f64, N>,
    pub samples: Vec<PredictionSample<N>>,
    /// True if integration stopped early on the equilibrium.
    pub settled: bool,
}

impl<const N: usize> PredictionTrace<N> {
    /// The limit the prediction converges to: `x̄_v = [v; 0]` with `u = g(v)`.
    pub fn equilibrium(&self, model: &dyn PlantModel<N>) -> PredictionSample<N> {
        let v = self.reference;
        PredictionSample { t: f64::INFINITY, x: State::at_rest(v), u: model.gravity_vector(&v) }
    }
}

/// Streams predicted samples to `visit`, starting with `x` itself at `t = 0`.
/// Returns whether the prediction settled before the horizon.
pub fn predict_with<const N: usize, F>(
    model: &dyn PlantModel<N>,
    gains: &GainConfig<N>,
    params: &GovernorParams,
    x: &State<N>,
    v: &SVector<f64, N>,
    mut visit: F,
) -> Result<bool>
where
    F: FnMut(&PredictionSample<N>),
{
    let settled = |s: &State<N>| {
        s.qd.norm() < params.settle_eps_v && equilibrium_error(&s.q, v, gains, model) < params.settle_eps_q
    };
    let closed_loop = |s: &State<N>| {
        let u = control(s, v, gains, model);
        model.dynamics(s, &u, &SVector::zeros())
    };

    let mut state = *x;
    visit(&PredictionSample { t: 0.0, x: state, u: control(&state, v, gains, model) });
    if settled(&state) {
        return Ok(true);
    }
    let steps = (params.t_pred / params.dt_pred).ceil() as usize;
    for k in 1..=steps {
        state = rk4_step(&state, params.dt_pred, closed_loop)?;
        visit(&PredictionSample { t: k as f64 * params.dt_pred, x: state, u: control(&state, v, gains, model) });
        if settled(&state) {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn predict<const N: usize>(
    model: &dyn PlantModel<N>,
    gains: &GainConfig<N>,
    params: &GovernorParams,
    x: &State<N>,
    v: &SVector<f64, N>,
) -> Result<PredictionTrace<N>> {
    let mut samples = Vec::new();
    let settled = predict_with(model, gains, params, x, v, |s| samples.push(*s))?;
    Ok(PredictionTrace { reference: *v, samples, settled })
}
