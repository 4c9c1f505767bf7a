//! Fixed-step classical Runge-Kutta integration of [`State`] trajectories.

use crate::error::{numerical, Result};
use crate::plant::{State, StateDerivative};

fn advance<const N: usize>(x: &State<N>, d: &StateDerivative<N>, h: f64) -> State<N> {
    State { q: x.q + d.qd * h, qd: x.qd + d.qdd * h }
}

/// One RK4 step of `ẋ = f(x)` over `dt`.
///
/// Fails if the derivative evaluation fails or the new state is not finite.
pub fn rk4_step<const N: usize, F>(x: &State<N>, dt: f64, mut f: F) -> Result<State<N>>
where
    F: FnMut(&State<N>) -> Result<StateDerivative<N>>,
{
    let k1 = f(x)?;
    let k2 = f(&advance(x, &k1, 0.5 * dt))?;
    let k3 = f(&advance(x, &k2, 0.5 * dt))?;
    let k4 = f(&advance(x, &k3, dt))?;
    let next = State {
        q: x.q + (k1.qd + (k2.qd + k3.qd) * 2.0 + k4.qd) * (dt / 6.0),
        qd: x.qd + (k1.qdd + (k2.qdd + k3.qdd) * 2.0 + k4.qdd) * (dt / 6.0),
    };
    if !next.is_finite() {
        return Err(numerical(format!(
            "non-finite state after integration step from q = {:?}, qd = {:?}",
            x.q.as_slice(),
            x.qd.as_slice()
        )));
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector1;

    #[test]
    fn harmonic_oscillator_is_fourth_order_accurate() {
        // q̈ = -q from q = 1: q(t) = cos t.
        let f = |x: &State<1>| Ok(StateDerivative { qd: x.qd, qdd: -x.q });
        let mut errors = Vec::new();
        for dt in [0.1, 0.05] {
            let mut x = State::at_rest(Vector1::new(1.0));
            let steps = (1.0 / dt) as usize;
            for _ in 0..steps {
                x = rk4_step(&x, dt, f).unwrap();
            }
            errors.push((x.q[0] - 1f64.cos()).abs());
        }
        let order = (errors[0] / errors[1]).log2();
        assert!(order > 3.8, "observed order {order}");
    }

    #[test]
    fn non_finite_state_is_reported() {
        let f = |x: &State<1>| Ok(StateDerivative { qd: x.qd, qdd: Vector1::new(f64::INFINITY) });
        let err = rk4_step(&State::at_rest(Vector1::new(0.0)), 0.1, f).unwrap_err();
        assert!(matches!(err, crate::CergError::NumericalFailure(_)));
    }
}
