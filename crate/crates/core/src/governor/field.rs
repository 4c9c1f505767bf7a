//! Navigation field `ρ(v, r) = ρ_att + ρ_h + ρ_s` over reference space.

use nalgebra::{SMatrix, SVector};

use super::GovernorParams;
use crate::constraints::{ConstraintSet, SoftConstraint};
use crate::error::{numerical, Result};
use crate::plant::PlantModel;

/// `(r - v) / max(‖r - v‖, η)`; unit length outside the `η` ball.
pub fn nav_attraction<const N: usize>(v: &SVector<f64, N>, r: &SVector<f64, N>, eta: f64) -> SVector<f64, N> {
    let d = r - v;
    d / d.norm().max(eta)
}

/// Sum over hard constraints of
/// `max((ζ + h_ss(v)) / (ζ - δ_h), 0) · (-∇h_ss / ‖∇h_ss‖)`.
pub fn nav_hard_repulsion<const N: usize>(
    model: &dyn PlantModel<N>,
    set: &ConstraintSet<N>,
    v: &SVector<f64, N>,
    params: &GovernorParams,
) -> Result<SVector<f64, N>> {
    let mut field = SVector::zeros();
    for constraint in &set.hard {
        let h_ss = constraint.steady_state(model, v);
        let gain = ((params.zeta + h_ss) / (params.zeta - params.delta_h)).max(0.0);
        if gain == 0.0 {
            continue;
        }
        let grad = constraint.steady_state_gradient(model, v);
        let norm = grad.norm();
        if norm.is_nan() || norm <= 1e-12 {
            return Err(numerical(format!(
                "hard constraint {constraint:?} has zero steady-state gradient at v = {:?}",
                v.as_slice()
            )));
        }
        field -= grad * (gain / norm);
    }
    Ok(field)
}

/// Right pseudoinverse `Jᵀ (J Jᵀ)⁻¹` of a full-row-rank task Jacobian.
fn jacobian_pinv<const N: usize>(model: &dyn PlantModel<N>, v: &SVector<f64, N>) -> Result<SMatrix<f64, N, 2>> {
    let jac = model.jacobian(v);
    let gram = jac * jac.transpose();
    let smallest = gram.symmetric_eigenvalues().min();
    let inv = if smallest > 1e-10 { gram.try_inverse() } else { None };
    match inv {
        Some(inv) => Ok(jac.transpose() * inv),
        None => Err(numerical(format!(
            "task Jacobian is singular at v = {:?} (smallest singular value² = {smallest:e})",
            v.as_slice()
        ))),
    }
}

/// Unit vector in joint space pointing toward the admissible side of the
/// soft surface.
///
/// Joint-space surfaces use `-∇s`; task-space surfaces map the surface
/// normal through the Jacobian pseudoinverse, `-J†(v) n`.
pub fn soft_interior_direction<const N: usize>(
    model: &dyn PlantModel<N>,
    soft: &SoftConstraint<N>,
    v: &SVector<f64, N>,
) -> Result<SVector<f64, N>> {
    let dir = match soft {
        SoftConstraint::Joint(surface) => -surface.gradient(v),
        SoftConstraint::Task(surface) => {
            let n = surface.gradient(&model.forward_kinematics(v));
            -(jacobian_pinv(model, v)? * n)
        }
    };
    let norm = dir.norm();
    if norm.is_nan() || norm <= 1e-12 {
        return Err(numerical(format!("soft constraint has no interior direction at v = {:?}", v.as_slice())));
    }
    Ok(dir / norm)
}

/// `max(s(v) / δ_s, 0) · ρ̂_s(v)`. Zero whenever `v` is outside the surface.
pub fn nav_soft_repulsion<const N: usize>(
    model: &dyn PlantModel<N>,
    set: &ConstraintSet<N>,
    v: &SVector<f64, N>,
    params: &GovernorParams,
) -> Result<SVector<f64, N>> {
    let depth = set.soft.eval(model, v);
    if depth <= 0.0 {
        return Ok(SVector::zeros());
    }
    Ok(soft_interior_direction(model, &set.soft, v)? * (depth / params.delta_s))
}

pub fn nav_field<const N: usize>(
    model: &dyn PlantModel<N>,
    set: &ConstraintSet<N>,
    v: &SVector<f64, N>,
    r: &SVector<f64, N>,
    params: &GovernorParams,
) -> Result<SVector<f64, N>> {
    Ok(nav_attraction(v, r, params.eta)
        + nav_hard_repulsion(model, set, v, params)?
        + nav_soft_repulsion(model, set, v, params)?)
}
