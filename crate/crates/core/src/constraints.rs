//! Hard state/input constraints `h(q, q̇, u) ≤ 0`, the soft contact surface
//! `s(q) ≤ 0`, and the compliant residual that joins them with the energy
//! bound.
//!
//! Sign convention throughout: negative is admissible, positive is violation
//! (for `s`, penetration).

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{SVector, Vector2};

use crate::error::{invalid, Result};
use crate::plant::{PlantModel, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintSpace {
    /// Evaluated directly on the joint vector `q`.
    Joint,
    /// Evaluated on the end-effector position `f(q)`.
    Task,
}

/// Scalar function over a `D`-dimensional space, positive on the violating
/// side.
pub trait Surface<const D: usize>: Debug + Send + Sync {
    fn eval(&self, p: &SVector<f64, D>) -> f64;

    fn gradient(&self, p: &SVector<f64, D>) -> SVector<f64, D>;

    fn as_halfspace(&self) -> Option<&Halfspace<D>> {
        None
    }
}

/// `nᵀp - offset ≤ 0` with `‖n‖ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace<const D: usize> {
    normal: SVector<f64, D>,
    offset: f64,
}

impl<const D: usize> Halfspace<D> {
    /// The normal is rescaled to unit length (together with the offset), so
    /// `eval` is a signed distance.
    pub fn new(normal: SVector<f64, D>, offset: f64) -> Result<Self> {
        let norm = normal.norm();
        if !(norm.is_finite() && norm > 0.0 && offset.is_finite()) {
            return Err(invalid(format!(
                "halfspace needs a finite non-zero normal and finite offset, got {:?}, {offset}",
                normal.as_slice()
            )));
        }
        Ok(Self { normal: normal / norm, offset: offset / norm })
    }

    pub fn normal(&self) -> &SVector<f64, D> {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Closest point to `p` in `{x : nᵀx - offset ≤ depth}`.
    pub fn project(&self, p: &SVector<f64, D>, depth: f64) -> SVector<f64, D> {
        let excess = self.eval(p) - depth;
        if excess > 0.0 {
            p - self.normal * excess
        } else {
            *p
        }
    }
}

impl<const D: usize> Surface<D> for Halfspace<D> {
    fn eval(&self, p: &SVector<f64, D>) -> f64 {
        self.normal.dot(p) - self.offset
    }

    fn gradient(&self, _p: &SVector<f64, D>) -> SVector<f64, D> {
        self.normal
    }

    fn as_halfspace(&self) -> Option<&Halfspace<D>> {
        Some(self)
    }
}

/// The surface the robot may touch with bounded energy.
#[derive(Debug, Clone)]
pub enum SoftConstraint<const N: usize> {
    Joint(Arc<dyn Surface<N>>),
    Task(Arc<dyn Surface<2>>),
}

impl<const N: usize> SoftConstraint<N> {
    pub fn joint_halfspace(normal: SVector<f64, N>, offset: f64) -> Result<Self> {
        Ok(Self::Joint(Arc::new(Halfspace::new(normal, offset)?)))
    }

    pub fn task_halfspace(normal: Vector2<f64>, offset: f64) -> Result<Self> {
        Ok(Self::Task(Arc::new(Halfspace::new(normal, offset)?)))
    }

    pub fn space(&self) -> ConstraintSpace {
        match self {
            Self::Joint(_) => ConstraintSpace::Joint,
            Self::Task(_) => ConstraintSpace::Task,
        }
    }

    /// `s(q)`, or `s(f(q))` for task-space surfaces.
    pub fn eval(&self, model: &dyn PlantModel<N>, q: &SVector<f64, N>) -> f64 {
        match self {
            Self::Joint(surface) => surface.eval(q),
            Self::Task(surface) => surface.eval(&model.forward_kinematics(q)),
        }
    }

    /// `∂s/∂q`.
    pub fn gradient(&self, model: &dyn PlantModel<N>, q: &SVector<f64, N>) -> SVector<f64, N> {
        match self {
            Self::Joint(surface) => surface.gradient(q),
            Self::Task(surface) => model.jacobian(q).transpose() * surface.gradient(&model.forward_kinematics(q)),
        }
    }
}

/// A hard constraint on state and input.
pub trait HardConstraint<const N: usize>: Debug + Send + Sync {
    fn eval(&self, model: &dyn PlantModel<N>, q: &SVector<f64, N>, qd: &SVector<f64, N>, u: &SVector<f64, N>) -> f64;

    /// `h_ss(v) = h(v, 0, g(v))`.
    fn steady_state(&self, model: &dyn PlantModel<N>, v: &SVector<f64, N>) -> f64 {
        self.eval(model, v, &SVector::zeros(), &model.gravity_vector(v))
    }

    /// `∂h_ss/∂v`, by central differences unless overridden.
    fn steady_state_gradient(&self, model: &dyn PlantModel<N>, v: &SVector<f64, N>) -> SVector<f64, N> {
        let h = 1e-6;
        SVector::from_fn(|i, _| {
            let mut plus = *v;
            let mut minus = *v;
            plus[i] += h;
            minus[i] -= h;
            (self.steady_state(model, &plus) - self.steady_state(model, &minus)) / (2.0 * h)
        })
    }
}

/// `a_qᵀq + a_q̇ᵀq̇ + a_uᵀu ≤ bound`, or `|…| ≤ bound` when symmetric.
///
/// Covers joint range, joint velocity and actuator limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineLimit<const N: usize> {
    pub q_coef: SVector<f64, N>,
    pub qd_coef: SVector<f64, N>,
    pub u_coef: SVector<f64, N>,
    pub bound: f64,
    pub symmetric: bool,
}

impl<const N: usize> AffineLimit<N> {
    fn unit(index: usize) -> Result<SVector<f64, N>> {
        if index >= N {
            return Err(invalid(format!("constraint index {index} out of range for {N} joints")));
        }
        let mut e = SVector::zeros();
        e[index] = 1.0;
        Ok(e)
    }

    /// `|q_i| ≤ limit`.
    pub fn joint_position(index: usize, limit: f64) -> Result<Self> {
        Ok(Self { q_coef: Self::unit(index)?, ..Self::zero(limit, true) })
    }

    /// `|q̇_i| ≤ limit`.
    pub fn joint_velocity(index: usize, limit: f64) -> Result<Self> {
        Ok(Self { qd_coef: Self::unit(index)?, ..Self::zero(limit, true) })
    }

    /// `|u_i| ≤ limit`.
    pub fn input(index: usize, limit: f64) -> Result<Self> {
        Ok(Self { u_coef: Self::unit(index)?, ..Self::zero(limit, true) })
    }

    fn zero(bound: f64, symmetric: bool) -> Self {
        Self { q_coef: SVector::zeros(), qd_coef: SVector::zeros(), u_coef: SVector::zeros(), bound, symmetric }
    }
}

impl<const N: usize> HardConstraint<N> for AffineLimit<N> {
    fn eval(&self, _model: &dyn PlantModel<N>, q: &SVector<f64, N>, qd: &SVector<f64, N>, u: &SVector<f64, N>) -> f64 {
        let lin = self.q_coef.dot(q) + self.qd_coef.dot(qd) + self.u_coef.dot(u);
        if self.symmetric {
            lin.abs() - self.bound
        } else {
            lin - self.bound
        }
    }
}

/// End-effector surface the robot must never reach: `nᵀf(q) - offset ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskHalfspace(pub Halfspace<2>);

impl<const N: usize> HardConstraint<N> for TaskHalfspace {
    fn eval(&self, model: &dyn PlantModel<N>, q: &SVector<f64, N>, _qd: &SVector<f64, N>, _u: &SVector<f64, N>) -> f64 {
        self.0.eval(&model.forward_kinematics(q))
    }

    fn steady_state_gradient(&self, model: &dyn PlantModel<N>, v: &SVector<f64, N>) -> SVector<f64, N> {
        model.jacobian(v).transpose() * self.0.normal()
    }
}

/// Hard constraints, the soft surface, and the contact energy bound `E_max`.
#[derive(Debug, Clone)]
pub struct ConstraintSet<const N: usize> {
    pub hard: Vec<Arc<dyn HardConstraint<N>>>,
    pub soft: SoftConstraint<N>,
    pub e_max: f64,
}

impl<const N: usize> ConstraintSet<N> {
    pub fn new(hard: Vec<Arc<dyn HardConstraint<N>>>, soft: SoftConstraint<N>, e_max: f64) -> Result<Self> {
        if !(e_max.is_finite() && e_max > 0.0) {
            return Err(invalid(format!("e_max must be positive, got {e_max}")));
        }
        Ok(Self { hard, soft, e_max })
    }

    /// Largest hard-constraint value, `None` for an empty hard set.
    pub fn worst_hard(&self, model: &dyn PlantModel<N>, x: &State<N>, u: &SVector<f64, N>) -> Option<f64> {
        self.hard.iter().map(|h| h.eval(model, &x.q, &x.qd, u)).reduce(f64::max)
    }
}

/// One value per hard constraint; all `≤ 0` means satisfied.
pub fn eval_hard<const N: usize>(
    set: &ConstraintSet<N>,
    model: &dyn PlantModel<N>,
    x: &State<N>,
    u: &SVector<f64, N>,
) -> Vec<f64> {
    set.hard.iter().map(|h| h.eval(model, &x.q, &x.qd, u)).collect()
}

pub fn eval_soft<const N: usize>(set: &ConstraintSet<N>, model: &dyn PlantModel<N>, q: &SVector<f64, N>) -> f64 {
    set.soft.eval(model, q)
}

/// `[h(q, q̇, u); min(s(q), V - E_max)]`, with `energy = V(x, v)` supplied by
/// the caller.
pub fn compliant_residual<const N: usize>(
    set: &ConstraintSet<N>,
    model: &dyn PlantModel<N>,
    x: &State<N>,
    u: &SVector<f64, N>,
    energy: f64,
) -> Vec<f64> {
    let mut out = eval_hard(set, model, x, u);
    out.push(set.soft.eval(model, &x.q).min(energy - set.e_max));
    out
}
