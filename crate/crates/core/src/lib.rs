//! Compliant explicit reference governor (C-ERG).
//!
//! A safety filter that sits between a planner and a prestabilizing
//! controller. It integrates the applied reference `v` as
//! `v̇ = Δ(x, v) ρ(v, r)` so that the robot either stays out of contact with a
//! soft surface or touches it with total energy below `E_max`, while hard
//! state/input constraints hold at all times.
//!
//! The crate is organised bottom-up:
//!
//! - [`plant`]: Euler-Lagrange models (2D double integrator, RR planar arm).
//! - [`controller`]: PD + gravity prestabilizers and their Lyapunov energy.
//! - [`contact`]: unidirectional spring-damper surface model.
//! - [`constraints`]: hard and soft constraint sets.
//! - [`governor`]: prediction, dynamic safety margins, navigation field and
//!   the reference update.
//! - [`sim`]: deterministic closed-loop simulation, phase detection, metrics.

pub mod constraints;
pub mod contact;
pub mod controller;
pub mod error;
pub mod governor;
pub mod integrate;
pub mod plant;
pub mod sim;

pub use constraints::{
    AffineLimit, ConstraintSet, ConstraintSpace, Halfspace, HardConstraint, SoftConstraint, Surface, TaskHalfspace,
};
pub use contact::ContactParams;
pub use controller::{ControlMode, GainConfig};
pub use error::{CergError, Result};
pub use governor::{DsmBreakdown, GovernorParams, PredictionTrace};
pub use plant::{DoubleIntegrator, PlantModel, RrArm, State, StateDerivative};
pub use sim::{Phase, PhaseEvent, RunOutcome, Scenario, TraceLog, TraceRecord};
