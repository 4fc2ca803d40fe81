//! Fault-tolerant trajectory-tracking model predictive control for
//! thruster-actuated spacecraft.
//!
//! Given a thruster allocation matrix and a set of stuck thrusters, this
//! crate synthesizes a small self-compensating orbit together with
//! stabilizing terminal ingredients (explicit-MPC law, terminal set and
//! terminal cost) offline, then runs the closed-loop nonlinear tracking MPC
//! in simulation and verifies the stability and feasibility properties the
//! design guarantees.
//!
//! The crate is organized along the pipeline:
//!
//! * [`geometry`] — half-space polytope arithmetic and the convex programs
//!   used by the synthesis,
//! * [`model`] — rigid-body spacecraft dynamics, thruster allocation and
//!   fault-induced input sets,
//! * [`orbit`] — the orbit coordinate change, error dynamics and reference
//!   trajectories,
//! * [`terminal`] — offline synthesis of all terminal ingredients,
//! * [`mpc`] — the online SQP tracking controller,
//! * [`sim`] — scenario configuration, closed-loop simulation, logging and
//!   verification suites.

pub mod geometry;
pub mod model;
pub mod mpc;
pub mod orbit;
pub mod sim;
pub mod solver;
pub mod terminal;

pub use geometry::{AxisBox, HPolytope};
pub use model::{BodyWrench, FaultMap, RigidState, SpacecraftParams};
pub use mpc::{MpcConfig, MpcSolution, SolveStatus};
pub use orbit::{OrbitErrorState, OrbitParams, ReferenceTrajectory};
pub use sim::{RunSummary, ScenarioConfig};
pub use terminal::{PwaControlLaw, TerminalIngredients};
