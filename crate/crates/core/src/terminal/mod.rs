//! Offline synthesis of the terminal ingredients: explicit MPC law,
//! terminal set, terminal controller and terminal cost.

mod costs;
mod dare;
mod mpqp;
mod synthesis;

pub use costs::{certified_poly_max, interpolate_poly, lyapunov_p, PolyTable, ThetaTables};
pub use dare::{max_admissible_invariant_set, solve_dare};
pub use mpqp::{build_empc_qp, CriticalRegion, MpQp, OnlineSolution, PwaControlLaw};
pub use synthesis::{
    axis_mpqp, compute_f_max, drift_norm_table, feasible_slice_measure, lqr_baseline_law,
    synthesize, ShrinkForm, SynthesisConfig, TerminalIngredients, TerminalKind,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TerminalError {
    #[error("no interior input margin: {0}")]
    NoInteriorMargin(String),
    #[error("degenerate active set")]
    DegenerateActiveSet,
    #[error("critical-region cap exceeded ({0} regions)")]
    HorizonTooLarge(usize),
    #[error("angular-rate gain is not contracting: {0}")]
    UnstableK(String),
    #[error("state outside the eMPC feasible set")]
    OutsideFeasibleSet,
    #[error("state outside the terminal set")]
    OutsideTerminalSet,
    #[error("numerical failure: {0}")]
    Numerical(String),
}
