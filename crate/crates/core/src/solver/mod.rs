//! Dense LP/QP interface used throughout the crate.
//!
//! Clarabel's interior-point method does the global work; a dense
//! active-set polish step afterwards recovers machine-precision optimizers
//! and a crisp active set, which the parametric-QP enumeration and the
//! geometric certificates rely on.

mod barrier;
mod lp;
mod qp;

pub use barrier::{maximize_log_volume, LogVolumeSolution};
pub use lp::{solve_lp, LpSolution};
pub use qp::{solve_qp, QpProblem, QpSolution};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("solver failed: {0}")]
    Numerical(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Tolerance below which a constraint slack counts as active.
pub(crate) const ACTIVE_TOL: f64 = 1e-7;

/// Feasibility tolerance for polished solutions.
pub(crate) const FEAS_TOL: f64 = 1e-8;

pub(crate) fn clarabel_settings(tol: f64) -> clarabel::solver::DefaultSettings<f64> {
    clarabel::solver::DefaultSettings {
        verbose: false,
        max_iter: 400,
        tol_gap_abs: tol,
        tol_gap_rel: tol,
        tol_feas: tol,
        ..Default::default()
    }
}

/// Run clarabel on `min ½xᵀPx + qᵀx  s.t.  Ax + s = b`, equalities first.
/// Tolerances are retried coarser when the interior point stalls; the
/// active-set polish downstream restores precision.
pub(crate) fn conic_solve(
    p_csc: &clarabel::algebra::CscMatrix<f64>,
    q: &[f64],
    a_csc: &clarabel::algebra::CscMatrix<f64>,
    b: &[f64],
    m_eq: usize,
    m_in: usize,
) -> Result<clarabel::solver::DefaultSolution<f64>, SolverError> {
    use clarabel::solver::{IPSolver, SolverStatus::*};
    let cones = [
        clarabel::solver::SupportedConeT::ZeroConeT(m_eq),
        clarabel::solver::SupportedConeT::NonnegativeConeT(m_in),
    ];
    let mut last_err = SolverError::Numerical("unsolved".into());
    for tol in [1e-10, 1e-8] {
        let mut solver = clarabel::solver::DefaultSolver::new(
            p_csc,
            q,
            a_csc,
            b,
            &cones,
            clarabel_settings(tol),
        );
        solver.solve();
        let sol = solver.solution;
        match sol.status {
            Solved | AlmostSolved => return Ok(sol),
            PrimalInfeasible | AlmostPrimalInfeasible => return Err(SolverError::Infeasible),
            DualInfeasible | AlmostDualInfeasible => return Err(SolverError::Unbounded),
            InsufficientProgress | MaxIterations
                if sol.r_prim.abs() < 1e-6 && sol.r_dual.abs() < 1e-6 =>
            {
                return Ok(sol)
            }
            s => last_err = SolverError::Numerical(format!("{s:?}")),
        }
    }
    Err(last_err)
}

/// Dense matrix to clarabel CSC conversion; exact zeros are dropped.
pub(crate) fn to_csc(m: &nalgebra::DMatrix<f64>) -> clarabel::algebra::CscMatrix<f64> {
    let (rows, cols) = m.shape();
    let mut colptr = Vec::with_capacity(cols + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for j in 0..cols {
        for i in 0..rows {
            let v = m[(i, j)];
            if v != 0.0 {
                rowval.push(i);
                nzval.push(v);
            }
        }
        colptr.push(rowval.len());
    }
    clarabel::algebra::CscMatrix::new(rows, cols, colptr, rowval, nzval)
}
