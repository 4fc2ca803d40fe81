//! Log-barrier Newton method for the weighted log-volume program
//! `max Σᵢ wᵢ log(xᵢ)  s.t.  C x ≤ d,  x > 0`.
//!
//! The problems are tiny (a handful of variables), so a dense central-path
//! method reaches machine-accurate KKT points in microseconds.

use nalgebra::{DMatrix, DVector};

use super::SolverError;

#[derive(Debug, Clone)]
pub struct LogVolumeSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
}

pub fn maximize_log_volume(
    w: &DVector<f64>,
    c: &DMatrix<f64>,
    d: &DVector<f64>,
) -> Result<LogVolumeSolution, SolverError> {
    let n = w.len();
    let m = c.nrows();
    if c.ncols() != n || d.len() != m {
        return Err(SolverError::Dimension("log-volume: shape mismatch".into()));
    }
    if w.min() <= 0.0 {
        return Err(SolverError::Dimension("log-volume: weights must be > 0".into()));
    }

    // Strictly feasible start by shrinking a positive point toward zero.
    let ones = DVector::from_element(n, 1.0);
    let mut alpha = 1.0;
    let mut x = loop {
        let cand = &ones * alpha;
        let slack_ok = m == 0 || (d - c * &cand).min() > 0.0;
        if slack_ok {
            break cand;
        }
        alpha *= 0.25;
        if alpha < 1e-14 {
            return Err(SolverError::Infeasible);
        }
    };

    let mut t = 1.0;
    let t_max = 1e10;
    let mut last_grad_norm = f64::INFINITY;
    // Finite precision puts a floor on the scaled residual that grows with
    // t (the slacks shrink like 1/t), so the best iterate along the sweep
    // is kept rather than the last.
    let mut best_x = x.clone();
    let mut best_res = f64::INFINITY;
    loop {
        // Newton minimization of  -t Σ w log x - Σ log(d - Cx).
        // The stopping rule is the t-scaled stationarity ‖∇f_t‖/t, which is
        // exactly the KKT residual reported to the caller; a raw Newton
        // decrement test would accept huge gradients along the stiff
        // near-boundary directions once t is large.
        for _ in 0..200 {
            let slack = d - c * &x;
            let inv_s = slack.map(|s| 1.0 / s);
            let mut grad = DVector::zeros(n);
            for i in 0..n {
                grad[i] = -t * w[i] / x[i];
            }
            grad += c.transpose() * &inv_s;
            last_grad_norm = grad.abs().max();
            if last_grad_norm / t < 1e-11 {
                break;
            }

            let mut hess = DMatrix::zeros(n, n);
            for i in 0..n {
                hess[(i, i)] = t * w[i] / (x[i] * x[i]);
            }
            for r in 0..m {
                let cr = c.row(r);
                let s2 = inv_s[r] * inv_s[r];
                for i in 0..n {
                    for j in 0..n {
                        hess[(i, j)] += cr[i] * cr[j] * s2;
                    }
                }
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => return Err(SolverError::Numerical("log-volume hessian".into())),
            };
            let decrement = -grad.dot(&step);
            if !decrement.is_finite() || decrement <= 0.0 {
                break;
            }
            // Backtrack to stay strictly inside x > 0 and Cx < d.
            let f_old = barrier_value(t, w, c, d, &x);
            let mut s = 1.0;
            let mut stepped = false;
            while s >= 1e-16 {
                let cand = &x + &step * s;
                let ok = cand.min() > 0.0 && (m == 0 || (d - c * &cand).min() > 0.0);
                if ok && barrier_value(t, w, c, d, &cand) <= f_old - 0.25 * s * decrement {
                    x = cand;
                    stepped = true;
                    break;
                }
                s *= 0.5;
            }
            if !stepped {
                break;
            }
        }
        // At the central point the barrier multipliers λᵢ = 1/(t sᵢ) satisfy
        // stationarity up to ‖∇f_t‖/t; complementarity is m/t by construction.
        let res = last_grad_norm / t + (m as f64) / t;
        if res < best_res {
            best_res = res;
            best_x = x.clone();
        }
        if t >= t_max {
            break;
        }
        t = (t * 10.0).min(t_max);
    }
    let x = best_x;
    let kkt_residual = best_res;

    let objective = w.iter().zip(x.iter()).map(|(wi, xi)| wi * xi.ln()).sum();
    Ok(LogVolumeSolution {
        x,
        objective,
        kkt_residual,
    })
}

fn barrier_value(
    t: f64,
    w: &DVector<f64>,
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    x: &DVector<f64>,
) -> f64 {
    let mut v = 0.0;
    for i in 0..w.len() {
        v -= t * w[i] * x[i].ln();
    }
    let slack = d - c * x;
    for s in slack.iter() {
        v -= s.ln();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_kkt() {
        // max log x s.t. x <= 2  ->  x = 2... but the boundary is barred;
        // with the constraint x + y <= 1 and weights (1,1) the optimum is
        // x = y = 1/2 by symmetry/KKT.
        let w = DVector::from_vec(vec![1.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let d = DVector::from_vec(vec![1.0]);
        let sol = maximize_log_volume(&w, &c, &d).unwrap();
        assert_relative_eq!(sol.x[0], 0.5, epsilon = 1e-7);
        assert_relative_eq!(sol.x[1], 0.5, epsilon = 1e-7);
        assert!(sol.kkt_residual < 1e-6);
    }

    #[test]
    fn weighted_kkt() {
        // max 3 log u + log e  s.t.  u + e <= 4  ->  u = 3, e = 1.
        let w = DVector::from_vec(vec![3.0, 1.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let d = DVector::from_vec(vec![4.0]);
        let sol = maximize_log_volume(&w, &c, &d).unwrap();
        assert_relative_eq!(sol.x[0], 3.0, epsilon = 1e-6);
        assert_relative_eq!(sol.x[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn infeasible_when_no_margin() {
        let w = DVector::from_vec(vec![1.0]);
        let c = DMatrix::from_row_slice(1, 1, &[1.0]);
        let d = DVector::from_vec(vec![-0.5]);
        assert!(matches!(
            maximize_log_volume(&w, &c, &d),
            Err(SolverError::Infeasible)
        ));
    }
}
