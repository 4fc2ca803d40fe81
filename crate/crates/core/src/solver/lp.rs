//! Linear programs `max cᵀx  s.t.  A x ≤ b,  E x = f`.

use nalgebra::{DMatrix, DVector};

use super::{to_csc, SolverError, ACTIVE_TOL, FEAS_TOL};

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub value: f64,
    /// Indices of inequality rows active at the optimum.
    pub active: Vec<usize>,
}

/// Solve `max cᵀx  s.t.  a x ≤ b` (and optionally `e x = f`).
///
/// The interior-point solution is polished by projecting onto the active
/// face, which recovers the exact optimal value up to linear-algebra
/// precision for non-degenerate faces.
pub fn solve_lp(
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    eq: Option<(&DMatrix<f64>, &DVector<f64>)>,
) -> Result<LpSolution, SolverError> {
    let n = c.len();
    if a.ncols() != n {
        return Err(SolverError::Dimension(format!(
            "lp: A has {} cols, c has {}",
            a.ncols(),
            n
        )));
    }
    let m_in = a.nrows();
    let (m_eq, e_mat, f_vec) = match eq {
        Some((e, f)) => (e.nrows(), e.clone_owned(), f.clone_owned()),
        None => (0, DMatrix::zeros(0, n), DVector::zeros(0)),
    };

    // clarabel minimizes; stack equalities first (zero cone), then inequalities.
    let mut big_a = DMatrix::zeros(m_eq + m_in, n);
    big_a.rows_mut(0, m_eq).copy_from(&e_mat);
    big_a.rows_mut(m_eq, m_in).copy_from(a);
    let mut big_b = DVector::zeros(m_eq + m_in);
    big_b.rows_mut(0, m_eq).copy_from(&f_vec);
    big_b.rows_mut(m_eq, m_in).copy_from(b);

    let p_csc = to_csc(&DMatrix::zeros(n, n));
    let a_csc = to_csc(&big_a);
    let q: Vec<f64> = (-c).iter().cloned().collect();
    let solution = super::conic_solve(&p_csc, &q, &a_csc, big_b.as_slice(), m_eq, m_in)?;

    let mut x = DVector::from_column_slice(&solution.x);

    // Active set from slacks and multipliers of the inequality block.
    let scale = 1.0 + b.amax();
    let mut active: Vec<usize> = (0..m_in)
        .filter(|&i| {
            let slack = solution.s[m_eq + i];
            let dual = solution.z[m_eq + i];
            slack.abs() < ACTIVE_TOL * scale && dual > 1e-9
        })
        .collect();
    // Fall back to slack-only detection when duals are tiny everywhere.
    if active.is_empty() {
        active = (0..m_in)
            .filter(|&i| solution.s[m_eq + i].abs() < ACTIVE_TOL * scale)
            .collect();
    }

    // Polish: least-squares projection of x onto the active face.
    let n_act = m_eq + active.len();
    if n_act > 0 {
        let mut g = DMatrix::zeros(n_act, n);
        let mut h = DVector::zeros(n_act);
        g.rows_mut(0, m_eq).copy_from(&e_mat);
        h.rows_mut(0, m_eq).copy_from(&f_vec);
        for (k, &i) in active.iter().enumerate() {
            g.row_mut(m_eq + k).copy_from(&a.row(i));
            h[m_eq + k] = b[i];
        }
        // x_p = x + Gᵀ (G Gᵀ)⁻¹ (h - G x), via SVD for rank safety.
        let resid = &h - &g * &x;
        let gt = g.transpose();
        let gram = &g * &gt;
        if let Some(corr) = gram.clone().svd(true, true).solve(&resid, 1e-12).ok() {
            let x_p = &x + &gt * corr;
            // Accept the polish only if it stays feasible.
            let feas_in = (a * &x_p - b).max() <= FEAS_TOL * scale;
            let feas_eq = m_eq == 0 || (&e_mat * &x_p - &f_vec).abs().max() <= FEAS_TOL * scale;
            if feas_in && feas_eq {
                x = x_p;
            }
        }
    }

    let value = c.dot(&x);
    Ok(LpSolution { x, value, active })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn box_support() {
        // max x+y over [0,1]^2 -> 2 at (1,1)
        let c = DVector::from_vec(vec![1.0, 1.0]);
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]);
        let sol = solve_lp(&c, &a, &b, None).unwrap();
        assert_relative_eq!(sol.value, 2.0, epsilon = 1e-10);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // x <= -1 and -x <= 0 (x >= 0)
        let c = DVector::from_vec(vec![1.0]);
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![-1.0, 0.0]);
        assert!(matches!(
            solve_lp(&c, &a, &b, None),
            Err(SolverError::Infeasible)
        ));
    }

    #[test]
    fn unbounded_detected() {
        let c = DVector::from_vec(vec![1.0]);
        let a = DMatrix::from_row_slice(1, 1, &[-1.0]);
        let b = DVector::from_vec(vec![0.0]);
        assert!(matches!(
            solve_lp(&c, &a, &b, None),
            Err(SolverError::Unbounded)
        ));
    }

    #[test]
    fn equality_constrained() {
        // max x subject to x + y = 1, x,y >= 0 -> x = 1
        let c = DVector::from_vec(vec![1.0, 0.0]);
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let b = DVector::zeros(2);
        let e = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let f = DVector::from_vec(vec![1.0]);
        let sol = solve_lp(&c, &a, &b, Some((&e, &f))).unwrap();
        assert_relative_eq!(sol.value, 1.0, epsilon = 1e-10);
    }
}
