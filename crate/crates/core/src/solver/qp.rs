//! Strictly convex quadratic programs
//! `min ½xᵀPx + qᵀx  s.t.  A x ≤ b,  E x = f`.

use nalgebra::{DMatrix, DVector};

use super::{to_csc, SolverError, ACTIVE_TOL, FEAS_TOL};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub e: DMatrix<f64>,
    pub f: DVector<f64>,
}

impl QpProblem {
    pub fn new(p: DMatrix<f64>, q: DVector<f64>) -> Self {
        let n = q.len();
        QpProblem {
            p,
            q,
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            e: DMatrix::zeros(0, n),
            f: DVector::zeros(0),
        }
    }

    pub fn with_ineq(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn with_eq(mut self, e: DMatrix<f64>, f: DVector<f64>) -> Self {
        self.e = e;
        self.f = f;
        self
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub value: f64,
    /// Active inequality rows at the optimum (after polish).
    pub active: Vec<usize>,
    /// Multipliers of the inequality rows (zero on inactive rows).
    pub lambda: DVector<f64>,
}

/// Solve the QP; the interior-point solution seeds a dense active-set
/// refinement that terminates on exact KKT residuals.
pub fn solve_qp(prob: &QpProblem) -> Result<QpSolution, SolverError> {
    let n = prob.q.len();
    let m_eq = prob.e.nrows();
    let m_in = prob.a.nrows();
    if prob.p.shape() != (n, n) || prob.a.ncols() != n && m_in > 0 {
        return Err(SolverError::Dimension("qp: inconsistent shapes".into()));
    }

    let mut big_a = DMatrix::zeros(m_eq + m_in, n);
    if m_eq > 0 {
        big_a.rows_mut(0, m_eq).copy_from(&prob.e);
    }
    if m_in > 0 {
        big_a.rows_mut(m_eq, m_in).copy_from(&prob.a);
    }
    let mut big_b = DVector::zeros(m_eq + m_in);
    big_b.rows_mut(0, m_eq).copy_from(&prob.f);
    big_b.rows_mut(m_eq, m_in).copy_from(&prob.b);

    let p_csc = to_csc(&upper_triangle(&prob.p));
    let a_csc = to_csc(&big_a);
    let q: Vec<f64> = prob.q.iter().cloned().collect();
    let solution = super::conic_solve(&p_csc, &q, &a_csc, big_b.as_slice(), m_eq, m_in)?;

    let x_ip = DVector::from_column_slice(&solution.x);
    let scale = 1.0 + prob.b.amax().max(prob.q.amax());
    let seed: Vec<usize> = (0..m_in)
        .filter(|&i| solution.s[m_eq + i].abs() < ACTIVE_TOL * scale)
        .collect();

    match polish(prob, seed, scale) {
        Some(sol) => Ok(sol),
        None => {
            // Keep the interior-point answer when the refinement stalls.
            let value = 0.5 * (&x_ip).dot(&(&prob.p * &x_ip)) + prob.q.dot(&x_ip);
            let lambda =
                DVector::from_iterator(m_in, (0..m_in).map(|i| solution.z[m_eq + i].max(0.0)));
            let active: Vec<usize> = (0..m_in)
                .filter(|&i| solution.s[m_eq + i].abs() < ACTIVE_TOL * scale)
                .collect();
            Ok(QpSolution {
                x: x_ip,
                value,
                active,
                lambda,
            })
        }
    }
}

/// Active-set refinement: repeatedly solves the equality-constrained KKT
/// system for the working set, adding violated rows and dropping rows with
/// negative multipliers. Ties are broken by lowest row index.
fn polish(prob: &QpProblem, seed: Vec<usize>, scale: f64) -> Option<QpSolution> {
    let n = prob.q.len();
    let m_eq = prob.e.nrows();
    let m_in = prob.a.nrows();
    let mut work: Vec<usize> = seed;
    work.sort_unstable();
    work.dedup();

    for _ in 0..100 {
        let k = m_eq + work.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&prob.p);
        let mut rhs = DVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&prob.q));
        for r in 0..m_eq {
            for c in 0..n {
                kkt[(n + r, c)] = prob.e[(r, c)];
                kkt[(c, n + r)] = prob.e[(r, c)];
            }
            rhs[n + r] = prob.f[r];
        }
        for (j, &i) in work.iter().enumerate() {
            for c in 0..n {
                kkt[(n + m_eq + j, c)] = prob.a[(i, c)];
                kkt[(c, n + m_eq + j)] = prob.a[(i, c)];
            }
            rhs[n + m_eq + j] = prob.b[i];
        }
        let sol = kkt.svd(true, true).solve(&rhs, 1e-13).ok()?;
        let x = sol.rows(0, n).clone_owned();
        let mult = sol.rows(n + m_eq, work.len()).clone_owned();

        // Most negative multiplier leaves the working set.
        let mut drop_idx = None;
        let mut most_neg = -1e-9;
        for (j, &l) in mult.iter().enumerate() {
            if l < most_neg {
                most_neg = l;
                drop_idx = Some(j);
            }
        }
        if let Some(j) = drop_idx {
            work.remove(j);
            continue;
        }

        // Most violated inactive row enters.
        let mut add_idx = None;
        let mut worst = FEAS_TOL * scale;
        for i in 0..m_in {
            if work.contains(&i) {
                continue;
            }
            let viol = prob.a.row(i).dot(&x.transpose()) - prob.b[i];
            if viol > worst {
                worst = viol;
                add_idx = Some(i);
            }
        }
        if let Some(i) = add_idx {
            work.push(i);
            work.sort_unstable();
            continue;
        }

        let value = 0.5 * x.dot(&(&prob.p * &x)) + prob.q.dot(&x);
        let mut lambda = DVector::zeros(m_in);
        for (j, &i) in work.iter().enumerate() {
            lambda[i] = mult[j];
        }
        return Some(QpSolution {
            x,
            value,
            active: work,
            lambda,
        });
    }
    None
}

fn upper_triangle(p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let mut u = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            u[(i, j)] = 0.5 * (p[(i, j)] + p[(j, i)]);
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unconstrained_min() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let q = DVector::from_vec(vec![-2.0, -4.0]);
        let sol = solve_qp(&QpProblem::new(p, q)).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(sol.x[1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn active_box_constraint() {
        // min ½‖x - (2,0)‖² s.t. x ≤ 1 elementwise
        let p = DMatrix::identity(2, 2);
        let q = DVector::from_vec(vec![-2.0, 0.0]);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let sol = solve_qp(&QpProblem::new(p, q).with_ineq(a, b)).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(sol.x[1], 0.0, epsilon = 1e-10);
        assert_eq!(sol.active, vec![0]);
        assert!(sol.lambda[0] > 0.9);
    }

    #[test]
    fn equality_and_inequality() {
        // min ½‖x‖² s.t. x0 + x1 = 1, x0 >= 0.8
        let p = DMatrix::identity(2, 2);
        let q = DVector::zeros(2);
        let e = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let f = DVector::from_vec(vec![1.0]);
        let a = DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]);
        let b = DVector::from_vec(vec![-0.8]);
        let sol = solve_qp(&QpProblem::new(p, q).with_eq(e, f).with_ineq(a, b)).unwrap();
        assert_relative_eq!(sol.x[0], 0.8, epsilon = 1e-10);
        assert_relative_eq!(sol.x[1], 0.2, epsilon = 1e-10);
    }

    #[test]
    fn infeasible_qp() {
        let p = DMatrix::identity(1, 1);
        let q = DVector::zeros(1);
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![-1.0, 0.0]);
        assert!(matches!(
            solve_qp(&QpProblem::new(p, q).with_ineq(a, b)),
            Err(SolverError::Infeasible)
        ));
    }
}
