//! Hypervolume maximization of a ball-times-box product inside a polytope.
//!
//! Chooses the largest `𝒰̌ × (-Kℰ)` (a force-space ball of radius
//! `u_hat_max` times the image of a symmetric angular-rate box) that fits
//! inside the row-wise shrunk input set. The program is the smooth concave
//! log-volume maximization; a dense barrier Newton method solves it.

use nalgebra::{DMatrix, DVector};

use super::{GeometryError, HPolytope};
use crate::solver::{maximize_log_volume, SolverError};

#[derive(Debug, Clone)]
pub struct BoxBallProduct {
    /// Radius of the ball in the leading (force) block.
    pub u_hat_max: f64,
    /// Half-widths of the angular-rate box ℰ.
    pub e_max: DVector<f64>,
    /// Attained log-volume objective `n_f·log(û) + Σ log(2 κ_m e_max,m)`.
    pub objective: f64,
    pub kkt_residual: f64,
}

/// Solve for fixed per-row shrink. `mu` must be normalized; its space splits
/// into `n_force` leading coordinates (ball) and the rest (box through `K`).
pub fn maximize_box_ball_product(
    mu: &HPolytope,
    k_diag: &DVector<f64>,
    shrink: &DVector<f64>,
    n_force: usize,
) -> Result<BoxBallProduct, GeometryError> {
    let dim = mu.dim();
    let n_rate = dim - n_force;
    if k_diag.len() != n_rate {
        return Err(GeometryError::DimMismatch(
            "K size vs rate block".to_string(),
        ));
    }
    if shrink.len() != mu.num_rows() {
        return Err(GeometryError::DimMismatch("shrink length".to_string()));
    }
    if k_diag.iter().any(|&k| k <= 0.0) {
        return Err(GeometryError::Numerical("K must be positive".to_string()));
    }
    let p = mu.normalized();

    // One linear row per half-space: the box support over the vertices of ℰ
    // collapses to the absolute-value sum since e_max ≥ 0.
    let m = p.num_rows();
    let mut rows: Vec<usize> = Vec::new();
    for i in 0..m {
        let rhs = p.b()[i] - shrink[i];
        let coef_u = p.a().row(i).columns(0, n_force).norm();
        let coef_e: f64 = (0..n_rate)
            .map(|j| p.a()[(i, n_force + j)].abs() * k_diag[j])
            .sum();
        if coef_u + coef_e < 1e-14 {
            if rhs < -1e-12 {
                return Err(GeometryError::Infeasible(
                    "shrink exceeds constant row".to_string(),
                ));
            }
            continue;
        }
        if rhs <= 0.0 {
            return Err(GeometryError::Infeasible(format!(
                "row {i} leaves no margin (rhs {rhs:.3e})"
            )));
        }
        rows.push(i);
    }

    let n_var = 1 + n_rate;
    let mut c = DMatrix::zeros(rows.len(), n_var);
    let mut d = DVector::zeros(rows.len());
    for (r, &i) in rows.iter().enumerate() {
        c[(r, 0)] = p.a().row(i).columns(0, n_force).norm();
        for j in 0..n_rate {
            c[(r, 1 + j)] = p.a()[(i, n_force + j)].abs() * k_diag[j];
        }
        d[r] = p.b()[i] - shrink[i];
    }
    let mut w = DVector::from_element(n_var, 1.0);
    w[0] = n_force as f64;

    let sol = maximize_log_volume(&w, &c, &d).map_err(|e| match e {
        SolverError::Infeasible => {
            GeometryError::Infeasible("no interior margin left".to_string())
        }
        other => GeometryError::Numerical(other.to_string()),
    })?;

    let u_hat_max = sol.x[0];
    let e_max = sol.x.rows(1, n_rate).clone_owned();
    let objective = (n_force as f64) * u_hat_max.ln()
        + (0..n_rate)
            .map(|j| (2.0 * k_diag[j] * e_max[j]).ln())
            .sum::<f64>();
    Ok(BoxBallProduct {
        u_hat_max,
        e_max,
        objective,
        kkt_residual: sol.kkt_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::AxisBox;
    use approx::assert_relative_eq;

    /// Symmetric box, no shrink, K = I: per-axis KKT by hand gives
    /// u + e = b with 3·(1/u) balancing 1·(1/e) per binding row.
    #[test]
    fn kkt_oracle_symmetric() {
        // MU = [-4,4]⁴ with force block dim 3 and one rate coordinate.
        let bx = AxisBox::symmetric(nalgebra::dvector![4.0, 4.0, 4.0, 4.0]).unwrap();
        let p = bx.to_polytope();
        let k = nalgebra::dvector![1.0];
        let shrink = DVector::zeros(p.num_rows());
        let sol = maximize_box_ball_product(&p, &k, &shrink, 3).unwrap();
        // Rows couple u and e separately here (box rows have one nonzero),
        // so u hits its own bound and e its own: u = 4, e = 4.
        assert_relative_eq!(sol.u_hat_max, 4.0, epsilon = 1e-5);
        assert_relative_eq!(sol.e_max[0], 4.0, epsilon = 1e-5);
        assert!(sol.kkt_residual < 1e-6);
    }

    /// A coupling row forces the 3log(u)+log(e) trade-off: max at u=3e.
    #[test]
    fn kkt_oracle_coupled() {
        // Single row  u-dir + e-dir:  x_f[0] + x_e ≤ 4 after normalization.
        let a = DMatrix::from_row_slice(5, 2, &[
            1.0, 1.0, // coupling row; normalization rescales row and offset alike
            -1.0, 0.0, 0.0, -1.0, // positivity helpers (inactive)
            1.0, 0.0, 0.0, 1.0, // loose individual caps
        ]);
        let b = nalgebra::dvector![4.0, 10.0, 10.0, 10.0, 10.0];
        let p = HPolytope::new(a, b).unwrap();
        let k = nalgebra::dvector![1.0];
        let shrink = DVector::zeros(p.num_rows());
        let sol = maximize_box_ball_product(&p, &k, &shrink, 1).unwrap();
        // max log(u) + log(e) s.t. u + e = 4 → u = e = 2.
        assert_relative_eq!(sol.u_hat_max, 2.0, epsilon = 1e-4);
        assert_relative_eq!(sol.e_max[0], 2.0, epsilon = 1e-4);
    }

    #[test]
    fn full_shrink_infeasible() {
        let bx = AxisBox::symmetric(nalgebra::dvector![1.0, 1.0]).unwrap();
        let p = bx.to_polytope();
        let k = nalgebra::dvector![1.0];
        let shrink = DVector::from_element(p.num_rows(), 1.0);
        assert!(matches!(
            maximize_box_ball_product(&p, &k, &shrink, 1),
            Err(GeometryError::Infeasible(_))
        ));
    }

    /// Larger shrink never yields a larger optimum.
    #[test]
    fn shrink_monotonicity() {
        let bx = AxisBox::symmetric(nalgebra::dvector![3.0, 3.0, 2.0, 1.0]).unwrap();
        let p = bx.to_polytope();
        let k = nalgebra::dvector![0.5];
        let mut last = f64::INFINITY;
        for s in [0.0, 0.2, 0.5, 0.8] {
            let shrink = DVector::from_element(p.num_rows(), s);
            let sol = maximize_box_ball_product(&p, &k, &shrink, 3).unwrap();
            assert!(sol.objective <= last + 1e-9);
            last = sol.objective;
        }
    }
}
