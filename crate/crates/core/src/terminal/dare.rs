//! Discrete algebraic Riccati equation and the maximal constraint-admissible
//! invariant set, the textbook terminal ingredients of the inner eMPC.

use nalgebra::{DMatrix, DVector};

use super::TerminalError;
use crate::geometry::HPolytope;
use crate::solver::solve_lp;

/// Fixed-point DARE iteration. Returns (P, K) with `u = K x` stabilizing.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>), TerminalError> {
    let mut p = q.clone();
    for _ in 0..20_000 {
        let rbpb = r + b.transpose() * &p * b;
        let rbpb_inv = rbpb
            .try_inverse()
            .ok_or_else(|| TerminalError::Numerical("DARE: R + BᵀPB singular".into()))?;
        let next =
            q + a.transpose() * &p * a - a.transpose() * &p * b * &rbpb_inv * b.transpose() * &p * a;
        let diff = (&next - &p).amax();
        p = next;
        if diff < 1e-13 * (1.0 + p.amax()) {
            let rbpb = r + b.transpose() * &p * b;
            let k = -(rbpb
                .try_inverse()
                .ok_or_else(|| TerminalError::Numerical("DARE gain".into()))?)
                * b.transpose()
                * &p
                * a;
            return Ok((p, k));
        }
    }
    Err(TerminalError::Numerical("DARE did not converge".into()))
}

/// Maximal constraint-admissible invariant set for `x⁺ = A_cl x` under the
/// polytopic constraint `C x ≤ d` (Gilbert–Tan determination). A large box
/// is folded into `C` by the caller to guarantee boundedness.
pub fn max_admissible_invariant_set(
    a_cl: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DVector<f64>,
) -> Result<HPolytope, TerminalError> {
    let mut rows = c.clone();
    let mut offs = d.clone();
    let mut c_t = c.clone();
    for _ in 0..500 {
        c_t = &c_t * a_cl;
        // Does any propagated row cut the current set?
        let current = HPolytope::new(rows.clone(), offs.clone())
            .map_err(|e| TerminalError::Numerical(e.to_string()))?;
        let mut added = false;
        let mut new_rows = Vec::new();
        for i in 0..c_t.nrows() {
            let dir = c_t.row(i).transpose();
            if dir.norm() < 1e-14 {
                continue;
            }
            match solve_lp(&dir, current.a(), current.b(), None) {
                Ok(sol) if sol.value <= d[i] + 1e-10 => {}
                Ok(_) => {
                    new_rows.push(i);
                    added = true;
                }
                Err(_) => {
                    return Err(TerminalError::Numerical(
                        "invariant set determination failed".into(),
                    ))
                }
            }
        }
        if !added {
            return Ok(current.reduce());
        }
        let base = rows.nrows();
        rows = rows.insert_rows(base, new_rows.len(), 0.0);
        offs = offs.insert_rows(base, new_rows.len(), 0.0);
        for (k, &i) in new_rows.iter().enumerate() {
            for j in 0..c.ncols() {
                rows[(base + k, j)] = c_t[(i, j)];
            }
            offs[base + k] = d[i];
        }
    }
    Err(TerminalError::Numerical(
        "invariant set did not terminate in 500 steps".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn double_integrator(delta: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, delta, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, delta]);
        (a, b)
    }

    #[test]
    fn dare_stabilizes_double_integrator() {
        let (a, b) = double_integrator(0.1);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::from_element(1, 1, 0.1);
        let (p, k) = solve_dare(&a, &b, &q, &r).unwrap();
        // Riccati residual
        let acl = &a + &b * &k;
        let res = acl.transpose() * &p * &acl - &p + &q + k.transpose() * &r * &k;
        assert_relative_eq!(res.amax(), 0.0, epsilon = 1e-9);
        // closed-loop spectral radius < 1
        let eig = acl.complex_eigenvalues();
        assert!(eig.iter().all(|l| l.norm() < 1.0));
    }

    #[test]
    fn invariant_set_is_invariant_and_admissible() {
        let (a, b) = double_integrator(0.1);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::from_element(1, 1, 0.1);
        let (_, k) = solve_dare(&a, &b, &q, &r).unwrap();
        let a_cl = &a + &b * &k;
        // constraints: |K x| <= 1, |x_i| <= 100
        let mut c = DMatrix::zeros(6, 2);
        let mut d = DVector::zeros(6);
        c.row_mut(0).copy_from(&k.row(0));
        d[0] = 1.0;
        c.row_mut(1).copy_from(&(-k.row(0)));
        d[1] = 1.0;
        for i in 0..2 {
            c[(2 + 2 * i, i)] = 1.0;
            d[2 + 2 * i] = 100.0;
            c[(3 + 2 * i, i)] = -1.0;
            d[3 + 2 * i] = 100.0;
        }
        let inv = max_admissible_invariant_set(&a_cl, &c, &d).unwrap();
        // Sample points: image stays inside, input admissible.
        let bb = inv.bounding_box().unwrap();
        let mut rng_state = 7u64;
        let mut inside = 0;
        for _ in 0..500 {
            let x = DVector::from_fn(2, |i, _| {
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let t = (rng_state >> 11) as f64 / (1u64 << 53) as f64;
                bb.lower()[i] + t * (bb.upper()[i] - bb.lower()[i])
            });
            if inv.contains(&x) {
                inside += 1;
                let xn = &a_cl * &x;
                assert!(inv.contains(&xn), "successor escaped");
                assert!((&k * &x).amax() <= 1.0 + 1e-8, "input violated");
            }
        }
        assert!(inside > 20, "sampling never hit the set");
    }
}
