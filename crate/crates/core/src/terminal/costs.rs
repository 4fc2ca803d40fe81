//! Terminal-cost machinery: exact polynomial tables for the drift norms,
//! the geometric-series coefficient sums, the diagonal Lyapunov solution
//! and the certified drift-norm maximization.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::TerminalError;
use crate::geometry::AxisBox;

/// Dense tensor-product polynomial with per-variable degree ≤ `deg`.
/// Coefficient of the monomial Π xₘ^{ιₘ} sits at index Σ ιₘ (deg+1)^m.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyTable {
    pub n_vars: usize,
    pub deg: usize,
    pub coeffs: Vec<f64>,
}

impl PolyTable {
    pub fn n_terms(&self) -> usize {
        (self.deg + 1).pow(self.n_vars as u32)
    }

    pub fn exponents(&self, idx: usize) -> Vec<usize> {
        let mut e = Vec::with_capacity(self.n_vars);
        let mut r = idx;
        for _ in 0..self.n_vars {
            e.push(r % (self.deg + 1));
            r /= self.deg + 1;
        }
        e
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            acc += c * self.monomial(idx, x);
        }
        acc
    }

    pub fn monomial(&self, idx: usize, x: &DVector<f64>) -> f64 {
        let mut m = 1.0;
        let mut r = idx;
        for v in 0..self.n_vars {
            let p = r % (self.deg + 1);
            r /= self.deg + 1;
            m *= x[v].powi(p as i32);
        }
        m
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n_vars);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let exps = self.exponents(idx);
            for v in 0..self.n_vars {
                if exps[v] == 0 {
                    continue;
                }
                let mut m = exps[v] as f64;
                for (u, &e) in exps.iter().enumerate() {
                    let p = if u == v { e - 1 } else { e };
                    m *= x[u].powi(p as i32);
                }
                g[v] += c * m;
            }
        }
        g
    }

    /// Interval bound of the polynomial over an axis box.
    pub fn interval_bound(&self, lo: &DVector<f64>, hi: &DVector<f64>) -> (f64, f64) {
        let mut sum_lo = 0.0;
        let mut sum_hi = 0.0;
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let exps = self.exponents(idx);
            let mut m_lo = 1.0;
            let mut m_hi = 1.0;
            for v in 0..self.n_vars {
                let (plo, phi) = interval_pow(lo[v], hi[v], exps[v]);
                let cands = [m_lo * plo, m_lo * phi, m_hi * plo, m_hi * phi];
                m_lo = cands.iter().cloned().fold(f64::INFINITY, f64::min);
                m_hi = cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            }
            if c >= 0.0 {
                sum_lo += c * m_lo;
                sum_hi += c * m_hi;
            } else {
                sum_lo += c * m_hi;
                sum_hi += c * m_lo;
            }
        }
        (sum_lo, sum_hi)
    }
}

fn interval_pow(lo: f64, hi: f64, k: usize) -> (f64, f64) {
    if k == 0 {
        return (1.0, 1.0);
    }
    let a = lo.powi(k as i32);
    let b = hi.powi(k as i32);
    if k % 2 == 1 {
        (a.min(b), a.max(b))
    } else if lo <= 0.0 && hi >= 0.0 {
        (0.0, a.max(b))
    } else {
        (a.min(b), a.max(b))
    }
}

/// Exact interpolation of a polynomial of per-variable degree ≤ `deg` from
/// samples on the tensor grid of `deg+1` symmetric nodes per axis.
pub fn interpolate_poly<F: Fn(&DVector<f64>) -> f64>(
    f: F,
    n_vars: usize,
    deg: usize,
) -> Result<PolyTable, TerminalError> {
    let n_nodes = deg + 1;
    let nodes: Vec<f64> = (0..n_nodes)
        .map(|i| -1.0 + 2.0 * i as f64 / deg.max(1) as f64)
        .collect();
    // 1-D Vandermonde inverse.
    let v = DMatrix::from_fn(n_nodes, n_nodes, |i, j| nodes[i].powi(j as i32));
    let v_inv = v
        .try_inverse()
        .ok_or_else(|| TerminalError::Numerical("Vandermonde singular".into()))?;

    let total = n_nodes.pow(n_vars as u32);
    let mut values = vec![0.0; total];
    let mut x = DVector::zeros(n_vars);
    for (idx, value) in values.iter_mut().enumerate() {
        let mut r = idx;
        for v_i in 0..n_vars {
            x[v_i] = nodes[r % n_nodes];
            r /= n_nodes;
        }
        *value = f(&x);
    }
    // Apply V⁻¹ along each tensor axis.
    let mut coeffs = values;
    for axis in 0..n_vars {
        let stride = n_nodes.pow(axis as u32);
        let outer = total / (n_nodes * stride);
        let mut next = coeffs.clone();
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n_nodes * stride + s;
                for i in 0..n_nodes {
                    let mut acc = 0.0;
                    for j in 0..n_nodes {
                        acc += v_inv[(i, j)] * coeffs[base + j * stride];
                    }
                    next[base + i * stride] = acc;
                }
            }
        }
        coeffs = next;
    }
    // Snap numerically-zero coefficients so series weights stay finite.
    for c in coeffs.iter_mut() {
        if c.abs() < 1e-11 {
            *c = 0.0;
        }
    }
    Ok(PolyTable {
        n_vars,
        deg,
        coeffs,
    })
}

/// Certified maximum of a polynomial over a box: dense grid + gradient
/// polish give a lower bound, per-cell interval arithmetic the certificate.
/// Returns `(certified_upper, best_point_value)`.
pub fn certified_poly_max(
    table: &PolyTable,
    region: &AxisBox,
    grid_per_axis: usize,
) -> (f64, f64) {
    let n = table.n_vars;
    let g = grid_per_axis.max(2);
    let steps: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            (0..g)
                .map(|i| {
                    region.lower()[v]
                        + (region.upper()[v] - region.lower()[v]) * i as f64 / (g - 1) as f64
                })
                .collect()
        })
        .collect();

    // Grid scan.
    let total = g.pow(n as u32);
    let mut best = f64::NEG_INFINITY;
    let mut best_x = DVector::zeros(n);
    let mut x = DVector::zeros(n);
    for idx in 0..total {
        let mut r = idx;
        for v in 0..n {
            x[v] = steps[v][r % g];
            r /= g;
        }
        let val = table.eval(&x);
        if val > best {
            best = val;
            best_x = x.clone();
        }
    }
    // Projected gradient polish from the best grid point.
    let mut cur = best_x;
    let mut val = best;
    let mut step = 1e-3;
    for _ in 0..200 {
        let grad = table.gradient(&cur);
        let mut cand = &cur + grad * step;
        for v in 0..n {
            cand[v] = cand[v].clamp(region.lower()[v], region.upper()[v]);
        }
        let cv = table.eval(&cand);
        if cv > val {
            val = cv;
            cur = cand;
            step *= 1.5;
        } else {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }

    // Interval certificate over every grid cell.
    let mut cert = f64::NEG_INFINITY;
    let cells = (g - 1).pow(n as u32);
    let mut lo = DVector::zeros(n);
    let mut hi = DVector::zeros(n);
    for idx in 0..cells {
        let mut r = idx;
        for v in 0..n {
            let i = r % (g - 1);
            r /= g - 1;
            lo[v] = steps[v][i];
            hi[v] = steps[v][i + 1];
        }
        let (_, sup) = table.interval_bound(&lo, &hi);
        cert = cert.max(sup);
    }
    (cert.max(val), val)
}

/// Diagonal solution of `(I-δK)ᵀP(I-δK) - P = -Q`:
/// `P_m = q_m / (1 - (1-δκ_m)²)`.
pub fn lyapunov_p(
    k_diag: &DVector<f64>,
    q_diag: &DVector<f64>,
    delta: f64,
) -> Result<DVector<f64>, TerminalError> {
    let mut p = DVector::zeros(k_diag.len());
    for m in 0..k_diag.len() {
        let a = 1.0 - delta * k_diag[m];
        if a.abs() >= 1.0 {
            return Err(TerminalError::UnstableK(format!(
                "kappa {} outside (0, 2/delta)",
                k_diag[m]
            )));
        }
        p[m] = q_diag[m] / (1.0 - a * a);
    }
    Ok(p)
}

/// All series data needed to evaluate the terminal-cost tail bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThetaTables {
    /// Coefficients of ‖f(e_ω)‖².
    pub sigma: PolyTable,
    /// Coefficients of ‖Q̄_u u_fl(e_ω)‖².
    pub rho: PolyTable,
    /// Per-monomial geometric-series weights 1/(1-Π(1-δκ)^ι); zero on ι=0.
    pub theta1_weights: Vec<f64>,
    /// Per-monomial weights 1/(1-Π(1-δκ)^{ι/2}); zero on ι=0.
    pub theta2_weights: Vec<f64>,
    pub q_u_bar_norm: f64,
    pub mu_hat_max: f64,
    /// Smoothing width of √|·| inside the SQP model.
    pub eps_smooth: f64,
}

impl ThetaTables {
    pub fn build(
        sigma: PolyTable,
        rho: PolyTable,
        k_diag: &DVector<f64>,
        delta: f64,
        q_u_bar_norm: f64,
        mu_hat_max: f64,
    ) -> Result<Self, TerminalError> {
        let contraction: Vec<f64> = k_diag.iter().map(|&k| 1.0 - delta * k).collect();
        if contraction.iter().any(|a| a.abs() >= 1.0) {
            return Err(TerminalError::UnstableK("theta series diverges".into()));
        }
        let weights = |half: bool| -> Vec<f64> {
            (0..sigma.n_terms())
                .map(|idx| {
                    let exps = sigma.exponents(idx);
                    if exps.iter().all(|&e| e == 0) {
                        return 0.0;
                    }
                    let mut prod = 1.0;
                    for (m, &e) in exps.iter().enumerate() {
                        let base = if half {
                            contraction[m].powf(e as f64 / 2.0)
                        } else {
                            contraction[m].powi(e as i32)
                        };
                        prod *= base;
                    }
                    1.0 / (1.0 - prod)
                })
                .collect()
        };
        // Positive contraction factors keep the half-exponent weights real.
        if contraction.iter().any(|&a| a <= 0.0) {
            return Err(TerminalError::UnstableK(
                "kappa must satisfy 0 < κ < 1/δ for the series weights".into(),
            ));
        }
        Ok(ThetaTables {
            theta1_weights: weights(false),
            theta2_weights: weights(true),
            sigma,
            rho,
            q_u_bar_norm,
            mu_hat_max,
            eps_smooth: 1e-9,
        })
    }

    /// Θ₁: exact infinite-horizon sum of `2‖Q̄_u‖‖f(e_ω,k)‖²` along the
    /// contracting closed loop.
    pub fn theta1(&self, e_omega: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for (idx, &c) in self.sigma.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            acc += c * self.theta1_weights[idx] * self.sigma.monomial(idx, e_omega);
        }
        2.0 * self.q_u_bar_norm * acc
    }

    /// Θ₂: summed square-root bound of the cross term (exact √|·| form).
    pub fn theta2(&self, e_omega: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for (idx, &c) in self.rho.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            acc += self.theta2_weights[idx]
                * (c * self.rho.monomial(idx, e_omega)).abs().sqrt();
        }
        2.0 * self.mu_hat_max * acc
    }

    /// Single-step tail `Λ₁(e) = 2‖Q̄_u‖‖f(e_ω)‖²`.
    pub fn lambda1(&self, e_omega: &DVector<f64>) -> f64 {
        2.0 * self.q_u_bar_norm * self.sigma.eval(e_omega)
    }

    /// Single-step tail `Λ₂(e) = 2 μ̂_max Σ √|ρ_ι mono_ι|`.
    pub fn lambda2(&self, e_omega: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for (idx, &c) in self.rho.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            acc += (c * self.rho.monomial(idx, e_omega)).abs().sqrt();
        }
        2.0 * self.mu_hat_max * acc
    }

    /// Smoothed Θ₁ + Θ₂ value, gradient and Hessian for the SQP model.
    /// The smoothing `√|x| → (x²+ε²)^¼` biases upward, preserving the
    /// upper-bound role of the terminal cost.
    pub fn smoothed_model(&self, e_omega: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = e_omega.len();
        let mut val = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);

        // Θ₁ is a polynomial: exact derivatives.
        for (idx, &c) in self.sigma.coeffs.iter().enumerate() {
            if c == 0.0 || self.theta1_weights[idx] == 0.0 {
                continue;
            }
            let wc = 2.0 * self.q_u_bar_norm * self.theta1_weights[idx] * c;
            let exps = self.sigma.exponents(idx);
            val += wc * self.sigma.monomial(idx, e_omega);
            let (g, h) = monomial_derivatives(&exps, e_omega);
            grad += g * wc;
            hess += h * wc;
        }

        // Θ₂: chain rule through s(x) = (x²+ε²)^¼ with x = ρ_ι mono_ι.
        let eps2 = self.eps_smooth * self.eps_smooth;
        for (idx, &c) in self.rho.coeffs.iter().enumerate() {
            if c == 0.0 || self.theta2_weights[idx] == 0.0 {
                continue;
            }
            let w = 2.0 * self.mu_hat_max * self.theta2_weights[idx];
            let exps = self.rho.exponents(idx);
            let x = c * self.rho.monomial(idx, e_omega);
            let base = (x * x + eps2).powf(0.25);
            val += w * base;
            let s1 = 0.5 * x * (x * x + eps2).powf(-0.75);
            let s2 = (x * x + eps2).powf(-1.75) * (0.5 * eps2 - x * x);
            let (gm, hm) = monomial_derivatives(&exps, e_omega);
            let gx = &gm * c;
            grad += &gx * (w * s1);
            hess += (&gx * gx.transpose()) * (w * s2) + hm * (c * w * s1);
        }
        (val, grad, hess)
    }
}

/// Gradient and Hessian of a monomial Π xₘ^{ιₘ}.
fn monomial_derivatives(exps: &[usize], x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = exps.len();
    let part = |skip_pows: &[(usize, usize)]| -> f64 {
        let mut m = 1.0;
        for (v, &e) in exps.iter().enumerate() {
            let drop: usize = skip_pows
                .iter()
                .filter(|&&(u, _)| u == v)
                .map(|&(_, d)| d)
                .sum();
            let p = e.saturating_sub(drop);
            let mut factor = 1.0;
            for k in 0..drop.min(e) {
                factor *= (e - k) as f64;
            }
            if drop > e {
                return 0.0;
            }
            m *= factor * x[v].powi(p as i32);
        }
        m
    };
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for v in 0..n {
        g[v] = part(&[(v, 1)]);
        for u in 0..n {
            h[(v, u)] = if u == v {
                part(&[(v, 2)])
            } else {
                part(&[(v, 1), (u, 1)])
            };
        }
    }
    (g, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interpolation_recovers_polynomial() {
        let f = |x: &DVector<f64>| {
            1.5 + 2.0 * x[0] - 0.5 * x[1] * x[1] * x[0] + 0.25 * x[0].powi(4) * x[1].powi(4)
        };
        let t = interpolate_poly(f, 2, 4).unwrap();
        let x = DVector::from_vec(vec![0.37, -0.81]);
        assert_relative_eq!(t.eval(&x), f(&x), epsilon = 1e-10);
        // Outside the node range too: exactness is global.
        let y = DVector::from_vec(vec![1.9, 2.3]);
        assert_relative_eq!(t.eval(&y), f(&y), epsilon = 1e-8);
    }

    #[test]
    fn gradient_matches_fd() {
        let f = |x: &DVector<f64>| x[0].powi(3) * x[1] - 2.0 * x[1] * x[1] + x[0];
        let t = interpolate_poly(f, 2, 4).unwrap();
        let x = DVector::from_vec(vec![0.4, -0.3]);
        let g = t.gradient(&x);
        let h = 1e-6;
        for v in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[v] += h;
            xm[v] -= h;
            let fd = (t.eval(&xp) - t.eval(&xm)) / (2.0 * h);
            assert_relative_eq!(g[v], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn certified_max_dominates_samples() {
        let f = |x: &DVector<f64>| 1.0 - (x[0] - 0.3).powi(2) - 0.5 * (x[1] + 0.2).powi(4);
        let t = interpolate_poly(f, 2, 4).unwrap();
        let bx = AxisBox::symmetric(DVector::from_element(2, 1.0)).unwrap();
        let (cert, best) = certified_poly_max(&t, &bx, 41);
        assert!(cert >= best - 1e-12);
        assert_relative_eq!(best, 1.0, epsilon = 1e-6);
        assert!(cert >= 1.0 && cert < 1.06, "certificate too loose: {cert}");
    }

    #[test]
    fn lyapunov_matches_series() {
        let k = DVector::from_vec(vec![1.0, 0.5, 3.0]);
        let q = DVector::from_vec(vec![1.0, 2.0, 0.3]);
        let delta = 0.1;
        let p = lyapunov_p(&k, &q, delta).unwrap();
        for m in 0..3 {
            let a = 1.0 - delta * k[m];
            let mut series = 0.0;
            let mut pow = 1.0;
            for _ in 0..10_000 {
                series += q[m] * pow;
                pow *= a * a;
            }
            assert_relative_eq!(p[m], series, epsilon = 1e-10);
        }
        // Closed-form spot value from the scalar case.
        let p1 = lyapunov_p(
            &DVector::from_vec(vec![1.0]),
            &DVector::from_vec(vec![1.0]),
            0.1,
        )
        .unwrap();
        assert_relative_eq!(p1[0], 1.0 / (1.0 - 0.81), epsilon = 1e-12);
    }

    #[test]
    fn deadbeat_limit() {
        // κ → 1/δ: P → q (A = 0).
        let p = lyapunov_p(
            &DVector::from_vec(vec![10.0 - 1e-12]),
            &DVector::from_vec(vec![2.5]),
            0.1,
        )
        .unwrap();
        assert_relative_eq!(p[0], 2.5, epsilon = 1e-9);
    }

    #[test]
    fn unstable_k_rejected() {
        assert!(matches!(
            lyapunov_p(
                &DVector::from_vec(vec![20.0]),
                &DVector::from_vec(vec![1.0]),
                0.1
            ),
            Err(TerminalError::UnstableK(_))
        ));
    }
}
