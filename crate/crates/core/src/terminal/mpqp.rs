//! Multi-parametric QP: active-set enumeration of the explicit MPC law.
//!
//! The parametric program is
//! `min_z ½ zᵀH z + eᵀF z + ½ eᵀY e  s.t.  G z ≤ w + S e`;
//! every optimal active set induces an affine optimizer and a polyhedral
//! critical region. Regions are discovered by stepping over facets and
//! re-solving, starting from the origin.
//!
//! When the weights are diagonal and the input set is a box, the inner
//! eMPC decouples into one double integrator per translation axis; the law
//! is then stored as a product of per-axis laws, which keeps region counts
//! linear instead of multiplicative.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::TerminalError;
use crate::geometry::{vertices, AxisBox, HPolytope};
use crate::solver::{solve_lp, solve_qp, QpProblem, SolverError};

/// Parametric QP data.
#[derive(Debug, Clone)]
pub struct MpQp {
    pub h: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub w: DVector<f64>,
    pub s: DMatrix<f64>,
    /// Rows of z that form the first input.
    pub n_input: usize,
}

/// One critical region with its affine law and quadratic value piece
/// `l̂(e) = eᵀ Q e + qᵀ e + s` valid on `region`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalRegion {
    pub region: HPolytope,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub gain: DMatrix<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_vector",
        deserialize_with = "crate::geometry::serde_helpers::de_vector"
    )]
    pub offset: DVector<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub cost_quad: DMatrix<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_vector",
        deserialize_with = "crate::geometry::serde_helpers::de_vector"
    )]
    pub cost_lin: DVector<f64>,
    pub cost_const: f64,
    pub active_set: Vec<usize>,
}

impl CriticalRegion {
    pub fn control(&self, e: &DVector<f64>) -> DVector<f64> {
        &self.gain * e + &self.offset
    }

    pub fn cost(&self, e: &DVector<f64>) -> f64 {
        (e.transpose() * &self.cost_quad * e)[(0, 0)] + self.cost_lin.dot(e) + self.cost_const
    }
}

/// Build the condensed parametric QP of the inner eMPC:
/// double-integrator dynamics, input box, terminal set and terminal cost.
pub fn build_empc_qp(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q_e: &DMatrix<f64>,
    q_u: &DMatrix<f64>,
    p_hat: &DMatrix<f64>,
    n_hat: usize,
    u_box: &DVector<f64>,
    x_term: &HPolytope,
) -> MpQp {
    let nx = a.nrows();
    let nu = b.ncols();
    let nz = nu * n_hat;

    // Powers of A and the block map G_s: z ↦ x_s.
    let mut a_pow = vec![DMatrix::identity(nx, nx)];
    for s in 1..=n_hat {
        a_pow.push(&a_pow[s - 1] * a);
    }
    let block = |s: usize| -> DMatrix<f64> {
        // x_s = A^s e + Σ_{j<s} A^{s-1-j} B u_j
        let mut g = DMatrix::zeros(nx, nz);
        for j in 0..s {
            let m = &a_pow[s - 1 - j] * b;
            g.view_mut((0, j * nu), (nx, nu)).copy_from(&m);
        }
        g
    };

    let mut h = DMatrix::zeros(nz, nz);
    let mut f = DMatrix::zeros(nx, nz);
    let mut y = DMatrix::zeros(nx, nx);
    for s in 0..n_hat {
        let gs = block(s);
        h += gs.transpose() * q_e * &gs;
        f += a_pow[s].transpose() * q_e * &gs;
        y += a_pow[s].transpose() * q_e * &a_pow[s];
        let iu = s * nu;
        for i in 0..nu {
            for j in 0..nu {
                h[(iu + i, iu + j)] += q_u[(i, j)];
            }
        }
    }
    let gn = block(n_hat);
    h += gn.transpose() * p_hat * &gn;
    f += a_pow[n_hat].transpose() * p_hat * &gn;
    y += a_pow[n_hat].transpose() * p_hat * &a_pow[n_hat];
    h *= 2.0;
    f *= 2.0;
    y *= 2.0;

    // Input box rows ±u_s ≤ u_box and terminal rows A_X x_N ≤ b_X.
    let m_in = 2 * nz;
    let m_t = x_term.num_rows();
    let mut g = DMatrix::zeros(m_in + m_t, nz);
    let mut w = DVector::zeros(m_in + m_t);
    let s_mat_rows = m_in + m_t;
    let mut s_mat = DMatrix::zeros(s_mat_rows, nx);
    for s in 0..n_hat {
        for i in 0..nu {
            let r = 2 * (s * nu + i);
            g[(r, s * nu + i)] = 1.0;
            w[r] = u_box[i];
            g[(r + 1, s * nu + i)] = -1.0;
            w[r + 1] = u_box[i];
        }
    }
    let gxn = x_term.a() * &gn;
    let sxn = -(x_term.a() * &a_pow[n_hat]);
    g.view_mut((m_in, 0), (m_t, nz)).copy_from(&gxn);
    w.rows_mut(m_in, m_t).copy_from(x_term.b());
    s_mat.view_mut((m_in, 0), (m_t, nx)).copy_from(&(-sxn));

    MpQp {
        h,
        f,
        y,
        g,
        w,
        s: s_mat,
        n_input: nu,
    }
}

#[derive(Debug, Clone)]
pub struct OnlineSolution {
    pub z: DVector<f64>,
    pub u0: DVector<f64>,
    pub value: f64,
    pub active: Vec<usize>,
}

impl MpQp {
    /// Solve the QP at a fixed parameter (the online oracle).
    pub fn solve_at(&self, e: &DVector<f64>) -> Result<OnlineSolution, SolverError> {
        let q = self.f.transpose() * e;
        let b = &self.w + &self.s * e;
        let sol = solve_qp(&QpProblem::new(self.h.clone(), q).with_ineq(self.g.clone(), b))?;
        let value = sol.value + 0.5 * (e.transpose() * &self.y * e)[(0, 0)];
        Ok(OnlineSolution {
            u0: sol.x.rows(0, self.n_input).clone_owned(),
            value,
            active: sol.active,
            z: sol.x,
        })
    }

    /// Affine optimizer and critical region for one active set.
    fn region_for(&self, active: &[usize]) -> Result<CriticalRegion, TerminalError> {
        let nz = self.h.ncols();
        let ne = self.f.nrows();
        let na = active.len();
        let mut kkt = DMatrix::zeros(nz + na, nz + na);
        kkt.view_mut((0, 0), (nz, nz)).copy_from(&self.h);
        for (k, &i) in active.iter().enumerate() {
            for c in 0..nz {
                kkt[(nz + k, c)] = self.g[(i, c)];
                kkt[(c, nz + k)] = self.g[(i, c)];
            }
        }
        // Constant and parametric right-hand sides.
        let mut rhs = DMatrix::zeros(nz + na, 1 + ne);
        for (k, &i) in active.iter().enumerate() {
            rhs[(nz + k, 0)] = self.w[i];
            for c in 0..ne {
                rhs[(nz + k, 1 + c)] = self.s[(i, c)];
            }
        }
        for r in 0..nz {
            for c in 0..ne {
                rhs[(r, 1 + c)] = -self.f[(c, r)];
            }
        }
        let svd = kkt.svd(true, true);
        let sol = svd
            .solve(&rhs, 1e-12)
            .map_err(|e| TerminalError::Numerical(format!("KKT solve: {e}")))?;
        let z0 = sol.view((0, 0), (nz, 1)).column(0).clone_owned();
        let z1 = sol.view((0, 1), (nz, ne)).clone_owned();
        let l0 = sol.view((nz, 0), (na, 1)).column(0).clone_owned();
        let l1 = sol.view((nz, 1), (na, ne)).clone_owned();

        // Region rows: primal feasibility of inactive constraints and dual
        // nonnegativity of the active multipliers.
        let inactive: Vec<usize> = (0..self.g.nrows()).filter(|i| !active.contains(i)).collect();
        let mut a = DMatrix::zeros(inactive.len() + na, ne);
        let mut b = DVector::zeros(inactive.len() + na);
        for (k, &i) in inactive.iter().enumerate() {
            let gi = self.g.row(i);
            let row = gi * &z1 - self.s.row(i);
            a.row_mut(k).copy_from(&row);
            b[k] = self.w[i] - (gi * &z0)[(0, 0)];
        }
        for k in 0..na {
            let row = -l1.row(k);
            a.row_mut(inactive.len() + k).copy_from(&row);
            b[inactive.len() + k] = l0[k];
        }
        let region = HPolytope::new(a, b)
            .map_err(|e| TerminalError::Numerical(e.to_string()))?
            .reduce();

        let cost_quad = {
            let fz1 = &self.f * &z1;
            (z1.transpose() * &self.h * &z1) * 0.5 + (&fz1 + fz1.transpose()) * 0.5 + &self.y * 0.5
        };
        let cost_lin = z1.transpose() * &self.h * &z0 + &self.f * &z0;
        let cost_const = 0.5 * (z0.transpose() * &self.h * &z0)[(0, 0)];

        Ok(CriticalRegion {
            region,
            gain: z1.rows(0, self.n_input).clone_owned(),
            offset: z0.rows(0, self.n_input).clone_owned(),
            cost_quad,
            cost_lin,
            cost_const,
            active_set: active.to_vec(),
        })
    }

    /// Enumerate all critical regions reachable from the seed parameters.
    pub fn enumerate(
        &self,
        seeds: &[DVector<f64>],
        region_cap: usize,
    ) -> Result<Vec<CriticalRegion>, TerminalError> {
        let mut seen: std::collections::BTreeSet<Vec<usize>> = Default::default();
        let mut out: Vec<CriticalRegion> = Vec::new();
        let mut queue: std::collections::VecDeque<DVector<f64>> = seeds.iter().cloned().collect();
        let mut explored_facets = 0usize;

        while let Some(point) = queue.pop_front() {
            if out.len() > region_cap {
                return Err(TerminalError::HorizonTooLarge(out.len()));
            }
            let sol = match self.solve_at(&point) {
                Ok(s) => s,
                Err(SolverError::Infeasible) => continue,
                // A stalled solve at a probe point only costs exploration
                // from that particular facet; neighbors reach the region
                // through their own facets.
                Err(e) => {
                    log::debug!("mpqp: probe solve failed ({e}); skipping point");
                    continue;
                }
            };
            let mut active = sol.active.clone();
            active.sort_unstable();
            if !seen.insert(active.clone()) {
                continue;
            }
            let cr = match self.region_for(&active) {
                Ok(c) => c,
                // Degenerate active set: perturb the query point and retry
                // once; the perturbed set lands in a neighboring region.
                Err(_) => {
                    let nudged = &point + DVector::from_element(point.len(), 1e-9);
                    if let Ok(s2) = self.solve_at(&nudged) {
                        let mut a2 = s2.active.clone();
                        a2.sort_unstable();
                        if seen.insert(a2.clone()) {
                            self.region_for(&a2)?
                        } else {
                            continue;
                        }
                    } else {
                        continue;
                    }
                }
            };
            // Thin or empty regions arise from weakly-active sets; skip.
            let (center, radius) = match cr.region.chebyshev_center() {
                Ok(cr_) => cr_,
                Err(_) => continue,
            };
            if radius < 1e-9 {
                continue;
            }
            // Sanity: the affine law matches a fresh QP solve at the center.
            if let Ok(check) = self.solve_at(&center) {
                if (cr.control(&center) - &check.u0).amax() > 1e-5 {
                    log::warn!(
                        "mpqp: affine law mismatch {:.2e} at region center; skipping set {:?}",
                        (cr.control(&center) - &check.u0).amax(),
                        active
                    );
                    continue;
                }
            }

            // Queue a point beyond every facet.
            for i in 0..cr.region.num_rows() {
                explored_facets += 1;
                if explored_facets > 200 * region_cap {
                    return Err(TerminalError::HorizonTooLarge(out.len()));
                }
                if let Some(fc) = facet_center(&cr.region, i) {
                    let n_row = cr.region.a().row(i).transpose();
                    let scale = 1.0 + fc.norm();
                    for eps in [1e-7 * scale, 1e-5 * scale] {
                        queue.push_back(&fc + &n_row * eps);
                    }
                }
            }
            out.push(cr);
        }
        if out.is_empty() {
            return Err(TerminalError::Numerical(
                "no full-dimensional critical region found".into(),
            ));
        }
        Ok(out)
    }
}

/// Chebyshev center of one facet (row `i` active as equality).
fn facet_center(p: &HPolytope, i: usize) -> Option<DVector<f64>> {
    let d = p.dim();
    let m = p.num_rows();
    let mut a_lp = DMatrix::zeros(m, d + 1);
    for r in 0..m {
        for c in 0..d {
            a_lp[(r, c)] = p.a()[(r, c)];
        }
        if r != i {
            a_lp[(r, d)] = p.a().row(r).norm();
        }
    }
    let mut eq = DMatrix::zeros(1, d + 1);
    for c in 0..d {
        eq[(0, c)] = p.a()[(i, c)];
    }
    let f = DVector::from_vec(vec![p.b()[i]]);
    let mut obj = DVector::zeros(d + 1);
    obj[d] = 1.0;
    match solve_lp(&obj, &a_lp, p.b(), Some((&eq, &f))) {
        Ok(sol) if sol.x[d] > -1e-9 => Some(sol.x.rows(0, d).clone_owned()),
        _ => None,
    }
}

/// Explicit MPC law: either a flat list of regions over the full parameter
/// space, or a per-axis product for decoupled problems. The feasible set
/// X̂_f is the union of the regions (product of unions per axis).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PwaControlLaw {
    Coupled {
        regions: Vec<CriticalRegion>,
        n_param: usize,
        n_input: usize,
    },
    AxisProduct {
        /// axes[a] covers the (position, velocity) pair of axis a; the law
        /// input is the scalar acceleration of that axis.
        axes: Vec<Vec<CriticalRegion>>,
    },
}

impl PwaControlLaw {
    pub fn n_param(&self) -> usize {
        match self {
            PwaControlLaw::Coupled { n_param, .. } => *n_param,
            PwaControlLaw::AxisProduct { axes } => 2 * axes.len(),
        }
    }

    pub fn n_input(&self) -> usize {
        match self {
            PwaControlLaw::Coupled { n_input, .. } => *n_input,
            PwaControlLaw::AxisProduct { axes } => axes.len(),
        }
    }

    pub fn num_regions(&self) -> usize {
        match self {
            PwaControlLaw::Coupled { regions, .. } => regions.len(),
            PwaControlLaw::AxisProduct { axes } => axes.iter().map(|a| a.len()).sum(),
        }
    }

    /// Split e_p = [pos; vel] into the (pos_a, vel_a) pair of one axis.
    fn axis_state(e_p: &DVector<f64>, a: usize, n_axes: usize) -> DVector<f64> {
        DVector::from_vec(vec![e_p[a], e_p[n_axes + a]])
    }

    fn locate_in(regions: &[CriticalRegion], x: &DVector<f64>, tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in regions.iter().enumerate() {
            let res = r.region.residual(x);
            if res <= tol && best.map_or(true, |(_, b)| res < b) {
                best = Some((i, res));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Feasibility of the underlying parametric program at e_p.
    pub fn contains(&self, e_p: &DVector<f64>, tol: f64) -> bool {
        match self {
            PwaControlLaw::Coupled { regions, .. } => {
                Self::locate_in(regions, e_p, tol).is_some()
            }
            PwaControlLaw::AxisProduct { axes } => {
                let n = axes.len();
                axes.iter().enumerate().all(|(a, regs)| {
                    Self::locate_in(regs, &Self::axis_state(e_p, a, n), tol).is_some()
                })
            }
        }
    }

    /// Point-location evaluation of μ̂(e_p).
    pub fn evaluate(&self, e_p: &DVector<f64>, tol: f64) -> Option<DVector<f64>> {
        match self {
            PwaControlLaw::Coupled { regions, .. } => {
                let i = Self::locate_in(regions, e_p, tol)?;
                Some(regions[i].control(e_p))
            }
            PwaControlLaw::AxisProduct { axes } => {
                let n = axes.len();
                let mut u = DVector::zeros(n);
                for (a, regs) in axes.iter().enumerate() {
                    let x = Self::axis_state(e_p, a, n);
                    let i = Self::locate_in(regs, &x, tol)?;
                    u[a] = regs[i].control(&x)[0];
                }
                Some(u)
            }
        }
    }

    /// Parametric optimal value l̂(e_p).
    pub fn cost(&self, e_p: &DVector<f64>, tol: f64) -> Option<f64> {
        match self {
            PwaControlLaw::Coupled { regions, .. } => {
                let i = Self::locate_in(regions, e_p, tol)?;
                Some(regions[i].cost(e_p))
            }
            PwaControlLaw::AxisProduct { axes } => {
                let n = axes.len();
                let mut total = 0.0;
                for (a, regs) in axes.iter().enumerate() {
                    let x = Self::axis_state(e_p, a, n);
                    let i = Self::locate_in(regs, &x, tol)?;
                    total += regs[i].cost(&x);
                }
                Some(total)
            }
        }
    }

    /// Quadratic model (value, gradient, Hessian) of l̂ at e_p, in the
    /// stacked [pos; vel] coordinates.
    pub fn cost_model(
        &self,
        e_p: &DVector<f64>,
        tol: f64,
    ) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let d = self.n_param();
        match self {
            PwaControlLaw::Coupled { regions, .. } => {
                let i = Self::locate_in(regions, e_p, tol)?;
                let r = &regions[i];
                let grad = (&r.cost_quad + r.cost_quad.transpose()) * e_p + &r.cost_lin;
                let hess = &r.cost_quad + r.cost_quad.transpose();
                Some((r.cost(e_p), grad, hess))
            }
            PwaControlLaw::AxisProduct { axes } => {
                let n = axes.len();
                let mut val = 0.0;
                let mut grad = DVector::zeros(d);
                let mut hess = DMatrix::zeros(d, d);
                for (a, regs) in axes.iter().enumerate() {
                    let x = Self::axis_state(e_p, a, n);
                    let i = Self::locate_in(regs, &x, tol)?;
                    let r = &regs[i];
                    val += r.cost(&x);
                    let g = (&r.cost_quad + r.cost_quad.transpose()) * &x + &r.cost_lin;
                    let h = &r.cost_quad + r.cost_quad.transpose();
                    let idx = [a, n + a];
                    for (bi, &gi) in idx.iter().enumerate() {
                        grad[gi] += g[bi];
                        for (bj, &gj) in idx.iter().enumerate() {
                            hess[(gi, gj)] += h[(bi, bj)];
                        }
                    }
                }
                Some((val, grad, hess))
            }
        }
    }

    /// Exact maximum of ‖μ̂(e)‖₂ over the feasible set, via region vertices
    /// (a convex function attains its maximum at a vertex).
    pub fn mu_hat_max(&self) -> Result<f64, TerminalError> {
        match self {
            PwaControlLaw::Coupled { regions, .. } => {
                let mut best: f64 = 0.0;
                for r in regions {
                    let vs = vertices(&r.region)
                        .map_err(|e| TerminalError::Numerical(e.to_string()))?;
                    for v in vs {
                        best = best.max(r.control(&v).norm());
                    }
                }
                Ok(best)
            }
            PwaControlLaw::AxisProduct { axes } => {
                let mut total = 0.0;
                for regs in axes {
                    let mut axis_best: f64 = 0.0;
                    for r in regs {
                        let vs = vertices(&r.region)
                            .map_err(|e| TerminalError::Numerical(e.to_string()))?;
                        for v in vs {
                            axis_best = axis_best.max(r.control(&v)[0].abs());
                        }
                    }
                    total += axis_best * axis_best;
                }
                Ok(total.sqrt())
            }
        }
    }

    /// Bounding box of the feasible set.
    pub fn bounding_box(&self) -> Result<AxisBox, TerminalError> {
        match self {
            PwaControlLaw::Coupled {
                regions, n_param, ..
            } => {
                let mut lo = DVector::from_element(*n_param, f64::INFINITY);
                let mut hi = DVector::from_element(*n_param, f64::NEG_INFINITY);
                for r in regions {
                    let bb = r
                        .region
                        .bounding_box()
                        .map_err(|e| TerminalError::Numerical(e.to_string()))?;
                    for i in 0..*n_param {
                        lo[i] = lo[i].min(bb.lower()[i]);
                        hi[i] = hi[i].max(bb.upper()[i]);
                    }
                }
                AxisBox::new(lo, hi).map_err(|e| TerminalError::Numerical(e.to_string()))
            }
            PwaControlLaw::AxisProduct { axes } => {
                let n = axes.len();
                let mut lo = DVector::zeros(2 * n);
                let mut hi = DVector::zeros(2 * n);
                for (a, regs) in axes.iter().enumerate() {
                    let mut alo = [f64::INFINITY; 2];
                    let mut ahi = [f64::NEG_INFINITY; 2];
                    for r in regs {
                        let bb = r
                            .region
                            .bounding_box()
                            .map_err(|e| TerminalError::Numerical(e.to_string()))?;
                        for i in 0..2 {
                            alo[i] = alo[i].min(bb.lower()[i]);
                            ahi[i] = ahi[i].max(bb.upper()[i]);
                        }
                    }
                    lo[a] = alo[0];
                    hi[a] = ahi[0];
                    lo[n + a] = alo[1];
                    hi[n + a] = ahi[1];
                }
                AxisBox::new(lo, hi).map_err(|e| TerminalError::Numerical(e.to_string()))
            }
        }
    }

    /// Largest inscribed box around `center` inside the region containing
    /// it, with aspect `h` (product of per-axis boxes for product laws).
    pub fn inscribed_box_at(&self, center: &DVector<f64>, h: &DVector<f64>) -> Option<AxisBox> {
        match self {
            PwaControlLaw::Coupled { regions, .. } => {
                let i = Self::locate_in(regions, center, 1e-8)?;
                regions[i].region.inscribed_box(center, h)
            }
            PwaControlLaw::AxisProduct { axes } => {
                let n = axes.len();
                let mut lo = DVector::zeros(2 * n);
                let mut hi = DVector::zeros(2 * n);
                for (a, regs) in axes.iter().enumerate() {
                    let x = Self::axis_state(center, a, n);
                    let i = Self::locate_in(regs, &x, 1e-8)?;
                    let hb = DVector::from_vec(vec![h[a], h[n + a]]);
                    let bx = regs[i].region.inscribed_box(&x, &hb)?;
                    lo[a] = bx.lower()[0];
                    hi[a] = bx.upper()[0];
                    lo[n + a] = bx.lower()[1];
                    hi[n + a] = bx.upper()[1];
                }
                AxisBox::new(lo, hi).ok()
            }
        }
    }

    /// Rejection-sample a feasible parameter, uniform over the feasible set.
    pub fn sample_feasible<R: rand::Rng>(
        &self,
        bbox: &AxisBox,
        rng: &mut R,
        max_tries: usize,
    ) -> Option<DVector<f64>> {
        for _ in 0..max_tries {
            let x = bbox.sample(rng);
            if self.contains(&x, 1e-10) {
                return Some(x);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn di_mpqp(n_hat: usize, u_lim: f64) -> MpQp {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 0.1]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::from_element(1, 1, 0.1);
        let (p_hat, k) = super::super::dare::solve_dare(&a, &b, &q, &r).unwrap();
        let a_cl = &a + &b * &k;
        let mut c = DMatrix::zeros(6, 2);
        let mut d = DVector::zeros(6);
        c.row_mut(0).copy_from(&k.row(0));
        d[0] = u_lim;
        c.row_mut(1).copy_from(&(-k.row(0)));
        d[1] = u_lim;
        for i in 0..2 {
            c[(2 + 2 * i, i)] = 1.0;
            d[2 + 2 * i] = 1e4;
            c[(3 + 2 * i, i)] = -1.0;
            d[3 + 2 * i] = 1e4;
        }
        let x_term = super::super::dare::max_admissible_invariant_set(&a_cl, &c, &d).unwrap();
        build_empc_qp(
            &a,
            &b,
            &q,
            &r,
            &p_hat,
            n_hat,
            &DVector::from_element(1, u_lim),
            &x_term,
        )
    }

    #[test]
    fn single_region_unconstrained_lqr() {
        // Loose bounds: one region, law = LQR-like, matches the online QP.
        let qp = di_mpqp(3, 1e3);
        let regions = qp
            .enumerate(&[DVector::zeros(2)], 50_000)
            .expect("enumeration");
        let mut rng_state = 11u64;
        for _ in 0..100 {
            let e = DVector::from_fn(2, |_, _| {
                rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
                ((rng_state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
            });
            let online = qp.solve_at(&e).unwrap();
            let region = regions
                .iter()
                .find(|r| r.region.contains_with_tol(&e, 1e-7));
            if let Some(r) = region {
                assert_relative_eq!((r.control(&e) - &online.u0).amax(), 0.0, epsilon = 1e-6);
                assert_relative_eq!(r.cost(&e), online.value, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn origin_gives_zero_control_and_cost() {
        let qp = di_mpqp(5, 0.5);
        let regions = qp.enumerate(&[DVector::zeros(2)], 50_000).unwrap();
        let law = PwaControlLaw::Coupled {
            regions,
            n_param: 2,
            n_input: 1,
        };
        let origin = DVector::zeros(2);
        assert_relative_eq!(law.evaluate(&origin, 1e-9).unwrap()[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(law.cost(&origin, 1e-9).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn saturation_region_matches_online() {
        let qp = di_mpqp(6, 0.3);
        let regions = qp.enumerate(&[DVector::zeros(2)], 50_000).unwrap();
        assert!(regions.len() > 1, "expected saturated regions");
        // A state deep along velocity: input saturates.
        let mut found_saturated = false;
        for r in &regions {
            let (c, _) = r.region.chebyshev_center().unwrap();
            let u = r.control(&c);
            let online = qp.solve_at(&c).unwrap();
            assert_relative_eq!((u.clone() - &online.u0).amax(), 0.0, epsilon = 1e-6);
            if (u[0].abs() - 0.3).abs() < 1e-9 {
                found_saturated = true;
            }
        }
        assert!(found_saturated);
    }

    /// Continuity of the optimizer across shared facets.
    #[test]
    fn law_is_continuous_across_facets() {
        let qp = di_mpqp(6, 0.3);
        let regions = qp.enumerate(&[DVector::zeros(2)], 50_000).unwrap();
        for r in &regions {
            for i in 0..r.region.num_rows() {
                if let Some(fc) = super::facet_center(&r.region, i) {
                    let n_row = r.region.a().row(i).transpose();
                    let outside = &fc + &n_row * 1e-7;
                    for other in &regions {
                        if other.region.contains_with_tol(&outside, 1e-9) {
                            let du = (r.control(&fc) - other.control(&fc)).amax();
                            assert!(du < 1e-6, "law jump {du:.2e} across facet");
                        }
                    }
                }
            }
        }
    }
}
