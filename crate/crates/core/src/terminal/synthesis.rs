//! Offline synthesis of all terminal ingredients: the explicit MPC law for
//! the orbit-center error, the terminal set `𝒯 = X̂_f × ℰ`, the terminal
//! controller and the terminal cost tables.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::Digest;

use super::costs::{certified_poly_max, interpolate_poly, lyapunov_p, PolyTable, ThetaTables};
use super::dare::{max_admissible_invariant_set, solve_dare};
use super::mpqp::{build_empc_qp, CriticalRegion, MpQp, PwaControlLaw};
use super::TerminalError;
use crate::geometry::{
    linear_image, maximize_box_ball_product, AxisBox, HPolytope, MinkowskiTerm,
};
use crate::model::{Frame, SpacecraftParams};
use crate::orbit::{build_m, f_drift, r_tilde, OrbitErrorState, OrbitParams};

/// Row-wise shrink applied to M𝒰 when reserving margin for the reference
/// ball and the drift ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkForm {
    /// Exact support functions: `√f_max + √u_max·‖Mᵀaᵢ‖` per unit row.
    ExactSupport,
    /// The literal right-hand side `m·u_max + f_max` of the published
    /// volume program, exposed for comparison.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalKind {
    /// Full terminal set with eMPC law and tail-bound terminal cost.
    Set,
    /// Degenerate fallback `𝒯 = {0}`, `l_𝒯 ≡ 0` (terminal equality), used
    /// when the virtual force consumes the whole input margin.
    Equality,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Inner eMPC horizon.
    pub n_hat: usize,
    /// Angular-rate feedback gains, each in (0, 1/δ).
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_vector",
        deserialize_with = "crate::geometry::serde_helpers::de_vector"
    )]
    pub k_gains: DVector<f64>,
    /// Stage weight on the stacked error (block-diagonal, diagonal blocks).
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub q_e: DMatrix<f64>,
    /// Stage weight on the wrench input (diagonal).
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub q_u: DMatrix<f64>,
    pub shrink_form: ShrinkForm,
    pub with_lqr_baseline: bool,
    pub region_cap: usize,
    /// `true`: fall back to the equality terminal when no margin is left;
    /// `false`: report NoInteriorMargin instead.
    pub degenerate_fallback: bool,
}

impl SynthesisConfig {
    pub fn validate(&self, frame: Frame, delta: f64) -> Result<(), TerminalError> {
        let n_e = frame.n_err();
        let n_u = frame.n_wrench();
        if self.q_e.shape() != (n_e, n_e) || self.q_u.shape() != (n_u, n_u) {
            return Err(TerminalError::Numerical(format!(
                "weight shapes: Q_e {:?}, Q_u {:?}",
                self.q_e.shape(),
                self.q_u.shape()
            )));
        }
        for m in [&self.q_e, &self.q_u] {
            for i in 0..m.nrows() {
                if m[(i, i)] <= 0.0 {
                    return Err(TerminalError::Numerical(
                        "weights must have positive diagonal".into(),
                    ));
                }
                for j in 0..m.ncols() {
                    if i != j && m[(i, j)].abs() > 1e-12 {
                        return Err(TerminalError::Numerical(
                            "weights must be diagonal".into(),
                        ));
                    }
                }
            }
        }
        if self.k_gains.len() != frame.n_torque() {
            return Err(TerminalError::Numerical("K gain size".into()));
        }
        if self
            .k_gains
            .iter()
            .any(|&k| k <= 0.0 || k >= 1.0 / delta)
        {
            return Err(TerminalError::UnstableK(format!(
                "gains {:?} outside (0, 1/δ)",
                self.k_gains.as_slice()
            )));
        }
        if self.n_hat == 0 {
            return Err(TerminalError::Numerical("n_hat must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything the online controller and the verification suites need,
/// produced offline and serialized as the `*.term.json` artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminalIngredients {
    pub version: u32,
    pub provenance_hash: String,
    pub frame: Frame,
    pub kind: TerminalKind,
    pub law: PwaControlLaw,
    pub lqr_law: Option<PwaControlLaw>,
    /// Angular-rate terminal box ℰ.
    pub e_box: AxisBox,
    /// Radius of the force-block ball 𝒰̌ available to the eMPC.
    pub u_hat_max: f64,
    /// Certified maximum of ‖f(e_ω)‖² over ℰ.
    pub f_max: f64,
    pub mu_hat_max: f64,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_vector",
        deserialize_with = "crate::geometry::serde_helpers::de_vector"
    )]
    pub k_gains: DVector<f64>,
    /// Diagonal of the angular-rate Lyapunov matrix.
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_vector",
        deserialize_with = "crate::geometry::serde_helpers::de_vector"
    )]
    pub p_lyap: DVector<f64>,
    pub thetas: ThetaTables,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub m_mat: DMatrix<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub m_inv: DMatrix<f64>,
    pub orbit: OrbitParams,
    /// 𝒰 = 𝒰_res ⊖ F_v in the aligned frame.
    pub u_set: HPolytope,
    /// M𝒰, normalized and irredundant.
    pub mu_set: HPolytope,
    pub u_res: HPolytope,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_vector",
        deserialize_with = "crate::geometry::serde_helpers::de_vector"
    )]
    pub f_v: DVector<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub q_e: DMatrix<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub q_u: DMatrix<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub q_u_hat: DMatrix<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub q_u_bar: DMatrix<f64>,
    pub shrink_form: ShrinkForm,
    /// Squared bound of the reference inputs this artifact reserves for.
    pub u_traj_max: f64,
    pub delta: f64,
}

impl TerminalIngredients {
    /// Stacked-terminal-set membership `e ∈ 𝒯 = X̂_f × ℰ`.
    pub fn contains(&self, e: &OrbitErrorState, tol: f64) -> bool {
        match self.kind {
            TerminalKind::Equality => e.stacked().amax() <= tol.max(1e-6),
            TerminalKind::Set => {
                self.law.contains(&e.e_p, tol) && self.e_box.contains(&e.e_omega, tol)
            }
        }
    }

    /// Terminal cost `l_𝒯(e) = l̂(e_p) + Θ₁ + Θ₂ + Θ₃` (exact forms).
    pub fn terminal_cost(&self, e: &OrbitErrorState) -> Result<f64, TerminalError> {
        match self.kind {
            TerminalKind::Equality => Ok(0.0),
            TerminalKind::Set => {
                if !self.e_box.contains(&e.e_omega, 1e-8) {
                    return Err(TerminalError::OutsideTerminalSet);
                }
                let l_hat = self
                    .law
                    .cost(&e.e_p, 1e-8)
                    .ok_or(TerminalError::OutsideTerminalSet)?;
                let th1 = self.thetas.theta1(&e.e_omega);
                let th2 = self.thetas.theta2(&e.e_omega);
                let th3 = self.theta3(&e.e_omega);
                Ok(l_hat + th1 + th2 + th3)
            }
        }
    }

    pub fn theta3(&self, e_omega: &DVector<f64>) -> f64 {
        (0..e_omega.len())
            .map(|m| self.p_lyap[m] * e_omega[m] * e_omega[m])
            .sum()
    }

    /// Feedback-linearizing terminal control law
    /// `μ_term = M⁻¹[-f(e_ω) + (R μ̂(e_p); -K e_ω)] + R̃ u_ref`.
    pub fn terminal_controller(
        &self,
        e: &OrbitErrorState,
        u_ref: &DVector<f64>,
        params: &SpacecraftParams,
    ) -> Result<DVector<f64>, TerminalError> {
        let frame = self.frame;
        let n_f = frame.n_force();
        let n_t = frame.n_torque();
        let mu_hat = match self.kind {
            TerminalKind::Equality => DVector::zeros(n_f),
            TerminalKind::Set => self
                .law
                .evaluate(&e.e_p, 1e-8)
                .ok_or(TerminalError::OutsideFeasibleSet)?,
        };
        let rt = r_tilde(&e.quat, frame);
        let r_c = rt.view((0, 0), (n_f, n_f)).clone_owned();
        let drift = f_drift(&e.e_omega, params, &self.orbit);
        let mut inner = -drift;
        let rotated = &r_c * &mu_hat;
        for i in 0..n_f {
            inner[i] += rotated[i];
        }
        for m in 0..n_t {
            inner[n_f + m] -= self.k_gains[m] * e.e_omega[m];
        }
        Ok(&self.m_inv * inner + rt * u_ref)
    }

    pub fn save_json(&self, path: &std::path::Path) -> std::io::Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s)
    }

    pub fn load_json(path: &std::path::Path) -> std::io::Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&s)?)
    }
}

/// Certified maximum of `‖f(e_ω)‖²` over the box `[-e_max, e_max]`.
pub fn compute_f_max(
    e_max: &DVector<f64>,
    params: &SpacecraftParams,
    orbit: &OrbitParams,
) -> Result<f64, TerminalError> {
    let sigma = drift_norm_table(params, orbit)?;
    let bx = AxisBox::symmetric(e_max.clone())
        .map_err(|e| TerminalError::Numerical(e.to_string()))?;
    let (cert, _) = certified_poly_max(&sigma, &bx, 41);
    Ok(cert.max(0.0))
}

/// Exact polynomial table of ‖f(e_ω)‖² (per-variable degree ≤ 4).
pub fn drift_norm_table(
    params: &SpacecraftParams,
    orbit: &OrbitParams,
) -> Result<PolyTable, TerminalError> {
    let n_t = params.frame.n_torque();
    let table = interpolate_poly(
        |e| f_drift(e, params, orbit).norm_squared(),
        n_t,
        4,
    )?;
    Ok(table)
}

/// Full synthesis pipeline for one fault configuration.
pub fn synthesize(
    params: &SpacecraftParams,
    orbit: &OrbitParams,
    u_res: &HPolytope,
    f_v: &DVector<f64>,
    u_traj_max: f64,
    cfg: &SynthesisConfig,
) -> Result<TerminalIngredients, TerminalError> {
    cfg.validate(params.frame, params.delta)?;
    let frame = params.frame;
    let n_f = frame.n_force();
    let n_t = frame.n_torque();
    let delta = params.delta;

    let m_mat = build_m(params, orbit).map_err(|e| TerminalError::Numerical(e.to_string()))?;
    let m_inv = m_mat
        .clone()
        .try_inverse()
        .ok_or_else(|| TerminalError::Numerical("M not invertible".into()))?;

    // 𝒰 = 𝒰_res ⊖ F_v and its image M𝒰.
    let u_set = u_res
        .pontryagin_diff(&MinkowskiTerm::Point(f_v))
        .map_err(|e| TerminalError::Numerical(e.to_string()))?;
    let mu_set = linear_image(&u_set, &m_mat)
        .map_err(|e| TerminalError::Numerical(e.to_string()))?
        .reduce();

    // Stage-weight derived quantities.
    let q_u_bar = m_inv.transpose() * &cfg.q_u * &m_inv;
    let q_u_bar_sym = (&q_u_bar + q_u_bar.transpose()) * 0.5;
    let q_u_bar_norm = q_u_bar_sym
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let q_u_bar_p = q_u_bar_sym.view((0, 0), (n_f, n_f)).clone_owned();
    let lam_max_p = q_u_bar_p
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let q_u_hat = DMatrix::identity(n_f, n_f) * lam_max_p;

    let provenance = provenance_hash(params, orbit, cfg, u_traj_max);

    // Hard margin test: every normalized row of M𝒰 must leave room for the
    // reference ball before any terminal volume exists.
    let mu_norm = mu_set.normalized();
    let base = shrink_vector(&mu_norm, &m_mat, u_traj_max, 0.0, params, cfg.shrink_form);
    let min_margin = (0..mu_norm.num_rows())
        .map(|i| mu_norm.b()[i] - base[i])
        .fold(f64::INFINITY, f64::min);

    if min_margin <= 1e-9 {
        if !cfg.degenerate_fallback {
            return Err(TerminalError::NoInteriorMargin(format!(
                "smallest input margin {min_margin:.3e}"
            )));
        }
        log::warn!(
            "terminal synthesis: no interior margin ({min_margin:.3e}); \
             falling back to the terminal-equality design"
        );
        return Ok(equality_ingredients(
            params, orbit, u_res, f_v, u_set, mu_norm, q_u_bar_sym, q_u_hat, q_u_bar_norm,
            u_traj_max, cfg, provenance,
        )?);
    }

    // Fixed point over e_max: the drift bound grows with ℰ while the
    // volume program's answer shrinks with the drift bound, so the map is
    // monotone decreasing. A damped (averaged) iteration converges where
    // the raw one two-cycles; infeasible solves count as a zero target.
    let sigma = drift_norm_table(params, orbit)?;
    let mut e_max = DVector::from_element(n_t, 1e-3);
    let mut f_max;
    for iter in 0..300 {
        let bx = AxisBox::symmetric(e_max.clone())
            .map_err(|e| TerminalError::Numerical(e.to_string()))?;
        let fm = certified_poly_max(&sigma, &bx, 15).0.max(0.0);
        let shrink = shrink_vector(&mu_norm, &m_mat, u_traj_max, fm, params, cfg.shrink_form);
        let target = match maximize_box_ball_product(&mu_norm, &cfg.k_gains, &shrink, n_f) {
            Ok(sol) => sol.e_max,
            Err(_) => DVector::zeros(n_t),
        };
        let next = (&e_max + &target) * 0.5;
        let diff = (&next - &e_max).amax();
        e_max = next;
        if diff < 1e-7 * (1.0 + e_max.amax()) && iter > 3 {
            break;
        }
        if e_max.amax() < 1e-10 {
            return Err(TerminalError::NoInteriorMargin(
                "drift bound consumes the whole margin".into(),
            ));
        }
    }

    // Consistent final pair at the converged drift bound.
    let mut u_hat_radius = {
        let bx = AxisBox::symmetric(e_max.clone())
            .map_err(|e| TerminalError::Numerical(e.to_string()))?;
        let fm = certified_poly_max(&sigma, &bx, 41).0.max(0.0);
        let shrink = shrink_vector(&mu_norm, &m_mat, u_traj_max, fm, params, cfg.shrink_form);
        let sol = maximize_box_ball_product(&mu_norm, &cfg.k_gains, &shrink, n_f)
            .map_err(|e| TerminalError::NoInteriorMargin(e.to_string()))?;
        e_max = DVector::from_fn(n_t, |m, _| sol.e_max[m].min(e_max[m]));
        sol.u_hat_max
    };
    f_max = 0.0;

    // Post-verify the containment with the final f_max; shrink ℰ by 1% and
    // retry when the fixed point left a residual violation.
    let mut verified = false;
    for _ in 0..50 {
        let bx = AxisBox::symmetric(e_max.clone())
            .map_err(|e| TerminalError::Numerical(e.to_string()))?;
        f_max = certified_poly_max(&sigma, &bx, 41).0.max(0.0);
        let shrink = shrink_vector(&mu_norm, &m_mat, u_traj_max, f_max, params, cfg.shrink_form);
        if containment_holds(&mu_norm, u_hat_radius, &cfg.k_gains, &e_max, &shrink, n_f) {
            verified = true;
            break;
        }
        e_max *= 0.99;
        u_hat_radius *= 0.995;
    }
    if !verified {
        return Err(TerminalError::Numerical(
            "terminal-set containment could not be re-verified".into(),
        ));
    }

    // Inner eMPC: per-axis double integrators with the inscribed input box.
    let u_half = u_hat_radius / (n_f as f64).sqrt();
    let law = synthesize_axis_laws(frame, &cfg.q_e, &q_u_hat, cfg.n_hat, u_half, delta, cfg)?;
    let lqr_law = if cfg.with_lqr_baseline {
        Some(lqr_baseline_law(frame, &cfg.q_e, &q_u_hat, u_half, delta)?)
    } else {
        None
    };
    // Vertex-based upper bound; may exceed the ball radius by region
    // tolerances, the law itself is box-constrained row-exactly.
    let mu_hat_max = law.mu_hat_max()?;
    if mu_hat_max > u_hat_radius * (1.0 + 1e-4) + 1e-7 {
        return Err(TerminalError::Numerical(format!(
            "eMPC law exceeds the certified ball: {mu_hat_max} > {u_hat_radius}"
        )));
    }

    // Tail-bound tables.
    let rho = interpolate_poly(
        |e| {
            let drift = f_drift(e, params, orbit);
            let mut u_fl = -drift;
            for m in 0..n_t {
                u_fl[n_f + m] -= cfg.k_gains[m] * e[m];
            }
            (&q_u_bar_sym * u_fl).norm_squared()
        },
        n_t,
        4,
    )?;
    let thetas = ThetaTables::build(
        sigma,
        rho,
        &cfg.k_gains,
        delta,
        q_u_bar_norm,
        mu_hat_max,
    )?;
    let q_e_omega = DVector::from_fn(n_t, |m, _| cfg.q_e[(2 * n_f + m, 2 * n_f + m)]);
    let q_lyap = DVector::from_fn(n_t, |m, _| {
        q_e_omega[m] + 2.0 * q_u_bar_norm * cfg.k_gains[m] * cfg.k_gains[m]
    });
    let p_lyap = lyapunov_p(&cfg.k_gains, &q_lyap, delta)?;

    Ok(TerminalIngredients {
        version: 1,
        provenance_hash: provenance,
        frame,
        kind: TerminalKind::Set,
        law,
        lqr_law,
        e_box: AxisBox::symmetric(e_max).map_err(|e| TerminalError::Numerical(e.to_string()))?,
        u_hat_max: u_hat_radius,
        f_max,
        mu_hat_max,
        k_gains: cfg.k_gains.clone(),
        p_lyap,
        thetas,
        m_mat,
        m_inv,
        orbit: orbit.clone(),
        u_set,
        mu_set: mu_norm,
        u_res: u_res.clone(),
        f_v: f_v.clone(),
        q_e: cfg.q_e.clone(),
        q_u: cfg.q_u.clone(),
        q_u_hat,
        q_u_bar: q_u_bar_sym,
        shrink_form: cfg.shrink_form,
        u_traj_max,
        delta,
    })
}

/// Per-row shrink reserving margin for the drift ball `𝒰_fl` (radius
/// `√f_max`, already in the M𝒰 space) and the reference ball `𝒰_traj`
/// (radius `√u_max` in wrench space, hence support `√u_max·‖Mᵀaᵢ‖` after
/// mapping through M). The literal published right-hand side is kept
/// behind [`ShrinkForm::PaperLiteral`].
fn shrink_vector(
    mu_norm: &HPolytope,
    m_mat: &DMatrix<f64>,
    u_traj_max: f64,
    f_max: f64,
    params: &SpacecraftParams,
    form: ShrinkForm,
) -> DVector<f64> {
    let m = mu_norm.num_rows();
    DVector::from_fn(m, |i, _| match form {
        ShrinkForm::ExactSupport => {
            let a = mu_norm.a().row(i).transpose();
            f_max.sqrt() + u_traj_max.sqrt() * (m_mat.transpose() * &a).norm()
        }
        ShrinkForm::PaperLiteral => params.mass * u_traj_max + f_max,
    })
}

fn containment_holds(
    mu_norm: &HPolytope,
    u_hat_radius: f64,
    k: &DVector<f64>,
    e_max: &DVector<f64>,
    shrink: &DVector<f64>,
    n_f: usize,
) -> bool {
    for i in 0..mu_norm.num_rows() {
        let a = mu_norm.a().row(i);
        let ball = u_hat_radius * a.columns(0, n_f).norm();
        let mut box_part = 0.0;
        for m in 0..k.len() {
            box_part += a[n_f + m].abs() * k[m] * e_max[m];
        }
        if ball + box_part > mu_norm.b()[i] - shrink[i] + 1e-10 {
            return false;
        }
    }
    true
}

/// Build the per-axis eMPC laws (diagonal weights decouple the axes).
fn synthesize_axis_laws(
    frame: Frame,
    q_e: &DMatrix<f64>,
    q_u_hat: &DMatrix<f64>,
    n_hat: usize,
    u_half: f64,
    delta: f64,
    cfg: &SynthesisConfig,
) -> Result<PwaControlLaw, TerminalError> {
    let n_f = frame.n_force();
    let mut axes = Vec::with_capacity(n_f);
    for a in 0..n_f {
        let (qp, _, _) = axis_mpqp(q_e, q_u_hat, a, n_f, n_hat, u_half, delta)?;
        let regions = qp.enumerate(&[DVector::zeros(2)], cfg.region_cap)?;
        axes.push(regions);
    }
    Ok(PwaControlLaw::AxisProduct { axes })
}

/// The per-axis parametric QP, plus its DARE pair for reuse.
pub fn axis_mpqp(
    q_e: &DMatrix<f64>,
    q_u_hat: &DMatrix<f64>,
    axis: usize,
    n_f: usize,
    n_hat: usize,
    u_half: f64,
    delta: f64,
) -> Result<(MpQp, DMatrix<f64>, DMatrix<f64>), TerminalError> {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, delta, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, delta]);
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![
        q_e[(axis, axis)],
        q_e[(n_f + axis, n_f + axis)],
    ]));
    let r = DMatrix::from_element(1, 1, q_u_hat[(axis, axis)]);
    let (p_hat, k_lqr) = solve_dare(&a, &b, &q, &r)?;
    let a_cl = &a + &b * &k_lqr;
    let x_term = lqr_admissible_set(&a_cl, &k_lqr, u_half)?;
    let qp = build_empc_qp(
        &a,
        &b,
        &q,
        &r,
        &p_hat,
        n_hat,
        &DVector::from_element(1, u_half),
        &x_term,
    );
    Ok((qp, p_hat, k_lqr))
}

fn lqr_admissible_set(
    a_cl: &DMatrix<f64>,
    k_lqr: &DMatrix<f64>,
    u_half: f64,
) -> Result<HPolytope, TerminalError> {
    // |K x| ≤ u_half plus a large box for boundedness of the determination.
    let mut c = DMatrix::zeros(6, 2);
    let mut d = DVector::zeros(6);
    c.row_mut(0).copy_from(&k_lqr.row(0));
    d[0] = u_half;
    c.row_mut(1).copy_from(&(-k_lqr.row(0)));
    d[1] = u_half;
    for i in 0..2 {
        c[(2 + 2 * i, i)] = 1.0;
        d[2 + 2 * i] = 1e5;
        c[(3 + 2 * i, i)] = -1.0;
        d[3 + 2 * i] = 1e5;
    }
    max_admissible_invariant_set(a_cl, &c, &d)
}

/// Baseline variant: the eMPC part replaced by the saturated-validity LQR
/// law on its maximal admissible invariant set.
pub fn lqr_baseline_law(
    frame: Frame,
    q_e: &DMatrix<f64>,
    q_u_hat: &DMatrix<f64>,
    u_half: f64,
    delta: f64,
) -> Result<PwaControlLaw, TerminalError> {
    let n_f = frame.n_force();
    let mut axes = Vec::with_capacity(n_f);
    for axis in 0..n_f {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, delta, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, delta]);
        let q = DMatrix::from_diagonal(&DVector::from_vec(vec![
            q_e[(axis, axis)],
            q_e[(n_f + axis, n_f + axis)],
        ]));
        let r = DMatrix::from_element(1, 1, q_u_hat[(axis, axis)]);
        let (p_hat, k_lqr) = solve_dare(&a, &b, &q, &r)?;
        let a_cl = &a + &b * &k_lqr;
        let x_set = lqr_admissible_set(&a_cl, &k_lqr, u_half)?;
        axes.push(vec![CriticalRegion {
            region: x_set,
            gain: k_lqr,
            offset: DVector::zeros(1),
            cost_quad: p_hat,
            cost_lin: DVector::zeros(2),
            cost_const: 0.0,
            active_set: Vec::new(),
        }]);
    }
    Ok(PwaControlLaw::AxisProduct { axes })
}

/// Degenerate ingredients 𝒯 = {0}, l_𝒯 ≡ 0.
#[allow(clippy::too_many_arguments)]
fn equality_ingredients(
    params: &SpacecraftParams,
    orbit: &OrbitParams,
    u_res: &HPolytope,
    f_v: &DVector<f64>,
    u_set: HPolytope,
    mu_norm: HPolytope,
    q_u_bar: DMatrix<f64>,
    q_u_hat: DMatrix<f64>,
    q_u_bar_norm: f64,
    u_traj_max: f64,
    cfg: &SynthesisConfig,
    provenance: String,
) -> Result<TerminalIngredients, TerminalError> {
    let frame = params.frame;
    let n_f = frame.n_force();
    let n_t = frame.n_torque();
    let m_mat = build_m(params, orbit).map_err(|e| TerminalError::Numerical(e.to_string()))?;
    let m_inv = m_mat.clone().try_inverse().unwrap();
    let origin_box = AxisBox::symmetric(DVector::from_element(2, 1e-6)).unwrap();
    let axes = (0..n_f)
        .map(|_| {
            vec![CriticalRegion {
                region: origin_box.to_polytope(),
                gain: DMatrix::zeros(1, 2),
                offset: DVector::zeros(1),
                cost_quad: DMatrix::zeros(2, 2),
                cost_lin: DVector::zeros(2),
                cost_const: 0.0,
                active_set: Vec::new(),
            }]
        })
        .collect();
    let sigma = drift_norm_table(params, orbit)?;
    let rho = sigma.clone();
    let thetas = ThetaTables::build(
        sigma,
        rho,
        &cfg.k_gains,
        params.delta,
        q_u_bar_norm,
        0.0,
    )?;
    let q_e_omega = DVector::from_fn(n_t, |m, _| cfg.q_e[(2 * n_f + m, 2 * n_f + m)]);
    let q_lyap = DVector::from_fn(n_t, |m, _| {
        q_e_omega[m] + 2.0 * q_u_bar_norm * cfg.k_gains[m] * cfg.k_gains[m]
    });
    let p_lyap = lyapunov_p(&cfg.k_gains, &q_lyap, params.delta)?;
    Ok(TerminalIngredients {
        version: 1,
        provenance_hash: provenance,
        frame,
        kind: TerminalKind::Equality,
        law: PwaControlLaw::AxisProduct { axes },
        lqr_law: None,
        e_box: AxisBox::symmetric(DVector::zeros(n_t)).unwrap(),
        u_hat_max: 0.0,
        f_max: 0.0,
        mu_hat_max: 0.0,
        k_gains: cfg.k_gains.clone(),
        p_lyap,
        thetas,
        m_mat,
        m_inv,
        orbit: orbit.clone(),
        u_set,
        mu_set: mu_norm,
        u_res: u_res.clone(),
        f_v: f_v.clone(),
        q_e: cfg.q_e.clone(),
        q_u: cfg.q_u.clone(),
        q_u_hat,
        q_u_bar,
        shrink_form: cfg.shrink_form,
        u_traj_max,
        delta: params.delta,
    })
}

fn provenance_hash(
    params: &SpacecraftParams,
    orbit: &OrbitParams,
    cfg: &SynthesisConfig,
    u_traj_max: f64,
) -> String {
    #[derive(Serialize)]
    struct Prov<'a> {
        params: &'a SpacecraftParams,
        orbit: &'a OrbitParams,
        cfg: &'a SynthesisConfig,
        u_traj_max: f64,
    }
    let doc = serde_json::to_string(&Prov {
        params,
        orbit,
        cfg,
        u_traj_max,
    })
    .expect("provenance serialization");
    let mut h = sha2::Sha256::new();
    h.update(doc.as_bytes());
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Measure of an axis-aligned slice of the feasible set X̂_f. Coordinates
/// listed in `fixed` are pinned; the product of the free-coordinate
/// measures over the union of regions is returned.
pub fn feasible_slice_measure(
    law: &PwaControlLaw,
    fixed: &[(usize, f64)],
) -> Result<f64, TerminalError> {
    match law {
        PwaControlLaw::Coupled { regions, .. } => {
            let mut total = 0.0;
            for r in regions {
                let sliced = r
                    .region
                    .slice(fixed)
                    .map_err(|e| TerminalError::Numerical(e.to_string()))?;
                if sliced.dim() == 2 {
                    total += crate::geometry::polygon_area(&sliced)
                        .map_err(|e| TerminalError::Numerical(e.to_string()))?;
                } else {
                    return Err(TerminalError::Numerical(
                        "coupled slice measure only implemented in 2-D".into(),
                    ));
                }
            }
            Ok(total)
        }
        PwaControlLaw::AxisProduct { axes } => {
            let n = axes.len();
            let mut product = 1.0;
            for (a, regs) in axes.iter().enumerate() {
                // Coordinates of this axis inside the stacked e_p.
                let pos_fix = fixed.iter().find(|&&(i, _)| i == a).map(|&(_, v)| v);
                let vel_fix = fixed.iter().find(|&&(i, _)| i == n + a).map(|&(_, v)| v);
                product *= match (pos_fix, vel_fix) {
                    (Some(p), Some(v)) => {
                        let x = DVector::from_vec(vec![p, v]);
                        if regs.iter().any(|r| r.region.contains(&x)) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    (Some(p), None) => union_slice_length(regs, 0, p)?,
                    (None, Some(v)) => union_slice_length(regs, 1, v)?,
                    (None, None) => {
                        let mut area = 0.0;
                        for r in regs {
                            area += crate::geometry::polygon_area(&r.region)
                                .map_err(|e| TerminalError::Numerical(e.to_string()))?;
                        }
                        area
                    }
                };
            }
            Ok(product)
        }
    }
}

/// Length of the union of 1-D slices of 2-D regions (coordinate `fix_idx`
/// pinned to `fix_val`).
fn union_slice_length(
    regions: &[CriticalRegion],
    fix_idx: usize,
    fix_val: f64,
) -> Result<f64, TerminalError> {
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for r in regions {
        let sliced = r
            .region
            .slice(&[(fix_idx, fix_val)])
            .map_err(|e| TerminalError::Numerical(e.to_string()))?;
        // 1-D polytope: bounds via support.
        match sliced.bounding_box() {
            Ok(bb) => {
                let (lo, hi) = (bb.lower()[0], bb.upper()[0]);
                if hi > lo {
                    intervals.push((lo, hi));
                }
            }
            Err(_) => continue, // empty slice
        }
    }
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (lo, hi) in intervals {
        match cur {
            None => cur = Some((lo, hi)),
            Some((clo, chi)) => {
                if lo <= chi + 1e-12 {
                    cur = Some((clo, chi.max(hi)));
                } else {
                    total += chi - clo;
                    cur = Some((lo, hi));
                }
            }
        }
    }
    if let Some((clo, chi)) = cur {
        total += chi - clo;
    }
    Ok(total)
}
