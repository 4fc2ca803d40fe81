//! Orbit coordinate change, orbit/error dynamics, their Euler
//! discretization and the nonlinear drift term.
//!
//! The controlled point is the orbit center `c = p_r + Rᵀ r_vec`, fixed to
//! the body frame at distance `r` along body +y. With the angular rate held
//! at `ω_des` and the virtual force `f̄ = m ω_des² r` pointing at the
//! center, the fault-induced thrust is consumed as centripetal force and
//! the center behaves like a double integrator.

mod reference;

pub use reference::{ReferenceKind, ReferenceTrajectory};

use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{quat, Frame, RigidState, SpacecraftParams};

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("invalid orbit parameters: {0}")]
    InvalidParams(String),
    #[error("transformation matrix is singular")]
    SingularM,
    #[error("reference trajectory error: {0}")]
    Reference(String),
}

/// Orbit design parameters tied together by `f̄ = m ω_des² r`.
///
/// The degenerate pair `r = 0, f̄ = 0` is the orbit-free mode used before
/// any fault biases the thrust; the coordinate change then collapses to
/// plain position tracking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitParams {
    pub radius: f64,
    pub omega_des: f64,
    pub f_bar: f64,
}

impl OrbitParams {
    /// Radius from the virtual-force magnitude.
    pub fn from_f_bar(mass: f64, omega_des: f64, f_bar: f64) -> Result<Self, OrbitError> {
        if f_bar < 0.0 {
            return Err(OrbitError::InvalidParams("f_bar must be >= 0".into()));
        }
        if f_bar == 0.0 {
            return Ok(OrbitParams::degenerate());
        }
        if omega_des == 0.0 {
            return Err(OrbitError::InvalidParams(
                "a nonzero virtual force needs a nonzero orbit rate".into(),
            ));
        }
        Ok(OrbitParams {
            radius: f_bar / (mass * omega_des * omega_des),
            omega_des,
            f_bar,
        })
    }

    pub fn degenerate() -> Self {
        OrbitParams {
            radius: 0.0,
            omega_des: 0.0,
            f_bar: 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.f_bar == 0.0 && self.radius == 0.0
    }

    pub fn validate(&self, mass: f64) -> Result<(), OrbitError> {
        let expect = mass * self.omega_des * self.omega_des * self.radius;
        if (expect - self.f_bar).abs() > 1e-9 * (1.0 + self.f_bar.abs()) {
            return Err(OrbitError::InvalidParams(format!(
                "f_bar {} does not equal m ω² r = {}",
                self.f_bar, expect
            )));
        }
        if self.radius < 0.0 {
            return Err(OrbitError::InvalidParams("radius must be >= 0".into()));
        }
        Ok(())
    }

    /// Offset of the orbit center in body coordinates.
    pub fn r_vec3(&self) -> Vector3<f64> {
        Vector3::new(0.0, self.radius, 0.0)
    }

    /// Desired body angular velocity (always about body z).
    pub fn omega_des_vec3(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.omega_des)
    }

    pub fn omega_des_vec(&self, frame: Frame) -> DVector<f64> {
        match frame {
            Frame::Planar => DVector::from_vec(vec![self.omega_des]),
            Frame::Spatial => DVector::from_vec(vec![0.0, 0.0, self.omega_des]),
        }
    }
}

/// Tracking error state: orbit-center position/velocity error in global
/// coordinates, body angular-velocity error, and the attitude quaternion
/// carried as a constraint trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitErrorState {
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_vector",
        deserialize_with = "crate::geometry::serde_helpers::de_vector"
    )]
    pub e_p: DVector<f64>,
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_vector",
        deserialize_with = "crate::geometry::serde_helpers::de_vector"
    )]
    pub e_omega: DVector<f64>,
    pub quat: Vector4<f64>,
}

impl OrbitErrorState {
    pub fn zeros(frame: Frame) -> Self {
        OrbitErrorState {
            e_p: DVector::zeros(frame.n_pos_err()),
            e_omega: DVector::zeros(frame.n_torque()),
            quat: quat::IDENTITY,
        }
    }

    /// Stacked error vector e = [e_p; e_ω].
    pub fn stacked(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.e_p.len() + self.e_omega.len());
        v.rows_mut(0, self.e_p.len()).copy_from(&self.e_p);
        v.rows_mut(self.e_p.len(), self.e_omega.len())
            .copy_from(&self.e_omega);
        v
    }

    pub fn from_stacked(e: &DVector<f64>, quat: Vector4<f64>, frame: Frame) -> Self {
        OrbitErrorState {
            e_p: e.rows(0, frame.n_pos_err()).clone_owned(),
            e_omega: e.rows(frame.n_pos_err(), frame.n_torque()).clone_owned(),
            quat,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.e_p.norm_squared() + self.e_omega.norm_squared()).sqrt()
    }
}

/// Orbit center position and velocity in global coordinates.
pub fn orbit_center(state: &RigidState, orbit: &OrbitParams) -> (Vector3<f64>, Vector3<f64>) {
    let r_t = quat::rotation(&state.quat).transpose();
    let r_vec = orbit.r_vec3();
    let c = state.position + r_t * r_vec;
    let v = state.velocity + r_t * (state.omega.cross(&r_vec));
    (c, v)
}

/// The invertible wrench transformation `M` satisfying
/// `M u = [m⁻¹u_f + (J⁻¹u_τ)×r_vec ; J⁻¹u_τ]`.
pub fn build_m(params: &SpacecraftParams, orbit: &OrbitParams) -> Result<DMatrix<f64>, OrbitError> {
    let r = orbit.radius;
    let m = params.mass;
    let mat = match params.frame {
        Frame::Planar => {
            let j = params.inertia[2];
            DMatrix::from_row_slice(
                3,
                3,
                &[1.0 / m, 0.0, -r / j, 0.0, 1.0 / m, 0.0, 0.0, 0.0, 1.0 / j],
            )
        }
        Frame::Spatial => {
            let j = &params.inertia;
            let mut out = DMatrix::zeros(6, 6);
            for i in 0..3 {
                out[(i, i)] = 1.0 / m;
                out[(3 + i, 3 + i)] = 1.0 / j[i];
            }
            out[(0, 5)] = -r / j[2];
            out[(2, 3)] = r / j[0];
            out
        }
    };

    // Defensive checks: invertibility and the defining identity.
    if mat.clone().try_inverse().is_none() {
        return Err(OrbitError::SingularM);
    }
    let n_u = params.frame.n_wrench();
    let mut rng_state = 0x9e3779b97f4a7c15u64;
    for _ in 0..100 {
        let u = DVector::from_fn(n_u, |_, _| {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((rng_state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        });
        let lhs = &mat * &u;
        let rhs = m_identity_rhs(&u, params, orbit);
        if (lhs - rhs).amax() > 1e-12 {
            return Err(OrbitError::SingularM);
        }
    }
    Ok(mat)
}

/// Reference implementation of the identity `M u` is checked against.
fn m_identity_rhs(
    u: &DVector<f64>,
    params: &SpacecraftParams,
    orbit: &OrbitParams,
) -> DVector<f64> {
    let n_f = params.frame.n_force();
    let n_t = params.frame.n_torque();
    let j = params.inertia_diag();
    let jinv_tau = DVector::from_fn(n_t, |i, _| u[n_f + i] / j[i]);
    match params.frame {
        Frame::Planar => {
            // (J⁻¹τ) ẑ × (0, r) = J⁻¹τ · (-r, 0)
            let mut out = DVector::zeros(3);
            out[0] = u[0] / params.mass - orbit.radius * jinv_tau[0];
            out[1] = u[1] / params.mass;
            out[2] = jinv_tau[0];
            out
        }
        Frame::Spatial => {
            let w = Vector3::new(jinv_tau[0], jinv_tau[1], jinv_tau[2]);
            let cross = w.cross(&orbit.r_vec3());
            let mut out = DVector::zeros(6);
            for i in 0..3 {
                out[i] = u[i] / params.mass + cross[i];
                out[3 + i] = jinv_tau[i];
            }
            out
        }
    }
}

/// Nonlinear drift `f(e_ω)` of the error dynamics; `f(0) = 0` by the
/// orbit-design identity `f̄ = m ω_des² r`.
pub fn f_drift(
    e_omega: &DVector<f64>,
    params: &SpacecraftParams,
    orbit: &OrbitParams,
) -> DVector<f64> {
    match params.frame {
        Frame::Planar => {
            let w_bar = orbit.omega_des + e_omega[0];
            let mut out = DVector::zeros(3);
            out[1] = orbit.f_bar / params.mass - w_bar * w_bar * orbit.radius;
            out
        }
        Frame::Spatial => {
            let w_bar = orbit.omega_des_vec3() + Vector3::new(e_omega[0], e_omega[1], e_omega[2]);
            let j = &params.inertia;
            let j_w = Vector3::new(j[0] * w_bar.x, j[1] * w_bar.y, j[2] * w_bar.z);
            let gyro = -w_bar.cross(&j_w);
            let jinv_gyro = Vector3::new(gyro.x / j[0], gyro.y / j[1], gyro.z / j[2]);
            let r_vec = orbit.r_vec3();
            let top = w_bar.cross(&w_bar.cross(&r_vec))
                + jinv_gyro.cross(&r_vec)
                + Vector3::new(0.0, orbit.f_bar / params.mass, 0.0);
            let mut out = DVector::zeros(6);
            for i in 0..3 {
                out[i] = top[i];
                out[3 + i] = jinv_gyro[i];
            }
            out
        }
    }
}

/// Jacobian `∂f/∂e_ω` used by the SQP linearization.
///
/// The drift is a fixed low-degree polynomial; central differences with a
/// moderate step are exact to ~1e-10 here and keep one code path for both
/// frames.
pub fn f_drift_jacobian(
    e_omega: &DVector<f64>,
    params: &SpacecraftParams,
    orbit: &OrbitParams,
) -> DMatrix<f64> {
    let n_t = params.frame.n_torque();
    let n_u = params.frame.n_wrench();
    let mut jac = DMatrix::zeros(n_u, n_t);
    let h = 1e-5;
    for k in 0..n_t {
        let mut ep = e_omega.clone();
        let mut em = e_omega.clone();
        ep[k] += h;
        em[k] -= h;
        let diff = (f_drift(&ep, params, orbit) - f_drift(&em, params, orbit)) / (2.0 * h);
        jac.column_mut(k).copy_from(&diff);
    }
    jac
}

/// Block rotation `R̃ = blkdiag(R, I)` evaluated at an attitude, in
/// control-wrench coordinates.
pub fn r_tilde(quat_v: &Vector4<f64>, frame: Frame) -> DMatrix<f64> {
    let n_u = frame.n_wrench();
    let mut out = DMatrix::identity(n_u, n_u);
    match frame {
        Frame::Planar => {
            let r2 = quat::rotation2(quat::yaw(quat_v));
            for i in 0..2 {
                for j in 0..2 {
                    out[(i, j)] = r2[(i, j)];
                }
            }
        }
        Frame::Spatial => {
            let r3 = quat::rotation(quat_v);
            for i in 0..3 {
                for j in 0..3 {
                    out[(i, j)] = r3[(i, j)];
                }
            }
        }
    }
    out
}

/// One explicit-Euler step of the error dynamics (the controller model):
/// `e⁺ = e + δ [e_v ; R̃ᵀ(f(e_ω) + M F_u) − M u_ref]` together with the
/// quaternion update `q⁺ = normalize(q + ½ δ Ω(ω_des + e_ω) q)`.
///
/// The renormalization deviates from the raw Euler update by less than
/// `δ²‖ω‖²/8` per step and keeps `R(q)` a rotation.
pub fn error_step(
    e: &OrbitErrorState,
    f_u: &DVector<f64>,
    u_ref: &DVector<f64>,
    params: &SpacecraftParams,
    orbit: &OrbitParams,
    m_mat: &DMatrix<f64>,
) -> OrbitErrorState {
    let frame = params.frame;
    let n_f = frame.n_force();
    let delta = params.delta;

    let rt = r_tilde(&e.quat, frame);
    let drift = f_drift(&e.e_omega, params, orbit);
    let body_accel = rt.transpose() * (drift + m_mat * f_u) - m_mat * u_ref;

    let mut e_p = e.e_p.clone();
    for i in 0..n_f {
        e_p[i] += delta * e.e_p[n_f + i];
        e_p[n_f + i] += delta * body_accel[i];
    }
    let mut e_omega = e.e_omega.clone();
    for i in 0..frame.n_torque() {
        e_omega[i] += delta * body_accel[n_f + i];
    }

    let w_bar3 = match frame {
        Frame::Planar => Vector3::new(0.0, 0.0, orbit.omega_des + e.e_omega[0]),
        Frame::Spatial => {
            orbit.omega_des_vec3() + Vector3::new(e.e_omega[0], e.e_omega[1], e.e_omega[2])
        }
    };
    let q_next = quat::normalize(&(e.quat + quat::derivative(&e.quat, &w_bar3) * delta));

    OrbitErrorState {
        e_p,
        e_omega,
        quat: q_next,
    }
}

/// Map a plant state and reference sample into the error coordinates.
pub fn error_from_state(
    state: &RigidState,
    chi: &DVector<f64>,
    params: &SpacecraftParams,
    orbit: &OrbitParams,
) -> OrbitErrorState {
    let frame = params.frame;
    let n_f = frame.n_force();
    let (c, v) = orbit_center(state, orbit);
    let mut e_p = DVector::zeros(2 * n_f);
    for i in 0..n_f {
        e_p[i] = c[i] - chi[i];
        e_p[n_f + i] = v[i] - chi[n_f + i];
    }
    let e_omega = match frame {
        Frame::Planar => DVector::from_vec(vec![state.omega.z - orbit.omega_des]),
        Frame::Spatial => DVector::from_vec(vec![
            state.omega.x,
            state.omega.y,
            state.omega.z - orbit.omega_des,
        ]),
    };
    OrbitErrorState {
        e_p,
        e_omega,
        quat: state.quat,
    }
}

/// Continuous orbit-center acceleration under a control wrench, used by the
/// transformation-consistency checks.
pub fn orbit_acceleration(
    state: &RigidState,
    f_u: &DVector<f64>,
    params: &SpacecraftParams,
    orbit: &OrbitParams,
    m_mat: &DMatrix<f64>,
) -> Vector3<f64> {
    let r_t = quat::rotation(&state.quat).transpose();
    let j = &params.inertia;
    let w = state.omega;
    let j_w = Vector3::new(j[0] * w.x, j[1] * w.y, j[2] * w.z);
    let gyro = -w.cross(&j_w);
    let jinv_gyro = Vector3::new(gyro.x / j[0], gyro.y / j[1], gyro.z / j[2]);
    let r_vec = orbit.r_vec3();

    let n_f = params.frame.n_force();
    let m_fu = m_mat * f_u;
    let mut m_top = Vector3::zeros();
    for i in 0..n_f {
        m_top[i] = m_fu[i];
    }
    let f_v_top = Vector3::new(0.0, orbit.f_bar / params.mass, 0.0);
    r_t * (w.cross(&w.cross(&r_vec)) + jinv_gyro.cross(&r_vec) + f_v_top + m_top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, simulate_step, BodyWrench, PresetName};
    use approx::assert_relative_eq;

    fn setup() -> (SpacecraftParams, OrbitParams, DMatrix<f64>) {
        let (p, _) = preset(PresetName::Spacecraft3d);
        let orbit = OrbitParams::from_f_bar(p.mass, 0.6, 3.5).unwrap();
        let m = build_m(&p, &orbit).unwrap();
        (p, orbit, m)
    }

    #[test]
    fn radius_follows_from_condition() {
        let (p, _) = preset(PresetName::Spacecraft3d);
        let orbit = OrbitParams::from_f_bar(p.mass, 0.6, 3.5).unwrap();
        assert_relative_eq!(orbit.radius, 0.5787037037037037, epsilon = 1e-12);
        orbit.validate(p.mass).unwrap();
    }

    #[test]
    fn center_identity_rotation() {
        let (_, orbit, _) = setup();
        let s = RigidState::at_rest();
        let (c, v) = orbit_center(&s, &orbit);
        assert_relative_eq!(c.y, orbit.radius, epsilon = 1e-12);
        assert_relative_eq!(v.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn center_distance_invariant() {
        let (_, orbit, _) = setup();
        let mut s = RigidState::at_rest();
        s.position = Vector3::new(1.0, -2.0, 0.5);
        s.quat = quat::normalize(&Vector4::new(0.3, -0.1, 0.5, 0.8));
        let (c, _) = orbit_center(&s, &orbit);
        assert_relative_eq!((c - s.position).norm(), orbit.radius, epsilon = 1e-12);
    }

    #[test]
    fn nominal_orbit_center_velocity_vanishes() {
        // ω = ω_des ẑ with the matching tangential plant velocity.
        let (_, orbit, _) = setup();
        let mut s = RigidState::at_rest();
        s.omega = orbit.omega_des_vec3();
        // v = -Rᵀ(ω × r_vec); with R = I: ω × r_vec = (−ω r, 0, 0).
        s.velocity = Vector3::new(orbit.omega_des * orbit.radius, 0.0, 0.0);
        let (_, v) = orbit_center(&s, &orbit);
        assert_relative_eq!(v.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn m_block_diagonal_at_zero_radius() {
        let (p, _) = preset(PresetName::Spacecraft3d);
        let orbit = OrbitParams::degenerate();
        let m = build_m(&p, &orbit).unwrap();
        assert_relative_eq!(m[(0, 5)], 0.0, epsilon = 1e-15);
        assert_relative_eq!(m[(2, 3)], 0.0, epsilon = 1e-15);
        assert_relative_eq!(m[(0, 0)], 1.0 / p.mass, epsilon = 1e-15);
    }

    #[test]
    fn m_inverse_roundtrip() {
        let (_, _, m) = setup();
        let prod = &m * m.clone().try_inverse().unwrap();
        assert_relative_eq!(
            (prod - DMatrix::identity(6, 6)).amax(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn drift_vanishes_at_zero_error() {
        let (p, orbit, _) = setup();
        let f0 = f_drift(&DVector::zeros(3), &p, &orbit);
        assert_relative_eq!(f0.amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn drift_axis_expansion() {
        // e_ω = (0,0,ε): the y component is f̄/m − (ω_des+ε)² r.
        let (p, orbit, _) = setup();
        let eps = 0.07;
        let f = f_drift(&DVector::from_vec(vec![0.0, 0.0, eps]), &p, &orbit);
        let w = orbit.omega_des + eps;
        assert_relative_eq!(
            f[1],
            orbit.f_bar / p.mass - w * w * orbit.radius,
            epsilon = 1e-12
        );
        // Pure z-spin produces no gyroscopic torque for diagonal J.
        assert_relative_eq!(f.rows(3, 3).amax(), 0.0, epsilon = 1e-12);
    }

    /// Each drift component has per-variable degree ≤ 2: third finite
    /// differences vanish identically.
    #[test]
    fn drift_is_low_degree_polynomial() {
        let (p, orbit, _) = setup();
        let h = 0.3;
        for comp in 0..6 {
            for var in 0..3 {
                let f = |t: f64| {
                    let mut e = DVector::from_vec(vec![0.21, -0.4, 0.13]);
                    e[var] = t;
                    f_drift(&e, &p, &orbit)[comp]
                };
                let d3 = f(1.5 * h) - 3.0 * f(0.5 * h) + 3.0 * f(-0.5 * h) - f(-1.5 * h);
                assert!(d3.abs() < 1e-9, "component {comp} var {var}: {d3}");
            }
        }
    }

    #[test]
    fn error_fixed_point_at_origin() {
        let (p, orbit, m) = setup();
        let e0 = OrbitErrorState::zeros(Frame::Spatial);
        let e1 = error_step(&e0, &DVector::zeros(6), &DVector::zeros(6), &p, &orbit, &m);
        assert_relative_eq!(e1.stacked().amax(), 0.0, epsilon = 1e-12);
        // The quaternion precesses at ω_des.
        assert!((e1.quat - e0.quat).norm() > 1e-4);
        assert_relative_eq!(e1.quat.norm(), 1.0, epsilon = 1e-12);
    }

    /// Simulating the plant with u_r = F_v + F_u and mapping through the
    /// orbit center reproduces the transformed dynamics: the chain-rule
    /// identity behind the coordinate change.
    #[test]
    fn transformation_consistency() {
        let (p, orbit, m) = setup();
        let mut s = RigidState::at_rest();
        s.velocity = Vector3::new(0.2, -0.1, 0.15);
        s.omega = Vector3::new(0.1, -0.2, 0.5);
        s.quat = quat::normalize(&Vector4::new(0.1, 0.2, -0.3, 0.9));
        let f_u = DVector::from_vec(vec![0.4, -0.2, 0.1, 0.02, -0.01, 0.03]);

        let mut f_v6 = DVector::zeros(6);
        f_v6[1] = orbit.f_bar;
        let u_total = &f_v6 + &f_u;
        let wrench = BodyWrench {
            force: Vector3::new(u_total[0], u_total[1], u_total[2]),
            torque: Vector3::new(u_total[3], u_total[4], u_total[5]),
        };
        let mut p_fine = p.clone();
        let h = 1e-6;
        p_fine.delta = h;
        let s1 = simulate_step(&s, &wrench, &p_fine, 1);
        let (_, v0) = orbit_center(&s, &orbit);
        let (_, v1) = orbit_center(&s1, &orbit);
        let fd = (v1 - v0) / h;

        let analytic = orbit_acceleration(&s, &f_u, &p, &orbit, &m);
        assert_relative_eq!((fd - analytic).norm(), 0.0, epsilon = 1e-5);
    }

    /// At ω = ω_des and F_u = 0 the orbit acceleration vanishes exactly.
    #[test]
    fn compensation_property() {
        let (p, orbit, m) = setup();
        let mut s = RigidState::at_rest();
        s.omega = orbit.omega_des_vec3();
        s.quat = quat::from_yaw(0.7);
        let a = orbit_acceleration(&s, &DVector::zeros(6), &p, &orbit, &m);
        assert_relative_eq!(a.norm(), 0.0, epsilon = 1e-12);
    }

    /// One Euler step of the error dynamics matches an Euler step of the
    /// orbit coordinates directly (same scheme, same instant).
    #[test]
    fn euler_consistency_single_step() {
        let (p, orbit, m) = setup();
        let mut s = RigidState::at_rest();
        s.velocity = Vector3::new(0.05, 0.02, -0.04);
        s.omega = Vector3::new(0.02, -0.03, 0.55);
        let chi = DVector::zeros(6);
        let e0 = error_from_state(&s, &chi, &p, &orbit);

        let f_u = DVector::from_vec(vec![0.1, -0.05, 0.08, 0.01, 0.0, -0.02]);
        let e1_model = error_step(&e0, &f_u, &DVector::zeros(6), &p, &orbit, &m);

        let (c0, v0) = orbit_center(&s, &orbit);
        let accel = orbit_acceleration(&s, &f_u, &p, &orbit, &m);
        let c1 = c0 + v0 * p.delta;
        let v1 = v0 + accel * p.delta;
        for i in 0..3 {
            assert_relative_eq!(e1_model.e_p[i], c1[i] - chi[i], epsilon = 1e-10);
            assert_relative_eq!(e1_model.e_p[3 + i], v1[i] - chi[3 + i], epsilon = 1e-10);
        }
    }
}
