//! Scalar-last quaternion kinematics.
//!
//! Convention: `q = (x, y, z, w)` encodes the global-to-body rotation, so
//! `R(q)` maps global vectors into body coordinates and `R(q)ᵀ f_body`
//! expresses a body force in global coordinates. The kinematics use the
//! block matrix `Ω(ω) = [[ω^×, ω], [-ωᵀ, 0]]` with body rates, i.e.
//! `q̇ = ½ Ω(ω) q`, which is self-consistent with `d/dt Rᵀ = Rᵀ ω^×`.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3, Vector4};

pub const IDENTITY: Vector4<f64> = Vector4::new(0.0, 0.0, 0.0, 1.0);

pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Block matrix of the quaternion kinematics, `q̇ = ½ Ω(ω) q` with body
/// rates. Equivalent to the Hamilton right-product `½ q ⊗ (ω, 0)`; this is
/// the sign that makes `d/dt Rᵀ = Rᵀ ω^×` hold, which the orbit coordinate
/// change relies on.
pub fn omega_matrix(w: &Vector3<f64>) -> Matrix4<f64> {
    let s = skew(w);
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-s));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(w);
    m.fixed_view_mut::<1, 3>(3, 0).copy_from(&(-w.transpose()));
    m
}

/// Rotation matrix (global → body) of a unit quaternion.
///
/// The sign of the skew term is fixed by the identity `d/dt Rᵀ = Rᵀ ω^×`
/// used when deriving the orbit dynamics; see the tests.
pub fn rotation(q: &Vector4<f64>) -> Matrix3<f64> {
    let v = Vector3::new(q.x, q.y, q.z);
    let w = q.w;
    Matrix3::identity() * (w * w - v.dot(&v))
        + v * v.transpose() * 2.0
        - skew(&v) * (2.0 * w)
}

pub fn derivative(q: &Vector4<f64>, omega: &Vector3<f64>) -> Vector4<f64> {
    omega_matrix(omega) * q * 0.5
}

pub fn normalize(q: &Vector4<f64>) -> Vector4<f64> {
    q / q.norm()
}

/// Yaw angle of the body frame about the global z axis. Used by planar
/// craft, whose attitude is a rotation about z only.
pub fn yaw(q: &Vector4<f64>) -> f64 {
    // For a pure-z rotation q = (0, 0, sin(θ/2), cos(θ/2)) and
    // R(q) rotates global into body by θ; recover θ from R.
    let r = rotation(q);
    // Body x-axis expressed in global coordinates is column 0 of Rᵀ.
    r[(0, 1)].atan2(r[(0, 0)])
}

/// Planar rotation matrix (global → body) for a yaw angle.
pub fn rotation2(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Quaternion for a pure rotation about the global z axis.
pub fn from_yaw(theta: f64) -> Vector4<f64> {
    Vector4::new(0.0, 0.0, (0.5 * theta).sin(), (0.5 * theta).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Pins the convention: a +90° yaw quaternion maps the global x axis to
    /// the body (0, -1, 0), i.e. the body sees the world rotated by -90°.
    #[test]
    fn ninety_degree_convention() {
        let q = from_yaw(std::f64::consts::FRAC_PI_2);
        let r = rotation(&q);
        let x_body = r * Vector3::x();
        assert_relative_eq!(x_body.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(x_body.y, -1.0, epsilon = 1e-12);
        // And a body force along +y pushes the craft along global -x.
        let f_global = r.transpose() * Vector3::y();
        assert_relative_eq!(f_global.x, -1.0, epsilon = 1e-12);
        assert_relative_eq!(yaw(&q), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    /// d/dt Rᵀ = Rᵀ ω^× must hold for the chosen kinematics.
    #[test]
    fn rotation_derivative_identity() {
        let q = normalize(&Vector4::new(0.2, -0.3, 0.4, 0.8));
        let w = Vector3::new(0.3, -0.7, 0.5);
        let h = 1e-6;
        let q1 = normalize(&(q + derivative(&q, &w) * h));
        let fd = (rotation(&q1).transpose() - rotation(&q).transpose()) / h;
        let analytic = rotation(&q).transpose() * skew(&w);
        assert_relative_eq!((fd - analytic).norm(), 0.0, epsilon = 1e-4);
    }
}
