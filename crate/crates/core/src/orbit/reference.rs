//! Reference trajectories for the orbit center.
//!
//! A reference is a piecewise-constant sequence of samples
//! `χ_k = [p_des; v_des]` with known inputs `u_ref^k` that evolve the
//! sequence through the discrete orbit model:
//! `p⁺ = p + δ v`, `v⁺ = v + δ u_f/m`, torque rows zero. Generators build
//! the sequence so this recursion holds exactly, which is what makes the
//! shifted-candidate feasibility argument of the MPC go through.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::OrbitError;
use crate::geometry::HPolytope;
use crate::model::Frame;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ReferenceKind {
    /// Constant setpoint at a position (velocity zero, u_ref zero).
    Setpoint { position: Vec<f64> },
    /// Circle around `center` with given radius and period, counterclockwise
    /// in the x-y plane.
    Circle {
        center: Vec<f64>,
        radius: f64,
        period: f64,
    },
    /// CSV file with columns t, p_des_x.., v_des_x.., u_ref_0..
    Csv { path: String },
}

#[derive(Debug, Clone)]
pub struct ReferenceTrajectory {
    /// Samples χ_k = [p_des; v_des] ∈ ℝ^{2 n_f}.
    pub chi: Vec<DVector<f64>>,
    /// Reference inputs in the global frame, torque rows zero.
    pub u_ref: Vec<DVector<f64>>,
    /// Bound on ‖u_ref‖²: u_refᵀu_ref ≤ u_max for every sample.
    pub u_max: f64,
    pub delta: f64,
    pub frame: Frame,
}

impl ReferenceTrajectory {
    pub fn setpoint(position: &[f64], frame: Frame, delta: f64, samples: usize) -> Self {
        let n_f = frame.n_force();
        let mut chi0 = DVector::zeros(2 * n_f);
        for i in 0..n_f.min(position.len()) {
            chi0[i] = position[i];
        }
        ReferenceTrajectory {
            chi: vec![chi0; samples.max(1)],
            u_ref: vec![DVector::zeros(frame.n_wrench()); samples.max(1)],
            u_max: 0.0,
            delta,
            frame,
        }
    }

    /// Exact discrete circle: positions are sampled on the circle, the
    /// velocities are forward differences and the inputs the resulting
    /// accelerations, so the discrete recursion holds to machine precision.
    pub fn circle(
        center: &[f64],
        radius: f64,
        period: f64,
        mass: f64,
        frame: Frame,
        delta: f64,
        samples: usize,
    ) -> Result<Self, OrbitError> {
        if period <= 0.0 || radius <= 0.0 {
            return Err(OrbitError::Reference(
                "circle needs positive radius and period".into(),
            ));
        }
        let n_f = frame.n_force();
        let n = samples.max(1);
        let omega = 2.0 * std::f64::consts::PI / period;
        let pos = |k: usize| {
            let th = omega * delta * k as f64;
            let mut p = DVector::zeros(n_f);
            p[0] = center.first().copied().unwrap_or(0.0) + radius * th.cos();
            p[1] = center.get(1).copied().unwrap_or(0.0) + radius * th.sin();
            if n_f > 2 {
                p[2] = center.get(2).copied().unwrap_or(0.0);
            }
            p
        };
        let mut chi = Vec::with_capacity(n);
        let mut u_ref = Vec::with_capacity(n);
        let mut u_max: f64 = 0.0;
        for k in 0..n {
            let p0 = pos(k);
            let p1 = pos(k + 1);
            let p2 = pos(k + 2);
            let v0 = (&p1 - &p0) / delta;
            let v1 = (&p2 - &p1) / delta;
            let acc = (&v1 - &v0) / delta;
            let mut x = DVector::zeros(2 * n_f);
            x.rows_mut(0, n_f).copy_from(&p0);
            x.rows_mut(n_f, n_f).copy_from(&v0);
            chi.push(x);
            let mut u = DVector::zeros(frame.n_wrench());
            for i in 0..n_f {
                u[i] = mass * acc[i];
            }
            u_max = u_max.max(u.norm_squared());
            u_ref.push(u);
        }
        Ok(ReferenceTrajectory {
            chi,
            u_ref,
            u_max,
            delta,
            frame,
        })
    }

    /// Columns: t, p_des_x, p_des_y[, p_des_z], v_des_…, u_ref_0..n_u-1.
    pub fn from_csv(path: &str, frame: Frame, delta: f64) -> Result<Self, OrbitError> {
        let n_f = frame.n_force();
        let n_u = frame.n_wrench();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| OrbitError::Reference(format!("open {path}: {e}")))?;
        let mut chi = Vec::new();
        let mut u_ref = Vec::new();
        let mut u_max: f64 = 0.0;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| OrbitError::Reference(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| OrbitError::Reference(format!("parse: {e}")))?;
            if vals.len() < 1 + 2 * n_f + n_u {
                return Err(OrbitError::Reference(format!(
                    "row has {} columns, need {}",
                    vals.len(),
                    1 + 2 * n_f + n_u
                )));
            }
            let x = DVector::from_iterator(2 * n_f, vals[1..1 + 2 * n_f].iter().cloned());
            let u = DVector::from_iterator(
                n_u,
                vals[1 + 2 * n_f..1 + 2 * n_f + n_u].iter().cloned(),
            );
            u_max = u_max.max(u.norm_squared());
            chi.push(x);
            u_ref.push(u);
        }
        if chi.is_empty() {
            return Err(OrbitError::Reference("empty reference file".into()));
        }
        Ok(ReferenceTrajectory {
            chi,
            u_ref,
            u_max,
            delta,
            frame,
        })
    }

    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    /// Sample at step k, clamped at the final sample.
    pub fn chi_at(&self, k: usize) -> &DVector<f64> {
        &self.chi[k.min(self.chi.len() - 1)]
    }

    pub fn u_ref_at(&self, k: usize) -> &DVector<f64> {
        &self.u_ref[k.min(self.u_ref.len() - 1)]
    }

    /// Certify 𝒰_traj = {u | uᵀu ≤ u_max} ⊆ U row-wise; returns the index
    /// of a violated half-space as witness otherwise.
    pub fn check_containment(&self, u_set: &HPolytope) -> Result<(), usize> {
        let p = u_set.normalized();
        let r = self.u_max.sqrt();
        for i in 0..p.num_rows() {
            if r > p.b()[i] + 1e-12 {
                return Err(i);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_recursion_exact() {
        let r = ReferenceTrajectory::circle(&[1.0, 0.5], 0.8, 30.0, 14.5, Frame::Planar, 0.1, 200)
            .unwrap();
        // p⁺ = p + δv and v⁺ = v + δ u_f/m hold exactly.
        for k in 0..r.len() - 1 {
            let x0 = &r.chi[k];
            let x1 = &r.chi[k + 1];
            for i in 0..2 {
                assert_relative_eq!(x1[i], x0[i] + 0.1 * x0[2 + i], epsilon = 1e-12);
                assert_relative_eq!(
                    x1[2 + i],
                    x0[2 + i] + 0.1 * r.u_ref[k][i] / 14.5,
                    epsilon = 1e-12
                );
            }
        }
        // Centripetal magnitude ~ m ω² R.
        let w = 2.0 * std::f64::consts::PI / 30.0;
        let expect = 14.5 * w * w * 0.8;
        assert_relative_eq!(r.u_max.sqrt(), expect, epsilon = 1e-3);
    }

    #[test]
    fn setpoint_is_static() {
        let r = ReferenceTrajectory::setpoint(&[0.0, 0.0, 0.0], Frame::Spatial, 0.1, 5);
        assert_eq!(r.u_max, 0.0);
        assert_eq!(r.chi_at(100), r.chi_at(0));
    }
}
