//! Continuous rigid-body spacecraft dynamics, quaternion kinematics,
//! thruster allocation and the fault-induced input sets.

mod allocation;
mod dynamics;
mod presets;
pub mod quat;

pub use allocation::{
    allocate_thrusters, residual_input_set, thruster_box, ChebyshevReadings, ResidualInputSet,
};
pub use dynamics::{continuous_derivative, simulate_step, RigidStateDerivative};
pub use presets::{preset, PresetName};

use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("controllability assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("wrench cannot be realized by the thrusters: {0}")]
    AllocationFailure(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Whether the model lives in the plane (free-flyer) or in full 3-D space.
///
/// Planar craft use a reduced wrench (f_x, f_y, τ_z) and reduced error
/// coordinates; the plant integration is always the full rigid body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Planar,
    Spatial,
}

impl Frame {
    /// Translational force components in the control wrench.
    pub fn n_force(&self) -> usize {
        match self {
            Frame::Planar => 2,
            Frame::Spatial => 3,
        }
    }

    /// Torque components in the control wrench.
    pub fn n_torque(&self) -> usize {
        match self {
            Frame::Planar => 1,
            Frame::Spatial => 3,
        }
    }

    pub fn n_wrench(&self) -> usize {
        self.n_force() + self.n_torque()
    }

    /// Dimension of the orbit-center error block (position + velocity).
    pub fn n_pos_err(&self) -> usize {
        2 * self.n_force()
    }

    /// Full tracking-error dimension.
    pub fn n_err(&self) -> usize {
        self.n_pos_err() + self.n_torque()
    }
}

/// Physical spacecraft parameters. The allocation matrix is given in the
/// control-wrench coordinates of the frame: rows (f_x, f_y, τ_z) for
/// planar craft, the full six-row wrench for spatial ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacecraftParams {
    pub frame: Frame,
    /// Mass in kg.
    pub mass: f64,
    /// Principal-axis inertia diagonal in kg·m² (planar uses only the z entry).
    pub inertia: Vector3<f64>,
    /// Allocation matrix (n_wrench × n_thrusters), forces N, torques N·m.
    #[serde(
        serialize_with = "crate::geometry::serde_helpers::ser_matrix",
        deserialize_with = "crate::geometry::serde_helpers::de_matrix"
    )]
    pub alloc: DMatrix<f64>,
    /// Per-thruster maximum force in N.
    pub f_max: f64,
    /// Controller sampling period in s.
    pub delta: f64,
}

impl SpacecraftParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.mass <= 0.0 {
            return Err(ModelError::InvalidParams("mass must be positive".into()));
        }
        if self.inertia.iter().any(|&j| j <= 0.0) {
            return Err(ModelError::InvalidParams(
                "inertia entries must be positive".into(),
            ));
        }
        if self.delta <= 0.0 || self.f_max <= 0.0 {
            return Err(ModelError::InvalidParams(
                "delta and f_max must be positive".into(),
            ));
        }
        if self.alloc.nrows() != self.frame.n_wrench() {
            return Err(ModelError::InvalidParams(format!(
                "allocation matrix has {} rows, frame needs {}",
                self.alloc.nrows(),
                self.frame.n_wrench()
            )));
        }
        if self.alloc.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParams(
                "allocation matrix must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn n_thrusters(&self) -> usize {
        self.alloc.ncols()
    }

    /// Inertia diagonal restricted to the frame's torque coordinates.
    pub fn inertia_diag(&self) -> DVector<f64> {
        match self.frame {
            Frame::Planar => DVector::from_vec(vec![self.inertia[2]]),
            Frame::Spatial => {
                DVector::from_vec(vec![self.inertia[0], self.inertia[1], self.inertia[2]])
            }
        }
    }

    /// Lift a control wrench into the full body wrench.
    pub fn wrench_from_control(&self, u: &DVector<f64>) -> BodyWrench {
        match self.frame {
            Frame::Planar => BodyWrench {
                force: Vector3::new(u[0], u[1], 0.0),
                torque: Vector3::new(0.0, 0.0, u[2]),
            },
            Frame::Spatial => BodyWrench {
                force: Vector3::new(u[0], u[1], u[2]),
                torque: Vector3::new(u[3], u[4], u[5]),
            },
        }
    }
}

/// Known thruster failures: each failed thruster is fixed at a constant
/// value within its physical range.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FaultMap {
    pub stuck: Vec<(usize, f64)>,
}

impl FaultMap {
    pub fn none() -> Self {
        FaultMap { stuck: Vec::new() }
    }

    pub fn stuck_at(indices: &[usize], value: f64) -> Self {
        FaultMap {
            stuck: indices.iter().map(|&i| (i, value)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.stuck.is_empty()
    }

    pub fn validate(&self, params: &SpacecraftParams) -> Result<(), ModelError> {
        let mut seen = std::collections::BTreeSet::new();
        for &(i, v) in &self.stuck {
            if i >= params.n_thrusters() {
                return Err(ModelError::InvalidParams(format!(
                    "fault index {i} out of range"
                )));
            }
            if !seen.insert(i) {
                return Err(ModelError::InvalidParams(format!(
                    "duplicate fault index {i}"
                )));
            }
            if !(0.0..=params.f_max).contains(&v) {
                return Err(ModelError::InvalidParams(format!(
                    "stuck value {v} outside [0, {}]",
                    params.f_max
                )));
            }
        }
        Ok(())
    }

    pub fn value_of(&self, i: usize) -> Option<f64> {
        self.stuck.iter().find(|&&(j, _)| j == i).map(|&(_, v)| v)
    }
}

/// Spacecraft state: position and velocity in the global frame, attitude
/// quaternion (scalar-last, global-to-body) and body angular velocity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Unit quaternion (x, y, z, w); renormalized after every integration step.
    pub quat: Vector4<f64>,
    pub omega: Vector3<f64>,
}

impl RigidState {
    pub fn at_rest() -> Self {
        RigidState {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            quat: quat::IDENTITY,
            omega: Vector3::zeros(),
        }
    }

    pub fn quat_norm_error(&self) -> f64 {
        (self.quat.norm() - 1.0).abs()
    }
}

/// Body-frame wrench `u_r = [fᵀ τᵀ]ᵀ`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BodyWrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl BodyWrench {
    pub fn zero() -> Self {
        BodyWrench {
            force: Vector3::zeros(),
            torque: Vector3::zeros(),
        }
    }
}
