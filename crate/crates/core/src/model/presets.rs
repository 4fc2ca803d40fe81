//! Built-in spacecraft presets: the 2-D free-flyer and the 3-D spacecraft,
//! with the published inertial properties and allocation matrices.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::{Frame, SpacecraftParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    #[serde(rename = "atmos2d")]
    Atmos2d,
    #[serde(rename = "spacecraft3d")]
    Spacecraft3d,
}

impl std::str::FromStr for PresetName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "atmos2d" => Ok(PresetName::Atmos2d),
            "spacecraft3d" => Ok(PresetName::Spacecraft3d),
            other => Err(format!("unknown preset '{other}'")),
        }
    }
}

impl std::fmt::Display for PresetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PresetName::Atmos2d => write!(f, "atmos2d"),
            PresetName::Spacecraft3d => write!(f, "spacecraft3d"),
        }
    }
}

/// Returns the spacecraft parameters and a human-readable description.
pub fn preset(name: PresetName) -> (SpacecraftParams, &'static str) {
    match name {
        PresetName::Atmos2d => {
            let d = 0.12;
            #[rustfmt::skip]
            let alloc = DMatrix::from_row_slice(3, 8, &[
                1.0, -1.0,  1.0, -1.0,  0.0,  0.0,  0.0,  0.0,
                0.0,  0.0,  0.0,  0.0,  1.0, -1.0,  1.0, -1.0,
                  d,   -d,   -d,    d,    d,   -d,   -d,    d,
            ]);
            (
                SpacecraftParams {
                    frame: Frame::Planar,
                    mass: 14.5,
                    inertia: Vector3::new(0.370, 0.370, 0.370),
                    alloc,
                    f_max: 1.75,
                    delta: 0.1,
                },
                "2D free-flyer, eight thrusters, lever arm 0.12 m",
            )
        }
        PresetName::Spacecraft3d => {
            let a = 0.12;
            let b = 0.09;
            let c = 0.05;
            #[rustfmt::skip]
            let alloc = DMatrix::from_row_slice(6, 16, &[
                -1.0, -1.0,  1.0,  1.0, -1.0, -1.0,  1.0,  1.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,
                 0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0, -1.0, -1.0,  1.0,  1.0,  0.0,  0.0,  0.0,  0.0,
                 0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0, -1.0,  1.0, -1.0,  1.0,
                 0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,   -a,    a,    a,   -a,
                  -c,    c,    c,   -c,   -c,    c,    c,   -c,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0,
                   a,    a,   -a,   -a,   -a,   -a,    a,    a,   -b,    b,    b,   -b,  0.0,  0.0,  0.0,  0.0,
            ]);
            (
                SpacecraftParams {
                    frame: Frame::Spatial,
                    mass: 16.8,
                    inertia: Vector3::new(0.2, 0.3, 0.25),
                    alloc,
                    f_max: 1.75,
                    delta: 0.1,
                },
                "3D spacecraft, sixteen thrusters, lever arms 0.12/0.09/0.05 m",
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in [PresetName::Atmos2d, PresetName::Spacecraft3d] {
            let (p, _) = preset(name);
            p.validate().unwrap();
        }
    }

    #[test]
    fn alloc_shapes() {
        assert_eq!(preset(PresetName::Atmos2d).0.alloc.shape(), (3, 8));
        assert_eq!(preset(PresetName::Spacecraft3d).0.alloc.shape(), (6, 16));
    }
}
