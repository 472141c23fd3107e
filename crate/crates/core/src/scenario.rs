//! Scenario configuration: named presets and TOML scenario files.
//!
//! ```toml
//! name = "case1"
//! mass = 1.0          # optional, default 1
//! hbar = 1.0          # optional, default 1
//! iso_psi = 0.053     # optional
//! iso_dpsi = 0.106    # optional
//!
//! [[packets]]
//! x0 = -10.0
//! vp = 2.0
//! sigma0 = 1.4142135623730951
//!
//! [[packets]]
//! x0 = 10.0
//! vp = -2.0
//! sigma0 = 1.4142135623730951
//!
//! [grid]              # optional cave grid
//! x = { min = -4.0, max = 4.0, count = 161 }
//! y = { min = -3.0, max = 3.0, count = 121 }
//! t = { min = 0.0, max = 10.0, count = 201 }
//! ```

use std::f64::consts::SQRT_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cave::{Axis, GridSpec};
use crate::error::{Error, Result};
use crate::nodal::SymmetricPair;
use crate::wavefield::{GaussianPacket, Superposition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub x0: f64,
    pub vp: f64,
    pub sigma0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxes {
    pub x: Axis,
    pub y: Axis,
    pub t: Axis,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iso_psi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iso_dpsi: Option<f64>,
    pub packets: Vec<PacketSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridAxes>,
}

pub const PRESETS: [&str; 2] = ["case1", "case2"];

impl Scenario {
    /// Head-on pair with the left packet at `-x0` moving at `+vp`.
    pub fn symmetric(name: &str, x0: f64, vp: f64, sigma0: f64) -> Self {
        Self {
            name: name.to_owned(),
            mass: 1.0,
            hbar: 1.0,
            iso_psi: None,
            iso_dpsi: None,
            packets: vec![PacketSpec { x0: -x0, vp, sigma0 }, PacketSpec { x0, vp: -vp, sigma0 }],
            grid: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let axes = |x: f64, y: f64| GridAxes {
            x: Axis { min: -x, max: x, count: 161 },
            y: Axis { min: -y, max: y, count: 121 },
            t: Axis { min: 0.0, max: 10.0, count: 201 },
        };
        let (mut s, iso, grid) = match name {
            "case1" => (Self::symmetric(name, 10.0, 2.0, SQRT_2), (0.053, 0.106), axes(4.0, 3.0)),
            "case2" => (Self::symmetric(name, 5.0, 1.0, SQRT_2 / 4.0), (0.16, 0.23), axes(4.0, 1.5)),
            _ => return Err(Error::Scenario(format!("unknown preset {name:?}; expected one of {PRESETS:?}"))),
        };
        s.iso_psi = Some(iso.0);
        s.iso_dpsi = Some(iso.1);
        s.grid = Some(grid);
        Ok(s)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::Scenario(e.message().to_owned()))?;
        s.superposition()?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn superposition(&self) -> Result<Superposition> {
        let packets = self
            .packets
            .iter()
            .map(|p| GaussianPacket::with_units(p.x0, p.vp, p.sigma0, self.mass, self.hbar))
            .collect::<Result<Vec<_>>>()?;
        Superposition::new(packets)
    }

    pub fn pair(&self) -> Result<SymmetricPair> {
        SymmetricPair::from_superposition(&self.superposition()?)
    }

    /// Time at which the packet centroids meet, `x0 / vp`.
    pub fn max_interference_time(&self) -> Result<f64> {
        Ok(self.pair()?.max_interference_time())
    }

    /// Cave grid from the scenario, falling back to the `case1` viewport.
    pub fn grid_spec(&self) -> GridSpec {
        let axes = self.grid.unwrap_or(GridAxes {
            x: Axis { min: -4.0, max: 4.0, count: 161 },
            y: Axis { min: -3.0, max: 3.0, count: 121 },
            t: Axis { min: 0.0, max: 10.0, count: 201 },
        });
        GridSpec {
            x: axes.x,
            y: axes.y,
            t: axes.t,
            iso_psi: self.iso_psi.unwrap_or(f64::NAN),
            iso_dpsi: self.iso_dpsi.unwrap_or(f64::NAN),
        }
    }
}
