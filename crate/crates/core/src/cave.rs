//! Regular (x, y, t) sampling of `|Psi|` and `|dPsi/dz|` and a
//! self-describing volume file for external isosurface tools.
//!
//! File layout: ASCII header lines terminated by `end_header\n`, then the
//! `psi_abs` block followed by the `dpsi_abs` block, each `nx * ny * nt`
//! values with x varying fastest, then y, then t. Binary payloads are
//! little-endian IEEE-754 `f32`; text payloads hold one value per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::wavefield::Superposition;

pub const DEFAULT_POINT_BUDGET: u128 = 100_000_000;
const MAGIC: &str = "qcave-volume 1";

/// Uniform axis of `count` points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let a = Self { min, max, count };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.count == 0 || self.max < self.min {
            return Err(Error::InvalidParameter(format!("bad axis {} .. {} x {}", self.min, self.max, self.count)));
        }
        if self.count == 1 && self.min != self.max {
            return Err(Error::InvalidParameter("single-point axis needs min == max".into()));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        if self.count > 1 { (self.max - self.min) / (self.count - 1) as f64 } else { 0.0 }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count { self.max } else { self.min + self.step() * i as f64 }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: Axis,
    pub y: Axis,
    pub t: Axis,
    pub iso_psi: f64,
    pub iso_dpsi: f64,
}

impl GridSpec {
    pub fn points(&self) -> u128 {
        self.x.count as u128 * self.y.count as u128 * self.t.count as u128
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaveGrid {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub t_axis: Axis,
    /// Flattened with x fastest, then y, then t.
    pub psi_abs: Vec<f64>,
    pub dpsi_abs: Vec<f64>,
    pub iso_psi: f64,
    pub iso_dpsi: f64,
}

impl CaveGrid {
    pub fn index(&self, ix: usize, iy: usize, it: usize) -> usize {
        ix + self.x_axis.count * (iy + self.y_axis.count * it)
    }

    pub fn psi_at(&self, ix: usize, iy: usize, it: usize) -> f64 {
        self.psi_abs[self.index(ix, iy, it)]
    }

    pub fn dpsi_at(&self, ix: usize, iy: usize, it: usize) -> f64 {
        self.dpsi_abs[self.index(ix, iy, it)]
    }
}

pub fn sample_cave(sup: &Superposition, spec: &GridSpec) -> Result<CaveGrid> {
    sample_cave_with_budget(sup, spec, DEFAULT_POINT_BUDGET)
}

pub fn sample_cave_with_budget(sup: &Superposition, spec: &GridSpec, budget: u128) -> Result<CaveGrid> {
    for a in [spec.x, spec.y, spec.t] {
        a.validate()?;
    }
    let points = spec.points();
    if points > budget {
        return Err(Error::GridTooLarge { points, budget });
    }
    let (nx, ny) = (spec.x.count, spec.y.count);
    let plane = nx * ny;
    let values: Vec<(f64, f64)> = (0..points as usize)
        .into_par_iter()
        .with_min_len(plane.min(4096))
        .map(|k| {
            let z = Complex64::new(spec.x.value(k % nx), spec.y.value((k / nx) % ny));
            let t = spec.t.value(k / plane);
            let psi = sup.value(z, t).norm();
            let dpsi = sup.dz(z, t).norm();
            (psi, dpsi)
        })
        .collect();
    let (psi_abs, dpsi_abs) = values.into_iter().unzip();
    Ok(CaveGrid {
        x_axis: spec.x,
        y_axis: spec.y,
        t_axis: spec.t,
        psi_abs,
        dpsi_abs,
        iso_psi: spec.iso_psi,
        iso_dpsi: spec.iso_dpsi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeFormat {
    Text,
    Binary,
}

impl VolumeFormat {
    fn name(self) -> &'static str {
        match self {
            VolumeFormat::Text => "text",
            VolumeFormat::Binary => "binary",
        }
    }
}

impl std::str::FromStr for VolumeFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(VolumeFormat::Text),
            "binary" => Ok(VolumeFormat::Binary),
            _ => Err(Error::InvalidParameter(format!("unknown volume format {s:?}"))),
        }
    }
}

/// Write the header and payload. `scenario_echo` is copied into the header,
/// each line prefixed with `scenario `.
pub fn write_volume<W: Write>(mut w: W, grid: &CaveGrid, format: VolumeFormat, scenario_echo: &str) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "format {}", format.name())?;
    for (name, a) in [("x", grid.x_axis), ("y", grid.y_axis), ("t", grid.t_axis)] {
        writeln!(w, "axis {name} {} {} {}", fmt_num(a.min), fmt_num(a.max), a.count)?;
    }
    writeln!(w, "iso_psi {}", fmt_num(grid.iso_psi))?;
    writeln!(w, "iso_dpsi {}", fmt_num(grid.iso_dpsi))?;
    writeln!(w, "fields psi_abs dpsi_abs")?;
    writeln!(w, "order x y t")?;
    for line in scenario_echo.lines() {
        writeln!(w, "scenario {line}")?;
    }
    writeln!(w, "end_header")?;
    for field in [&grid.psi_abs, &grid.dpsi_abs] {
        match format {
            VolumeFormat::Binary => {
                for &v in field.iter() {
                    w.write_all(&(v as f32).to_le_bytes())?;
                }
            }
            VolumeFormat::Text => {
                for &v in field.iter() {
                    writeln!(w, "{}", fmt_num(v))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn export_volume(grid: &CaveGrid, path: &Path, format: VolumeFormat, scenario_echo: &str) -> Result<()> {
    write_volume(BufWriter::new(File::create(path)?), grid, format, scenario_echo)
}

/// Parsed volume file.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub format: VolumeFormat,
    pub grid: CaveGrid,
    pub scenario_echo: String,
}

pub fn read_volume<R: Read>(r: R) -> Result<Volume> {
    let mut r = BufReader::new(r);
    let bad = |m: &str| Error::Format(m.to_owned());
    let mut line = String::new();
    let mut next = |r: &mut BufReader<R>| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::Format("unexpected end of header".into()));
        }
        Ok(line.trim_end_matches('\n').to_owned())
    };
    if next(&mut r)? != MAGIC {
        return Err(bad("missing magic line"));
    }
    let mut format = None;
    let mut axes = [None; 3];
    let (mut iso_psi, mut iso_dpsi) = (f64::NAN, f64::NAN);
    let mut echo = String::new();
    loop {
        let l = next(&mut r)?;
        if l == "end_header" {
            break;
        }
        let (key, rest) = l.split_once(' ').unwrap_or((l.as_str(), ""));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
        match key {
            "format" => format = Some(rest.parse::<VolumeFormat>().map_err(|_| bad("bad format"))?),
            "axis" => {
                let f: Vec<&str> = rest.split(' ').collect();
                let [name, min, max, count] = f[..] else { return Err(bad("bad axis line")) };
                let i = ["x", "y", "t"].iter().position(|&n| n == name).ok_or_else(|| bad("bad axis name"))?;
                let count = count.parse().map_err(|_| bad("bad axis count"))?;
                axes[i] = Some(Axis::new(num(min)?, num(max)?, count).map_err(|e| bad(&e.to_string()))?);
            }
            "iso_psi" => iso_psi = num(rest)?,
            "iso_dpsi" => iso_dpsi = num(rest)?,
            "scenario" => {
                echo.push_str(rest);
                echo.push('\n');
            }
            "fields" | "order" => {}
            _ => return Err(bad(&format!("unknown header key {key:?}"))),
        }
    }
    let format = format.ok_or_else(|| bad("missing format"))?;
    let [Some(x), Some(y), Some(t)] = axes else { return Err(bad("missing axis")) };
    let n = x.count * y.count * t.count;
    let mut fields = [Vec::with_capacity(n), Vec::with_capacity(n)];
    match format {
        VolumeFormat::Binary => {
            let mut buf = vec![0u8; 8 * n];
            r.read_exact(&mut buf).map_err(|_| bad("truncated payload"))?;
            for (k, chunk) in buf.chunks_exact(4).enumerate() {
                fields[k / n].push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
            }
        }
        VolumeFormat::Text => {
            for (k, l) in r.lines().enumerate() {
                let l = l?;
                if k >= 2 * n {
                    return Err(bad("trailing payload"));
                }
                fields[k / n].push(l.trim().parse::<f64>().map_err(|_| bad("bad payload value"))?);
            }
            if fields[1].len() != n {
                return Err(bad("truncated payload"));
            }
        }
    }
    let [psi_abs, dpsi_abs] = fields;
    Ok(Volume {
        format,
        grid: CaveGrid { x_axis: x, y_axis: y, t_axis: t, psi_abs, dpsi_abs, iso_psi, iso_dpsi },
        scenario_echo: echo,
    })
}
