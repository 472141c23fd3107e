//! Complex quantum and Pólya trajectories, backward-shooting isochrones and
//! linearized motion near stagnation points.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::integrator::{self, DenseSegment, Halt, Options};
use crate::nodal::SymmetricPair;
use crate::wavefield::Superposition;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default absolute and relative integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Isochrone targets closer than this to an on-axis node are skipped.
pub const NODE_EXCLUSION: f64 = 1e-3;
/// Accepted launch-to-arrival mismatch after forward re-integration.
pub const ROUNDTRIP_TOL: f64 = 1e-6;
/// Tightest tolerance tried when retrying an isochrone target.
pub const MIN_RETRY_TOL: f64 = 1e-13;
/// Time step of the central difference used for `dp/dt`.
pub const BETA_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    /// `dz/dt = p / m`.
    Quantum,
    /// `dz/dt = conj(p) / m`.
    Polya,
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrajectoryKind::Quantum => "quantum",
            TrajectoryKind::Polya => "polya",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Completed,
    AbortedNearPole,
    StepUnderflow,
}

impl fmt::Display for TrajectoryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrajectoryStatus::Completed => "completed",
            TrajectoryStatus::AbortedNearPole => "aborted_near_pole",
            TrajectoryStatus::StepUnderflow => "step_underflow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub z: Complex64,
    pub p: Complex64,
    pub gamma: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    /// One entry per accepted step, starting with the launch point. Ordered
    /// in integration direction.
    pub samples: Vec<TrajectorySample>,
    pub launch: Complex64,
    pub t_span: (f64, f64),
    pub status: TrajectoryStatus,
    /// Smallest `|Psi|` met by any field evaluation of the integration.
    pub min_psi_seen: f64,
    segments: Vec<DenseSegment>,
}

impl Trajectory {
    /// Time reached by the integration.
    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(self.t_span.0, |s| s.t)
    }

    /// Position reached by the integration.
    pub fn end(&self) -> Complex64 {
        self.samples.last().map_or(self.launch, |s| s.z)
    }

    /// Dense-output position at `t`, or `None` outside the integrated range.
    pub fn at(&self, t: f64) -> Option<Complex64> {
        if t == self.t_span.0 {
            return Some(self.launch);
        }
        let forward = self.t_span.1 >= self.t_span.0;
        let idx = self.segments.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        self.segments.get(idx).filter(|s| s.contains(t)).map(|s| s.eval(t))
    }

    /// Copy with `n` samples evenly spaced in time over the integrated range
    /// (ascending), fields recomputed from `sup`.
    pub fn resample(&self, sup: &Superposition, n: usize) -> Result<Trajectory> {
        if n < 2 {
            return Err(Error::InvalidParameter("resampling needs at least 2 points".into()));
        }
        let (a, b) = {
            let (a, b) = (self.t_span.0, self.t_end());
            if a <= b { (a, b) } else { (b, a) }
        };
        let samples = (0..n)
            .map(|k| {
                let t = if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 };
                let z = self.at(t).ok_or_else(|| Error::InvalidParameter(format!("t = {t} outside trajectory")))?;
                sample_at(sup, z, t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { samples, ..self.clone() })
    }

    /// Samples in ascending time regardless of integration direction.
    pub fn ascending(&self) -> Vec<TrajectorySample> {
        let mut s = self.samples.clone();
        if self.t_span.1 < self.t_span.0 {
            s.reverse();
        }
        s
    }
}

fn sample_at(sup: &Superposition, z: Complex64, t: f64) -> Result<TrajectorySample> {
    let f = sup.sample(z, t)?;
    Ok(TrajectorySample { t, z, p: f.p, gamma: f.gamma_div, omega: f.omega_vort })
}

struct Refusal {
    t: f64,
    z: Complex64,
}

/// Integrate one trajectory from `(z0, t0)` to `t1` (`t1 < t0` integrates
/// backward) with `atol = rtol = tol`.
pub fn integrate(
    sup: &Superposition,
    kind: TrajectoryKind,
    z0: Complex64,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Trajectory> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let guard = |t: f64| sup.pole_guard(t).ln();
    let hbar = sup.hbar();
    let mass = sup.mass();
    let start = sup.checked(z0, t0, sup.pole_guard(t0))?;
    let mut min_ln_psi = start.ln_abs_psi();

    let rhs = |t: f64, z: Complex64| -> std::result::Result<Complex64, Refusal> {
        let e = sup.expand(z, t);
        let ln_abs = e.ln_abs_psi();
        if !(ln_abs > guard(t)) {
            return Err(Refusal { t, z });
        }
        min_ln_psi = min_ln_psi.min(ln_abs);
        let p = -I * hbar * e.log_derivative();
        Ok(match kind {
            TrajectoryKind::Quantum => p / mass,
            TrajectoryKind::Polya => p.conj() / mass,
        })
    };
    let sol = integrator::integrate(rhs, t0, z0, t1, &Options::with_tol(tol));

    let mut samples = Vec::with_capacity(sol.segments.len() + 1);
    samples.push(sample_at(sup, z0, t0)?);
    for s in &sol.segments {
        let t = s.t1();
        samples.push(sample_at(sup, s.eval(t), t)?);
    }
    let status = match sol.halt {
        None => TrajectoryStatus::Completed,
        Some(Halt::Rhs(_)) => TrajectoryStatus::AbortedNearPole,
        Some(Halt::StepUnderflow) | Some(Halt::MaxSteps) => TrajectoryStatus::StepUnderflow,
    };
    let traj = Trajectory {
        kind,
        samples,
        launch: z0,
        t_span: (t0, t1),
        status,
        min_psi_seen: min_ln_psi.exp(),
        segments: sol.segments,
    };
    match sol.halt {
        None => Ok(traj),
        Some(Halt::Rhs(r)) => Err(Error::PoleEncounter { t: r.t, z: r.z, partial: Box::new(traj) }),
        Some(_) => Err(Error::StepUnderflow { t: sol.t, partial: Box::new(traj) }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IsochroneStatus {
    Ok,
    /// Target within `NODE_EXCLUSION` of an on-axis node.
    Excluded,
    /// Backward or forward integration failed; carries the error kind.
    Failed(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsochronePoint {
    pub x_arrival: f64,
    pub z_launch: Option<Complex64>,
    pub roundtrip_residual: Option<f64>,
    pub status: IsochroneStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsochroneResult {
    pub points: Vec<IsochronePoint>,
    pub t_launch: f64,
    pub t_arrival: f64,
}

impl IsochroneResult {
    pub fn launched(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.points.iter().filter_map(|p| p.z_launch.map(|z| (p.x_arrival, z)))
    }

    pub fn excluded(&self) -> usize {
        self.points.iter().filter(|p| p.status == IsochroneStatus::Excluded).count()
    }
}

/// Real parts of on-axis nodes when `t` is the maximal-interference time of
/// a symmetric pair, otherwise empty.
pub fn on_axis_nodes(sup: &Superposition, t: f64, x_max: f64) -> Vec<f64> {
    let Ok(pair) = SymmetricPair::from_superposition(sup) else {
        return Vec::new();
    };
    if pair.vp == 0.0 || (t - pair.max_interference_time()).abs() > 1e-12 * (1.0 + t.abs()) {
        return Vec::new();
    }
    let Ok(range) = pair.node_range_within(t, x_max + NODE_EXCLUSION) else {
        return Vec::new();
    };
    range.filter_map(|n| pair.node_position(n, t).ok()).map(|z| z.re).collect()
}

/// Evenly spaced targets `-x_max, -x_max + step, ..., x_max`.
pub fn symmetric_targets(x_max: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * x_max / step).round() as i64;
    (0..=n).map(|k| -x_max + step * k as f64).map(|x| (x * 1e10).round() / 1e10).collect()
}

/// Shoot backward from `(x, t_arrival)` to `t_launch` for every target, then
/// re-integrate forward to measure the round-trip mismatch.
pub fn isochrone(
    sup: &Superposition,
    kind: TrajectoryKind,
    x_targets: &[f64],
    t_arrival: f64,
    t_launch: f64,
    tol: f64,
) -> Result<IsochroneResult> {
    let x_max = x_targets.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let nodes = on_axis_nodes(sup, t_arrival, x_max);
    let points = x_targets
        .par_iter()
        .map(|&x| {
            if nodes.iter().any(|n| (x - n).abs() < NODE_EXCLUSION) {
                return IsochronePoint { x_arrival: x, z_launch: None, roundtrip_residual: None, status: IsochroneStatus::Excluded };
            }
            let shoot_at = |tol: f64| -> Result<(Complex64, f64)> {
                let back = integrate(sup, kind, Complex64::new(x, 0.0), t_arrival, t_launch, tol)?;
                let z_launch = back.end();
                let fwd = integrate(sup, kind, z_launch, t_launch, t_arrival, tol)?;
                Ok((z_launch, (fwd.end() - x).norm()))
            };
            // paths grazing a pole amplify local error; tighten until the
            // round trip closes
            let shoot = || -> Result<(Complex64, f64)> {
                let mut tol = tol;
                loop {
                    let (z, r) = shoot_at(tol)?;
                    if r < ROUNDTRIP_TOL {
                        return Ok((z, r));
                    }
                    tol *= 0.1;
                    if tol < MIN_RETRY_TOL {
                        return Err(Error::RoundTrip(r));
                    }
                }
            };
            match shoot() {
                Ok((z, r)) => IsochronePoint { x_arrival: x, z_launch: Some(z), roundtrip_residual: Some(r), status: IsochroneStatus::Ok },
                Err(e) => IsochronePoint { x_arrival: x, z_launch: None, roundtrip_residual: None, status: IsochroneStatus::Failed(e.kind()) },
            }
        })
        .collect();
    Ok(IsochroneResult { points, t_launch, t_arrival })
}

/// First-order Taylor data of the momentum function at a stagnation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagnationExpansion {
    pub z0: Complex64,
    pub t0: f64,
    /// `dp/dz` at `(z0, t0)`.
    pub alpha: Complex64,
    /// `dp/dt` at `(z0, t0)`.
    pub beta: Complex64,
    pub mass: f64,
}

pub fn stagnation_expansion(sup: &Superposition, z0: Complex64, t0: f64) -> Result<StagnationExpansion> {
    stagnation_expansion_with_step(sup, z0, t0, BETA_STEP)
}

pub fn stagnation_expansion_with_step(sup: &Superposition, z0: Complex64, t0: f64, h: f64) -> Result<StagnationExpansion> {
    let p = sup.qmf(z0, t0)?;
    if p.norm() > 1e-8 {
        return Err(Error::NotStagnation { z: z0, t: t0, p_abs: p.norm() });
    }
    let alpha = sup.qmf_dz(z0, t0)?.dp;
    let beta = (sup.qmf(z0, t0 + h)? - sup.qmf(z0, t0 - h)?) / (2.0 * h);
    Ok(StagnationExpansion { z0, t0, alpha, beta, mass: sup.mass() })
}

/// Closed-form solution of `m dz/dt = alpha (z - z0) + beta (t - t0)`
/// started at `z_start`, evaluated `dt` later.
pub fn approx_trajectory(exp: &StagnationExpansion, z_start: Complex64, dt: f64) -> Result<Complex64> {
    if exp.alpha.norm() < 1e-12 {
        return Err(Error::AlphaZero(exp.alpha.norm()));
    }
    let a = exp.alpha * dt / exp.mass;
    let growth = a.exp();
    let w = (z_start - exp.z0) * growth + exp.beta * exp.mass / (exp.alpha * exp.alpha) * (growth - 1.0 - a);
    Ok(exp.z0 + w)
}

/// Rows `t re_z im_z re_p im_p gamma omega`, one per sample.
pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> std::io::Result<()> {
    writeln!(w, "# t re_z im_z re_p im_p gamma omega")?;
    for s in &traj.samples {
        writeln!(
            w,
            "{} {} {} {} {} {} {}",
            fmt_num(s.t),
            fmt_num(s.z.re),
            fmt_num(s.z.im),
            fmt_num(s.p.re),
            fmt_num(s.p.im),
            fmt_num(s.gamma),
            fmt_num(s.omega)
        )?;
    }
    Ok(())
}

/// One line per trajectory file: `file kind re_launch im_launch t0 t1 status samples min_psi`.
pub fn write_manifest<W: Write>(mut w: W, entries: &[(String, &Trajectory)]) -> std::io::Result<()> {
    writeln!(w, "# file kind re_launch im_launch t0 t1 status samples min_psi")?;
    for (file, t) in entries {
        writeln!(
            w,
            "{} {} {} {} {} {} {} {} {}",
            file,
            t.kind,
            fmt_num(t.launch.re),
            fmt_num(t.launch.im),
            fmt_num(t.t_span.0),
            fmt_num(t.t_end()),
            t.status,
            t.samples.len(),
            fmt_num(t.min_psi_seen)
        )?;
    }
    Ok(())
}
