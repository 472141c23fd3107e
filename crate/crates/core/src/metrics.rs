//! Wrapping times from vorticity histories, their ensemble statistics, and
//! the nodal-line interference lifetime.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::{fmt_num, fmt_str};
use crate::nodal::{refine_stagnation, SymmetricPair};
use crate::trajectory::{integrate, isochrone, symmetric_targets, IsochroneStatus, TrajectoryKind, Trajectory, TrajectorySample};
use crate::wavefield::Superposition;

/// Moving-average window used before locating vorticity minima.
pub const DEFAULT_SMOOTHING: usize = 5;
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct WrappingRecord {
    pub trajectory_id: String,
    pub t_first_min: f64,
    pub t_last_min: f64,
    pub t_wrap: f64,
    /// Signed number of full turns about the wrapped stagnation curve.
    pub loop_count: i64,
    pub valid: bool,
    /// The positive region runs to the end of the trajectory; `t_wrap` is a lower bound.
    pub unbounded: bool,
}

impl WrappingRecord {
    fn invalid(id: &str) -> Self {
        Self {
            trajectory_id: id.to_owned(),
            t_first_min: f64::NAN,
            t_last_min: f64::NAN,
            t_wrap: f64::NAN,
            loop_count: 0,
            valid: false,
            unbounded: false,
        }
    }
}

/// Centered moving average; the window shrinks near the ends.
pub fn smooth(x: &[f64], window: usize) -> Vec<f64> {
    let half = window.max(1) / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(x.len() - 1);
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Indices strictly below both neighbours.
pub fn local_minima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1)).filter(|&i| x[i] < x[i - 1] && x[i] < x[i + 1]).collect()
}

/// Maximal runs of `omega > 0` as inclusive index pairs.
pub fn positive_runs(omega: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &w) in omega.iter().enumerate() {
        match (w > 0.0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, omega.len() - 1));
    }
    runs
}

/// Bracket `(first_min, last_min, unbounded)` as sample indices.
///
/// Candidates are positive-vorticity runs with a local minimum of the
/// smoothed series at or before their start. With an `anchor` index the run
/// containing it (or else the nearest one) is taken, otherwise the longest.
/// The bracket closes at the first minimum at or after the run end; when
/// there is none it is open and ends at the last sample.
pub fn wrapping_bracket(omega: &[f64], smoothing: usize, anchor: Option<usize>) -> Option<(usize, usize, bool)> {
    let smoothed = smooth(omega, smoothing);
    let minima = local_minima(&smoothed);
    let candidates = positive_runs(omega)
        .into_iter()
        .filter_map(|(a, b)| minima.iter().rev().find(|&&m| m <= a).map(|&m| (a, b, m)));
    let (_, b, first) = match anchor {
        Some(k) => candidates.min_by_key(|&(a, b, _)| (a.saturating_sub(k) + k.saturating_sub(b), a))?,
        None => candidates.max_by_key(|&(a, b, _)| (b - a, std::cmp::Reverse(a)))?,
    };
    Some(match minima.iter().find(|&&m| m >= b) {
        Some(&last) => (first, last, false),
        None => (first, omega.len() - 1, true),
    })
}

/// Wrapping record of one trajectory. Uses the stored samples as the time
/// series, so resample first when the accepted steps are sparse. For a
/// head-on pair the bracket is anchored at the maximum-interference time.
pub fn wrapping_time(sup: &Superposition, traj: &Trajectory, smoothing: usize) -> Result<WrappingRecord> {
    wrapping_record(sup, traj, "", smoothing)
}

pub fn wrapping_record(sup: &Superposition, traj: &Trajectory, id: &str, smoothing: usize) -> Result<WrappingRecord> {
    let samples = traj.ascending();
    if samples.len() < MIN_SAMPLES {
        return Err(Error::TooShort(format!("{} samples, need at least {MIN_SAMPLES}", samples.len())));
    }
    let omega: Vec<f64> = samples.iter().map(|s| s.omega).collect();
    let anchor = SymmetricPair::from_superposition(sup).ok().map(|p| {
        let tc = p.max_interference_time();
        samples.partition_point(|s| s.t < tc).min(samples.len() - 1)
    });
    let Some((i0, i1, unbounded)) = wrapping_bracket(&omega, smoothing, anchor) else {
        return Ok(WrappingRecord::invalid(id));
    };
    let (t0, t1) = (samples[i0].t, samples[i1].t);
    Ok(WrappingRecord {
        trajectory_id: id.to_owned(),
        t_first_min: t0,
        t_last_min: t1,
        t_wrap: t1 - t0,
        loop_count: loop_count(sup, &samples[i0..=i1]),
        valid: true,
        unbounded,
    })
}

/// Stagnation point nearest `z` at time `t`.
fn nearest_stagnation(sup: &Superposition, z: Complex64, t: f64) -> Option<Complex64> {
    let seeds = match SymmetricPair::from_superposition(sup) {
        Ok(pair) => {
            let d = pair.node_spacing(t).ok()?;
            let k = ((z.norm() / d).ceil() as i64) + 1;
            pair.stagnation_seeds(t, -k - 1, k).ok()?
        }
        Err(_) => vec![z],
    };
    seeds
        .into_iter()
        .filter_map(|s| refine_stagnation(sup, s, t).ok())
        .map(|p| p.z)
        .min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm()))
}

/// Net turns of `z(t)` about the stagnation curve it is closest to at the
/// middle of the window, with the curve tracked by Newton continuation.
fn loop_count(sup: &Superposition, window: &[TrajectorySample]) -> i64 {
    let mid = window.len() / 2;
    let Some(s_mid) = nearest_stagnation(sup, window[mid].z, window[mid].t) else {
        return 0;
    };
    let track = |range: &mut dyn Iterator<Item = usize>| -> Vec<(usize, Complex64)> {
        let mut out = Vec::new();
        let mut s = s_mid;
        for i in range {
            match refine_stagnation(sup, s, window[i].t) {
                Ok(p) => {
                    s = p.z;
                    out.push((i, s));
                }
                Err(_) => break,
            }
        }
        out
    };
    let mut curve: Vec<(usize, Complex64)> = track(&mut (0..mid).rev());
    curve.reverse();
    curve.extend(track(&mut (mid..window.len())));
    let phase: f64 = curve
        .windows(2)
        .map(|w| ((window[w[1].0].z - w[1].1) / (window[w[0].0].z - w[0].1)).arg())
        .sum();
    (phase / (2.0 * PI)).trunc() as i64
}

/// Arithmetic mean of `t_wrap` over valid records.
pub fn average_wrapping_time(records: &[WrappingRecord]) -> Result<f64> {
    let valid: Vec<f64> = records.iter().filter(|r| r.valid).map(|r| r.t_wrap).collect();
    if valid.is_empty() {
        return Err(Error::EmptyEnsemble { invalid: records.len() });
    }
    Ok(valid.iter().sum::<f64>() / valid.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrappingSummary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub valid: usize,
    pub invalid: usize,
    /// Any valid record is a lower bound; `mean` then is too.
    pub unbounded: bool,
    /// Latest first minimum over valid records.
    pub window_start: f64,
    /// Earliest last minimum over valid records.
    pub window_end: f64,
}

pub fn summarize(records: &[WrappingRecord]) -> Result<WrappingSummary> {
    let mean = average_wrapping_time(records)?;
    let valid: Vec<&WrappingRecord> = records.iter().filter(|r| r.valid).collect();
    let mut t: Vec<f64> = valid.iter().map(|r| r.t_wrap).collect();
    t.sort_by(f64::total_cmp);
    let n = t.len();
    let median = if n % 2 == 1 { t[n / 2] } else { 0.5 * (t[n / 2 - 1] + t[n / 2]) };
    Ok(WrappingSummary {
        mean,
        median,
        min: t[0],
        max: t[n - 1],
        valid: n,
        invalid: records.len() - n,
        unbounded: valid.iter().any(|r| r.unbounded),
        window_start: valid.iter().map(|r| r.t_first_min).fold(f64::NEG_INFINITY, f64::max),
        window_end: valid.iter().map(|r| r.t_last_min).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub x_max: f64,
    pub step: f64,
    pub t_arrival: f64,
    pub t_launch: f64,
    /// Forward integration end used for the vorticity history. Slow wraps
    /// near a stagnation curve close only after t = 11 in the first preset.
    pub t_end: f64,
    pub tol: f64,
    /// Uniform samples per history.
    pub samples: usize,
    pub smoothing: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            x_max: 3.9,
            step: 0.05,
            t_arrival: 5.0,
            t_launch: 0.0,
            t_end: 15.0,
            tol: 1e-10,
            samples: 6001,
            smoothing: DEFAULT_SMOOTHING,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub x_arrival: f64,
    pub z_launch: Option<Complex64>,
    pub roundtrip_residual: Option<f64>,
    pub status: IsochroneStatus,
    pub record: Option<WrappingRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub members: Vec<EnsembleMember>,
    pub excluded: usize,
    pub failed: usize,
}

impl EnsembleReport {
    pub fn records(&self) -> Vec<WrappingRecord> {
        self.members.iter().filter_map(|m| m.record.clone()).collect()
    }
}

/// Isochrone launch points, each integrated forward over the full window
/// and reduced to a wrapping record.
pub fn wrapping_ensemble(sup: &Superposition, opts: &EnsembleOptions) -> Result<EnsembleReport> {
    let targets = symmetric_targets(opts.x_max, opts.step);
    let iso = isochrone(sup, TrajectoryKind::Quantum, &targets, opts.t_arrival, opts.t_launch, opts.tol)?;
    let members: Vec<EnsembleMember> = iso
        .points
        .par_iter()
        .map(|p| {
            let mut m = EnsembleMember {
                x_arrival: p.x_arrival,
                z_launch: p.z_launch,
                roundtrip_residual: p.roundtrip_residual,
                status: p.status.clone(),
                record: None,
            };
            let Some(z) = p.z_launch else { return m };
            let id = format!("x={}", fmt_num(p.x_arrival));
            let run = || -> Result<WrappingRecord> {
                let tr = integrate(sup, TrajectoryKind::Quantum, z, opts.t_launch, opts.t_end, opts.tol)?;
                wrapping_record(sup, &tr.resample(sup, opts.samples)?, &id, opts.smoothing)
            };
            match run() {
                Ok(r) => m.record = Some(r),
                Err(e) => m.status = IsochroneStatus::Failed(e.kind()),
            }
            m
        })
        .collect();
    let failed = members.iter().filter(|m| matches!(m.status, IsochroneStatus::Failed(_))).count();
    Ok(EnsembleReport { excluded: iso.excluded(), failed, members })
}

/// Times at which the nodal line passes two threshold angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeWindow {
    pub theta_enter: f64,
    pub theta_exit: f64,
    pub t_enter: f64,
    /// `+inf` when the line never reaches `theta_exit`.
    pub t_exit: f64,
    pub lifetime: f64,
}

pub const DEFAULT_THETA_ENTER_DEG: f64 = -10.0;
pub const DEFAULT_THETA_EXIT_DEG: f64 = 10.0;

/// Angles in radians.
pub fn interference_lifetime(pair: &SymmetricPair, theta_enter: f64, theta_exit: f64) -> Result<LifetimeWindow> {
    if !(theta_enter < theta_exit) {
        return Err(Error::InvalidParameter(format!(
            "theta_enter ({theta_enter}) must be below theta_exit ({theta_exit})"
        )));
    }
    let t_enter = pair.time_at_angle(theta_enter)?.ok_or(Error::NeverEnters(theta_enter.to_degrees()))?;
    let t_exit = pair.time_at_angle(theta_exit)?.unwrap_or(f64::INFINITY);
    Ok(LifetimeWindow { theta_enter, theta_exit, t_enter, t_exit, lifetime: t_exit - t_enter })
}

/// TOML-compatible key-value summary: ensemble aggregates, then one table
/// per member. Unbounded or missing values are written as `nan`.
pub fn write_summary<W: Write>(
    mut w: W,
    report: &EnsembleReport,
    summary: Option<&WrappingSummary>,
    lifetime: Option<&LifetimeWindow>,
) -> std::io::Result<()> {
    writeln!(w, "[ensemble]")?;
    writeln!(w, "targets = {}", report.members.len())?;
    writeln!(w, "excluded = {}", report.excluded)?;
    writeln!(w, "failed = {}", report.failed)?;
    if let Some(s) = summary {
        writeln!(w, "valid = {}", s.valid)?;
        writeln!(w, "invalid = {}", s.invalid)?;
        writeln!(w, "mean_wrap = {}", fmt_num(s.mean))?;
        writeln!(w, "median_wrap = {}", fmt_num(s.median))?;
        writeln!(w, "min_wrap = {}", fmt_num(s.min))?;
        writeln!(w, "max_wrap = {}", fmt_num(s.max))?;
        writeln!(w, "unbounded = {}", s.unbounded)?;
        writeln!(w, "window_start = {}", fmt_num(s.window_start))?;
        writeln!(w, "window_end = {}", fmt_num(s.window_end))?;
    }
    if let Some(l) = lifetime {
        writeln!(w, "\n[lifetime]")?;
        writeln!(w, "theta_enter_deg = {}", fmt_num(l.theta_enter.to_degrees()))?;
        writeln!(w, "theta_exit_deg = {}", fmt_num(l.theta_exit.to_degrees()))?;
        writeln!(w, "t_enter = {}", fmt_num(l.t_enter))?;
        writeln!(w, "t_exit = {}", fmt_num(l.t_exit))?;
        writeln!(w, "lifetime = {}", fmt_num(l.lifetime))?;
    }
    for m in &report.members {
        writeln!(w, "\n[[member]]")?;
        writeln!(w, "x_arrival = {}", fmt_num(m.x_arrival))?;
        let status = match &m.status {
            IsochroneStatus::Ok => "ok",
            IsochroneStatus::Excluded => "excluded",
            IsochroneStatus::Failed(k) => k,
        };
        writeln!(w, "status = {}", fmt_str(status))?;
        if let Some(z) = m.z_launch {
            writeln!(w, "re_launch = {}", fmt_num(z.re))?;
            writeln!(w, "im_launch = {}", fmt_num(z.im))?;
        }
        if let Some(r) = m.roundtrip_residual {
            writeln!(w, "roundtrip_residual = {}", fmt_num(r))?;
        }
        if let Some(r) = &m.record {
            writeln!(w, "valid = {}", r.valid)?;
            writeln!(w, "t_first_min = {}", fmt_num(r.t_first_min))?;
            writeln!(w, "t_last_min = {}", fmt_num(r.t_last_min))?;
            writeln!(w, "t_wrap = {}", fmt_num(r.t_wrap))?;
            writeln!(w, "loop_count = {}", r.loop_count)?;
            writeln!(w, "unbounded = {}", r.unbounded)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn rec(t_wrap: f64, valid: bool) -> WrappingRecord {
        WrappingRecord {
            trajectory_id: String::new(),
            t_first_min: 1.0,
            t_last_min: 1.0 + t_wrap,
            t_wrap,
            loop_count: 1,
            valid,
            unbounded: false,
        }
    }

    #[test]
    fn smoothing_and_minima() {
        assert_eq!(smooth(&[1.0, 2.0, 3.0], 1), vec![1.0, 2.0, 3.0]);
        let s = smooth(&[0.0, 0.0, 5.0, 0.0, 0.0], 5);
        assert_eq!(s[2], 1.0);
        assert_eq!(s[0], 5.0 / 3.0);
        assert_eq!(local_minima(&[3.0, 1.0, 2.0, 0.5, 0.5, 4.0]), vec![1]);
    }

    #[test]
    fn runs_of_positive_vorticity() {
        assert_eq!(positive_runs(&[-1.0, 1.0, 2.0, -1.0, 3.0]), vec![(1, 2), (4, 4)]);
        assert!(positive_runs(&[-1.0, 0.0]).is_empty());
    }

    #[test]
    fn bracket_run_selection() {
        // run at the start has no minimum before it and is skipped
        let dip = |i: usize, c: usize| -1.0 + 0.1 * (i as f64 - c as f64).abs();
        let w: Vec<f64> = (0..90)
            .map(|i| match i {
                0..=9 => 1.0 - 0.05 * i as f64,
                10..=19 => dip(i, 15),
                20..=59 => 0.5,
                60..=69 => dip(i, 65),
                70..=79 => 0.2,
                _ => dip(i, 85),
            })
            .collect();
        assert_eq!(wrapping_bracket(&w, 1, None), Some((15, 65, false)));
        assert_eq!(wrapping_bracket(&w, 1, Some(40)), Some((15, 65, false)));
        assert_eq!(wrapping_bracket(&w, 1, Some(75)), Some((65, 85, false)));
        // anchor inside a dip picks the nearest run
        assert_eq!(wrapping_bracket(&w, 1, Some(63)), Some((15, 65, false)));
    }

    #[test]
    fn bracket_unbounded_when_run_reaches_end() {
        let w: Vec<f64> = (0..50).map(|i| if i < 10 { -(i as f64) } else { 1.0 + i as f64 }).collect();
        let (a, b, unbounded) = wrapping_bracket(&w, 1, Some(30)).unwrap();
        assert_eq!((a, b), (9, 49));
        assert!(unbounded);
        assert!(wrapping_bracket(&[-1.0; 20], 5, None).is_none());
    }

    #[test]
    fn average_examples() {
        assert_eq!(average_wrapping_time(&[rec(2.5, true)]).unwrap(), 2.5);
        assert_eq!(average_wrapping_time(&[rec(1.0, true), rec(3.0, true), rec(9.0, false)]).unwrap(), 2.0);
        assert!(matches!(average_wrapping_time(&[rec(1.0, false)]), Err(Error::EmptyEnsemble { invalid: 1 })));
        let s = summarize(&[rec(1.0, true), rec(3.0, true), rec(2.0, true), rec(7.0, false)]).unwrap();
        assert_eq!((s.median, s.min, s.max, s.valid, s.invalid), (2.0, 1.0, 3.0, 3, 1));
    }

    #[test]
    fn lifetime_windows() {
        let deg = PI / 180.0;
        let c1 = SymmetricPair::from_superposition(&Superposition::symmetric_pair(10.0, 2.0, SQRT_2).unwrap()).unwrap();
        let w = interference_lifetime(&c1, -10.0 * deg, 10.0 * deg).unwrap();
        assert!((w.t_enter - 3.52).abs() < 0.02 && (w.t_exit - 7.32).abs() < 0.02);
        assert!((w.lifetime - 3.8).abs() < 0.04);
        let c2 = SymmetricPair::from_superposition(&Superposition::symmetric_pair(5.0, 1.0, SQRT_2 / 4.0).unwrap()).unwrap();
        let w = interference_lifetime(&c2, -10.0 * deg, 10.0 * deg).unwrap();
        assert!((w.t_enter - 1.09).abs() < 0.02);
        assert_eq!(w.t_exit, f64::INFINITY);
        assert_eq!(w.lifetime, f64::INFINITY);
        let w = interference_lifetime(&c1, c1.initial_angle().unwrap(), 0.0).unwrap();
        assert_eq!(w.t_enter, 0.0);
        assert!(matches!(interference_lifetime(&c2, 5.0 * deg, 10.0 * deg), Err(Error::NeverEnters(_))));
        assert!(interference_lifetime(&c1, 0.1, -0.1).is_err());
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let sup = Superposition::symmetric_pair(10.0, 2.0, SQRT_2).unwrap();
        let tr = integrate(&sup, TrajectoryKind::Quantum, Complex64::new(-1.0, 0.2), 0.0, 0.5, 1e-6).unwrap();
        assert!(matches!(wrapping_time(&sup, &tr, 5), Err(Error::TooShort(_))));
    }
}
