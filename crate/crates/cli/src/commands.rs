//! One function per subcommand. Each writes space-separated data files with
//! a `#` header line naming the columns; numbers carry 12 significant
//! digits so repeated runs are byte-identical.

use std::f64::consts::PI;
use std::io::Write;

use anyhow::{bail, Result};
use qcave::format::fmt_num;
use qcave::metrics::{self, EnsembleOptions};
use qcave::nodal::{self, pole_local_div_vort, refine_node, refine_stagnation};
use qcave::trajectory::{self, approx_trajectory, integrate, isochrone, stagnation_expansion, symmetric_targets, IsochroneStatus, DEFAULT_TOL};
use qcave::{cave, Axis, Complex64, Error, Scenario, Superposition, Trajectory, TrajectoryKind};

use crate::output::Outputs;
use crate::{Command, Common};

/// Column layout of the files each subcommand writes.
pub fn schema(cmd: &Command) -> &'static str {
    match cmd {
        Command::Fields { .. } => {
            "fields.dat: t x y re_psi im_psi abs_psi re_p im_p gamma omega re_q im_q pvf_x pvf_y s_real s_imag\n\
             # rows at nodes carry nan from re_p on\n"
        }
        Command::Nodal { .. } => {
            "nodal_angle.dat: t theta_deg omega_rate spacing\n\
             nodes.dat: t n re_z im_z\n\
             lines.dat: n slope intercept\n\
             points.dat: t kind n re_z im_z residual\n\
             angles.dat: theta_deg t\n\
             # t = inf when the nodal line never reaches the angle\n"
        }
        Command::Trajectories { .. } => {
            "manifest.dat: file kind re_launch im_launch t0 t1 status samples min_psi\n\
             traj_NNN.dat: t re_z im_z re_p im_p gamma omega\n"
        }
        Command::Isochrone { .. } => "isochrone.dat: x_arrival status re_launch im_launch roundtrip_residual\n",
        Command::Metrics { .. } => {
            "metrics.toml: [ensemble] aggregates, [lifetime], one [[member]] table per target\n\
             wrapping.dat: x_arrival t_first_min t_last_min t_wrap loop_count valid unbounded\n"
        }
        Command::Cave { .. } => "cave.vol: text header ending in end_header, then psi_abs and dpsi_abs blocks, x fastest\n",
        Command::Density { .. } => "density.dat: t x density\n",
        Command::Divvort { .. } => "divvort.dat: t re_z im_z re_p im_p gamma omega\n",
        Command::Stagnation { .. } => "stagnation.dat: t re_dp im_dp gamma omega\n",
        Command::Approx { .. } => "approx.dat: id re_start im_start t re_exact im_exact re_approx im_approx\n",
        Command::Polelocal { .. } => "polelocal.dat: line s x y gamma omega\n",
    }
}

fn tol_or(common: &Common, default: f64) -> f64 {
    common.tol.unwrap_or(default)
}

fn max_interference_time(sc: &Scenario) -> Result<f64> {
    Ok(sc.max_interference_time()?)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    let a = Axis::new(lo, hi, n)?;
    Ok(a.values().collect())
}

fn row(w: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    let cols: Vec<String> = values.iter().map(|&v| fmt_num(v)).collect();
    writeln!(w, "{}", cols.join(" "))
}

pub fn execute(cmd: &Command, common: &Common, sc: &Scenario, out: &mut Outputs) -> Result<()> {
    let sup = sc.superposition()?;
    match cmd {
        &Command::Fields { t, x_min, x_max, nx, y_min, y_max, ny } => {
            let t = match t {
                Some(t) => t,
                None => max_interference_time(sc)?,
            };
            fields(&sup, t, &linspace(x_min, x_max, nx)?, &linspace(y_min, y_max, ny)?, out)
        }
        Command::Nodal { t_max, nt, n_min, n_max, at, angles } => nodal(sc, *t_max, *nt, *n_min, *n_max, at, angles, out),
        Command::Trajectories { launch, x_max, step, t_start, t_end, samples, polya } => {
            let kind = if *polya { TrajectoryKind::Polya } else { TrajectoryKind::Quantum };
            let tol = tol_or(common, DEFAULT_TOL);
            let launches = if launch.is_empty() {
                let tc = max_interference_time(sc)?;
                let targets = symmetric_targets(*x_max, *step);
                isochrone(&sup, TrajectoryKind::Quantum, &targets, tc, *t_start, tol)?.launched().map(|(_, z)| z).collect()
            } else {
                launch.clone()
            };
            trajectories(&sup, kind, &launches, *t_start, *t_end, *samples, tol, out)
        }
        &Command::Isochrone { x_max, step, t_arrival, t_launch } => {
            let t_arrival = match t_arrival {
                Some(t) => t,
                None => max_interference_time(sc)?,
            };
            let targets = symmetric_targets(x_max, step);
            let iso = isochrone(&sup, TrajectoryKind::Quantum, &targets, t_arrival, t_launch, tol_or(common, DEFAULT_TOL))?;
            out.write("isochrone.dat", |w| {
                writeln!(w, "# x_arrival status re_launch im_launch roundtrip_residual")?;
                for p in &iso.points {
                    let z = p.z_launch.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                    let r = p.roundtrip_residual.unwrap_or(f64::NAN);
                    writeln!(w, "{} {} {} {} {}", fmt_num(p.x_arrival), status_name(&p.status), fmt_num(z.re), fmt_num(z.im), fmt_num(r))?;
                }
                Ok(())
            })
        }
        &Command::Metrics { x_max, step, t_end, samples, smoothing, theta_enter, theta_exit } => {
            let defaults = EnsembleOptions::default();
            let opts = EnsembleOptions {
                x_max,
                step,
                t_end,
                samples,
                smoothing,
                t_arrival: sc.max_interference_time().unwrap_or(defaults.t_arrival),
                tol: tol_or(common, defaults.tol),
                ..defaults
            };
            metrics_cmd(sc, &sup, &opts, theta_enter, theta_exit, out)
        }
        &Command::Cave { format, nx, ny, nt, budget } => {
            let mut spec = sc.grid_spec();
            for (axis, n) in [(&mut spec.x, nx), (&mut spec.y, ny), (&mut spec.t, nt)] {
                if let Some(n) = n {
                    *axis = Axis::new(axis.min, axis.max, n)?;
                }
            }
            let grid = cave::sample_cave_with_budget(&sup, &spec, budget)?;
            let echo = sc.to_toml();
            out.write("cave.vol", |w| Ok(cave::write_volume(w, &grid, format, &echo)?))
        }
        &Command::Density { x_min, x_max, nx, t_max, nt } => {
            let xs = linspace(x_min, x_max, nx)?;
            let ts = linspace(0.0, t_max, nt)?;
            out.write("density.dat", |w| {
                writeln!(w, "# t x density")?;
                for &t in &ts {
                    for &x in &xs {
                        row(w, &[t, x, sup.value(Complex64::new(x, 0.0), t).norm_sqr()])?;
                    }
                }
                Ok(())
            })
        }
        &Command::Divvort { launch, t_start, t_end, samples } => {
            let tr = integrate(&sup, TrajectoryKind::Quantum, launch, t_start, t_end, tol_or(common, 1e-10))?;
            let tr = tr.resample(&sup, samples)?;
            out.write("divvort.dat", |w| Ok(trajectory::write_trajectory(w, &tr)?))
        }
        &Command::Stagnation { point, t_max, nt } => {
            let ts = linspace(0.0, t_max, nt)?;
            let rows = ts.iter().map(|&t| Ok((t, sup.qmf_dz(point, t)?))).collect::<Result<Vec<_>>>()?;
            out.write("stagnation.dat", |w| {
                writeln!(w, "# t re_dp im_dp gamma omega")?;
                for (t, d) in &rows {
                    row(w, &[*t, d.dp.re, d.dp.im, d.gamma, d.omega])?;
                }
                Ok(())
            })
        }
        Command::Approx { point, t0, radii, directions, dt, samples } => {
            let t0 = match t0 {
                Some(t) => *t,
                None => max_interference_time(sc)?,
            };
            approx(&sup, *point, t0, radii, *directions, *dt, *samples, tol_or(common, 1e-12), out)
        }
        &Command::Polelocal { samples, order, scale } => polelocal(sc.hbar, samples, order, scale, out),
    }
}

fn status_name(s: &IsochroneStatus) -> &'static str {
    match s {
        IsochroneStatus::Ok => "ok",
        IsochroneStatus::Excluded => "excluded",
        IsochroneStatus::Failed(kind) => kind,
    }
}

fn fields(sup: &Superposition, t: f64, xs: &[f64], ys: &[f64], out: &mut Outputs) -> Result<()> {
    out.write("fields.dat", |w| {
        writeln!(w, "# t x y re_psi im_psi abs_psi re_p im_p gamma omega re_q im_q pvf_x pvf_y s_real s_imag")?;
        for &y in ys {
            for &x in xs {
                let z = Complex64::new(x, y);
                let psi = sup.value(z, t);
                let rest = match sup.sample(z, t) {
                    Ok(f) => [f.p.re, f.p.im, f.gamma_div, f.omega_vort, f.q.re, f.q.im, f.pvf[0], f.pvf[1], f.s_real, f.s_imag],
                    Err(Error::PoleProximity { .. }) => [f64::NAN; 10],
                    Err(e) => return Err(e.into()),
                };
                let mut v = vec![t, x, y, psi.re, psi.im, psi.norm()];
                v.extend(rest);
                row(w, &v)?;
            }
        }
        Ok(())
    })
}

#[allow(clippy::too_many_arguments)]
fn nodal(sc: &Scenario, t_max: f64, nt: usize, n_min: i64, n_max: i64, at: &[f64], angles: &[f64], out: &mut Outputs) -> Result<()> {
    if n_min > n_max {
        bail!(Error::InvalidParameter(format!("n_min ({n_min}) above n_max ({n_max})")));
    }
    let pair = sc.pair()?;
    let sup = sc.superposition()?;
    let ts = linspace(0.0, t_max, nt)?;
    let states = ts.iter().map(|&t| Ok(pair.nodal_state(t, n_min, n_max)?)).collect::<Result<Vec<_>>>()?;
    out.write("nodal_angle.dat", |w| {
        writeln!(w, "# t theta_deg omega_rate spacing")?;
        for s in &states {
            row(w, &[s.t, s.theta.to_degrees(), s.omega_rate, s.spacing])?;
        }
        Ok(())
    })?;
    out.write("nodes.dat", |w| {
        writeln!(w, "# t n re_z im_z")?;
        for s in &states {
            for (n, z) in &s.node_positions {
                writeln!(w, "{} {} {} {}", fmt_num(s.t), n, fmt_num(z.re), fmt_num(z.im))?;
            }
        }
        Ok(())
    })?;
    out.write("lines.dat", |w| {
        writeln!(w, "# n slope intercept")?;
        for n in n_min..=n_max {
            let l = pair.nodal_trajectory(n)?;
            writeln!(w, "{} {} {}", n, fmt_num(l.slope), fmt_num(l.intercept))?;
        }
        Ok(())
    })?;

    let times = if at.is_empty() { vec![pair.max_interference_time()] } else { at.to_vec() };
    let mut points = Vec::new();
    for &t in &times {
        for n in n_min..=n_max {
            points.push((n, refine_node(&sup, pair.node_position(n, t)?, t)?));
        }
        // seed n sits between nodes n and n + 1
        for (k, seed) in (n_min..).zip(pair.stagnation_seeds(t, n_min, n_max)?) {
            points.push((k, refine_stagnation(&sup, seed, t)?));
        }
    }
    out.write("points.dat", |w| Ok(nodal::write_point_table(w, &points)?))?;

    if !angles.is_empty() {
        let hits = angles
            .iter()
            .map(|&deg| Ok((deg, pair.time_at_angle(deg.to_radians())?.unwrap_or(f64::INFINITY))))
            .collect::<Result<Vec<_>>>()?;
        out.write("angles.dat", |w| {
            writeln!(w, "# theta_deg t")?;
            for (deg, t) in &hits {
                row(w, &[*deg, *t])?;
            }
            Ok(())
        })?;
        for (deg, t) in &hits {
            println!("theta_deg = {} t = {}", fmt_num(*deg), fmt_num(*t));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn trajectories(
    sup: &Superposition,
    kind: TrajectoryKind,
    launches: &[Complex64],
    t0: f64,
    t1: f64,
    samples: usize,
    tol: f64,
    out: &mut Outputs,
) -> Result<()> {
    let mut done: Vec<(String, Trajectory)> = Vec::new();
    for (i, &z) in launches.iter().enumerate() {
        // a pole hit still yields the path up to the guard
        let tr = match integrate(sup, kind, z, t0, t1, tol) {
            Ok(tr) => tr,
            Err(Error::PoleEncounter { partial, .. } | Error::StepUnderflow { partial, .. }) => *partial,
            Err(e) => return Err(e.into()),
        };
        let tr = if tr.samples.len() > 1 { tr.resample(sup, samples)? } else { tr };
        done.push((format!("traj_{i:03}.dat"), tr));
    }
    for (name, tr) in &done {
        out.write(name, |w| Ok(trajectory::write_trajectory(w, tr)?))?;
    }
    let entries: Vec<(String, &Trajectory)> = done.iter().map(|(n, t)| (n.clone(), t)).collect();
    out.write("manifest.dat", |w| Ok(trajectory::write_manifest(w, &entries)?))
}

fn metrics_cmd(sc: &Scenario, sup: &Superposition, opts: &EnsembleOptions, enter: f64, exit: f64, out: &mut Outputs) -> Result<()> {
    let report = metrics::wrapping_ensemble(sup, opts)?;
    let summary = metrics::summarize(&report.records()).ok();
    // the lifetime needs a symmetric pair; other scenarios skip it
    let lifetime = match sc.pair() {
        Ok(pair) => Some(metrics::interference_lifetime(&pair, enter.to_radians(), exit.to_radians())?),
        Err(_) => None,
    };
    out.write("metrics.toml", |w| Ok(metrics::write_summary(w, &report, summary.as_ref(), lifetime.as_ref())?))?;
    out.write("wrapping.dat", |w| {
        writeln!(w, "# x_arrival t_first_min t_last_min t_wrap loop_count valid unbounded")?;
        for m in &report.members {
            if let Some(r) = &m.record {
                writeln!(
                    w,
                    "{} {} {} {} {} {} {}",
                    fmt_num(m.x_arrival),
                    fmt_num(r.t_first_min),
                    fmt_num(r.t_last_min),
                    fmt_num(r.t_wrap),
                    r.loop_count,
                    r.valid,
                    r.unbounded
                )?;
            }
        }
        Ok(())
    })?;
    match &summary {
        Some(s) => println!("mean_wrap = {} valid = {} unbounded = {}", fmt_num(s.mean), s.valid, s.unbounded),
        None => println!("mean_wrap = nan valid = 0"),
    }
    if let Some(l) = &lifetime {
        println!("t_enter = {} t_exit = {} lifetime = {}", fmt_num(l.t_enter), fmt_num(l.t_exit), fmt_num(l.lifetime));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn approx(
    sup: &Superposition,
    point: Complex64,
    t0: f64,
    radii: &[f64],
    directions: usize,
    dt: f64,
    samples: usize,
    tol: f64,
    out: &mut Outputs,
) -> Result<()> {
    if directions == 0 || !(dt > 0.0) {
        bail!(Error::InvalidParameter("approx needs at least one direction and dt > 0".into()));
    }
    let exp = stagnation_expansion(sup, point, t0)?;
    let ts = linspace(t0 - dt, t0 + dt, samples)?;
    let mut rows = Vec::new();
    let mut id = 0;
    for &r in radii {
        for k in 0..directions {
            let z = exp.z0 + Complex64::from_polar(r, 2.0 * PI * k as f64 / directions as f64);
            let back = integrate(sup, TrajectoryKind::Quantum, z, t0, t0 - dt, tol)?;
            let fwd = integrate(sup, TrajectoryKind::Quantum, z, t0, t0 + dt, tol)?;
            for &t in &ts {
                let exact = if t < t0 { back.at(t) } else { fwd.at(t) }.expect("inside the integrated span");
                let lin = approx_trajectory(&exp, z, t - t0)?;
                rows.push((id, z, t, exact, lin));
            }
            id += 1;
        }
    }
    out.write("approx.dat", |w| {
        writeln!(w, "# id re_start im_start t re_exact im_exact re_approx im_approx")?;
        for (id, z, t, e, a) in &rows {
            let v: Vec<String> = [z.re, z.im, *t, e.re, e.im, a.re, a.im].iter().map(|&x| fmt_num(x)).collect();
            writeln!(w, "{id} {}", v.join(" "))?;
        }
        Ok(())
    })
}

type Streamline = fn(f64, f64) -> (f64, f64);

/// Streamlines 1 and 3: x = -/+ a sec s, y = +/- a tan s; streamlines 2 and
/// 4: x = +/- a tan s, y = -/+ a sec s; s from -pi/3 to pi/3.
fn polelocal(hbar: f64, samples: usize, order: u32, a: f64, out: &mut Outputs) -> Result<()> {
    let ss = linspace(-PI / 3.0, PI / 3.0, samples)?;
    let lines: [(u8, Streamline); 4] = [
        (1, |a, s| (-a / s.cos(), a * s.tan())),
        (2, |a, s| (a * s.tan(), -a / s.cos())),
        (3, |a, s| (a / s.cos(), -a * s.tan())),
        (4, |a, s| (-a * s.tan(), a / s.cos())),
    ];
    let mut rows = Vec::new();
    for (label, f) in lines {
        for &s in &ss {
            let (x, y) = f(a, s);
            let (g, o) = pole_local_div_vort(order, Complex64::new(x, y), hbar)?;
            rows.push((label, [s, x, y, g, o]));
        }
    }
    out.write("polelocal.dat", |w| {
        writeln!(w, "# line s x y gamma omega")?;
        for (label, v) in &rows {
            let cols: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
            writeln!(w, "{label} {}", cols.join(" "))?;
        }
        Ok(())
    })
}
