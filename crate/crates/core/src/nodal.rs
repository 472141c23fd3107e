//! Nodal-line dynamics of a head-on Gaussian pair, numerical refinement of
//! nodes and stagnation points, circulation integrals, and the pole-local
//! divergence/vorticity expansion.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::wavefield::Superposition;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Closed-form description of the symmetric pair `x_R = -x_L = x0`,
/// `v_pL = -v_pR = vp`, equal widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricPair {
    pub x0: f64,
    pub vp: f64,
    pub sigma0: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl SymmetricPair {
    /// Recognize a two-packet superposition as a symmetric pair. The packet
    /// at positive position is labelled right; `vp` is the velocity of the
    /// left packet.
    pub fn from_superposition(sup: &Superposition) -> Result<Self> {
        let [a, b] = sup.packets() else {
            return Err(Error::ScenarioShape(format!("expected 2 packets, found {}", sup.packets().len())));
        };
        let close = |u: f64, v: f64| (u - v).abs() <= 1e-12 * (1.0 + u.abs().max(v.abs()));
        if !close(a.x0(), -b.x0()) || !close(a.vp(), -b.vp()) || !close(a.sigma0(), b.sigma0()) {
            return Err(Error::ScenarioShape(
                "packets must mirror each other in position and velocity with equal widths".into(),
            ));
        }
        let right = if a.x0() > 0.0 || (a.x0() == 0.0 && a.vp() < 0.0) { a } else { b };
        Ok(Self {
            x0: right.x0(),
            vp: -right.vp(),
            sigma0: right.sigma0(),
            mass: sup.mass(),
            hbar: sup.hbar(),
        })
    }

    pub fn superposition(&self) -> Superposition {
        use crate::wavefield::GaussianPacket;
        let l = GaussianPacket::with_units(-self.x0, self.vp, self.sigma0, self.mass, self.hbar);
        let r = GaussianPacket::with_units(self.x0, -self.vp, self.sigma0, self.mass, self.hbar);
        Superposition::new(vec![l.expect("validated"), r.expect("validated")]).expect("validated")
    }

    pub fn tau(&self) -> f64 {
        2.0 * self.mass * self.sigma0 * self.sigma0 / self.hbar
    }

    pub fn effective_momentum(&self) -> f64 {
        self.hbar / (2.0 * self.sigma0)
    }

    /// de Broglie wavelength `2 pi hbar / (m vp)`.
    pub fn wavelength(&self) -> f64 {
        2.0 * PI * self.hbar / (self.mass * self.vp.abs())
    }

    /// Time at which the nodal line lies on the real axis, `x0 / vp`.
    pub fn max_interference_time(&self) -> f64 {
        self.x0 / self.vp
    }

    pub fn sigma_tilde(&self, t: f64) -> Complex64 {
        Complex64::new(self.sigma0, self.hbar * t / (2.0 * self.mass * self.sigma0))
    }

    pub fn sigma_t(&self, t: f64) -> f64 {
        self.sigma_tilde(t).norm()
    }

    /// `x0^2 + vp^2 tau^2`; zero only when both packets sit at rest at the origin.
    fn denom(&self) -> Result<f64> {
        let tau = self.tau();
        let d = self.x0 * self.x0 + self.vp * self.vp * tau * tau;
        if d == 0.0 {
            return Err(Error::DegenerateScenario("x0 = 0 and vp = 0: the packets coincide".into()));
        }
        Ok(d)
    }

    /// Position of node `n` at time `t`, from the real and imaginary parts
    /// of the closed-form root of `Psi = 0`.
    pub fn node_position(&self, n: i64, t: f64) -> Result<Complex64> {
        let d = self.denom()?;
        let tau = self.tau();
        let k = PI * (n as f64 + 0.5);
        let x = k * self.hbar / self.mass * (self.x0 * t + self.vp * tau * tau) / d;
        let y = k * 2.0 * self.sigma0 * self.sigma0 * (self.vp * t - self.x0) / d;
        Ok(Complex64::new(x, y))
    }

    /// Angle of the nodal line against the positive real axis.
    ///
    /// The node direction `(x0 t + vp tau^2, tau (vp t - x0))` is affine in
    /// `t`, so the angle swept from `t = 0` is the oriented angle between the
    /// initial and current direction. This is continuous for all `t` and
    /// picks the quadrant of node `n = 0`.
    pub fn nodal_angle(&self, t: f64) -> Result<f64> {
        self.denom()?;
        let tau = self.tau();
        let a = (self.vp * tau * tau, -tau * self.x0);
        let v = (a.0 + t * self.x0, a.1 + t * tau * self.vp);
        let theta0 = a.1.atan2(a.0);
        let cross = a.0 * v.1 - a.1 * v.0;
        let dot = a.0 * v.0 + a.1 * v.1;
        Ok(theta0 + cross.atan2(dot))
    }

    pub fn initial_angle(&self) -> Result<f64> {
        self.nodal_angle(0.0)
    }

    /// Limit angle as `t -> inf`; always a quarter turn past the initial angle.
    pub fn limit_angle(&self) -> Result<f64> {
        Ok(self.initial_angle()? + PI / 2.0)
    }

    /// Rotation rate `hbar / (2 m sigma_t^2)`.
    pub fn nodal_rate(&self, t: f64) -> f64 {
        let s = self.sigma_t(t);
        self.hbar / (2.0 * self.mass * s * s)
    }

    /// Distance between consecutive nodes.
    pub fn node_spacing(&self, t: f64) -> Result<f64> {
        Ok(PI * self.hbar * self.sigma_t(t) / (self.effective_momentum() * self.denom()?.sqrt()))
    }

    /// Straight line traced by node `n` over time.
    pub fn nodal_trajectory(&self, n: i64) -> Result<NodalTrajectoryLine> {
        if self.x0 == 0.0 {
            return Err(Error::DegenerateScenario("x0 = 0: node trajectories are vertical".into()));
        }
        Ok(NodalTrajectoryLine {
            n,
            slope: self.vp * self.tau() / self.x0,
            intercept: -(2 * n + 1) as f64 * PI * self.sigma0 * self.sigma0 / self.x0,
        })
    }

    /// First time the nodal line reaches `theta` (radians), or `None` if it
    /// never does. Returns 0 when the line already starts past `theta`.
    pub fn time_at_angle(&self, theta: f64) -> Result<Option<f64>> {
        let theta0 = self.initial_angle()?;
        let theta_inf = theta0 + PI / 2.0;
        if theta <= theta0 {
            return Ok(Some(0.0));
        }
        if theta >= theta_inf {
            return Ok(None);
        }
        // solve cross(u, a + t b) = 0 for the unit direction u at angle theta
        let tau = self.tau();
        let a = (self.vp * tau * tau, -tau * self.x0);
        let b = (self.x0, tau * self.vp);
        let u = (theta.cos(), theta.sin());
        let ua = u.0 * a.1 - u.1 * a.0;
        let ub = u.0 * b.1 - u.1 * b.0;
        Ok(Some(-ua / ub))
    }

    /// Snapshot of the nodal line with nodes `n_min..=n_max`.
    pub fn nodal_state(&self, t: f64, n_min: i64, n_max: i64) -> Result<NodalLineState> {
        let node_positions = (n_min..=n_max).map(|n| Ok((n, self.node_position(n, t)?))).collect::<Result<_>>()?;
        Ok(NodalLineState {
            t,
            theta: self.nodal_angle(t)?,
            omega_rate: self.nodal_rate(t),
            node_positions,
            spacing: self.node_spacing(t)?,
        })
    }

    /// Index range of nodes lying within `radius` of the origin.
    pub fn node_range_within(&self, t: f64, radius: f64) -> Result<std::ops::RangeInclusive<i64>> {
        let d = self.node_spacing(t)?;
        // |z_n| = |n + 1/2| d
        let k = (radius / d - 0.5).floor().max(-1.0) as i64;
        Ok(-k - 1..=k)
    }

    /// Midpoints between consecutive analytic nodes; seeds for stagnation points.
    pub fn stagnation_seeds(&self, t: f64, n_min: i64, n_max: i64) -> Result<Vec<Complex64>> {
        (n_min..n_max)
            .map(|n| Ok(0.5 * (self.node_position(n, t)? + self.node_position(n + 1, t)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodalLineState {
    pub t: f64,
    pub theta: f64,
    pub omega_rate: f64,
    pub node_positions: Vec<(i64, Complex64)>,
    pub spacing: f64,
}

/// `y = slope * x + intercept` traced by node `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalTrajectoryLine {
    pub n: i64,
    pub slope: f64,
    pub intercept: f64,
}

impl NodalTrajectoryLine {
    /// Signed vertical distance of `z` from the line.
    pub fn residual(&self, z: Complex64) -> f64 {
        z.im - (self.slope * z.re + self.intercept)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Node,
    Stagnation,
}

impl fmt::Display for PointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointKind::Node => "node",
            PointKind::Stagnation => "stagnation",
        })
    }
}

/// A refined node or stagnation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicPoint {
    pub kind: PointKind,
    pub z: Complex64,
    pub t: f64,
    pub order: u32,
    /// Relative cancellation `|Psi| / sum|psi_k|` (nodes) or
    /// `|Psi'| / sum|psi_k'|` (stagnation points) at `z`.
    pub residual: f64,
    pub iterations: usize,
}

pub const MAX_NEWTON_ITERATIONS: usize = 50;
const RESIDUAL_TOL: f64 = 1e-12;
const STEP_TOL: f64 = 1e-14;
const BACKTRACK_STEPS: usize = 20;

/// Length that bounds a single Newton step: half the node spacing for a
/// symmetric pair, otherwise half the narrowest packet width.
fn step_limit(sup: &Superposition, t: f64) -> f64 {
    SymmetricPair::from_superposition(sup)
        .and_then(|p| p.node_spacing(t))
        .unwrap_or_else(|_| sup.packets().iter().map(|p| p.sigma_t(t)).fold(f64::INFINITY, f64::min))
        * 0.5
}

/// Newton iteration with each step clamped to `limit`. `step` returns the
/// Newton step, the residual and an optional merit; when present, steps are
/// halved until the merit decreases, which breaks two-cycles.
fn newton<F>(seed: Complex64, limit: f64, mut step: F) -> Result<(Complex64, f64, usize)>
where
    F: FnMut(Complex64) -> (Complex64, f64, Option<f64>),
{
    let mut z = seed;
    let (mut dz, mut residual, mut merit) = step(z);
    for it in 0..MAX_NEWTON_ITERATIONS {
        if !dz.is_finite() {
            break;
        }
        if residual <= RESIDUAL_TOL {
            return Ok((z, residual, it));
        }
        if dz.norm() > limit {
            dz *= limit / dz.norm();
        }
        let mut next = z - dz;
        let mut eval = step(next);
        if let Some(m) = merit {
            for _ in 0..BACKTRACK_STEPS {
                if eval.2.is_some_and(|e| e < m) {
                    break;
                }
                dz *= 0.5;
                next = z - dz;
                eval = step(next);
            }
        }
        z = next;
        (dz, residual, merit) = eval;
        if dz.norm() <= STEP_TOL * (1.0 + z.norm()) && residual <= 100.0 * RESIDUAL_TOL {
            return Ok((z, residual, it + 1));
        }
    }
    Err(Error::NoConvergence { iterations: MAX_NEWTON_ITERATIONS, last: z })
}

/// Newton iteration on `Psi / psi_r = 0`, where `psi_r` is the packet
/// largest at the seed. Dividing out one Gaussian leaves the interference
/// factor, which neither decays in the tails nor has spurious minima in modulus.
pub fn refine_node(sup: &Superposition, seed: Complex64, t: f64) -> Result<CharacteristicPoint> {
    let reference = sup
        .packets()
        .iter()
        .max_by(|a, b| a.log_terms(seed, t).0.re.total_cmp(&b.log_terms(seed, t).0.re))
        .expect("superposition has packets");
    let (z, residual, iterations) = newton(seed, step_limit(sup, t), |z| {
        let e = sup.expand(z, t);
        let (l, g, _) = reference.log_terms(z, t);
        let merit = e.ln_abs_psi() - l.re;
        (e.psi / (e.d1 - e.psi * g), e.psi.norm() / e.abs_psi, Some(merit).filter(|m| !m.is_nan()))
    })?;
    Ok(CharacteristicPoint { kind: PointKind::Node, z, t, order: 1, residual, iterations })
}

/// Newton iteration on `p(z, t) = 0`, whose roots are those of `Psi'` away
/// from nodes. Unlike `Psi'`, `p` grows only linearly far from the packets,
/// so the iteration is not pulled along decaying Gaussian tails, and `|p|`
/// has no local minima other than its zeros, so it is a safe merit.
pub fn refine_stagnation(sup: &Superposition, seed: Complex64, t: f64) -> Result<CharacteristicPoint> {
    let (z, residual, iterations) = newton(seed, step_limit(sup, t), |z| {
        let e = sup.expand(z, t);
        let g = e.log_derivative();
        (g / (e.d2 / e.psi - g * g), e.d1.norm() / e.abs_d1, Some(g.norm()).filter(|m| m.is_finite()))
    })?;
    if sup.expand(z, t).ln_abs_psi() <= sup.node_epsilon(t).ln() {
        return Err(Error::ConvergedToNode(z));
    }
    Ok(CharacteristicPoint { kind: PointKind::Stagnation, z, t, order: 1, residual, iterations })
}

/// Circle used for circulation quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub n_points: usize,
}

impl ContourSpec {
    pub fn new(center: Complex64, radius: f64, n_points: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("contour radius must be positive, got {radius}")));
        }
        if n_points < 16 {
            return Err(Error::InvalidParameter(format!("contour needs at least 16 points, got {n_points}")));
        }
        Ok(Self { center, radius, n_points })
    }

    /// 256 points per node spacing of radius, never fewer than 256.
    pub fn scaled(center: Complex64, radius: f64, spacing: f64) -> Result<Self> {
        let n = (256.0 * (radius / spacing).max(1.0)).ceil() as usize;
        Self::new(center, radius, n)
    }

    pub fn point(&self, k: usize) -> Complex64 {
        let phi = 2.0 * PI * k as f64 / self.n_points as f64;
        self.center + Complex64::from_polar(self.radius, phi)
    }
}

/// Real and imaginary parts of `oint p dz`: work and flux of the Polya field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circulation {
    pub gamma: f64,
    pub flux: f64,
}

impl Circulation {
    /// `gamma / (2 pi hbar)`.
    pub fn winding(&self, hbar: f64) -> f64 {
        self.gamma / (2.0 * PI * hbar)
    }
}

/// Counterclockwise trapezoid quadrature of `p dz` on a circle.
pub fn circulation(sup: &Superposition, contour: &ContourSpec, t: f64) -> Result<Circulation> {
    let h = 2.0 * PI / contour.n_points as f64;
    let mut sum = Complex64::default();
    for k in 0..contour.n_points {
        let z = contour.point(k);
        let p = match sup.qmf(z, t) {
            Ok(p) => p,
            Err(Error::PoleProximity { .. }) => return Err(Error::ContourThroughPole(z)),
            Err(e) => return Err(e),
        };
        sum += p * I * (z - contour.center);
    }
    Ok(Circulation { gamma: sum.re * h, flux: sum.im * h })
}

/// Number of analytic nodes strictly inside the contour.
pub fn enclosed_nodes(pair: &SymmetricPair, contour: &ContourSpec, t: f64) -> Result<usize> {
    let range = pair.node_range_within(t, contour.center.norm() + contour.radius)?;
    let mut count = 0;
    for n in range {
        if (pair.node_position(n, t)? - contour.center).norm() < contour.radius {
            count += 1;
        }
    }
    Ok(count)
}

/// Divergence and vorticity of the leading `n i hbar / (z - z_p)^2` term of
/// `dp/dz` at offset `dz` from an order-`n` pole.
pub fn pole_local_div_vort(order: u32, dz: Complex64, hbar: f64) -> Result<(f64, f64)> {
    let (x, y) = (dz.re, dz.im);
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return Err(Error::DivideByZero);
    }
    let n = order as f64;
    let r4 = r2 * r2;
    Ok((n * hbar * 4.0 * x * y / r4, n * hbar * 2.0 * (x * x - y * y) / r4))
}

/// Delimited table `t kind n re_z im_z residual`, one row per point.
pub fn write_point_table<W: Write>(mut w: W, rows: &[(i64, CharacteristicPoint)]) -> std::io::Result<()> {
    writeln!(w, "# t kind n re_z im_z residual")?;
    for (n, p) in rows {
        writeln!(
            w,
            "{} {} {} {} {} {}",
            fmt_num(p.t),
            p.kind,
            n,
            fmt_num(p.z.re),
            fmt_num(p.z.im),
            fmt_num(p.residual)
        )?;
    }
    Ok(())
}
