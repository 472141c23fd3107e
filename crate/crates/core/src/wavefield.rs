//! Closed-form complex-extended wave function of a superposition of free
//! Gaussian packets, and every local field derived from it.
//!
//! Each packet is evaluated in log form and the superposition is summed
//! relative to the largest term, so the ratios that define the quantum
//! momentum function stay finite far into the complex plane where the
//! individual terms overflow or underflow.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative size of `node_epsilon` against the packet amplitude scale.
pub const NODE_EPSILON_REL: f64 = 1e-12;
/// Relative size of the trajectory pole guard against the amplitude scale.
pub const POLE_GUARD_REL: f64 = 1e-6;

/// One free Gaussian component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    x0: f64,
    vp: f64,
    sigma0: f64,
    mass: f64,
    hbar: f64,
}

impl GaussianPacket {
    /// Packet in atomic units (`mass = hbar = 1`).
    pub fn new(x0: f64, vp: f64, sigma0: f64) -> Result<Self> {
        Self::with_units(x0, vp, sigma0, 1.0, 1.0)
    }

    pub fn with_units(x0: f64, vp: f64, sigma0: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(x0.is_finite() && vp.is_finite()) {
            return Err(Error::InvalidParameter("packet center and velocity must be finite".into()));
        }
        for (name, v) in [("sigma0", sigma0), ("mass", mass), ("hbar", hbar)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { x0, vp, sigma0, mass, hbar })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn vp(&self) -> f64 {
        self.vp
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Spreading timescale `2 m sigma0^2 / hbar`.
    pub fn tau(&self) -> f64 {
        2.0 * self.mass * self.sigma0 * self.sigma0 / self.hbar
    }

    pub fn momentum(&self) -> f64 {
        self.mass * self.vp
    }

    /// Effective spreading momentum `hbar / (2 sigma0)`.
    pub fn effective_momentum(&self) -> f64 {
        self.hbar / (2.0 * self.sigma0)
    }

    pub fn spreading_velocity(&self) -> f64 {
        self.effective_momentum() / self.mass
    }

    /// Translational energy `p^2 / 2m` carried in the phase.
    pub fn energy(&self) -> f64 {
        let p = self.momentum();
        p * p / (2.0 * self.mass)
    }

    /// Average energy including the spreading contribution.
    pub fn mean_energy(&self) -> f64 {
        self.energy() + self.hbar * self.hbar / (8.0 * self.mass * self.sigma0 * self.sigma0)
    }

    /// Centroid `x0 + vp t`.
    pub fn center(&self, t: f64) -> f64 {
        self.x0 + self.vp * t
    }

    /// Complex spreading `sigma0 (1 + i hbar t / (2 m sigma0^2))`.
    pub fn sigma_tilde(&self, t: f64) -> Complex64 {
        Complex64::new(self.sigma0, self.hbar * t / (2.0 * self.mass * self.sigma0))
    }

    /// Real width `|sigma_tilde(t)|`.
    pub fn sigma_t(&self, t: f64) -> f64 {
        let r = self.hbar * t / (2.0 * self.mass * self.sigma0 * self.sigma0);
        self.sigma0 * (1.0 + r * r).sqrt()
    }

    /// Prefactor `(2 pi sigma_tilde^2)^(-1/4)`.
    ///
    /// `sigma_tilde` has real part `sigma0 > 0` for every real `t`, so the
    /// principal square root of it is continuous in time and equals the
    /// positive real root at `t = 0`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        (2.0 * PI).powf(-0.25) / self.sigma_tilde(t).sqrt()
    }

    /// `ln psi`, `d ln psi / dz`, and `d^2 ln psi / dz^2` at `(z, t)`.
    pub(crate) fn log_terms(&self, z: Complex64, t: f64) -> (Complex64, Complex64, Complex64) {
        let st = self.sigma_tilde(t);
        let dz = z - self.center(t);
        let p = self.momentum();
        let width = 2.0 * st * self.sigma0;
        let log_amp = -0.25 * (2.0 * PI).ln() - 0.5 * st.ln();
        let exponent = -dz * dz / (2.0 * width) + I * p * dz / self.hbar + I * self.energy() * t / self.hbar;
        let g = -dz / width + I * p / self.hbar;
        let g_prime = -1.0 / width;
        (log_amp + exponent, g, g_prime)
    }

    /// Packet value at complex position `z`.
    pub fn value(&self, z: Complex64, t: f64) -> Complex64 {
        self.log_terms(z, t).0.exp()
    }

    /// Analytic `d psi / dz`.
    pub fn dz(&self, z: Complex64, t: f64) -> Complex64 {
        let (l, g, _) = self.log_terms(z, t);
        l.exp() * g
    }
}

/// Scaled sums `sum_k exp(ln psi_k - shift) * {1, g_k, g_k^2 + g_k'}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Expansion {
    pub psi: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    /// `sum_k |psi_k|`, same scaling.
    pub abs_psi: f64,
    /// `sum_k |psi_k| * max(|g_k|, 1/sigma0_k)`, same scaling.
    pub abs_d1: f64,
    pub shift: f64,
}

impl Expansion {
    pub fn ln_abs_psi(&self) -> f64 {
        self.psi.norm().ln() + self.shift
    }

    /// `Psi'/Psi`.
    pub fn log_derivative(&self) -> Complex64 {
        self.d1 / self.psi
    }
}

/// Derivative of the quantum momentum function together with its
/// divergence and vorticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmfDerivative {
    pub dp: Complex64,
    pub gamma: f64,
    pub omega: f64,
}

/// All local fields at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub z: Complex64,
    pub t: f64,
    pub psi: Complex64,
    pub dpsi: Complex64,
    pub p: Complex64,
    pub dp: Complex64,
    pub gamma_div: f64,
    pub omega_vort: f64,
    pub q: Complex64,
    pub pvf: [f64; 2],
    pub s_real: f64,
    pub s_imag: f64,
}

/// Ordered sum of Gaussian packets sharing mass and hbar. Immutable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superposition {
    packets: Vec<GaussianPacket>,
}

impl Superposition {
    pub fn new(packets: Vec<GaussianPacket>) -> Result<Self> {
        let first = packets
            .first()
            .ok_or_else(|| Error::InvalidParameter("superposition needs at least one packet".into()))?;
        if packets.iter().any(|p| p.mass != first.mass || p.hbar != first.hbar) {
            return Err(Error::InvalidParameter("all packets must share mass and hbar".into()));
        }
        Ok(Self { packets })
    }

    /// Head-on pair in atomic units: left packet at `-x0` moving with `+vp`,
    /// right packet at `+x0` moving with `-vp`.
    pub fn symmetric_pair(x0: f64, vp: f64, sigma0: f64) -> Result<Self> {
        Self::new(vec![GaussianPacket::new(-x0, vp, sigma0)?, GaussianPacket::new(x0, -vp, sigma0)?])
    }

    pub fn packets(&self) -> &[GaussianPacket] {
        &self.packets
    }

    pub fn mass(&self) -> f64 {
        self.packets[0].mass
    }

    pub fn hbar(&self) -> f64 {
        self.packets[0].hbar
    }

    pub(crate) fn expand(&self, z: Complex64, t: f64) -> Expansion {
        let mut e = Expansion {
            psi: Complex64::default(),
            d1: Complex64::default(),
            d2: Complex64::default(),
            abs_psi: 0.0,
            abs_d1: 0.0,
            shift: f64::NEG_INFINITY,
        };
        for pk in &self.packets {
            let (l, g, gp) = pk.log_terms(z, t);
            if l.re > e.shift {
                // rescale what has been accumulated so far
                let r = (e.shift - l.re).exp();
                e.psi *= r;
                e.d1 *= r;
                e.d2 *= r;
                e.abs_psi *= r;
                e.abs_d1 *= r;
                e.shift = l.re;
            }
            let w = (l - e.shift).exp();
            e.psi += w;
            e.d1 += w * g;
            e.d2 += w * (g * g + gp);
            let wn = w.norm();
            e.abs_psi += wn;
            e.abs_d1 += wn * g.norm().max(1.0 / pk.sigma0);
        }
        e
    }

    /// `Psi(z, t)`.
    pub fn value(&self, z: Complex64, t: f64) -> Complex64 {
        let e = self.expand(z, t);
        e.psi * e.shift.exp()
    }

    /// Analytic `dPsi/dz`.
    pub fn dz(&self, z: Complex64, t: f64) -> Complex64 {
        let e = self.expand(z, t);
        e.d1 * e.shift.exp()
    }

    /// Analytic `d^2 Psi / dz^2`.
    pub fn d2z(&self, z: Complex64, t: f64) -> Complex64 {
        let e = self.expand(z, t);
        e.d2 * e.shift.exp()
    }

    /// Sum of the packet peak magnitudes on the real axis at time `t`.
    /// Bounds `max_x |Psi(x, t)|` from above; used as the reference scale
    /// for node and pole tolerances.
    pub fn amplitude_scale(&self, t: f64) -> f64 {
        self.packets.iter().map(|p| p.amplitude(t).norm()).sum()
    }

    pub fn node_epsilon(&self, t: f64) -> f64 {
        NODE_EPSILON_REL * self.amplitude_scale(t)
    }

    pub fn pole_guard(&self, t: f64) -> f64 {
        POLE_GUARD_REL * self.amplitude_scale(t)
    }

    pub(crate) fn checked(&self, z: Complex64, t: f64, eps: f64) -> Result<Expansion> {
        let e = self.expand(z, t);
        let ln_abs = e.ln_abs_psi();
        if !(ln_abs > eps.ln()) {
            return Err(Error::PoleProximity { z, t, psi_abs: ln_abs.exp() });
        }
        Ok(e)
    }

    /// Quantum momentum function `p = (hbar/i) Psi'/Psi`.
    pub fn qmf(&self, z: Complex64, t: f64) -> Result<Complex64> {
        let e = self.checked(z, t, self.node_epsilon(t))?;
        Ok(-I * self.hbar() * e.log_derivative())
    }

    /// `dp/dz = (hbar/i)[Psi''/Psi - (Psi'/Psi)^2]`, with divergence
    /// `Gamma = 2 Re dp` and vorticity `Omega = 2 Im dp`.
    pub fn qmf_dz(&self, z: Complex64, t: f64) -> Result<QmfDerivative> {
        let e = self.checked(z, t, self.node_epsilon(t))?;
        Ok(qmf_derivative(&e, self.hbar()))
    }

    /// Complex quantum potential `(hbar / 2mi) dp/dz`.
    pub fn quantum_potential(&self, z: Complex64, t: f64) -> Result<Complex64> {
        let d = self.qmf_dz(z, t)?;
        Ok(self.hbar() / (2.0 * self.mass() * I) * d.dp)
    }

    /// Polya vector field `(Re p, -Im p)`.
    pub fn pvf(&self, z: Complex64, t: f64) -> Result<[f64; 2]> {
        let p = self.qmf(z, t)?;
        Ok(polya(p))
    }

    /// `(S_R, S_I)` with `Psi = exp(-S_I/hbar) exp(i S_R/hbar)`; `S_R` on the
    /// principal branch `(-pi hbar, pi hbar]`.
    pub fn complex_action(&self, z: Complex64, t: f64) -> Result<(f64, f64)> {
        let e = self.checked(z, t, self.node_epsilon(t))?;
        Ok(action_from(&e, self.hbar()))
    }

    /// Every local field at `(z, t)`.
    pub fn sample(&self, z: Complex64, t: f64) -> Result<FieldSample> {
        let e = self.checked(z, t, self.node_epsilon(t))?;
        let hbar = self.hbar();
        let scale = e.shift.exp();
        let p = -I * hbar * e.log_derivative();
        let d = qmf_derivative(&e, hbar);
        let (s_real, s_imag) = action_from(&e, hbar);
        Ok(FieldSample {
            z,
            t,
            psi: e.psi * scale,
            dpsi: e.d1 * scale,
            p,
            dp: d.dp,
            gamma_div: d.gamma,
            omega_vort: d.omega,
            q: quantum_potential_from(d, hbar, self.mass()),
            pvf: polya(p),
            s_real,
            s_imag,
        })
    }
}

fn qmf_derivative(e: &Expansion, hbar: f64) -> QmfDerivative {
    let g = e.log_derivative();
    let dp = -I * hbar * (e.d2 / e.psi - g * g);
    QmfDerivative { dp, gamma: 2.0 * dp.re, omega: 2.0 * dp.im }
}

/// `(hbar/4m)(Omega - i Gamma)`.
pub fn quantum_potential_from(d: QmfDerivative, hbar: f64, mass: f64) -> Complex64 {
    hbar / (4.0 * mass) * Complex64::new(d.omega, -d.gamma)
}

fn action_from(e: &Expansion, hbar: f64) -> (f64, f64) {
    (hbar * e.psi.arg(), -hbar * e.ln_abs_psi())
}

/// Polya field of a complex vector `p`: `(Re p, -Im p)`.
pub fn polya(p: Complex64) -> [f64; 2] {
    [p.re, -p.im]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn case1() -> Superposition {
        Superposition::symmetric_pair(10.0, 2.0, SQRT_2).unwrap()
    }

    #[test]
    fn rejects_nonpositive_width() {
        assert!(GaussianPacket::new(0.0, 1.0, 0.0).is_err());
        assert!(GaussianPacket::with_units(0.0, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(Superposition::new(vec![]).is_err());
        let a = GaussianPacket::new(0.0, 1.0, 1.0).unwrap();
        let b = GaussianPacket::with_units(0.0, 1.0, 1.0, 2.0, 1.0).unwrap();
        assert!(Superposition::new(vec![a, b]).is_err());
    }

    #[test]
    fn sigma_tilde_examples() {
        let p = GaussianPacket::new(0.0, 0.0, SQRT_2).unwrap();
        assert_eq!(p.sigma_tilde(0.0), c(SQRT_2, 0.0));
        assert_relative_eq!((p.sigma_tilde(4.0) - c(SQRT_2, SQRT_2)).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(p.sigma_tilde(4.0).norm(), p.sigma_t(4.0), epsilon = 1e-15);
        let q = GaussianPacket::new(0.0, 0.0, SQRT_2 / 4.0).unwrap();
        assert_relative_eq!(q.tau(), 0.25, epsilon = 1e-15);
        let expect = c(1.0, 1.0) * (SQRT_2 / 4.0);
        assert_relative_eq!((q.sigma_tilde(0.25) - expect).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn derived_packet_constants() {
        let p = GaussianPacket::new(-10.0, 2.0, SQRT_2).unwrap();
        assert_relative_eq!(p.tau(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(p.effective_momentum(), SQRT_2 / 4.0, epsilon = 1e-15);
        assert_relative_eq!(p.spreading_velocity(), SQRT_2 / 4.0, epsilon = 1e-15);
        assert_relative_eq!(p.mean_energy(), 2.0 + 1.0 / 16.0, epsilon = 1e-14);
    }

    #[test]
    fn packet_peak_value() {
        let p = GaussianPacket::new(-10.0, 2.0, SQRT_2).unwrap();
        let v = p.value(c(-10.0, 0.0), 0.0);
        assert_relative_eq!(v.re, (4.0 * PI).powf(-0.25), epsilon = 1e-15);
        assert_relative_eq!(v.im, 0.0, epsilon = 1e-15);
        let q = GaussianPacket::new(3.0, -1.0, 0.7).unwrap();
        assert_relative_eq!(q.value(c(3.0, 0.0), 0.0).re, (2.0 * PI * 0.49f64).powf(-0.25), epsilon = 1e-14);
    }

    #[test]
    fn packet_two_sigma_ratio() {
        let p = GaussianPacket::new(1.5, 0.3, 0.8).unwrap();
        let r = p.value(c(1.5 + 1.6, 0.0), 0.0).norm() / p.value(c(1.5, 0.0), 0.0).norm();
        assert_relative_eq!(r, (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn amplitude_branch_is_continuous() {
        let p = GaussianPacket::new(0.0, 0.0, 0.5).unwrap();
        let mut prev = p.amplitude(0.0);
        assert!(prev.im == 0.0 && prev.re > 0.0);
        for k in 1..=2000 {
            let a = p.amplitude(k as f64 * 0.05);
            assert!((a - prev).norm() < 0.05 * prev.norm());
            prev = a;
        }
    }

    #[test]
    fn superposition_constructive_at_origin() {
        let s = case1();
        for t in [0.0, 1.3, 5.0, 8.7] {
            let left = s.packets()[0].value(c(0.0, 0.0), t);
            assert_relative_eq!((s.value(c(0.0, 0.0), t) - 2.0 * left).norm(), 0.0, epsilon = 1e-15);
            assert!(s.dz(c(0.0, 0.0), t).norm() < 1e-16);
            assert!(s.qmf(c(0.0, 0.0), t).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn single_packet_superposition_matches_packet() {
        let p = GaussianPacket::new(0.4, 1.1, 0.9).unwrap();
        let s = Superposition::new(vec![p]).unwrap();
        let z = c(0.7, -0.2);
        assert_relative_eq!((s.value(z, 1.7) - p.value(z, 1.7)).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((s.dz(z, 1.7) - p.dz(z, 1.7)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_at_centroid_is_plane_wave_term() {
        let p = GaussianPacket::new(-2.0, 1.5, 1.2).unwrap();
        let s = Superposition::new(vec![p]).unwrap();
        let t = 2.3;
        let z = c(p.center(t), 0.0);
        let expect = s.value(z, t) * I * p.momentum();
        assert_relative_eq!((s.dz(z, t) - expect).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((s.qmf(z, t).unwrap() - c(1.5, 0.0)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn single_packet_qmf_at_t0() {
        let p = GaussianPacket::new(-1.0, 0.8, 0.6).unwrap();
        let s = Superposition::new(vec![p]).unwrap();
        for z in [c(0.3, 0.4), c(-2.0, 1.0), c(4.0, -3.0)] {
            let expect = c(0.8, 0.0) + I * (z + 1.0) / (2.0 * 0.36);
            assert_relative_eq!((s.qmf(z, 0.0).unwrap() - expect).norm(), 0.0, epsilon = 1e-12);
            let dp = s.qmf_dz(z, 0.0).unwrap().dp;
            assert_relative_eq!((dp - I / (2.0 * 0.36)).norm(), 0.0, epsilon = 1e-12);
            // quantum potential is z-independent for a lone packet at t = 0
            let q = s.quantum_potential(z, 0.0).unwrap();
            assert_relative_eq!((q - c(1.0 / (4.0 * 0.36), 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn qmf_rejects_nodes() {
        let s = case1();
        // on-axis node at t = 5 sits at pi/4
        let err = s.qmf(c(PI / 4.0, 0.0), 5.0).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
        assert!(s.complex_action(c(PI / 4.0, 0.0), 5.0).is_err());
        assert!(s.sample(c(PI / 4.0 + 0.01, 0.0), 5.0).is_ok());
    }

    #[test]
    fn pvf_and_action_conventions() {
        assert_eq!(polya(c(3.0, 4.0)), [3.0, -4.0]);
        let e = Expansion { psi: c(1.0, 0.0), d1: c(0.0, 0.0), d2: c(0.0, 0.0), abs_psi: 1.0, abs_d1: 0.0, shift: 0.0 };
        assert_eq!(action_from(&e, 1.0), (0.0, 0.0));
        let e = Expansion { psi: I, ..e };
        let (sr, si) = action_from(&e, 1.0);
        assert_relative_eq!(sr, PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(si, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn action_reproduces_psi() {
        let s = case1();
        for (z, t) in [(c(-3.0, 0.5), 2.5), (c(1.2, -0.4), 5.5), (c(6.0, 1.0), 8.0)] {
            let (sr, si) = s.complex_action(z, t).unwrap();
            let rebuilt = (-si).exp() * Complex64::from_polar(1.0, sr);
            let psi = s.value(z, t);
            assert_relative_eq!((rebuilt - psi).norm() / psi.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn scaled_evaluation_survives_far_field() {
        // the raw terms underflow here, the momentum function does not
        let s = case1();
        let z = c(120.0, 3.0);
        assert_eq!(s.value(z, 0.0), c(0.0, 0.0));
        let p = s.qmf(z, 0.0);
        assert!(p.is_err());
        let eps_free = s.expand(z, 0.0).log_derivative();
        assert!(eps_free.is_finite());
    }

    #[test]
    fn q_identity_holds() {
        let s = case1();
        let d = s.qmf_dz(c(0.0, 0.0), 5.0).unwrap();
        let q = s.quantum_potential(c(0.0, 0.0), 5.0).unwrap();
        let expect = quantum_potential_from(d, 1.0, 1.0);
        assert!((q - expect).norm() < 1e-13);
    }

    #[test]
    fn sample_collects_consistent_fields() {
        let s = case1();
        let f = s.sample(c(-1.0, 0.3), 4.0).unwrap();
        assert_relative_eq!((f.dp - c(f.gamma_div, f.omega_vort) / 2.0).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((f.p - (-I) * f.dpsi / f.psi).norm(), 0.0, epsilon = 1e-12 * f.p.norm());
        assert_eq!(f.pvf, [f.p.re, -f.p.im]);
    }
}
