//! Dormand–Prince 5(4) integrator for a complex scalar ODE `dz/dt = f(t, z)`
//! with step-size control and 4th-order continuous extension.

use num_complex::Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step magnitude.
    pub h_min: f64,
    /// Largest admissible step magnitude.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, ..Self::default() }
    }
}

impl Default for Options {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-9, h_min: 1e-12, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

/// Interpolant over one accepted step `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    r: [Complex64; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.h >= 0.0 { (self.t0, self.t1()) } else { (self.t1(), self.t0) };
        lo <= t && t <= hi
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = self.r;
        r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))
    }
}

/// Why integration stopped before reaching the end of the span.
#[derive(Debug)]
pub enum Halt<E> {
    /// The right-hand side refused to evaluate even at the smallest step.
    Rhs(E),
    StepUnderflow,
    MaxSteps,
}

#[derive(Debug)]
pub struct Solution<E> {
    pub segments: Vec<DenseSegment>,
    pub t: f64,
    pub z: Complex64,
    pub halt: Option<Halt<E>>,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn err_norm(z0: Complex64, z1: Complex64, e: Complex64, o: &Options) -> f64 {
    let sc_re = o.atol + o.rtol * z0.re.abs().max(z1.re.abs());
    let sc_im = o.atol + o.rtol * z0.im.abs().max(z1.im.abs());
    (0.5 * ((e.re / sc_re).powi(2) + (e.im / sc_im).powi(2))).sqrt()
}

fn scaled_norm(v: Complex64, z: Complex64, o: &Options) -> f64 {
    err_norm(z, z, v, o)
}

/// Integrate from `(t0, z0)` to `t1` (either direction). `f` may refuse a
/// point; the step is then shortened, and integration halts if it cannot be
/// shortened further.
pub fn integrate<F, E>(mut f: F, t0: f64, z0: Complex64, t1: f64, opts: &Options) -> Solution<E>
where
    F: FnMut(f64, Complex64) -> Result<Complex64, E>,
{
    let mut sol = Solution { segments: Vec::new(), t: t0, z: z0, halt: None, accepted: 0, rejected: 0, evaluations: 0 };
    if t1 == t0 {
        return sol;
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut k1 = match f(t0, z0) {
        Ok(k) => k,
        Err(e) => {
            sol.halt = Some(Halt::Rhs(e));
            return sol;
        }
    };
    sol.evaluations += 1;

    // initial step guess
    let mut h = {
        let d0 = scaled_norm(z0, z0, opts);
        let d1 = scaled_norm(k1, z0, opts);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let guess = match f(t0 + dir * h0, z0 + dir * h0 * k1) {
            Ok(k) => {
                sol.evaluations += 1;
                let d2 = scaled_norm(k - k1, z0, opts) / h0;
                let m = d1.max(d2);
                let h1 = if m <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / m).powf(0.2) };
                (100.0 * h0).min(h1)
            }
            Err(_) => h0,
        };
        guess.min(opts.h_max).max(opts.h_min)
    };

    let (mut t, mut z) = (t0, z0);
    let mut last_rejected = false;
    loop {
        if sol.accepted + sol.rejected >= opts.max_steps {
            sol.halt = Some(Halt::MaxSteps);
            break;
        }
        let remaining = (t1 - t).abs();
        if remaining <= 1e-14 * (1.0 + t1.abs()) {
            break;
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let hs = dir * h;

        let stages = (|| -> Result<[Complex64; 6], E> {
            let k2 = f(t + C2 * hs, z + hs * A21 * k1)?;
            let k3 = f(t + C3 * hs, z + hs * (A31 * k1 + A32 * k2))?;
            let k4 = f(t + C4 * hs, z + hs * (A41 * k1 + A42 * k2 + A43 * k3))?;
            let k5 = f(t + C5 * hs, z + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
            let y6 = z + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5);
            let k6 = f(t + hs, y6)?;
            let y1 = z + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
            let k7 = f(t + hs, y1)?;
            Ok([k2, k3, k4, k5, k6, k7])
        })();
        let [_, k3, k4, k5, k6, k7] = match stages {
            Ok(k) => {
                sol.evaluations += 6;
                k
            }
            Err(e) => {
                sol.rejected += 1;
                if h * 0.5 < opts.h_min {
                    sol.halt = Some(Halt::Rhs(e));
                    break;
                }
                h *= 0.5;
                last_rejected = true;
                continue;
            }
        };
        let y1 = z + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let e = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let err = err_norm(z, y1, e, opts);

        if err <= 1.0 {
            let ydiff = y1 - z;
            let bspl = hs * k1 - ydiff;
            let r = [
                z,
                ydiff,
                bspl,
                ydiff - hs * k7 - bspl,
                hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ];
            let t_new = if last { t1 } else { t + hs };
            sol.segments.push(DenseSegment { t0: t, h: t_new - t, r });
            sol.accepted += 1;
            t = t_new;
            z = y1;
            k1 = k7;
            if last {
                break;
            }
            let mut fac = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h = (h * fac).min(opts.h_max);
        } else {
            sol.rejected += 1;
            last_rejected = true;
            h *= (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            if !h.is_finite() {
                h = opts.h_min * 0.5;
            }
        }
        if h < opts.h_min {
            sol.halt = Some(Halt::StepUnderflow);
            break;
        }
    }
    sol.t = t;
    sol.z = z;
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_growth_and_rotation() {
        let lam = c(-0.3, 2.0);
        let sol = integrate(|_, z| Ok::<_, Infallible>(lam * z), 0.0, c(1.0, 0.5), 5.0, &Options::with_tol(1e-10));
        assert!(sol.halt.is_none());
        let exact = c(1.0, 0.5) * (lam * 5.0).exp();
        assert!((sol.z - exact).norm() < 1e-8);
        assert_eq!(sol.t, 5.0);
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(|t, _| Ok::<_, Infallible>(c(t.cos(), 1.0)), 3.0, c(3.0f64.sin(), 3.0), 0.0, &Options::default());
        assert!(sol.halt.is_none());
        assert!((sol.z - c(0.0, 0.0)).norm() < 1e-8);
        assert!(sol.segments.iter().all(|s| s.h < 0.0));
    }

    #[test]
    fn dense_output_is_accurate_and_continuous() {
        let sol = integrate(|t, _| Ok::<_, Infallible>(c(t.cos(), -t.sin())), 0.0, c(0.0, 1.0), 10.0, &Options::with_tol(1e-10));
        for s in &sol.segments {
            for k in 0..=10 {
                let t = s.t0 + s.h * k as f64 / 10.0;
                let exact = c(t.sin(), t.cos());
                assert!((s.eval(t) - exact).norm() < 1e-8);
            }
        }
        for w in sol.segments.windows(2) {
            assert!((w[0].eval(w[0].t1()) - w[1].eval(w[1].t0)).norm() < 1e-15);
            assert_eq!(w[0].t1(), w[1].t0);
        }
    }

    #[test]
    fn refusing_rhs_halts_near_barrier() {
        let sol = integrate(
            |_, z: Complex64| if z.re < 1.0 { Ok(c(1.0, 0.0)) } else { Err("wall") },
            0.0,
            c(0.0, 0.0),
            5.0,
            &Options::default(),
        );
        assert!(matches!(sol.halt, Some(Halt::Rhs("wall"))));
        assert!((sol.z.re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_span_is_empty() {
        let sol = integrate(|_, _| Ok::<_, Infallible>(c(1.0, 0.0)), 2.0, c(1.0, 1.0), 2.0, &Options::default());
        assert!(sol.segments.is_empty());
        assert_eq!(sol.z, c(1.0, 1.0));
    }
}
