//! Shared fixtures for the benchmarks.

use num_complex::Complex64;
use qcave::{Scenario, Superposition};

pub fn preset(name: &str) -> Superposition {
    Scenario::preset(name).and_then(|s| s.superposition()).expect("preset is valid")
}

/// `n x n` points covering `[-4, 4] x [-3, 3]`.
pub fn plane_points(n: usize) -> Vec<Complex64> {
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    (0..n * n).map(|k| Complex64::new(step(-4.0, 4.0, k % n), step(-3.0, 3.0, k / n))).collect()
}
