use std::f64::consts::PI;

use proptest::prelude::*;
use qcave::nodal::refine_stagnation;
use qcave::trajectory::{approx_trajectory, integrate, isochrone, stagnation_expansion, IsochroneStatus, ROUNDTRIP_TOL};
use qcave::{Complex64, Error, GaussianPacket, Scenario, Superposition, TrajectoryKind, TrajectoryStatus};

const TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn preset(name: &str) -> Superposition {
    Scenario::preset(name).unwrap().superposition().unwrap()
}

fn kind_of(polya: bool) -> TrajectoryKind {
    if polya {
        TrajectoryKind::Polya
    } else {
        TrajectoryKind::Quantum
    }
}

/// Launch points on the left packet at t = 0, well inside its envelope.
fn launch() -> impl Strategy<Value = Complex64> {
    (-1.5..1.5f64, -1.5..1.5f64).prop_map(|(dx, y)| c(-10.0 + dx, y))
}

/// Net turns of the path `z(t)` about the origin, sampled densely.
fn winding_about_origin(path: &[Complex64]) -> f64 {
    path.windows(2).map(|w| (w[1] / w[0]).arg()).sum::<f64>() / (2.0 * PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mirrored_launch_gives_mirrored_path(z0 in launch(), polya in any::<bool>()) {
        let s = preset("case1");
        let a = integrate(&s, kind_of(polya), z0, 0.0, 10.0, TOL);
        let b = integrate(&s, kind_of(polya), -z0, 0.0, 10.0, TOL);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                for x in &a.samples {
                    let y = b.at(x.t).unwrap();
                    // tol acts as both absolute and relative tolerance
                    prop_assert!((x.z + y).norm() <= 2.0 * TOL * (1.0 + x.z.norm()), "t={}: {} vs {}", x.t, x.z, y);
                }
            }
            // a trajectory running into a pole does so on both sides
            (Err(ea), Err(eb)) => prop_assert_eq!(ea.kind(), eb.kind()),
            (a, b) => prop_assert!(false, "asymmetric outcome: {:?} / {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn velocity_matches_guidance(z0 in launch(), polya in any::<bool>()) {
        let s = preset("case1");
        let tr = match integrate(&s, kind_of(polya), z0, 0.0, 10.0, TOL) {
            Ok(tr) => tr,
            Err(Error::PoleEncounter { partial, .. }) => *partial,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(tr.samples.windows(2).all(|w| w[1].t > w[0].t));
        // Richardson-extrapolated central difference of the dense output,
        // with h well below the local step so curvature near nodes is resolved
        let cd = |t: f64, h: f64| (tr.at(t + h).unwrap() - tr.at(t - h).unwrap()) / (2.0 * h);
        for w in tr.samples.windows(3) {
            let smp = &w[1];
            let h = 0.01 * (smp.t - w[0].t).min(w[2].t - smp.t);
            prop_assert_eq!(s.qmf(smp.z, smp.t).unwrap(), smp.p);
            let v = (4.0 * cd(smp.t, h / 2.0) - cd(smp.t, h)) / 3.0;
            let expected = if polya { smp.p.conj() } else { smp.p };
            prop_assert!((v - expected).norm() <= 1e-4 * (1.0 + expected.norm()), "t={} v={} p={}", smp.t, v, expected);
        }
    }

    #[test]
    fn polya_velocity_is_conjugate(x in -4.0..4.0f64, y in -2.0..2.0f64, t in 0.5..9.5f64) {
        let s = preset("case2");
        let z = c(x, y);
        prop_assume!(s.value(z, t).norm() > 1e-3);
        let p = s.qmf(z, t).unwrap();
        // central difference of each path through (z, t)
        let h = 1e-5;
        let velocity = |kind| {
            let ahead = integrate(&s, kind, z, t, t + h, 1e-13).unwrap();
            let behind = integrate(&s, kind, z, t, t - h, 1e-13).unwrap();
            prop_assert_eq!(ahead.samples[0].p, p);
            Ok((ahead.end() - behind.end()) / (2.0 * h))
        };
        let vq = velocity(TrajectoryKind::Quantum)?;
        let vw = velocity(TrajectoryKind::Polya)?;
        prop_assert!((vw - vq.conj()).norm() < 1e-4 * (1.0 + p.norm()), "{} vs {}", vw, vq.conj());
        prop_assert!((vq - p).norm() < 1e-4 * (1.0 + p.norm()));
    }
}

#[test]
fn isochrone_round_trips() {
    for name in ["case1", "case2"] {
        let s = preset(name);
        let targets: Vec<f64> = (-12..=12).map(|k| 0.3 * k as f64 + 0.01).collect();
        let iso = isochrone(&s, TrajectoryKind::Quantum, &targets, 5.0, 0.0, TOL).unwrap();
        for p in &iso.points {
            if let IsochroneStatus::Ok = p.status {
                let r = p.roundtrip_residual.unwrap();
                assert!(r < ROUNDTRIP_TOL, "{name} x={}: {r}", p.x_arrival);
                let fwd = integrate(&s, TrajectoryKind::Quantum, p.z_launch.unwrap(), 0.0, 5.0, 1e-12).unwrap();
                assert!((fwd.end() - p.x_arrival).norm() < ROUNDTRIP_TOL);
            }
        }
        assert!(iso.launched().count() >= targets.len() - 1, "{name}: {:?}", iso.points);
    }
}

#[test]
fn near_origin_arrivals_wrap_the_stagnation_curve() {
    // arrivals between the origin and the first node at t = 5
    let s = preset("case1");
    let lambda = PI;
    let mut short = Vec::new();
    for k in 1..16 {
        let x = lambda / 4.0 * k as f64 / 16.0;
        let back = integrate(&s, TrajectoryKind::Quantum, c(x, 0.0), 5.0, 3.5, TOL).unwrap();
        let fwd = integrate(&s, TrajectoryKind::Quantum, c(x, 0.0), 5.0, 6.5, TOL).unwrap();
        let n = 3000;
        let path: Vec<Complex64> = (0..=n)
            .map(|i| 3.5 + 3.0 * i as f64 / n as f64)
            .map(|t| if t <= 5.0 { back.at(t).unwrap() } else { fwd.at(t).unwrap() })
            .collect();
        let w = winding_about_origin(&path);
        if w.abs() < 1.0 {
            short.push(format!("x={x:.3}: {w:.3}"));
        }
    }
    assert!(short.is_empty(), "fewer than one turn about z = 0 over [3.5, 6.5]: {}", short.join(", "));
}

#[test]
fn single_packet_closed_form() {
    let pk = GaussianPacket::new(-10.0, 2.0, 2f64.sqrt()).unwrap();
    let s = Superposition::new(vec![pk]).unwrap();
    for z0 in [c(-9.0, 0.5), c(-11.0, -1.0), c(-10.0, 2.0)] {
        let tr = integrate(&s, TrajectoryKind::Quantum, z0, 0.0, 10.0, TOL).unwrap();
        for k in 0..=100 {
            let t = 0.1 * k as f64;
            // z(t) = x_t + (z0 - x0) sigma_tilde(t) / sigma0
            let exact = c(-10.0 + 2.0 * t, 0.0) + (z0 + 10.0) * c(1.0, t / 4.0);
            assert!((tr.at(t).unwrap() - exact).norm() < 1e-8);
        }
    }
}

#[test]
fn poles_abort_with_partial_path() {
    let s = preset("case1");
    let node = c(PI / 4.0, 0.0);
    assert!(matches!(integrate(&s, TrajectoryKind::Quantum, node, 5.0, 6.0, TOL), Err(Error::PoleProximity { .. })));
    // Polya flow circles nodes, quantum flow runs into them: launch just
    // beside a node and look for an abort or a completed path
    match integrate(&s, TrajectoryKind::Quantum, node + c(1e-4, 1e-4), 5.0, 6.0, TOL) {
        Err(Error::PoleEncounter { partial, .. }) => {
            assert_eq!(partial.status, TrajectoryStatus::AbortedNearPole);
            assert!(!partial.samples.is_empty());
            assert!(partial.t_end() >= 5.0);
        }
        Ok(tr) => assert_eq!(tr.status, TrajectoryStatus::Completed),
        Err(e) => panic!("unexpected {e}"),
    }
}

#[test]
fn backward_integration_retraces() {
    let s = preset("case2");
    let fwd = integrate(&s, TrajectoryKind::Quantum, c(-5.1, 0.2), 0.0, 4.0, 1e-11).unwrap();
    let back = integrate(&s, TrajectoryKind::Quantum, fwd.end(), 4.0, 0.0, 1e-11).unwrap();
    assert!((back.end() - c(-5.1, 0.2)).norm() < 1e-6);
    assert!(back.samples.windows(2).all(|w| w[1].t < w[0].t));
    assert!(back.ascending().windows(2).all(|w| w[1].t > w[0].t));
}

#[test]
fn stagnation_expansion_data() {
    let s = preset("case1");
    let st = refine_stagnation(&s, c(PI / 2.0, 0.1), 5.0).unwrap();
    let e = stagnation_expansion(&s, st.z, 5.0).unwrap();
    assert!(s.qmf(st.z, 5.0).unwrap().norm() < 1e-10);
    assert_eq!(e.alpha, s.qmf_dz(st.z, 5.0).unwrap().dp);
    // dp/dt at fixed z, fourth-order difference in t
    let h = 1e-3;
    let q = |t: f64| s.qmf(st.z, t).unwrap();
    let beta = (-q(5.0 + 2.0 * h) + 8.0 * q(5.0 + h) - 8.0 * q(5.0 - h) + q(5.0 - 2.0 * h)) / (12.0 * h);
    assert!((e.beta - beta).norm() < 1e-6 * (1.0 + beta.norm()), "{} vs {beta}", e.beta);
    assert!(matches!(stagnation_expansion(&s, c(1.0, 0.3), 5.0), Err(Error::NotStagnation { .. })));

    let origin = stagnation_expansion(&s, c(0.0, 0.0), 5.0).unwrap();
    let z = c(0.05, -0.02);
    assert_eq!(approx_trajectory(&origin, z, 0.0).unwrap(), z);
    // with beta = 0 the path is an exponential spiral
    let pure = qcave::StagnationExpansion { beta: c(0.0, 0.0), ..origin };
    let dt = 0.3;
    let spiral = z * (pure.alpha * dt).exp();
    assert!((approx_trajectory(&pure, z, dt).unwrap() - spiral).norm() < 1e-14);
}
