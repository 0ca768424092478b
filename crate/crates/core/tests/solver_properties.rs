//! Invariants of the singular solver checked against symmetries of the equation.

use proptest::prelude::*;
use yamabe_core::coefficients::{CoefficientFamily, Nonlinearity};
use yamabe_core::diagnostics::{energy, ENERGY_DRIFT_BOUND};
use yamabe_core::singular_ivp::{integrate, CollapseReason, Sign, SingularIvp, Termination};

fn classical(theta: f64, p: f64, a: f64, r_max: f64) -> SingularIvp {
    SingularIvp::new(
        CoefficientFamily::PowerLaw { theta },
        Nonlinearity::PurePower { lambda: 1.0, p },
        Sign::Minus,
        a,
        r_max,
    )
}

fn repulsive(theta: f64, p: f64, a: f64) -> SingularIvp {
    SingularIvp::new(
        CoefficientFamily::PowerLaw { theta },
        Nonlinearity::PurePower { lambda: -1.0, p },
        Sign::Minus,
        a,
        200.0,
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// `w_c(r) = c · w_1(c^{(p−1)/2} r)` for the pure power.
    #[test]
    fn scaling_law(theta in 0.5f64..3.0, pi in 0usize..3, c in 0.5f64..2.0) {
        let p = [2.0, 3.0, 5.0][pi];
        let k = c.powf(0.5 * (p - 1.0));
        let base = integrate(&classical(theta, p, 1.0, 10.0 * k.max(1.0))).unwrap();
        let scaled = integrate(&classical(theta, p, c, 10.0)).unwrap();
        for i in 0..=200 {
            let r = 10.0 * i as f64 / 200.0;
            let (w, _) = scaled.eval(r).unwrap();
            let (w1, _) = base.eval(k * r).unwrap();
            prop_assert!((w - c * w1).abs() <= 1e-7 * c.max(1.0), "r={} w={} scaled={}", r, w, c * w1);
        }
    }

    /// `f` is odd, so `−a` gives `−w`.
    #[test]
    fn odd_symmetry(theta in 0.0f64..4.0, p in 1.5f64..6.0, a in 0.1f64..3.0) {
        let pos = integrate(&classical(theta, p, a, 30.0)).unwrap();
        let neg = integrate(&classical(theta, p, -a, 30.0)).unwrap();
        prop_assert_eq!(pos.termination, neg.termination);
        for i in 0..=300 {
            let r = 30.0 * i as f64 / 300.0;
            let (w, wp) = pos.eval(r).unwrap();
            let (v, vp) = neg.eval(r).unwrap();
            prop_assert!((w + v).abs() <= 1e-9 * w.abs().max(1.0), "r={} w={} v={}", r, w, v);
            prop_assert!((wp + vp).abs() <= 1e-9 * wp.abs().max(1.0), "r={} w'={} v'={}", r, wp, vp);
        }
    }

    /// The energy of an oscillating or decaying solution never grows.
    #[test]
    fn energy_does_not_increase(theta in 0.5f64..4.0, p in 1.5f64..6.0, a in 0.2f64..2.0) {
        let ivp = classical(theta, p, a, 50.0);
        let traj = integrate(&ivp).unwrap();
        prop_assert_eq!(traj.termination, Termination::ReachedEnd);
        let e = energy(&traj, &ivp.nl, Sign::Minus);
        prop_assert!(e.max_increase_rate <= ENERGY_DRIFT_BOUND, "{}", e.max_increase_rate);
    }

    /// Negative `Λ` with `p ≤ 3` blows up and the verdict is reached: near the
    /// pole `|w| ~ (R − r)^{−2/(p−1)}` passes the cap before the step floor.
    #[test]
    fn negative_lambda_blows_up(theta in 0.5f64..4.0, p in 2.0f64..=3.0, a in 0.3f64..2.0) {
        let traj = integrate(&repulsive(theta, p, a)).unwrap();
        prop_assert!(traj.is_blow_up(), "{:?}", traj.termination);
        prop_assert!(traj.nodes.windows(2).all(|w| w[1].w >= w[0].w));
    }

    /// For `p > 3` the pole is too mild for `|w|` to reach the cap before the
    /// step floor, so the run stops as a flagged collapse rather than a verdict.
    #[test]
    fn steep_negative_lambda_stops_early(theta in 0.5f64..4.0, p in 3.5f64..5.0, a in 0.3f64..2.0) {
        let traj = integrate(&repulsive(theta, p, a)).unwrap();
        let flagged = matches!(traj.termination, Termination::StepCollapse { reason: CollapseReason::StepBelowFloor, .. });
        prop_assert!(flagged || traj.is_blow_up(), "{:?}", traj.termination);
        prop_assert!(traj.last().r < 200.0);
        prop_assert!(traj.nodes.windows(2).all(|w| w[1].w >= w[0].w));
    }
}

#[test]
fn small_amplitude_follows_linearization() {
    // w'' = w³ − w with w(0) = 1e-4: the cubic term is 1e-8 relative, so w ≈ a cos r.
    let a = 1e-4;
    let ivp = SingularIvp::new(
        CoefficientFamily::PowerLaw { theta: 0.0 },
        Nonlinearity::PowerMinusLinear { lambda: 1.0, p: 3.0 },
        Sign::Plus,
        a,
        6.0,
    );
    let traj = integrate(&ivp).unwrap();
    for i in 0..=60 {
        let r = i as f64 / 10.0;
        let (w, _) = traj.eval(r).unwrap();
        assert!((w - a * r.cos()).abs() <= 1e-10, "r={r} w={w}");
    }
}
