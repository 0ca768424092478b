//! Fixed-point start at the singular endpoint.
//!
//! The solution of `(ρw')' = σρf(w)`, `w(0) = a`, `w'(0) = 0` is the fixed
//! point of
//!
//! ```text
//! S(v)(t) = a + σ ∫₀^t (1/ρ(s)) ∫₀^s ρ(τ) f(v(τ)) dτ ds.
//! ```
//!
//! With `τ = s·u` the inner quotient becomes `s ∫₀¹ (ρ(su)/ρ(s)) f(v(su)) du`,
//! whose weight behaves like `u^Γ` at `u = 0`; tanh-sinh absorbs that endpoint
//! behavior. Iterates live on Chebyshev points of `[0, h]`.

use super::trajectory::{barycentric, Rhs};
use super::IvpError;
use crate::coefficients::CoefficientFamily;
use crate::quadrature::{GaussLegendre, TanhSinh};

/// Number of Chebyshev intervals used for the iterate on `[0, h]`.
const CHEB_N: usize = 8;
/// Successive-difference stopping threshold (relative to `max(1, |a|)`).
const PICARD_TOL: f64 = 1e-14;
const MAX_ITER: usize = 60;

/// Fixed point sampled on Chebyshev points, with `w'` at the same points.
#[derive(Debug, Clone)]
pub struct PicardStart {
    pub h: f64,
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
    pub iterations: usize,
    /// Contraction radius `δ` that admitted `h`.
    pub delta: f64,
}

impl PicardStart {
    /// `(w(h), w'(h))`.
    pub fn end_state(&self) -> (f64, f64) {
        (self.w[CHEB_N], self.wp[CHEB_N])
    }
}

/// `(1/ρ(t)) ∫₀^t ρ ≤ N` on `[0, 1]`.
pub fn rho_bound(family: &CoefficientFamily) -> f64 {
    match *family {
        CoefficientFamily::PowerLaw { theta } => 1.0 / (1.0 + theta),
        _ => {
            let rule = TanhSinh::standard();
            (1..=200).map(|i| family.mean_ratio(i as f64 / 200.0, &rule)).fold(0.0, f64::max)
        }
    }
}

/// Contraction radius `δ = min{δ₀/(2MN), 1/(4CN), T}` maximized over `δ₀`.
///
/// `M` bounds `|f|` and `C` bounds `|f'|` on `[a − δ₀, a + δ₀]`; `T = 1` is the
/// interval on which `N` was computed.
pub fn contraction_radius(rhs: &Rhs, a: f64, n_bound: f64) -> f64 {
    let scale = a.abs().max(1.0);
    let mut best: f64 = 0.0;
    for j in 0..40 {
        let d0 = scale * 0.5f64.powi(j);
        let mut m: f64 = 0.0;
        let mut c: f64 = 0.0;
        for i in 0..=64 {
            let t = a - d0 + 2.0 * d0 * i as f64 / 64.0;
            m = m.max(rhs.nl.f(t).abs());
            c = c.max(rhs.nl.df(t).abs());
        }
        let r1 = if m > 0.0 { d0 / (2.0 * m * n_bound) } else { f64::INFINITY };
        let r2 = if c > 0.0 { 1.0 / (4.0 * c * n_bound) } else { f64::INFINITY };
        best = best.max(r1.min(r2).min(1.0));
    }
    best
}

/// Runs the Picard iteration on `[0, h]`.
///
/// Rejects `h > δ` and reports non-contraction when successive differences
/// stop decreasing before reaching the tolerance.
pub fn picard_start(rhs: &Rhs, a: f64, h: f64, n_bound: f64) -> Result<PicardStart, IvpError> {
    if !rhs.family.is_singular_at_zero() {
        return Err(IvpError::InvalidProblem("Picard start requires a singular endpoint at r = 0".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(IvpError::InvalidProblem(format!("start radius must be positive, got {h}")));
    }
    let delta = contraction_radius(rhs, a, n_bound);
    if h > delta {
        return Err(IvpError::StepTooLarge { h, delta });
    }
    let sigma = rhs.sign.value();
    let t: Vec<f64> = (0..=CHEB_N)
        .map(|j| 0.5 * h * (1.0 - (j as f64 * std::f64::consts::PI / CHEB_N as f64).cos()))
        .collect();
    if rhs.nl.f(a) == 0.0 {
        return Ok(PicardStart { h, t, w: vec![a; CHEB_N + 1], wp: vec![0.0; CHEB_N + 1], iterations: 0, delta });
    }
    let inner = TanhSinh::new(1.0 / 6.0, 3.2);
    let outer = GaussLegendre::new(10);
    let family = rhs.family;

    // P(s) = s ∫₀¹ exp(L(su) − L(s)) f(v(su)) du, with v the current iterate.
    let quotient = |v: &[f64], s: f64| -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let ls = family.log_rho(s);
        s * inner.integrate_unit(|u, _| {
            let x = s * u;
            (family.log_rho(x) - ls).exp() * rhs.nl.f(barycentric(&t, v, x))
        })
    };

    let mut v = vec![a; CHEB_N + 1];
    let mut prev_diff = f64::INFINITY;
    let scale = a.abs().max(1.0);
    for it in 1..=MAX_ITER {
        let mut next = vec![a; CHEB_N + 1];
        for j in 1..=CHEB_N {
            let tj = t[j];
            next[j] = a + sigma * outer.integrate(0.0, tj, |s| quotient(&v, s));
        }
        let diff = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = next;
        if diff <= PICARD_TOL * scale {
            let wp = t.iter().map(|&s| sigma * quotient(&v, s)).collect();
            return Ok(PicardStart { h, t, w: v, wp, iterations: it, delta });
        }
        if diff >= prev_diff {
            return Err(IvpError::NonContraction { iteration: it, difference: diff });
        }
        prev_diff = diff;
    }
    Err(IvpError::NonContraction { iteration: MAX_ITER, difference: prev_diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Branch, Nonlinearity};
    use crate::singular_ivp::Sign;

    fn aubin_talenti_rhs() -> Rhs {
        Rhs {
            family: CoefficientFamily::PowerLaw { theta: 2.0 },
            nl: Nonlinearity::PurePower { lambda: 1.0, p: 5.0 },
            sign: Sign::Minus,
        }
    }

    #[test]
    fn matches_exact_solution_at_h() {
        let rhs = aubin_talenti_rhs();
        let h = 0.01;
        let st = picard_start(&rhs, 1.0, h, 1.0 / 3.0).unwrap();
        let (w, wp) = st.end_state();
        let exact = (1.0 + h * h / 3.0).powf(-0.5);
        let dexact = -(h / 3.0) * (1.0 + h * h / 3.0).powf(-1.5);
        assert!((w - exact).abs() < 1e-13, "{w} vs {exact}");
        assert!((wp - dexact).abs() < 1e-12, "{wp} vs {dexact}");
        // Leading series term; the next term is h^4/24 ≈ 4.2e-10.
        assert!((w - (1.0 - h * h / 6.0)).abs() < 1e-9);
    }

    #[test]
    fn second_derivative_at_origin_is_f_over_one_plus_gamma() {
        let rhs = Rhs {
            family: CoefficientFamily::SinhRatio { alpha: 1.5, beta: 0.5, branch: Branch::Plus },
            nl: Nonlinearity::PowerMinusLinear { lambda: 1.0, p: 3.0 },
            sign: Sign::Plus,
        };
        let n = rho_bound(&rhs.family);
        let a = 2.0;
        let gamma = 2.0;
        let target = rhs.nl.f(a) / (1.0 + gamma);
        for h in [1e-3, 5e-4] {
            let st = picard_start(&rhs, a, h, n).unwrap();
            let (w, wp) = st.end_state();
            let est = 2.0 * (w - a) / (h * h);
            assert!((est - target).abs() < 50.0 * h * h * target.abs().max(1.0), "{est} vs {target}");
            assert!((wp / h - target).abs() < 50.0 * h * h * target.abs().max(1.0));
        }
    }

    #[test]
    fn stationary_value_is_fixed() {
        let rhs = Rhs {
            family: CoefficientFamily::PowerLaw { theta: 1.0 },
            nl: Nonlinearity::PowerMinusLinear { lambda: 1.0, p: 3.0 },
            sign: Sign::Plus,
        };
        for h in [1e-4, 1e-3] {
            assert_eq!(picard_start(&rhs, 1.0, h, 0.5).unwrap().end_state(), (1.0, 0.0));
        }
    }

    #[test]
    fn rejects_radius_beyond_delta() {
        let rhs = aubin_talenti_rhs();
        let delta = contraction_radius(&rhs, 1.0, 1.0 / 3.0);
        assert!(delta >= 0.01);
        match picard_start(&rhs, 1.0, 2.0 * delta, 1.0 / 3.0) {
            Err(IvpError::StepTooLarge { delta: d, .. }) => assert_eq!(d, delta),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn agrees_with_taylor_start_to_fourth_order() {
        let rhs = aubin_talenti_rhs();
        let taylor = |h: f64| 1.0 - h * h / 6.0;
        let e1 = (picard_start(&rhs, 1.0, 1e-2, 1.0 / 3.0).unwrap().end_state().0 - taylor(1e-2)).abs();
        let e2 = (picard_start(&rhs, 1.0, 5e-3, 1.0 / 3.0).unwrap().end_state().0 - taylor(5e-3)).abs();
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn non_integer_gamma_is_handled() {
        let rhs = Rhs {
            family: CoefficientFamily::PowerLaw { theta: 0.5 },
            nl: Nonlinearity::PurePower { lambda: 1.0, p: 3.0 },
            sign: Sign::Minus,
        };
        let h = 1e-3;
        let st = picard_start(&rhs, 1.0, h, 1.0 / 1.5).unwrap();
        let (w, _) = st.end_state();
        let series = 1.0 - h * h / (2.0 * 1.5);
        assert!((w - series).abs() < 1e-11);
    }
}
