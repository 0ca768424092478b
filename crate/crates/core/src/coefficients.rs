//! Singular coefficient families `q`, their integrating factors `ρ`, the odd
//! superlinear nonlinearities `f`, and the hypothesis checker.
//!
//! The integrating factor is normalized by `ρ(1) = 1`, so `ρ(r) = exp ∫₁^r q`.
//! Every family carries `ln ρ` in closed form; quotients `ρ(a)/ρ(b)` are always
//! formed through logarithms to stay finite near the singular endpoints.

use crate::quadrature::{adaptive_simpson, TanhSinh};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

/// Errors raised by coefficient and nonlinearity evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoefficientError {
    #[error("r = {r} is outside the open domain ({lo}, {hi})")]
    Domain { r: f64, lo: f64, hi: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

/// Sign choice inside the hyperbolic family `(α cosh r ± β)/sinh r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Endpoint of a coefficient domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Zero,
    Pi,
}

/// Closed-form coefficient `q(r)` of `w'' + q(r) w' = ±f(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum CoefficientFamily {
    /// `q = θ/r` on `(0, ∞)`.
    PowerLaw { theta: f64 },
    /// `q = (α cosh r ± β)/sinh r` on `(0, ∞)`.
    SinhRatio { alpha: f64, beta: f64, branch: Branch },
    /// `q = (α cos r − β)/sin r` on `(0, π)`.
    SinRatio { alpha: f64, beta: f64 },
}

impl fmt::Display for CoefficientFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientFamily::PowerLaw { theta } => write!(f, "power:{theta}"),
            CoefficientFamily::SinhRatio { alpha, beta, branch } => {
                let b = if *branch == Branch::Plus { "plus" } else { "minus" };
                write!(f, "sinh:{alpha},{beta},{b}")
            }
            CoefficientFamily::SinRatio { alpha, beta } => write!(f, "sin:{alpha},{beta}"),
        }
    }
}

/// Numerically stable `ln sinh x` for `x > 0`.
fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Numerically stable `ln cosh x`.
fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax - std::f64::consts::LN_2 + (-2.0 * ax).exp().ln_1p()
}

impl CoefficientFamily {
    /// Checks the admissible parameter ranges (all `ρ` exponents positive).
    pub fn validate(&self) -> Result<(), CoefficientError> {
        match *self {
            CoefficientFamily::PowerLaw { theta } => {
                if !(theta.is_finite() && theta >= 0.0) {
                    return Err(CoefficientError::InvalidParameters(format!(
                        "power-law exponent must be finite and nonnegative, got {theta}"
                    )));
                }
            }
            CoefficientFamily::SinhRatio { alpha, beta, .. }
            | CoefficientFamily::SinRatio { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite()) || alpha + beta <= 0.0 || alpha - beta <= 0.0 {
                    return Err(CoefficientError::InvalidParameters(format!(
                        "need alpha + beta > 0 and alpha - beta > 0, got alpha={alpha}, beta={beta}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Open domain `(lo, hi)` of the family.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            CoefficientFamily::SinRatio { .. } => (0.0, PI),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// Endpoints where `q` blows up.
    pub fn singular_endpoints(&self) -> Vec<Endpoint> {
        match *self {
            CoefficientFamily::PowerLaw { theta: 0.0 } => vec![],
            CoefficientFamily::SinRatio { .. } => vec![Endpoint::Zero, Endpoint::Pi],
            _ => vec![Endpoint::Zero],
        }
    }

    /// True when `r = 0` is a singular point of the equation.
    pub fn is_singular_at_zero(&self) -> bool {
        self.singular_endpoints().contains(&Endpoint::Zero)
    }

    /// `q(r)` with domain checking.
    pub fn q_eval(&self, r: f64) -> Result<f64, CoefficientError> {
        let (lo, hi) = self.domain();
        if !(r > lo && r < hi) {
            return Err(CoefficientError::Domain { r, lo, hi });
        }
        Ok(self.q(r))
    }

    /// `q(r)` without domain checks, for hot loops inside the integrator.
    pub fn q(&self, r: f64) -> f64 {
        match *self {
            CoefficientFamily::PowerLaw { theta } => {
                if theta == 0.0 {
                    0.0
                } else {
                    theta / r
                }
            }
            CoefficientFamily::SinhRatio { alpha, beta, branch } => {
                alpha / r.tanh() + branch.sign() * beta / r.sinh()
            }
            CoefficientFamily::SinRatio { alpha, beta } => (alpha * r.cos() - beta) / r.sin(),
        }
    }

    /// Closed-form derivative `q'(r)`.
    pub fn dq(&self, r: f64) -> f64 {
        match *self {
            CoefficientFamily::PowerLaw { theta } => -theta / (r * r),
            CoefficientFamily::SinhRatio { alpha, beta, branch } => {
                let s = r.sinh();
                -(alpha / (s * s)) - branch.sign() * beta / (s * r.tanh())
            }
            CoefficientFamily::SinRatio { alpha, beta } => {
                let s = r.sin();
                (-alpha + beta * r.cos()) / (s * s)
            }
        }
    }

    /// Unnormalized `ln ρ`; the constant is fixed in [`Self::log_rho`].
    fn log_rho_raw(&self, r: f64) -> f64 {
        match *self {
            CoefficientFamily::PowerLaw { theta } => {
                if theta == 0.0 {
                    0.0
                } else {
                    theta * r.ln()
                }
            }
            CoefficientFamily::SinhRatio { alpha, beta, branch } => {
                let b = branch.sign() * beta;
                (alpha + b) * ln_sinh(0.5 * r) + (alpha - b) * ln_cosh(0.5 * r)
            }
            CoefficientFamily::SinRatio { alpha, beta } => {
                (alpha - beta) * (0.5 * r).sin().ln() + (alpha + beta) * (0.5 * r).cos().ln()
            }
        }
    }

    /// `ln ρ(r)` with `ρ(1) = 1`; `-∞` at a singular endpoint.
    pub fn log_rho(&self, r: f64) -> f64 {
        self.log_rho_raw(r) - self.log_rho_raw(1.0)
    }

    /// Integrating factor `ρ(r) = exp ∫₁^r q`, total on the closure of the domain.
    pub fn rho_eval(&self, r: f64) -> f64 {
        let (lo, hi) = self.domain();
        if r <= lo {
            return if self.is_singular_at_zero() { 0.0 } else { self.log_rho(lo).exp() };
        }
        if r >= hi {
            return if hi.is_finite() { 0.0 } else { f64::INFINITY };
        }
        self.log_rho(r).exp()
    }

    /// `Γ = lim −q²/q'` at a singular endpoint.
    pub fn gamma_limit(&self, endpoint: Endpoint) -> Result<f64, CoefficientError> {
        if !self.singular_endpoints().contains(&endpoint) {
            return Err(CoefficientError::NotApplicable(format!(
                "{self} has no singularity at {endpoint:?}"
            )));
        }
        Ok(match (*self, endpoint) {
            (CoefficientFamily::PowerLaw { theta }, _) => theta,
            (CoefficientFamily::SinhRatio { alpha, beta, branch }, _) => alpha + branch.sign() * beta,
            (CoefficientFamily::SinRatio { alpha, beta }, Endpoint::Zero) => alpha - beta,
            (CoefficientFamily::SinRatio { alpha, beta }, Endpoint::Pi) => alpha + beta,
        })
    }

    /// Coefficient of the problem started from `π` and written in `s = π − r`.
    ///
    /// `w(r) = y(π − r)` turns `q(r)` into `−q(π − s)`, which is the same
    /// family with `β` negated.
    pub fn reflected(&self) -> Result<CoefficientFamily, CoefficientError> {
        match *self {
            CoefficientFamily::SinRatio { alpha, beta } => Ok(CoefficientFamily::SinRatio { alpha, beta: -beta }),
            _ => Err(CoefficientError::NotApplicable(format!("{self} has no finite right endpoint"))),
        }
    }

    /// `(1/ρ(t)) ∫₀^t ρ`, evaluated as `t ∫₀¹ ρ(tu)/ρ(t) du`.
    pub fn mean_ratio(&self, t: f64, rule: &TanhSinh) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let lt = self.log_rho(t);
        t * rule.integrate_unit(|u, _| (self.log_rho(t * u) - lt).exp())
    }
}

/// Odd superlinear nonlinearity `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum Nonlinearity {
    /// `Λ|t|^{p−1}t`.
    PurePower { lambda: f64, p: f64 },
    /// `Λ(|t|^{p−1}t − t)`.
    PowerMinusLinear { lambda: f64, p: f64 },
    /// `Λ|t|^{p−1}t − δ|t|^{s−1}t`.
    PowerDifference { lambda: f64, delta: f64, p: f64, s: f64 },
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::PurePower { lambda, p } => write!(f, "power:{lambda},{p}"),
            Nonlinearity::PowerMinusLinear { lambda, p } => write!(f, "pml:{lambda},{p}"),
            Nonlinearity::PowerDifference { lambda, delta, p, s } => write!(f, "pdiff:{lambda},{delta},{p},{s}"),
        }
    }
}

impl Nonlinearity {
    /// Checks the admissible parameter ranges.
    pub fn validate(&self) -> Result<(), CoefficientError> {
        let bad = |msg: String| Err(CoefficientError::InvalidParameters(msg));
        match *self {
            Nonlinearity::PurePower { lambda, p } => {
                if !(lambda.is_finite() && lambda != 0.0) {
                    return bad(format!("pure power needs lambda != 0, got {lambda}"));
                }
                if !(p.is_finite() && p > 1.0) {
                    return bad(format!("need p > 1, got {p}"));
                }
            }
            Nonlinearity::PowerMinusLinear { lambda, p } => {
                if !(lambda.is_finite() && lambda > 0.0) {
                    return bad(format!("power-minus-linear needs lambda > 0, got {lambda}"));
                }
                if !(p.is_finite() && p > 1.0) {
                    return bad(format!("need p > 1, got {p}"));
                }
            }
            Nonlinearity::PowerDifference { lambda, delta, p, s } => {
                if !(lambda > 0.0 && delta > 0.0 && lambda.is_finite() && delta.is_finite()) {
                    return bad(format!("power difference needs lambda, delta > 0, got {lambda}, {delta}"));
                }
                if !(s >= 1.0 && s < p && p.is_finite()) {
                    return bad(format!("need 1 <= s < p, got s={s}, p={p}"));
                }
            }
        }
        Ok(())
    }

    /// Superlinear exponent `p`.
    pub fn p(&self) -> f64 {
        match *self {
            Nonlinearity::PurePower { p, .. }
            | Nonlinearity::PowerMinusLinear { p, .. }
            | Nonlinearity::PowerDifference { p, .. } => p,
        }
    }

    /// Leading coefficient `Λ`.
    pub fn lambda(&self) -> f64 {
        match *self {
            Nonlinearity::PurePower { lambda, .. }
            | Nonlinearity::PowerMinusLinear { lambda, .. }
            | Nonlinearity::PowerDifference { lambda, .. } => lambda,
        }
    }

    /// Same nonlinearity with `Λ` (and `δ`) scaled by `c`.
    pub fn scaled(&self, c: f64) -> Nonlinearity {
        match *self {
            Nonlinearity::PurePower { lambda, p } => Nonlinearity::PurePower { lambda: c * lambda, p },
            Nonlinearity::PowerMinusLinear { lambda, p } => Nonlinearity::PowerMinusLinear { lambda: c * lambda, p },
            Nonlinearity::PowerDifference { lambda, delta, p, s } => Nonlinearity::PowerDifference {
                lambda: c * lambda,
                delta: c * delta,
                p,
                s,
            },
        }
    }

    /// `f(t)`, odd by construction.
    pub fn f(&self, t: f64) -> f64 {
        let a = t.abs();
        let g = match *self {
            Nonlinearity::PurePower { lambda, p } => lambda * a.powf(p),
            Nonlinearity::PowerMinusLinear { lambda, p } => lambda * (a.powf(p) - a),
            Nonlinearity::PowerDifference { lambda, delta, p, s } => lambda * a.powf(p) - delta * a.powf(s),
        };
        if t < 0.0 {
            -g
        } else {
            g
        }
    }

    /// `f'(t)`, even.
    pub fn df(&self, t: f64) -> f64 {
        let a = t.abs();
        match *self {
            Nonlinearity::PurePower { lambda, p } => lambda * p * a.powf(p - 1.0),
            Nonlinearity::PowerMinusLinear { lambda, p } => lambda * (p * a.powf(p - 1.0) - 1.0),
            Nonlinearity::PowerDifference { lambda, delta, p, s } => {
                lambda * p * a.powf(p - 1.0) - delta * s * a.powf(s - 1.0)
            }
        }
    }

    /// Closed-form primitive `F(t) = ∫₀^t f`, even.
    pub fn primitive(&self, t: f64) -> f64 {
        let a = t.abs();
        match *self {
            Nonlinearity::PurePower { lambda, p } => lambda * a.powf(p + 1.0) / (p + 1.0),
            Nonlinearity::PowerMinusLinear { lambda, p } => lambda * (a.powf(p + 1.0) / (p + 1.0) - 0.5 * a * a),
            Nonlinearity::PowerDifference { lambda, delta, p, s } => {
                lambda * a.powf(p + 1.0) / (p + 1.0) - delta * a.powf(s + 1.0) / (s + 1.0)
            }
        }
    }

    /// First nonnegative zero after which `f` strictly increases, if any.
    pub fn t0(&self) -> Option<f64> {
        match *self {
            Nonlinearity::PurePower { lambda, .. } => (lambda > 0.0).then_some(0.0),
            Nonlinearity::PowerMinusLinear { .. } => Some(1.0),
            Nonlinearity::PowerDifference { lambda, delta, p, s } => Some((delta / lambda).powf(1.0 / (p - s))),
        }
    }

    /// Smallest `t₁ ≥ t₀` with `F ≥ 0` on `[t₁, ∞)`, if any.
    pub fn t1(&self) -> Option<f64> {
        let t0 = self.t0()?;
        let t = match *self {
            Nonlinearity::PurePower { .. } => 0.0,
            Nonlinearity::PowerMinusLinear { p, .. } => (0.5 * (p + 1.0)).powf(1.0 / (p - 1.0)),
            Nonlinearity::PowerDifference { lambda, delta, p, s } => {
                (delta * (p + 1.0) / (lambda * (s + 1.0))).powf(1.0 / (p - s))
            }
        };
        Some(t.max(t0))
    }
}

/// The hypotheses on `f`, `q` and `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Hash)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    F1,
    F2,
    F3,
    Q1,
    Q2,
    Q3,
    Q4,
    Rho1,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 8] = [
        Hypothesis::F1,
        Hypothesis::F2,
        Hypothesis::F3,
        Hypothesis::Q1,
        Hypothesis::Q2,
        Hypothesis::Q3,
        Hypothesis::Q4,
        Hypothesis::Rho1,
    ];

    /// Short lowercase name (`f1`, `rho1`, ...).
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::F1 => "f1",
            Hypothesis::F2 => "f2",
            Hypothesis::F3 => "f3",
            Hypothesis::Q1 => "q1",
            Hypothesis::Q2 => "q2",
            Hypothesis::Q3 => "q3",
            Hypothesis::Q4 => "q4",
            Hypothesis::Rho1 => "rho1",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
    Inconclusive,
}

/// How a verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Closed-form criterion, confirmed by the recorded numeric probe.
    ClosedForm,
    /// Numeric probe only.
    NumericProbe,
    /// No computation needed (hypothesis does not apply).
    Structural,
}

/// Verdict plus the evidence that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdict {
    pub verdict: Verdict,
    pub method: Method,
    pub evidence: Vec<(String, f64)>,
    pub note: String,
}

/// Verdicts for all hypotheses together with the key witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub verdicts: BTreeMap<Hypothesis, HypothesisVerdict>,
    /// Bound `N` of the `ρ` hypothesis on `[0, 1]`.
    pub n_bound: Option<f64>,
    /// `Γ` at `r = 0`.
    pub gamma: Option<f64>,
}

impl HypothesisReport {
    pub fn verdict(&self, h: Hypothesis) -> Verdict {
        self.verdicts[&h].verdict
    }

    /// Hypotheses whose verdict is `Fail`.
    pub fn failing(&self) -> Vec<Hypothesis> {
        self.verdicts
            .iter()
            .filter(|(_, v)| v.verdict == Verdict::Fail)
            .map(|(h, _)| *h)
            .collect()
    }
}

fn verdict(
    closed: Verdict,
    probe_agrees: bool,
    evidence: Vec<(String, f64)>,
    note: impl Into<String>,
) -> HypothesisVerdict {
    let mut note = note.into();
    let verdict = if probe_agrees {
        closed
    } else {
        note.push_str("; numeric probe disagrees with closed form");
        Verdict::Inconclusive
    };
    HypothesisVerdict { verdict, method: Method::ClosedForm, evidence, note }
}

fn not_applicable(note: &str) -> HypothesisVerdict {
    HypothesisVerdict {
        verdict: Verdict::NotApplicable,
        method: Method::Structural,
        evidence: vec![],
        note: note.to_string(),
    }
}

/// Small-`r` probe radii `10^{-3}, …, 10^{-9}`.
fn small_radii() -> impl Iterator<Item = f64> {
    (3..=9).map(|k| 10f64.powi(-k))
}

/// Large-`r` probe radii `10^{3}, …, 10^{9}`.
fn large_radii() -> impl Iterator<Item = f64> {
    (3..=9).map(|k| 10f64.powi(k))
}

/// Successive-agreement test used by all limit probes: relative for
/// limits of size above one, absolute below.
fn converged(values: &[f64]) -> bool {
    match values {
        [.., a, b] => a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-6 * b.abs().max(1.0),
        _ => false,
    }
}

fn check_f(nl: &Nonlinearity) -> [HypothesisVerdict; 3] {
    let probe_t: Vec<f64> = (1..=6).map(|k| 10f64.powi(k)).collect();
    // (f1): f(t)/t → ∞.
    let ratios: Vec<f64> = probe_t.iter().map(|&t| nl.f(t) / t).collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]) && ratios.last().copied().unwrap_or(0.0) > 1e3;
    let closed_f1 = if nl.lambda() > 0.0 && nl.p() > 1.0 { Verdict::Pass } else { Verdict::Fail };
    let f1 = verdict(
        closed_f1,
        (closed_f1 == Verdict::Pass) == increasing,
        probe_t.iter().zip(&ratios).map(|(t, r)| (format!("f(t)/t at t={t}"), *r)).collect(),
        "superlinear growth: f(t)/t ~ Λ t^(p-1)",
    );

    // (f2): zero t₀ and strict increase beyond it.
    let f2 = match nl.t0() {
        Some(t0) => {
            let grid: Vec<f64> = (0..=120).map(|i| t0 + 10f64.powf(-6.0 + 0.1 * i as f64)).collect();
            let min_slope = grid.iter().map(|&t| nl.df(t)).fold(f64::INFINITY, f64::min);
            let ok = nl.f(t0).abs() <= 1e-12 * (1.0 + t0) && min_slope > 0.0;
            verdict(
                Verdict::Pass,
                ok,
                vec![("t0".into(), t0), ("f(t0)".into(), nl.f(t0)), ("min f' on (t0, t0+1e6]".into(), min_slope)],
                "closed-form t0",
            )
        }
        None => verdict(
            Verdict::Fail,
            true,
            vec![("f'(1)".into(), nl.df(1.0))],
            "f is decreasing on (0, inf): no t0",
        ),
    };

    // (f3): ∫_{t₁+1}^∞ dt/√F < ∞.
    let f3 = match nl.t1() {
        Some(t1) => {
            let lo = t1 + 1.0;
            let hi = 1e6_f64;
            let g = |u: f64| {
                let t = u.exp();
                t / nl.primitive(t).sqrt()
            };
            let body = adaptive_simpson(&g, lo.ln(), hi.ln(), 1e-10, 50);
            // F(t)/t^{p+1} is nondecreasing for every built-in variant, so
            // F(t) ≥ c t^{p+1} on [hi, ∞) with c = F(hi)/hi^{p+1}.
            let p = nl.p();
            let c = nl.primitive(hi) / hi.powf(p + 1.0);
            let tail = 2.0 * hi.powf(0.5 * (1.0 - p)) / ((p - 1.0) * c.sqrt());
            let grid_ok = (0..200).all(|i| nl.primitive(t1 + 0.05 * i as f64) >= -1e-12);
            let finite = body.is_finite() && tail.is_finite();
            verdict(
                if p > 1.0 { Verdict::Pass } else { Verdict::Fail },
                grid_ok && finite,
                vec![
                    ("t1".into(), t1),
                    ("integral on [t1+1, 1e6]".into(), body),
                    ("analytic tail bound beyond 1e6".into(), tail),
                ],
                "F ~ Λ t^(p+1)/(p+1) makes 1/sqrt(F) integrable for p > 1",
            )
        }
        None => verdict(
            Verdict::Fail,
            true,
            vec![("F(10)".into(), nl.primitive(10.0))],
            "F is negative for all t > 0",
        ),
    };
    [f1, f2, f3]
}

fn check_q(family: &CoefficientFamily) -> ([HypothesisVerdict; 4], Option<f64>) {
    let compact = matches!(family, CoefficientFamily::SinRatio { .. });
    let regular = !family.is_singular_at_zero();

    // (q1): q → ∞ and ∫_r^1 q → ∞ as r → 0.
    let radii: Vec<f64> = small_radii().collect();
    let qs: Vec<f64> = radii.iter().map(|&r| family.q(r)).collect();
    let ints: Vec<f64> = radii.iter().map(|&r| -family.log_rho(r)).collect();
    let growing = qs.windows(2).all(|w| w[1] > w[0]) && ints.windows(2).all(|w| w[1] > w[0]);
    let mut ev: Vec<(String, f64)> = radii.iter().zip(&qs).map(|(r, q)| (format!("q({r:e})"), *q)).collect();
    ev.extend(radii.iter().zip(&ints).map(|(r, i)| (format!("int_r^1 q at r={r:e}"), *i)));
    let q1 = if regular {
        verdict(Verdict::Fail, !growing, ev, "q is identically zero: no singular endpoint")
    } else {
        verdict(Verdict::Pass, growing, ev, "q ~ Γ/r near 0")
    };

    // (q2): lim_{r→∞} q exists (read as a finite limit).
    let q2 = if compact {
        not_applicable("bounded domain: no limit at infinity")
    } else {
        let radii: Vec<f64> = large_radii().collect();
        let vals: Vec<f64> = radii.iter().map(|&r| family.q(r)).collect();
        let ok = converged(&vals) && vals.last().is_some_and(|v| *v >= -1e-12);
        let limit = match *family {
            CoefficientFamily::SinhRatio { alpha, .. } => alpha,
            _ => 0.0,
        };
        let mut ev: Vec<(String, f64)> = radii.iter().zip(&vals).map(|(r, v)| (format!("q({r:e})"), *v)).collect();
        ev.push(("closed-form limit".into(), limit));
        verdict(Verdict::Pass, ok, ev, "finite nonnegative limit at infinity")
    };

    // (q3): lim q/r^α > 0 for some α ≥ −1; probed at α = 0 then α = −1.
    let q3 = if compact {
        not_applicable("bounded domain: no behavior at infinity")
    } else if regular {
        not_applicable("q identically zero: regular equation with constant integrating factor")
    } else {
        let radii: Vec<f64> = large_radii().collect();
        let mut chosen = None;
        for alpha in [0.0_f64, -1.0] {
            let vals: Vec<f64> = radii.iter().map(|&r| family.q(r) / r.powf(alpha)).collect();
            if converged(&vals) && vals.last().is_some_and(|v| *v > 0.0) {
                chosen = Some((alpha, *vals.last().unwrap_or(&0.0)));
                break;
            }
        }
        match chosen {
            Some((alpha, lim)) => verdict(
                Verdict::Pass,
                true,
                vec![("alpha".into(), alpha), ("limit of q/r^alpha".into(), lim)],
                "positive limit found",
            ),
            None => HypothesisVerdict {
                verdict: Verdict::Inconclusive,
                method: Method::NumericProbe,
                evidence: vec![],
                note: "no exponent in {0, -1} produced a converged positive limit".into(),
            },
        }
    };

    // (q4): Γ = lim −q²/q' > 0 at r = 0.
    let (q4, gamma) = if regular {
        (not_applicable("no singular endpoint"), None)
    } else {
        let radii: Vec<f64> = small_radii().collect();
        let est: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let q = family.q(r);
                -q * q / family.dq(r)
            })
            .collect();
        let closed = family.gamma_limit(Endpoint::Zero).ok();
        let ok = converged(&est)
            && closed.is_some_and(|g| g > 0.0 && (est[est.len() - 1] - g).abs() <= 1e-6 * g);
        let mut ev: Vec<(String, f64)> = radii.iter().zip(&est).map(|(r, e)| (format!("-q^2/q' at {r:e}"), *e)).collect();
        if let Some(g) = closed {
            ev.push(("closed-form gamma".into(), g));
        }
        (verdict(Verdict::Pass, ok, ev, "q ~ Γ/r near 0 gives Γ"), closed)
    };
    ([q1, q2, q3, q4], gamma)
}

fn check_rho(family: &CoefficientFamily) -> (HypothesisVerdict, f64) {
    let rule = TanhSinh::standard();
    let numeric = (1..=1000)
        .map(|i| family.mean_ratio(i as f64 / 1000.0, &rule))
        .fold(0.0_f64, f64::max);
    match *family {
        CoefficientFamily::PowerLaw { theta } => {
            let n = 1.0 / (1.0 + theta);
            let ok = (numeric - n).abs() <= 1e-9;
            (
                verdict(
                    Verdict::Pass,
                    ok,
                    vec![("N closed form".into(), n), ("N grid supremum".into(), numeric)],
                    "(1/t^θ) ∫₀^t s^θ ds = t/(1+θ)",
                ),
                n,
            )
        }
        _ => {
            let ok = numeric.is_finite() && numeric > 0.0;
            (
                HypothesisVerdict {
                    verdict: if ok { Verdict::Pass } else { Verdict::Inconclusive },
                    method: Method::NumericProbe,
                    evidence: vec![("N grid supremum".into(), numeric)],
                    note: "supremum over t = i/1000, i = 1..1000".into(),
                },
                numeric,
            )
        }
    }
}

/// Verifies (f1)–(f3), (q1)–(q4) and (ρ1) for a family and nonlinearity.
pub fn check_hypotheses(family: &CoefficientFamily, nl: &Nonlinearity) -> HypothesisReport {
    let [f1, f2, f3] = check_f(nl);
    let ([q1, q2, q3, q4], gamma) = check_q(family);
    let (rho1, n) = check_rho(family);
    let verdicts = BTreeMap::from([
        (Hypothesis::F1, f1),
        (Hypothesis::F2, f2),
        (Hypothesis::F3, f3),
        (Hypothesis::Q1, q1),
        (Hypothesis::Q2, q2),
        (Hypothesis::Q3, q3),
        (Hypothesis::Q4, q4),
        (Hypothesis::Rho1, rho1),
    ]);
    HypothesisReport { verdicts, n_bound: Some(n), gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sinh31() -> CoefficientFamily {
        CoefficientFamily::SinhRatio { alpha: 3.0, beta: 1.0, branch: Branch::Plus }
    }

    /// Eighth-order central difference of `ln ρ`.
    fn dlog_rho(fam: &CoefficientFamily, r: f64) -> f64 {
        let h = 1e-3 * r.min(1.0);
        let c = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        (1..=4)
            .map(|k| {
                let kh = k as f64 * h;
                c[k - 1] * (fam.log_rho(r + kh) - fam.log_rho(r - kh))
            })
            .sum::<f64>()
            / h
    }

    #[test]
    fn q_eval_examples() {
        let p = CoefficientFamily::PowerLaw { theta: 2.0 };
        assert_eq!(p.q_eval(0.5).unwrap(), 4.0);
        assert!((sinh31().q_eval(50.0).unwrap() - 3.0).abs() < 1e-12);
        let s = CoefficientFamily::SinRatio { alpha: 3.0, beta: 0.0 };
        assert!(s.q_eval(PI / 2.0).unwrap().abs() < 1e-15);
        assert!(matches!(p.q_eval(0.0), Err(CoefficientError::Domain { .. })));
        assert!(s.q_eval(PI).is_err());
    }

    #[test]
    fn rho_eval_examples() {
        let p = CoefficientFamily::PowerLaw { theta: 2.0 };
        assert!((p.rho_eval(3.0) - 9.0).abs() < 1e-12);
        for fam in [p, sinh31(), CoefficientFamily::SinRatio { alpha: 3.0, beta: 0.5 }] {
            assert!((fam.rho_eval(1.0) - 1.0).abs() < 1e-15);
            assert_eq!(fam.rho_eval(0.0), 0.0);
        }
        // Closed form against exp of a Gauss-Legendre quadrature of q.
        let gl = crate::quadrature::GaussLegendre::new(40);
        let quad = gl.integrate(1.0, 2.0, |r| sinh31().q(r)).exp();
        let c = 1.0 / (0.5f64.sinh().powi(4) * 0.5f64.cosh().powi(2));
        let closed = c * 1f64.sinh().powi(4) * 1f64.cosh().powi(2);
        assert!((sinh31().rho_eval(2.0) - closed).abs() < 1e-10 * closed);
        assert!((quad - closed).abs() < 1e-10 * closed);
    }

    #[test]
    fn gamma_limit_examples() {
        assert_eq!(CoefficientFamily::PowerLaw { theta: 2.0 }.gamma_limit(Endpoint::Zero).unwrap(), 2.0);
        assert_eq!(sinh31().gamma_limit(Endpoint::Zero).unwrap(), 4.0);
        let s = CoefficientFamily::SinRatio { alpha: 3.0, beta: 0.5 };
        assert_eq!(s.gamma_limit(Endpoint::Zero).unwrap(), 2.5);
        assert_eq!(s.gamma_limit(Endpoint::Pi).unwrap(), 3.5);
        assert!(CoefficientFamily::PowerLaw { theta: 0.0 }.gamma_limit(Endpoint::Zero).is_err());
        // Numeric-limit oracles.
        let r: f64 = 1e-6;
        let q = sinh31().q(r);
        assert!((-q * q / sinh31().dq(r) - 4.0).abs() < 1e-9);
        let q = s.q(r);
        assert!((-q * q / s.dq(r) - 2.5).abs() < 1e-9);
        let q = s.q(PI - r);
        assert!((-q * q / s.dq(PI - r) - 3.5).abs() < 1e-6);
    }

    #[test]
    fn reflection_swaps_endpoint_exponents() {
        let s = CoefficientFamily::SinRatio { alpha: 3.0, beta: 0.5 };
        let t = s.reflected().unwrap();
        for r in [0.3, 1.0, 2.0] {
            assert!((t.q(r) + s.q(PI - r)).abs() < 1e-12);
        }
    }

    #[test]
    fn hypotheses_power_law_all_pass() {
        let rep = check_hypotheses(&CoefficientFamily::PowerLaw { theta: 2.0 }, &Nonlinearity::PurePower { lambda: 1.0, p: 3.0 });
        for h in Hypothesis::ALL {
            assert_eq!(rep.verdict(h), Verdict::Pass, "{h}: {:?}", rep.verdicts[&h]);
        }
        assert!((rep.n_bound.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hypotheses_regular_family_fails_q1_only() {
        let rep = check_hypotheses(&CoefficientFamily::PowerLaw { theta: 0.0 }, &Nonlinearity::PurePower { lambda: 1.0, p: 3.0 });
        assert_eq!(rep.failing(), vec![Hypothesis::Q1]);
    }

    #[test]
    fn hypotheses_sinh_pml_all_pass() {
        let rep = check_hypotheses(&sinh31(), &Nonlinearity::PowerMinusLinear { lambda: 1.0, p: 3.0 });
        for h in Hypothesis::ALL {
            assert_eq!(rep.verdict(h), Verdict::Pass, "{h}: {:?}", rep.verdicts[&h]);
        }
        assert_eq!(rep.gamma, Some(4.0));
    }

    #[test]
    fn negative_pure_power_fails_growth() {
        let rep = check_hypotheses(&CoefficientFamily::PowerLaw { theta: 1.0 }, &Nonlinearity::PurePower { lambda: -1.0, p: 3.0 });
        assert_eq!(rep.verdict(Hypothesis::F1), Verdict::Fail);
        assert_eq!(rep.verdict(Hypothesis::F2), Verdict::Fail);
    }

    #[test]
    fn t0_and_t1_values() {
        assert_eq!(Nonlinearity::PurePower { lambda: 2.0, p: 3.0 }.t0(), Some(0.0));
        assert_eq!(Nonlinearity::PowerMinusLinear { lambda: 2.0, p: 3.0 }.t0(), Some(1.0));
        let pd = Nonlinearity::PowerDifference { lambda: 2.0, delta: 8.0, p: 3.0, s: 1.0 };
        assert!((pd.t0().unwrap() - 2.0).abs() < 1e-14);
        assert!(pd.f(pd.t0().unwrap()).abs() < 1e-12);
        let pml = Nonlinearity::PowerMinusLinear { lambda: 1.0, p: 3.0 };
        assert!(pml.primitive(pml.t1().unwrap()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn rho_log_derivative_is_q(r in 0.05f64..5.0, which in 0usize..4) {
            let fam = [
                CoefficientFamily::PowerLaw { theta: 2.5 },
                sinh31(),
                CoefficientFamily::SinhRatio { alpha: 1.5, beta: 0.5, branch: Branch::Minus },
                CoefficientFamily::SinRatio { alpha: 3.0, beta: 0.5 },
            ][which];
            let r = if which == 3 { 0.05 + (r - 0.05) * (PI - 0.15) / 4.95 } else { r };
            let q = fam.q(r);
            let d = dlog_rho(&fam, r);
            prop_assert!((d - q).abs() <= 1e-10 * q.abs().max(1.0), "r={} q={} d={}", r, q, d);
        }

        #[test]
        fn nonlinearities_are_odd(t in -50.0f64..50.0, which in 0usize..3) {
            let nl = [
                Nonlinearity::PurePower { lambda: 1.3, p: 2.7 },
                Nonlinearity::PowerMinusLinear { lambda: 0.7, p: 3.0 },
                Nonlinearity::PowerDifference { lambda: 2.0, delta: 1.0, p: 5.0, s: 1.5 },
            ][which];
            prop_assert_eq!(nl.f(-t) + nl.f(t), 0.0);
            prop_assert_eq!(nl.primitive(-t), nl.primitive(t));
        }

        #[test]
        fn primitive_derivative_is_f(t in 0.1f64..4.0, which in 0usize..3) {
            let nl = [
                Nonlinearity::PurePower { lambda: 1.3, p: 2.7 },
                Nonlinearity::PowerMinusLinear { lambda: 0.7, p: 3.0 },
                Nonlinearity::PowerDifference { lambda: 2.0, delta: 1.0, p: 5.0, s: 1.5 },
            ][which];
            let fd = |h: f64| (nl.primitive(t + h) - nl.primitive(t - h)) / (2.0 * h);
            let e1 = (fd(1e-2) - nl.f(t)).abs();
            let e2 = (fd(5e-3) - nl.f(t)).abs();
            // Second-order: halving h divides the error by about four.
            prop_assert!(e2 <= 0.3 * e1 + 1e-10, "e1={} e2={}", e1, e2);
        }

        #[test]
        fn rho_increasing_on_half_line(r in 0.01f64..20.0, which in 0usize..3) {
            let fam = [
                CoefficientFamily::PowerLaw { theta: 0.5 },
                sinh31(),
                CoefficientFamily::SinhRatio { alpha: 1.5, beta: 0.5, branch: Branch::Minus },
            ][which];
            prop_assert!(fam.rho_eval(r * 1.01) > fam.rho_eval(r));
        }
    }

    #[test]
    fn mean_ratio_positive_at_large_r() {
        let rule = TanhSinh::standard();
        for fam in [CoefficientFamily::PowerLaw { theta: 2.0 }, sinh31()] {
            // ∫₀^r ρ / ρ(r) stays bounded below at r = 50.
            let ratio = fam.mean_ratio(50.0, &rule);
            assert!(ratio > 0.1, "{fam}: {ratio}");
        }
    }
}
