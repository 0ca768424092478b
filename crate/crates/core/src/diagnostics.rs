//! Energies, the Pohozaev identity residual and qualitative classification
//! of Emden-Fowler trajectories.
//!
//! Classification targets the classical problem
//! `w'' + (θ/r) w' = −Λ|w|^{p−1}w`, `w(0) = a`, `w'(0) = 0`.

use crate::coefficients::{CoefficientFamily, Nonlinearity};
use crate::quadrature::TanhSinh;
use crate::singular_ivp::{
    integrate_with, EventKind, IntegrateOptions, IvpError, Sign, SingularIvp, Termination, Trajectory,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the diagnostics layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("identity only holds for the power-law family with a positive pure power and the minus sign: {0}")]
    WrongProblem(String),
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// Qualitative classes of the classical Emden-Fowler theorem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualitativeClass {
    OscillatoryStable,
    OscillatoryNotStable,
    PositiveMonotoneDecreasingStable,
    PositiveIncreasingBlowup,
    Constant,
}

/// Observed class, or an honest "cannot decide at this horizon".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservedClass {
    Class(QualitativeClass),
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeTrend {
    Decaying,
    Constant,
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Agree,
    Disagree,
    Undecided,
}

/// Algebraic fit `env ≈ C r^{slope}` of the amplitude envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub slope: f64,
    pub points: usize,
    /// Last envelope value over `|a|`.
    pub final_ratio: f64,
}

/// Result of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeReport {
    pub observed_class: ObservedClass,
    pub predicted_class: QualitativeClass,
    pub zero_count: usize,
    pub amplitude_trend: Option<AmplitudeTrend>,
    pub agreement: Agreement,
    pub envelope: Option<EnvelopeFit>,
    pub horizon: f64,
    /// Suggested horizon when the verdict is inconclusive.
    pub recommended_horizon: Option<f64>,
}

/// Parameters of the classical problem a trajectory belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalParams {
    pub theta: f64,
    pub lambda: f64,
    pub p: f64,
    pub a: f64,
}

impl ClassicalParams {
    /// The singular IVP in `(A±)` form.
    pub fn problem(&self, r_max: f64) -> SingularIvp {
        SingularIvp::new(
            CoefficientFamily::PowerLaw { theta: self.theta },
            Nonlinearity::PurePower { lambda: self.lambda, p: self.p },
            Sign::Minus,
            self.a,
            r_max,
        )
    }
}

/// Sampled energy along the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub r: Vec<f64>,
    pub e: Vec<f64>,
    /// `"E"` (`½w'² + F`) for the minus sign, `"E_hat"` (`½w'² − F`) for plus.
    pub kind: String,
    /// Largest rise of the energy within any window of unit length in `r`.
    pub max_increase_rate: f64,
    /// Largest deviation from the initial value.
    pub max_deviation: f64,
    /// Verdict against the drift bound `1e-9` per unit `r`.
    pub non_increasing: bool,
}

/// Drift bound used for the monotonicity verdict.
pub const ENERGY_DRIFT_BOUND: f64 = 1e-9;

/// `E` (minus sign) or `Ê` (plus sign) at every node.
pub fn energy(traj: &Trajectory, nl: &Nonlinearity, sign: Sign) -> EnergyProfile {
    let r: Vec<f64> = traj.nodes.iter().map(|n| n.r).collect();
    let e: Vec<f64> = traj
        .nodes
        .iter()
        .map(|n| {
            let f = nl.primitive(n.w);
            match sign {
                Sign::Minus => 0.5 * n.wp * n.wp + f,
                Sign::Plus => 0.5 * n.wp * n.wp - f,
            }
        })
        .collect();
    // Largest rise of E within any window of unit length in r.
    let mut rate: f64 = 0.0;
    let mut start = 0;
    for i in 1..e.len() {
        while r[i] - r[start] > 1.0 {
            start += 1;
        }
        let low = e[start..i].iter().copied().fold(f64::INFINITY, f64::min);
        rate = rate.max(e[i] - low);
    }
    let e0 = e[0];
    let max_deviation = e.iter().map(|x| (x - e0).abs()).fold(0.0, f64::max);
    let kind = match sign {
        Sign::Minus => "E",
        Sign::Plus => "E_hat",
    };
    EnergyProfile { r, e, kind: kind.into(), max_increase_rate: rate, max_deviation, non_increasing: rate <= ENERGY_DRIFT_BOUND }
}

/// Both sides of the Pohozaev identity along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    /// `max |LHS − RHS| / (1 + |LHS|)` over nodes.
    pub max_residual: f64,
    /// `(θ − 1)/2 − (θ + 1)/(p + 1)`.
    pub coefficient: f64,
    pub max_abs_lhs: f64,
    pub max_abs_rhs: f64,
}

/// Pohozaev residual for `w'' + (θ/r)w' = −Λ|w|^{p−1}w`, `Λ > 0`.
///
/// The right side integral uses the nodes of the trajectory with the
/// endpoint-corrected trapezoid rule
/// `∫ g ≈ h(g₀ + g₁)/2 + h²(g₀' − g₁')/12`, fourth order, with `g'` exact
/// from the equation. The interval touching `r = 0` uses tanh-sinh on the
/// dense starter interpolant to absorb `s^θ`.
pub fn pohozaev_residual(traj: &Trajectory, theta: f64, lambda: f64, p: f64) -> Result<PohozaevReport, DiagnosticsError> {
    let ok = match (traj.rhs.family, traj.rhs.nl, traj.rhs.sign) {
        (CoefficientFamily::PowerLaw { theta: t }, Nonlinearity::PurePower { lambda: l, p: q }, Sign::Minus) => {
            t == theta && l == lambda && q == p && lambda > 0.0
        }
        _ => false,
    };
    if !ok {
        return Err(DiagnosticsError::WrongProblem(format!(
            "trajectory solves {} / {} with sign {:?}",
            traj.rhs.family, traj.rhs.nl, traj.rhs.sign
        )));
    }
    let coefficient = 0.5 * (theta - 1.0) - (theta + 1.0) / (p + 1.0);
    let g = |s: f64, w: f64| if s == 0.0 && theta > 0.0 { 0.0 } else { s.powf(theta) * w.abs().powf(p + 1.0) };
    let dg = |s: f64, w: f64, wp: f64| {
        let a = w.abs();
        let lead = if theta == 0.0 { 0.0 } else { theta * s.powf(theta - 1.0) * a.powf(p + 1.0) };
        lead + (p + 1.0) * s.powf(theta) * a.powf(p - 1.0) * w * wp
    };
    let lhs = |n: &crate::singular_ivp::Node| {
        let e = 0.5 * n.wp * n.wp + lambda * n.w.abs().powf(p + 1.0) / (p + 1.0);
        -n.r.powf(theta + 1.0) * e - 0.5 * (theta - 1.0) * n.r.powf(theta) * n.w * n.wp
    };
    let nodes = &traj.nodes;
    let mut integral = 0.0;
    let mut max_residual: f64 = 0.0;
    let mut max_abs_lhs: f64 = 0.0;
    let mut max_abs_rhs: f64 = 0.0;
    let ts = TanhSinh::standard();
    for i in 0..nodes.len() {
        if i > 0 {
            let (n0, n1) = (nodes[i - 1], nodes[i]);
            let h = n1.r - n0.r;
            if n0.r == 0.0 && theta > 0.0 {
                // s^θ weight: ∫₀^h s^θ |w|^{p+1} = h^{θ+1} ∫₀¹ u^θ |w(hu)|^{p+1} du.
                integral += h.powf(theta + 1.0)
                    * ts.integrate_unit(|u, _| {
                        let w = traj.eval(h * u).map(|x| x.0).unwrap_or(n0.w);
                        u.powf(theta) * w.abs().powf(p + 1.0)
                    });
            } else {
                integral += 0.5 * h * (g(n0.r, n0.w) + g(n1.r, n1.w))
                    + h * h / 12.0 * (dg(n0.r, n0.w, n0.wp) - dg(n1.r, n1.w, n1.wp));
            }
        }
        let l = lhs(&nodes[i]);
        let r = lambda * coefficient * integral;
        max_abs_lhs = max_abs_lhs.max(l.abs());
        max_abs_rhs = max_abs_rhs.max(r.abs());
        max_residual = max_residual.max((l - r).abs() / (1.0 + l.abs()));
    }
    Ok(PohozaevReport { max_residual, coefficient, max_abs_lhs, max_abs_rhs })
}

/// Class predicted by the classical Emden-Fowler theorem.
pub fn predict_class(theta: f64, lambda: f64, p: f64) -> QualitativeClass {
    if lambda < 0.0 {
        return QualitativeClass::PositiveIncreasingBlowup;
    }
    if theta == 0.0 {
        return QualitativeClass::OscillatoryNotStable;
    }
    if theta < oscillation_threshold(p) {
        QualitativeClass::OscillatoryStable
    } else {
        QualitativeClass::PositiveMonotoneDecreasingStable
    }
}

/// `(p + 3)/(p − 1)`: oscillation below, positive decay at or above.
pub fn oscillation_threshold(p: f64) -> f64 {
    (p + 3.0) / (p - 1.0)
}

/// Minimum number of sign changes that counts as oscillation.
pub const OSCILLATION_ZEROS: usize = 3;
/// Envelope level (relative to `|a|`) that certifies decay outright.
pub const STABLE_LEVEL: f64 = 1e-3;
/// Algebraic decay rate that certifies decay through the envelope fit.
const DECAY_SLOPE: f64 = -0.05;
/// Slope band treated as a flat envelope.
const FLAT_SLOPE: f64 = 0.01;

fn fit_envelope(points: &[(f64, f64)], a: f64) -> Option<EnvelopeFit> {
    let usable: Vec<(f64, f64)> = points.iter().copied().filter(|(r, e)| *r > 0.0 && *e > 0.0).collect();
    if usable.len() < 4 {
        return None;
    }
    let tail = &usable[usable.len() / 2..];
    let xs: Vec<f64> = tail.iter().map(|(r, _)| r.ln()).collect();
    let ys: Vec<f64> = tail.iter().map(|(_, e)| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let final_ratio = usable[usable.len() - 1].1 / a.abs().max(f64::MIN_POSITIVE);
    Some(EnvelopeFit { slope, points: tail.len(), final_ratio })
}

fn trend_of(fit: &EnvelopeFit) -> AmplitudeTrend {
    if fit.slope <= -FLAT_SLOPE {
        AmplitudeTrend::Decaying
    } else if fit.slope >= FLAT_SLOPE {
        AmplitudeTrend::Growing
    } else {
        AmplitudeTrend::Constant
    }
}

/// Observed qualitative class of a classical trajectory.
pub fn classify(traj: &Trajectory, params: &ClassicalParams) -> QualitativeReport {
    let predicted = predict_class(params.theta, params.lambda, params.p);
    let zero_count = traj.zero_count();
    let horizon = traj.last().r;
    let a = params.a;
    let mut trend = None;
    let mut envelope = None;
    let observed = if traj.nodes.iter().all(|n| n.w == a && n.wp == 0.0) {
        trend = Some(AmplitudeTrend::Constant);
        ObservedClass::Class(QualitativeClass::Constant)
    } else {
        match traj.termination {
            Termination::BlowUp { .. } => {
                trend = Some(AmplitudeTrend::Growing);
                let monotone = traj.nodes.windows(2).all(|w| w[1].w.abs() >= w[0].w.abs());
                if zero_count == 0 && monotone {
                    ObservedClass::Class(QualitativeClass::PositiveIncreasingBlowup)
                } else {
                    ObservedClass::Inconclusive
                }
            }
            Termination::StepCollapse { .. } => ObservedClass::Inconclusive,
            Termination::ReachedEnd if zero_count >= OSCILLATION_ZEROS => {
                let pts: Vec<(f64, f64)> =
                    traj.events_of(EventKind::CriticalPoint).map(|e| (e.r, e.w.abs())).collect();
                envelope = fit_envelope(&pts, a);
                match envelope {
                    Some(fit) => {
                        let t = trend_of(&fit);
                        trend = Some(t);
                        if fit.final_ratio < STABLE_LEVEL || fit.slope <= DECAY_SLOPE {
                            ObservedClass::Class(QualitativeClass::OscillatoryStable)
                        } else if t == AmplitudeTrend::Constant && fit.final_ratio > 0.9 {
                            ObservedClass::Class(QualitativeClass::OscillatoryNotStable)
                        } else {
                            ObservedClass::Inconclusive
                        }
                    }
                    None => ObservedClass::Inconclusive,
                }
            }
            Termination::ReachedEnd if zero_count == 0 => {
                let decreasing = traj.nodes[1..].iter().all(|n| n.wp * a.signum() <= 0.0);
                let pts: Vec<(f64, f64)> = traj
                    .nodes
                    .iter()
                    .filter(|n| n.r >= 0.25 * horizon)
                    .map(|n| (n.r, n.w.abs()))
                    .collect();
                envelope = fit_envelope(&pts, a);
                match envelope {
                    Some(fit) if decreasing => {
                        trend = Some(trend_of(&fit));
                        if fit.final_ratio < STABLE_LEVEL || fit.slope <= DECAY_SLOPE {
                            ObservedClass::Class(QualitativeClass::PositiveMonotoneDecreasingStable)
                        } else {
                            ObservedClass::Inconclusive
                        }
                    }
                    _ => ObservedClass::Inconclusive,
                }
            }
            Termination::ReachedEnd => ObservedClass::Inconclusive,
        }
    };
    let agreement = match observed {
        ObservedClass::Class(c) if c == predicted => Agreement::Agree,
        ObservedClass::Class(_) => Agreement::Disagree,
        ObservedClass::Inconclusive => Agreement::Undecided,
    };
    QualitativeReport {
        observed_class: observed,
        predicted_class: predicted,
        zero_count,
        amplitude_trend: trend,
        agreement,
        envelope,
        horizon,
        recommended_horizon: (observed == ObservedClass::Inconclusive).then_some(2.0 * horizon),
    }
}

/// One horizon attempt of [`classify_with_doubling`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonAttempt {
    pub horizon: f64,
    pub zero_count: usize,
    pub observed_class: ObservedClass,
}

/// Default oscillation horizon.
pub const DEFAULT_HORIZON: f64 = 200.0;
/// Maximum number of horizon doublings on an inconclusive verdict.
pub const MAX_DOUBLINGS: usize = 3;

/// Integrates and classifies, doubling the horizon (at most three times) while inconclusive.
pub fn classify_with_doubling(
    params: &ClassicalParams,
    horizon: f64,
    opts: &IntegrateOptions,
) -> Result<(QualitativeReport, Vec<HorizonAttempt>, Trajectory), DiagnosticsError> {
    let mut attempts = Vec::new();
    let mut h = horizon;
    loop {
        let traj = integrate_with(&params.problem(h), opts)?;
        let rep = classify(&traj, params);
        attempts.push(HorizonAttempt { horizon: h, zero_count: rep.zero_count, observed_class: rep.observed_class });
        if rep.observed_class != ObservedClass::Inconclusive || attempts.len() > MAX_DOUBLINGS {
            return Ok((rep, attempts, traj));
        }
        h *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::singular_ivp::integrate;

    fn run(theta: f64, lambda: f64, p: f64, a: f64, r_max: f64) -> (Trajectory, ClassicalParams) {
        let params = ClassicalParams { theta, lambda, p, a };
        (integrate(&params.problem(r_max)).unwrap(), params)
    }

    #[test]
    fn predict_class_examples() {
        assert_eq!(predict_class(2.0, 1.0, 3.0), QualitativeClass::OscillatoryStable);
        assert_eq!(predict_class(3.0, 1.0, 3.0), QualitativeClass::PositiveMonotoneDecreasingStable);
        assert_eq!(predict_class(5.0, -1.0, 2.0), QualitativeClass::PositiveIncreasingBlowup);
        assert_eq!(predict_class(0.0, 1.0, 2.0), QualitativeClass::OscillatoryNotStable);
    }

    #[test]
    fn classify_aubin_talenti_boundary() {
        let params = ClassicalParams { theta: 2.0, lambda: 1.0, p: 5.0, a: 1.0 };
        let (rep, _, _) = classify_with_doubling(&params, DEFAULT_HORIZON, &IntegrateOptions::default()).unwrap();
        assert_eq!(rep.observed_class, ObservedClass::Class(QualitativeClass::PositiveMonotoneDecreasingStable));
        assert_eq!(rep.agreement, Agreement::Agree);
        assert_eq!(rep.zero_count, 0);
    }

    #[test]
    fn classify_regular_case_not_stable() {
        let (traj, params) = run(0.0, 1.0, 3.0, 1.0, 200.0);
        let rep = classify(&traj, &params);
        assert_eq!(rep.observed_class, ObservedClass::Class(QualitativeClass::OscillatoryNotStable));
        assert_eq!(rep.amplitude_trend, Some(AmplitudeTrend::Constant));
        // Drift grows linearly with r at a rate set by the tolerance.
        let e = energy(&traj, &params.problem(1.0).nl, Sign::Minus);
        assert!(e.max_deviation <= ENERGY_DRIFT_BOUND * 200.0, "{}", e.max_deviation);
        let tight = integrate_with(&params.problem(200.0), &IntegrateOptions::with_tolerance(1e-13)).unwrap();
        let e = energy(&tight, &params.problem(1.0).nl, Sign::Minus);
        assert!(e.max_deviation <= 1e-10, "{}", e.max_deviation);
        assert!(e.non_increasing);
    }

    #[test]
    fn classify_blow_up() {
        let (traj, params) = run(1.0, -1.0, 3.0, 0.5, 50.0);
        let rep = classify(&traj, &params);
        assert_eq!(rep.observed_class, ObservedClass::Class(QualitativeClass::PositiveIncreasingBlowup));
        assert_eq!(rep.agreement, Agreement::Agree);
    }

    #[test]
    fn energy_of_aubin_talenti_strictly_decreases() {
        let (traj, params) = run(2.0, 1.0, 5.0, 1.0, 20.0);
        let e = energy(&traj, &params.problem(1.0).nl, Sign::Minus);
        assert!(e.e.windows(2).skip(1).all(|w| w[1] < w[0]));
        assert!(e.non_increasing);
    }

    #[test]
    fn energy_of_constant_is_primitive() {
        let p = SingularIvp::new(
            CoefficientFamily::PowerLaw { theta: 1.0 },
            Nonlinearity::PowerMinusLinear { lambda: 1.0, p: 3.0 },
            Sign::Minus,
            1.0,
            10.0,
        );
        let traj = integrate(&p).unwrap();
        let e = energy(&traj, &p.nl, Sign::Minus);
        assert!(e.e.iter().all(|x| *x == p.nl.primitive(1.0)));
    }

    #[test]
    fn pohozaev_examples() {
        let (traj, _) = run(2.0, 1.0, 5.0, 1.0, 20.0);
        let rep = pohozaev_residual(&traj, 2.0, 1.0, 5.0).unwrap();
        assert_eq!(rep.coefficient, 0.0);
        assert!(rep.max_residual <= 1e-6, "{}", rep.max_residual);
        let (traj, _) = run(1.0, 1.0, 3.0, 1.0, 20.0);
        let rep = pohozaev_residual(&traj, 1.0, 1.0, 3.0).unwrap();
        assert!(rep.max_abs_rhs > 0.1 && rep.max_abs_lhs > 0.1);
        assert!(rep.max_residual <= 1e-6, "{}", rep.max_residual);
        let (traj, _) = run(1.0, 1.0, 3.0, 0.0, 5.0);
        assert_eq!(pohozaev_residual(&traj, 1.0, 1.0, 3.0).unwrap().max_residual, 0.0);
    }

    #[test]
    fn pohozaev_rejects_other_families() {
        let (traj, _) = run(1.0, -1.0, 3.0, 0.5, 10.0);
        assert!(pohozaev_residual(&traj, 1.0, -1.0, 3.0).is_err());
    }
}
