//! Singular initial value problems `w'' + q(r) w' = ±f(w)`, `w(0) = a`, `w'(0) = 0`.
//!
//! A Picard fixed point bridges the singular endpoint; Dormand-Prince takes
//! over at the handoff radius `h₀ = min(δ, 10⁻³·scale)` with `δ` the
//! contraction radius. Problems started at `π` are integrated in `s = π − r`,
//! where the coefficient is the reflected family.

mod blowup;
mod integrator;
mod minkowski;
mod picard;
mod trajectory;

pub use blowup::{estimate_blowup, BlowupEstimate, MIN_TAIL_NODES};
pub use integrator::{monotone_energy, refine_root, IntegratorSettings};
pub use minkowski::{
    build_minkowski_profile, build_minkowski_profile_with, classify_case, CaseParams, ImageKind, MinkowskiCase,
    MinkowskiOptions, MinkowskiProfile, PieceMap, ProfilePiece,
};
pub use picard::{contraction_radius, picard_start, rho_bound, PicardStart};
pub use trajectory::{
    sign_changes, CollapseReason, Event, EventKind, Node, Rhs, Sign, StepStats, Termination, Trajectory,
};

use crate::coefficients::{
    check_hypotheses, CoefficientError, CoefficientFamily, Endpoint, Hypothesis, Nonlinearity, Verdict,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use trajectory::Segment;

/// Errors from the starter and the integrator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IvpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("hypotheses required by this regime fail: {}", .failing.iter().map(|h| h.name()).collect::<Vec<_>>().join(", "))]
    Hypothesis { failing: Vec<Hypothesis> },
    #[error("start radius {h} exceeds the contraction radius {delta}")]
    StepTooLarge { h: f64, delta: f64 },
    #[error("Picard iteration is not contracting (iteration {iteration}, difference {difference:e})")]
    NonContraction { iteration: usize, difference: f64 },
    #[error("trajectory did not terminate with blow-up")]
    NotBlowUp,
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
}

/// Problem `(A±)` with data at a singular (or regular) endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularIvp {
    pub family: CoefficientFamily,
    pub nl: Nonlinearity,
    pub sign: Sign,
    /// Initial value `w(start) = a`.
    pub a: f64,
    /// Integration length measured from the start endpoint.
    pub r_max: f64,
    pub start: Endpoint,
}

impl SingularIvp {
    /// Problem started at `r = 0`.
    pub fn new(family: CoefficientFamily, nl: Nonlinearity, sign: Sign, a: f64, r_max: f64) -> Self {
        Self { family, nl, sign, a, r_max, start: Endpoint::Zero }
    }

    /// Family and sign actually integrated.
    ///
    /// A pure power with `Λ < 0` is rewritten with `|Λ|` and the opposite
    /// sign, and a start at `π` uses the reflected family.
    pub fn effective_rhs(&self) -> Result<Rhs, IvpError> {
        let family = match self.start {
            Endpoint::Zero => self.family,
            Endpoint::Pi => self.family.reflected()?,
        };
        let (nl, sign) = match self.nl {
            Nonlinearity::PurePower { lambda, p } if lambda < 0.0 => {
                (Nonlinearity::PurePower { lambda: -lambda, p }, self.sign.flipped())
            }
            nl => (nl, self.sign),
        };
        Ok(Rhs { family, nl, sign })
    }

    /// Parameter and domain checks.
    pub fn validate(&self) -> Result<(), IvpError> {
        self.family.validate()?;
        self.nl.validate()?;
        if !self.a.is_finite() {
            return Err(IvpError::InvalidProblem(format!("initial value must be finite, got {}", self.a)));
        }
        let (lo, hi) = self.family.domain();
        if !(self.r_max > lo && self.r_max.is_finite()) {
            return Err(IvpError::InvalidProblem(format!("horizon must be positive and finite, got {}", self.r_max)));
        }
        if self.r_max >= hi {
            return Err(IvpError::InvalidProblem(format!(
                "horizon {} reaches the far singular endpoint {hi}",
                self.r_max
            )));
        }
        if self.start == Endpoint::Pi && !matches!(self.family, CoefficientFamily::SinRatio { .. }) {
            return Err(IvpError::InvalidProblem("only the compact family has an endpoint at pi".into()));
        }
        Ok(())
    }
}

/// Options for [`integrate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub settings: IntegratorSettings,
    /// Precomputed `ρ` bound `N`; computed when absent.
    pub n_bound: Option<f64>,
    /// Run the hypothesis checker before integrating.
    pub check_hypotheses: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { settings: IntegratorSettings::default(), n_bound: None, check_hypotheses: true }
    }
}

impl IntegrateOptions {
    pub fn with_tolerance(rtol: f64) -> Self {
        let mut o = Self::default();
        o.settings.rtol = rtol;
        o.settings.atol = rtol * 1e-2;
        o
    }
}

/// Hypotheses the regime requires: growth of `f` always, and the `q`/`ρ`
/// conditions when the start is singular.
fn required(singular: bool) -> Vec<Hypothesis> {
    let mut v = vec![Hypothesis::F1, Hypothesis::F2, Hypothesis::F3];
    if singular {
        v.extend([Hypothesis::Q1, Hypothesis::Q2, Hypothesis::Q3, Hypothesis::Q4, Hypothesis::Rho1]);
    }
    v
}

/// Integrates with default tolerances (`rtol = 1e-10`, `atol = 1e-12`).
pub fn integrate(problem: &SingularIvp) -> Result<Trajectory, IvpError> {
    integrate_with(problem, &IntegrateOptions::default())
}

/// Integrates from the start endpoint to the horizon, a blow-up verdict or a step collapse.
pub fn integrate_with(problem: &SingularIvp, opts: &IntegrateOptions) -> Result<Trajectory, IvpError> {
    problem.validate()?;
    let rhs = problem.effective_rhs()?;
    let singular = rhs.family.is_singular_at_zero();
    if opts.check_hypotheses {
        let report = check_hypotheses(&rhs.family, &rhs.nl);
        let failing: Vec<Hypothesis> = required(singular)
            .into_iter()
            .filter(|h| report.verdict(*h) == Verdict::Fail)
            .collect();
        if !failing.is_empty() {
            return Err(IvpError::Hypothesis { failing });
        }
    }
    let a = problem.a;
    let span = problem.r_max;
    let scale = span.min(1.0);
    let origin = Node { r: 0.0, w: a, wp: 0.0 };
    let mut stats = StepStats::default();
    if !singular {
        return Ok(integrator::run(rhs, 0.0, [a, 0.0], span, 1e-3 * scale, &opts.settings, vec![origin], vec![], stats));
    }
    let n_bound = opts.n_bound.unwrap_or_else(|| rho_bound(&rhs.family));
    let delta = contraction_radius(&rhs, a, n_bound);
    let h0 = delta.min(1e-3 * scale);
    let start = picard_start(&rhs, a, h0, n_bound)?;
    let (wh, wph) = start.end_state();
    stats.picard_iterations = start.iterations;
    stats.handoff = h0;
    let seg = Segment::Start { h: h0, t: start.t, w: start.w, wp: start.wp };
    let prefix = vec![origin, Node { r: h0, w: wh, wp: wph }];
    Ok(integrator::run(rhs, h0, [wh, wph], span, h0, &opts.settings, prefix, vec![seg], stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Branch;

    fn aubin_talenti(r_max: f64) -> SingularIvp {
        SingularIvp::new(
            CoefficientFamily::PowerLaw { theta: 2.0 },
            Nonlinearity::PurePower { lambda: 1.0, p: 5.0 },
            Sign::Minus,
            1.0,
            r_max,
        )
    }

    #[test]
    fn exact_solution_regression() {
        let traj = integrate(&aubin_talenti(10.0)).unwrap();
        assert_eq!(traj.termination, Termination::ReachedEnd);
        let exact = |r: f64| (1.0 + r * r / 3.0).powf(-0.5);
        let node_err = traj.nodes.iter().map(|n| (n.w - exact(n.r)).abs()).fold(0.0, f64::max);
        assert!(node_err < 1e-8, "{node_err}");
        let dense_err = (0..=1000)
            .map(|i| {
                let r = i as f64 * 0.01;
                (traj.eval(r).unwrap().0 - exact(r)).abs()
            })
            .fold(0.0, f64::max);
        assert!(dense_err < 1e-6, "{dense_err}");
        assert_eq!(traj.nodes[0].r, 0.0);
        assert!(traj.nodes.windows(2).all(|w| w[1].r > w[0].r));
    }

    #[test]
    fn blow_up_example() {
        let p = SingularIvp::new(
            CoefficientFamily::SinhRatio { alpha: 1.5, beta: 0.5, branch: Branch::Plus },
            Nonlinearity::PowerMinusLinear { lambda: 1.0, p: 3.0 },
            Sign::Plus,
            2.0,
            50.0,
        );
        let traj = integrate(&p).unwrap();
        assert!(traj.is_blow_up(), "{:?}", traj.termination);
        assert!(traj.nodes.windows(2).all(|w| w[1].w > w[0].w));
        assert!(traj.nodes[1..].iter().all(|n| n.w > 1.0 && n.wp > 0.0));
    }

    #[test]
    fn stationary_value_gives_constant_trajectory() {
        let p = SingularIvp::new(
            CoefficientFamily::SinhRatio { alpha: 1.5, beta: 0.5, branch: Branch::Plus },
            Nonlinearity::PowerMinusLinear { lambda: 1.0, p: 3.0 },
            Sign::Plus,
            1.0,
            20.0,
        );
        let traj = integrate(&p).unwrap();
        assert_eq!(traj.termination, Termination::ReachedEnd);
        assert!(traj.nodes.iter().all(|n| n.w == 1.0 && n.wp == 0.0));
        assert_eq!(traj.last().r, 20.0);
    }

    #[test]
    fn negative_pure_power_with_minus_sign_blows_up() {
        let p = SingularIvp::new(
            CoefficientFamily::PowerLaw { theta: 1.0 },
            Nonlinearity::PurePower { lambda: -1.0, p: 3.0 },
            Sign::Minus,
            0.5,
            50.0,
        );
        assert!(integrate(&p).unwrap().is_blow_up());
    }

    #[test]
    fn rejects_failing_hypotheses() {
        let p = SingularIvp::new(
            CoefficientFamily::PowerLaw { theta: 1.0 },
            Nonlinearity::PurePower { lambda: 1.0, p: 0.5 },
            Sign::Minus,
            1.0,
            5.0,
        );
        assert!(p.validate().is_err());
    }

    #[test]
    fn tolerance_halving_within_error_estimate() {
        let t1 = integrate_with(&aubin_talenti(10.0), &IntegrateOptions::with_tolerance(1e-8)).unwrap();
        let t2 = integrate_with(&aubin_talenti(10.0), &IntegrateOptions::with_tolerance(5e-9)).unwrap();
        let diff = (t1.last().w - t2.last().w).abs();
        assert!(diff < 10.0 * t1.stats.error_estimate, "{diff} vs {}", t1.stats.error_estimate);
    }

    #[test]
    fn energy_non_increasing_for_minus_sign() {
        let traj = integrate(&aubin_talenti(50.0)).unwrap();
        assert!(traj.energy_drift <= 1e-9, "{}", traj.energy_drift);
    }

    #[test]
    fn reflected_start_from_pi() {
        let fam = CoefficientFamily::SinRatio { alpha: 3.0, beta: 0.0 };
        let nl = Nonlinearity::PowerMinusLinear { lambda: 40.0, p: 2.0 };
        let fwd = integrate(&SingularIvp::new(fam, nl, Sign::Minus, 3.0, std::f64::consts::FRAC_PI_2)).unwrap();
        let mut back = SingularIvp::new(fam, nl, Sign::Minus, 3.0, std::f64::consts::FRAC_PI_2);
        back.start = Endpoint::Pi;
        let bwd = integrate(&back).unwrap();
        // With β = 0 the problem is symmetric about π/2.
        assert!((fwd.last().w - bwd.last().w).abs() < 1e-8);
        assert!((fwd.last().wp - bwd.last().wp).abs() < 1e-7);
    }
}
