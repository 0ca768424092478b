//! Dense numerical solutions with events and a termination verdict.

use crate::coefficients::{CoefficientFamily, Nonlinearity};
use serde::{Deserialize, Serialize};

/// Sign of the right-hand side in `w'' + q w' = ±f(w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Right-hand side data shared by the integrator and the dense evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rhs {
    pub family: CoefficientFamily,
    pub nl: Nonlinearity,
    pub sign: Sign,
}

impl Rhs {
    /// `w''` from the equation at `r > 0`.
    pub fn second_derivative(&self, r: f64, w: f64, wp: f64) -> f64 {
        let q = if wp == 0.0 { 0.0 } else { self.family.q(r) * wp };
        self.sign.value() * self.nl.f(w) - q
    }

    /// `(w', w'')` as a first-order system.
    pub fn eval(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], self.second_derivative(r, y[0], y[1])]
    }
}

/// Mesh node `(r, w, w')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub r: f64,
    pub w: f64,
    pub wp: f64,
}

/// Kind of a located event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Zero,
    CriticalPoint,
}

/// Zero of `w` or `w'`, refined on the dense output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub r: f64,
    pub w: f64,
    pub wp: f64,
}

/// Why the integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Termination {
    ReachedEnd,
    BlowUp {
        r_est: f64,
        fit_exponent: f64,
        tail_nodes: usize,
        low_confidence: bool,
    },
    StepCollapse {
        r_stop: f64,
        reason: CollapseReason,
    },
}

/// Cause of a step collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseReason {
    /// Step shrank below the floor while `|w|` stayed under the blow-up cap.
    StepBelowFloor,
    /// Non-finite state encountered below the cap.
    NonFinite,
    /// The step budget was exhausted.
    StepLimit,
}

/// Integrator bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub picard_iterations: usize,
    /// Radius where the singular starter handed over to Runge-Kutta.
    pub handoff: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Sum of the embedded local error estimates of `w`.
    pub error_estimate: f64,
}

/// Dense interpolant on one mesh interval.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Segment {
    /// Chebyshev interpolant of the Picard fixed point on `[0, h]`.
    Start { h: f64, t: Vec<f64>, w: Vec<f64>, wp: Vec<f64> },
    /// Dormand-Prince continuous extension.
    Rk { r0: f64, h: f64, rcont: [[f64; 2]; 5] },
}

/// Barycentric interpolation at Chebyshev points of the second kind.
pub(crate) fn barycentric(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len() - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..=n {
        let d = x - nodes[j];
        if d == 0.0 {
            return values[j];
        }
        let mut c = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            c *= 0.5;
        }
        num += c * values[j] / d;
        den += c / d;
    }
    num / den
}

impl Segment {
    fn eval(&self, r: f64) -> [f64; 2] {
        match self {
            Segment::Start { t, w, wp, .. } => [barycentric(t, w, r), barycentric(t, wp, r)],
            Segment::Rk { r0, h, rcont } => {
                let th = (r - r0) / h;
                let th1 = 1.0 - th;
                let mut y = [0.0; 2];
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = rcont[0][i]
                        + th * (rcont[1][i] + th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
                }
                y
            }
        }
    }

    /// Derivative of the interpolant itself (not of the equation).
    fn deriv(&self, r: f64) -> Option<[f64; 2]> {
        match self {
            Segment::Start { .. } => None,
            Segment::Rk { r0, h, rcont } => {
                let th = (r - r0) / h;
                let th1 = 1.0 - th;
                let mut d = [0.0; 2];
                for (i, di) in d.iter_mut().enumerate() {
                    *di = (rcont[1][i]
                        + (1.0 - 2.0 * th) * rcont[2][i]
                        + th * (2.0 - 3.0 * th) * rcont[3][i]
                        + 2.0 * th * th1 * (1.0 - 2.0 * th) * rcont[4][i])
                        / h;
                }
                Some(d)
            }
        }
    }

    fn start(&self) -> f64 {
        match self {
            Segment::Start { .. } => 0.0,
            Segment::Rk { r0, .. } => *r0,
        }
    }
}

/// Dense solution `(r, w, w')` with events and termination verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub nodes: Vec<Node>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub stats: StepStats,
    /// Largest increase of the monotone energy per unit `r` between nodes.
    pub energy_drift: f64,
    pub rhs: Rhs,
    #[serde(skip)]
    pub(crate) segments: Vec<Segment>,
}

impl Trajectory {
    /// First and last radius covered.
    pub fn span(&self) -> (f64, f64) {
        (self.nodes[0].r, self.nodes[self.nodes.len() - 1].r)
    }

    pub fn last(&self) -> Node {
        self.nodes[self.nodes.len() - 1]
    }

    fn segment_index(&self, r: f64) -> Option<usize> {
        let (lo, hi) = self.span();
        if !(r >= lo && r <= hi) || self.segments.is_empty() {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.start() <= r);
        Some(idx.saturating_sub(1))
    }

    /// `(w, w')` at `r` from the dense output; `None` outside the covered range.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        if self.segments.is_empty() {
            let (lo, hi) = self.span();
            if self.is_stationary() && r >= lo && r <= hi {
                return Some((self.nodes[0].w, 0.0));
            }
            let n = self.nodes.iter().find(|n| n.r == r)?;
            return Some((n.w, n.wp));
        }
        let y = self.segments[self.segment_index(r)?].eval(r);
        Some((y[0], y[1]))
    }

    /// `w''` from the equation at a dense-output state.
    ///
    /// At `r = 0` this is the limit `±f(a)/(1 + Γ)`.
    pub fn second_derivative(&self, r: f64) -> Option<f64> {
        let (w, wp) = self.eval(r)?;
        if r == 0.0 {
            let gamma = if self.rhs.family.is_singular_at_zero() {
                self.rhs.family.gamma_limit(crate::coefficients::Endpoint::Zero).ok()?
            } else {
                0.0
            };
            return Some(self.rhs.sign.value() * self.rhs.nl.f(w) / (1.0 + gamma));
        }
        Some(self.rhs.second_derivative(r, w, wp))
    }

    /// `w''` from differentiating the interpolant of `w'`; independent of the equation.
    pub fn interpolant_second_derivative(&self, r: f64) -> Option<f64> {
        if self.segments.is_empty() && self.is_stationary() {
            return self.eval(r).map(|_| 0.0);
        }
        let seg = &self.segments[self.segment_index(r)?];
        seg.deriv(r).map(|d| d[1])
    }

    /// Number of sign changes of `w` across the nodes.
    pub fn zero_count(&self) -> usize {
        sign_changes(self.nodes.iter().map(|n| n.w))
    }

    /// Number of sign changes of `w'` across the nodes.
    pub fn critical_count(&self) -> usize {
        sign_changes(self.nodes.iter().map(|n| n.wp))
    }

    /// Events of one kind.
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Smallest `|w|` at critical points lying strictly between consecutive zeros.
    ///
    /// A value near zero signals a tangential touch that a sign-change count
    /// would miss.
    pub fn min_interior_extremum(&self) -> f64 {
        self.events_of(EventKind::CriticalPoint).map(|e| e.w.abs()).fold(f64::INFINITY, f64::min)
    }

    /// Constant trajectory `w ≡ a` emitted for an equilibrium initial value.
    pub fn is_stationary(&self) -> bool {
        let w0 = self.nodes[0].w;
        self.nodes.iter().all(|n| n.w == w0 && n.wp == 0.0)
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self.termination, Termination::BlowUp { .. })
    }
}

/// Counts sign changes in a sequence, skipping exact zeros.
pub fn sign_changes(values: impl Iterator<Item = f64>) -> usize {
    let mut count = 0;
    let mut prev = 0.0_f64;
    for v in values {
        if v == 0.0 || !v.is_finite() {
            continue;
        }
        if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = v;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_changes_skip_zeros() {
        assert_eq!(sign_changes([1.0, 0.0, -1.0, -2.0, 3.0].into_iter()), 2);
        assert_eq!(sign_changes([0.0, 0.0].into_iter()), 0);
    }

    #[test]
    fn barycentric_reproduces_polynomials() {
        let n = 8;
        let t: Vec<f64> = (0..=n).map(|j| 0.5 * (1.0 - (j as f64 * std::f64::consts::PI / n as f64).cos())).collect();
        let v: Vec<f64> = t.iter().map(|x| 1.0 + x * x * x - 2.0 * x).collect();
        let x = 0.3217;
        assert!((barycentric(&t, &v, x) - (1.0 + x * x * x - 2.0 * x)).abs() < 1e-14);
    }
}
