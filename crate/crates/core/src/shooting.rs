//! Nodal solutions of the compact problem on `[0, π]` by double shooting, and
//! their gluing with blowing-up hyperbolic pieces into entire profiles.
//!
//! The compact equation is
//! `w'' + ((m−1)/ℓ · cos r − β)/sin r · w' + (λ/ℓ²)(|w|^{p−1}w − w) = 0`
//! with `w'(0) = w'(π) = 0`. Forward integrations from `w(0) = d` and
//! backward integrations from `w(π) = e` trace two curves in the midpoint
//! phase plane `(w(π/2), w'(π/2))`; their intersections are the solutions.

use crate::coefficients::{check_hypotheses, Branch, CoefficientFamily, Endpoint, Nonlinearity, Verdict};
use crate::singular_ivp::{
    estimate_blowup, integrate_with, rho_bound, sign_changes, EventKind, IntegrateOptions, IvpError, Sign,
    SingularIvp, Trajectory,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use thiserror::Error;

/// Errors of the shooting and gluing layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShootError {
    #[error("invalid compact problem: {0}")]
    Invalid(String),
    #[error("p = {p} is not below the subcritical bound {bound}")]
    Supercritical { p: f64, bound: f64 },
    #[error("no {k}-nodal solution found in range d in ({d_lo}, {d_hi}], e in [-{e_max}, {e_max}] ({candidates} matched solutions examined)")]
    NotFound { k: usize, d_lo: f64, d_hi: f64, e_max: f64, candidates: usize },
    #[error("natural condition mismatch at t = {t}: compact side {inner}, outer side {outer}, expected {expected}")]
    NaturalMismatch { t: f64, inner: f64, outer: f64, expected: f64 },
    #[error(transparent)]
    Ivp(#[from] IvpError),
}

/// Data of the compact problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactProblem {
    pub ell: u32,
    pub m: u32,
    pub n1: u32,
    pub n2: u32,
    pub lambda: f64,
    pub p: f64,
}

impl CompactProblem {
    /// `β = (n₁ − n₂)/2`.
    pub fn beta(&self) -> f64 {
        0.5 * (self.n1 as f64 - self.n2 as f64)
    }

    /// `κ = min{n₁, n₂}`.
    pub fn kappa(&self) -> u32 {
        self.n1.min(self.n2)
    }

    /// `(m − 1)/ℓ`.
    pub fn alpha(&self) -> f64 {
        (self.m as f64 - 1.0) / self.ell as f64
    }

    /// `Λ = λ/ℓ²`.
    pub fn big_lambda(&self) -> f64 {
        self.lambda / (self.ell as f64 * self.ell as f64)
    }

    /// `f(w) = Λ(|w|^{p−1}w − w)`.
    pub fn nonlinearity(&self) -> Nonlinearity {
        Nonlinearity::PowerMinusLinear { lambda: self.big_lambda(), p: self.p }
    }

    /// Coefficient `h₀(r)/sin r` of the compact equation.
    pub fn compact_family(&self) -> CoefficientFamily {
        CoefficientFamily::SinRatio { alpha: self.alpha(), beta: self.beta() }
    }

    /// Coefficient `h₊(r)/sinh r`, `h₊ = (m−1)/ℓ · cosh r − β`.
    pub fn right_family(&self) -> CoefficientFamily {
        CoefficientFamily::SinhRatio { alpha: self.alpha(), beta: self.beta(), branch: Branch::Minus }
    }

    /// Coefficient `h₋(r)/sinh r`, `h₋ = (m−1)/ℓ · cosh r + β`.
    pub fn left_family(&self) -> CoefficientFamily {
        CoefficientFamily::SinhRatio { alpha: self.alpha(), beta: self.beta(), branch: Branch::Plus }
    }

    /// Bound `(m−κ+1)/(m−κ−1)` of the nodal existence theorem on `[0, π]`.
    pub fn k_zeroes_bound(&self) -> f64 {
        let mk = self.m as f64 - self.kappa() as f64;
        if mk <= 1.0 {
            f64::INFINITY
        } else {
            (mk + 1.0) / (mk - 1.0)
        }
    }

    /// Bound `((m−κ)+2)/((m−κ)−2)` of the pseudosphere existence theorem.
    pub fn entire_bound(&self) -> f64 {
        let mk = self.m as f64 - self.kappa() as f64;
        if mk <= 2.0 {
            f64::INFINITY
        } else {
            (mk + 2.0) / (mk - 2.0)
        }
    }

    /// `(p below the k-zeroes bound, p below the pseudosphere bound)`.
    pub fn subcritical_flags(&self) -> (bool, bool) {
        (self.p < self.k_zeroes_bound(), self.p < self.entire_bound())
    }

    /// Explicit first bifurcation value `m/(p − 1)`, valid for `ℓ = 1`.
    pub fn lambda_one(&self) -> Option<f64> {
        (self.ell == 1).then(|| self.m as f64 / (self.p - 1.0))
    }

    /// `v'(±1)` forced by regularity at the singular point `t = ±1`.
    pub fn natural_derivative(&self, v: f64, at_plus_one: bool) -> f64 {
        let s = if at_plus_one { 1.0 } else { -1.0 };
        let ell = self.ell as f64;
        let denom = ell * ell * (-s * (self.m as f64 - 1.0 + ell) / ell + self.beta());
        -self.lambda * (v.abs().powf(self.p - 1.0) * v - v) / denom
    }

    /// Residual of `(1−t²)v'' + [−(m+ℓ−1)/ℓ · t + β]v' + (λ/ℓ²)(|v|^{p−1}v − v)`,
    /// relative to the largest term (or one, whichever is larger).
    pub fn t_equation_residual(&self, t: f64, v: f64, dv: f64, d2v: f64) -> f64 {
        let ell = self.ell as f64;
        let a = (1.0 - t * t) * d2v;
        let b = (-(self.m as f64 + ell - 1.0) / ell * t + self.beta()) * dv;
        let c = self.big_lambda() * (v.abs().powf(self.p - 1.0) * v - v);
        (a + b + c).abs() / a.abs().max(b.abs()).max(c.abs()).max(1.0)
    }

    pub fn validate(&self) -> Result<(), ShootError> {
        let bad = |m: String| Err(ShootError::Invalid(m));
        if ![1, 2, 3, 4, 6].contains(&self.ell) {
            return bad(format!("ell must be one of 1, 2, 3, 4, 6, got {}", self.ell));
        }
        if self.m < 3 {
            return bad(format!("m must be at least 3, got {}", self.m));
        }
        if self.n1 > self.m - 2 || self.n2 > self.m - 2 {
            return bad(format!("n1, n2 must lie in 0..={}, got {}, {}", self.m - 2, self.n1, self.n2));
        }
        if 2 * (self.m - 1) * (self.ell - 1) != self.ell * (self.n1 + self.n2) {
            return bad(format!(
                "(m-1)(ell-1)/ell = (n1+n2)/2 fails for m={}, ell={}, n1={}, n2={}",
                self.m, self.ell, self.n1, self.n2
            ));
        }
        if self.alpha() - self.beta().abs() <= 0.0 {
            return bad("(m-1)/ell ± beta must be positive".into());
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p must exceed 1, got {}", self.p));
        }
        Ok(())
    }
}

/// Scan, refinement and Newton settings.
#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    /// Largest `d` scanned.
    pub d_max: f64,
    /// Scan half-width for `e`.
    pub e_max: f64,
    /// Initial lattice sizes for the `d` and `e` curves.
    pub d_lattice: usize,
    pub e_lattice: usize,
    /// Largest allowed gap between consecutive curve points, in `asinh` units.
    pub refine_gap: f64,
    pub max_refine_passes: usize,
    /// Matching tolerance relative to `1 + |midpoint state|`.
    pub match_tol: f64,
    pub max_newton: usize,
    pub integrate: IntegrateOptions,
}

impl Default for ShootOptions {
    fn default() -> Self {
        let integrate = IntegrateOptions { check_hypotheses: false, ..IntegrateOptions::default() };
        ShootOptions {
            d_max: 100.0,
            e_max: 1000.0,
            d_lattice: 400,
            e_lattice: 800,
            refine_gap: 0.05,
            max_refine_passes: 16,
            match_tol: 1e-9,
            max_newton: 40,
            integrate,
        }
    }
}

/// One half integration up to the midpoint.
#[derive(Debug, Clone, Serialize)]
pub struct HalfResult {
    pub from: Endpoint,
    pub value: f64,
    /// `w(π/2)`.
    pub mid_w: f64,
    /// `w'(π/2)` in the original variable `r`.
    pub mid_wp: f64,
    /// Trajectory in the distance from the start endpoint.
    pub trajectory: Trajectory,
}

/// Integration options with the `ρ` bound precomputed for one direction.
#[derive(Debug, Clone, Copy)]
struct Directional {
    fwd: IntegrateOptions,
    bwd: IntegrateOptions,
}

impl Directional {
    fn new(problem: &CompactProblem, base: IntegrateOptions) -> Result<Self, ShootError> {
        let fam = problem.compact_family();
        let mut fwd = base;
        fwd.n_bound = Some(rho_bound(&fam));
        let mut bwd = base;
        bwd.n_bound = Some(rho_bound(&fam.reflected().map_err(IvpError::from)?));
        Ok(Directional { fwd, bwd })
    }

    fn get(&self, from: Endpoint) -> &IntegrateOptions {
        match from {
            Endpoint::Zero => &self.fwd,
            Endpoint::Pi => &self.bwd,
        }
    }
}

/// Integrates from `0` (value `d`) or `π` (value `e`) to the midpoint.
pub fn integrate_compact_half(
    problem: &CompactProblem,
    from: Endpoint,
    value: f64,
    opts: &IntegrateOptions,
) -> Result<HalfResult, ShootError> {
    problem.validate()?;
    let mut ivp = SingularIvp::new(problem.compact_family(), problem.nonlinearity(), Sign::Minus, value, FRAC_PI_2);
    ivp.start = from;
    let trajectory = integrate_with(&ivp, opts)?;
    if trajectory.last().r < FRAC_PI_2 {
        return Err(ShootError::Ivp(IvpError::InvalidProblem(format!(
            "half integration from {from:?} with value {value} stopped at {} before the midpoint",
            trajectory.last().r
        ))));
    }
    let last = trajectory.last();
    let mid_wp = if from == Endpoint::Zero { last.wp } else { -last.wp };
    Ok(HalfResult { from, value, mid_w: last.w, mid_wp, trajectory })
}

/// A solution of the compact problem assembled from two halves.
#[derive(Debug, Clone, Serialize)]
pub struct CompactSolution {
    /// `w(0)`.
    pub d: f64,
    /// `w(π)`.
    pub e: f64,
    /// Sign changes of `w` on `[0, π]`.
    pub zero_count: usize,
    /// `(w_L − w_R, w_L' − w_R')` at `π/2`.
    pub defect: (f64, f64),
    /// Smallest `|w|` at interior critical points; tiny values flag tangential zeros.
    pub min_extremum: f64,
    pub newton_iterations: usize,
    pub forward: Trajectory,
    pub backward: Trajectory,
}

/// Threshold below which an interior extremum counts as a tangential zero.
pub const TANGENTIAL_ZERO: f64 = 1e-8;

impl CompactSolution {
    /// `(w(r), w'(r))` on `[0, π]`.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        if r <= FRAC_PI_2 {
            self.forward.eval(r)
        } else {
            self.backward.eval(PI - r).map(|(w, wp)| (w, -wp))
        }
    }

    /// `w''(r)` from differentiating the dense interpolant.
    pub fn interpolant_second_derivative(&self, r: f64) -> Option<f64> {
        if r <= FRAC_PI_2 {
            self.forward.interpolant_second_derivative(r)
        } else {
            self.backward.interpolant_second_derivative(PI - r)
        }
    }

    /// Nodes over `[0, π]` in increasing `r`.
    pub fn nodes(&self) -> Vec<(f64, f64, f64)> {
        let mut out: Vec<(f64, f64, f64)> = self.forward.nodes.iter().map(|n| (n.r, n.w, n.wp)).collect();
        for n in self.backward.nodes.iter().rev().skip(1) {
            out.push((PI - n.r, n.w, -n.wp));
        }
        out
    }

    /// Zero count is exact: no tangential touch below [`TANGENTIAL_ZERO`].
    pub fn zero_count_certified(&self) -> bool {
        self.min_extremum > TANGENTIAL_ZERO
    }

    fn assemble(d: f64, e: f64, fwd: HalfResult, bwd: HalfResult, iterations: usize) -> Self {
        let defect = (fwd.mid_w - bwd.mid_w, fwd.mid_wp - bwd.mid_wp);
        let mut seq: Vec<f64> = fwd.trajectory.nodes.iter().map(|n| n.w).collect();
        seq.extend(bwd.trajectory.nodes.iter().rev().map(|n| n.w));
        let zero_count = sign_changes(seq.into_iter());
        let min_extremum = fwd
            .trajectory
            .events_of(EventKind::CriticalPoint)
            .chain(bwd.trajectory.events_of(EventKind::CriticalPoint))
            .map(|ev| ev.w.abs())
            .fold(f64::INFINITY, f64::min);
        CompactSolution {
            d,
            e,
            zero_count,
            defect,
            min_extremum,
            newton_iterations: iterations,
            forward: fwd.trajectory,
            backward: bwd.trajectory,
        }
    }
}

/// Midpoint state as a function of the start value.
#[derive(Debug, Clone, Copy)]
struct CurvePoint {
    u: f64,
    w: f64,
    wp: f64,
}

impl CurvePoint {
    fn plane(&self) -> (f64, f64) {
        (self.w.asinh(), self.wp.asinh())
    }
}

fn midpoint(problem: &CompactProblem, from: Endpoint, value: f64, dir: &Directional) -> Option<(f64, f64)> {
    integrate_compact_half(problem, from, value, dir.get(from)).ok().map(|h| (h.mid_w, h.mid_wp))
}

/// Samples the midpoint curve on `u = asinh(value)` in `[u_lo, u_hi]` and
/// bisects every gap wider than `refine_gap` in the `asinh` plane.
fn trace_curve(
    problem: &CompactProblem,
    from: Endpoint,
    u_lo: f64,
    u_hi: f64,
    n: usize,
    dir: &Directional,
    opts: &ShootOptions,
) -> Vec<CurvePoint> {
    let eval = |u: f64| midpoint(problem, from, u.sinh(), dir).map(|(w, wp)| CurvePoint { u, w, wp });
    let us: Vec<f64> = (0..=n).map(|i| u_lo + (u_hi - u_lo) * i as f64 / n as f64).collect();
    let mut pts: Vec<CurvePoint> = us.par_iter().filter_map(|&u| eval(u)).collect();
    for _ in 0..opts.max_refine_passes {
        let mids: Vec<f64> = pts
            .windows(2)
            .filter(|w| {
                let (a, b) = (w[0].plane(), w[1].plane());
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() > opts.refine_gap
            })
            .map(|w| 0.5 * (w[0].u + w[1].u))
            .collect();
        if mids.is_empty() {
            break;
        }
        let new: Vec<CurvePoint> = mids.par_iter().filter_map(|&u| eval(u)).collect();
        pts.extend(new);
        pts.sort_by(|a, b| a.u.total_cmp(&b.u));
    }
    pts
}

/// Parameter values `(u_f, u_b)` at every crossing of the two polylines.
fn crossings(fwd: &[CurvePoint], bwd: &[CurvePoint]) -> Vec<(f64, f64)> {
    let segs = |c: &[CurvePoint]| -> Vec<((f64, f64), (f64, f64), f64, f64)> {
        c.windows(2).map(|w| (w[0].plane(), w[1].plane(), w[0].u, w[1].u)).collect()
    };
    let fs = segs(fwd);
    let bs = segs(bwd);
    fs.par_iter()
        .flat_map_iter(|&(p0, p1, fu0, fu1)| {
            let (fx_lo, fx_hi) = (p0.0.min(p1.0), p0.0.max(p1.0));
            let (fy_lo, fy_hi) = (p0.1.min(p1.1), p0.1.max(p1.1));
            bs.iter().filter_map(move |&(q0, q1, bu0, bu1)| {
                if q0.0.max(q1.0) < fx_lo || q0.0.min(q1.0) > fx_hi || q0.1.max(q1.1) < fy_lo || q0.1.min(q1.1) > fy_hi
                {
                    return None;
                }
                let r = (p1.0 - p0.0, p1.1 - p0.1);
                let s = (q1.0 - q0.0, q1.1 - q0.1);
                let den = r.0 * s.1 - r.1 * s.0;
                if den == 0.0 {
                    return None;
                }
                let qp = (q0.0 - p0.0, q0.1 - p0.1);
                let a = (qp.0 * s.1 - qp.1 * s.0) / den;
                let b = (qp.0 * r.1 - qp.1 * r.0) / den;
                ((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b))
                    .then_some((fu0 + a * (fu1 - fu0), bu0 + b * (bu1 - bu0)))
            })
        })
        .collect()
}

/// Damped Newton on the matching map with a central-difference Jacobian.
fn polish(
    problem: &CompactProblem,
    d0: f64,
    e0: f64,
    dir: &Directional,
    opts: &ShootOptions,
) -> Option<CompactSolution> {
    let f = |d: f64| integrate_compact_half(problem, Endpoint::Zero, d, &dir.fwd).ok();
    let b = |e: f64| integrate_compact_half(problem, Endpoint::Pi, e, &dir.bwd).ok();
    let state = |h: &HalfResult| (h.mid_w, h.mid_wp);
    let (mut d, mut e) = (d0, e0);
    let (mut hf, mut hb) = (f(d)?, b(e)?);
    let norm = |x: (f64, f64)| x.0.abs().max(x.1.abs());
    let resid = |hf: &HalfResult, hb: &HalfResult| (hf.mid_w - hb.mid_w, hf.mid_wp - hb.mid_wp);
    for it in 0..=opts.max_newton {
        let m = resid(&hf, &hb);
        let scale = 1.0 + norm(state(&hf)).max(norm(state(&hb)));
        if norm(m) <= opts.match_tol * scale {
            return Some(CompactSolution::assemble(d, e, hf, hb, it));
        }
        if it == opts.max_newton {
            return None;
        }
        let hd = 1e-6 * d.abs().max(1.0);
        let he = 1e-6 * e.abs().max(1.0);
        let (fp, fm) = (state(&f(d + hd)?), state(&f(d - hd)?));
        let (bp, bm) = (state(&b(e + he)?), state(&b(e - he)?));
        let j = [
            [(fp.0 - fm.0) / (2.0 * hd), -(bp.0 - bm.0) / (2.0 * he)],
            [(fp.1 - fm.1) / (2.0 * hd), -(bp.1 - bm.1) / (2.0 * he)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dd = -(j[1][1] * m.0 - j[0][1] * m.1) / det;
        let de = -(-j[1][0] * m.0 + j[0][0] * m.1) / det;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let (nd, ne) = (d + step * dd, e + step * de);
            if let (Some(nf), Some(nb)) = (f(nd), b(ne)) {
                if norm(resid(&nf, &nb)) < norm(m) {
                    d = nd;
                    e = ne;
                    hf = nf;
                    hb = nb;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

/// Newton polish of the matching map from the guess `(d, e)`.
pub fn polish_solution(
    problem: &CompactProblem,
    d: f64,
    e: f64,
    opts: &ShootOptions,
) -> Result<Option<CompactSolution>, ShootError> {
    problem.validate()?;
    let dir = Directional::new(problem, opts.integrate)?;
    Ok(polish(problem, d, e, &dir, opts))
}

/// All matched solutions with `d` in `[d_lo, d_hi]` and `|e| ≤ e_max`.
pub fn find_matches(
    problem: &CompactProblem,
    d_lo: f64,
    d_hi: f64,
    opts: &ShootOptions,
) -> Result<Vec<CompactSolution>, ShootError> {
    problem.validate()?;
    let report = check_hypotheses(&problem.compact_family(), &problem.nonlinearity());
    let failing: Vec<_> = report.verdicts.iter().filter(|(_, v)| v.verdict == Verdict::Fail).map(|(h, _)| *h).collect();
    if !failing.is_empty() {
        return Err(ShootError::Ivp(IvpError::Hypothesis { failing }));
    }
    let dir = Directional::new(problem, opts.integrate)?;
    let fwd = trace_curve(problem, Endpoint::Zero, d_lo.asinh(), d_hi.asinh(), opts.d_lattice, &dir, opts);
    let bwd = trace_curve(problem, Endpoint::Pi, -opts.e_max.asinh(), opts.e_max.asinh(), opts.e_lattice, &dir, opts);
    let guesses = crossings(&fwd, &bwd);
    let mut found: Vec<CompactSolution> = guesses
        .par_iter()
        .filter_map(|&(uf, ub)| polish(problem, uf.sinh(), ub.sinh(), &dir, opts))
        .filter(|s| s.d >= d_lo && s.d <= d_hi)
        .collect();
    found.sort_by(|a, b| a.d.total_cmp(&b.d).then(a.e.total_cmp(&b.e)));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * a.abs().max(1.0);
    found.dedup_by(|a, b| close(a.d, b.d) && close(a.e, b.e));
    Ok(found)
}

/// Constant solution `w ≡ c` for an equilibrium `c ∈ {−1, 0, 1}`.
pub fn constant_solution(problem: &CompactProblem, c: f64, opts: &IntegrateOptions) -> Result<CompactSolution, ShootError> {
    if problem.nonlinearity().f(c) != 0.0 {
        return Err(ShootError::Invalid(format!("{c} is not an equilibrium")));
    }
    let fwd = integrate_compact_half(problem, Endpoint::Zero, c, opts)?;
    let bwd = integrate_compact_half(problem, Endpoint::Pi, c, opts)?;
    Ok(CompactSolution::assemble(c, c, fwd, bwd, 0))
}

/// Scan bracket and candidate count behind a nodal search.
#[derive(Debug, Clone, Serialize)]
pub struct NodalSearch {
    pub d_range: (f64, f64),
    pub e_max: f64,
    pub candidates: Vec<(f64, f64, usize)>,
}

/// `k`-nodal solutions for several `k` from a single scan over `d ∈ (1, d_max]`.
///
/// For each `k` the admissible solutions have exactly `k` certified sign
/// changes, `d > 1`, `|e| > 1` and `sign(e) = (−1)^k`; the smallest such `d`
/// is returned. `k = 0` returns the constant solution `w ≡ 1`.
pub fn shoot_nodal_family(
    problem: &CompactProblem,
    ks: &[usize],
    opts: &ShootOptions,
) -> Result<(Vec<Result<CompactSolution, ShootError>>, NodalSearch), ShootError> {
    problem.validate()?;
    let (k_ok, entire_ok) = problem.subcritical_flags();
    if !k_ok && !entire_ok {
        return Err(ShootError::Supercritical { p: problem.p, bound: problem.entire_bound() });
    }
    let matches = if ks.iter().any(|&k| k > 0) { find_matches(problem, 1.0, opts.d_max, opts)? } else { vec![] };
    let search = NodalSearch {
        d_range: (1.0, opts.d_max),
        e_max: opts.e_max,
        candidates: matches.iter().map(|s| (s.d, s.e, s.zero_count)).collect(),
    };
    let results = ks
        .iter()
        .map(|&k| {
            if k == 0 {
                return constant_solution(problem, 1.0, &opts.integrate);
            }
            let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
            matches
                .iter()
                .filter(|s| {
                    s.zero_count == k
                        && s.zero_count_certified()
                        && s.d > 1.0
                        && s.e.abs() > 1.0
                        && s.e.signum() == parity
                })
                .min_by(|a, b| a.d.total_cmp(&b.d))
                .cloned()
                .ok_or(ShootError::NotFound {
                    k,
                    d_lo: 1.0,
                    d_hi: opts.d_max,
                    e_max: opts.e_max,
                    candidates: matches.len(),
                })
        })
        .collect();
    Ok((results, search))
}

/// The `k`-nodal solution with the smallest admissible `d`.
pub fn shoot_k_nodal(problem: &CompactProblem, k: usize, opts: &ShootOptions) -> Result<CompactSolution, ShootError> {
    let (mut results, _) = shoot_nodal_family(problem, &[k], opts)?;
    results.remove(0)
}

/// Outcome of the search for nonconstant positive solutions.
#[derive(Debug, Clone, Serialize)]
pub struct PositiveSearch {
    pub d_range: (f64, f64),
    pub e_max: f64,
    /// Nonconstant positive solutions found, each as `(d, e)`.
    pub solutions: Vec<(f64, f64)>,
    /// Matched solutions examined, including constants and sign-changing ones.
    pub examined: usize,
}

/// Default lower end of the positive search, which reaches below the constant `1`.
pub const POSITIVE_D_MIN: f64 = 1e-2;

/// Nonconstant positive solutions with `d ∈ [d_lo, d_max]`.
///
/// Both `|d| < 1` and `|d| > 1` are reported as found.
pub fn find_positive_solutions(problem: &CompactProblem, d_lo: f64, opts: &ShootOptions) -> Result<PositiveSearch, ShootError> {
    let matches = find_matches(problem, d_lo, opts.d_max, opts)?;
    let trivial = |s: &CompactSolution| (s.d - 1.0).abs() <= 1e-6 && (s.e - 1.0).abs() <= 1e-6;
    let solutions = matches
        .iter()
        .filter(|s| s.zero_count == 0 && s.d > 0.0 && s.e > 0.0 && !trivial(s))
        .map(|s| (s.d, s.e))
        .collect();
    Ok(PositiveSearch { d_range: (d_lo, opts.d_max), e_max: opts.e_max, solutions, examined: matches.len() })
}

/// Image of the pseudosphere isoparametric function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeSitterImage {
    /// `ℝ`: both hyperbolic pieces are present.
    Line,
    /// `[−1, ∞)`: only the right hyperbolic piece.
    FromMinusOne,
    /// `[1, ∞)`: a single hyperbolic piece starting at `t = 1`.
    FromOne,
}

/// Case tags of the entire blowing-up profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlueCase {
    /// `k` zeros, defined on `[−1, R₊)`.
    P1(usize),
    /// `k` zeros, defined on `(−R₋, R₊)`.
    P2(usize),
    /// Positive on `[1, R₊)` with minimum at `t = 1`.
    P3,
}

impl fmt::Display for GlueCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlueCase::P1(k) => write!(f, "P1.{k}"),
            GlueCase::P2(k) => write!(f, "P2.{k}"),
            GlueCase::P3 => f.write_str("P3.1"),
        }
    }
}

/// Natural-condition comparison at `t = ±1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NaturalCheck {
    pub t: f64,
    pub expected: f64,
    /// Limit from the compact side, absent for a half-line profile.
    pub inner: Option<f64>,
    pub outer: Option<f64>,
}

impl NaturalCheck {
    pub fn max_error(&self) -> f64 {
        let rel = |x: Option<f64>| x.map_or(0.0, |x| (x - self.expected).abs() / self.expected.abs().max(1.0));
        rel(self.inner).max(rel(self.outer))
    }
}

/// Hyperbolic piece `v(t) = sign · w(arccosh(±t))`.
#[derive(Debug, Clone, Serialize)]
pub struct OuterPiece {
    pub trajectory: Trajectory,
    /// `+1` on the right (`t = cosh r`), `−1` on the left (`t = −cosh r`).
    pub side: f64,
    /// Sign applied to `w`.
    pub sign: f64,
    /// Blow-up abscissa in `|t|`, when the piece blows up.
    pub blow_up_t: Option<f64>,
}

impl OuterPiece {
    fn t_of(&self, r: f64) -> f64 {
        self.side * r.cosh()
    }

    /// `(t, v, v', v'')` at `r`, with `v''` from the dense interpolant.
    fn sample(&self, r: f64) -> Option<(f64, f64, f64, f64)> {
        let (w, wp) = self.trajectory.eval(r)?;
        let wpp = self.trajectory.interpolant_second_derivative(r)?;
        let (sh, coth) = (r.sinh(), 1.0 / r.tanh());
        let v = self.sign * w;
        let dv = self.sign * self.side * wp / sh;
        let d2v = self.sign * (wpp - coth * wp) / (sh * sh);
        Some((self.t_of(r), v, dv, d2v))
    }

    /// `(v(t), v'(t))` for `t` on this side with `|t| > 1`.
    pub fn eval(&self, t: f64) -> Option<(f64, f64)> {
        if t * self.side < 1.0 {
            return None;
        }
        let r = (t * self.side).acosh();
        let (w, wp) = self.trajectory.eval(r)?;
        if r == 0.0 {
            return None;
        }
        Some((self.sign * w, self.sign * self.side * wp / r.sinh()))
    }
}

/// An entire profile of the pseudosphere equation.
#[derive(Debug, Clone, Serialize)]
pub struct GluedSolution {
    pub case_tag: GlueCase,
    pub image: DeSitterImage,
    pub middle: Option<CompactSolution>,
    pub right: OuterPiece,
    pub left: Option<OuterPiece>,
    pub natural_plus: NaturalCheck,
    pub natural_minus: Option<NaturalCheck>,
    /// Largest relative residual of the `t` equation at the interior samples of each piece.
    pub residual_middle: Option<f64>,
    pub residual_right: f64,
    pub residual_left: Option<f64>,
}

impl GluedSolution {
    /// `(v(t), v'(t))` wherever a piece covers `t`.
    pub fn eval(&self, t: f64) -> Option<(f64, f64)> {
        if t.abs() <= 1.0 {
            let mid = self.middle.as_ref()?;
            let r = t.acos();
            let (w, wp) = mid.eval(r)?;
            let s = r.sin();
            return Some((w, if s > 0.0 { -wp / s } else { f64::NAN }));
        }
        if t > 1.0 {
            self.right.eval(t)
        } else {
            self.left.as_ref()?.eval(t)
        }
    }

    /// `R₊` (and `R₋`), the blow-up abscissae in `t`.
    pub fn blow_up_abscissae(&self) -> (Option<f64>, Option<f64>) {
        (self.right.blow_up_t, self.left.as_ref().and_then(|l| l.blow_up_t))
    }
}

/// Interior samples per piece used for the equation residual.
pub const RESIDUAL_SAMPLES: usize = 100;
/// Tolerance for the natural condition at `t = ±1`.
pub const NATURAL_TOL: f64 = 1e-6;

/// Settings of the gluing step.
#[derive(Debug, Clone, Copy)]
pub struct GlueOptions {
    /// Radial horizon of the hyperbolic pieces (`t` up to `cosh` of it).
    pub outer_horizon: f64,
    pub integrate: IntegrateOptions,
}

impl Default for GlueOptions {
    fn default() -> Self {
        GlueOptions { outer_horizon: 20.0, integrate: IntegrateOptions::default() }
    }
}

/// `lim_{r→0} g(r)` for an even `g = g₀ + g₂r² + g₄r⁴ + O(r⁶)`, by two
/// Richardson steps on `ρ, 2ρ, 4ρ`.
///
/// `scale` is the length over which the profile varies near the endpoint.
fn limit_at_zero(g: impl Fn(f64) -> Option<f64>, scale: f64) -> Option<f64> {
    let rho = 0.02 * scale;
    Some((64.0 * g(rho)? - 20.0 * g(2.0 * rho)? + g(4.0 * rho)?) / 45.0)
}

/// `1/√(1 + |f'(v)|)`, the local length scale of a solution through `v`.
fn length_scale(problem: &CompactProblem, v: f64) -> f64 {
    1.0 / (1.0 + problem.nonlinearity().df(v).abs()).sqrt()
}

fn outer_piece(
    problem: &CompactProblem,
    family: CoefficientFamily,
    value: f64,
    side: f64,
    opts: &GlueOptions,
) -> Result<OuterPiece, ShootError> {
    let ivp = SingularIvp::new(family, problem.nonlinearity(), Sign::Plus, value.abs(), opts.outer_horizon);
    let trajectory = integrate_with(&ivp, &opts.integrate)?;
    let blow_up_t = estimate_blowup(&trajectory, &ivp.nl).ok().map(|b| b.r_est.cosh());
    let sign = if value < 0.0 { -1.0 } else { 1.0 };
    Ok(OuterPiece { trajectory, side, sign, blow_up_t })
}

fn outer_residual(problem: &CompactProblem, piece: &OuterPiece) -> f64 {
    let r_end = piece.trajectory.last().r;
    (0..RESIDUAL_SAMPLES)
        .filter_map(|j| piece.sample(r_end * (j as f64 + 0.5) / RESIDUAL_SAMPLES as f64))
        .map(|(t, v, dv, d2v)| problem.t_equation_residual(t, v, dv, d2v))
        .fold(0.0, f64::max)
}

fn middle_residual(problem: &CompactProblem, mid: &CompactSolution) -> f64 {
    (0..RESIDUAL_SAMPLES)
        .filter_map(|j| {
            let r = PI * (j as f64 + 0.5) / RESIDUAL_SAMPLES as f64;
            let (w, wp) = mid.eval(r)?;
            let wpp = mid.interpolant_second_derivative(r)?;
            let s = r.sin();
            let dv = -wp / s;
            let d2v = (wpp - r.cos() / s * wp) / (s * s);
            Some(problem.t_equation_residual(r.cos(), w, dv, d2v))
        })
        .fold(0.0, f64::max)
}

/// `v'(1)` and `v'(−1)` seen from the compact solution.
fn compact_natural(problem: &CompactProblem, mid: &CompactSolution) -> (Option<f64>, Option<f64>) {
    let plus = limit_at_zero(|r| mid.forward.eval(r).map(|(_, wp)| -wp / r.sin()), length_scale(problem, mid.d));
    let minus = limit_at_zero(|s| mid.backward.eval(s).map(|(_, up)| up / s.sin()), length_scale(problem, mid.e));
    (plus, minus)
}

fn outer_natural(problem: &CompactProblem, piece: &OuterPiece) -> Option<f64> {
    let v0 = piece.trajectory.nodes[0].w;
    limit_at_zero(
        |r| piece.trajectory.eval(r).map(|(_, wp)| piece.sign * piece.side * wp / r.sinh()),
        length_scale(problem, v0),
    )
}

fn check_natural(chk: &NaturalCheck) -> Result<(), ShootError> {
    if chk.max_error() > NATURAL_TOL {
        return Err(ShootError::NaturalMismatch {
            t: chk.t,
            inner: chk.inner.unwrap_or(f64::NAN),
            outer: chk.outer.unwrap_or(f64::NAN),
            expected: chk.expected,
        });
    }
    Ok(())
}

/// Glues a compact solution with hyperbolic pieces at `t = ±1`.
///
/// The right piece starts from `d`; on the line image the left piece starts
/// from `|e|` and carries the sign of `e`.
pub fn glue_entire(
    problem: &CompactProblem,
    middle: &CompactSolution,
    image: DeSitterImage,
    opts: &GlueOptions,
) -> Result<GluedSolution, ShootError> {
    problem.validate()?;
    if image == DeSitterImage::FromOne {
        return glue_half_line(problem, middle.d, opts);
    }
    let right = outer_piece(problem, problem.right_family(), middle.d, 1.0, opts)?;
    let (inner_plus, inner_minus) = compact_natural(problem, middle);
    let natural_plus = NaturalCheck {
        t: 1.0,
        expected: problem.natural_derivative(middle.d, true),
        inner: inner_plus,
        outer: outer_natural(problem, &right),
    };
    check_natural(&natural_plus)?;
    let k = middle.zero_count;
    let (left, natural_minus, case_tag) = match image {
        DeSitterImage::Line => {
            let left = outer_piece(problem, problem.left_family(), middle.e, -1.0, opts)?;
            let chk = NaturalCheck {
                t: -1.0,
                expected: problem.natural_derivative(middle.e, false),
                inner: inner_minus,
                outer: outer_natural(problem, &left),
            };
            check_natural(&chk)?;
            (Some(left), Some(chk), GlueCase::P2(k))
        }
        _ => {
            let chk = NaturalCheck {
                t: -1.0,
                expected: problem.natural_derivative(middle.e, false),
                inner: inner_minus,
                outer: None,
            };
            check_natural(&chk)?;
            (None, Some(chk), GlueCase::P1(k))
        }
    };
    let residual_left = left.as_ref().map(|l| outer_residual(problem, l));
    Ok(GluedSolution {
        case_tag,
        image,
        residual_middle: Some(middle_residual(problem, middle)),
        residual_right: outer_residual(problem, &right),
        residual_left,
        middle: Some(middle.clone()),
        right,
        left,
        natural_plus,
        natural_minus,
    })
}

/// Single hyperbolic piece on `[1, R₊)` with `v(1) = d`.
pub fn glue_half_line(problem: &CompactProblem, d: f64, opts: &GlueOptions) -> Result<GluedSolution, ShootError> {
    problem.validate()?;
    let right = outer_piece(problem, problem.right_family(), d, 1.0, opts)?;
    let natural_plus =
        NaturalCheck { t: 1.0, expected: problem.natural_derivative(d, true), inner: None, outer: outer_natural(problem, &right) };
    check_natural(&natural_plus)?;
    Ok(GluedSolution {
        case_tag: GlueCase::P3,
        image: DeSitterImage::FromOne,
        middle: None,
        residual_middle: None,
        residual_right: outer_residual(problem, &right),
        residual_left: None,
        right,
        left: None,
        natural_plus,
        natural_minus: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(lambda: f64) -> CompactProblem {
        CompactProblem { ell: 1, m: 4, n1: 0, n2: 0, lambda, p: 2.0 }
    }

    #[test]
    fn problem_data() {
        let p = model(40.0);
        p.validate().unwrap();
        assert_eq!(p.alpha(), 3.0);
        assert_eq!(p.kappa(), 0);
        assert_eq!(p.k_zeroes_bound(), 5.0 / 3.0);
        assert_eq!(p.entire_bound(), 3.0);
        assert_eq!(p.subcritical_flags(), (false, true));
        assert_eq!(p.lambda_one(), Some(4.0));
        assert!(CompactProblem { n1: 1, ..p }.validate().is_err());
        assert!(CompactProblem { ell: 5, ..p }.validate().is_err());
        // ℓ = 2, m = 5: (m−1)(ℓ−1)/ℓ = 2 = (n₁ + n₂)/2.
        let q = CompactProblem { ell: 2, m: 5, n1: 3, n2: 1, lambda: 10.0, p: 1.5 };
        q.validate().unwrap();
        assert_eq!(q.beta(), 1.0);
    }

    #[test]
    fn natural_derivative_matches_series() {
        // v'(1) = f(v)/(1 + α − β) and v'(−1) = −f(v)/(1 + α + β), with f odd.
        let p = CompactProblem { ell: 2, m: 5, n1: 3, n2: 1, lambda: 10.0, p: 1.5 };
        let d = 2.0;
        let f = p.nonlinearity().f(d);
        assert!((p.natural_derivative(d, true) - f / (1.0 + p.alpha() - p.beta())).abs() < 1e-14);
        assert!((p.natural_derivative(-d, false) - f / (1.0 + p.alpha() + p.beta())).abs() < 1e-14);
    }

    #[test]
    fn half_integration_of_equilibria() {
        let p = model(40.0);
        let o = ShootOptions::default().integrate;
        for from in [Endpoint::Zero, Endpoint::Pi] {
            let h = integrate_compact_half(&p, from, 1.0, &o).unwrap();
            assert_eq!((h.mid_w, h.mid_wp), (1.0, 0.0));
            let h = integrate_compact_half(&p, from, 0.0, &o).unwrap();
            assert_eq!((h.mid_w, h.mid_wp), (0.0, 0.0));
        }
        let h = integrate_compact_half(&p, Endpoint::Zero, 3.0, &o).unwrap();
        assert!(h.mid_w.is_finite() && h.mid_wp.is_finite());
    }

    #[test]
    fn symmetric_problem_halves_mirror() {
        // With β = 0 the backward half from e is the forward half from e reflected.
        let p = model(40.0);
        let o = ShootOptions::default().integrate;
        let a = integrate_compact_half(&p, Endpoint::Zero, 2.5, &o).unwrap();
        let b = integrate_compact_half(&p, Endpoint::Pi, 2.5, &o).unwrap();
        assert!((a.mid_w - b.mid_w).abs() < 1e-12);
        assert!((a.mid_wp + b.mid_wp).abs() < 1e-12);
    }

    #[test]
    fn k_zero_is_the_constant() {
        let s = shoot_k_nodal(&model(40.0), 0, &ShootOptions::default()).unwrap();
        assert_eq!((s.d, s.e, s.zero_count), (1.0, 1.0, 0));
        assert_eq!(s.defect, (0.0, 0.0));
    }

    #[test]
    fn constant_glues_to_constant() {
        let p = model(40.0);
        let mid = constant_solution(&p, 1.0, &IntegrateOptions::default()).unwrap();
        let g = glue_entire(&p, &mid, DeSitterImage::Line, &GlueOptions::default()).unwrap();
        assert_eq!(g.blow_up_abscissae(), (None, None));
        for t in [-50.0, -1.5, 0.3, 2.0, 1e3] {
            assert_eq!(g.eval(t).unwrap().0, 1.0);
        }
        assert_eq!(g.natural_plus.max_error(), 0.0);
    }

    #[test]
    fn half_line_profile_blows_up() {
        let g = glue_half_line(&model(40.0), 2.0, &GlueOptions::default()).unwrap();
        assert_eq!(g.case_tag, GlueCase::P3);
        assert!(g.right.trajectory.is_blow_up());
        assert!(g.right.blow_up_t.unwrap() > 1.0);
        assert!(g.natural_plus.max_error() <= NATURAL_TOL);
        assert!(g.residual_right <= 1e-6, "{}", g.residual_right);
    }
}
