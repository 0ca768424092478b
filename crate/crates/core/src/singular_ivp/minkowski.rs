//! Piecewise profiles of `(γt + δ)v'' + βv' = −μ|v|^{p−1}v` on the image of a
//! flat isoparametric function.
//!
//! With `δ = 0` the substitution `t = r²` (or `t = −r²`) turns the equation
//! into `w'' + (θ/r)w' = −Λ|w|^{p−1}w` with `θ = k + n − 1`, `Λ₁ = 4μ/γ` on
//! the positive side and `Λ₂ = −4μ/γ` on the negative side. With `γ = 0` it
//! is already `v'' = −(μ/δ)|v|^{p−1}v`, solved on `t ≥ 0` and reflected.

use super::trajectory::Trajectory;
use super::{IntegrateOptions, IvpError};
use crate::diagnostics::{
    classify_with_doubling, oscillation_threshold, predict_class, Agreement, ClassicalParams, HorizonAttempt,
    QualitativeReport, DEFAULT_HORIZON,
};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Inputs of the profile constructor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    /// `A = 0`: `φ` is affine and the level sets are parallel hyperplanes.
    pub a_zero: bool,
    pub gamma: f64,
    pub delta: f64,
    pub beta: f64,
    pub mu: f64,
    /// Number of negative eigen-directions of `A` in the `α`-eigenspace.
    pub k: u32,
    /// Number of positive eigen-directions of `A` in the `α`-eigenspace.
    pub n: u32,
    pub p: f64,
    /// Initial value `v(0) = d`.
    pub d: f64,
}

/// Image of `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageKind {
    /// `ℝ` without critical values.
    LineRegular,
    /// `[0, ∞)` with critical value 0.
    NonNegative,
    /// `(−∞, 0]` with critical value 0.
    NonPositive,
    /// `ℝ` with critical value 0.
    LineSingular,
}

/// Case tags of the Minkowski taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MinkowskiCase {
    #[serde(rename = "M1.1")]
    M1_1,
    #[serde(rename = "M1.2")]
    M1_2,
    #[serde(rename = "M2.1")]
    M2_1,
    #[serde(rename = "M2.2")]
    M2_2,
    #[serde(rename = "M2.3")]
    M2_3,
    #[serde(rename = "M2.4")]
    M2_4,
    #[serde(rename = "M3.1")]
    M3_1,
    #[serde(rename = "M3.2")]
    M3_2,
}

impl fmt::Display for MinkowskiCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MinkowskiCase::M1_1 => "M1.1",
            MinkowskiCase::M1_2 => "M1.2",
            MinkowskiCase::M2_1 => "M2.1",
            MinkowskiCase::M2_2 => "M2.2",
            MinkowskiCase::M2_3 => "M2.3",
            MinkowskiCase::M2_4 => "M2.4",
            MinkowskiCase::M3_1 => "M3.1",
            MinkowskiCase::M3_2 => "M3.2",
        };
        f.write_str(s)
    }
}

/// Variable map from the radial coordinate `r ≥ 0` of a piece to `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceMap {
    /// `t = r²`.
    Square,
    /// `t = −r²`.
    NegSquare,
    /// `t = r`.
    Identity,
    /// `t = −r`.
    NegIdentity,
}

impl PieceMap {
    pub fn t_of_r(self, r: f64) -> f64 {
        match self {
            PieceMap::Square => r * r,
            PieceMap::NegSquare => -r * r,
            PieceMap::Identity => r,
            PieceMap::NegIdentity => -r,
        }
    }

    /// Inverse map, `None` when `t` lies on the other side.
    pub fn r_of_t(self, t: f64) -> Option<f64> {
        match self {
            PieceMap::Square if t >= 0.0 => Some(t.sqrt()),
            PieceMap::NegSquare if t <= 0.0 => Some((-t).sqrt()),
            PieceMap::Identity if t >= 0.0 => Some(t),
            PieceMap::NegIdentity if t <= 0.0 => Some(-t),
            _ => None,
        }
    }

    fn is_positive(self) -> bool {
        matches!(self, PieceMap::Square | PieceMap::Identity)
    }
}

/// One side of a profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfilePiece {
    pub map: PieceMap,
    pub params: ClassicalParams,
    pub trajectory: Trajectory,
    pub report: QualitativeReport,
    pub attempts: Vec<HorizonAttempt>,
}

impl ProfilePiece {
    /// `(v(t), v'(t))` on this piece.
    pub fn eval(&self, t: f64) -> Option<(f64, f64)> {
        let r = self.map.r_of_t(t)?;
        let (w, wp) = self.trajectory.eval(r)?;
        let dv = match self.map {
            PieceMap::Identity => wp,
            PieceMap::NegIdentity => -wp,
            PieceMap::Square | PieceMap::NegSquare => {
                let s = if self.map == PieceMap::Square { 1.0 } else { -1.0 };
                // dt/dr = ±2r; at r = 0 use w'(r)/r → w''(0).
                let ratio = if r > 0.0 { wp / r } else { self.trajectory.second_derivative(0.0)? };
                s * 0.5 * ratio
            }
        };
        Some((w, dv))
    }

    /// Interval of `t` covered by the trajectory.
    pub fn t_range(&self) -> (f64, f64) {
        let t = self.map.t_of_r(self.trajectory.last().r);
        if t >= 0.0 {
            (0.0, t)
        } else {
            (t, 0.0)
        }
    }
}

/// A solution of the reduced Minkowski equation assembled from classical pieces.
#[derive(Debug, Clone, Serialize)]
pub struct MinkowskiProfile {
    pub case_tag: MinkowskiCase,
    pub image: ImageKind,
    /// Parameters sit on the closed side of a case inequality.
    pub boundary: bool,
    pub pieces: Vec<ProfilePiece>,
    /// Interval in `t` covered by the pieces.
    pub domain: (f64, f64),
    /// Every piece whose observed class disagrees with, or could not confirm, the prediction.
    pub mismatches: Vec<String>,
    pub params: CaseParams,
}

impl MinkowskiProfile {
    /// `(v(t), v'(t))`, `None` outside the computed domain.
    pub fn eval(&self, t: f64) -> Option<(f64, f64)> {
        self.pieces.iter().find_map(|p| p.eval(t))
    }

    /// All nodes as `(t, v)`, sorted by `t`, without the duplicated `t = 0`.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for piece in &self.pieces {
            for n in &piece.trajectory.nodes {
                out.push((piece.map.t_of_r(n.r), n.w));
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.dedup_by(|a, b| a.0 == b.0);
        out
    }

    /// `true` when every piece agrees with the predicted class.
    pub fn verified(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Horizon and integrator settings of the constructor.
#[derive(Debug, Clone, Copy)]
pub struct MinkowskiOptions {
    /// Radial horizon of each piece before doubling.
    pub horizon: f64,
    pub integrate: IntegrateOptions,
}

impl Default for MinkowskiOptions {
    fn default() -> Self {
        MinkowskiOptions { horizon: DEFAULT_HORIZON, integrate: IntegrateOptions::default() }
    }
}

/// Case tag, image and boundary flag without integrating.
pub fn classify_case(cp: &CaseParams) -> Result<(MinkowskiCase, ImageKind, bool), IvpError> {
    let bad = |m: String| Err(IvpError::InvalidProblem(m));
    if !(cp.p > 1.0 && cp.p.is_finite()) {
        return bad(format!("p must exceed 1, got {}", cp.p));
    }
    if !(cp.d > 0.0 && cp.d.is_finite()) {
        return bad(format!("initial value d must be positive, got {}", cp.d));
    }
    if cp.mu == 0.0 || !cp.mu.is_finite() {
        return bad("mu must be a nonzero finite number".into());
    }
    if cp.a_zero || cp.gamma == 0.0 {
        if cp.delta == 0.0 || !cp.delta.is_finite() {
            return bad("the affine case needs a nonzero finite delta".into());
        }
        if cp.beta != 0.0 {
            return bad("the affine case needs beta = 0".into());
        }
        let lambda = cp.mu / cp.delta;
        let tag = if lambda > 0.0 { MinkowskiCase::M1_1 } else { MinkowskiCase::M1_2 };
        return Ok((tag, ImageKind::LineRegular, false));
    }
    if cp.delta != 0.0 {
        return bad("only delta = 0 is covered when gamma is nonzero".into());
    }
    if cp.k + cp.n == 0 {
        return bad("k + n must be positive".into());
    }
    let kn = (cp.k + cp.n) as f64;
    if (2.0 * cp.beta - cp.gamma * kn).abs() > 1e-12 * (cp.gamma * kn).abs() {
        return bad(format!("2β = γ(k + n) is required, got β = {}, γ = {}, k + n = {kn}", cp.beta, cp.gamma));
    }
    let image = match (cp.k, cp.n) {
        (0, _) if cp.gamma > 0.0 => ImageKind::NonNegative,
        (0, _) => ImageKind::NonPositive,
        (_, 0) if cp.gamma < 0.0 => ImageKind::NonNegative,
        (_, 0) => ImageKind::NonPositive,
        _ => ImageKind::LineSingular,
    };
    let theta = kn - 1.0;
    let thr = oscillation_threshold(cp.p);
    // θ ≥ (p+3)/(p−1) is equivalent to p ≥ (β+γ)/(β−γ).
    let monotone = theta >= thr;
    let boundary = (theta - thr).abs() <= 1e-12 * thr.abs().max(1.0);
    let mg = cp.mu * cp.gamma;
    let tag = match image {
        ImageKind::NonNegative | ImageKind::NonPositive => {
            let global = if image == ImageKind::NonNegative { mg > 0.0 } else { mg < 0.0 };
            if !global {
                MinkowskiCase::M2_4
            } else if theta == 0.0 {
                MinkowskiCase::M2_1
            } else if monotone {
                MinkowskiCase::M2_3
            } else {
                MinkowskiCase::M2_2
            }
        }
        _ => {
            if monotone {
                MinkowskiCase::M3_2
            } else {
                MinkowskiCase::M3_1
            }
        }
    };
    let boundary = boundary && tag != MinkowskiCase::M2_4;
    Ok((tag, image, boundary))
}

/// Builds the profile and checks each piece against its predicted class.
pub fn build_minkowski_profile(cp: &CaseParams) -> Result<MinkowskiProfile, IvpError> {
    build_minkowski_profile_with(cp, &MinkowskiOptions::default())
}

/// [`build_minkowski_profile`] with explicit options.
pub fn build_minkowski_profile_with(cp: &CaseParams, opts: &MinkowskiOptions) -> Result<MinkowskiProfile, IvpError> {
    let (tag, image, boundary) = classify_case(cp)?;
    let mut specs: Vec<(PieceMap, ClassicalParams)> = Vec::new();
    if image == ImageKind::LineRegular {
        let params = ClassicalParams { theta: 0.0, lambda: cp.mu / cp.delta, p: cp.p, a: cp.d };
        specs.push((PieceMap::Identity, params));
        specs.push((PieceMap::NegIdentity, params));
    } else {
        let theta = (cp.k + cp.n) as f64 - 1.0;
        let l1 = 4.0 * cp.mu / cp.gamma;
        if image != ImageKind::NonPositive {
            specs.push((PieceMap::Square, ClassicalParams { theta, lambda: l1, p: cp.p, a: cp.d }));
        }
        if image != ImageKind::NonNegative {
            specs.push((PieceMap::NegSquare, ClassicalParams { theta, lambda: -l1, p: cp.p, a: cp.d }));
        }
    }
    let mut pieces: Vec<ProfilePiece> = Vec::new();
    for (map, params) in specs {
        // Both affine pieces solve the same problem; reuse the integration.
        if let Some(prev) = pieces.iter().find(|p| p.params == params) {
            let mut piece = prev.clone();
            piece.map = map;
            pieces.push(piece);
            continue;
        }
        let (report, attempts, trajectory) =
            classify_with_doubling(&params, opts.horizon, &opts.integrate).map_err(|e| match e {
                crate::diagnostics::DiagnosticsError::Ivp(e) => e,
                other => IvpError::InvalidProblem(other.to_string()),
            })?;
        pieces.push(ProfilePiece { map, params, trajectory, report, attempts });
    }
    let mut mismatches = Vec::new();
    for piece in &pieces {
        let predicted = predict_class(piece.params.theta, piece.params.lambda, piece.params.p);
        debug_assert_eq!(predicted, piece.report.predicted_class);
        match piece.report.agreement {
            Agreement::Agree => {}
            Agreement::Disagree => mismatches.push(format!(
                "{:?} piece: predicted {:?}, observed {:?}",
                piece.map, predicted, piece.report.observed_class
            )),
            Agreement::Undecided => mismatches.push(format!(
                "{:?} piece: predicted {:?}, inconclusive at horizon {}",
                piece.map, predicted, piece.report.horizon
            )),
        }
    }
    let lo = pieces.iter().filter(|p| !p.map.is_positive()).map(|p| p.t_range().0).fold(0.0, f64::min);
    let hi = pieces.iter().filter(|p| p.map.is_positive()).map(|p| p.t_range().1).fold(0.0, f64::max);
    Ok(MinkowskiProfile { case_tag: tag, image, boundary, pieces, domain: (lo, hi), mismatches, params: *cp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{ObservedClass, QualitativeClass};

    fn params(gamma: f64, mu: f64, k: u32, n: u32, p: f64) -> CaseParams {
        CaseParams {
            a_zero: false,
            gamma,
            delta: 0.0,
            beta: 0.5 * gamma * (k + n) as f64,
            mu,
            k,
            n,
            p,
            d: 1.0,
        }
    }

    #[test]
    fn taxonomy_tags() {
        let t = |cp: CaseParams| classify_case(&cp).unwrap();
        assert_eq!(t(params(1.0, -1.0, 2, 2, 2.0)).0, MinkowskiCase::M3_1);
        assert_eq!(t(params(1.0, -1.0, 2, 2, 4.0)).0, MinkowskiCase::M3_2);
        assert_eq!(t(params(1.0, 1.0, 0, 4, 5.0)), (MinkowskiCase::M2_3, ImageKind::NonNegative, false));
        assert_eq!(t(params(1.0, 1.0, 0, 4, 2.0)).0, MinkowskiCase::M2_2);
        assert_eq!(t(params(1.0, 1.0, 0, 1, 2.0)).0, MinkowskiCase::M2_1);
        assert_eq!(t(params(1.0, -1.0, 0, 4, 2.0)).0, MinkowskiCase::M2_4);
        assert_eq!(t(params(-1.0, 1.0, 0, 4, 5.0)), (MinkowskiCase::M2_3, ImageKind::NonPositive, false));
        assert_eq!(t(params(-1.0, -1.0, 0, 4, 5.0)).0, MinkowskiCase::M2_4);
        // p = (β+γ)/(β−γ) exactly goes to the monotone case with a flag.
        assert_eq!(t(params(1.0, 1.0, 0, 4, 3.0)), (MinkowskiCase::M2_3, ImageKind::NonNegative, true));
        let affine = CaseParams { a_zero: true, gamma: 0.0, delta: 1.0, beta: 0.0, mu: -1.0, k: 0, n: 0, p: 3.0, d: 1.0 };
        assert_eq!(t(affine).0, MinkowskiCase::M1_2);
        assert_eq!(t(CaseParams { mu: 1.0, ..affine }).0, MinkowskiCase::M1_1);
        assert!(classify_case(&CaseParams { beta: 7.0, ..params(1.0, 1.0, 2, 2, 2.0) }).is_err());
        assert!(classify_case(&CaseParams { d: 0.0, ..affine }).is_err());
    }

    #[test]
    fn m3_1_has_stable_and_blow_up_sides() {
        let prof = build_minkowski_profile(&params(1.0, -1.0, 2, 2, 2.0)).unwrap();
        assert_eq!(prof.case_tag, MinkowskiCase::M3_1);
        assert!(prof.verified(), "{:?}", prof.mismatches);
        let pos = prof.pieces.iter().find(|p| p.map == PieceMap::Square).unwrap();
        let neg = prof.pieces.iter().find(|p| p.map == PieceMap::NegSquare).unwrap();
        assert!(pos.trajectory.is_blow_up());
        assert_eq!(neg.report.observed_class, ObservedClass::Class(QualitativeClass::OscillatoryStable));
        // Both sides meet with v(0) = d and matching v'(0) = −Λ₁d^p/(2(1 + θ)) = 1/2.
        assert_eq!(pos.eval(0.0).unwrap(), (1.0, 0.5));
        assert_eq!(neg.eval(0.0).unwrap(), (1.0, 0.5));
        assert!(prof.domain.0 < -1e3 && prof.domain.1 > 0.0);
    }

    #[test]
    fn m1_2_profile_is_even() {
        let cp = CaseParams { a_zero: true, gamma: 0.0, delta: 1.0, beta: 0.0, mu: -1.0, k: 0, n: 0, p: 3.0, d: 1.0 };
        let prof = build_minkowski_profile(&cp).unwrap();
        assert_eq!(prof.case_tag, MinkowskiCase::M1_2);
        assert!(prof.verified());
        for t in [0.1, 0.5, 1.0] {
            let (a, da) = prof.eval(t).unwrap();
            let (b, db) = prof.eval(-t).unwrap();
            assert_eq!(a, b);
            assert_eq!(da, -db);
            assert!(a > 1.0);
        }
        assert!(-prof.domain.0 == prof.domain.1);
    }

    #[test]
    fn m2_3_is_positive_decreasing() {
        let prof = build_minkowski_profile(&params(1.0, 1.0, 0, 4, 5.0)).unwrap();
        assert_eq!(prof.case_tag, MinkowskiCase::M2_3);
        assert!(prof.verified(), "{:?}", prof.mismatches);
        assert_eq!(prof.pieces.len(), 1);
        let s = prof.samples();
        assert!(s.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].1 > 0.0));
    }

    #[test]
    fn square_map_derivative_matches_chain_rule() {
        let prof = build_minkowski_profile(&params(1.0, 1.0, 0, 4, 5.0)).unwrap();
        let t = 2.0;
        let h = 1e-5;
        let (_, dv) = prof.eval(t).unwrap();
        let fd = (prof.eval(t + h).unwrap().0 - prof.eval(t - h).unwrap().0) / (2.0 * h);
        assert!((dv - fd).abs() < 1e-7, "{dv} vs {fd}");
        // v'(0) = w''(0)/2 = −Λd^p/(2(1+θ)) with Λ = 4μ/γ = 4, θ = 3.
        assert!((prof.eval(0.0).unwrap().1 + 0.5).abs() < 1e-12);
    }
}
