//! Isoparametric functions on the semi-Euclidean space `ℝ^m_s` and the
//! pseudosphere `𝕊^m_s`, their level sets, and the composition `u = v∘φ`.
//!
//! Coordinates are orthonormal with the first `s` directions timelike, so
//! `⟨z, w⟩ = −Σ_{i<s} zᵢwᵢ + Σ_{i≥s} zᵢwᵢ`. The wave operator is
//! `□ = σ Σ εᵢ ∂²ᵢ`, with the sign `σ` calibrated so that `□⟨Az, z⟩ = 2 tr A`.
//! On the pseudosphere, functions are extended to the ambient space
//! homogeneously of degree zero, which makes the ambient operator agree with
//! the intrinsic one on the unit quadric.

use crate::coefficients::Nonlinearity;
use crate::shooting::{DeSitterImage, GluedSolution};
use crate::singular_ivp::{CaseParams, MinkowskiProfile, PieceMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Errors of the geometry layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid isoparametric spec: {0}")]
    InvalidSpec(String),
    #[error("point has {got} coordinates, the ambient space needs {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("point is off the pseudosphere: <z,z> = {0}")]
    OffPseudosphere(f64),
    #[error("{0} is data only and has no pointwise evaluator")]
    Unsupported(&'static str),
    #[error("{0} is not a homogeneous polynomial")]
    NotHomogeneous(&'static str),
    #[error("level {level} is within the stencil of a blow-up level set")]
    NearBlowUp { level: f64 },
    #[error("level {level} lies outside the profile domain [{lo}, {hi}]")]
    OutOfDomain { level: f64, lo: f64, hi: f64 },
}

/// `⟨z, w⟩` with the first `s` coordinates timelike.
pub fn inner(z: &[f64], w: &[f64], s: usize) -> f64 {
    z.iter().zip(w).enumerate().map(|(i, (a, b))| if i < s { -a * b } else { a * b }).sum()
}

/// Sum of `|εᵢ zᵢ wᵢ|`, the scale against which `⟨z, w⟩` is rounded.
fn inner_scale(z: &[f64], w: &[f64]) -> f64 {
    z.iter().zip(w).map(|(a, b)| (a * b).abs()).sum()
}

/// Variants of isoparametric functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpecVariant {
    /// `φ = 2⟨a, z⟩` on `ℝ^m_s`.
    FlatLinear { a: Vec<f64> },
    /// `φ = α(−Σ_{i<k} tᵢ² + Σ_{j<n} xⱼ²)` on `ℝ^m_s`.
    FlatQuadratic { alpha: f64, k: usize, n: usize },
    /// `φ = Σᵢ (tᵢ − εᵢxᵢ)² + 2Σ_{j<ω} x_{s+j}` on `ℝ^m_s`, with `xᵢ` the
    /// coordinate `s + i` and the free spacelike block starting at `2s`.
    FlatParabolic { epsilons: Vec<i8>, omega: usize },
    /// `φ = ⟨Q, z⟩` restricted to `𝕊^m_s`.
    PsLinear { q: Vec<f64> },
    /// `φ = ⟨Az, z⟩` on `𝕊^m_s` with `A = diag(−1 (k₁ times), 1 (k₂ times))`.
    PsQuadratic { k1: usize, k2: usize },
    /// Degree-four Clifford data on `𝕊^{2k−1}_s` with `n_c` Clifford matrices.
    PsClifford { k: usize, n_c: usize },
}

impl SpecVariant {
    pub fn name(&self) -> &'static str {
        match self {
            SpecVariant::FlatLinear { .. } => "flat_linear",
            SpecVariant::FlatQuadratic { .. } => "flat_quadratic",
            SpecVariant::FlatParabolic { .. } => "flat_parabolic",
            SpecVariant::PsLinear { .. } => "ps_linear",
            SpecVariant::PsQuadratic { .. } => "ps_quadratic",
            SpecVariant::PsClifford { .. } => "ps_clifford",
        }
    }
}

/// An isoparametric function with its ambient data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoparametricSpec {
    /// Dimension of `ℝ^m_s` or of `𝕊^m_s`.
    pub m: usize,
    /// Index of the metric.
    pub s: usize,
    pub variant: SpecVariant,
}

/// Closed interval image `[lo, hi]`, with infinite ends allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Image {
    pub lo: f64,
    pub hi: f64,
}

impl Image {
    pub fn contains(&self, c: f64) -> bool {
        c >= self.lo && c <= self.hi
    }
}

impl IsoparametricSpec {
    pub fn new(m: usize, s: usize, variant: SpecVariant) -> Result<Self, GeometryError> {
        let spec = IsoparametricSpec { m, s, variant };
        spec.validate()?;
        Ok(spec)
    }

    /// Pseudosphere variants live in `ℝ^{m+1}_s`.
    pub fn is_pseudosphere(&self) -> bool {
        matches!(
            self.variant,
            SpecVariant::PsLinear { .. } | SpecVariant::PsQuadratic { .. } | SpecVariant::PsClifford { .. }
        )
    }

    pub fn ambient_dim(&self) -> usize {
        if self.is_pseudosphere() {
            self.m + 1
        } else {
            self.m
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: String| Err(GeometryError::InvalidSpec(m));
        let (m, s) = (self.m, self.s);
        if s > m {
            return bad(format!("index s = {s} exceeds m = {m}"));
        }
        match &self.variant {
            SpecVariant::FlatLinear { a } => {
                if a.len() != m {
                    return bad(format!("a has {} entries, need {m}", a.len()));
                }
                if a.iter().all(|&x| x == 0.0) {
                    return bad("a must be nonzero".into());
                }
            }
            SpecVariant::FlatQuadratic { alpha, k, n } => {
                if *alpha == 0.0 || !alpha.is_finite() {
                    return bad(format!("alpha must be nonzero, got {alpha}"));
                }
                if *k > s || *n > m - s || k + n == 0 {
                    return bad(format!("need 0 <= k <= {s}, 0 <= n <= {}, k + n >= 1", m - s));
                }
            }
            SpecVariant::FlatParabolic { epsilons, omega } => {
                if s == 0 || epsilons.len() != s {
                    return bad(format!("need s >= 1 and one epsilon per timelike axis, got {}", epsilons.len()));
                }
                if epsilons.iter().any(|&e| e != 1 && e != -1) {
                    return bad("epsilons must be +1 or -1".into());
                }
                if 2 * s >= m || *omega == 0 || *omega > m - 2 * s {
                    return bad(format!("need 2s < m and 1 <= omega <= {}", m.saturating_sub(2 * s)));
                }
            }
            SpecVariant::PsLinear { q } => {
                if q.len() != m + 1 {
                    return bad(format!("Q has {} entries, need {}", q.len(), m + 1));
                }
                let qq = inner(q, q, s);
                if (qq - 1.0).abs() > 1e-12 {
                    return bad(format!("Q must lie on the pseudosphere, <Q,Q> = {qq}"));
                }
            }
            SpecVariant::PsQuadratic { k1, k2 } => {
                if k1 + k2 != m + 1 || *k1 <= s.max(2) || *k2 <= 2 {
                    return bad(format!("need k1 + k2 = m + 1, k1 > max(s, 2), k2 > 2; got k1={k1}, k2={k2}"));
                }
            }
            SpecVariant::PsClifford { k, n_c } => {
                if m != 2 * k - 1 || *n_c == 0 || n_c > k {
                    return bad(format!("need m = 2k - 1 and 1 <= n_c <= k; got m={m}, k={k}, n_c={n_c}"));
                }
            }
        }
        Ok(())
    }

    /// Degree `ℓ` of the Cartan-Münzner polynomial, for pseudosphere variants.
    pub fn ell(&self) -> Option<u32> {
        match self.variant {
            SpecVariant::PsLinear { .. } => Some(1),
            SpecVariant::PsQuadratic { .. } => Some(2),
            SpecVariant::PsClifford { .. } => Some(4),
            _ => None,
        }
    }

    /// `β` of the Cartan-Münzner polynomial, for pseudosphere variants.
    pub fn ps_beta(&self) -> Option<f64> {
        match self.variant {
            SpecVariant::PsLinear { .. } => Some(0.0),
            SpecVariant::PsQuadratic { k1, k2 } => Some(0.5 * (k2 as f64 - k1 as f64)),
            SpecVariant::PsClifford { k, n_c } => Some(0.5 * (k as f64 + 1.0 - 2.0 * n_c as f64)),
            _ => None,
        }
    }

    /// Multiplicities `(m₁, m₂)` of the principal curvatures, for pseudosphere variants.
    pub fn multiplicities(&self) -> Option<(usize, usize)> {
        match self.variant {
            SpecVariant::PsLinear { .. } => Some((self.m - 1, self.m - 1)),
            SpecVariant::PsQuadratic { k1, k2 } => Some((k2 - 1, k1 - 1)),
            SpecVariant::PsClifford { k, n_c } => Some((n_c - 1, k - n_c)),
            _ => None,
        }
    }

    /// `b(t)` in `⟨grad φ, grad φ⟩ = b(φ)`.
    pub fn b(&self, t: f64) -> f64 {
        match &self.variant {
            SpecVariant::FlatLinear { a } => 4.0 * inner(a, a, self.s),
            SpecVariant::FlatQuadratic { alpha, .. } => 4.0 * alpha * t,
            SpecVariant::FlatParabolic { omega, .. } => 4.0 * *omega as f64,
            _ => {
                let ell = self.ell().unwrap_or(1) as f64;
                ell * ell * (1.0 - t * t)
            }
        }
    }

    /// `a(t)` in `□φ = a(φ)`.
    pub fn a(&self, t: f64) -> f64 {
        match &self.variant {
            SpecVariant::FlatLinear { .. } | SpecVariant::FlatParabolic { .. } => 0.0,
            SpecVariant::FlatQuadratic { alpha, k, n } => 2.0 * alpha * (k + n) as f64,
            _ => {
                let ell = self.ell().unwrap_or(1) as f64;
                ell * ell * self.ps_beta().unwrap_or(0.0) - ell * (self.m as f64 + ell - 1.0) * t
            }
        }
    }

    /// Critical values of `φ`.
    pub fn critical_values(&self) -> Vec<f64> {
        match self.variant {
            SpecVariant::FlatLinear { .. } | SpecVariant::FlatParabolic { .. } => vec![],
            SpecVariant::FlatQuadratic { .. } => vec![0.0],
            _ => vec![-1.0, 1.0],
        }
    }

    /// Image of `φ`; `None` for data-only variants.
    pub fn image(&self) -> Option<Image> {
        let inf = f64::INFINITY;
        let line = Image { lo: -inf, hi: inf };
        Some(match self.variant {
            SpecVariant::FlatLinear { .. } | SpecVariant::FlatParabolic { .. } => line,
            SpecVariant::FlatQuadratic { alpha, k, n } => {
                if k > 0 && n > 0 {
                    line
                } else if (n > 0) == (alpha > 0.0) {
                    Image { lo: 0.0, hi: inf }
                } else {
                    Image { lo: -inf, hi: 0.0 }
                }
            }
            SpecVariant::PsLinear { .. } if self.s == 0 => Image { lo: -1.0, hi: 1.0 },
            SpecVariant::PsLinear { .. } => line,
            SpecVariant::PsQuadratic { .. } if self.s == 0 => Image { lo: -1.0, hi: 1.0 },
            SpecVariant::PsQuadratic { .. } => Image { lo: -1.0, hi: inf },
            SpecVariant::PsClifford { .. } => return None,
        })
    }

    /// Image class `M1`, `M2`, `M3` (flat) or `P1`, `P2`, `P3` (pseudosphere).
    pub fn image_tag(&self) -> Option<&'static str> {
        let img = self.image()?;
        Some(match self.variant {
            SpecVariant::FlatLinear { .. } | SpecVariant::FlatParabolic { .. } => "M1",
            SpecVariant::FlatQuadratic { k, n, .. } if k > 0 && n > 0 => "M3",
            SpecVariant::FlatQuadratic { .. } => "M2",
            _ => match (img.lo, img.hi) {
                (lo, hi) if lo.is_infinite() && hi.is_infinite() => "P1",
                (lo, hi) if lo == -1.0 && hi.is_infinite() => "P2",
                (lo, hi) if lo == 1.0 && hi.is_infinite() => "P3",
                _ => return None,
            },
        })
    }

    /// Image of a pseudosphere variant in the form consumed by the gluing step.
    pub fn de_sitter_image(&self) -> Option<DeSitterImage> {
        match self.image_tag()? {
            "P1" => Some(DeSitterImage::Line),
            "P2" => Some(DeSitterImage::FromMinusOne),
            "P3" => Some(DeSitterImage::FromOne),
            _ => None,
        }
    }

    /// Coefficients of the reduced Minkowski equation `b v'' + a v' = −μ|v|^{p−1}v`.
    pub fn minkowski_params(&self, mu: f64, p: f64, d: f64) -> Result<CaseParams, GeometryError> {
        let base = CaseParams { a_zero: false, gamma: 0.0, delta: 0.0, beta: 0.0, mu, k: 0, n: 0, p, d };
        match &self.variant {
            SpecVariant::FlatLinear { .. } => Ok(CaseParams { a_zero: true, delta: self.b(0.0), ..base }),
            SpecVariant::FlatParabolic { .. } => Ok(CaseParams { delta: self.b(0.0), ..base }),
            SpecVariant::FlatQuadratic { alpha, k, n } => Ok(CaseParams {
                gamma: 4.0 * alpha,
                beta: self.a(0.0),
                k: *k as u32,
                n: *n as u32,
                ..base
            }),
            _ => Err(GeometryError::InvalidSpec("pseudosphere variants reduce to the compact problem".into())),
        }
    }

    fn check_point(&self, z: &[f64]) -> Result<(), GeometryError> {
        if z.len() != self.ambient_dim() {
            return Err(GeometryError::Dimension { expected: self.ambient_dim(), got: z.len() });
        }
        if self.is_pseudosphere() {
            let zz = inner(z, z, self.s);
            if (zz - 1.0).abs() > 1e-12 {
                return Err(GeometryError::OffPseudosphere(zz));
            }
        }
        Ok(())
    }

    /// Ambient polynomial `Φ(z)` (for flat variants, `φ` itself).
    fn big_phi(&self, z: &[f64]) -> Result<f64, GeometryError> {
        let s = self.s;
        Ok(match &self.variant {
            SpecVariant::FlatLinear { a } => 2.0 * inner(a, z, s),
            SpecVariant::FlatQuadratic { alpha, k, n } => {
                let t: f64 = z[..*k].iter().map(|x| x * x).sum();
                let x: f64 = z[s..s + n].iter().map(|x| x * x).sum();
                alpha * (x - t)
            }
            SpecVariant::FlatParabolic { epsilons, omega } => {
                let sq: f64 = epsilons.iter().enumerate().map(|(i, &e)| (z[i] - e as f64 * z[s + i]).powi(2)).sum();
                sq + 2.0 * z[2 * s..2 * s + omega].iter().sum::<f64>()
            }
            SpecVariant::PsLinear { q } => inner(q, z, s),
            SpecVariant::PsQuadratic { k1, .. } => z
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let a = if i < *k1 { -1.0 } else { 1.0 };
                    let e = if i < s { -1.0 } else { 1.0 };
                    e * a * x * x
                })
                .sum(),
            SpecVariant::PsClifford { .. } => return Err(GeometryError::Unsupported("ps_clifford")),
        })
    }

    /// Metric gradient `grad Φ` in the ambient space, in closed form.
    fn big_grad(&self, z: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let s = self.s;
        let mut g = vec![0.0; z.len()];
        match &self.variant {
            SpecVariant::FlatLinear { a } => g.iter_mut().zip(a).for_each(|(gi, ai)| *gi = 2.0 * ai),
            SpecVariant::FlatQuadratic { alpha, k, n } => {
                for i in (0..*k).chain(s..s + n) {
                    g[i] = 2.0 * alpha * z[i];
                }
            }
            SpecVariant::FlatParabolic { epsilons, omega } => {
                for (i, &e) in epsilons.iter().enumerate() {
                    let e = e as f64;
                    let u = z[i] - e * z[s + i];
                    // ∂_t = 2u and ∂_x = −2εu, raised with the metric signs −1 and +1.
                    g[i] = -2.0 * u;
                    g[s + i] = -2.0 * e * u;
                }
                for gi in &mut g[2 * s..2 * s + omega] {
                    *gi = 2.0;
                }
            }
            SpecVariant::PsLinear { q } => g.copy_from_slice(q),
            SpecVariant::PsQuadratic { k1, .. } => {
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi = if i < *k1 { -2.0 * z[i] } else { 2.0 * z[i] };
                }
            }
            SpecVariant::PsClifford { .. } => return Err(GeometryError::Unsupported("ps_clifford")),
        }
        Ok(g)
    }

    /// Extension of `φ` used by the finite-difference operator: `Φ` itself on
    /// flat space, `Φ(z)/⟨z,z⟩^{ℓ/2}` around the pseudosphere.
    fn extended_phi(&self, z: &[f64]) -> Result<f64, GeometryError> {
        let phi = self.big_phi(z)?;
        match self.ell() {
            Some(ell) => Ok(phi / inner(z, z, self.s).powf(0.5 * ell as f64)),
            None => Ok(phi),
        }
    }
}

/// `φ(z)` by the closed formula of the variant.
pub fn phi_eval(spec: &IsoparametricSpec, z: &[f64]) -> Result<f64, GeometryError> {
    spec.check_point(z)?;
    spec.big_phi(z)
}

/// Sign `σ` making `σ Σ εᵢ ∂²ᵢ ⟨Az, z⟩ = 2 tr A` on a test quadratic.
pub fn calibrate_sigma() -> f64 {
    let spec = IsoparametricSpec { m: 3, s: 1, variant: SpecVariant::FlatQuadratic { alpha: 1.0, k: 1, n: 1 } };
    let z = [0.3, -0.2, 0.7];
    let raw = signed_second_differences(|x| spec.big_phi(x).unwrap_or(f64::NAN), &z, 1, 1e-3);
    let target = 2.0 * 2.0;
    if (raw - target).abs() < (raw + target).abs() {
        1.0
    } else {
        -1.0
    }
}

/// `Σ εᵢ (F(z + heᵢ) − 2F(z) + F(z − heᵢ))/h²`.
fn signed_second_differences(f: impl Fn(&[f64]) -> f64, z: &[f64], s: usize, h: f64) -> f64 {
    let f0 = f(z);
    let mut x = z.to_vec();
    let mut acc = 0.0;
    for i in 0..z.len() {
        x[i] = z[i] + h;
        let fp = f(&x);
        x[i] = z[i] - h;
        let fm = f(&x);
        x[i] = z[i];
        let d2 = (fp - 2.0 * f0 + fm) / (h * h);
        acc += if i < s { -d2 } else { d2 };
    }
    acc
}

/// Step used at `z`: `h` scaled by the coordinate size of `z`.
fn scaled_step(z: &[f64], h: f64) -> f64 {
    h * z.iter().fold(1.0f64, |m, x| m.max(x.abs()))
}

/// Finite-difference `□F` at `z` for a function on the ambient space of `spec`.
pub fn fd_box(spec: &IsoparametricSpec, f: impl Fn(&[f64]) -> f64, z: &[f64], h: f64) -> f64 {
    calibrate_sigma() * signed_second_differences(f, z, spec.s, scaled_step(z, h))
}

/// Residuals of `⟨grad φ, grad φ⟩ = b(φ)` and `□φ = a(φ)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub phi: f64,
    /// Relative to the rounding scale of the closed-form inner product.
    pub grad_residual: f64,
    /// Absolute residual of the finite-difference operator.
    pub laplacian_residual: f64,
    /// `z` lies within the stencil of a critical level.
    pub near_focal: bool,
    pub sigma: f64,
}

/// Checks the defining identities at `z` with finite-difference step `h`.
pub fn identity_residuals(spec: &IsoparametricSpec, z: &[f64], h: f64) -> Result<IdentityResiduals, GeometryError> {
    spec.check_point(z)?;
    let phi = spec.big_phi(z)?;
    let s = spec.s;
    let mut g = spec.big_grad(z)?;
    if spec.is_pseudosphere() {
        // Tangential part grad Φ − ⟨grad Φ, z⟩z.
        let gz = inner(&g, z, s);
        g.iter_mut().zip(z).for_each(|(gi, zi)| *gi -= gz * zi);
    }
    let gg = inner(&g, &g, s);
    let b = spec.b(phi);
    let grad_residual = (gg - b).abs() / inner_scale(&g, &g).max(b.abs()).max(1.0);
    let lap = fd_box(spec, |x| spec.extended_phi(x).unwrap_or(f64::NAN), z, h);
    let laplacian_residual = (lap - spec.a(phi)).abs();
    let hz = scaled_step(z, h);
    let gnorm = inner_scale(&g, &g).sqrt().max(1e-300);
    let near_focal = spec.critical_values().iter().any(|c| (phi - c).abs() <= 2.0 * hz * gnorm);
    Ok(IdentityResiduals { phi, grad_residual, laplacian_residual, near_focal, sigma: calibrate_sigma() })
}

/// `|⟨grad Φ(z), z⟩ − ℓΦ(z)|` relative to the rounding scale of the left side.
pub fn euler_check(spec: &IsoparametricSpec, z: &[f64]) -> Result<f64, GeometryError> {
    if z.len() != spec.ambient_dim() {
        return Err(GeometryError::Dimension { expected: spec.ambient_dim(), got: z.len() });
    }
    let degree = match (&spec.variant, spec.ell()) {
        (SpecVariant::FlatLinear { .. }, _) => 1.0,
        (SpecVariant::FlatQuadratic { .. }, _) => 2.0,
        (SpecVariant::FlatParabolic { .. }, _) => return Err(GeometryError::NotHomogeneous("flat_parabolic")),
        (SpecVariant::PsClifford { .. }, _) => return Err(GeometryError::Unsupported("ps_clifford")),
        (_, Some(ell)) => ell as f64,
        _ => unreachable!("every variant handled"),
    };
    let g = spec.big_grad(z)?;
    let phi = spec.big_phi(z)?;
    let lhs = inner(&g, z, spec.s);
    Ok((lhs - degree * phi).abs() / inner_scale(&g, z).max(1.0))
}

/// `⟨grad Φ, grad Φ⟩ − ℓ²⟨z, z⟩^{ℓ−1}` at an arbitrary ambient point, relative.
pub fn cartan_munzner_residual(spec: &IsoparametricSpec, z: &[f64]) -> Result<f64, GeometryError> {
    let ell = spec.ell().ok_or(GeometryError::InvalidSpec("not a pseudosphere variant".into()))? as i32;
    if z.len() != spec.ambient_dim() {
        return Err(GeometryError::Dimension { expected: spec.ambient_dim(), got: z.len() });
    }
    let g = spec.big_grad(z)?;
    let target = (ell * ell) as f64 * inner(z, z, spec.s).powi(ell - 1);
    Ok((inner(&g, &g, spec.s) - target).abs() / inner_scale(&g, &g).max(1.0))
}

/// Random points of the ambient space (flat) or of the pseudosphere.
pub fn sample_points(spec: &IsoparametricSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = spec.ambient_dim();
    (0..count)
        .map(|_| {
            let mut z: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if spec.is_pseudosphere() {
                let s = spec.s;
                let t2: f64 = z[..s].iter().map(|x| x * x).sum();
                let x2: f64 = z[s..].iter().map(|x| x * x).sum();
                let scale = ((1.0 + t2) / x2).sqrt();
                z[s..].iter_mut().for_each(|x| *x *= scale);
            }
            z
        })
        .collect()
}

/// One factor of a level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    /// Affine hyperplane.
    Hyperplane,
    /// Flat factor `ℝ^dim_signature`.
    Flat { dim: usize, signature: usize },
    /// Definite sphere `S^dim` of squared radius `radius2`.
    Sphere { dim: usize, radius2: f64 },
    /// `{⟨z,z⟩ = radius2}` in `ℝ^{dim+1}_{sub}`.
    PseudoSphere { dim: usize, sub_signature: usize, radius2: f64 },
    /// `{⟨z,z⟩ = −radius2}` in `ℝ^{dim+1}_{sub+1}`.
    PseudoHyperbolic { dim: usize, sub_signature: usize, radius2: f64 },
    /// `{⟨z,z⟩ = 0}` in `ℝ^{dim+1}_{sub}`.
    NullCone { dim: usize, sub_signature: usize },
    /// Parabolic cylinder of dimension `dim`.
    ParabolicCylinder { dim: usize, epsilons: Vec<i8>, omega: usize },
    Point,
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Hyperplane => f.write_str("L(hyperplane)"),
            Factor::Flat { dim, signature } => write!(f, "R^{{{dim}}}_{{{signature}}}"),
            Factor::Sphere { dim, radius2 } => write!(f, "S^{{{dim}}}(r2={radius2})"),
            Factor::PseudoSphere { dim, sub_signature, radius2 } => {
                write!(f, "S^{{{dim}}}_{{{sub_signature}}}(r2={radius2})")
            }
            Factor::PseudoHyperbolic { dim, sub_signature, radius2 } => {
                write!(f, "H^{{{dim}}}_{{{sub_signature}}}(r2={radius2})")
            }
            Factor::NullCone { dim, sub_signature } => write!(f, "C^{{{dim}}}_{{{sub_signature}}}"),
            Factor::ParabolicCylinder { dim, epsilons, omega } => {
                let eps: String = epsilons.iter().map(|&e| if e > 0 { '+' } else { '-' }).collect();
                write!(f, "P^{{{dim}}}(eps={eps},omega={omega})")
            }
            Factor::Point => f.write_str("PT"),
        }
    }
}

impl Factor {
    /// Dimension of the factor as a variety.
    pub fn dim(&self, ambient_m: usize) -> usize {
        match self {
            Factor::Hyperplane => ambient_m - 1,
            Factor::Point => 0,
            Factor::Flat { dim, .. }
            | Factor::Sphere { dim, .. }
            | Factor::PseudoSphere { dim, .. }
            | Factor::PseudoHyperbolic { dim, .. }
            | Factor::NullCone { dim, .. }
            | Factor::ParabolicCylinder { dim, .. } => *dim,
        }
    }
}

/// Regularity of a level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    RegularHypersurface,
    FocalVariety,
}

/// Symbolic description of a level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelSetDescriptor {
    Empty,
    /// The whole space, the level set of a constant profile at its value.
    Whole,
    Product { factors: Vec<Factor>, regularity: Regularity },
}

impl fmt::Display for LevelSetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelSetDescriptor::Empty => f.write_str("EMPTY"),
            LevelSetDescriptor::Whole => f.write_str("WHOLE"),
            LevelSetDescriptor::Product { factors, .. } => {
                let parts: Vec<String> = factors.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(" x "))
            }
        }
    }
}

impl LevelSetDescriptor {
    pub fn regularity(&self) -> Option<Regularity> {
        match self {
            LevelSetDescriptor::Product { regularity, .. } => Some(*regularity),
            _ => None,
        }
    }

    /// Sum of factor dimensions.
    pub fn dim(&self, ambient_m: usize) -> Option<usize> {
        match self {
            LevelSetDescriptor::Product { factors, .. } => Some(factors.iter().map(|x| x.dim(ambient_m)).sum()),
            _ => None,
        }
    }
}

fn product(factors: Vec<Factor>, focal: bool) -> LevelSetDescriptor {
    let regularity = if focal { Regularity::FocalVariety } else { Regularity::RegularHypersurface };
    let factors = factors
        .into_iter()
        .filter(|x| !matches!(x, Factor::Flat { dim: 0, .. }))
        .map(|x| match x {
            Factor::PseudoSphere { dim, sub_signature: 0, radius2 } => Factor::Sphere { dim, radius2 },
            other => other,
        })
        .collect();
    LevelSetDescriptor::Product { factors, regularity }
}

/// `{⟨y, y⟩ = r}` in `ℝ^{dim+1}_{sig}` as a factor, `None` when empty.
fn quadric(dim: usize, sig: usize, r: f64) -> Option<Factor> {
    if r > 0.0 {
        (sig < dim + 1).then_some(Factor::PseudoSphere { dim, sub_signature: sig, radius2: r })
    } else if r < 0.0 {
        (sig > 0).then_some(Factor::PseudoHyperbolic { dim, sub_signature: sig - 1, radius2: -r })
    } else if sig == 0 || sig == dim + 1 {
        Some(Factor::Point)
    } else {
        Some(Factor::NullCone { dim, sub_signature: sig })
    }
}

/// Symbolic level set `φ⁻¹(c)`.
pub fn classify_level_set(spec: &IsoparametricSpec, c: f64) -> Result<LevelSetDescriptor, GeometryError> {
    spec.validate()?;
    let (m, s) = (spec.m, spec.s);
    let focal = spec.critical_values().contains(&c);
    Ok(match &spec.variant {
        SpecVariant::FlatLinear { .. } => product(vec![Factor::Hyperplane], false),
        SpecVariant::FlatParabolic { epsilons, omega } => {
            let dim = 2 * s + omega - 1;
            let p = Factor::ParabolicCylinder { dim, epsilons: epsilons.clone(), omega: *omega };
            product(vec![p, Factor::Flat { dim: m - 2 * s - omega, signature: 0 }], false)
        }
        SpecVariant::FlatQuadratic { alpha, k, n } => {
            let (k, n) = (*k, *n);
            let ratio = c / alpha;
            if k == 0 {
                let rest = Factor::Flat { dim: m - n, signature: s };
                match ratio.partial_cmp(&0.0) {
                    Some(std::cmp::Ordering::Less) => LevelSetDescriptor::Empty,
                    Some(std::cmp::Ordering::Equal) => product(vec![Factor::Point, rest], true),
                    _ => product(vec![Factor::Sphere { dim: n - 1, radius2: ratio }, rest], false),
                }
            } else if n == 0 {
                let rest = Factor::Flat { dim: m - k, signature: s - k };
                match ratio.partial_cmp(&0.0) {
                    Some(std::cmp::Ordering::Greater) => LevelSetDescriptor::Empty,
                    Some(std::cmp::Ordering::Equal) => product(vec![rest, Factor::Point], true),
                    _ => product(vec![Factor::Sphere { dim: k - 1, radius2: -ratio }, rest], false),
                }
            } else {
                let rest = Factor::Flat { dim: m - (k + n), signature: s - k };
                let head = quadric(k + n - 1, k, ratio).expect("mixed quadric is never empty");
                product(vec![head, rest], focal)
            }
        }
        SpecVariant::PsLinear { .. } => {
            // With ⟨Q,Q⟩ = 1 the complement Q^⊥ is a copy of ℝ^m_s, and the
            // level set is {cQ + y : ⟨y,y⟩ = 1 − c²}.
            match quadric(m - 1, s, 1.0 - c * c) {
                None => LevelSetDescriptor::Empty,
                Some(Factor::NullCone { dim, sub_signature }) => {
                    product(vec![Factor::NullCone { dim, sub_signature }, Factor::Point], true)
                }
                Some(Factor::Point) => product(vec![Factor::Point], true),
                Some(q) => product(vec![q], focal),
            }
        }
        SpecVariant::PsQuadratic { k1, k2 } => {
            // φ = 2|y₂|² − 1 with y = (y₁, y₂) ∈ ℝ^{k₁}_s × ℝ^{k₂} and ⟨y₁,y₁⟩ + |y₂|² = 1.
            let r2 = 0.5 * (1.0 + c);
            let r1 = 0.5 * (1.0 - c);
            if r2 < 0.0 {
                LevelSetDescriptor::Empty
            } else {
                let second = if r2 == 0.0 { Factor::Point } else { Factor::Sphere { dim: k2 - 1, radius2: r2 } };
                match quadric(k1 - 1, s, r1) {
                    None => LevelSetDescriptor::Empty,
                    Some(first) => product(vec![first, second], focal),
                }
            }
        }
        SpecVariant::PsClifford { .. } => return Err(GeometryError::Unsupported("ps_clifford")),
    })
}

/// A profile `v(t)` with derivatives, defined on an interval of levels.
pub trait Profile {
    /// `v(t)`.
    fn value(&self, t: f64) -> Option<f64>;
    /// `(v, v', v'')` at `t`, with `v''` independent of the equation.
    fn jet(&self, t: f64) -> Option<[f64; 3]>;
    /// Interval of levels covered.
    fn domain(&self) -> (f64, f64);
    /// Levels where the profile blows up.
    fn blow_up_levels(&self) -> Vec<f64>;
    /// Sorted levels of the integration grid.
    fn grid(&self) -> Vec<f64>;
    /// `Some(c)` for a constant profile `v ≡ c`.
    fn constant_value(&self) -> Option<f64> {
        None
    }
}

/// Analytic profile for tests and convergence studies.
pub struct FnProfile<F: Fn(f64) -> [f64; 3]> {
    pub jet: F,
    pub domain: (f64, f64),
    pub grid_points: usize,
}

impl<F: Fn(f64) -> [f64; 3]> Profile for FnProfile<F> {
    fn value(&self, t: f64) -> Option<f64> {
        (t >= self.domain.0 && t <= self.domain.1).then(|| (self.jet)(t)[0])
    }

    fn jet(&self, t: f64) -> Option<[f64; 3]> {
        (t >= self.domain.0 && t <= self.domain.1).then(|| (self.jet)(t))
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn blow_up_levels(&self) -> Vec<f64> {
        vec![]
    }

    fn grid(&self) -> Vec<f64> {
        let (lo, hi) = self.domain;
        let n = self.grid_points.max(2);
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

impl Profile for MinkowskiProfile {
    fn value(&self, t: f64) -> Option<f64> {
        self.eval(t).map(|(v, _)| v)
    }

    fn jet(&self, t: f64) -> Option<[f64; 3]> {
        self.pieces.iter().find_map(|piece| {
            let r = piece.map.r_of_t(t)?;
            let (w, wp) = piece.trajectory.eval(r)?;
            let wpp = piece.trajectory.interpolant_second_derivative(r)?;
            Some(match piece.map {
                PieceMap::Identity => [w, wp, wpp],
                PieceMap::NegIdentity => [w, -wp, wpp],
                PieceMap::Square | PieceMap::NegSquare => {
                    if r == 0.0 {
                        return None;
                    }
                    let sgn = if piece.map == PieceMap::Square { 1.0 } else { -1.0 };
                    [w, sgn * wp / (2.0 * r), (wpp - wp / r) / (4.0 * r * r)]
                }
            })
        })
    }

    fn domain(&self) -> (f64, f64) {
        self.domain
    }

    fn blow_up_levels(&self) -> Vec<f64> {
        self.pieces
            .iter()
            .filter(|p| p.trajectory.is_blow_up())
            .map(|p| p.map.t_of_r(p.trajectory.last().r))
            .collect()
    }

    fn grid(&self) -> Vec<f64> {
        self.samples().into_iter().map(|(t, _)| t).collect()
    }

    fn constant_value(&self) -> Option<f64> {
        self.pieces.iter().all(|p| p.trajectory.is_stationary()).then(|| self.pieces[0].trajectory.nodes[0].w)
    }
}

impl Profile for GluedSolution {
    fn value(&self, t: f64) -> Option<f64> {
        self.eval(t).map(|(v, _)| v)
    }

    fn jet(&self, t: f64) -> Option<[f64; 3]> {
        if t.abs() < 1.0 {
            let mid = self.middle.as_ref()?;
            let r = t.acos();
            let (w, wp) = mid.eval(r)?;
            let wpp = mid.interpolant_second_derivative(r)?;
            let s = r.sin();
            return Some([w, -wp / s, (wpp - r.cos() / s * wp) / (s * s)]);
        }
        let piece = if t > 1.0 { &self.right } else { self.left.as_ref()? };
        let r = (t.abs()).acosh();
        let (w, wp) = piece.trajectory.eval(r)?;
        let wpp = piece.trajectory.interpolant_second_derivative(r)?;
        let (sh, coth) = (r.sinh(), 1.0 / r.tanh());
        Some([piece.sign * w, piece.sign * piece.side * wp / sh, piece.sign * (wpp - coth * wp) / (sh * sh)])
    }

    fn domain(&self) -> (f64, f64) {
        let hi = self.right.trajectory.last().r.cosh();
        let lo = match (&self.left, &self.middle) {
            (Some(l), _) => -l.trajectory.last().r.cosh(),
            (None, Some(_)) => -1.0,
            (None, None) => 1.0,
        };
        (lo, hi)
    }

    fn blow_up_levels(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.right.trajectory.is_blow_up() {
            out.push(self.right.trajectory.last().r.cosh());
        }
        if let Some(l) = self.left.as_ref().filter(|l| l.trajectory.is_blow_up()) {
            out.push(-l.trajectory.last().r.cosh());
        }
        out
    }

    fn grid(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.right.trajectory.nodes.iter().map(|n| n.r.cosh()).collect();
        if let Some(mid) = &self.middle {
            ts.extend(mid.nodes().iter().map(|n| n.0.cos()));
        }
        if let Some(l) = &self.left {
            ts.extend(l.trajectory.nodes.iter().map(|n| -n.r.cosh()));
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    fn constant_value(&self) -> Option<f64> {
        let flat = |tr: &crate::singular_ivp::Trajectory| tr.is_stationary();
        let mid_ok = self.middle.as_ref().is_none_or(|m| flat(&m.forward) && flat(&m.backward));
        let left_ok = self.left.as_ref().is_none_or(|l| flat(&l.trajectory));
        (mid_ok && left_ok && flat(&self.right.trajectory)).then(|| self.right.sign * self.right.trajectory.nodes[0].w)
    }
}

/// Residuals of the composition `u = v∘φ` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositionResidual {
    pub u: f64,
    pub level: f64,
    /// `|□u − (v''(φ)b(φ) + v'(φ)a(φ))|`.
    pub reduction_residual: f64,
    /// `|□u + f(u)|` for the problem nonlinearity `f`.
    pub equation_residual: f64,
}

/// Composes `u = v∘φ` and checks the chain rule and the equation `□u + f(u) = 0`.
///
/// The stencil at `z` must stay inside the profile domain and away from every
/// blow-up level.
pub fn pde_compose_and_residual(
    spec: &IsoparametricSpec,
    profile: &dyn Profile,
    f: &Nonlinearity,
    z: &[f64],
    h: f64,
) -> Result<CompositionResidual, GeometryError> {
    spec.check_point(z)?;
    let level = spec.big_phi(z)?;
    let (lo, hi) = profile.domain();
    let hz = scaled_step(z, h);
    let mut g = spec.big_grad(z)?;
    if spec.is_pseudosphere() {
        let gz = inner(&g, z, spec.s);
        g.iter_mut().zip(z).for_each(|(gi, zi)| *gi -= gz * zi);
    }
    // Largest change of φ over the stencil, with a safety factor.
    let spread = 4.0 * hz * g.iter().map(|x| x.abs()).fold(0.0, f64::max) + 1e-12;
    if let Some(&b) = profile.blow_up_levels().iter().find(|&&b| (level - b).abs() <= 10.0 * spread) {
        return Err(GeometryError::NearBlowUp { level: b });
    }
    if level - spread < lo || level + spread > hi {
        return Err(GeometryError::OutOfDomain { level, lo, hi });
    }
    let [v, dv, d2v] = profile.jet(level).ok_or(GeometryError::OutOfDomain { level, lo, hi })?;
    let u_of = |x: &[f64]| {
        spec.extended_phi(x).ok().and_then(|t| profile.value(t)).unwrap_or(f64::NAN)
    };
    let box_u = fd_box(spec, u_of, z, h);
    let chain = d2v * spec.b(level) + dv * spec.a(level);
    Ok(CompositionResidual {
        u: v,
        level,
        reduction_residual: (box_u - chain).abs(),
        equation_residual: (box_u + f.f(v)).abs(),
    })
}

/// Bisection root of `g` in `[a, b]` with `g(a)g(b) ≤ 0`.
fn bisect(g: impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64) -> Option<f64> {
    let mut ga = g(a)?;
    if ga == 0.0 {
        return Some(a);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Some(mid);
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Roots of `g` on the profile grid by sign change and bisection.
fn grid_roots(grid: &[f64], g: impl Fn(f64) -> Option<f64>) -> Vec<f64> {
    let vals: Vec<(f64, f64)> = grid.iter().filter_map(|&t| g(t).map(|v| (t, v))).collect();
    let mut roots = Vec::new();
    for (i, w) in vals.windows(2).enumerate() {
        let ((t0, g0), (t1, g1)) = (w[0], w[1]);
        if g0 == 0.0 {
            if i == 0 || vals[i - 1].1 != 0.0 {
                roots.push(t0);
            }
        } else if g1 != 0.0 && (g0 < 0.0) != (g1 < 0.0) {
            if let Some(r) = bisect(&g, t0, t1) {
                roots.push(r);
            }
        }
    }
    if let Some(&(t, v)) = vals.last() {
        if v == 0.0 {
            roots.push(t);
        }
    }
    roots
}

/// Level sets `u⁻¹(c) = φ⁻¹(v⁻¹(c))` as `(t, descriptor)` for each root of `v(t) = c`.
///
/// A constant profile at its value gives a single `Whole` entry.
pub fn solution_level_descriptors(
    spec: &IsoparametricSpec,
    profile: &dyn Profile,
    c: f64,
) -> Result<Vec<(f64, LevelSetDescriptor)>, GeometryError> {
    if let Some(v) = profile.constant_value() {
        return Ok(if v == c { vec![(f64::NAN, LevelSetDescriptor::Whole)] } else { vec![] });
    }
    grid_roots(&profile.grid(), |t| profile.value(t).map(|v| v - c))
        .into_iter()
        .map(|t| classify_level_set(spec, t).map(|d| (t, d)))
        .collect()
}

/// Critical set of `u = v∘φ`: levels with `v'(t) = 0` and focal levels of `φ`.
pub fn critical_set_descriptors(
    spec: &IsoparametricSpec,
    profile: &dyn Profile,
) -> Result<Vec<(f64, LevelSetDescriptor)>, GeometryError> {
    if profile.constant_value().is_some() {
        return Ok(vec![(f64::NAN, LevelSetDescriptor::Whole)]);
    }
    let (lo, hi) = profile.domain();
    let mut levels = grid_roots(&profile.grid(), |t| profile.jet(t).map(|j| j[1]));
    levels.extend(spec.critical_values().into_iter().filter(|c| *c >= lo && *c <= hi));
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
    levels.into_iter().map(|t| classify_level_set(spec, t).map(|d| (t, d))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fq(m: usize, s: usize, alpha: f64, k: usize, n: usize) -> IsoparametricSpec {
        IsoparametricSpec::new(m, s, SpecVariant::FlatQuadratic { alpha, k, n }).unwrap()
    }

    #[test]
    fn flat_quadratic_value() {
        let spec = fq(4, 1, 1.0, 1, 1);
        assert_eq!(phi_eval(&spec, &[2.0, 3.0, 7.0, -1.0]).unwrap(), 5.0);
    }

    #[test]
    fn flat_linear_value_uses_metric_sign() {
        let spec = IsoparametricSpec::new(3, 1, SpecVariant::FlatLinear { a: vec![-1.0, 0.0, 0.0] }).unwrap();
        assert_eq!(phi_eval(&spec, &[0.75, 4.0, 5.0]).unwrap(), 1.5);
    }

    #[test]
    fn ps_quadratic_on_last_basis_vector() {
        let spec = IsoparametricSpec::new(6, 1, SpecVariant::PsQuadratic { k1: 3, k2: 4 }).unwrap();
        let mut z = vec![0.0; 7];
        z[6] = 1.0;
        assert_eq!(phi_eval(&spec, &z).unwrap(), 1.0);
        assert!(phi_eval(&spec, &[0.0; 7]).is_err());
    }

    #[test]
    fn sigma_is_plus_one() {
        assert_eq!(calibrate_sigma(), 1.0);
    }

    #[test]
    fn parabolic_gradient_constant() {
        let spec = IsoparametricSpec::new(6, 2, SpecVariant::FlatParabolic { epsilons: vec![1, -1], omega: 2 }).unwrap();
        assert_eq!(spec.b(3.0), 8.0);
        for z in sample_points(&spec, 20, 3) {
            let r = identity_residuals(&spec, &z, 1e-3).unwrap();
            assert!(r.grad_residual <= 1e-12);
            assert!(r.laplacian_residual <= 1e-6);
        }
    }

    #[test]
    fn level_set_examples() {
        let lin = IsoparametricSpec::new(3, 1, SpecVariant::FlatLinear { a: vec![0.0, 1.0, 0.0] }).unwrap();
        assert_eq!(classify_level_set(&lin, 7.0).unwrap().to_string(), "L(hyperplane)");
        assert_eq!(classify_level_set(&fq(4, 1, 1.0, 0, 2), -1.0).unwrap(), LevelSetDescriptor::Empty);
        let d = classify_level_set(&fq(6, 3, 1.0, 2, 1), 0.0).unwrap();
        assert_eq!(d.to_string(), "C^{2}_{2} x R^{3}_{1}");
        assert_eq!(d.regularity(), Some(Regularity::FocalVariety));
    }

    #[test]
    fn regular_levels_have_codimension_one() {
        for (k, n) in [(0, 2), (1, 0), (1, 2), (2, 3)] {
            let spec = fq(6, 2, -1.5, k, n);
            for c in [-3.0, 3.0] {
                if let d @ LevelSetDescriptor::Product { .. } = classify_level_set(&spec, c).unwrap() {
                    assert_eq!(d.dim(6), Some(5), "{d}");
                    assert_eq!(d.regularity(), Some(Regularity::RegularHypersurface));
                }
            }
        }
    }

    #[test]
    fn ps_quadratic_levels() {
        let spec = IsoparametricSpec::new(6, 1, SpecVariant::PsQuadratic { k1: 3, k2: 4 }).unwrap();
        assert_eq!(classify_level_set(&spec, -2.0).unwrap(), LevelSetDescriptor::Empty);
        assert_eq!(classify_level_set(&spec, -1.0).unwrap().to_string(), "S^{2}_{1}(r2=1) x PT");
        assert_eq!(classify_level_set(&spec, 0.0).unwrap().to_string(), "S^{2}_{1}(r2=0.5) x S^{3}(r2=0.5)");
        assert_eq!(classify_level_set(&spec, 1.0).unwrap().to_string(), "C^{2}_{1} x S^{3}(r2=1)");
        assert_eq!(classify_level_set(&spec, 3.0).unwrap().to_string(), "H^{2}_{0}(r2=1) x S^{3}(r2=2)");
        assert_eq!(spec.image_tag(), Some("P2"));
    }

    #[test]
    fn ps_linear_levels() {
        let mut q = vec![0.0; 5];
        q[4] = 1.0;
        let spec = IsoparametricSpec::new(4, 1, SpecVariant::PsLinear { q }).unwrap();
        assert_eq!(classify_level_set(&spec, 0.5).unwrap().to_string(), "S^{3}_{1}(r2=0.75)");
        assert_eq!(classify_level_set(&spec, 2.0).unwrap().to_string(), "H^{3}_{0}(r2=3)");
        assert_eq!(classify_level_set(&spec, 1.0).unwrap().to_string(), "C^{3}_{1} x PT");
    }

    #[test]
    fn sampled_points_lie_on_level_sets_they_are_assigned() {
        // A pseudosphere sample with φ = c has its second block of squared norm (1 + c)/2.
        let spec = IsoparametricSpec::new(6, 1, SpecVariant::PsQuadratic { k1: 3, k2: 4 }).unwrap();
        for z in sample_points(&spec, 50, 11) {
            let c = phi_eval(&spec, &z).unwrap();
            let x2: f64 = z[3..].iter().map(|x| x * x).sum();
            assert!((x2 - 0.5 * (1.0 + c)).abs() <= 1e-12 * x2.max(1.0));
        }
    }

    #[test]
    fn clifford_is_data_only() {
        let spec = IsoparametricSpec::new(7, 1, SpecVariant::PsClifford { k: 4, n_c: 2 }).unwrap();
        assert_eq!(spec.ps_beta(), Some(0.5));
        assert_eq!(spec.multiplicities(), Some((1, 2)));
        let mut z = [0.0; 8];
        z[7] = 1.0;
        assert!(matches!(phi_eval(&spec, &z), Err(GeometryError::Unsupported(_))));
    }

    #[test]
    fn identity_profile_reduces_to_laplacian_of_phi() {
        let spec = fq(5, 2, 0.5, 2, 2);
        let prof = FnProfile { jet: |t: f64| [t, 1.0, 0.0], domain: (-100.0, 100.0), grid_points: 10 };
        let nl = Nonlinearity::PurePower { lambda: 1.0, p: 3.0 };
        let r = pde_compose_and_residual(&spec, &prof, &nl, &[0.3, 0.1, -0.4, 0.9, 0.2], 1e-3).unwrap();
        assert!(r.reduction_residual < 1e-7, "{}", r.reduction_residual);
    }

    #[test]
    fn constant_profile_whole_space() {
        let spec = fq(4, 1, 1.0, 1, 1);
        let prof = ConstProfile(1.0);
        assert_eq!(solution_level_descriptors(&spec, &prof, 1.0).unwrap()[0].1, LevelSetDescriptor::Whole);
        assert!(solution_level_descriptors(&spec, &prof, 2.0).unwrap().is_empty());
    }

    struct ConstProfile(f64);

    impl Profile for ConstProfile {
        fn value(&self, _: f64) -> Option<f64> {
            Some(self.0)
        }
        fn jet(&self, _: f64) -> Option<[f64; 3]> {
            Some([self.0, 0.0, 0.0])
        }
        fn domain(&self) -> (f64, f64) {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
        fn blow_up_levels(&self) -> Vec<f64> {
            vec![]
        }
        fn grid(&self) -> Vec<f64> {
            vec![-1.0, 0.0, 1.0]
        }
        fn constant_value(&self) -> Option<f64> {
            Some(self.0)
        }
    }
}
