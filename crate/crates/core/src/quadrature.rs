//! Small quadrature toolkit used by the hypothesis probes and the Picard starter.
//!
//! Gauss-Legendre handles smooth integrands, tanh-sinh handles algebraic endpoint
//! singularities such as `u^Γ` with non-integer `Γ`, and adaptive Simpson serves
//! the tail integrals where the integrand varies over many decades.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `g` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut g: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * g(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tanh-sinh rule on `[0, 1]` with nodes kept away from the endpoints.
///
/// Abscissae are stored as distances from both ends so integrands with
/// endpoint singularities never see an argument rounded onto the endpoint.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    /// `(x, 1 - x, weight)` triples.
    points: Vec<(f64, f64, f64)>,
}

impl TanhSinh {
    /// Builds a rule with step `step` in the transformed variable, truncated at `|k·step| ≤ t_max`.
    pub fn new(step: f64, t_max: f64) -> Self {
        let mut points = Vec::new();
        let kmax = (t_max / step).ceil() as i64;
        for k in -kmax..=kmax {
            let t = k as f64 * step;
            let s = 0.5 * PI * t.sinh();
            let c = 0.5 * PI * t.cosh();
            // x = (1 + tanh s)/2, written through exp to keep the small side exact.
            let e = (-2.0 * s.abs()).exp();
            let small = e / (1.0 + e);
            let (x, xc) = if s >= 0.0 { (1.0 - small, small) } else { (small, 1.0 - small) };
            let sech2 = 1.0 / (s.cosh() * s.cosh());
            let w = 0.5 * step * c * sech2;
            if w > 0.0 && xc > 0.0 && x > 0.0 {
                points.push((x, xc, w));
            }
        }
        Self { points }
    }

    /// Default rule: accurate to roughly 1e-13 for `u^Γ`-type endpoint behavior.
    pub fn standard() -> Self {
        Self::new(1.0 / 8.0, 3.2)
    }

    /// Integrates `g(x)` over `[0, 1]`; `g` also receives `1 - x`.
    pub fn integrate_unit<F: FnMut(f64, f64) -> f64>(&self, mut g: F) -> f64 {
        self.points.iter().map(|&(x, xc, w)| w * g(x, xc)).sum()
    }

    /// Number of nodes in the rule.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True when the rule has no nodes.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = g(a);
    let fb = g(b);
    let m = 0.5 * (a + b);
    let fm = g(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(g, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    g: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = g(lm);
    let frm = g(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        // Degree 15 is the exactness limit for 8 nodes.
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
    }

    #[test]
    fn tanh_sinh_handles_algebraic_endpoint() {
        let ts = TanhSinh::standard();
        for gamma in [0.0, 0.5, 1.5, 2.5] {
            let v = ts.integrate_unit(|x, _| x.powf(gamma));
            assert!((v - 1.0 / (gamma + 1.0)).abs() < 1e-12, "gamma {gamma}: {v}");
        }
        // Singular integrands lose the mass below the last abscissa.
        let v = ts.integrate_unit(|x, _| x.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn simpson_matches_closed_form() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 3.0, 1e-12, 40);
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-10);
    }
}
