//! Blow-up abscissa and rate from the tail of a diverging trajectory.
//!
//! Fits `|w| ≈ K (R − r)^{−κ}` by least squares of `ln|w|` against
//! `ln(R − r)` over the last decade of growth, with `R` chosen by a
//! golden-section search on the fit residual.

use super::trajectory::{Node, Termination, Trajectory};
use super::IvpError;
use crate::coefficients::Nonlinearity;
use serde::{Deserialize, Serialize};

/// Minimum number of tail nodes for a confident fit.
pub const MIN_TAIL_NODES: usize = 20;

/// Result of the tail fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupEstimate {
    pub r_est: f64,
    pub fit_exponent: f64,
    pub tail_nodes: usize,
    pub low_confidence: bool,
    /// Rate `2/(p − 1)` from dominant balance, when the nonlinearity provides `p`.
    pub predicted_exponent: Option<f64>,
}

/// Slope and residual sum of squares of `y = c + s·x`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let s = sxy / sxx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - my - s * (x - mx)).powi(2)).sum();
    (s, rss)
}

pub(crate) fn estimate_from_nodes(nodes: &[Node]) -> BlowupEstimate {
    let last = nodes[nodes.len() - 1];
    let top = last.w.abs();
    let tail: Vec<Node> = nodes
        .iter()
        .copied()
        .filter(|n| n.r > 0.0 && n.w.abs() >= top / 10.0 && n.w.abs() > 0.0)
        .collect();
    let r_last = last.r;
    if tail.len() < 3 {
        return BlowupEstimate {
            r_est: r_last,
            fit_exponent: f64::NAN,
            tail_nodes: tail.len(),
            low_confidence: true,
            predicted_exponent: None,
        };
    }
    let width = (r_last - tail[0].r).max(f64::EPSILON * r_last.abs().max(1.0));
    let ys: Vec<f64> = tail.iter().map(|n| n.w.abs().ln()).collect();
    let rss = |gap: f64| {
        let xs: Vec<f64> = tail.iter().map(|n| (r_last + gap - n.r).ln()).collect();
        linear_fit(&xs, &ys)
    };
    // Golden-section over ln(gap), gap = R − r_last.
    let mut lo = (width * 1e-6).ln();
    let mut hi = (width * 1e3).ln();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = rss(x1.exp()).1;
    let mut f2 = rss(x2.exp()).1;
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-10 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = rss(x1.exp()).1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = rss(x2.exp()).1;
        }
    }
    let gap = (0.5 * (lo + hi)).exp();
    let (slope, _) = rss(gap);
    BlowupEstimate {
        r_est: r_last + gap,
        fit_exponent: -slope,
        tail_nodes: tail.len(),
        low_confidence: tail.len() < MIN_TAIL_NODES,
        predicted_exponent: None,
    }
}

/// Tail fit for a trajectory that terminated with blow-up.
pub fn estimate_blowup(traj: &Trajectory, nl: &Nonlinearity) -> Result<BlowupEstimate, IvpError> {
    if !matches!(traj.termination, Termination::BlowUp { .. }) {
        return Err(IvpError::NotBlowUp);
    }
    let mut est = estimate_from_nodes(&traj.nodes);
    est.predicted_exponent = Some(2.0 / (nl.p() - 1.0));
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_synthetic_power_law() {
        let (r_true, kappa) = (1.7, 0.5);
        let nodes: Vec<Node> = (0..400)
            .map(|i| {
                let gap = 1e-2 * 0.97f64.powi(i);
                let r = r_true - gap;
                Node { r, w: 3.0 * gap.powf(-kappa), wp: 0.0 }
            })
            .collect();
        let est = estimate_from_nodes(&nodes);
        assert!((est.r_est - r_true).abs() < 1e-9, "{}", est.r_est);
        assert!((est.fit_exponent - kappa).abs() < 1e-6);
        assert!(!est.low_confidence);
    }
}
