//! Dormand-Prince 5(4) with PI step control, continuous extension, event
//! location and blow-up/step-collapse verdicts.

use super::blowup::estimate_from_nodes;
use super::trajectory::{
    CollapseReason, Event, EventKind, Node, Rhs, Segment, Sign, StepStats, Termination, Trajectory,
};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Tolerances and verdict thresholds for one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// `|w|` level that, together with a collapsed step, declares blow-up.
    pub blowup_cap: f64,
    /// Step floor as a fraction of the integration span.
    pub collapse_ratio: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, blowup_cap: 1e8, collapse_ratio: 1e-13, max_steps: 5_000_000 }
    }
}

fn add(y: [f64; 2], h: f64, terms: &[(f64, [f64; 2])]) -> [f64; 2] {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Monotone energy: `½w'² + F(w)` for the minus sign, `½w'² − F(w)` for plus.
pub fn monotone_energy(rhs: &Rhs, w: f64, wp: f64) -> f64 {
    let f = rhs.nl.primitive(w);
    match rhs.sign {
        Sign::Minus => 0.5 * wp * wp + f,
        Sign::Plus => 0.5 * wp * wp - f,
    }
}

/// Hybrid bisection/secant root of `g` on `[a, b]` with `g(a)·g(b) < 0`.
pub fn refine_root<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut ga = g(a);
    let mut gb = g(b);
    if ga == 0.0 {
        return a;
    }
    if gb == 0.0 {
        return b;
    }
    for it in 0..60 {
        if (b - a).abs() <= tol {
            break;
        }
        // Alternate secant and bisection so a stalled secant cannot stall the bracket.
        let mut x = if it % 2 == 0 { b - gb * (b - a) / (gb - ga) } else { 0.5 * (a + b) };
        if !(x > a.min(b) && x < a.max(b)) {
            x = 0.5 * (a + b);
        }
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if (gx > 0.0) == (ga > 0.0) {
            a = x;
            ga = gx;
        } else {
            b = x;
            gb = gx;
        }
    }
    if ga.abs() < gb.abs() {
        a
    } else {
        b
    }
}

/// Integrates from the state `(r0, y0)` to `r_end`.
///
/// `prefix` holds nodes and segments already produced by the starter.
pub(crate) fn run(
    rhs: Rhs,
    r0: f64,
    y0: [f64; 2],
    r_end: f64,
    h_init: f64,
    settings: &IntegratorSettings,
    prefix_nodes: Vec<Node>,
    prefix_segments: Vec<Segment>,
    mut stats: StepStats,
) -> Trajectory {
    let span = (r_end - r0).max(f64::MIN_POSITIVE);
    let floor = settings.collapse_ratio * span;
    let mut nodes = prefix_nodes;
    let mut segments = prefix_segments;
    let mut events = Vec::new();
    let mut r = r0;
    let mut y = y0;
    let mut h = h_init.min(span);
    let mut k1 = rhs.eval(r, y);
    stats.rhs_evals += 1;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let safe = 0.9;
    let mut energy_drift: f64 = 0.0;
    let mut energy = monotone_energy(&rhs, y[0], y[1]);
    stats.min_step = f64::INFINITY;
    let stationary = y[1] == 0.0 && rhs.nl.f(y[0]) == 0.0;

    let termination = loop {
        if r >= r_end {
            break Termination::ReachedEnd;
        }
        if stationary {
            // Exact stationary solution: a single node at the horizon.
            nodes.push(Node { r: r_end, w: y[0], wp: 0.0 });
            segments.push(Segment::Rk { r0: r, h: r_end - r, rcont: [y, [0.0; 2], [0.0; 2], [0.0; 2], [0.0; 2]] });
            stats.accepted += 1;
            break Termination::ReachedEnd;
        }
        if stats.accepted + stats.rejected >= settings.max_steps {
            break Termination::StepCollapse { r_stop: r, reason: CollapseReason::StepLimit };
        }
        let mut last = false;
        if r + h >= r_end || r + 1.01 * h >= r_end {
            h = r_end - r;
            last = true;
        }
        let k2 = rhs.eval(r + C2 * h, add(y, h, &[(A21, k1)]));
        let k3 = rhs.eval(r + C3 * h, add(y, h, &[(A31, k1), (A32, k2)]));
        let k4 = rhs.eval(r + C4 * h, add(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = rhs.eval(r + C5 * h, add(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
        let k6 = rhs.eval(r + h, add(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
        let y1 = add(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        let r1 = if last { r_end } else { r + h };
        let k7 = rhs.eval(r1, y1);
        stats.rhs_evals += 6;
        let mut err = 0.0;
        let mut err_w = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = settings.atol + settings.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sk) * (e / sk);
            if i == 0 {
                err_w = e.abs();
            }
        }
        let err = (0.5 * err).sqrt();

        if !err.is_finite() || !y1[0].is_finite() || !y1[1].is_finite() {
            if y[0].abs() >= settings.blowup_cap {
                break blowup_verdict(&nodes);
            }
            h *= 0.1;
            stats.rejected += 1;
            if h < floor {
                break Termination::StepCollapse { r_stop: r, reason: CollapseReason::NonFinite };
            }
            continue;
        }

        let fac11 = err.powf(expo1);
        let fac = (fac11 / facold.powf(beta) / safe).clamp(0.2, 10.0);
        let mut h_new = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            stats.accepted += 1;
            stats.min_step = stats.min_step.min(h);
            stats.max_step = stats.max_step.max(h);
            stats.error_estimate += err_w;
            let ydiff = [y1[0] - y[0], y1[1] - y[1]];
            let bspl = [h * k1[0] - ydiff[0], h * k1[1] - ydiff[1]];
            let mut rcont = [y, ydiff, bspl, [0.0; 2], [0.0; 2]];
            for i in 0..2 {
                rcont[3][i] = ydiff[i] - h * k7[i] - bspl[i];
                rcont[4][i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let seg = Segment::Rk { r0: r, h, rcont };
            locate_events(&seg, r, r1, y, y1, &mut events);
            segments.push(seg);
            nodes.push(Node { r: r1, w: y1[0], wp: y1[1] });
            let e1 = monotone_energy(&rhs, y1[0], y1[1]);
            energy_drift = energy_drift.max((e1 - energy) / (r1 - r));
            energy = e1;
            r = r1;
            y = y1;
            k1 = k7;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            if y[0].abs() >= settings.blowup_cap && h < floor {
                break blowup_verdict(&nodes);
            }
        } else {
            h_new = h / (fac11 / safe).min(5.0);
            stats.rejected += 1;
            last_rejected = true;
        }
        if r < r_end && (h_new < floor || r + h_new == r) {
            if y[0].abs() >= settings.blowup_cap {
                break blowup_verdict(&nodes);
            }
            break Termination::StepCollapse { r_stop: r, reason: CollapseReason::StepBelowFloor };
        }
        h = h_new;
    };
    if stats.min_step == f64::INFINITY {
        stats.min_step = 0.0;
    }
    Trajectory { nodes, events, termination, stats, energy_drift, rhs, segments }
}

fn blowup_verdict(nodes: &[Node]) -> Termination {
    let est = estimate_from_nodes(nodes);
    Termination::BlowUp {
        r_est: est.r_est,
        fit_exponent: est.fit_exponent,
        tail_nodes: est.tail_nodes,
        low_confidence: est.low_confidence,
    }
}

fn locate_events(seg: &Segment, r0: f64, r1: f64, y0: [f64; 2], y1: [f64; 2], events: &mut Vec<Event>) {
    let tol = 1e-12;
    let mut found = Vec::new();
    for (idx, kind) in [(0usize, EventKind::Zero), (1usize, EventKind::CriticalPoint)] {
        let (a, b) = (y0[idx], y1[idx]);
        if a != 0.0 && b != 0.0 && (a > 0.0) != (b > 0.0) {
            let r = refine_root(|x| seg_eval(seg, x)[idx], r0, r1, tol);
            let s = seg_eval(seg, r);
            found.push(Event { kind, r, w: s[0], wp: s[1] });
        }
    }
    found.sort_by(|x, y| x.r.total_cmp(&y.r));
    events.extend(found);
}

fn seg_eval(seg: &Segment, r: f64) -> [f64; 2] {
    match seg {
        Segment::Rk { r0, h, rcont } => {
            let th = (r - r0) / h;
            let th1 = 1.0 - th;
            let mut y = [0.0; 2];
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = rcont[0][i] + th * (rcont[1][i] + th1 * (rcont[2][i] + th * (rcont[3][i] + th1 * rcont[4][i])));
            }
            y
        }
        Segment::Start { .. } => unreachable!("events are not searched on the starter segment"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_root_hits_tolerance() {
        let r = refine_root(|x: f64| x.cos(), 1.0, 2.0, 1e-13);
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let r = refine_root(|x: f64| (x - 0.3).powi(3), 0.0, 1.0, 1e-13);
        assert!((r - 0.3).abs() < 1e-9);
    }
}
