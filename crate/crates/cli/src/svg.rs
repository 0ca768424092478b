//! Single-file SVG line plots with fixed formatting.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// A plot of one or more polylines.
#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Vec<(f64, f64)>>,
    /// Dashed vertical markers with labels.
    pub markers: Vec<(f64, String)>,
    /// Values outside this band are clipped, which keeps blow-up tails readable.
    pub y_clip: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn label(x: f64) -> String {
    if x != 0.0 && (x.abs() >= 1e4 || x.abs() < 1e-3) {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = lo.abs().max(1.0) * 0.5;
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

impl Plot {
    fn clipped(&self, y: f64) -> bool {
        self.y_clip.is_some_and(|(lo, hi)| y < lo || y > hi)
    }

    pub fn render(&self) -> String {
        let pts = || self.series.iter().flatten().filter(|(_, y)| !self.clipped(*y));
        let (x0, x1) = bounds(pts().map(|p| p.0).chain(self.markers.iter().map(|m| m.0))).unwrap_or((0.0, 1.0));
        let (y0, y1) = bounds(pts().map(|p| p.1)).unwrap_or((0.0, 1.0));
        let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = WIDTH,
            h = HEIGHT
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, num(WIDTH / 2.0), escape(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            num(MARGIN_LEFT),
            num(MARGIN_TOP),
            num(pw),
            num(ph)
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                num(sx(fx)),
                num(HEIGHT - MARGIN_BOTTOM + 16.0),
                label(fx)
            );
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, num(MARGIN_LEFT - 6.0), num(sy(fy) + 4.0), label(fy));
        }
        if y0 < 0.0 && y1 > 0.0 {
            let _ = writeln!(
                s,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#999" stroke-width="0.5"/>"##,
                num(MARGIN_LEFT),
                num(MARGIN_LEFT + pw),
                y = num(sy(0.0))
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(MARGIN_LEFT + pw / 2.0),
            num(HEIGHT - 12.0),
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
            escape(&self.y_label),
            y = num(MARGIN_TOP + ph / 2.0)
        );
        for (x, text) in &self.markers {
            let _ = writeln!(
                s,
                r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#555" stroke-dasharray="5,4"/>"##,
                num(MARGIN_TOP),
                num(MARGIN_TOP + ph),
                x = num(sx(*x))
            );
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(sx(*x)), num(MARGIN_TOP - 4.0), escape(text));
        }
        for (i, series) in self.series.iter().enumerate() {
            // Break the polyline wherever a point is clipped or not finite.
            let mut runs: Vec<Vec<(f64, f64)>> = vec![vec![]];
            for &(x, y) in series {
                if x.is_finite() && y.is_finite() && !self.clipped(y) {
                    runs.last_mut().expect("nonempty").push((x, y));
                } else if !runs.last().expect("nonempty").is_empty() {
                    runs.push(vec![]);
                }
            }
            for run in runs.iter().filter(|r| r.len() > 1) {
                let path: Vec<String> = run.iter().map(|&(x, y)| format!("{},{}", num(sx(x)), num(sy(y)))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                    COLORS[i % COLORS.len()],
                    path.join(" ")
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polyline_and_markers() {
        let plot = Plot {
            title: "v & t".into(),
            x_label: "t".into(),
            y_label: "v".into(),
            series: vec![vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1e9), (3.0, 0.5), (4.0, 0.25)]],
            markers: vec![(2.0, "R+".into())],
            y_clip: Some((-10.0, 10.0)),
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("v &amp; t"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
        assert_eq!(svg, plot.render());
    }
}
