//! Minimal SVG line/marker plots with optional log axes.

use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
    pub line: bool,
}

impl Series {
    pub fn markers(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, markers: true, line: false }
    }

    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points, markers: false, line: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub annotation: Option<String>,
}

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    fn tx(&self, v: f64) -> Option<f64> {
        match self.log_x {
            true if v > 0.0 => Some(v.log10()),
            true => None,
            false => Some(v),
        }
    }

    fn ty(&self, v: f64) -> Option<f64> {
        match self.log_y {
            true if v > 0.0 => Some(v.log10()),
            true => None,
            false => Some(v),
        }
    }

    /// Points that survive the axis transform, per series.
    fn transformed(&self) -> Vec<Vec<(f64, f64)>> {
        self.series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .filter_map(|&(x, y)| Some((self.tx(x)?, self.ty(y)?)))
                    .collect()
            })
            .collect()
    }

    pub fn to_svg(&self) -> String {
        let pts = self.transformed();
        let all: Vec<(f64, f64)> = pts.iter().flatten().copied().collect();
        let bounds = |f: fn(&(f64, f64)) -> f64| -> (f64, f64) {
            let lo = all.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = all.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-300 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x0, x1) = bounds(|p| p.0);
        let (y0, y1) = bounds(|p| p.1);
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#).unwrap();
        writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
        writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(&self.title)).unwrap();
        // axes
        writeln!(s, r#"<line class="axis" x1="{LEFT}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, TOP + ph, LEFT + pw, TOP + ph).unwrap();
        writeln!(s, r#"<line class="axis" x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#, TOP + ph).unwrap();
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let fmt = |v: f64, log: bool| if log { format!("{:.2e}", 10f64.powf(v)) } else { format!("{v:.3}") };
            writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, sx(xv), TOP + ph + 18.0, fmt(xv, self.log_x)).unwrap();
            writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, sy(yv) + 4.0, fmt(yv, self.log_y)).unwrap();
        }
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 14.0, esc(&self.x_label)).unwrap();
        writeln!(s, r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0, esc(&self.y_label)).unwrap();

        for (k, (series, p)) in self.series.iter().zip(&pts).enumerate() {
            let color = COLORS[k % COLORS.len()];
            if series.line && p.len() > 1 {
                let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" ")).unwrap();
            }
            if series.markers {
                for &(x, y) in p {
                    writeln!(s, r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#, sx(x), sy(y)).unwrap();
                }
            }
            let ly = TOP + 14.0 + 18.0 * k as f64;
            writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, W - RIGHT + 10.0, esc(&series.label)).unwrap();
        }
        if let Some(a) = &self.annotation {
            writeln!(s, r#"<text class="annotation" x="{}" y="{}">{}</text>"#, LEFT + 10.0, TOP + 16.0, esc(a)).unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Log-log plot of `ys` against `xs` with the fitted power law overlaid.
pub fn convergence_plot(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], fit: Option<(f64, f64)>) -> Plot {
    let data: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    let mut series = vec![Series::markers(y_label, data)];
    let mut annotation = None;
    if let Some((slope, intercept)) = fit {
        let line = xs.iter().map(|&x| (x, (intercept + slope * x.ln()).exp())).collect();
        series.push(Series::line("fit", line));
        annotation = Some(format!("fitted slope {slope:.3}"));
    }
    Plot { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), log_x: true, log_y: true, series, annotation }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_points_four_markers_and_a_fit() {
        let xs = [0.04, 0.02, 0.01, 0.005];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let svg = convergence_plot("t", "eps", "err", &xs, &ys, Some((2.0, 0.0))).to_svg();
        assert_eq!(svg.matches("class=\"marker\"").count(), 4);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("fitted slope 2.000"));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn nonpositive_values_are_dropped_on_log_axes() {
        let p = convergence_plot("t", "x", "y", &[1.0, 2.0], &[0.0, 1.0], None);
        assert_eq!(p.to_svg().matches("class=\"marker\"").count(), 1);
        let empty = Plot::default().to_svg();
        assert!(empty.contains("</svg>"));
    }
}
