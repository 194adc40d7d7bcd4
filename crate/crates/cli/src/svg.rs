//! Minimal SVG plots: scatter, polylines and heatmaps on linear axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

enum Layer {
    Points {
        xy: Vec<(f64, f64)>,
        color: String,
        radius: f64,
    },
    Line {
        xy: Vec<(f64, f64)>,
        color: String,
    },
    Cells {
        xs: Vec<f64>,
        ys: Vec<f64>,
        colors: Vec<String>,
    },
}

pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    layers: Vec<Layer>,
    legend: Vec<(String, String)>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            layers: Vec::new(),
            legend: Vec::new(),
        }
    }

    pub fn points(&mut self, xy: Vec<(f64, f64)>, color: &str, radius: f64) -> &mut Self {
        self.layers.push(Layer::Points {
            xy,
            color: color.into(),
            radius,
        });
        self
    }

    pub fn line(&mut self, xy: Vec<(f64, f64)>, color: &str) -> &mut Self {
        self.layers.push(Layer::Line {
            xy,
            color: color.into(),
        });
        self
    }

    /// Cell centres `xs × ys`, colors row-major with x fastest.
    pub fn cells(&mut self, xs: Vec<f64>, ys: Vec<f64>, colors: Vec<String>) -> &mut Self {
        assert_eq!(colors.len(), xs.len() * ys.len());
        self.layers.push(Layer::Cells { xs, ys, colors });
        self
    }

    pub fn legend(&mut self, label: &str, color: &str) -> &mut Self {
        self.legend.push((label.into(), color.into()));
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        let mut take = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
            }
        };
        for layer in &self.layers {
            match layer {
                Layer::Points { xy, .. } | Layer::Line { xy, .. } => {
                    xy.iter().for_each(|&(x, y)| take(x, y))
                }
                Layer::Cells { xs, ys, .. } => {
                    let (hx, hy) = (half_step(xs), half_step(ys));
                    for &x in xs {
                        for &y in ys {
                            take(x - hx, y - hy);
                            take(x + hx, y + hy);
                        }
                    }
                }
            }
        }
        if !b.0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let widen = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                let d = lo.abs().max(1.0) * 0.5;
                (lo - d, hi + d)
            }
        };
        let (x0, x1) = widen(b.0, b.1);
        let (y0, y1) = widen(b.2, b.3);
        (x0, x1, y0, y1)
    }

    pub fn render(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let inner_w = WIDTH - 2.0 * MARGIN;
        let inner_h = HEIGHT - 2.0 * MARGIN;
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * inner_w;
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * inner_h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        for layer in &self.layers {
            match layer {
                Layer::Cells { xs, ys, colors } => {
                    let (hx, hy) = (half_step(xs), half_step(ys));
                    for (j, &y) in ys.iter().enumerate() {
                        for (i, &x) in xs.iter().enumerate() {
                            let (l, r) = (sx(x - hx), sx(x + hx));
                            let (t, b) = (sy(y + hy), sy(y - hy));
                            let _ = writeln!(
                                s,
                                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                                l,
                                t,
                                r - l,
                                b - t,
                                colors[j * xs.len() + i]
                            );
                        }
                    }
                }
                Layer::Line { xy, color } => {
                    let pts: Vec<String> = xy
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    if pts.len() > 1 {
                        let _ = writeln!(
                            s,
                            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                            pts.join(" ")
                        );
                    }
                }
                Layer::Points { xy, color, radius } => {
                    for &(x, y) in xy.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                        let _ = writeln!(
                            s,
                            r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{color}"/>"#,
                            sx(x),
                            sy(y)
                        );
                    }
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{inner_w}" height="{inner_h}" fill="none" stroke="black"/>"#
        );
        let bottom = HEIGHT - MARGIN;
        for (v, anchor, x) in [(x0, "start", MARGIN), (x1, "end", WIDTH - MARGIN)] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" text-anchor="{anchor}">{}</text>"#,
                bottom + 16.0,
                tick(v)
            );
        }
        for (v, y) in [(y0, bottom), (y1, MARGIN + 10.0)] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
                MARGIN - 4.0,
                tick(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(16 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        for (k, (label, color)) in self.legend.iter().enumerate() {
            let y = MARGIN + 16.0 + 16.0 * k as f64;
            let x = WIDTH - MARGIN - 150.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{y}">{}</text>"#,
                y - 9.0,
                x + 14.0,
                escape(label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn half_step(v: &[f64]) -> f64 {
    if v.len() > 1 {
        (v[v.len() - 1] - v[0]).abs() / (v.len() - 1) as f64 / 2.0
    } else {
        0.5
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Maps t ∈ [0, 1] onto a blue-white-red ramp.
pub fn diverging(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (
            lerp(33.0, 247.0, u),
            lerp(102.0, 247.0, u),
            lerp(172.0, 247.0, u),
        )
    } else {
        let u = (t - 0.5) / 0.5;
        (
            lerp(247.0, 178.0, u),
            lerp(247.0, 24.0, u),
            lerp(247.0, 43.0, u),
        )
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (a + (b - a) * t).round()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_every_layer_kind() {
        let mut p = Plot::new("t", "x", "y<1");
        p.points(vec![(0.0, 0.0), (1.0, 2.0)], PALETTE[0], 2.0)
            .line(vec![(0.0, 0.0), (1.0, 1.0)], PALETTE[1])
            .cells(
                vec![0.0, 1.0],
                vec![0.0],
                vec![diverging(0.0), diverging(1.0)],
            )
            .legend("a", PALETTE[0]);
        let svg = p.render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("y&lt;1"));
    }

    #[test]
    fn empty_plot_still_renders() {
        assert!(Plot::new("", "", "").render().contains("</svg>"));
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(diverging(0.0), "#2166ac");
        assert_eq!(diverging(0.5), "#f7f7f7");
        assert_eq!(diverging(1.0), "#b2182b");
    }
}
