//! Minimal SVG plotter: axes, polylines, markers and text.

use std::fmt::Write;

use crate::format::fmt6;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone)]
pub enum Mark {
    Points {
        xy: Vec<[f64; 2]>,
        color: &'static str,
    },
    Line {
        xy: Vec<[f64; 2]>,
        color: &'static str,
        label: String,
    },
}

/// A single panel with equal-aspect data bounds.
#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub marks: Vec<Mark>,
}

fn coords(m: &Mark) -> &[[f64; 2]] {
    match m {
        Mark::Points { xy, .. } | Mark::Line { xy, .. } => xy,
    }
}

impl Plot {
    pub fn render(&self) -> String {
        let finite = |p: &&[f64; 2]| p[0].is_finite() && p[1].is_finite();
        let extent = self
            .marks
            .iter()
            .flat_map(|m| coords(m).iter())
            .filter(finite)
            .fold(0.0_f64, |e, p| e.max(p[0].abs()).max(p[1].abs()));
        let extent = if extent > 0.0 { extent * 1.05 } else { 1.0 };
        let scale = ((WIDTH - 2.0 * MARGIN) / 2.0).min((HEIGHT - 2.0 * MARGIN) / 2.0) / extent;
        let (cx, cy) = (WIDTH / 2.0, HEIGHT / 2.0);
        let px = |p: &[f64; 2]| (cx + p[0] * scale, cy - p[1] * scale);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r##"<g stroke="#999" stroke-width="1"><line x1="{}" y1="{cy}" x2="{}" y2="{cy}"/><line x1="{cx}" y1="{}" x2="{cx}" y2="{}"/></g>"##,
            MARGIN,
            WIDTH - MARGIN,
            MARGIN,
            HEIGHT - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            cy - 6.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            cx + 6.0,
            MARGIN - 6.0,
            escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="end" fill="#666">{}</text>"##,
            WIDTH - MARGIN,
            cy + 16.0,
            fmt6(extent)
        );
        let mut legend_y = MARGIN;
        for m in &self.marks {
            match m {
                Mark::Points { xy, color } => {
                    let _ = writeln!(s, r#"<g fill="{color}" fill-opacity="0.35">"#);
                    for p in xy.iter().filter(finite) {
                        let (x, y) = px(p);
                        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="1.5"/>"#, fmt6(x), fmt6(y));
                    }
                    let _ = writeln!(s, "</g>");
                }
                Mark::Line { xy, color, label } => {
                    let pts: Vec<String> = xy
                        .iter()
                        .filter(finite)
                        .map(|p| {
                            let (x, y) = px(p);
                            format!("{},{}", fmt6(x), fmt6(y))
                        })
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                        pts.join(" ")
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{legend_y}" fill="{color}">{}</text>"#,
                        MARGIN,
                        escape(label)
                    );
                    legend_y += 16.0;
                }
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
