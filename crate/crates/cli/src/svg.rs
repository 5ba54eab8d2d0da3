//! Minimal self-contained SVG line plots.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 40.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    /// Half-width of a shaded band around the series, one per point.
    pub band: Option<Vec<f64>>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, color: &'static str) -> Self {
        Self {
            label: label.into(),
            points,
            color,
            band: None,
        }
    }

    pub fn with_band(mut self, band: Vec<f64>) -> Self {
        self.band = Some(band);
        self
    }

    fn finite(&self) -> Vec<(usize, (f64, f64))> {
        self.points
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, (x, y))| x.is_finite() && y.is_finite())
            .collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Renders the series with dashed vertical markers at `kinks`.
pub fn render(title: &str, series: &[Series], kinks: &[f64]) -> Result<String, String> {
    if series.is_empty() {
        return Err("nothing to plot".into());
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        let pts = s.finite();
        if pts.len() < 2 {
            return Err(format!("series {:?} needs at least 2 finite points", s.label));
        }
        if let Some(b) = &s.band {
            if b.len() != s.points.len() {
                return Err(format!("band of series {:?} has the wrong length", s.label));
            }
        }
        for (i, (x, y)) in pts {
            let half = s.band.as_ref().map_or(0.0, |b| b[i].abs());
            xs.push(x);
            ys.push(y - half);
            ys.push(y + half);
        }
    }
    let fold = |v: &[f64], init: f64, f: fn(f64, f64) -> f64| v.iter().copied().fold(init, f);
    let (mut x0, mut x1) = (
        fold(&xs, f64::INFINITY, f64::min),
        fold(&xs, f64::NEG_INFINITY, f64::max),
    );
    let (mut y0, mut y1) = (
        fold(&ys, f64::INFINITY, f64::min),
        fold(&ys, f64::NEG_INFINITY, f64::max),
    );
    if x1 - x0 <= 0.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 <= 1e-12 {
        y0 -= 1.0;
        y1 += 1.0;
    } else {
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    let fr = Frame { x0, x1, y0, y1 };

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.3}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (bx, by) = (fr.px(x0), fr.py(y0));
    let _ = writeln!(
        w,
        r#"<line class="axis" x1="{bx:.3}" y1="{by:.3}" x2="{:.3}" y2="{by:.3}" stroke="black"/>"#,
        fr.px(x1)
    );
    let _ = writeln!(
        w,
        r#"<line class="axis" x1="{bx:.3}" y1="{by:.3}" x2="{bx:.3}" y2="{:.3}" stroke="black"/>"#,
        fr.py(y1)
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            w,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{x:.3}</text>"#,
            fr.px(x),
            by + 16.0
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            w,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="end" font-family="sans-serif" font-size="11">{y:.3}</text>"#,
            bx - 4.0,
            fr.py(y) + 4.0
        );
    }

    for s in series {
        let pts = s.finite();
        if let Some(b) = &s.band {
            let upper = pts.iter().map(|&(i, (x, y))| (x, y + b[i].abs()));
            let lower = pts.iter().rev().map(|&(i, (x, y))| (x, y - b[i].abs()));
            let poly: Vec<String> = upper
                .chain(lower)
                .map(|(x, y)| format!("{:.3},{:.3}", fr.px(x), fr.py(y)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polygon class="band" points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
                poly.join(" "),
                s.color
            );
        }
        let line: Vec<String> = pts
            .iter()
            .map(|&(_, (x, y))| format!("{:.3},{:.3}", fr.px(x), fr.py(y)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline class="series" points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            line.join(" "),
            s.color
        );
    }
    for (i, s) in series.iter().enumerate() {
        let _ = writeln!(
            w,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            LEFT + 8.0,
            TOP + 14.0 * (i as f64 + 1.0),
            s.color,
            escape(&s.label)
        );
    }
    for &k in kinks {
        let x = fr.px(k);
        let _ = writeln!(
            w,
            r#"<line class="kink" x1="{x:.3}" y1="{TOP:.3}" x2="{x:.3}" y2="{by:.3}" stroke="red" stroke-dasharray="4 3"/>"#
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_one_polyline() {
        let s = render("t", &[Series::new("a", vec![(0.0, 0.0), (1.0, 1.0)], "blue")], &[]).unwrap();
        assert_eq!(s.matches("<polyline").count(), 1);
        assert_eq!(s.matches(r#"class="kink""#).count(), 0);
    }

    #[test]
    fn one_marker_per_kink() {
        let pts: Vec<(f64, f64)> = (0..=10)
            .map(|i| (i as f64 / 10.0, (i as f64 / 10.0 - 0.5).abs()))
            .collect();
        let s = render("t", &[Series::new("a", pts, "blue")], &[0.5]).unwrap();
        assert_eq!(s.matches(r#"class="kink""#).count(), 1);
        // x = 0.5 maps to the middle of the plot area
        let mid = LEFT + 0.5 * (WIDTH - LEFT - RIGHT);
        assert!(s.contains(&format!(r#"x1="{mid:.3}""#)));
    }

    #[test]
    fn single_point_rejected() {
        assert!(render("t", &[Series::new("a", vec![(0.0, 0.0)], "blue")], &[]).is_err());
    }

    #[test]
    fn title_is_escaped() {
        let s = render(
            "a<b & c",
            &[Series::new("x", vec![(0.0, 0.0), (1.0, 1.0)], "blue")],
            &[],
        )
        .unwrap();
        assert!(s.contains("a&lt;b &amp; c"));
    }
}
