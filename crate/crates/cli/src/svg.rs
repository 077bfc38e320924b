use std::fmt::Write;

use kerr_modes::presets::Series;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Horizontal dashed guides, e.g. shot noise at 0 and the floor at −1.
    pub reference_lines: Vec<(f64, String)>,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 420.0,
            title: String::new(),
            x_label: "x".into(),
            y_label: "y".into(),
            reference_lines: Vec::new(),
        }
    }
}

impl PlotStyle {
    pub fn spectrum(title: &str) -> Self {
        Self {
            title: title.into(),
            x_label: "omega".into(),
            y_label: "noise".into(),
            reference_lines: vec![(0.0, "shot noise".into()), (-1.0, "perfect squeezing".into())],
            ..Self::default()
        }
    }

    pub fn bistability(title: &str) -> Self {
        Self {
            title: title.into(),
            x_label: "phi".into(),
            y_label: "intensity".into(),
            ..Self::default()
        }
    }
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(series: &[Series], style: &PlotStyle) -> (f64, f64, f64, f64) {
    let finite = |v: &f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.x.iter().copied()).filter(finite);
    let ys = series
        .iter()
        .flat_map(|s| s.y.iter().copied())
        .chain(style.reference_lines.iter().map(|r| r.0))
        .filter(finite);
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 < 1e-12 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let pad = 0.05 * (y1 - y0);
    (x0, x1, y0 - pad, y1 + pad)
}

/// Self-contained SVG line plot. Output depends only on the inputs.
pub fn export_svg(series: &[Series], style: &PlotStyle) -> String {
    let (w, h) = (style.width, style.height);
    let (left, right, top, bottom) = (64.0, 170.0, 36.0, 48.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let (x0, x1, y0, y1) = bounds(series, style);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(out, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(&style.title));
    }
    let _ = writeln!(out, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

    let xs = nice_step(x1 - x0);
    let mut t = (x0 / xs).ceil() * xs;
    while t <= x1 + 1e-9 * xs {
        let px = sx(t);
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, top + ph, top + ph + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, top + ph + 18.0, tick_label(t, xs));
        t += xs;
    }
    let ys = nice_step(y1 - y0);
    let mut t = (y0 / ys).ceil() * ys;
    while t <= y1 + 1e-9 * ys {
        let py = sy(t);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, left - 8.0, py + 4.0, tick_label(t, ys));
        t += ys;
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 10.0, escape(&style.x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&style.y_label)
    );

    for (value, label) in &style.reference_lines {
        let py = sy(*value);
        let _ = writeln!(
            out,
            r##"<line x1="{left}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#888888" stroke-dasharray="2 3"><title>{}</title></line>"##,
            left + pw,
            escape(label)
        );
    }

    let _ = writeln!(out, r#"<clipPath id="plot"><rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath>"#);
    for (i, s) in series.iter().enumerate() {
        let color = if s.dashed { "black" } else { COLORS[i % COLORS.len()] };
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let points: Vec<String> = s
            .x
            .iter()
            .zip(&s.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline clip-path="url(#plot)" fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#, lx + 24.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

fn tick_label(v: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.digits$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Series> {
        vec![
            Series { label: "a".into(), x: vec![0.0, 1.0, 2.0], y: vec![-0.5, -0.8, -0.2], dashed: false },
            Series { label: "b<1>".into(), x: vec![0.0, 2.0], y: vec![0.1, 0.2], dashed: true },
        ]
    }

    #[test]
    fn default_style_renders() {
        let svg = export_svg(&sample(), &PlotStyle::default());
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;1&gt;"));
    }

    #[test]
    fn output_is_deterministic() {
        let style = PlotStyle::spectrum("t");
        assert_eq!(export_svg(&sample(), &style), export_svg(&sample(), &style));
        assert!(export_svg(&sample(), &style).contains("shot noise"));
    }

    #[test]
    fn degenerate_ranges_are_padded() {
        let flat = vec![Series { label: "c".into(), x: vec![1.0], y: vec![1.0], dashed: false }];
        assert!(!export_svg(&flat, &PlotStyle::default()).contains("NaN"));
    }
}
