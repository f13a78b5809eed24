//! Self-contained SVG line charts of experiment results.
//!
//! Output is a pure function of the rows and options; numbers are printed
//! with six significant digits so golden files stay stable.

use std::collections::BTreeMap;
use std::fmt::Write;

use hdfl::harness::ResultRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 240.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    LogX,
    LogLog,
}

#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub scale: Scale,
    pub title: String,
    pub y_label: String,
}

#[derive(Debug, PartialEq)]
pub enum PlotError {
    Empty,
    UnknownMetric(String),
    NothingToDraw,
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlotError::Empty => f.write_str("result file has no rows"),
            PlotError::UnknownMetric(m) => write!(f, "unknown metric `{m}`"),
            PlotError::NothingToDraw => f.write_str("no finite points to draw on this scale"),
        }
    }
}

/// Six significant digits, trailing zeros removed, never exponent notation.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Point {
    x: f64,
    y: f64,
    lo: f64,
    hi: f64,
}

fn transform(row: &ResultRow, scale: Scale) -> Option<Point> {
    let n = row.n as f64;
    let (x, y, lo, hi) = match scale {
        Scale::Linear => (n, row.value, row.ci_lo, row.ci_hi),
        Scale::LogX => (n.log10(), row.value, row.ci_lo, row.ci_hi),
        Scale::LogLog => (
            n.log10(),
            row.value.log10(),
            row.ci_lo.log10(),
            row.ci_hi.log10(),
        ),
    };
    if row.n == 0 || !x.is_finite() || !y.is_finite() {
        return None;
    }
    let (lo, hi) = if lo.is_finite() && hi.is_finite() {
        (lo, hi)
    } else {
        (y, y)
    };
    Some(Point { x, y, lo, hi })
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// One polyline per metric with a shaded confidence band. `metrics` empty
/// means every metric in the file.
pub fn render_svg(
    rows: &[ResultRow],
    metrics: &[String],
    opts: &PlotOptions,
) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let mut series: BTreeMap<&str, Vec<Point>> = BTreeMap::new();
    for m in metrics {
        if !rows.iter().any(|r| &r.metric == m) {
            return Err(PlotError::UnknownMetric(m.clone()));
        }
    }
    for r in rows {
        if !metrics.is_empty() && !metrics.contains(&r.metric) {
            continue;
        }
        if let Some(p) = transform(r, opts.scale) {
            series.entry(r.metric.as_str()).or_default().push(p);
        }
    }
    series.retain(|_, pts| !pts.is_empty());
    if series.is_empty() {
        return Err(PlotError::NothingToDraw);
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    }
    let all = || series.values().flatten();
    let (x0, x1) = range(all().map(|p| p.x));
    let (y0, y1) = range(all().flat_map(|p| [p.lo, p.hi, p.y]));
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let (x_label, y_label) = match opts.scale {
        Scale::Linear => ("N".to_string(), opts.y_label.clone()),
        Scale::LogX => ("log10 N".to_string(), opts.y_label.clone()),
        Scale::LogLog => ("log10 N".to_string(), format!("log10 {}", opts.y_label)),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        sig6(WIDTH),
        sig6(HEIGHT),
        sig6(WIDTH),
        sig6(HEIGHT)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        sig6(LEFT + plot_w / 2.0),
        escape(&opts.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        sig6(LEFT),
        sig6(TOP),
        sig6(plot_w),
        sig6(plot_h)
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
            sig6(px),
            sig6(TOP + plot_h),
            sig6(TOP + plot_h + 5.0),
            sig6(TOP + plot_h + 18.0),
            sig6(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"#,
            sig6(LEFT - 5.0),
            sig6(py),
            sig6(LEFT),
            sig6(LEFT - 8.0),
            sig6(py + 4.0),
            sig6(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        sig6(LEFT + plot_w / 2.0),
        sig6(HEIGHT - 12.0),
        escape(&x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        sig6(TOP + plot_h / 2.0),
        escape(&y_label)
    );

    for (i, (metric, pts)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        if pts.iter().any(|p| p.lo != p.hi) {
            let upper = pts
                .iter()
                .map(|p| format!("{},{}", sig6(sx(p.x)), sig6(sy(p.hi))));
            let lower = pts
                .iter()
                .rev()
                .map(|p| format!("{},{}", sig6(sx(p.x)), sig6(sy(p.lo))));
            let band: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#,
                band.join(" ")
            );
        }
        let line: Vec<String> = pts
            .iter()
            .map(|p| format!("{},{}", sig6(sx(p.x)), sig6(sy(p.y))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for p in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="3" fill="{colour}"/>"#,
                sig6(sx(p.x)),
                sig6(sy(p.y))
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{colour}" stroke-width="2"/><text x="{3}" y="{4}">{5}</text>"#,
            sig6(lx),
            sig6(ly),
            sig6(lx + 18.0),
            sig6(lx + 24.0),
            sig6(ly + 4.0),
            escape(metric)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
