//! Line charts with confidence bands, written directly as SVG.

use std::fmt::Write;

pub const WIDTH: f64 = 900.0;
pub const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub x: f64,
    pub y: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub label: String,
    pub points: Vec<ChartPoint>,
    /// Smoothed values aligned with `points`.
    pub smooth: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Data file the chart was drawn from, recorded in the output.
    pub source: String,
    pub series: Vec<ChartSeries>,
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Tick positions at 1, 2 or 5 times a power of ten, at most about `target`.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return vec![lo];
    }
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        if self.x1 == self.x0 {
            MARGIN_LEFT + w / 2.0
        } else {
            MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * w
        }
    }

    fn py(&self, y: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (y - self.y0) / (self.y1 - self.y0) * h
    }
}

fn frame(chart: &Chart) -> Frame {
    let pts = chart.series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        for v in [p.y, p.low, p.high] {
            if v.is_finite() {
                y0 = y0.min(v);
                y1 = y1.max(v);
            }
        }
    }
    for s in &chart.series {
        for v in s.smooth.iter().flatten().filter(|v| v.is_finite()) {
            y0 = y0.min(*v);
            y1 = y1.max(*v);
        }
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = (y1 - y0) * 0.05;
    Frame {
        x0,
        x1,
        y0: y0 - pad,
        y1: y1 + pad,
    }
}

/// Renders the chart on a fixed 900x500 canvas: one translucent band
/// polygon and one polyline per series, plus a smoothed path when present.
pub fn render_svg(chart: &Chart) -> String {
    let f = frame(chart);
    let mut s = String::new();
    let bottom = HEIGHT - MARGIN_BOTTOM;
    let right = WIDTH - MARGIN_RIGHT;
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" data-source="{}" font-family="sans-serif" font-size="12">"#,
        escape(&chart.source)
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(&chart.title)).unwrap();
    writeln!(s, "<desc>source: {}</desc>", escape(&chart.source)).unwrap();
    writeln!(s, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##).unwrap();

    // Axes and ticks.
    writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#).unwrap();
    writeln!(s, r#"<line x1="{MARGIN_LEFT}" y1="{bottom}" x2="{right}" y2="{bottom}"/>"#).unwrap();
    writeln!(s, r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{bottom}"/>"#).unwrap();
    writeln!(s, "</g>").unwrap();
    writeln!(s, r#"<g class="ticks">"#).unwrap();
    let x_ticks: Vec<f64> = nice_ticks(f.x0, f.x1, 10)
        .into_iter()
        .filter(|x| x.fract() == 0.0)
        .collect();
    for x in x_ticks {
        let px = f.px(x);
        writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 20.0,
            fmt_tick(x)
        )
        .unwrap();
    }
    for y in nice_ticks(f.y0, f.y1, 6) {
        let py = f.py(y);
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{MARGIN_LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            py + 4.0,
            fmt_tick(y)
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    writeln!(
        s,
        r#"<text class="axis-label x-label" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (MARGIN_LEFT + right) / 2.0,
        HEIGHT - 15.0,
        escape(&chart.x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text class="axis-label y-label" x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (MARGIN_TOP + bottom) / 2.0,
        (MARGIN_TOP + bottom) / 2.0,
        escape(&chart.y_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (MARGIN_LEFT + right) / 2.0,
        escape(&chart.title)
    )
    .unwrap();

    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let label = escape(&series.label);
        writeln!(s, r#"<g class="series-group" data-label="{label}">"#).unwrap();
        let mut band = String::new();
        for p in &series.points {
            write!(band, "{:.2},{:.2} ", f.px(p.x), f.py(p.high)).unwrap();
        }
        for p in series.points.iter().rev() {
            write!(band, "{:.2},{:.2} ", f.px(p.x), f.py(p.low)).unwrap();
        }
        writeln!(
            s,
            r#"<polygon class="band" data-label="{label}" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        )
        .unwrap();
        let line: Vec<String> = series
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", f.px(p.x), f.py(p.y)))
            .collect();
        writeln!(
            s,
            r#"<polyline class="series" data-label="{label}" points="{}" fill="none" stroke="{color}" stroke-width="1" stroke-dasharray="4 3"/>"#,
            line.join(" ")
        )
        .unwrap();
        for p in &series.points {
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                f.px(p.x),
                f.py(p.y)
            )
            .unwrap();
        }
        if let Some(smooth) = &series.smooth {
            let mut d = String::new();
            for (j, (p, v)) in series.points.iter().zip(smooth).enumerate() {
                let cmd = if j == 0 { 'M' } else { 'L' };
                write!(d, "{cmd}{:.2},{:.2} ", f.px(p.x), f.py(*v)).unwrap();
            }
            writeln!(
                s,
                r#"<path class="lowess" data-label="{label}" d="{}" fill="none" stroke="{color}" stroke-width="2.5"/>"#,
                d.trim_end()
            )
            .unwrap();
        }
        writeln!(s, "</g>").unwrap();
    }

    writeln!(s, r#"<g class="legend">"#).unwrap();
    for (i, series) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="14" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            right + 15.0,
            y - 9.0,
            right + 35.0,
            y,
            escape(&series.label)
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();
    s.push_str("</svg>\n");
    s
}
