//! Self-contained SVG 1.1 renderings: sign heatmaps and the screeplot.
//!
//! Heatmap cells use two ramps scaled by `|value| / max |value|` within the
//! row: white to `#b2182b` for positive values and white to `#2166ac` for
//! negative ones. Zero cells are light grey.

use std::fmt::Write;

const ZERO_FILL: &str = "#f0f0f0";
const POSITIVE: (u8, u8, u8) = (0xb2, 0x18, 0x2b);
const NEGATIVE: (u8, u8, u8) = (0x21, 0x66, 0xac);
const FLOOR: f64 = 0.25;

fn ramp(end: (u8, u8, u8), t: f64) -> String {
    let t = FLOOR + (1.0 - FLOOR) * t.clamp(0.0, 1.0);
    let mix = |c: u8| (255.0 + (f64::from(c) - 255.0) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(end.0), mix(end.1), mix(end.2))
}

/// Fill colour of a heatmap cell.
pub fn cell_fill(value: f64, row_max: f64) -> String {
    if value == 0.0 || row_max <= 0.0 {
        return ZERO_FILL.to_owned();
    }
    let t = value.abs() / row_max;
    if value > 0.0 {
        ramp(POSITIVE, t)
    } else {
        ramp(NEGATIVE, t)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );
}

/// Rows of `values` become heatmap rows labelled `row_labels`, columns are
/// labelled `column_labels`.
pub fn heatmap(
    title: &str,
    row_labels: &[String],
    column_labels: &[String],
    values: &[Vec<f64>],
) -> String {
    const CELL: f64 = 14.0;
    let left = 12.0
        + 7.0
            * row_labels
                .iter()
                .map(|l| l.chars().count())
                .max()
                .unwrap_or(0) as f64;
    let top = 34.0
        + 6.0
            * column_labels
                .iter()
                .map(|l| l.chars().count())
                .max()
                .unwrap_or(0) as f64;
    let width = left + CELL * column_labels.len() as f64 + 12.0;
    let height = top + CELL * row_labels.len() as f64 + 12.0;

    let mut out = String::new();
    header(&mut out, width, height);
    let _ = writeln!(
        out,
        r#"<text x="6" y="16" font-size="13">{}</text>"#,
        escape(title)
    );
    for (j, label) in column_labels.iter().enumerate() {
        let x = left + CELL * (j as f64 + 0.5) + 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" transform="rotate(-90 {x:.1} {:.1})">{}</text>"#,
            top - 4.0,
            top - 4.0,
            escape(label)
        );
    }
    for (i, (label, row)) in row_labels.iter().zip(values).enumerate() {
        let y = top + CELL * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 4.0,
            y + CELL - 3.0,
            escape(label)
        );
        let row_max = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (j, &v) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{y:.1}" width="{CELL:.0}" height="{CELL:.0}" fill="{}" stroke="white" stroke-width="1"/>"#,
                left + CELL * j as f64,
                cell_fill(v, row_max)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Number of nonzero direction components against eta, with a dashed marker
/// at the automatically selected eta.
pub fn screeplot(etas: &[f64], counts: &[usize], selected: Option<f64>) -> String {
    const WIDTH: f64 = 480.0;
    const HEIGHT: f64 = 320.0;
    const LEFT: f64 = 56.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 46.0;

    let (lo, hi) = etas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| {
            (a.min(e), b.max(e))
        });
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (0.0, 1.0)
    };
    let max_count = counts.iter().copied().max().unwrap_or(0).max(1);
    let px = |e: f64| LEFT + (e - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT);
    let py = |c: f64| HEIGHT - BOTTOM - c / max_count as f64 * (HEIGHT - TOP - BOTTOM);

    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" font-size="13" text-anchor="middle">Number of flagged variables versus sparsity parameter</text>"#,
        WIDTH / 2.0
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1} {y1:.1} L{x0:.1} {y0:.1} L{x1:.1} {y0:.1}" fill="none" stroke="black"/>"#
    );

    let ticks = 5usize.min(max_count);
    for k in 0..=ticks {
        let c = (max_count as f64 * k as f64 / ticks as f64).round();
        let y = py(c);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{c:.0}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            y + 4.0
        );
    }
    for &e in etas {
        let x = px(e);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
            y0 + 4.0
        );
    }
    let mut k = 0;
    while k < etas.len() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
            px(etas[k]),
            y0 + 16.0,
            etas[k]
        );
        k += 2;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">eta</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">number of flagged variables</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    if let Some(e) = selected {
        let x = px(e);
        let (label_x, anchor) = if x > WIDTH / 2.0 {
            (x - 4.0, "end")
        } else {
            (x + 4.0, "start")
        };
        let colour = ramp(POSITIVE, 1.0);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke="{colour}" stroke-dasharray="4 3"/><text x="{label_x:.1}" y="{:.1}" fill="{colour}" text-anchor="{anchor}">automatic eta = {e:.2}</text>"#,
            y1 + 10.0,
        );
    }

    let points: Vec<String> = etas
        .iter()
        .zip(counts)
        .map(|(&e, &c)| format!("{:.1},{:.1}", px(e), py(c as f64)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="black"/>"#,
        points.join(" ")
    );
    for (&e, &c) in etas.iter().zip(counts) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="black"/>"#,
            px(e),
            py(c as f64)
        );
    }
    out.push_str("</svg>\n");
    out
}
