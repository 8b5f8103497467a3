//! Minimal SVG renderings. Coordinates are printed with two decimals so the
//! output is stable across platforms.

use std::fmt::Write;

use crate::clustering::Dendrogram;
use crate::sarimax::ScenarioPair;

const W: f64 = 720.0;
const H: f64 = 420.0;
const PAD: f64 = 50.0;

fn open(width: f64, height: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Leaves along the x axis in drawing order, merges as brackets at their
/// height.
pub fn dendrogram(d: &Dendrogram) -> String {
    let n = d.leaf_labels.len();
    let order = d.leaf_order();
    let mut x = vec![0.0; n + d.merges.len()];
    let mut y = vec![0.0; n + d.merges.len()];
    let step = (W - 2.0 * PAD) / n.max(1) as f64;
    for (pos, &leaf) in order.iter().enumerate() {
        x[leaf] = PAD + step * (pos as f64 + 0.5);
    }
    let top = d.merges.iter().map(|m| m.height).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let base = H - 90.0;
    let scale = |h: f64| base - (base - 40.0) * h / top;
    for i in 0..n {
        y[i] = base;
    }
    let mut s = open(W, H, "Ward dendrogram");
    for (step_idx, m) in d.merges.iter().enumerate() {
        let id = n + step_idx;
        let hy = scale(m.height);
        let (a, b) = (m.cluster_a, m.cluster_b);
        let _ = writeln!(
            s,
            r#"<path d="M{:.2},{:.2} V{:.2} H{:.2} V{:.2}" fill="none" stroke="black"/>"#,
            x[a], y[a], hy, x[b], y[b]
        );
        x[id] = 0.5 * (x[a] + x[b]);
        y[id] = hy;
    }
    for (i, label) in d.leaf_labels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" transform="rotate(60 {:.2} {:.2})">{}</text>"#,
            x[i],
            base + 12.0,
            x[i],
            base + 12.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One small panel per entity: actuals and both scenario forecasts.
pub fn forecast_lines(pairs: &[ScenarioPair]) -> String {
    let cols = 4usize;
    let rows = pairs.len().div_ceil(cols).max(1);
    let (cw, ch) = (200.0, 150.0);
    let width = cols as f64 * cw;
    let height = rows as f64 * ch + 60.0;
    let mut s = open(width, height, "Hold-out forecasts: actual (black), all features (red), selected (blue)");
    for (i, p) in pairs.iter().enumerate() {
        let ox = (i % cols) as f64 * cw;
        let oy = 40.0 + (i / cols) as f64 * ch;
        let a = &p.all_features;
        let sel = &p.selected_features;
        let (lo, hi) = finite_range(a.actuals.iter().chain(&a.point_forecasts).chain(&sel.point_forecasts).copied());
        let h = a.actuals.len().max(2) - 1;
        let px = |k: usize| ox + 25.0 + (cw - 45.0) * k as f64 / h as f64;
        let py = |v: f64| oy + ch - 25.0 - (ch - 50.0) * (v - lo) / (hi - lo);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, ox + 25.0, oy + 15.0, escape(&p.entity));
        for (series, color) in [(&a.actuals, "black"), (&a.point_forecasts, "red"), (&sel.point_forecasts, "blue")] {
            let pts: Vec<String> = series.iter().enumerate().map(|(k, v)| format!("{:.2},{:.2}", px(k), py(*v))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, pts.join(" "));
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Paired NRMSE bars per entity.
pub fn nrmse_bars(pairs: &[ScenarioPair]) -> String {
    let (_, hi) = finite_range(pairs.iter().flat_map(|p| [p.all_features.nrmse, p.selected_features.nrmse]).flatten().chain([0.0]));
    let mut s = open(W, H, "NRMSE: all features (red) vs selected features (blue)");
    let n = pairs.len().max(1) as f64;
    let slot = (W - 2.0 * PAD) / n;
    let base = H - 90.0;
    let bar = |v: Option<f64>| v.filter(|v| v.is_finite()).map(|v| (base - 40.0) * v / hi).unwrap_or(0.0);
    for (i, p) in pairs.iter().enumerate() {
        let x0 = PAD + slot * i as f64;
        for (k, (v, color)) in [(p.all_features.nrmse, "red"), (p.selected_features.nrmse, "blue")].into_iter().enumerate() {
            let h = bar(v);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                x0 + slot * (0.1 + 0.4 * k as f64),
                base - h,
                slot * 0.4,
                h
            );
        }
        let cx = x0 + slot * 0.5;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" transform="rotate(60 {cx:.2} {:.2})">{}</text>"#,
            base + 12.0,
            base + 12.0,
            escape(&p.entity)
        );
    }
    let _ = writeln!(s, r#"<line x1="{PAD}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="black"/>"#, W - PAD);
    s.push_str("</svg>\n");
    s
}

/// Accumulated-cost grid in grey levels with the warping path overlaid.
pub fn cost_heatmap(title: &str, grid: &[Vec<f64>], path: &[(usize, usize)]) -> String {
    let n = grid.len().max(1);
    let m = grid.first().map_or(1, |r| r.len().max(1));
    let cell = (360.0 / n.max(m) as f64).max(2.0);
    let width = m as f64 * cell + 2.0 * PAD;
    let height = n as f64 * cell + 2.0 * PAD;
    let (lo, hi) = finite_range(grid.iter().flatten().copied());
    let mut s = open(width, height, title);
    for (i, row) in grid.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let shade = if v.is_finite() { (255.0 * (1.0 - (v - lo) / (hi - lo))).round() as u8 } else { 0 };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({shade},{shade},{shade})"/>"#,
                PAD + j as f64 * cell,
                PAD + i as f64 * cell
            );
        }
    }
    let pts: Vec<String> = path
        .iter()
        .map(|(i, j)| format!("{:.2},{:.2}", PAD + (*j as f64 + 0.5) * cell, PAD + (*i as f64 + 0.5) * cell))
        .collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="red" stroke-width="2"/>"#, pts.join(" "));
    s.push_str("</svg>\n");
    s
}
