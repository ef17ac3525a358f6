//! Line charts from benchmark or sweep CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::BenchError;

const METRICS: [&str; 4] = ["mops", "mean_abs_err", "p99_abs_err", "mean_search_len"];
const X_COLUMNS: [&str; 2] = ["fill_value", "occupancy"];
const SERIES_COLUMNS: [&str; 2] = ["queue", "alpha"];
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const W: f64 = 640.0;
const PANEL_H: f64 = 240.0;
const M_LEFT: f64 = 70.0;
const M_RIGHT: f64 = 130.0;
const M_TOP: f64 = 30.0;
const M_BOTTOM: f64 = 40.0;

/// (series, x) -> mean y, per metric.
type Panel = BTreeMap<String, BTreeMap<u64, (f64, f64, usize)>>;

/// Renders one panel per metric column found in `csv_path`, with a line per
/// queue (or α), averaging repeated x values. Writes next to the input with
/// an `.svg` extension unless `out` is given.
pub fn emit_plot(csv_path: &Path, out: Option<&Path>) -> Result<PathBuf, BenchError> {
    let mut rd = csv::Reader::from_path(csv_path)?;
    let headers = rd.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let x_col = X_COLUMNS
        .iter()
        .find_map(|c| col(c).map(|i| (i, *c)))
        .ok_or_else(|| BenchError::Config("no fill_value or occupancy column".into()))?;
    let series_col = SERIES_COLUMNS.iter().find_map(|c| col(c));
    let metrics: Vec<(usize, &str)> = METRICS.iter().filter_map(|m| col(m).map(|i| (i, *m))).collect();
    if metrics.is_empty() {
        return Err(BenchError::Config("no metric columns".into()));
    }
    let mut panels: Vec<Panel> = vec![BTreeMap::new(); metrics.len()];
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, BenchError> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| BenchError::Config(format!("row {}: bad number in column {i}", rows + 1)))
        };
        let x = num(x_col.0)?;
        let series = series_col.and_then(|i| rec.get(i)).unwrap_or("data").to_string();
        for (p, &(mi, _)) in metrics.iter().enumerate() {
            let y = num(mi)?;
            let e = panels[p]
                .entry(series.clone())
                .or_default()
                .entry(x.to_bits())
                .or_insert((x, 0.0, 0));
            e.1 += y;
            e.2 += 1;
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(BenchError::Config(format!("{} has no data rows", csv_path.display())));
    }
    let height = PANEL_H * metrics.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    for (p, &(_, name)) in metrics.iter().enumerate() {
        draw_panel(&mut svg, &panels[p], name, x_col.1, p as f64 * PANEL_H);
    }
    svg.push_str("</svg>\n");
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| csv_path.with_extension("svg"));
    std::fs::write(&out, svg)?;
    Ok(out)
}

fn draw_panel(svg: &mut String, panel: &Panel, metric: &str, x_name: &str, y0: f64) {
    let pts: Vec<(f64, f64)> = panel
        .values()
        .flat_map(|s| s.values().map(|&(x, sum, n)| (x, sum / n as f64)))
        .collect();
    let (mut x_lo, mut x_hi) = bounds(pts.iter().map(|p| p.0));
    let (_, mut y_hi) = bounds(pts.iter().map(|p| p.1));
    let y_lo = 0.0f64.min(pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min));
    if x_hi <= x_lo {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let pw = W - M_LEFT - M_RIGHT;
    let ph = PANEL_H - M_TOP - M_BOTTOM;
    let sx = |x: f64| M_LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| y0 + M_TOP + ph - (y - y_lo) / (y_hi - y_lo) * ph;
    let _ = writeln!(svg, r#"<text x="{M_LEFT}" y="{}" font-size="13">{metric}</text>"#, y0 + 18.0);
    let _ = writeln!(
        svg,
        r##"<rect x="{M_LEFT}" y="{}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>"##,
        y0 + M_TOP
    );
    for k in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            y0 + PANEL_H - M_BOTTOM + 14.0,
            tick(fx)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            M_LEFT - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_name}</text>"#,
        M_LEFT + pw / 2.0,
        y0 + PANEL_H - 8.0
    );
    for (i, (series, pts)) in panel.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .values()
            .map(|&(x, sum, n)| format!("{:.1},{:.1}", sx(x), sy(sum / n as f64)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        for p in &path {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(svg, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#);
        }
        let ly = y0 + M_TOP + 14.0 * i as f64 + 8.0;
        let lx = W - M_RIGHT + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 16.0,
            lx + 20.0,
            ly + 4.0,
            escape(series)
        );
    }
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
