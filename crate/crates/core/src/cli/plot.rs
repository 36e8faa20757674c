use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::table::{ResultTable, MEDIAN};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub type Series = (String, Vec<(f64, f64)>);

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

/// Line chart with one polyline per series; output depends only on inputs.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let points = || series.iter().flat_map(|(_, p)| p.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (x0, x1) = range(points().map(|p| p.0));
    let (y0, y1) = range(points().map(|p| p.1));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, num(LEFT + pw / 2.0), escape(title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let (px, py) = (sx(fx), sy(fy));
        let _ = writeln!(s, r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#ddd"/>"##, num(px), TOP, TOP + ph);
        let _ = writeln!(s, r##"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}" stroke="#ddd"/>"##, num(py), LEFT, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(px), num(TOP + ph + 16.0), num(fx));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, num(LEFT - 6.0), num(py + 4.0), num(fy));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(LEFT + pw / 2.0), num(HEIGHT - 12.0), escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        num(TOP + ph / 2.0),
        escape(y_label)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{},{}", num(sx(*x)), num(sy(*y))))
            .collect();
        if coords.len() > 1 {
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        }
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{1}" stroke="{color}" stroke-width="2"/>"#, num(lx), num(ly), num(lx + 18.0));
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, num(lx + 24.0), num(ly + 4.0), escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn plotted_metric(table: &ResultTable) -> String {
    if table.rows.iter().any(|r| r.metric == MEDIAN) {
        MEDIAN.into()
    } else {
        table.rows[0].metric.clone()
    }
}

/// One chart per scenario of the metric against the layer index.
pub fn scenario_charts(table: &ResultTable) -> Vec<(String, String)> {
    let metric = plotted_metric(table);
    let mut grouped: BTreeMap<&str, BTreeMap<&str, Vec<(f64, f64)>>> = BTreeMap::new();
    for r in table.rows.iter().filter(|r| r.metric == metric) {
        grouped.entry(&r.scenario).or_default().entry(&r.variant).or_default().push((r.t as f64, r.value));
    }
    grouped
        .into_iter()
        .map(|(scenario, by_variant)| {
            let series: Vec<Series> = by_variant
                .into_iter()
                .map(|(v, mut pts)| {
                    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                    (v.to_string(), pts)
                })
                .collect();
            (scenario.to_string(), render_svg(scenario, "layer t", &metric, &series))
        })
        .collect()
}

/// When every scenario reads `key=value` with a shared key, the metric at
/// each variant's last layer against that value.
pub fn sweep_chart(table: &ResultTable) -> Option<(String, String)> {
    let metric = plotted_metric(table);
    let mut key = None;
    let mut by_variant: BTreeMap<&str, BTreeMap<(&str, usize), f64>> = BTreeMap::new();
    for r in table.rows.iter().filter(|r| r.metric == metric) {
        let (k, _) = r.scenario.split_once('=')?;
        if *key.get_or_insert(k) != k {
            return None;
        }
        by_variant.entry(&r.variant).or_default().insert((&r.scenario, r.t), r.value);
    }
    let key = key?;
    let mut series = Vec::new();
    let mut grid_points = 0;
    for (variant, cells) in by_variant {
        let mut last: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for ((scenario, t), v) in cells {
            let e = last.entry(scenario).or_insert((t, v));
            if t >= e.0 {
                *e = (t, v);
            }
        }
        let mut pts = Vec::new();
        for (scenario, (_, v)) in last {
            pts.push((scenario.split_once('=')?.1.parse::<f64>().ok()?, v));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        grid_points = grid_points.max(pts.len());
        series.push((variant.to_string(), pts));
    }
    (grid_points > 1).then(|| (format!("sweep_{key}"), render_svg(&format!("{metric} vs {key}"), key, &metric, &series)))
}
