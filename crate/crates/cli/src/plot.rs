//! Minimal SVG line charts with a logarithmic y axis.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use danm_bench::{MseRecord, RuntimeRecord};
use danm_core::Method;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn color(m: Method) -> &'static str {
    match m {
        Method::Decoupled => "#1f77b4",
        Method::Vectorized => "#d62728",
    }
}

struct Series {
    label: String,
    color: &'static str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

fn chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).filter(|p| p.1 > 0.0).collect();
    let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (ly0, ly1) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1.log10()), a.1.max(p.1.log10())));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    let (ly0, ly1) = if ly0.is_finite() { (ly0.floor(), ly1.ceil().max(ly0.floor() + 1.0)) } else { (0.0, 1.0) };
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| TOP + (ly1 - y.log10()) / (ly1 - ly0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0).unwrap();
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    )
    .unwrap();
    for e in (ly0 as i32)..=(ly1 as i32) {
        let y = py(10f64.powi(e));
        writeln!(s, r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, W - RIGHT).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0).unwrap();
    }
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x}</text>"#, px(x), H - BOTTOM + 16.0).unwrap();
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 10.0).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0
    )
    .unwrap();
    for (k, ser) in series.iter().enumerate() {
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.1 > 0.0)
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#, path.join(" "), ser.color).unwrap();
        for p in &path {
            let (cx, cy) = p.split_once(',').unwrap();
            writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{}"/>"#, ser.color).unwrap();
        }
        let ly = TOP + 16.0 + 16.0 * k as f64;
        writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - RIGHT - 150.0,
            W - RIGHT - 125.0,
            ser.color,
            W - RIGHT - 120.0,
            ly + 4.0,
            ser.label
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Median wall time against array size, one line per method.
pub fn runtime_svg(recs: &[RuntimeRecord]) -> String {
    let mut by: BTreeMap<(Method, usize), Vec<f64>> = BTreeMap::new();
    for r in recs {
        if let Some(t) = r.wall_seconds {
            by.entry((r.method, r.n)).or_default().push(t);
        }
    }
    let series: Vec<Series> = [Method::Decoupled, Method::Vectorized]
        .into_iter()
        .map(|m| Series {
            label: m.to_string(),
            color: color(m),
            dashed: false,
            points: by
                .iter()
                .filter(|((mm, _), _)| *mm == m)
                .map(|((_, n), ts)| {
                    let mut ts = ts.clone();
                    ts.sort_by(f64::total_cmp);
                    (*n as f64, ts[ts.len() / 2])
                })
                .collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    chart("Solve time versus array size", "n (n_x = n_y)", "wall seconds", &series)
}

/// MSE against SNR per method, with an optional dashed floor line.
pub fn mse_svg(recs: &[MseRecord], floor: Option<f64>) -> String {
    let mut series: Vec<Series> = [Method::Decoupled, Method::Vectorized]
        .into_iter()
        .map(|m| Series {
            label: m.to_string(),
            color: color(m),
            dashed: false,
            points: recs.iter().filter(|r| r.method == m && r.mse.is_finite()).map(|r| (r.snr_db, r.mse)).collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    if let Some(f) = floor.filter(|f| *f > 0.0) {
        let xs: Vec<f64> = recs.iter().map(|r| r.snr_db).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            series.push(Series { label: "solver floor".into(), color: "#555", dashed: true, points: vec![(lo, f), (hi, f)] });
        }
    }
    chart("MSE versus SNR", "SNR (dB)", "MSE (normalized frequency)", &series)
}
