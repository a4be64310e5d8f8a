//! Trajectory CSV and SVG plot emission.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use passive_agreement::sim::{disagreement_norm, Trajectory};

/// `%.12g`: 12 significant digits, trailing zeros removed, exponent form
/// outside `[1e−5, 1e12)`.
pub fn format_sig(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp).max(0) as usize, v))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Column names: `t, x_*, y_*, u_*, zeta_*, mu_*, disagreement_norm`.
/// Agents with more than one state get `x_i_j` columns.
pub fn csv_header(traj: &Trajectory) -> Vec<String> {
    let layout = traj.layout();
    let n = layout.agent_count();
    let m = layout.controller_count();
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        let r = layout.agent(i);
        if r.len() == 1 {
            header.push(format!("x_{}", i + 1));
        } else {
            header.extend((1..=r.len()).map(|j| format!("x_{}_{j}", i + 1)));
        }
    }
    for prefix in ["y", "u"] {
        header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    for prefix in ["zeta", "mu"] {
        header.extend((1..=m).map(|k| format!("{prefix}_{k}")));
    }
    header.push("disagreement_norm".into());
    header
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(traj))?;
    let agents = traj.layout().agents();
    let mut row = Vec::new();
    for ((t, state), f) in traj.times.iter().zip(&traj.states).zip(&traj.frames) {
        row.clear();
        row.push(format_sig(*t));
        row.extend(state[agents.clone()].iter().map(|v| format_sig(*v)));
        for series in [&f.y, &f.u, &f.zeta, &f.mu] {
            row.extend(series.iter().map(|v| format_sig(*v)));
        }
        row.push(format_sig(disagreement_norm(&f.y)));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn emit_trajectory_csv(traj: &Trajectory, path: &Path) -> io::Result<()> {
    write_trajectory_csv(traj, BufWriter::new(File::create(path)?))
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const MAX_POINTS: usize = 1500;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

/// Tick positions with a 1-2-5 step covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let raw = (hi - lo) / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|k| k * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = trim_zeros(&s);
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One polyline per agent output against time, with axes, ticks, a legend
/// and an optional dashed reference level. Same input, same bytes.
pub fn render_plot(traj: &Trajectory, title: &str, reference: Option<f64>) -> String {
    let n = traj.layout().agent_count();
    let (t0, t1) = (
        traj.times.first().copied().unwrap_or(0.0),
        traj.times.last().copied().unwrap_or(1.0),
    );
    let t1 = if t1 > t0 { t1 } else { t0 + 1.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in &traj.frames {
        for &y in &f.y {
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    if let Some(r) = reference {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = 0.5 * lo.abs().max(1.0);
        (lo, hi) = (lo - pad, hi + pad);
    } else {
        let pad = 0.05 * (hi - lo);
        (lo, hi) = (lo - pad, hi + pad);
    }

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t0) / (t1 - t0) * plot_w;
    let sy = |y: f64| TOP + (hi - y) / (hi - lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    let _ = writeln!(svg, r##"<g stroke="#dddddd" stroke-width="1">"##);
    let t_ticks = ticks(t0, t1, 8);
    let y_ticks = ticks(lo, hi, 6);
    for &t in &t_ticks {
        let x = sx(t);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}"/>"#, TOP + plot_h);
    }
    for &y in &y_ticks {
        let py = sy(y);
        let _ = writeln!(svg, r#"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}"/>"#, LEFT + plot_w);
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333333"/>"##
    );
    for &t in &t_ticks {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(t),
            TOP + plot_h + 16.0,
            tick_label(t)
        );
    }
    for &y in &y_ticks {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(y) + 4.0,
            tick_label(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">agent output</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    if let Some(r) = reference {
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000000" stroke-dasharray="6 4" stroke-width="1"/>"##,
            LEFT + plot_w,
            y = sy(r)
        );
    }

    let len = traj.len();
    let stride = len.div_ceil(MAX_POINTS).max(1);
    let mut samples: Vec<usize> = (0..len).step_by(stride).collect();
    if len > 0 && samples.last() != Some(&(len - 1)) {
        samples.push(len - 1);
    }
    for i in 0..n {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (j, &k) in samples.iter().enumerate() {
            if j > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{:.2},{:.2}", sx(traj.times[k]), sy(traj.frames[k].y[i]));
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>"#
        );
    }

    let legend_x = LEFT + plot_w + 14.0;
    for i in 0..n {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#,
            legend_x + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">y_{}</text>"#, legend_x + 26.0, y + 4.0, i + 1);
    }
    if let Some(r) = reference {
        let y = TOP + 10.0 + 18.0 * n as f64;
        let _ = writeln!(
            svg,
            r##"<line x1="{legend_x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000000" stroke-dasharray="6 4"/>"##,
            legend_x + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, legend_x + 26.0, y + 4.0, format_sig_short(r));
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_sig_short(v: f64) -> String {
    trim_zeros(&format!("{v:.4}"))
}

pub fn emit_plot(traj: &Trajectory, title: &str, reference: Option<f64>, path: &Path) -> io::Result<()> {
    std::fs::write(path, render_plot(traj, title, reference))
}
