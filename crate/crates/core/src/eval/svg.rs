//! Minimal hand-written SVG charts.

use std::fmt::Write as _;

use super::distribution::DistributionReport;
use super::metrics::Regime;
use super::sweep::SweepTable;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        out,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD
    );
}

fn y_of(v: f64) -> f64 {
    H - PAD - v.clamp(0.0, 1.0) * (H - 2.0 * PAD)
}

/// Seed-averaged accuracy against training fraction, one line per regime.
pub fn sweep_svg(table: &SweepTable) -> String {
    let mut out = String::new();
    header(&mut out, "Test accuracy vs. fraction of human training data");
    let x_of = |f: f64| PAD + f.clamp(0.0, 1.0) * (W - 2.0 * PAD);
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{tick}</text><text x="{}" y="{}" text-anchor="end">{tick}</text>"#,
            x_of(tick),
            H - PAD + 16.0,
            PAD - 6.0,
            y_of(tick) + 4.0
        );
    }
    for (i, (regime, color)) in [(Regime::ZeroShot, "#d62728"), (Regime::FineTuned, "#2ca02c")]
        .iter()
        .enumerate()
    {
        let pts: Vec<String> = table
            .curve(*regime)
            .iter()
            .map(|&(f, a)| format!("{:.2},{:.2}", x_of(f), y_of(a)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{regime}</text>"#,
            W - PAD - 90.0,
            PAD + 16.0 * i as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Grouped boxplots per channel; each channel is rescaled to the joint
/// whisker range of both sources.
pub fn boxplot_svg(report: &DistributionReport) -> String {
    let mut out = String::new();
    header(&mut out, "Per-channel raw value ranges (human vs. robot)");
    let n = report.channels.len().max(1) as f64;
    let slot = (W - 2.0 * PAD) / n;
    for (i, c) in report.channels.iter().enumerate() {
        let lo = c.human.whisker_low.min(c.robot.whisker_low);
        let hi = c.human.whisker_high.max(c.robot.whisker_high);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let norm = |v: f64| (v - lo) / span;
        for (j, (b, color)) in [(&c.human, "#1f77b4"), (&c.robot, "#ff7f0e")].iter().enumerate() {
            let x = PAD + slot * i as f64 + slot * (0.15 + 0.38 * j as f64);
            let bw = slot * 0.3;
            let _ = writeln!(
                out,
                r#"<line x1="{mx:.2}" y1="{:.2}" x2="{mx:.2}" y2="{:.2}" stroke="{color}"/><rect x="{x:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="{color}" fill-opacity="0.4" stroke="{color}"/><line x1="{x:.2}" y1="{my:.2}" x2="{:.2}" y2="{my:.2}" stroke="black"/>"#,
                y_of(norm(b.whisker_low)),
                y_of(norm(b.whisker_high)),
                y_of(norm(b.q3)),
                (y_of(norm(b.q1)) - y_of(norm(b.q3))).max(0.5),
                x + bw,
                mx = x + bw / 2.0,
                my = y_of(norm(b.median)),
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="end" transform="rotate(-45 {:.2} {})">{}</text>"#,
            PAD + slot * (i as f64 + 0.5),
            H - PAD + 14.0,
            PAD + slot * (i as f64 + 0.5),
            H - PAD + 14.0,
            c.channel
        );
    }
    out.push_str("</svg>\n");
    out
}
