//! Bland-Altman plot as a fixed 800×600 SVG document.

use pvol_core::stats::AgreementReport;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;

/// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Axis range padded by 5% and widened to whole ticks.
fn axis_range(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if hi - lo < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    };
    let step = tick_step(hi - lo, 6.0);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn ticks(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).round() as i64;
    (0..=n).map(move |i| lo + i as f64 * step)
}

fn label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10()).ceil() as usize
    };
    crate::output::fixed(v, decimals)
}

pub fn bland_altman_svg(report: &AgreementReport) -> String {
    let means: Vec<f64> = report.pairs.iter().map(|p| p.mean_ml()).collect();
    let diffs: Vec<f64> = report.pairs.iter().map(|p| p.difference_ml()).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (x0, x1, xstep) = axis_range(min(&means), max(&means));
    let (y0, y1, ystep) = axis_range(
        min(&diffs).min(report.loa_low_ml),
        max(&diffs).max(report.loa_high_ml),
    );
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let mut w = |line: String| {
        s.push_str(&line);
        s.push('\n');
    };
    w(format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    ));
    w(format!(
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    ));

    // Grid, ticks and tick labels.
    for x in ticks(x0, x1, xstep) {
        w(format!(
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#e6e6e6"/>"##,
            px(x),
            TOP,
            TOP + ph
        ));
        w(format!(
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(x),
            TOP + ph + 18.0,
            label(x, xstep)
        ));
    }
    for y in ticks(y0, y1, ystep) {
        w(format!(
            r##"<line x1="{1:.2}" y1="{0:.2}" x2="{2:.2}" y2="{0:.2}" stroke="#e6e6e6"/>"##,
            py(y),
            LEFT,
            LEFT + pw
        ));
        w(format!(
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            py(y) + 4.0,
            label(y, ystep)
        ));
    }
    w(format!(
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    ));
    w(format!(
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Mean of reference and predicted volume (mL)</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 20.0
    ));
    w(format!(
        r#"<text x="20" y="{0:.2}" text-anchor="middle" transform="rotate(-90 20 {0:.2})">Reference minus predicted volume (mL)</text>"#,
        TOP + ph / 2.0
    ));

    // Bias and limits of agreement.
    for (value, name, dash) in [
        (report.bias_ml, "bias", ""),
        (report.loa_high_ml, "+1.96 SD", r#" stroke-dasharray="6 4""#),
        (report.loa_low_ml, "-1.96 SD", r#" stroke-dasharray="6 4""#),
    ] {
        w(format!(
            r##"<line x1="{LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#c0392b" stroke-width="1.5"{dash}/>"##,
            py(value),
            LEFT + pw
        ));
        w(format!(
            r#"<text x="{:.2}" y="{:.2}">{name} {}</text>"#,
            LEFT + pw + 8.0,
            py(value) + 4.0,
            crate::output::fixed(value, 2)
        ));
    }

    for (m, d) in means.iter().zip(&diffs) {
        w(format!(
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4" fill-opacity="0.8"/>"##,
            px(*m),
            py(*d)
        ));
    }
    w("</svg>".into());
    s
}
