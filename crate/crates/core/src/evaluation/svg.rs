//! Minimal SVG renderings of histograms and shift reports.
//!
//! These are plain string builders — no plotting dependency — meant for
//! quick visual inspection of score distributions and attribute shifts.
//! Output is deterministic for identical inputs.

use super::{ScoreHistogram, ShiftReport};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Series palette: blue, orange, green, red.
const COLORS: [&str; 4] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52"];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    format!(
        concat!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" "#,
            r#"viewBox="0 0 {w} {h}" font-family="sans-serif">"#,
            "\n",
            r#"<rect width="{w}" height="{h}" fill="white"/>"#,
            "\n",
            r#"<text x="{cx}" y="24" text-anchor="middle" font-size="16">{title}</text>"#,
            "\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        cx = WIDTH / 2.0,
        title = escape(title),
    )
}

/// Render one or more histograms sharing bin edges as overlaid density bars.
pub fn histogram_svg(series: &[(&str, &ScoreHistogram)], title: &str) -> String {
    let mut svg = header(title);
    if series.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let edges = &series[0].1.bin_edges;
    let (lo, hi) = (edges[0], *edges.last().expect("edges non-empty"));
    let max_density = series
        .iter()
        .flat_map(|(_, h)| h.density.iter().copied())
        .fold(1e-12, f64::max);

    let x = |v: f64| MARGIN_LEFT + (v - lo) / (hi - lo) * plot_w;
    let y = |d: f64| MARGIN_TOP + plot_h * (1.0 - d / max_density);

    // Axes.
    svg.push_str(&format!(
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#,
        l = MARGIN_LEFT,
        r = WIDTH - MARGIN_RIGHT,
        t = MARGIN_TOP,
        b = HEIGHT - MARGIN_BOTTOM,
    ));
    svg.push('\n');
    for tick in 0..=4 {
        let v = lo + (hi - lo) * tick as f64 / 4.0;
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{v:.2}</text>"#,
            x(v),
            HEIGHT - MARGIN_BOTTOM + 18.0,
        ));
        svg.push('\n');
    }

    for (s, (label, hist)) in series.iter().enumerate() {
        let color = COLORS[s % COLORS.len()];
        for (b, &d) in hist.density.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            let x0 = x(hist.bin_edges[b]);
            let x1 = x(hist.bin_edges[b + 1]);
            svg.push_str(&format!(
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.55"/>"#,
                x0,
                y(d),
                (x1 - x0).max(0.5),
                HEIGHT - MARGIN_BOTTOM - y(d),
            ));
            svg.push('\n');
        }
        // Legend swatch.
        let ly = MARGIN_TOP + 16.0 * s as f64;
        svg.push_str(&format!(
            r#"<rect x="{lx}" y="{ly}" width="12" height="12" fill="{color}" fill-opacity="0.55"/><text x="{tx}" y="{ty}" font-size="12">{label}</text>"#,
            lx = WIDTH - MARGIN_RIGHT - 150.0,
            ly = ly,
            tx = WIDTH - MARGIN_RIGHT - 132.0,
            ty = ly + 10.0,
            label = escape(label),
        ));
        svg.push('\n');
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render a shift report as grouped before/after share bars per attribute.
pub fn shift_svg(report: &ShiftReport, title: &str) -> String {
    let mut svg = header(title);
    let bars: Vec<(String, f64, f64)> = report
        .classes
        .iter()
        .flat_map(|class| {
            class.attributes.iter().map(|attr| {
                (
                    format!("{}:{}", class.class, attr.label),
                    attr.share_before,
                    attr.share_after,
                )
            })
        })
        .collect();
    if bars.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let max_share = bars
        .iter()
        .flat_map(|(_, b, a)| [*b, *a])
        .fold(1e-12, f64::max);
    let group_w = plot_w / bars.len() as f64;
    let bar_w = (group_w * 0.38).max(1.0);
    let y = |share: f64| MARGIN_TOP + plot_h * (1.0 - share / max_share);

    svg.push_str(&format!(
        r#"<line x1="{l}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}" stroke="black"/>"#,
        l = MARGIN_LEFT,
        r = WIDTH - MARGIN_RIGHT,
        t = MARGIN_TOP,
        b = HEIGHT - MARGIN_BOTTOM,
    ));
    svg.push('\n');

    for (i, (label, before, after)) in bars.iter().enumerate() {
        let x0 = MARGIN_LEFT + group_w * i as f64 + group_w * 0.1;
        for (offset, share, color) in [(0.0, *before, COLORS[0]), (bar_w, *after, COLORS[1])] {
            if share > 0.0 {
                svg.push_str(&format!(
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
                    x0 + offset,
                    y(share),
                    bar_w,
                    HEIGHT - MARGIN_BOTTOM - y(share),
                ));
                svg.push('\n');
            }
        }
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="9" transform="rotate(-45 {:.1} {:.1})">{}</text>"#,
            x0 + bar_w,
            HEIGHT - MARGIN_BOTTOM + 12.0,
            x0 + bar_w,
            HEIGHT - MARGIN_BOTTOM + 12.0,
            escape(label),
        ));
        svg.push('\n');
    }
    for (i, name) in ["before", "after"].iter().enumerate() {
        let ly = MARGIN_TOP + 16.0 * i as f64;
        svg.push_str(&format!(
            r#"<rect x="{lx}" y="{ly}" width="12" height="12" fill="{c}"/><text x="{tx}" y="{ty}" font-size="12">{name}</text>"#,
            lx = WIDTH - MARGIN_RIGHT - 120.0,
            ly = ly,
            c = COLORS[i],
            tx = WIDTH - MARGIN_RIGHT - 102.0,
            ty = ly + 10.0,
        ));
        svg.push('\n');
    }
    svg.push_str("</svg>\n");
    svg
}
