//! Reliability-diagram rendering as a standalone SVG 1.1 document.
//!
//! The diagram shows, per bin, the measured fraction of correct
//! predictions as a bar over the bin's reported-probability interval, the
//! identity line a perfectly self-aware classifier would trace, one dot
//! per metric at (reported, measured), and the confidence-slope segment
//! through the robustness and decisiveness dots.
//!
//! Output is deterministic text: the same report always renders to the
//! same bytes, so images can be golden-tested with a plain byte compare.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::report::MetricReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 620.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 425.0;

/// Data x in [0, 1] to pixel x.
fn px(v: f64) -> f64 {
    LEFT + v * (RIGHT - LEFT)
}

/// Data y in [0, 1] to pixel y (SVG y grows downward).
fn py(v: f64) -> f64 {
    BOTTOM - v * (BOTTOM - TOP)
}

fn xml_escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Renders the report's reliability diagram and returns the SVG text.
pub fn reliability_svg(report: &MetricReport) -> String {
    let mut s = String::new();
    let c = &report.config;
    let title = match &report.dataset_name {
        Some(name) => xml_escape(name),
        None => "reliability diagram".to_string(),
    };

    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        s,
        "<!-- gamma={} bins={} prob_sum_tolerance={} value_epsilon={} \
         correct_decisions_only={} -->",
        c.gamma, c.bins, c.prob_sum_tolerance, c.value_epsilon, c.correct_decisions_only
    );
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" \
         font-family=\"sans-serif\" font-size=\"17\">{title}</text>",
        (LEFT + RIGHT) / 2.0
    );

    // Frame and ticks.
    let _ = writeln!(
        s,
        "<rect x=\"{LEFT:.2}\" y=\"{TOP:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"black\"/>",
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (x, y) = (px(t), py(t));
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{BOTTOM:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
            BOTTOM + 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
             font-family=\"sans-serif\" font-size=\"13\">{t:.2}</text>",
            BOTTOM + 20.0
        );
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{LEFT:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>",
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" \
             font-family=\"sans-serif\" font-size=\"13\">{t:.2}</text>",
            LEFT - 9.0,
            y + 4.0
        );
    }

    // Bars: one per bin, width = the bin's reported interval, height = the
    // measured fraction. Zero-count bins render as zero-height bars so the
    // bar count always equals the bin count.
    for bin in &report.bin_table.bins {
        let x = px(bin.lo);
        let w = px(bin.hi) - x;
        let y = py(bin.fraction);
        let _ = writeln!(
            s,
            "<rect class=\"bin\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" \
             height=\"{:.2}\" fill=\"steelblue\" fill-opacity=\"0.75\" stroke=\"none\"/>",
            BOTTOM - y
        );
    }

    // Identity line: what a perfectly self-aware classifier would trace.
    let _ = writeln!(
        s,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
         stroke=\"green\" stroke-width=\"2\"/>",
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );

    // Slope segment through the robustness and decisiveness dots. Skipped
    // when the reported span is degenerate and the slope undefined.
    if !report.slope.slope.is_nan() {
        let _ = writeln!(
            s,
            "<line class=\"slope\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"magenta\" stroke-width=\"2\"/>",
            px(report.reported.robustness),
            py(report.truth.robustness),
            px(report.reported.decisiveness),
            py(report.truth.decisiveness)
        );
    }

    // One dot per metric at (reported, measured): left to right these are
    // robustness, geometric accuracy, decisiveness.
    for (reported, truth) in [
        (report.reported.robustness, report.truth.robustness),
        (report.reported.geometric, report.truth.geometric),
        (report.reported.decisiveness, report.truth.decisiveness),
    ] {
        let _ = writeln!(
            s,
            "<circle class=\"metric\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"red\"/>",
            px(reported),
            py(truth)
        );
    }

    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
         font-family=\"sans-serif\" font-size=\"15\">reported probability</text>",
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 45.0
    );
    let _ = writeln!(
        s,
        "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" \
         font-family=\"sans-serif\" font-size=\"15\" \
         transform=\"rotate(-90 20 {:.2})\">measured fraction correct</text>",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Renders the diagram to a file.
pub fn render_reliability_svg(report: &MetricReport, path: &Path) -> Result<()> {
    std::fs::write(path, reliability_svg(report))?;
    Ok(())
}
