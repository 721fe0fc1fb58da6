//! Ladder graph as a static SVG.
//!
//! Three vertical axes: T-1, T and T again. Lagged edges cross the left pane
//! from T-1 to T, structural edges cross the right pane between the two T
//! axes, so a structural edge is never horizontal. Lags above 1 are drawn on
//! the same pane and carry a `data-lag` attribute.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::format_sig;
use crate::ladder::{FeedbackLoop, LadderEdge, LadderGraph, LoopClass};
use crate::statespace::FactorKind;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    pub min_stroke: f64,
    pub max_stroke: f64,
    pub axis_spacing: f64,
    pub channel_spacing: f64,
    pub lagged_color: String,
    pub structural_color: String,
    pub dash_pattern: String,
    pub highlight_positive_feedback: bool,
    pub highlight_color: String,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            min_stroke: 1.0,
            max_stroke: 8.0,
            axis_spacing: 240.0,
            channel_spacing: 80.0,
            lagged_color: "green".into(),
            structural_color: "blue".into(),
            dash_pattern: "6,4".into(),
            highlight_positive_feedback: true,
            highlight_color: "red".into(),
        }
    }
}

impl RenderStyle {
    /// Stroke width for `magnitude` when the largest magnitude drawn is `max`.
    pub fn stroke_width(&self, magnitude: f64, max: f64) -> f64 {
        if max <= 0.0 {
            return self.min_stroke;
        }
        self.min_stroke + (self.max_stroke - self.min_stroke) * magnitude / max
    }

    fn sanitized(&self) -> RenderStyle {
        let mut s = self.clone();
        if !(s.min_stroke > 0.0) {
            s.min_stroke = 1.0;
        }
        if !(s.max_stroke >= s.min_stroke) {
            s.max_stroke = s.min_stroke;
        }
        s
    }
}

const MARGIN_X: f64 = 80.0;
const MARGIN_TOP: f64 = 60.0;
const MARGIN_BOTTOM: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn endpoints(e: &LadderEdge, style: &RenderStyle) -> (f64, f64, f64, f64) {
    let y = |c: usize| MARGIN_TOP + style.channel_spacing * c as f64;
    let axis = |k: usize| MARGIN_X + style.axis_spacing * k as f64;
    if e.kind == FactorKind::Ins {
        (axis(1), y(e.from), axis(2), y(e.to))
    } else {
        (axis(0), y(e.from), axis(1), y(e.to))
    }
}

/// Deterministic for equal inputs: edges follow the graph's edge order, all
/// numbers go through the six-significant-digit formatter.
pub fn render_svg(graph: &LadderGraph, loops: &[FeedbackLoop], style: &RenderStyle) -> String {
    let style = style.sanitized();
    let g = graph.channel_count();
    let width = 2.0 * MARGIN_X + 2.0 * style.axis_spacing;
    let height = MARGIN_TOP + MARGIN_BOTTOM + style.channel_spacing * g.saturating_sub(1) as f64;
    let f = format_sig;

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        f(width),
        f(height),
        f(width),
        f(height)
    )
    .unwrap();
    out.push_str("<defs>\n");
    for (id, color) in [
        ("arrow-lagged", &style.lagged_color),
        ("arrow-structural", &style.structural_color),
        ("arrow-highlight", &style.highlight_color),
    ] {
        writeln!(
            out,
            r#"<marker id="{id}" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" markerUnits="userSpaceOnUse" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="{}"/></marker>"#,
            escape(color)
        )
        .unwrap();
    }
    out.push_str("</defs>\n");

    out.push_str("<g class=\"axes\">\n");
    let bottom = MARGIN_TOP + style.channel_spacing * g.saturating_sub(1) as f64;
    for (k, label) in ["T-1", "T", "T"].iter().enumerate() {
        let x = MARGIN_X + style.axis_spacing * k as f64;
        writeln!(
            out,
            r#"<line class="axis" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="black" stroke-width="1"/>"#,
            f(MARGIN_TOP - 20.0),
            f(bottom + 20.0),
            x = f(x)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text class="axis-label" x="{}" y="{}" text-anchor="middle">{label}</text>"#,
            f(x),
            f(MARGIN_TOP - 30.0)
        )
        .unwrap();
        for (c, name) in graph.channels.iter().enumerate() {
            let y = MARGIN_TOP + style.channel_spacing * c as f64;
            writeln!(
                out,
                r#"<circle class="node" cx="{}" cy="{}" r="3" fill="black"/>"#,
                f(x),
                f(y)
            )
            .unwrap();
            if k != 1 {
                let (dx, anchor) = if k == 0 { (-10.0, "end") } else { (10.0, "start") };
                writeln!(
                    out,
                    r#"<text class="channel-label" x="{}" y="{}" text-anchor="{anchor}" dominant-baseline="middle">{}</text>"#,
                    f(x + dx),
                    f(y),
                    escape(name)
                )
                .unwrap();
            }
        }
    }
    out.push_str("</g>\n");

    let max = graph.max_magnitude();
    out.push_str("<g class=\"edges\">\n");
    for e in &graph.edges {
        let (x1, y1, x2, y2) = endpoints(e, &style);
        let (color, marker) = if e.kind == FactorKind::Ins {
            (&style.structural_color, "arrow-structural")
        } else {
            (&style.lagged_color, "arrow-lagged")
        };
        let dash = if e.sign < 0 {
            format!(r#" stroke-dasharray="{}""#, escape(&style.dash_pattern))
        } else {
            String::new()
        };
        writeln!(
            out,
            r#"<line class="edge {} {}" data-from="{}" data-to="{}" data-lag="{}" data-value="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}"{dash} marker-end="url(#{marker})"/>"#,
            e.kind.label().to_lowercase(),
            if e.sign < 0 { "negative" } else { "positive" },
            escape(&graph.channels[e.from]),
            escape(&graph.channels[e.to]),
            e.lag,
            f(e.value()),
            f(x1),
            f(y1),
            f(x2),
            f(y2),
            escape(color),
            f(style.stroke_width(e.magnitude, max)),
        )
        .unwrap();
    }
    out.push_str("</g>\n");

    if style.highlight_positive_feedback {
        // Self-loops of a single SNL edge are plain persistence and stay unmarked.
        let mut marked = BTreeSet::new();
        for l in loops
            .iter()
            .filter(|l| l.classification == LoopClass::PositiveFeedback && l.path.len() >= 2)
        {
            for e in &l.path {
                if let Some(i) = graph.edges.iter().position(|x| x == e) {
                    marked.insert(i);
                }
            }
        }
        if !marked.is_empty() {
            out.push_str("<g class=\"highlights\">\n");
            for e in marked.iter().map(|&i| &graph.edges[i]) {
                let (x1, y1, x2, y2) = endpoints(e, &style);
                writeln!(
                    out,
                    r#"<line class="highlight" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}" stroke-opacity="0.6" marker-end="url(#arrow-highlight)"/>"#,
                    f(x1),
                    f(y1),
                    f(x2),
                    f(y2),
                    escape(&style.highlight_color),
                    f(style.stroke_width(e.magnitude, max) + 2.0),
                )
                .unwrap();
            }
            out.push_str("</g>\n");
        }
    }
    out.push_str("</svg>\n");
    out
}
