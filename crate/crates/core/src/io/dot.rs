use std::fmt::Write as _;

use super::format_sig;
use crate::ladder::LadderGraph;
use crate::statespace::FactorKind;

fn node(name: &str, lag: usize) -> String {
    let id = if lag == 0 {
        format!("{name}@T")
    } else {
        format!("{name}@T-{lag}")
    };
    format!("\"{}\"", id.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Time-unrolled digraph. Nodes for every lag present (at least T-1), then T;
/// edges in ladder order.
pub fn render_dot(graph: &LadderGraph) -> String {
    let max_lag = graph.edges.iter().map(|e| e.lag).max().unwrap_or(0).max(1);
    let mut out = String::from("digraph ladder {\n  rankdir=LR;\n  node [shape=ellipse];\n");
    for lag in (0..=max_lag).rev() {
        for name in &graph.channels {
            writeln!(out, "  {} [label={}];", node(name, lag), node(name, lag)).unwrap();
        }
    }
    for e in &graph.edges {
        let style = if e.sign < 0 { "dashed" } else { "solid" };
        let color = if e.kind == FactorKind::Ins { "blue" } else { "green" };
        writeln!(
            out,
            "  {} -> {} [kind={}, sign=\"{}\", magnitude={}, lag={}, style={style}, color={color}];",
            node(&graph.channels[e.from], e.lag),
            node(&graph.channels[e.to], 0),
            e.kind,
            if e.sign < 0 { "-" } else { "+" },
            format_sig(e.magnitude),
            e.lag,
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::build_ladder;
    use crate::model::{default_channel_names, CausalFactors};
    use nalgebra::DMatrix;

    #[test]
    fn empty_graph_has_nodes_only() {
        let g = build_ladder(&CausalFactors::zeros(default_channel_names(3), 1)).unwrap();
        let dot = render_dot(&g);
        assert_eq!(dot.matches("->").count(), 0);
        assert_eq!(dot.matches("[label=").count(), 6);
        assert!(dot.contains("\"B2@T-1\""));
        assert!(dot.contains("\"B2@T\""));
    }

    #[test]
    fn negative_edge_is_dashed() {
        let f = CausalFactors::new(
            DMatrix::zeros(2, 2),
            vec![DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -0.4, 0.0])],
            default_channel_names(2),
        )
        .unwrap();
        let dot = render_dot(&build_ladder(&f).unwrap());
        assert!(dot.contains(
            "\"B1@T-1\" -> \"B2@T\" [kind=INL, sign=\"-\", magnitude=0.4, lag=1, style=dashed, color=green];"
        ));
    }
}
