//! Plain-text reports on a ladder graph.

use std::fmt::Write;

use causal_twin::ladder::{
    detect_feedback_loops, detect_structural_cycles, detect_x_patterns, generate_propositions, LadderGraph,
};

/// X patterns, structural cycles and feedback loops.
pub fn loops_report(g: &LadderGraph, max_loop_edges: usize) -> String {
    let names = &g.channels;
    let mut out = String::new();

    let xs = detect_x_patterns(g);
    let _ = writeln!(out, "x patterns: {}", xs.len());
    for (a, b) in &xs {
        let _ = writeln!(out, "  {} <-> {}", names[*a], names[*b]);
    }

    let cycles = detect_structural_cycles(g);
    let _ = writeln!(out, "structural cycles: {}", cycles.len());
    for c in &cycles {
        let mut line: Vec<&str> = c.iter().map(|&i| names[i].as_str()).collect();
        line.push(&names[c[0]]);
        let _ = writeln!(out, "  {}", line.join(" -> "));
    }

    let loops = detect_feedback_loops(g, max_loop_edges);
    let cross = loops.iter().filter(|l| l.path.len() > 1).count();
    let _ = writeln!(
        out,
        "feedback loops: {} ({} self, {} across channels)",
        loops.len(),
        loops.len() - cross,
        cross
    );
    for l in &loops {
        let _ = writeln!(out, "  {}", l.describe(names));
    }
    out
}

/// One proposition per line, statement first.
pub fn propositions_report(g: &LadderGraph, max_hops: usize) -> String {
    let props = generate_propositions(g, max_hops);
    let mut out = String::new();
    let _ = writeln!(out, "propositions: {}", props.len());
    for p in &props {
        let _ = writeln!(out, "  {}", p.describe(&g.channels));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use causal_twin::ladder::build_ladder;
    use causal_twin::model::{default_channel_names, CausalFactors};

    #[test]
    fn empty_graph_reports_zero_counts() {
        let g = build_ladder(&CausalFactors::zeros(default_channel_names(3), 1)).unwrap();
        assert_eq!(
            loops_report(&g, 6),
            "x patterns: 0\nstructural cycles: 0\nfeedback loops: 0 (0 self, 0 across channels)\n"
        );
        assert_eq!(propositions_report(&g, 2), "propositions: 0\n");
    }

    #[test]
    fn two_cycle_is_reported_as_x_and_cycle() {
        let f = CausalFactors::from_rows(&[vec![0.0, 0.3], vec![-0.4, 0.0]], &[vec![vec![0.0; 2]; 2]]).unwrap();
        let report = loops_report(&build_ladder(&f).unwrap(), 6);
        assert!(report.contains("x patterns: 1\n  B1 <-> B2\n"));
        assert!(report.contains("structural cycles: 1\n  B1 -> B2 -> B1\n"));
        assert!(report.contains("feedback loops: 0"));
    }
}
