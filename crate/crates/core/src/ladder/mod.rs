//! Ladder graph: the thresholded factors as a typed edge set over three time
//! axes (T-1, T, T), plus the geometric analyses run on it.
//!
//! Lagged edges (SNL, INL) run from the T-1 axis to the T axis; structural
//! edges (INS) connect channels within the same instant. Feedback loops are
//! cycles in the time-unrolled graph that advance time, classified by the
//! product of their edge signs: +1 amplifies (positive feedback), -1 damps.
//! Note that a loop made of two negative factors is therefore positive
//! feedback, even though each individual link suppresses its target.

pub mod cycles;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::CausalFactors;
use crate::statespace::FactorKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderEdge {
    pub kind: FactorKind,
    pub from: usize,
    pub to: usize,
    /// 0 for structural edges.
    pub lag: usize,
    /// +1 or -1.
    pub sign: i8,
    pub magnitude: f64,
}

impl LadderEdge {
    /// Signed factor value.
    pub fn value(&self) -> f64 {
        f64::from(self.sign) * self.magnitude
    }

    fn order_key(&self) -> (usize, usize, usize, FactorKind) {
        (self.lag, self.from, self.to, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderGraph {
    pub channels: Vec<String>,
    pub edges: Vec<LadderEdge>,
}

impl LadderGraph {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn count(&self, kind: FactorKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.edges.iter().map(|e| e.magnitude).fold(0.0, f64::max)
    }

    pub fn structural_edges(&self) -> impl Iterator<Item = &LadderEdge> {
        self.edges.iter().filter(|e| e.kind == FactorKind::Ins)
    }

    pub fn lagged_edges(&self) -> impl Iterator<Item = &LadderEdge> {
        self.edges.iter().filter(|e| e.kind != FactorKind::Ins)
    }

    fn name(&self, channel: usize) -> &str {
        &self.channels[channel]
    }
}

/// One edge per nonzero factor: structural entries first, then lag 1, lag 2, ..;
/// within each matrix by cause then effect.
pub fn build_ladder(factors: &CausalFactors) -> Result<LadderGraph> {
    let g = factors.channels();
    let mut edges = Vec::new();
    for lag in 0..=factors.lag_order() {
        for cause in 0..g {
            for effect in 0..g {
                let v = factors.get(effect, cause, lag);
                if v == 0.0 {
                    continue;
                }
                let kind = match (lag, cause == effect) {
                    (0, true) => return Err(Error::SelfStructuralCausality { channel: cause }),
                    (0, false) => FactorKind::Ins,
                    (_, true) => FactorKind::Snl,
                    (_, false) => FactorKind::Inl,
                };
                edges.push(LadderEdge {
                    kind,
                    from: cause,
                    to: effect,
                    lag,
                    sign: if v > 0.0 { 1 } else { -1 },
                    magnitude: v.abs(),
                });
            }
        }
    }
    Ok(LadderGraph {
        channels: factors.channel_names().to_vec(),
        edges,
    })
}

/// Channel pairs `(i, j)`, `i < j`, joined by structural edges in both directions.
pub fn detect_x_patterns(g: &LadderGraph) -> Vec<(usize, usize)> {
    let has = |a: usize, b: usize| g.structural_edges().any(|e| e.from == a && e.to == b);
    let n = g.channel_count();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if has(i, j) && has(j, i) {
                out.push((i, j));
            }
        }
    }
    out
}

fn adjacency<'a>(n: usize, edges: impl Iterator<Item = &'a LadderEdge>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.from].push(e.to);
    }
    adj
}

/// Every elementary cycle among structural edges, each starting at its
/// smallest channel; ordered by length, then channel sequence. Empty means
/// the instantaneous part is a DAG.
pub fn detect_structural_cycles(g: &LadderGraph) -> Vec<Vec<usize>> {
    let adj = adjacency(g.channel_count(), g.structural_edges());
    let mut found = cycles::elementary_circuits(&adj);
    found.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    found
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LoopClass {
    PositiveFeedback,
    NegativeFeedback,
}

impl fmt::Display for LoopClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoopClass::PositiveFeedback => "positive-feedback",
            LoopClass::NegativeFeedback => "negative-feedback",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackLoop {
    /// Edges chained head to tail, starting at the loop's smallest channel.
    pub path: Vec<LadderEdge>,
    pub total_lag: usize,
    pub sign_product: i8,
    pub classification: LoopClass,
}

impl FeedbackLoop {
    pub fn channels(&self) -> Vec<usize> {
        self.path.iter().map(|e| e.from).collect()
    }

    /// e.g. `positive-feedback lag=1: B1 -[INL +0.1274]-> B2 -[INS +0.1408]-> B1`
    pub fn describe(&self, names: &[String]) -> String {
        let mut s = format!(
            "{} lag={}: {}",
            self.classification, self.total_lag, names[self.path[0].from]
        );
        for e in &self.path {
            s.push_str(&format!(
                " -[{} {}]-> {}",
                e.kind,
                crate::io::format_signed(e.value()),
                names[e.to]
            ));
        }
        s
    }
}

pub const DEFAULT_MAX_LOOP_EDGES: usize = 6;

/// Elementary cycles of the time-unrolled graph with total lag >= 1 and at
/// most `max_edges` edges. Parallel edges between the same channels (e.g. a
/// structural and a lagged link) give distinct loops. Pure-structural cycles
/// are excluded; see [`detect_structural_cycles`].
pub fn detect_feedback_loops(g: &LadderGraph, max_edges: usize) -> Vec<FeedbackLoop> {
    let n = g.channel_count();
    let adj = adjacency(n, g.edges.iter());
    let mut between: BTreeMap<(usize, usize), Vec<&LadderEdge>> = BTreeMap::new();
    for e in &g.edges {
        between.entry((e.from, e.to)).or_default().push(e);
    }
    for list in between.values_mut() {
        list.sort_by_key(|e| e.order_key());
    }

    let mut loops = Vec::new();
    for cycle in cycles::bounded_circuits(&adj, max_edges) {
        let hops: Vec<&Vec<&LadderEdge>> = (0..cycle.len())
            .map(|i| &between[&(cycle[i], cycle[(i + 1) % cycle.len()])])
            .collect();
        // odometer over parallel-edge choices
        let mut choice = vec![0usize; hops.len()];
        loop {
            let path: Vec<LadderEdge> = hops.iter().zip(&choice).map(|(h, &c)| *h[c]).collect();
            let total_lag: usize = path.iter().map(|e| e.lag).sum();
            if total_lag >= 1 {
                let sign_product = path.iter().map(|e| e.sign).product::<i8>();
                loops.push(FeedbackLoop {
                    path,
                    total_lag,
                    sign_product,
                    classification: if sign_product > 0 {
                        LoopClass::PositiveFeedback
                    } else {
                        LoopClass::NegativeFeedback
                    },
                });
            }
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < hops[k].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    loops.sort_by(|a, b| {
        a.total_lag
            .cmp(&b.total_lag)
            .then_with(|| a.channels().cmp(&b.channels()))
            .then_with(|| {
                let ka: Vec<_> = a.path.iter().map(LadderEdge::order_key).collect();
                let kb: Vec<_> = b.path.iter().map(LadderEdge::order_key).collect();
                ka.cmp(&kb)
            })
    });
    loops
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    Raises,
    Lowers,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Raises => "raises",
            Direction::Lowers => "lowers",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposition {
    pub cause: usize,
    pub effect: usize,
    /// Time of the cause relative to the effect at `t`; always <= 0.
    pub cause_time_offset: i64,
    pub direction: Direction,
    pub path: Vec<LadderEdge>,
    /// Product of the signed factors along the path.
    pub strength: f64,
    /// Another path links the same cause, effect and offset with the opposite sign.
    pub conflict: bool,
}

fn time_label(offset: i64) -> String {
    match offset {
        0 => "t".to_string(),
        o if o < 0 => format!("t{o}"),
        o => format!("t+{o}"),
    }
}

impl Proposition {
    /// `B1(t-1) raises B1(t)`
    pub fn statement(&self, names: &[String]) -> String {
        format!(
            "{}({}) {} {}(t)",
            names[self.cause],
            time_label(self.cause_time_offset),
            self.direction,
            names[self.effect]
        )
    }

    /// `B1(t-1) -> B2(t) -> B1(t)`
    pub fn path_label(&self, names: &[String]) -> String {
        let mut s = format!("{}({})", names[self.cause], time_label(self.cause_time_offset));
        for e in &self.path {
            s.push_str(&format!(" -> {}(t)", names[e.to]));
        }
        s
    }

    /// Statement followed by path, strength and any conflict marker.
    pub fn describe(&self, names: &[String]) -> String {
        let mut s = format!(
            "{}  [{}; strength {}]",
            self.statement(names),
            self.path_label(names),
            crate::io::format_signed(self.strength)
        );
        if self.conflict {
            s.push_str("  conflict");
        }
        s
    }

    fn sort_key(&self) -> (bool, i64, usize, Vec<(usize, usize, usize)>) {
        (
            self.cause_time_offset == 0,
            -self.cause_time_offset,
            self.path.len(),
            self.path.iter().map(|e| (e.from, e.to, e.lag)).collect(),
        )
    }
}

pub const DEFAULT_MAX_STRUCTURAL_HOPS: usize = 2;

/// Propositions from every path made of one lagged edge followed by up to
/// `max_structural_hops` structural edges (channels at time t not repeated),
/// plus one per structural edge on its own.
pub fn generate_propositions(g: &LadderGraph, max_structural_hops: usize) -> Vec<Proposition> {
    let n = g.channel_count();
    let mut structural_from: Vec<Vec<&LadderEdge>> = vec![Vec::new(); n];
    for e in g.structural_edges() {
        structural_from[e.from].push(e);
    }

    fn make(path: &[LadderEdge]) -> Proposition {
        let strength: f64 = path.iter().map(LadderEdge::value).product();
        Proposition {
            cause: path[0].from,
            effect: path[path.len() - 1].to,
            cause_time_offset: -(path[0].lag as i64),
            direction: if strength > 0.0 {
                Direction::Raises
            } else {
                Direction::Lowers
            },
            path: path.to_vec(),
            strength,
            conflict: false,
        }
    }

    fn extend(
        structural_from: &[Vec<&LadderEdge>],
        path: &mut Vec<LadderEdge>,
        visited: &mut Vec<usize>,
        hops_left: usize,
        out: &mut Vec<Proposition>,
    ) {
        out.push(make(path));
        if hops_left == 0 {
            return;
        }
        let head = path[path.len() - 1].to;
        for e in &structural_from[head] {
            if visited.contains(&e.to) {
                continue;
            }
            path.push(**e);
            visited.push(e.to);
            extend(structural_from, path, visited, hops_left - 1, out);
            visited.pop();
            path.pop();
        }
    }

    let mut out = Vec::new();
    for e in g.lagged_edges() {
        let mut path = vec![*e];
        let mut visited = vec![e.to];
        extend(&structural_from, &mut path, &mut visited, max_structural_hops, &mut out);
    }
    out.extend(g.structural_edges().map(|e| make(std::slice::from_ref(e))));

    out.sort_by_key(|p| p.sort_key());
    out.dedup_by(|a, b| a.sort_key() == b.sort_key());

    let mut signs: BTreeMap<(usize, usize, i64), (bool, bool)> = BTreeMap::new();
    for p in &out {
        let entry = signs.entry((p.cause, p.effect, p.cause_time_offset)).or_default();
        match p.direction {
            Direction::Raises => entry.0 = true,
            Direction::Lowers => entry.1 = true,
        }
    }
    for p in &mut out {
        let (up, down) = signs[&(p.cause, p.effect, p.cause_time_offset)];
        p.conflict = up && down;
    }
    out
}

impl fmt::Display for LadderEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}->{} lag={} {}",
            self.kind,
            self.from,
            self.to,
            self.lag,
            crate::io::format_signed(self.value())
        )
    }
}

impl LadderGraph {
    /// `B2 -> B1 INS +0.1408`
    pub fn describe_edge(&self, e: &LadderEdge) -> String {
        format!(
            "{} -> {} {} {}",
            self.name(e.from),
            self.name(e.to),
            e.kind,
            crate::io::format_signed(e.value())
        )
    }
}
