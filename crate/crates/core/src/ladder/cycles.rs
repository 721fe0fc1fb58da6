//! Elementary circuit enumeration on small directed graphs given as
//! adjacency lists. Self-loops are circuits of length 1.
//!
//! Every circuit is reported starting from its smallest vertex.

/// All elementary circuits, using Johnson's algorithm (strongly connected
/// components of the subgraph induced by vertices `>= s`, blocking sets).
pub fn elementary_circuits(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let adj: Vec<Vec<usize>> = adj.iter().map(|a| dedup_sorted(a)).collect();
    let mut out = Vec::new();
    let mut s = 0;
    while s < n {
        let Some(component) = least_cyclic_component(&adj, s) else {
            break;
        };
        s = *component.iter().min().unwrap();
        let mut search = Search {
            adj: &adj,
            start: s,
            in_comp: vec![false; n],
            blocked: vec![false; n],
            blocked_by: vec![Vec::new(); n],
            stack: Vec::new(),
            out: &mut out,
        };
        for &v in &component {
            search.in_comp[v] = true;
        }
        search.circuit(s);
        s += 1;
    }
    out
}

struct Search<'a> {
    adj: &'a [Vec<usize>],
    start: usize,
    in_comp: Vec<bool>,
    blocked: Vec<bool>,
    blocked_by: Vec<Vec<usize>>,
    stack: Vec<usize>,
    out: &'a mut Vec<Vec<usize>>,
}

impl Search<'_> {
    fn circuit(&mut self, v: usize) -> bool {
        let mut found = false;
        self.stack.push(v);
        self.blocked[v] = true;
        for &w in &self.adj[v] {
            if !self.in_comp[w] {
                continue;
            }
            if w == self.start {
                self.out.push(self.stack.clone());
                found = true;
            } else if !self.blocked[w] && self.circuit(w) {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &w in &self.adj[v] {
                if self.in_comp[w] && !self.blocked_by[w].contains(&v) {
                    self.blocked_by[w].push(v);
                }
            }
        }
        self.stack.pop();
        found
    }

    fn unblock(&mut self, u: usize) {
        self.blocked[u] = false;
        let waiting = std::mem::take(&mut self.blocked_by[u]);
        for w in waiting {
            if self.blocked[w] {
                self.unblock(w);
            }
        }
    }
}

/// The strongly connected component (of the subgraph on vertices `>= from`)
/// that contains a cycle and has the smallest least vertex.
fn least_cyclic_component(adj: &[Vec<usize>], from: usize) -> Option<Vec<usize>> {
    tarjan_scc(adj, from)
        .into_iter()
        .filter(|c| c.len() > 1 || adj[c[0]].contains(&c[0]))
        .min_by_key(|c| *c.iter().min().unwrap())
}

fn tarjan_scc(adj: &[Vec<usize>], from: usize) -> Vec<Vec<usize>> {
    struct State {
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        comps: Vec<Vec<usize>>,
    }
    fn visit(v: usize, adj: &[Vec<usize>], from: usize, st: &mut State) {
        st.index[v] = Some(st.next);
        st.low[v] = st.next;
        st.next += 1;
        st.stack.push(v);
        st.on_stack[v] = true;
        for &w in &adj[v] {
            if w < from {
                continue;
            }
            match st.index[w] {
                None => {
                    visit(w, adj, from, st);
                    st.low[v] = st.low[v].min(st.low[w]);
                }
                Some(iw) if st.on_stack[w] => st.low[v] = st.low[v].min(iw),
                _ => {}
            }
        }
        if Some(st.low[v]) == st.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = st.stack.pop() {
                st.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            st.comps.push(comp);
        }
    }
    let n = adj.len();
    let mut st = State {
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        next: 0,
        comps: Vec::new(),
    };
    for v in from..n {
        if st.index[v].is_none() {
            visit(v, adj, from, &mut st);
        }
    }
    st.comps
}

/// Elementary circuits with at most `max_len` edges. Depth-first from each
/// start vertex over larger-numbered vertices only, so every circuit is found
/// exactly once; no blocking, which would be unsound under a length bound.
pub fn bounded_circuits(adj: &[Vec<usize>], max_len: usize) -> Vec<Vec<usize>> {
    fn extend(
        adj: &[Vec<usize>],
        start: usize,
        max_len: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let v = *path.last().unwrap();
        for &w in &adj[v] {
            if w == start {
                out.push(path.clone());
            } else if w > start && !on_path[w] && path.len() < max_len {
                path.push(w);
                on_path[w] = true;
                extend(adj, start, max_len, path, on_path, out);
                on_path[w] = false;
                path.pop();
            }
        }
    }
    let adj: Vec<Vec<usize>> = adj.iter().map(|a| dedup_sorted(a)).collect();
    let mut out = Vec::new();
    if max_len == 0 {
        return out;
    }
    let mut on_path = vec![false; adj.len()];
    for s in 0..adj.len() {
        let mut path = vec![s];
        on_path[s] = true;
        extend(&adj, s, max_len, &mut path, &mut on_path, &mut out);
        on_path[s] = false;
    }
    out
}

fn dedup_sorted(a: &[usize]) -> Vec<usize> {
    let mut v = a.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}
