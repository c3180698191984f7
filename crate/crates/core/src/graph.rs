//! Dependency graph (ranks, weak acyclicity) and existential dependency graph
//! (target positions, ∃-ranks, joint acyclicity).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde_json::{json, Value};

use crate::model::{rule_positions, Position, PositionSet, Rule, Sym, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rank {
    Finite(usize),
    Infinite,
}

impl Rank {
    pub fn is_finite(self) -> bool {
        matches!(self, Rank::Finite(_))
    }

    pub fn to_json(self) -> Value {
        match self {
            Rank::Finite(n) => json!(n),
            Rank::Infinite => json!("inf"),
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Finite(n) => write!(f, "{n}"),
            Rank::Infinite => f.write_str("inf"),
        }
    }
}

pub type RankMap = BTreeMap<Position, Rank>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: PositionSet,
    pub normal_edges: BTreeSet<(Position, Position)>,
    pub special_edges: BTreeSet<(Position, Position)>,
}

pub fn build_dg(rules: &[Rule]) -> DependencyGraph {
    let mut g = DependencyGraph {
        nodes: rule_positions(rules),
        ..Default::default()
    };
    for r in rules {
        let exist_positions: Vec<Position> = r
            .head
            .positions()
            .filter(|(_, t)| t.as_var().is_some_and(|v| r.is_exist_var(v)))
            .map(|(p, _)| p)
            .collect();
        for x in r.body_vars() {
            let head_occ: Vec<Position> = r
                .head
                .positions()
                .filter(|(_, t)| t.as_var() == Some(x))
                .map(|(p, _)| p)
                .collect();
            if head_occ.is_empty() {
                continue;
            }
            for b in &r.body {
                for (p, t) in b.positions() {
                    if t.as_var() != Some(x) {
                        continue;
                    }
                    for q in &head_occ {
                        g.normal_edges.insert((p.clone(), q.clone()));
                    }
                    for q in &exist_positions {
                        g.special_edges.insert((p.clone(), q.clone()));
                    }
                }
            }
        }
    }
    g
}

impl DependencyGraph {
    /// Rank of every node: the maximum number of special edges on a path
    /// ending there, infinite when such a path can loop through one.
    pub fn ranks(&self) -> RankMap {
        let nodes: Vec<&Position> = self.nodes.iter().collect();
        let index: BTreeMap<&Position, usize> =
            nodes.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let mut g: DiGraph<(), u32> = DiGraph::new();
        for _ in &nodes {
            g.add_node(());
        }
        for (set, w) in [(&self.normal_edges, 0), (&self.special_edges, 1)] {
            for (a, b) in set {
                g.add_edge(NodeIndex::new(index[a]), NodeIndex::new(index[b]), w);
            }
        }
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0; nodes.len()];
        for (c, scc) in sccs.iter().enumerate() {
            for v in scc {
                comp[v.index()] = c;
            }
        }
        let seeds: Vec<usize> = g
            .raw_edges()
            .iter()
            .filter(|e| e.weight == 1 && comp[e.source().index()] == comp[e.target().index()])
            .map(|e| e.target().index())
            .collect();
        let infinite = reachable(&g, seeds);

        // tarjan_scc yields components in reverse topological order.
        let mut best = vec![0usize; sccs.len()];
        for c in (0..sccs.len()).rev() {
            for v in &sccs[c] {
                for e in g.edges_directed(*v, petgraph::Direction::Incoming) {
                    use petgraph::visit::EdgeRef;
                    let u = comp[e.source().index()];
                    if u != c && !infinite[e.source().index()] {
                        best[c] = best[c].max(best[u] + *e.weight() as usize);
                    }
                }
            }
        }
        nodes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let r = if infinite[i] {
                    Rank::Infinite
                } else {
                    Rank::Finite(best[comp[i]])
                };
                ((*p).clone(), r)
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let mut edges = Vec::new();
        for (kind, set) in [("normal", &self.normal_edges), ("special", &self.special_edges)] {
            for (a, b) in set {
                edges.push(json!({"from": a.to_string(), "to": b.to_string(), "kind": kind}));
            }
        }
        json!({
            "nodes": self.nodes.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "edges": edges,
        })
    }
}

fn reachable<N, E>(g: &DiGraph<N, E>, seeds: Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; g.node_count()];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for s in seeds {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for w in g.neighbors(NodeIndex::new(v)) {
            if !seen[w.index()] {
                seen[w.index()] = true;
                queue.push_back(w.index());
            }
        }
    }
    seen
}

/// Π_F together with the rank table.
pub fn finite_rank_positions(rules: &[Rule]) -> (PositionSet, RankMap) {
    let ranks = build_dg(rules).ranks();
    let finite = ranks
        .iter()
        .filter(|(_, r)| r.is_finite())
        .map(|(p, _)| p.clone())
        .collect();
    (finite, ranks)
}

pub fn is_weakly_acyclic(rules: &[Rule]) -> bool {
    build_dg(rules).ranks().values().all(|r| r.is_finite())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgNode {
    pub rule: usize,
    pub rule_id: String,
    pub var: Sym,
}

impl fmt::Display for EdgNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.rule_id, self.var)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExistentialDependencyGraph {
    pub nodes: Vec<EdgNode>,
    /// Index pairs into `nodes`.
    pub edges: BTreeSet<(usize, usize)>,
    /// `targets[i]` is T_z for `nodes[i]`.
    pub targets: Vec<PositionSet>,
}

/// B_x and H_x of one rule variable.
struct VarOcc {
    rule: usize,
    body: PositionSet,
    head: PositionSet,
}

fn occurrences(rules: &[Rule]) -> Vec<VarOcc> {
    // Keyed by (rule index, name): this is the standardizing-apart step.
    let mut occ: BTreeMap<(usize, Sym), VarOcc> = BTreeMap::new();
    for (ri, r) in rules.iter().enumerate() {
        for x in r.body_vars() {
            let mut o = VarOcc {
                rule: ri,
                body: PositionSet::new(),
                head: PositionSet::new(),
            };
            for b in &r.body {
                for (p, t) in b.positions() {
                    if t.as_var() == Some(x) {
                        o.body.insert(p);
                    }
                }
            }
            for (p, t) in r.head.positions() {
                if t.as_var() == Some(x) {
                    o.head.insert(p);
                }
            }
            occ.insert((ri, x.clone()), o);
        }
    }
    occ.into_values().collect()
}

pub fn build_edg(rules: &[Rule]) -> ExistentialDependencyGraph {
    let occ = occurrences(rules);
    let mut by_pos: BTreeMap<&Position, Vec<usize>> = BTreeMap::new();
    for (k, o) in occ.iter().enumerate() {
        for p in &o.body {
            by_pos.entry(p).or_default().push(k);
        }
    }
    let mut edg = ExistentialDependencyGraph::default();
    // Per node, the variable occurrences whose body positions lie in T_z.
    let mut covered: Vec<Vec<usize>> = Vec::new();
    for (ri, r) in rules.iter().enumerate() {
        for z in &r.exist_vars {
            let mut t = PositionSet::new();
            let mut missing: Vec<usize> = occ.iter().map(|o| o.body.len()).collect();
            let mut done = Vec::new();
            let mut queue: VecDeque<Position> = r
                .head
                .positions()
                .filter(|(_, a)| matches!(a, Term::Var(v) if v == z))
                .map(|(p, _)| p)
                .collect();
            while let Some(p) = queue.pop_front() {
                if !t.insert(p.clone()) {
                    continue;
                }
                for &k in by_pos.get(&p).map(Vec::as_slice).unwrap_or(&[]) {
                    missing[k] -= 1;
                    if missing[k] == 0 {
                        done.push(k);
                        queue.extend(occ[k].head.iter().cloned());
                    }
                }
            }
            edg.nodes.push(EdgNode {
                rule: ri,
                rule_id: r.id.clone(),
                var: z.clone(),
            });
            edg.targets.push(t);
            covered.push(done);
        }
    }
    let mut nodes_of_rule: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, n) in edg.nodes.iter().enumerate() {
        nodes_of_rule.entry(n.rule).or_default().push(j);
    }
    for (i, done) in covered.iter().enumerate() {
        // Only frontier variables carry a value into the head.
        for &k in done.iter().filter(|&&k| !occ[k].head.is_empty()) {
            for &j in nodes_of_rule.get(&occ[k].rule).map(Vec::as_slice).unwrap_or(&[]) {
                edg.edges.insert((i, j));
            }
        }
    }
    edg
}

impl ExistentialDependencyGraph {
    fn graph(&self) -> DiGraph<(), ()> {
        let mut g = DiGraph::new();
        for _ in &self.nodes {
            g.add_node(());
        }
        for &(a, b) in &self.edges {
            g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
        }
        g
    }

    /// Longest node-count path ending at each node; infinite when a cycle
    /// reaches the node. A node with no incoming path counts itself.
    pub fn path_lengths(&self) -> Vec<Rank> {
        let g = self.graph();
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0; self.nodes.len()];
        for (c, scc) in sccs.iter().enumerate() {
            for v in scc {
                comp[v.index()] = c;
            }
        }
        let cyclic: Vec<usize> = sccs
            .iter()
            .filter(|scc| scc.len() > 1 || self.edges.contains(&(scc[0].index(), scc[0].index())))
            .flat_map(|scc| scc.iter().map(|v| v.index()))
            .collect();
        let infinite = reachable(&g, cyclic);
        let mut len = vec![1usize; self.nodes.len()];
        for c in (0..sccs.len()).rev() {
            for v in &sccs[c] {
                let i = v.index();
                if infinite[i] {
                    continue;
                }
                for u in g.neighbors_directed(*v, petgraph::Direction::Incoming) {
                    len[i] = len[i].max(len[u.index()] + 1);
                }
            }
        }
        (0..self.nodes.len())
            .map(|i| if infinite[i] { Rank::Infinite } else { Rank::Finite(len[i]) })
            .collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.path_lengths().iter().all(|r| r.is_finite())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "nodes": self.nodes.iter().zip(&self.targets).map(|(n, t)| json!({
                "id": n.to_string(),
                "rule": n.rule_id,
                "var": n.var.as_ref(),
                "targets": t.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|&(a, b)| json!({
                "from": self.nodes[a].to_string(),
                "to": self.nodes[b].to_string(),
                "kind": "existential",
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn is_jointly_acyclic(rules: &[Rule]) -> bool {
    build_edg(rules).is_acyclic()
}

/// Π_F^∃ together with the ∃-rank table.
pub fn finite_existential_positions(rules: &[Rule]) -> (PositionSet, RankMap) {
    let edg = build_edg(rules);
    existential_ranks(rules, &edg, &edg.path_lengths())
}

pub(crate) fn existential_ranks(
    rules: &[Rule],
    edg: &ExistentialDependencyGraph,
    lengths: &[Rank],
) -> (PositionSet, RankMap) {
    let mut erank: RankMap = rule_positions(rules)
        .into_iter()
        .map(|p| (p, Rank::Finite(0)))
        .collect();
    for (t, len) in edg.targets.iter().zip(lengths) {
        for p in t {
            let e = erank.entry(p.clone()).or_insert(Rank::Finite(0));
            *e = (*e).max(*len);
        }
    }
    let finite = erank
        .iter()
        .filter(|(_, r)| r.is_finite())
        .map(|(p, _)| p.clone())
        .collect();
    (finite, erank)
}

pub fn ranks_json(ranks: &RankMap) -> Value {
    Value::Object(
        ranks
            .iter()
            .map(|(p, r)| (p.to_string(), r.to_json()))
            .collect(),
    )
}
