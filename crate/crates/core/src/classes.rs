//! Variable marking, selection functions and syntactic class membership.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{
    build_dg, build_edg, existential_ranks, finite_existential_positions, finite_rank_positions,
    Rank,
};
use crate::model::{Position, PositionSet, Program, Rule, Sym};

/// Marked variables per rule. All occurrences of a variable in one body share
/// its status, so occurrences are derived from the per-rule variable sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Marking {
    pub marked: Vec<BTreeSet<Sym>>,
}

impl Marking {
    pub fn is_marked(&self, rule: usize, v: &Sym) -> bool {
        self.marked[rule].contains(v)
    }

    /// Marked occurrences as (rule index, body atom index, argument index).
    pub fn occurrences(&self, rules: &[Rule]) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for (ri, r) in rules.iter().enumerate() {
            for (ai, a) in r.body.iter().enumerate() {
                for (k, t) in a.args.iter().enumerate() {
                    if t.as_var().is_some_and(|v| self.marked[ri].contains(v)) {
                        out.insert((ri, ai, k));
                    }
                }
            }
        }
        out
    }
}

pub fn mark_variables(rules: &[Rule]) -> Marking {
    let order: Vec<usize> = (0..rules.len()).collect();
    mark_variables_in_order(rules, &order)
}

/// Marking with the propagation step visiting rules in `order`; the fixpoint
/// does not depend on it.
pub fn mark_variables_in_order(rules: &[Rule], order: &[usize]) -> Marking {
    let mut marked: Vec<BTreeSet<Sym>> = rules
        .iter()
        .map(|r| {
            let head: BTreeSet<&Sym> = r.head.vars().collect();
            r.body_vars()
                .into_iter()
                .filter(|v| !head.contains(v))
                .cloned()
                .collect()
        })
        .collect();
    loop {
        let mut marked_pos = PositionSet::new();
        for (ri, r) in rules.iter().enumerate() {
            for a in &r.body {
                for (p, t) in a.positions() {
                    if t.as_var().is_some_and(|v| marked[ri].contains(v)) {
                        marked_pos.insert(p);
                    }
                }
            }
        }
        let mut changed = false;
        for &ri in order {
            let r = &rules[ri];
            let body = r.body_vars();
            for (p, t) in r.head.positions() {
                if let Some(v) = t.as_var() {
                    if marked_pos.contains(&p) && body.contains(v) && marked[ri].insert(v.clone()) {
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return Marking { marked };
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectionFunction {
    Bottom,
    Rank,
    Exists,
    /// Explicit position set standing in for a non-computable selection.
    Oracle(PositionSet),
}

impl fmt::Display for SelectionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionFunction::Bottom => f.write_str("bot"),
            SelectionFunction::Rank => f.write_str("rank"),
            SelectionFunction::Exists => f.write_str("exists"),
            SelectionFunction::Oracle(_) => f.write_str("oracle"),
        }
    }
}

/// The positions picked by `sel` on `program`.
pub fn select(sel: &SelectionFunction, program: &Program) -> Result<PositionSet> {
    let all = program.positions();
    let finite = |(set, ranks): (PositionSet, crate::graph::RankMap)| -> PositionSet {
        // Positions outside every rule have rank 0.
        all.iter()
            .filter(|p| set.contains(*p) || !ranks.contains_key(*p))
            .cloned()
            .collect()
    };
    match sel {
        SelectionFunction::Bottom => Ok(PositionSet::new()),
        SelectionFunction::Rank => Ok(finite(finite_rank_positions(&program.rules))),
        SelectionFunction::Exists => Ok(finite(finite_existential_positions(&program.rules))),
        SelectionFunction::Oracle(ps) => {
            if let Some(p) = ps.iter().find(|p| !all.contains(*p)) {
                return Err(Error::UnknownPosition(p.to_string()));
            }
            Ok(ps.clone())
        }
    }
}

/// A repeated marked body variable with no occurrence at a selected position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub rule_id: String,
    pub var: Sym,
    pub positions: Vec<Position>,
}

impl Witness {
    pub fn to_json(&self) -> Value {
        json!({
            "rule": self.rule_id,
            "var": self.var.as_ref(),
            "positions": self.positions.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.positions.iter().map(|p| p.to_string()).collect();
        write!(f, "{}: {} at {}", self.rule_id, self.var, ps.join(","))
    }
}

/// Violations of syn-sch for the position set `selected`.
pub fn syn_sch_witnesses(rules: &[Rule], selected: &PositionSet) -> Vec<Witness> {
    let marking = mark_variables(rules);
    let mut out = Vec::new();
    for (ri, r) in rules.iter().enumerate() {
        for x in r.repeated_body_vars() {
            if !marking.is_marked(ri, &x) {
                continue;
            }
            let positions: Vec<Position> = r
                .body
                .iter()
                .flat_map(|a| a.positions())
                .filter(|(_, t)| t.as_var() == Some(&x))
                .map(|(p, _)| p)
                .collect();
            if positions.iter().any(|p| selected.contains(p)) {
                continue;
            }
            out.push(Witness {
                rule_id: r.id.clone(),
                var: x,
                positions,
            });
        }
    }
    out
}

pub fn is_syn_sch(program: &Program, sel: &SelectionFunction) -> Result<(bool, Vec<Witness>)> {
    let selected = select(sel, program)?;
    let w = syn_sch_witnesses(&program.rules, &selected);
    Ok((w.is_empty(), w))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassReport {
    pub wa: bool,
    pub ja: bool,
    pub sticky: bool,
    pub ws: bool,
    pub jws: bool,
    /// Positions of infinite rank.
    pub infinite_rank: Vec<Position>,
    /// EDG nodes that lie on or after a cycle.
    pub cyclic_existentials: Vec<String>,
    pub sticky_witnesses: Vec<Witness>,
    pub ws_witnesses: Vec<Witness>,
    pub jws_witnesses: Vec<Witness>,
}

pub fn classify(rules: &[Rule]) -> ClassReport {
    let ranks = build_dg(rules).ranks();
    let edg = build_edg(rules);
    let lengths = edg.path_lengths();
    let pi_f: PositionSet = ranks.iter().filter(|(_, r)| r.is_finite()).map(|(p, _)| p.clone()).collect();
    let (pi_e, _) = existential_ranks(rules, &edg, &lengths);
    let sticky_witnesses = syn_sch_witnesses(rules, &PositionSet::new());
    let ws_witnesses = syn_sch_witnesses(rules, &pi_f);
    let jws_witnesses = syn_sch_witnesses(rules, &pi_e);
    ClassReport {
        wa: ranks.values().all(|r| r.is_finite()),
        ja: lengths.iter().all(|r| r.is_finite()),
        sticky: sticky_witnesses.is_empty(),
        ws: ws_witnesses.is_empty(),
        jws: jws_witnesses.is_empty(),
        infinite_rank: ranks
            .iter()
            .filter(|(_, r)| **r == Rank::Infinite)
            .map(|(p, _)| p.clone())
            .collect(),
        cyclic_existentials: edg
            .nodes
            .iter()
            .zip(&lengths)
            .filter(|(_, l)| **l == Rank::Infinite)
            .map(|(n, _)| n.to_string())
            .collect(),
        sticky_witnesses,
        ws_witnesses,
        jws_witnesses,
    }
}

impl ClassReport {
    pub fn to_json(&self) -> Value {
        let ws = |w: &[Witness]| w.iter().map(Witness::to_json).collect::<Vec<_>>();
        json!({
            "WA": self.wa,
            "JA": self.ja,
            "Sticky": self.sticky,
            "WS": self.ws,
            "JWS": self.jws,
            "witnesses": {
                "WA": self.infinite_rank.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                "JA": self.cyclic_existentials,
                "Sticky": ws(&self.sticky_witnesses),
                "WS": ws(&self.ws_witnesses),
                "JWS": ws(&self.jws_witnesses),
            },
        })
    }

    /// (name, flag) in display order.
    pub fn flags(&self) -> [(&'static str, bool); 5] {
        [
            ("WA", self.wa),
            ("JA", self.ja),
            ("Sticky", self.sticky),
            ("WS", self.ws),
            ("JWS", self.jws),
        ]
    }
}
