//! The classic chase with a budget, the derivation relation it records, and
//! the bounded refuter for semantic S-stickiness.
//!
//! Both this chase and the query-driven chase in [`crate::qa`] run on the
//! same level-saturation engine. Each level collects every pair applicable on
//! the instance as it stood when the level began, sorts them canonically and
//! applies them; atoms produced during a level only feed the next one.
//! Within a level, rules without existential variables go first, then rules
//! are taken by index and pairs by body image. Under a step budget, images of
//! existential rules are enumerated in that order and only up to the budget.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde_json::{json, Value};

use crate::classes::{select, SelectionFunction};
use crate::error::{Error, Result};
use crate::model::{
    apply_atom, bind_atoms, for_each_match, for_each_match_ordered, for_each_match_pruned, is_pi_homomorphic, Assignment, Atom, Instance, PositionSet,
    Program, Rule, Sym, Term,
};
use crate::parser::{atom_json, term_json};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaseStep {
    pub index: usize,
    pub rule_index: usize,
    pub rule_id: String,
    pub assignment: Assignment,
    pub consumed: Vec<Atom>,
    pub produced: Atom,
}

impl ChaseStep {
    pub fn to_json(&self) -> Value {
        json!({
            "step": self.index,
            "rule": self.rule_id,
            "assignment": self.assignment.iter()
                .map(|(k, v)| (k.to_string(), term_json(v)))
                .collect::<serde_json::Map<_, _>>(),
            "consumed": self.consumed.iter().map(atom_json).collect::<Vec<_>>(),
            "produced": atom_json(&self.produced),
        })
    }
}

/// The direct relation "consumed by the step producing"; its transitive
/// closure is computed on demand.
#[derive(Clone, Debug, Default)]
pub struct DerivationRelation {
    nodes: HashSet<Atom>,
    succ: HashMap<Atom, BTreeSet<Atom>>,
}

impl DerivationRelation {
    fn new(inst: &Instance) -> DerivationRelation {
        DerivationRelation {
            nodes: inst.iter().cloned().collect(),
            succ: HashMap::new(),
        }
    }

    fn record(&mut self, consumed: &[Atom], produced: &Atom) {
        self.nodes.insert(produced.clone());
        for a in consumed {
            self.succ.entry(a.clone()).or_default().insert(produced.clone());
        }
    }

    pub fn direct(&self) -> impl Iterator<Item = (&Atom, &Atom)> {
        self.succ.iter().flat_map(|(a, bs)| bs.iter().map(move |b| (a, b)))
    }

    /// Atoms reachable from `a` by one or more direct steps.
    pub fn descendants(&self, a: &Atom) -> BTreeSet<Atom> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![a];
        while let Some(x) = stack.pop() {
            if let Some(next) = self.succ.get(x) {
                for b in next {
                    if seen.insert(b.clone()) {
                        stack.push(b);
                    }
                }
            }
        }
        seen
    }

    pub fn derives(&self, a: &Atom, b: &Atom) -> Result<bool> {
        for x in [a, b] {
            if !self.nodes.contains(x) {
                return Err(Error::UnknownAtom(x.to_string()));
            }
        }
        Ok(self.descendants(a).contains(b))
    }
}

/// Rule index and body image as instance indices. Indices are stable: the
/// instance only grows, and freezing keeps the insertion order.
pub(crate) type MemoKey = (usize, Vec<usize>);

/// Which pairs count as applicable.
#[derive(Clone, Copy)]
pub(crate) enum Mode<'a> {
    /// Body present and pair not yet applied.
    Classic,
    /// Additionally, the head with fresh nulls must not be Π-homomorphic to
    /// an atom already present.
    Restricted(&'a PositionSet),
}

#[derive(Clone, Debug)]
pub(crate) struct Engine {
    pub instance: Instance,
    pub memo: HashSet<MemoKey>,
    pub next_null: u32,
    pub steps: usize,
    pub trace: Option<Vec<ChaseStep>>,
    pub derivation: Option<DerivationRelation>,
}

impl Engine {
    pub fn new(edb: &Instance, record: bool) -> Engine {
        Engine {
            instance: edb.clone(),
            memo: HashSet::new(),
            next_null: 1,
            steps: 0,
            trace: record.then(Vec::new),
            derivation: record.then(|| DerivationRelation::new(edb)),
        }
    }

    /// Saturates from the delta starting at insertion index `since`. Returns
    /// false if the step budget ran out with work left.
    pub fn saturate(
        &mut self,
        rules: &[Rule],
        mode: Mode<'_>,
        mut since: usize,
        budget: Option<usize>,
    ) -> bool {
        loop {
            let level_start = self.instance.len();
            // (existential, rule index, body image as instance indices)
            type Key = (bool, usize, Vec<usize>);
            let inst = &self.instance;
            let cmp = |a: &Key, b: &Key| {
                (a.0, a.1)
                    .cmp(&(b.0, b.1))
                    .then_with(|| a.2.iter().map(|&i| inst.get(i)).cmp(b.2.iter().map(|&i| inst.get(i))))
            };
            let mut pairs: Vec<Key> = Vec::new();
            // Datalog candidates sharing a head: the first one found fires.
            let by_head: RefCell<HashSet<Atom>> = RefCell::new(HashSet::new());
            let cap = match (mode, budget) {
                (Mode::Classic, Some(b)) => Some(b.saturating_sub(self.steps).saturating_add(1)),
                _ => None,
            };
            for (ri, r) in rules.iter().enumerate() {
                let memo = &self.memo;
                let existential = r.is_existential();
                if let (Some(c), true) = (cap, existential) {
                    // Every older image of an existential rule was applied, or
                    // the budget would have run out, so the smallest unapplied
                    // images are the smallest ones touching the delta, and
                    // enumeration can stop after them. Pairs collected so far
                    // all sort before this rule's.
                    let mut quota = c.saturating_sub(pairs.len());
                    if quota == 0 {
                        continue;
                    }
                    // Few new images: collect and sort them. Many: walk them
                    // in order and stop at the quota.
                    let limit = 4 * quota + 1024;
                    let mut found: Vec<Vec<usize>> = Vec::new();
                    for_each_match(&r.body, inst, &Assignment::new(), Some(since), &mut |_, used| {
                        found.push(used.to_vec());
                        found.len() <= limit
                    });
                    if found.len() <= limit {
                        found.retain(|used| !memo.contains(&(ri, used.clone())));
                        found.sort_by(|a, b| a.iter().map(|&i| inst.get(i)).cmp(b.iter().map(|&i| inst.get(i))));
                        found.truncate(quota);
                        pairs.extend(found.into_iter().map(|used| (true, ri, used)));
                        continue;
                    }
                    for_each_match_ordered(&r.body, inst, since, &mut |_, used: &[usize]| {
                        let key = (ri, used.to_vec());
                        if !memo.contains(&key) {
                            pairs.push((true, key.0, key.1));
                            quota -= 1;
                        }
                        quota > 0
                    });
                    continue;
                }
                let head_vars: Vec<Sym> = r.head.vars().cloned().collect();
                // A Datalog match whose head is present or pending never fires.
                let prune = |theta: &Assignment| {
                    !existential
                        && head_vars.iter().all(|v| theta.contains_key(v))
                        && apply_atom(theta, &r.head)
                            .is_ok_and(|h| inst.contains(&h) || by_head.borrow().contains(&h))
                };
                let on = &mut |theta: &Assignment, used: &[usize]| {
                    let key = (ri, used.to_vec());
                    if existential {
                        if !memo.contains(&key) {
                            pairs.push((true, key.0, key.1));
                        }
                    } else {
                        let head = apply_atom(theta, &r.head).expect("frontier variables are bound");
                        by_head.borrow_mut().insert(head);
                        pairs.push((false, key.0, key.1));
                    }
                    // Every surviving classic candidate adds one atom, so only
                    // the smallest ones within the remaining budget matter.
                    if let Some(c) = cap {
                        if pairs.len() > 4 * c + 1024 {
                            pairs.sort_by(&cmp);
                            pairs.truncate(c);
                        }
                    }
                    true
                };
                for_each_match_pruned(&r.body, inst, &Assignment::new(), Some(since), &head_vars, &prune, on);
            }
            pairs.sort_by(&cmp);
            if let Some(c) = cap {
                pairs.truncate(c);
            }
            for (_, ri, used) in pairs {
                let rule = &rules[ri];
                let image: Vec<Atom> = used.iter().map(|&i| self.instance.get(i).clone()).collect();
                let mut theta = bind_atoms(&rule.body, &image).expect("image matches the body");
                for (k, z) in rule.exist_vars.iter().enumerate() {
                    theta.insert(z.clone(), Term::Null(self.next_null + k as u32));
                }
                let head = apply_atom(&theta, &rule.head).expect("frontier variables are bound");
                let key = (ri, used);
                match mode {
                    Mode::Classic => {
                        if self.instance.contains(&head) {
                            self.memo.insert(key);
                            continue;
                        }
                    }
                    Mode::Restricted(pi) => {
                        let blocked = self
                            .instance
                            .with_pred(&head.pred)
                            .iter()
                            .any(|&i| is_pi_homomorphic(&head, self.instance.get(i), pi));
                        if blocked {
                            continue;
                        }
                    }
                }
                if budget.is_some_and(|b| self.steps >= b) {
                    return false;
                }
                self.next_null += rule.exist_vars.len() as u32;
                self.steps += 1;
                if let Some(d) = &mut self.derivation {
                    d.record(&image, &head);
                }
                if let Some(t) = &mut self.trace {
                    t.push(ChaseStep {
                        index: self.steps,
                        rule_index: ri,
                        rule_id: rule.id.clone(),
                        assignment: theta,
                        consumed: image,
                        produced: head.clone(),
                    });
                }
                self.memo.insert(key);
                self.instance.insert(head);
            }
            if self.instance.len() == level_start {
                return true;
            }
            since = level_start;
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChaseResult {
    pub instance: Instance,
    pub derivation: DerivationRelation,
    pub steps: Vec<ChaseStep>,
    pub terminated: bool,
}

/// Runs the classic chase for at most `budget` steps (atoms added).
pub fn classic_chase(program: &Program, budget: usize) -> ChaseResult {
    let mut e = Engine::new(&program.edb, true);
    let terminated = e.saturate(&program.rules, Mode::Classic, 0, Some(budget));
    ChaseResult {
        instance: e.instance,
        derivation: e.derivation.unwrap_or_default(),
        steps: e.trace.unwrap_or_default(),
        terminated,
    }
}

pub fn derives(rel: &DerivationRelation, a: &Atom, b: &Atom) -> Result<bool> {
    rel.derives(a, b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StickinessViolation {
    pub step: usize,
    pub rule_id: String,
    pub var: Sym,
    pub value: Term,
    /// Atom derived from the step that lacks the value.
    pub offending: Atom,
}

impl fmt::Display for StickinessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {} ({}): value {} of join variable {} is missing from {}",
            self.step, self.rule_id, self.value, self.var, self.offending
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StickinessVerdict {
    Violation(StickinessViolation),
    NoViolationWithinBudget,
}

/// Searches the first `budget` classic chase steps for a join value, bound to
/// a variable with no selected body position, that fails to propagate.
pub fn check_s_stickiness(
    program: &Program,
    sel: &SelectionFunction,
    budget: usize,
) -> Result<StickinessVerdict> {
    let selected = select(sel, program)?;
    let run = classic_chase(program, budget);
    let mut below: HashMap<Atom, BTreeSet<Atom>> = HashMap::new();
    for step in &run.steps {
        let rule = &program.rules[step.rule_index];
        for x in rule.repeated_body_vars() {
            let exempt = rule
                .body
                .iter()
                .flat_map(|a| a.positions())
                .any(|(p, t)| t.as_var() == Some(&x) && selected.contains(&p));
            if exempt {
                continue;
            }
            let value = &step.assignment[&x];
            let violation = |offending: &Atom| {
                StickinessVerdict::Violation(StickinessViolation {
                    step: step.index,
                    rule_id: step.rule_id.clone(),
                    var: x.clone(),
                    value: value.clone(),
                    offending: offending.clone(),
                })
            };
            if !step.produced.args.contains(value) {
                return Ok(violation(&step.produced));
            }
            let desc = below
                .entry(step.produced.clone())
                .or_insert_with(|| run.derivation.descendants(&step.produced));
            if let Some(b) = desc.iter().find(|b| !b.args.contains(value)) {
                return Ok(violation(b));
            }
        }
    }
    Ok(StickinessVerdict::NoViolationWithinBudget)
}
