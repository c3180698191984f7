//! Query-driven chase with Π-homomorphism blocking, freezing and resumptions,
//! and the SChQA answering procedure built on it.

use std::collections::{BTreeSet, HashSet};

use serde_json::{json, Value};

use crate::chase::{check_s_stickiness, Engine, MemoKey, Mode, StickinessVerdict};
use crate::classes::{is_syn_sch, select, SelectionFunction};
use crate::error::{Error, Result};
use crate::model::{
    apply_assignment, apply_atom, evaluate_cq, freeze_nulls, is_pi_homomorphic, Assignment,
    ConjunctiveQuery, Instance, PositionSet, Program, Rule, Term,
};
use crate::parser::term_json;

/// Working state of the query-driven chase.
#[derive(Clone, Debug)]
pub struct ChaseState {
    engine: Engine,
    pub program: Program,
    pub sel_positions: PositionSet,
    pub resumptions_done: usize,
}

impl ChaseState {
    /// Fresh state holding the EDB.
    pub fn new(program: &Program, sel_positions: PositionSet) -> ChaseState {
        ChaseState {
            engine: Engine::new(&program.edb, false),
            program: program.clone(),
            sel_positions,
            resumptions_done: 0,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.engine.instance
    }

    pub fn null_counter(&self) -> u32 {
        self.engine.next_null
    }

    pub fn steps(&self) -> usize {
        self.engine.steps
    }

    pub(crate) fn applied(&self) -> &HashSet<MemoKey> {
        &self.engine.memo
    }

    fn saturate(&mut self, since: usize) {
        let pi = self.sel_positions.clone();
        self.engine
            .saturate(&self.program.rules, Mode::Restricted(&pi), since, None);
    }

    /// Replaces every null by its frozen counterpart. The memo is keyed by
    /// instance indices, which freezing preserves.
    pub fn freeze(&mut self) {
        let (frozen, _) = freeze_nulls(&self.engine.instance);
        self.engine.instance = frozen;
    }

    /// One resumption: freeze every null and saturate again.
    fn resume_once(&mut self) {
        self.freeze();
        self.resumptions_done += 1;
        self.saturate(0);
    }
}

/// Whether `(rule, assignment)` may fire on `state`.
pub fn is_applicable(rule: &Rule, assignment: &Assignment, state: &ChaseState) -> bool {
    let Ok(image) = apply_assignment(assignment, &rule.body) else {
        return false;
    };
    let inst = state.instance();
    if !image.iter().all(|a| inst.contains(a)) {
        return false;
    }
    let mut theta = assignment.clone();
    for (k, z) in rule.exist_vars.iter().enumerate() {
        theta.insert(z.clone(), Term::Null(state.null_counter() + k as u32));
    }
    let Ok(head) = apply_atom(&theta, &rule.head) else {
        return false;
    };
    if inst
        .with_pred(&head.pred)
        .iter()
        .any(|&i| is_pi_homomorphic(&head, inst.get(i), &state.sel_positions))
    {
        return false;
    }
    let ri = state.program.rules.iter().position(|r| r == rule);
    let used: Vec<usize> = image.iter().filter_map(|a| inst.index_of(a)).collect();
    !ri.is_some_and(|ri| state.applied().contains(&(ri, used)))
}

/// Saturation followed by `rounds` resumptions.
pub fn qchase_rounds(program: &Program, sel_positions: PositionSet, rounds: usize) -> ChaseState {
    let mut state = ChaseState::new(program, sel_positions);
    state.saturate(0);
    resume(state, rounds)
}

/// The query chase with `M_Q` resumptions.
pub fn qchase(
    program: &Program,
    query: &ConjunctiveQuery,
    sel: &SelectionFunction,
) -> Result<ChaseState> {
    let pi = select(sel, program)?;
    Ok(qchase_rounds(program, pi, query.m_q()))
}

/// Adds `extra` freeze-and-saturate rounds to an existing state.
pub fn resume(mut state: ChaseState, extra: usize) -> ChaseState {
    for _ in 0..extra {
        state.resume_once();
    }
    state
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnswerSet {
    /// Null-free answers.
    pub tuples: BTreeSet<Vec<Term>>,
    /// Every answer on the chased instance, nulls included.
    pub raw: BTreeSet<Vec<Term>>,
}

impl AnswerSet {
    pub fn from_raw(raw: BTreeSet<Vec<Term>>) -> AnswerSet {
        let tuples = raw
            .iter()
            .filter(|t| !t.iter().any(Term::is_any_null))
            .cloned()
            .collect();
        AnswerSet { tuples, raw }
    }

    /// Answers rendered one per line, arguments comma-separated.
    pub fn render_text(&self, boolean: bool) -> String {
        if boolean {
            return format!("{}\n", !self.tuples.is_empty());
        }
        self.tuples
            .iter()
            .map(|t| {
                let cols: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                format!("{}\n", cols.join(","))
            })
            .collect()
    }

    pub fn to_json(&self, boolean: bool) -> Value {
        let rows = |s: &BTreeSet<Vec<Term>>| {
            s.iter()
                .map(|t| t.iter().map(term_json).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        let mut v = json!({
            "format_version": crate::parser::FORMAT_VERSION,
            "answers": rows(&self.tuples),
            "raw": rows(&self.raw),
        });
        if boolean {
            v["holds"] = json!(!self.tuples.is_empty());
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct QaOptions {
    pub strict: bool,
    /// Overrides `M_Q`.
    pub resumptions: Option<usize>,
    /// Step budget of the semantic refuter in strict mode.
    pub refuter_budget: usize,
}

impl Default for QaOptions {
    fn default() -> QaOptions {
        QaOptions {
            strict: false,
            resumptions: None,
            refuter_budget: 1000,
        }
    }
}

/// Answers and the final state of the query chase.
pub fn schqa_with_state(
    program: &Program,
    query: &ConjunctiveQuery,
    sel: &SelectionFunction,
    opts: &QaOptions,
) -> Result<(AnswerSet, ChaseState)> {
    program.check_query(query)?;
    if opts.strict {
        let (ok, witnesses) = is_syn_sch(program, sel)?;
        if !ok {
            if let StickinessVerdict::Violation(v) =
                check_s_stickiness(program, sel, opts.refuter_budget)?
            {
                let w: Vec<String> = witnesses.iter().map(|w| w.to_string()).collect();
                return Err(Error::NotInClass(format!(
                    "selection {sel}: {v}; syntactic witnesses: {}",
                    w.join("; ")
                )));
            }
        }
    }
    let pi = select(sel, program)?;
    let state = qchase_rounds(program, pi, opts.resumptions.unwrap_or(query.m_q()));
    let answers = AnswerSet::from_raw(evaluate_cq(query, state.instance()));
    Ok((answers, state))
}

pub fn schqa(
    program: &Program,
    query: &ConjunctiveQuery,
    sel: &SelectionFunction,
    strict: bool,
) -> Result<AnswerSet> {
    let opts = QaOptions {
        strict,
        ..QaOptions::default()
    };
    schqa_with_state(program, query, sel, &opts).map(|(a, _)| a)
}

/// `p·(s+q+1)^r`: predicates, selected-value count, query variables, max arity.
pub fn proof_height_bound(program: &Program, query: &ConjunctiveQuery, s: usize) -> u128 {
    let mut schema = program.schema.clone();
    for a in &query.body {
        schema.entry(a.pred.clone()).or_insert(a.arity());
    }
    let p = schema.len() as u128;
    let r = schema.values().copied().max().unwrap_or(0) as u32;
    let q = query.var_count() as u128;
    p.saturating_mul((s as u128 + q + 1).saturating_pow(r))
}

/// Distinct values at selected positions of the state, the measured `s`.
pub fn selected_value_count(state: &ChaseState) -> usize {
    let mut values = BTreeSet::new();
    for a in state.instance().iter() {
        for (p, t) in a.positions() {
            if state.sel_positions.contains(&p) {
                values.insert(t.clone());
            }
        }
    }
    values.len()
}
