//! MagicD+ magic-sets rewriting for programs with existential rules.
//!
//! The pipeline adorns rules top-down from the query (never binding a
//! position that holds an existential variable), guards every adorned rule
//! with a magic atom, derives magic rules and seeds, and adds load rules that
//! copy extensional data into adorned predicates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::classes::{classify, ClassReport};
use crate::error::Result;
use crate::model::{Atom, ConjunctiveQuery, Instance, Program, Rule, Sym, Term};

/// A string over `b`/`f`, one letter per argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Adornment(pub String);

impl Adornment {
    pub fn is_bound(&self, i: usize) -> bool {
        self.0.as_bytes()[i] == b'b'
    }

    pub fn bound_count(&self) -> usize {
        self.0.bytes().filter(|&c| c == b'b').count()
    }

    /// `b` at constants and at variables in `bound`, `f` elsewhere.
    pub fn of_atom(atom: &Atom, bound: &BTreeSet<Sym>) -> Adornment {
        Adornment(
            atom.args
                .iter()
                .map(|t| match t {
                    Term::Var(v) if !bound.contains(v) => 'f',
                    _ => 'b',
                })
                .collect(),
        )
    }
}

impl fmt::Display for Adornment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn adorned_name(pred: &str, a: &Adornment) -> String {
    format!("{pred}__{a}")
}

pub fn magic_name(pred: &str, a: &Adornment) -> String {
    format!("mg__{pred}__{a}")
}

/// A sips restricted to a total order of the body atoms; the bound-variable
/// function is the accumulation along that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SipsPlan {
    /// Body atom indices in processing order.
    pub order: Vec<usize>,
    /// f of the head: variables at bound head positions.
    pub head_bound: BTreeSet<Sym>,
    /// `after[k]`: f of the k-th atom in `order`.
    pub after: Vec<BTreeSet<Sym>>,
}

impl SipsPlan {
    pub fn from_order(rule: &Rule, adornment: &Adornment, order: Vec<usize>) -> SipsPlan {
        let head_bound: BTreeSet<Sym> = rule
            .head
            .args
            .iter()
            .enumerate()
            .filter(|(i, _)| adornment.is_bound(*i))
            .filter_map(|(_, t)| t.as_var().cloned())
            .collect();
        let mut acc = head_bound.clone();
        let after = order
            .iter()
            .map(|&i| {
                acc.extend(rule.body[i].vars().cloned());
                acc.clone()
            })
            .collect();
        SipsPlan {
            order,
            head_bound,
            after,
        }
    }

    /// Variables bound before the k-th atom of the order is processed.
    pub fn before(&self, k: usize) -> &BTreeSet<Sym> {
        if k == 0 {
            &self.head_bound
        } else {
            &self.after[k - 1]
        }
    }
}

pub trait Sips {
    fn plan(&self, rule: &Rule, adornment: &Adornment) -> SipsPlan;
}

/// Body atoms left to right.
#[derive(Clone, Copy, Debug, Default)]
pub struct DefaultSips;

impl Sips for DefaultSips {
    fn plan(&self, rule: &Rule, adornment: &Adornment) -> SipsPlan {
        SipsPlan::from_order(rule, adornment, (0..rule.body.len()).collect())
    }
}

pub fn default_sips(rule: &Rule, adornment: &Adornment) -> SipsPlan {
    DefaultSips.plan(rule, adornment)
}

/// A seeded permutation per (rule, adornment); deterministic for a seed.
#[derive(Clone, Copy, Debug)]
pub struct ShuffledSips {
    pub seed: u64,
}

impl Sips for ShuffledSips {
    fn plan(&self, rule: &Rule, adornment: &Adornment) -> SipsPlan {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.seed.hash(&mut h);
        rule.id.hash(&mut h);
        adornment.hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        let mut order: Vec<usize> = (0..rule.body.len()).collect();
        order.shuffle(&mut rng);
        SipsPlan::from_order(rule, adornment, order)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdornedRule {
    pub source: usize,
    pub adornment: Adornment,
    /// Body in sips order with adorned predicate names, head adorned.
    pub rule: Rule,
    /// Per body atom of `rule`: the adornment if the predicate is intensional.
    pub body_adornments: Vec<Option<(Sym, Adornment)>>,
}

#[derive(Clone, Debug)]
pub struct Adorned {
    pub rules: Vec<AdornedRule>,
    pub query: ConjunctiveQuery,
    /// Adorned predicates in discovery order.
    pub trace: Vec<(Sym, Adornment)>,
    /// Query atoms' adornments, `None` for extensional atoms.
    pub query_adornments: Vec<Option<(Sym, Adornment)>>,
}

fn rename(atom: &Atom, name: &str) -> Atom {
    Atom::new(name, atom.args.clone())
}

/// Step 1: adorned rules reachable from the query.
pub fn adorn(program: &Program, query: &ConjunctiveQuery, sips: &dyn Sips) -> Adorned {
    let idb = program.intensional();
    let mut seen: BTreeSet<(Sym, Adornment)> = BTreeSet::new();
    let mut queue: VecDeque<(Sym, Adornment)> = VecDeque::new();
    let mut trace = Vec::new();
    let mut push = |p: &Sym, a: &Adornment, queue: &mut VecDeque<(Sym, Adornment)>| {
        if seen.insert((p.clone(), a.clone())) {
            queue.push_back((p.clone(), a.clone()));
            trace.push((p.clone(), a.clone()));
        }
    };
    let mut q_body = Vec::new();
    let mut query_adornments = Vec::new();
    for atom in &query.body {
        if idb.contains(&atom.pred) {
            let a = Adornment::of_atom(atom, &BTreeSet::new());
            push(&atom.pred, &a, &mut queue);
            q_body.push(rename(atom, &adorned_name(&atom.pred, &a)));
            query_adornments.push(Some((atom.pred.clone(), a)));
        } else {
            q_body.push(atom.clone());
            query_adornments.push(None);
        }
    }
    let mut rules = Vec::new();
    while let Some((pred, alpha)) = queue.pop_front() {
        for (ri, r) in program.rules.iter().enumerate() {
            if r.head.pred != pred {
                continue;
            }
            let binds_exist = r.head.args.iter().enumerate().any(|(i, t)| {
                alpha.is_bound(i) && t.as_var().is_some_and(|v| r.is_exist_var(v))
            });
            if binds_exist {
                continue;
            }
            let plan = sips.plan(r, &alpha);
            let mut body = Vec::new();
            let mut body_adornments = Vec::new();
            for (k, &bi) in plan.order.iter().enumerate() {
                let atom = &r.body[bi];
                if idb.contains(&atom.pred) {
                    let a = Adornment::of_atom(atom, plan.before(k));
                    push(&atom.pred, &a, &mut queue);
                    body.push(rename(atom, &adorned_name(&atom.pred, &a)));
                    body_adornments.push(Some((atom.pred.clone(), a)));
                } else {
                    body.push(atom.clone());
                    body_adornments.push(None);
                }
            }
            let head = rename(&r.head, &adorned_name(&pred, &alpha));
            rules.push(AdornedRule {
                source: ri,
                adornment: alpha.clone(),
                rule: Rule {
                    id: r.id.clone(),
                    body,
                    head,
                    exist_vars: r.exist_vars.clone(),
                },
                body_adornments,
            });
        }
    }
    Adorned {
        rules,
        query: ConjunctiveQuery {
            name: query.name.clone(),
            free_vars: query.free_vars.clone(),
            exist_vars: query.exist_vars.clone(),
            body: q_body,
        },
        trace,
        query_adornments,
    }
}

/// `mg__P__α` applied to the arguments of `atom` at bound positions.
pub fn magic_atom(pred: &str, a: &Adornment, atom: &Atom) -> Atom {
    let args = atom
        .args
        .iter()
        .enumerate()
        .filter(|(i, _)| a.is_bound(*i))
        .map(|(_, t)| t.clone())
        .collect();
    Atom::new(&magic_name(pred, a), args)
}

/// Step 2: guards each adorned rule with the magic atom of its head.
pub fn add_magic_atoms(adorned: &[AdornedRule], program: &Program) -> Vec<Rule> {
    adorned
        .iter()
        .map(|ar| {
            let pred = &program.rules[ar.source].head.pred;
            let mut body = vec![magic_atom(pred, &ar.adornment, &ar.rule.head)];
            body.extend(ar.rule.body.iter().cloned());
            Rule {
                id: ar.rule.id.clone(),
                body,
                head: ar.rule.head.clone(),
                exist_vars: ar.rule.exist_vars.clone(),
            }
        })
        .collect()
}

/// Step 3: one magic rule per adorned body atom, plus the seeds.
pub fn magic_rules_and_seeds(
    adorned: &[AdornedRule],
    guarded: &[Rule],
    query: &ConjunctiveQuery,
    query_adornments: &[Option<(Sym, Adornment)>],
) -> (Vec<Rule>, Vec<Atom>) {
    let mut out: Vec<Rule> = Vec::new();
    for (ar, g) in adorned.iter().zip(guarded) {
        let guard = &g.body[0];
        for (k, ad) in ar.body_adornments.iter().enumerate() {
            let Some((pred, a)) = ad else { continue };
            let atom = &ar.rule.body[k];
            let mut body = vec![guard.clone()];
            body.extend(ar.rule.body[..k].iter().cloned());
            let rule = Rule {
                id: String::new(),
                body,
                head: magic_atom(pred, a, atom),
                exist_vars: Vec::new(),
            };
            if !out.iter().any(|r| r.body == rule.body && r.head == rule.head) {
                out.push(rule);
            }
        }
    }
    let mut seeds = Vec::new();
    for (atom, ad) in query.body.iter().zip(query_adornments) {
        if let Some((pred, a)) = ad {
            let seed = magic_atom(pred, a, atom);
            if !seeds.contains(&seed) {
                seeds.push(seed);
            }
        }
    }
    (out, seeds)
}

/// Step 4: `mg__P__α(bound), P(X1..Xk) -> P__α(X1..Xk)` for every adorned
/// predicate, emitted when some intensional predicate has EDB facts.
pub fn load_rules(program: &Program, adorned_preds: &[(Sym, Adornment)]) -> Vec<Rule> {
    let idb = program.intensional();
    let has_data = program.edb.iter().any(|a| idb.contains(&a.pred));
    if !has_data {
        return Vec::new();
    }
    adorned_preds
        .iter()
        .map(|(pred, a)| {
            let args: Vec<Term> = (1..=a.0.len()).map(|i| Term::var(&format!("X{i}"))).collect();
            let base = Atom::new(pred, args);
            Rule {
                id: String::new(),
                body: vec![magic_atom(pred, a, &base), base.clone()],
                head: rename(&base, &adorned_name(pred, a)),
                exist_vars: Vec::new(),
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct MagicProgram {
    /// Guarded adorned rules, then magic rules, then load rules; EDB plus seeds.
    pub program: Program,
    pub query: ConjunctiveQuery,
    pub guarded_rules: usize,
    pub magic_rules: usize,
    pub load_rules: usize,
    pub seeds: Vec<Atom>,
    pub adorned_names: BTreeMap<(Sym, Adornment), String>,
    pub magic_names: BTreeMap<(Sym, Adornment), String>,
}

impl MagicProgram {
    pub fn is_magic_pred(pred: &str) -> bool {
        pred.starts_with("mg__")
    }
}

#[derive(Clone, Debug)]
pub struct MagicReport {
    pub input: ClassReport,
    pub output: ClassReport,
    /// `None` when the input is not JWS, so the closure property says nothing.
    pub closure_holds: Option<bool>,
}

impl MagicReport {
    pub fn to_json(&self, m: &MagicProgram) -> Value {
        let names = |map: &BTreeMap<(Sym, Adornment), String>| {
            map.iter()
                .map(|((p, a), n)| json!({"pred": p.as_ref(), "adornment": a.0, "name": n}))
                .collect::<Vec<_>>()
        };
        json!({
            "format_version": crate::parser::FORMAT_VERSION,
            "input": self.input.to_json(),
            "output": self.output.to_json(),
            "closure": self.closure_holds,
            "adorned_predicates": names(&m.adorned_names),
            "magic_predicates": names(&m.magic_names),
            "rules": {"guarded": m.guarded_rules, "magic": m.magic_rules, "load": m.load_rules},
        })
    }
}

pub fn magicd_plus(
    program: &Program,
    query: &ConjunctiveQuery,
    sips: &dyn Sips,
) -> Result<(MagicProgram, MagicReport)> {
    let adorned = adorn(program, query, sips);
    let guarded = add_magic_atoms(&adorned.rules, program);
    let (magic, seeds) =
        magic_rules_and_seeds(&adorned.rules, &guarded, &adorned.query, &adorned.query_adornments);
    let load = load_rules(program, &adorned.trace);
    let (ng, nm, nl) = (guarded.len(), magic.len(), load.len());
    let rules: Vec<Rule> = guarded
        .into_iter()
        .chain(magic)
        .chain(load)
        .enumerate()
        .map(|(i, mut r)| {
            r.id = format!("r{}", i + 1);
            r
        })
        .collect();
    let mut edb: Instance = program.edb.clone();
    edb.extend(seeds.iter().cloned());
    let out = Program::new(rules, edb)?;
    let adorned_names = adorned
        .trace
        .iter()
        .map(|(p, a)| ((p.clone(), a.clone()), adorned_name(p, a)))
        .collect();
    let magic_names = adorned
        .trace
        .iter()
        .map(|(p, a)| ((p.clone(), a.clone()), magic_name(p, a)))
        .collect();
    let input = classify(&program.rules);
    let output = classify(&out.rules);
    let closure_holds = input.jws.then_some(output.jws);
    Ok((
        MagicProgram {
            program: out,
            query: adorned.query,
            guarded_rules: ng,
            magic_rules: nm,
            load_rules: nl,
            seeds,
            adorned_names,
            magic_names,
        },
        MagicReport {
            input,
            output,
            closure_holds,
        },
    ))
}
