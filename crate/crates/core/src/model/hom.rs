use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::atom::{Atom, PositionSet};
use super::instance::Instance;
use super::query::ConjunctiveQuery;
use super::term::{Sym, Term};
use crate::error::{Error, Result};

/// Variable to ground term.
pub type Assignment = BTreeMap<Sym, Term>;

pub fn apply_assignment(a: &Assignment, atoms: &[Atom]) -> Result<Vec<Atom>> {
    atoms.iter().map(|atom| apply_atom(a, atom)).collect()
}

pub fn apply_atom(a: &Assignment, atom: &Atom) -> Result<Atom> {
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Var(v) => a
                .get(v)
                .cloned()
                .ok_or_else(|| Error::UnboundVariable(v.to_string())),
            other => Ok(other.clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Atom {
        pred: atom.pred.clone(),
        args,
    })
}

/// `a` maps onto `b` by a homomorphism that fixes constants, frozen nulls and
/// every argument of `a` sitting at a position in `pi`.
pub fn is_pi_homomorphic(a: &Atom, b: &Atom, pi: &PositionSet) -> bool {
    if a.pred != b.pred || a.arity() != b.arity() {
        return false;
    }
    let mut h: BTreeMap<&Term, &Term> = BTreeMap::new();
    for (i, (s, t)) in a.args.iter().zip(&b.args).enumerate() {
        if s.is_rigid() || pi.contains(&a.position(i)) {
            if s != t {
                return false;
            }
            // A null pinned here must map to itself elsewhere as well.
            if s.is_null() {
                match h.insert(s, t) {
                    Some(prev) if prev != t => return false,
                    _ => {}
                }
            }
            continue;
        }
        match h.get(s) {
            Some(prev) if *prev != t => return false,
            Some(_) => {}
            None => {
                h.insert(s, t);
            }
        }
    }
    true
}

/// Replaces every labeled null by the frozen null of the same ordinal.
pub fn freeze_nulls(i: &Instance) -> (Instance, BTreeMap<Term, Term>) {
    let mut map = BTreeMap::new();
    let frozen = i.map_terms(|t| match t {
        Term::Null(k) => {
            map.insert(t.clone(), Term::Frozen(*k));
            Term::Frozen(*k)
        }
        other => other.clone(),
    });
    (frozen, map)
}

/// Enumerates every assignment mapping `body` into `inst`, extending `seed`.
///
/// With `since = Some(k)`, only matches using at least one atom with insertion
/// index `>= k` are reported. The callback returns false to stop early.
pub fn for_each_match(
    body: &[Atom],
    inst: &Instance,
    seed: &Assignment,
    since: Option<usize>,
    on: &mut dyn FnMut(&Assignment, &[usize]) -> bool,
) {
    for_each_match_pruned(body, inst, seed, since, &[], &|_| false, on)
}

/// Join order: `first` (if any), then greedily the atom sharing the most
/// bound variables, breaking ties by the number of `prefer` variables.
fn join_order(body: &[Atom], seed: &Assignment, first: Option<usize>, prefer: &[Sym]) -> Vec<usize> {
    let mut bound: BTreeSet<&Sym> = seed.keys().collect();
    let mut order = Vec::with_capacity(body.len());
    let mut left: Vec<usize> = (0..body.len()).collect();
    if let Some(j) = first {
        left.retain(|&i| i != j);
        order.push(j);
        bound.extend(body[j].vars());
    }
    while !left.is_empty() {
        let score = |i: usize| {
            let shared = body[i].vars().filter(|v| bound.contains(v)).count();
            let preferred = body[i].vars().filter(|v| prefer.contains(v)).count();
            (shared, preferred)
        };
        let (k, _) = left
            .iter()
            .enumerate()
            .max_by(|(ka, &a), (kb, &b)| score(a).cmp(&score(b)).then(kb.cmp(ka)))
            .unwrap();
        let i = left.remove(k);
        order.push(i);
        bound.extend(body[i].vars());
    }
    order
}

/// Like [`for_each_match`], skipping every extension of a partial assignment
/// for which `prune` holds.
pub fn for_each_match_pruned(
    body: &[Atom],
    inst: &Instance,
    seed: &Assignment,
    since: Option<usize>,
    prefer: &[Sym],
    prune: &dyn Fn(&Assignment) -> bool,
    on: &mut dyn FnMut(&Assignment, &[usize]) -> bool,
) {
    let n = body.len();
    let mut theta = seed.clone();
    let mut used = vec![0; n];
    let k = match since {
        Some(k) if k > 0 || n == 0 => k,
        _ => {
            let order = join_order(body, seed, None, prefer);
            let ranges = vec![(0, usize::MAX); n];
            let mut m = Matcher { body, inst, order: &order, ranges: &ranges, prune, on, free: vec![None; n] };
            m.search(0, &mut theta, &mut used);
            return;
        }
    };
    // Semi-naive: atom j is the first one matched to a new atom.
    for j in 0..n {
        let order = join_order(body, seed, Some(j), prefer);
        let ranges: Vec<(usize, usize)> = (0..n)
            .map(|i| match i.cmp(&j) {
                std::cmp::Ordering::Less => (0, k),
                std::cmp::Ordering::Equal => (k, usize::MAX),
                std::cmp::Ordering::Greater => (0, usize::MAX),
            })
            .collect();
        let mut m = Matcher { body, inst, order: &order, ranges: &ranges, prune, on: &mut *on, free: vec![None; n] };
        if !m.search(0, &mut theta, &mut used) {
            return;
        }
    }
}

struct Matcher<'a, 'f> {
    body: &'a [Atom],
    inst: &'a Instance,
    order: &'a [usize],
    ranges: &'a [(usize, usize)],
    prune: &'a dyn Fn(&Assignment) -> bool,
    on: &'f mut dyn FnMut(&Assignment, &[usize]) -> bool,
    /// Per body atom, the facts it matches on its own, for when none of its
    /// variables is bound yet.
    free: Vec<Option<Vec<usize>>>,
}

impl Matcher<'_, '_> {
    fn search(&mut self, depth: usize, theta: &mut Assignment, used: &mut Vec<usize>) -> bool {
        if depth == self.order.len() {
            return (self.on)(theta, used);
        }
        let i = self.order[depth];
        let atom = &self.body[i];
        let (lo, hi) = self.ranges[i];
        let inst = self.inst;
        // Narrowest index among the already-fixed arguments.
        let mut cands = inst.with_pred(&atom.pred);
        let mut fixed_any = false;
        for (j, t) in atom.args.iter().enumerate() {
            let fixed = match t {
                Term::Var(v) => theta.get(v),
                other => Some(other),
            };
            if let Some(val) = fixed {
                fixed_any = true;
                let c = inst.with_arg(&atom.pred, j, val);
                if c.len() < cands.len() {
                    cands = c;
                }
            }
        }
        let start = cands.partition_point(|&x| x < lo);
        let end = cands.partition_point(|&x| x < hi);
        let owned = (!fixed_any).then(|| {
            self.free[i].take().unwrap_or_else(|| {
                cands[start..end]
                    .iter()
                    .copied()
                    .filter(|&idx| binds(atom, inst.get(idx), &mut Assignment::new()))
                    .collect()
            })
        });
        let cands = owned.as_deref().unwrap_or(&cands[start..end]);
        for &idx in cands {
            let fact = self.inst.get(idx);
            if fact.arity() != atom.arity() {
                continue;
            }
            let mut bound = Vec::new();
            let mut ok = true;
            for (t, v) in atom.args.iter().zip(&fact.args) {
                match t {
                    Term::Var(x) => match theta.get(x) {
                        Some(prev) => {
                            if prev != v {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            theta.insert(x.clone(), v.clone());
                            bound.push(x.clone());
                        }
                    },
                    other => {
                        if other != v {
                            ok = false;
                            break;
                        }
                    }
                }
            }
            let go_on = !ok || (self.prune)(theta) || {
                used[i] = idx;
                self.search(depth + 1, theta, used)
            };
            for x in bound {
                theta.remove(&x);
            }
            if !go_on {
                return false;
            }
        }
        if owned.is_some() {
            self.free[i] = owned;
        }
        true
    }
}

/// Matches of `body` over `inst` using at least one atom with insertion index
/// `>= since`, body atoms taken left to right and facts in atom order, so
/// images come in lexicographic order. The callback returns false to stop
/// early.
pub(crate) fn for_each_match_ordered(
    body: &[Atom],
    inst: &Instance,
    since: usize,
    on: &mut dyn FnMut(&Assignment, &[usize]) -> bool,
) {
    // Variables of each suffix of the body.
    let tails = (0..=body.len())
        .map(|i| body[i..].iter().flat_map(Atom::vars).cloned().collect::<BTreeSet<_>>().into_iter().collect())
        .collect();
    let mut m = OrderedMatcher { body, inst, since, on, free: vec![None; body.len()], tails, live: HashMap::new() };
    m.search(0, &mut Assignment::new(), &mut vec![0; body.len()], since == 0);
}

struct OrderedMatcher<'a, 'f> {
    body: &'a [Atom],
    inst: &'a Instance,
    since: usize,
    on: &'f mut dyn FnMut(&Assignment, &[usize]) -> bool,
    /// Sorted matches of atoms with no bound variable.
    free: Vec<Option<Vec<usize>>>,
    tails: Vec<Vec<Sym>>,
    /// Whether a suffix matches under the given values of its bound variables,
    /// with or without a new atom.
    live: HashMap<(usize, bool, Vec<Option<Term>>), bool>,
}

impl OrderedMatcher<'_, '_> {
    /// Some match of `body[i..]` extends `theta`, using a new atom if `fresh`
    /// is false.
    fn extends(&mut self, i: usize, theta: &Assignment, fresh: bool) -> bool {
        if i == self.body.len() {
            return fresh;
        }
        let key = (i, fresh, self.tails[i].iter().map(|v| theta.get(v).cloned()).collect());
        if let Some(&b) = self.live.get(&key) {
            return b;
        }
        let mut found = false;
        let since = (!fresh).then_some(self.since);
        for_each_match(&self.body[i..], self.inst, theta, since, &mut |_, _| {
            found = true;
            false
        });
        self.live.insert(key, found);
        found
    }

    fn search(&mut self, i: usize, theta: &mut Assignment, used: &mut Vec<usize>, fresh: bool) -> bool {
        if i == self.body.len() {
            return (self.on)(theta, used);
        }
        let atom = &self.body[i];
        let inst = self.inst;
        let mut cands = inst.with_pred(&atom.pred);
        let mut fixed_any = false;
        for (j, t) in atom.args.iter().enumerate() {
            let fixed = match t {
                Term::Var(v) => theta.get(v),
                other => Some(other),
            };
            if let Some(val) = fixed {
                fixed_any = true;
                let c = inst.with_arg(&atom.pred, j, val);
                if c.len() < cands.len() {
                    cands = c;
                }
            }
        }
        let sorted = |theta: &Assignment| {
            let mut v: Vec<usize> = cands
                .iter()
                .copied()
                .filter(|&idx| binds(atom, inst.get(idx), &mut theta.clone()))
                .collect();
            v.sort_by(|&a, &b| inst.get(a).cmp(inst.get(b)));
            v
        };
        let list = if fixed_any {
            sorted(theta)
        } else {
            self.free[i].take().unwrap_or_else(|| sorted(theta))
        };
        let mut go_on = true;
        for &idx in &list {
            let mut ext = theta.clone();
            binds(atom, inst.get(idx), &mut ext);
            let fresh = fresh || idx >= self.since;
            if !self.extends(i + 1, &ext, fresh) {
                continue;
            }
            used[i] = idx;
            if !self.search(i + 1, &mut ext, used, fresh) {
                go_on = false;
                break;
            }
        }
        if !fixed_any {
            self.free[i] = Some(list);
        }
        go_on
    }
}

/// The assignment mapping `body` onto `image` atom by atom, if any.
pub fn bind_atoms(body: &[Atom], image: &[Atom]) -> Option<Assignment> {
    let mut theta = Assignment::new();
    (body.len() == image.len() && body.iter().zip(image).all(|(a, f)| binds(a, f, &mut theta)))
        .then_some(theta)
}

fn binds(atom: &Atom, fact: &Atom, theta: &mut Assignment) -> bool {
    if atom.pred != fact.pred || atom.arity() != fact.arity() {
        return false;
    }
    for (t, v) in atom.args.iter().zip(&fact.args) {
        match t {
            Term::Var(x) => match theta.get(x) {
                Some(prev) if prev != v => return false,
                Some(_) => {}
                None => {
                    theta.insert(x.clone(), v.clone());
                }
            },
            other if other != v => return false,
            _ => {}
        }
    }
    true
}

/// Answers of `q` over `i`, projected on the free variables. A Boolean query
/// that holds yields the single empty tuple.
pub fn evaluate_cq(q: &ConjunctiveQuery, i: &Instance) -> BTreeSet<Vec<Term>> {
    let mut out = BTreeSet::new();
    for_each_match(&q.body, i, &Assignment::new(), None, &mut |theta, _| {
        out.insert(q.free_vars.iter().map(|v| theta[v].clone()).collect());
        !q.free_vars.is_empty()
    });
    out
}
