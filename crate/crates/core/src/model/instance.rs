use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexSet;

use super::atom::Atom;
use super::term::{Sym, Term};

/// A finite set of ground atoms kept in insertion order.
///
/// Insertion indices are stable, which lets the chase treat "atoms added since
/// index k" as the delta of a saturation level.
#[derive(Clone, Default)]
pub struct Instance {
    atoms: IndexSet<Atom>,
    by_pred: HashMap<Sym, Vec<usize>>,
    by_arg: HashMap<(Sym, usize, Term), Vec<usize>>,
}

impl Instance {
    pub fn new() -> Instance {
        Instance::default()
    }

    /// Inserts a ground atom; returns false if it was already present.
    pub fn insert(&mut self, atom: Atom) -> bool {
        debug_assert!(atom.is_ground(), "instance atoms are ground");
        if self.atoms.contains(&atom) {
            return false;
        }
        let idx = self.atoms.len();
        self.by_pred.entry(atom.pred.clone()).or_default().push(idx);
        for (i, t) in atom.args.iter().enumerate() {
            self.by_arg
                .entry((atom.pred.clone(), i, t.clone()))
                .or_default()
                .push(idx);
        }
        self.atoms.insert(atom);
        true
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Atom {
        &self.atoms[idx]
    }

    pub fn index_of(&self, atom: &Atom) -> Option<usize> {
        self.atoms.get_index_of(atom)
    }

    /// Atoms in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    /// Insertion indices of the atoms with predicate `pred`.
    pub fn with_pred(&self, pred: &str) -> &[usize] {
        self.by_pred.get(pred).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Insertion indices of the atoms with `term` at 0-based argument `arg`.
    pub fn with_arg(&self, pred: &Sym, arg: usize, term: &Term) -> &[usize] {
        self.by_arg
            .get(&(pred.clone(), arg, term.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Atoms in lexicographic order.
    pub fn sorted(&self) -> Vec<&Atom> {
        let mut v: Vec<&Atom> = self.atoms.iter().collect();
        v.sort();
        v
    }

    pub fn to_set(&self) -> BTreeSet<Atom> {
        self.atoms.iter().cloned().collect()
    }

    pub fn predicates(&self) -> BTreeSet<Sym> {
        self.by_pred.keys().cloned().collect()
    }

    /// Applies `f` to every term, preserving insertion order.
    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Instance {
        let mut out = Instance::new();
        for a in &self.atoms {
            out.insert(Atom {
                pred: a.pred.clone(),
                args: a.args.iter().map(&mut f).collect(),
            });
        }
        out
    }

    /// Equality up to a bijective renaming of nulls that preserves the kind
    /// (labeled stays labeled, frozen stays frozen).
    pub fn is_isomorphic(&self, other: &Instance) -> bool {
        isomorphic(
            &self.atoms.iter().cloned().collect::<Vec<_>>(),
            &other.atoms.iter().cloned().collect::<Vec<_>>(),
        )
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Instance) -> bool {
        self.atoms == other.atoms
    }
}

impl Eq for Instance {}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.sorted().into_iter().map(|a| a.to_string())).finish()
    }
}

impl FromIterator<Atom> for Instance {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Instance {
        let mut inst = Instance::new();
        for a in iter {
            inst.insert(a);
        }
        inst
    }
}

impl Extend<Atom> for Instance {
    fn extend<I: IntoIterator<Item = Atom>>(&mut self, iter: I) {
        for a in iter {
            self.insert(a);
        }
    }
}

/// Atom-set equality up to kind-preserving null bijection.
pub fn isomorphic(a: &[Atom], b: &[Atom]) -> bool {
    let sa: BTreeSet<&Atom> = a.iter().collect();
    let sb: BTreeSet<&Atom> = b.iter().collect();
    if sa.len() != sb.len() {
        return false;
    }
    // Null-free atoms must match exactly.
    let (ga, na): (Vec<&Atom>, Vec<&Atom>) = sa.iter().partition(|x| !x.has_null());
    let (gb, nb): (Vec<&Atom>, Vec<&Atom>) = sb.iter().partition(|x| !x.has_null());
    if ga != gb || na.len() != nb.len() {
        return false;
    }
    let mut fwd = BTreeMap::new();
    let mut bwd = BTreeMap::new();
    iso_search(&na, 0, &nb, &mut fwd, &mut bwd)
}

fn iso_search(
    src: &[&Atom],
    i: usize,
    dst: &[&Atom],
    fwd: &mut BTreeMap<Term, Term>,
    bwd: &mut BTreeMap<Term, Term>,
) -> bool {
    if i == src.len() {
        return true;
    }
    let a = src[i];
    for b in dst.iter().filter(|b| b.pred == a.pred && b.arity() == a.arity()) {
        let mut added = Vec::new();
        let mut ok = true;
        for (s, t) in a.args.iter().zip(&b.args) {
            let compatible = match (s, t) {
                (Term::Null(_), Term::Null(_)) | (Term::Frozen(_), Term::Frozen(_)) => {
                    match (fwd.get(s), bwd.get(t)) {
                        (Some(x), _) => x == t,
                        (None, Some(_)) => false,
                        (None, None) => {
                            fwd.insert(s.clone(), t.clone());
                            bwd.insert(t.clone(), s.clone());
                            added.push(s.clone());
                            true
                        }
                    }
                }
                _ => s == t,
            };
            if !compatible {
                ok = false;
                break;
            }
        }
        if ok && iso_search(src, i + 1, dst, fwd, bwd) {
            return true;
        }
        for s in added {
            if let Some(t) = fwd.remove(&s) {
                bwd.remove(&t);
            }
        }
    }
    false
}
