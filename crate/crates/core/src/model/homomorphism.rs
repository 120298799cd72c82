use std::collections::{BTreeSet, HashMap};

use super::atom::Atom;
use super::subst::Substitution;
use super::term::{Symbol, Term};

/// Target atoms grouped by predicate. Variables in targets are opaque
/// symbols: only the source side gets mapped.
pub struct AtomIndex<'a> {
    by_predicate: HashMap<&'a Symbol, Vec<&'a Atom>>,
}

impl<'a> AtomIndex<'a> {
    pub fn new<I: IntoIterator<Item = &'a Atom>>(atoms: I) -> Self {
        let mut by_predicate: HashMap<&'a Symbol, Vec<&'a Atom>> = HashMap::new();
        for a in atoms {
            by_predicate.entry(&a.predicate).or_default().push(a);
        }
        AtomIndex { by_predicate }
    }

    pub fn candidates(&self, predicate: &Symbol) -> &[&'a Atom] {
        self.by_predicate.get(predicate).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// The substitution `h` with `h(pattern) = target`, if any.
pub fn match_atom(pattern: &Atom, target: &Atom) -> Option<Substitution> {
    if pattern.predicate != target.predicate || pattern.arity() != target.arity() {
        return None;
    }
    let mut binding: HashMap<&Term, &Term> = HashMap::new();
    for (p, t) in pattern.args.iter().zip(&target.args) {
        if p.is_variable() {
            if *binding.entry(p).or_insert(t) != t {
                return None;
            }
        } else if p != t {
            return None;
        }
    }
    Some(Substitution::from_pairs(
        binding.into_iter().map(|(k, v)| (k.clone(), v.clone())),
    ))
}

// Substitution drops `X -> X`, so the search keeps its own binding map in
// which identity bindings still count as bound.
struct Matcher<'a, 'b> {
    order: Vec<&'b Atom>,
    index: &'b AtomIndex<'a>,
    binding: HashMap<Term, Term>,
}

impl<'a, 'b> Matcher<'a, 'b> {
    fn bind(&mut self, pattern: &Atom, target: &Atom, trail: &mut Vec<Term>) -> bool {
        if pattern.arity() != target.arity() {
            return false;
        }
        for (p, t) in pattern.args.iter().zip(&target.args) {
            if p.is_variable() {
                match self.binding.get(p) {
                    Some(bound) if bound != t => return false,
                    Some(_) => {}
                    None => {
                        self.binding.insert(p.clone(), t.clone());
                        trail.push(p.clone());
                    }
                }
            } else if p != t {
                return false;
            }
        }
        true
    }

    fn search<F: FnMut(&HashMap<Term, Term>) -> bool>(&mut self, depth: usize, f: &mut F) -> bool {
        if depth == self.order.len() {
            return f(&self.binding);
        }
        let pattern = self.order[depth];
        for target in self.index.candidates(&pattern.predicate) {
            let mut trail = Vec::new();
            if self.bind(pattern, target, &mut trail) && !self.search(depth + 1, f) {
                return false;
            }
            for v in trail {
                self.binding.remove(&v);
            }
        }
        true
    }
}

fn search_order<'b>(from: &'b [Atom], index: &AtomIndex<'_>, bound: &BTreeSet<Term>) -> Vec<&'b Atom> {
    let mut remaining: Vec<&Atom> = from.iter().collect();
    let mut bound = bound.clone();
    let mut order = Vec::with_capacity(from.len());
    while !remaining.is_empty() {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, a)| {
                let free = a.variables().filter(|v| !bound.contains(*v)).count();
                (
                    free > 0 && free == a.variables().count(),
                    index.candidates(&a.predicate).len(),
                    free,
                )
            })
            .expect("nonempty");
        let a = remaining.remove(pos);
        bound.extend(a.variables().cloned());
        order.push(a);
    }
    order
}

/// Calls `f` on every homomorphism extending `init` that maps `from` into the
/// indexed atoms. `f` returns `false` to stop the enumeration.
pub fn for_each_homomorphism<F>(from: &[Atom], index: &AtomIndex<'_>, init: &Substitution, mut f: F)
where
    F: FnMut(&Substitution) -> bool,
{
    let binding: HashMap<Term, Term> = init.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let bound: BTreeSet<Term> = binding.keys().cloned().collect();
    let mut m = Matcher {
        order: search_order(from, index, &bound),
        index,
        binding,
    };
    m.search(0, &mut |b| {
        f(&Substitution::from_pairs(b.iter().map(|(k, v)| (k.clone(), v.clone()))))
    });
}

/// A homomorphism `h` with `h(from) ⊆ to`, additionally satisfying
/// `h(fixed.0) = fixed.1` when given.
pub fn find_homomorphism(from: &[Atom], to: &[Atom], fixed: Option<(&Atom, &Atom)>) -> Option<Substitution> {
    let index = AtomIndex::new(to);
    let mut binding: HashMap<Term, Term> = HashMap::new();
    if let Some((src, dst)) = fixed {
        if src.predicate != dst.predicate || src.arity() != dst.arity() {
            return None;
        }
        for (p, t) in src.args.iter().zip(&dst.args) {
            if p.is_variable() {
                match binding.get(p) {
                    Some(b) if b != t => return None,
                    Some(_) => {}
                    None => {
                        binding.insert(p.clone(), t.clone());
                    }
                }
            } else if p != t {
                return None;
            }
        }
    }
    let bound: BTreeSet<Term> = binding.keys().cloned().collect();
    let mut m = Matcher {
        order: search_order(from, &index, &bound),
        index: &index,
        binding,
    };
    let mut found = None;
    m.search(0, &mut |b| {
        found = Some(Substitution::from_pairs(b.iter().map(|(k, v)| (k.clone(), v.clone()))));
        false
    });
    found
}
