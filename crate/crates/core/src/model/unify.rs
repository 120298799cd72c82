use std::collections::{BTreeSet, HashMap};

use super::atom::Atom;
use super::subst::Substitution;
use super::term::Term;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the older root; representatives are chosen afterwards
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Most general unifier of a set of atoms.
///
/// Every equivalence class of terms is represented by its ground term if it
/// has one (two distinct ground terms make the set non-unifiable). Otherwise
/// the variable with the smallest `rank` wins, ties broken by first
/// occurrence. The result is idempotent.
pub fn mgu_ranked<F>(atoms: &[Atom], rank: F) -> Option<Substitution>
where
    F: Fn(&Term) -> u8,
{
    let first = atoms.first()?;
    if atoms
        .iter()
        .any(|a| a.predicate != first.predicate || a.arity() != first.arity())
    {
        return None;
    }

    let mut ids: HashMap<&Term, usize> = HashMap::new();
    let mut terms: Vec<&Term> = Vec::new();
    for t in atoms.iter().flat_map(|a| a.args.iter()) {
        ids.entry(t).or_insert_with(|| {
            terms.push(t);
            terms.len() - 1
        });
    }
    let mut uf = UnionFind {
        parent: (0..terms.len()).collect(),
    };
    for a in &atoms[1..] {
        for (s, t) in first.args.iter().zip(&a.args) {
            uf.union(ids[s], ids[t]);
        }
    }

    // representative per root: (is_variable, rank, first occurrence)
    let mut best: HashMap<usize, usize> = HashMap::new();
    for (i, t) in terms.iter().enumerate() {
        let root = uf.find(i);
        match best.get(&root) {
            None => {
                best.insert(root, i);
            }
            Some(&j) => {
                let cur = terms[j];
                if t.is_ground() && cur.is_ground() {
                    return None;
                }
                let key = |x: &Term, idx: usize| (x.is_variable(), if x.is_variable() { rank(x) } else { 0 }, idx);
                if key(t, i) < key(cur, j) {
                    best.insert(root, i);
                }
            }
        }
    }

    let mut out = Substitution::new();
    for (i, t) in terms.iter().enumerate() {
        if t.is_variable() {
            let rep = terms[best[&uf.find(i)]];
            out.insert((*t).clone(), rep.clone());
        }
    }
    Some(out)
}

/// MGU that maps variables of `preferred` only to constants or to other
/// preferred variables whenever the class contains one.
pub fn mgu(atoms: &[Atom], preferred: &BTreeSet<Term>) -> Option<Substitution> {
    mgu_ranked(atoms, |t| if preferred.contains(t) { 0 } else { 1 })
}
