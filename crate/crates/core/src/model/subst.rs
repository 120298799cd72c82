use std::collections::BTreeMap;
use std::fmt;

use super::atom::Atom;
use super::query::ConjunctiveQuery;
use super::term::Term;

/// A finite map from variables to terms. Terms outside the domain are
/// left untouched, so constants and nulls are always fixed.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Term, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Term, Term)>>(pairs: I) -> Self {
        Substitution {
            map: pairs.into_iter().filter(|(k, v)| k != v).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, t: &Term) -> Option<&Term> {
        self.map.get(t)
    }

    /// Binds `from` to `to`. Identity bindings are not stored.
    pub fn insert(&mut self, from: Term, to: Term) {
        if from != to {
            self.map.insert(from, to);
        } else {
            self.map.remove(&from);
        }
    }

    pub fn remove(&mut self, t: &Term) {
        self.map.remove(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Term)> {
        self.map.iter()
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        self.map.get(t).cloned().unwrap_or_else(|| t.clone())
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom::new(a.predicate.clone(), a.args.iter().map(|t| self.apply_term(t)).collect())
    }

    pub fn apply_atoms(&self, atoms: &[Atom]) -> Vec<Atom> {
        atoms.iter().map(|a| self.apply_atom(a)).collect()
    }

    /// Applies to head and body; duplicate body atoms collapse.
    pub fn apply_query(&self, q: &ConjunctiveQuery) -> ConjunctiveQuery {
        ConjunctiveQuery::new(self.apply_atom(&q.head), self.apply_atoms(&q.body))
    }

    /// `self` followed by `then`: applying the result equals applying
    /// `self` and then `then`.
    pub fn compose(&self, then: &Substitution) -> Substitution {
        let mut map: BTreeMap<Term, Term> = BTreeMap::new();
        for (k, v) in &self.map {
            let image = then.apply_term(v);
            if *k != image {
                map.insert(k.clone(), image);
            }
        }
        for (k, v) in &then.map {
            if !self.map.contains_key(k) {
                map.insert(k.clone(), v.clone());
            }
        }
        Substitution { map }
    }

    /// Restriction to the given domain.
    pub fn restrict<'a, I: IntoIterator<Item = &'a Term>>(&self, domain: I) -> Substitution {
        let mut out = Substitution::new();
        for t in domain {
            if let Some(v) = self.map.get(t) {
                out.map.insert(t.clone(), v.clone());
            }
        }
        out
    }

    pub fn is_idempotent(&self) -> bool {
        self.map.values().all(|v| !self.map.contains_key(v))
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} -> {v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
