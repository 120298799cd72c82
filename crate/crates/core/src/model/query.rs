use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::atom::{write_atoms, Atom};
use super::term::{Symbol, Term};
use crate::error::{Error, Result};

/// A conjunctive query `head <- body`.
///
/// The head is kept as an atom so that substitutions can instantiate
/// distinguished variables with constants during rewriting. The body is a
/// duplicate-free list; its order carries no meaning.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConjunctiveQuery {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl ConjunctiveQuery {
    /// Builds a query, dropping duplicate body atoms. Safety is not checked;
    /// see [`ConjunctiveQuery::checked`].
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        let mut deduped: Vec<Atom> = Vec::with_capacity(body.len());
        for a in body {
            if !deduped.contains(&a) {
                deduped.push(a);
            }
        }
        ConjunctiveQuery { head, body: deduped }
    }

    pub fn checked(head: Atom, body: Vec<Atom>) -> Result<Self> {
        let q = ConjunctiveQuery::new(head, body);
        if let Some(v) = q.unsafe_variable() {
            return Err(Error::UnsafeQuery {
                query: q.to_string(),
                variable: v.to_string(),
            });
        }
        Ok(q)
    }

    pub fn head_predicate(&self) -> &Symbol {
        &self.head.predicate
    }

    pub fn is_boolean(&self) -> bool {
        self.head.args.is_empty()
    }

    /// Distinguished variables in head order, without repetition.
    pub fn distinguished(&self) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        for t in self.head.variables() {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }

    /// The first head variable that does not occur in the body, if any.
    pub fn unsafe_variable(&self) -> Option<&Term> {
        self.head.variables().find(|v| !self.body.iter().any(|a| a.contains(v)))
    }

    /// Variables of the query in order of first occurrence, head first.
    pub fn variables(&self) -> Vec<Term> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for t in self
            .head
            .args
            .iter()
            .chain(self.body.iter().flat_map(|a| a.args.iter()))
        {
            if t.is_variable() && seen.insert(t.clone()) {
                out.push(t.clone());
            }
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<Term> {
        self.head
            .args
            .iter()
            .chain(self.body.iter().flat_map(|a| a.args.iter()))
            .filter(|t| t.is_constant())
            .cloned()
            .collect()
    }

    /// Number of occurrences of every term across head and body.
    pub fn occurrences(&self) -> HashMap<Term, usize> {
        let mut counts = HashMap::new();
        for t in self
            .head
            .args
            .iter()
            .chain(self.body.iter().flat_map(|a| a.args.iter()))
        {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Variables occurring more than once in the query (head included).
    pub fn shared_variables(&self) -> BTreeSet<Term> {
        self.occurrences()
            .into_iter()
            .filter(|(t, n)| t.is_variable() && *n > 1)
            .map(|(t, _)| t)
            .collect()
    }

    pub fn is_shared(&self, var: &Term) -> bool {
        var.is_variable() && self.occurrences().get(var).copied().unwrap_or(0) > 1
    }

    pub fn predicates(&self) -> BTreeSet<Symbol> {
        self.body.iter().map(|a| a.predicate.clone()).collect()
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        write_atoms(f, &self.body)?;
        f.write_str(".")
    }
}

impl fmt::Debug for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A union of conjunctive queries sharing one head predicate.
pub type Ucq = Vec<ConjunctiveQuery>;
