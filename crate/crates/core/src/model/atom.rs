use std::collections::BTreeSet;
use std::fmt;

use super::term::{Symbol, Term};

/// A schema position `pred[i]`, with `index` starting at 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub predicate: Symbol,
    pub index: usize,
}

impl Position {
    pub fn new(predicate: Symbol, index: usize) -> Self {
        Position { predicate, index }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.predicate, self.index)
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: Symbol, args: Vec<Term>) -> Self {
        Atom { predicate, args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn position(&self, index: usize) -> Position {
        Position::new(self.predicate.clone(), index)
    }

    /// The term at a 1-based position.
    pub fn term_at(&self, index: usize) -> &Term {
        &self.args[index - 1]
    }

    pub fn terms(&self) -> BTreeSet<Term> {
        self.args.iter().cloned().collect()
    }

    pub fn variables(&self) -> impl Iterator<Item = &Term> {
        self.args.iter().filter(|t| t.is_variable())
    }

    pub fn contains(&self, term: &Term) -> bool {
        self.args.contains(term)
    }

    /// All 1-based positions at which `term` occurs.
    pub fn positions_of(&self, term: &Term) -> Vec<usize> {
        self.args
            .iter()
            .enumerate()
            .filter(|(_, t)| *t == term)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}
