use std::collections::BTreeSet;
use std::fmt;

use super::atom::{write_atoms, Atom, Position};
use super::term::{Symbol, Term};

/// A tuple-generating dependency as written by the user: conjunctive body,
/// conjunctive head, head-only variables read as existentially quantified.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RawTgd {
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
}

impl RawTgd {
    pub fn body_variables(&self) -> BTreeSet<Term> {
        self.body.iter().flat_map(|a| a.variables().cloned()).collect()
    }

    /// Head variables not occurring in the body, in first-occurrence order.
    pub fn existential_variables(&self) -> Vec<Term> {
        let body = self.body_variables();
        let mut out: Vec<Term> = Vec::new();
        for v in self.head.iter().flat_map(|a| a.variables()) {
            if !body.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }

    /// Body variables also occurring in the head, in first body occurrence order.
    pub fn frontier(&self) -> Vec<Term> {
        let head: BTreeSet<Term> = self.head.iter().flat_map(|a| a.variables().cloned()).collect();
        let mut out: Vec<Term> = Vec::new();
        for v in self.body.iter().flat_map(|a| a.variables()) {
            if head.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        }
        out
    }

    /// Single head atom and at most one existential variable occurring once.
    pub fn is_normal(&self) -> bool {
        if self.head.len() != 1 {
            return false;
        }
        let ex = self.existential_variables();
        match ex.as_slice() {
            [] => true,
            [z] => self.head[0].positions_of(z).len() == 1,
            _ => false,
        }
    }
}

impl fmt::Display for RawTgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atoms(f, &self.body)?;
        f.write_str(" -> ")?;
        write_atoms(f, &self.head)?;
        f.write_str(".")
    }
}

impl fmt::Debug for RawTgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A TGD in normal form: one head atom holding at most one existential
/// variable, which occurs once.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Tgd {
    pub body: Vec<Atom>,
    pub head: Atom,
    existential: Option<usize>,
}

impl Tgd {
    /// Builds a normal-form TGD. Returns `None` if the head carries more
    /// than one existential variable or repeats the existential variable.
    pub fn new(body: Vec<Atom>, head: Atom) -> Option<Tgd> {
        let raw = RawTgd {
            body: body.clone(),
            head: vec![head.clone()],
        };
        if !raw.is_normal() {
            return None;
        }
        let existential = raw.existential_variables().first().map(|z| head.positions_of(z)[0]);
        Some(Tgd {
            body,
            head,
            existential,
        })
    }

    /// The position of the existential variable (`π∃`), `None` for ε.
    pub fn existential_position(&self) -> Option<Position> {
        self.existential.map(|i| self.head.position(i))
    }

    /// 1-based index into the head of the existential variable.
    pub fn existential_index(&self) -> Option<usize> {
        self.existential
    }

    pub fn existential_variable(&self) -> Option<&Term> {
        self.existential.map(|i| self.head.term_at(i))
    }

    pub fn head_predicate(&self) -> &Symbol {
        &self.head.predicate
    }

    pub fn is_linear(&self) -> bool {
        self.body.len() == 1
    }

    pub fn body_variables(&self) -> BTreeSet<Term> {
        self.body.iter().flat_map(|a| a.variables().cloned()).collect()
    }

    pub fn variables(&self) -> BTreeSet<Term> {
        let mut vars = self.body_variables();
        vars.extend(self.head.variables().cloned());
        vars
    }

    /// A copy with every variable `X` renamed to `X^step`.
    pub fn renamed(&self, step: usize) -> Tgd {
        let rename = |a: &Atom| {
            Atom::new(
                a.predicate.clone(),
                a.args
                    .iter()
                    .map(|t| match t {
                        Term::Variable(v) => Term::var(&format!("{v}^{step}")),
                        other => other.clone(),
                    })
                    .collect(),
            )
        };
        Tgd {
            body: self.body.iter().map(rename).collect(),
            head: rename(&self.head),
            existential: self.existential,
        }
    }

    pub fn to_raw(&self) -> RawTgd {
        RawTgd {
            body: self.body.clone(),
            head: vec![self.head.clone()],
        }
    }
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atoms(f, &self.body)?;
        write!(f, " -> {}.", self.head)
    }
}

impl fmt::Debug for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `body -> ⊥`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct NegativeConstraint {
    pub body: Vec<Atom>,
}

impl fmt::Display for NegativeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atoms(f, &self.body)?;
        f.write_str(" -> !.")
    }
}

/// `pred : lhs -> rhs` over 1-based attribute indices.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FunctionalDependency {
    pub predicate: Symbol,
    pub lhs: Vec<usize>,
    pub rhs: Vec<usize>,
}

impl fmt::Display for FunctionalDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "fd {}: {} -> {}.", self.predicate, join(&self.lhs), join(&self.rhs))
    }
}
