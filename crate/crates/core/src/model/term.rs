use std::fmt;
use std::sync::Arc;

/// Interned-ish identifier shared between terms, atoms and predicates.
pub type Symbol = Arc<str>;

pub fn sym(s: &str) -> Symbol {
    Arc::from(s)
}

/// A term is a constant, a labeled null or a variable.
///
/// The derived ordering places every constant before every null, and both
/// before variables, which gives the total order over constants and nulls
/// that the chase relies on.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Constant(Symbol),
    Null(u64),
    Variable(Symbol),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Constant(sym(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Variable(sym(name))
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Constant(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    /// Constants and nulls are values: homomorphisms never move them.
    pub fn is_ground(&self) -> bool {
        !self.is_variable()
    }
}

fn needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        None => true,
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {
            !chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        }
        Some(_) => true,
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(name) if needs_quotes(name) => {
                write!(f, "'{}'", name.replace('\'', "''"))
            }
            Term::Constant(name) => f.write_str(name),
            Term::Null(n) => write!(f, "z{n}"),
            Term::Variable(name) => f.write_str(name),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
