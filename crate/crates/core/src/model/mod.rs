//! Symbolic algebra shared by every other module.

mod atom;
mod canonical;
mod homomorphism;
mod query;
mod subst;
mod term;
mod tgd;
mod unify;

pub use atom::{Atom, Position};
pub use canonical::{canonical_rename, canonical_var_name, Canonical};
pub use homomorphism::{find_homomorphism, for_each_homomorphism, match_atom, AtomIndex};
pub use query::{ConjunctiveQuery, Ucq};
pub use subst::Substitution;
pub use term::{sym, Symbol, Term};
pub use tgd::{FunctionalDependency, NegativeConstraint, RawTgd, Tgd};
pub use unify::{mgu, mgu_ranked};
