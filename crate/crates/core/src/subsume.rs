//! Query subsumption and redundancy pruning of rewritings.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::model::{canonical_rename, find_homomorphism, ConjunctiveQuery};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SubsumptionMode {
    #[default]
    None,
    /// Pairwise check over the final rewriting.
    Tail,
    /// Pairwise check per component, before unfolding.
    IDec,
    /// Check every generated query against the current set.
    IRew,
}

impl FromStr for SubsumptionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "none" => Ok(Self::None),
            "tail" => Ok(Self::Tail),
            "idec" => Ok(Self::IDec),
            "irew" => Ok(Self::IRew),
            other => Err(Error::Config(format!("unknown subsumption mode `{other}`"))),
        }
    }
}

impl fmt::Display for SubsumptionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Tail => "tail",
            Self::IDec => "idec",
            Self::IRew => "irew",
        })
    }
}

/// `q1` subsumes `q2` when some `h` maps the body of `q1` into the body of
/// `q2` and the head of `q1` onto the head of `q2`.
pub fn subsumes(q1: &ConjunctiveQuery, q2: &ConjunctiveQuery) -> bool {
    q1.head.predicate == q2.head.predicate
        && q1.head.arity() == q2.head.arity()
        && find_homomorphism(&q1.body, &q2.body, Some((&q1.head, &q2.head))).is_some()
}

/// Drops every query subsumed by another one. Of two equivalent queries the
/// one with the smaller canonical form survives.
pub fn prune_tail(ucq: &[ConjunctiveQuery]) -> Vec<ConjunctiveQuery> {
    let keys: Vec<ConjunctiveQuery> = ucq.iter().map(|q| canonical_rename(q).query).collect();
    let dominates = |i: usize, j: usize| {
        subsumes(&ucq[i], &ucq[j]) && (!subsumes(&ucq[j], &ucq[i]) || (&keys[i], i) < (&keys[j], j))
    };
    (0..ucq.len())
        .filter(|&j| !(0..ucq.len()).any(|i| i != j && dominates(i, j)))
        .map(|j| ucq[j].clone())
        .collect()
}
