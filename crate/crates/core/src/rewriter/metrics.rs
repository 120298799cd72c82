use std::collections::HashMap;
use std::fmt;
use std::time::Duration;

use crate::model::{ConjunctiveQuery, Term};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    pub explored: usize,
    /// Rewriting-step outputs, counted every time one is produced.
    pub generated: usize,
    pub factorizations: usize,
    /// Queries dropped or removed by subsumption during rewriting.
    pub pruned: usize,
    pub size: usize,
    pub atoms: usize,
    pub joins: usize,
    pub components: usize,
    pub rewrite_time: Duration,
    pub split_time: Duration,
    pub unfold_time: Duration,
}

impl Metrics {
    pub fn set_output(&mut self, ucq: &[ConjunctiveQuery]) {
        self.size = ucq.len();
        self.atoms = count_atoms(ucq);
        self.joins = count_joins(ucq);
    }

    pub fn absorb(&mut self, other: &Metrics) {
        self.explored += other.explored;
        self.generated += other.generated;
        self.factorizations += other.factorizations;
        self.pruned += other.pruned;
    }
}

pub fn count_atoms(ucq: &[ConjunctiveQuery]) -> usize {
    ucq.iter().map(|q| q.body.len()).sum()
}

/// A variable occurring `n` times in a body contributes `n - 1` equalities.
pub fn joins(q: &ConjunctiveQuery) -> usize {
    let mut occ: HashMap<&Term, usize> = HashMap::new();
    for t in q.body.iter().flat_map(|a| &a.args).filter(|t| t.is_variable()) {
        *occ.entry(t).or_default() += 1;
    }
    occ.values().map(|n| n - 1).sum()
}

pub fn count_joins(ucq: &[ConjunctiveQuery]) -> usize {
    ucq.iter().map(joins).sum()
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = |d: Duration| d.as_secs_f64() * 1000.0;
        writeln!(f, "size={}", self.size)?;
        writeln!(f, "atoms={}", self.atoms)?;
        writeln!(f, "joins={}", self.joins)?;
        writeln!(f, "explored={}", self.explored)?;
        writeln!(f, "generated={}", self.generated)?;
        writeln!(f, "factorizations={}", self.factorizations)?;
        writeln!(f, "pruned={}", self.pruned)?;
        writeln!(f, "components={}", self.components)?;
        writeln!(f, "rewrite_ms={:.3}", ms(self.rewrite_time))?;
        writeln!(f, "split_ms={:.3}", ms(self.split_time))?;
        write!(f, "unfold_ms={:.3}", ms(self.unfold_time))
    }
}
