//! Query elimination under linear rules: atoms implied by another body atom
//! are dropped before a query is explored.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::graphs::{CoverGraph, PropagationGraph};
use crate::model::{canonical_rename, match_atom, Atom, ConjunctiveQuery, Symbol, Term, Tgd};
use crate::normalize::is_linear;
use crate::rewriter::cache::Memo;

/// `T(q, a)`: the terms of `a` that are constants or variables shared in `q`.
pub fn shared_terms(q: &ConjunctiveQuery, a: &Atom) -> BTreeSet<Term> {
    let occ = q.occurrences();
    a.args
        .iter()
        .filter(|t| t.is_ground() || occ.get(*t).copied().unwrap_or(0) > 1)
        .cloned()
        .collect()
}

pub struct Eliminator {
    tgds: Vec<Tgd>,
    cover: CoverGraph,
    /// `reach[k]`: head predicates at the end of some tight sequence
    /// starting with rule `k`.
    reach: Vec<BTreeSet<Symbol>>,
    cache: Memo<ConjunctiveQuery, ConjunctiveQuery>,
}

impl Eliminator {
    pub fn new(tgds: &[Tgd], cache_capacity: usize) -> Result<Self> {
        let pg = PropagationGraph::build(tgds);
        let cover = CoverGraph::build(tgds, &pg)?;
        Self::with_cover_graph(tgds, cover, cache_capacity)
    }

    pub fn with_cover_graph(tgds: &[Tgd], cover: CoverGraph, cache_capacity: usize) -> Result<Self> {
        if !is_linear(tgds) {
            return Err(Error::NotLinear);
        }
        let reach = (0..tgds.len())
            .map(|start| {
                let mut seen = vec![false; tgds.len()];
                let mut queue = VecDeque::from([start]);
                seen[start] = true;
                let mut preds = BTreeSet::new();
                while let Some(k) = queue.pop_front() {
                    preds.insert(tgds[k].head_predicate().clone());
                    for (j, s) in seen.iter_mut().enumerate() {
                        if !*s && cover.tight[k][j] {
                            *s = true;
                            queue.push_back(j);
                        }
                    }
                }
                preds
            })
            .collect();
        Ok(Eliminator {
            tgds: tgds.to_vec(),
            cover,
            reach,
            cache: Memo::new(cache_capacity),
        })
    }

    pub fn cover_graph(&self) -> &CoverGraph {
        &self.cover
    }

    fn compatible(&self, k: usize, a: &Atom) -> bool {
        match_atom(&self.tgds[k].body[0], a).is_some()
    }

    /// Whether `a` covers `b` with respect to `q`.
    pub fn covers(&self, a: &Atom, b: &Atom, q: &ConjunctiveQuery) -> bool {
        if a == b {
            return false;
        }
        let t = shared_terms(q, b);
        let terms_a = a.terms();
        if !t.is_subset(&terms_a) {
            return false;
        }
        if t.is_empty() {
            return (0..self.tgds.len()).any(|k| self.compatible(k, a) && self.reach[k].contains(&b.predicate));
        }
        let mut candidates: Option<BTreeSet<&Vec<usize>>> = None;
        for term in &t {
            for j in b.positions_of(term) {
                let target = b.position(j);
                let here: BTreeSet<&Vec<usize>> = a
                    .positions_of(term)
                    .into_iter()
                    .filter_map(|i| self.cover.sequences(&a.position(i), &target))
                    .flatten()
                    .collect();
                let next = match candidates {
                    None => here,
                    Some(prev) => prev.intersection(&here).copied().collect(),
                };
                if next.is_empty() {
                    return false;
                }
                candidates = Some(next);
            }
        }
        candidates.into_iter().flatten().any(|seq| self.compatible(seq[0], a))
    }

    /// `cover[i]`: indexes of the body atoms covering atom `i`.
    pub fn cover_sets(&self, q: &ConjunctiveQuery) -> Vec<BTreeSet<usize>> {
        (0..q.body.len())
            .map(|i| {
                (0..q.body.len())
                    .filter(|&j| j != i && self.covers(&q.body[j], &q.body[i], q))
                    .collect()
            })
            .collect()
    }

    /// Atoms removable when scanning the body in `strategy` order.
    pub fn eliminate(&self, q: &ConjunctiveQuery, strategy: &[usize]) -> BTreeSet<usize> {
        let mut cover = self.cover_sets(q);
        let mut removed = BTreeSet::new();
        for &i in strategy {
            if !cover[i].is_empty() {
                removed.insert(i);
                for (j, c) in cover.iter_mut().enumerate() {
                    if !removed.contains(&j) {
                        c.remove(&i);
                    }
                }
            }
        }
        removed
    }

    /// The query with its eliminable atoms removed, scanning atoms in
    /// canonical order.
    pub fn reduce(&self, q: &ConjunctiveQuery) -> ConjunctiveQuery {
        if q.body.len() < 2 {
            return q.clone();
        }
        self.cache.get_or_insert_with(q.clone(), || {
            let order = canonical_rename(q).order;
            let removed = self.eliminate(q, &order);
            ConjunctiveQuery::new(
                q.head.clone(),
                q.body
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !removed.contains(i))
                    .map(|(_, a)| a.clone())
                    .collect(),
            )
        })
    }
}
