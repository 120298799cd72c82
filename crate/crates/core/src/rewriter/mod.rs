//! The rewriting loop: resolve query atoms against rule heads, collapse
//! atoms sharing an existential position, repeat until nothing new appears.

pub mod cache;
pub mod metrics;

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use itertools::Itertools;

use crate::eliminate::Eliminator;
use crate::error::{Error, Result};
use crate::graphs::{CoverGraph, PropagationGraph, DEFAULT_MAX_PATH_LEN, DEFAULT_MAX_SEQUENCES};
use crate::model::{
    canonical_rename, mgu_ranked, Atom, Canonical, ConjunctiveQuery, Substitution, Symbol, Term, Tgd, Ucq,
};
use crate::normalize::is_linear;
use crate::subsume::subsumes;

pub use cache::{CacheConfig, Memo};
pub use metrics::Metrics;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Rewriting,
    Factorization,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Rewriting => "r",
            Origin::Factorization => "f",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LabeledQuery {
    pub query: ConjunctiveQuery,
    pub canonical: ConjunctiveQuery,
    pub origin: Origin,
    pub explored: bool,
    /// Dropped by subsumption during rewriting.
    pub removed: bool,
}

/// Provenance of generated queries. Node ids are admission indexes; an edge
/// only ever points to a later node, so the graph is acyclic with the
/// input query as its root.
#[derive(Clone, Debug, Default)]
pub struct QueryGraph {
    pub edges: Vec<(usize, usize, Origin)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl QueryGraph {
    fn add_node(&mut self) -> usize {
        self.parents.push(Vec::new());
        self.children.push(Vec::new());
        self.parents.len() - 1
    }

    fn add_edge(&mut self, from: usize, to: usize, origin: Origin) {
        if from < to && !self.children[from].contains(&to) {
            self.edges.push((from, to, origin));
            self.children[from].push(to);
            self.parents[to].push(from);
        }
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    pub fn descendants(&self, id: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            for &c in &self.children[n] {
                if seen.insert(c) {
                    stack.push(c);
                }
            }
        }
        seen
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RewriteOptions {
    /// Drop atoms implied by other atoms (linear rules only; ignored
    /// otherwise).
    pub elimination: bool,
    /// Subsumption check on every generated query.
    pub prune: bool,
    /// Maximum number of queries to explore.
    pub budget: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Rewriting {
    /// Canonical forms of the final queries, in admission order.
    pub ucq: Ucq,
    pub queries: Vec<LabeledQuery>,
    pub graph: QueryGraph,
    pub metrics: Metrics,
}

/// `σ` applies to `s` in `q` when `s ∪ {head(σ)}` unifies and no atom of `s`
/// has a constant or a shared variable at the existential position.
pub fn applicable(sigma: &Tgd, s: &[Atom], q: &ConjunctiveQuery) -> bool {
    if s.is_empty() || !existential_free(sigma, s, &q.occurrences()) {
        return false;
    }
    let renamed = sigma.renamed(0);
    let mut atoms = s.to_vec();
    atoms.push(renamed.head);
    mgu_ranked(&atoms, |_| 0).is_some()
}

fn existential_free(sigma: &Tgd, s: &[Atom], occ: &HashMap<Term, usize>) -> bool {
    match sigma.existential_index() {
        None => true,
        Some(i) => s.iter().all(|a| {
            a.predicate == sigma.head.predicate && a.arity() == sigma.head.arity() && {
                let t = a.term_at(i);
                t.is_variable() && occ.get(t).copied().unwrap_or(0) <= 1
            }
        }),
    }
}

/// `s` can be collapsed into a single atom: it unifies, and a variable not
/// used elsewhere in the body occurs in every atom of `s` exactly at the
/// existential position of `σ`.
pub fn factorizable(s: &[Atom], sigma: &Tgd, q: &ConjunctiveQuery) -> bool {
    let Some(i) = sigma.existential_index() else {
        return false;
    };
    if s.len() < 2 || mgu_ranked(s, |_| 0).is_none() {
        return false;
    }
    let rest: Vec<&Atom> = q.body.iter().filter(|a| !s.contains(a)).collect();
    let candidates: BTreeSet<&Term> = s.iter().flat_map(|a| a.variables()).collect();
    candidates.into_iter().any(|v| {
        !rest.iter().any(|a| a.contains(v))
            && s.iter().all(|a| {
                a.predicate == sigma.head.predicate && a.arity() == sigma.head.arity() && a.positions_of(v) == [i]
            })
    })
}

fn tier<'a>(original: &'a BTreeSet<Term>, current: &HashSet<Term>) -> impl Fn(&Term) -> u8 + 'a {
    let current = current.clone();
    move |t| {
        if original.contains(t) {
            0
        } else if current.contains(t) {
            1
        } else {
            2
        }
    }
}

/// One rewriting step with `σ^step`; `None` when the unifier does not exist.
/// Variables of `original` (then of `q`) survive unification.
pub fn rewrite_step(
    q: &ConjunctiveQuery,
    s: &[Atom],
    sigma: &Tgd,
    step: usize,
    original: &BTreeSet<Term>,
) -> Option<ConjunctiveQuery> {
    let renamed = sigma.renamed(step);
    let mut atoms = s.to_vec();
    atoms.push(renamed.head.clone());
    let current: HashSet<Term> = q.variables().into_iter().collect();
    let gamma = mgu_ranked(&atoms, tier(original, &current))?;
    Some(apply_rewrite(q, s, &renamed, &gamma))
}

fn apply_rewrite(q: &ConjunctiveQuery, s: &[Atom], renamed: &Tgd, gamma: &Substitution) -> ConjunctiveQuery {
    let body = q
        .body
        .iter()
        .filter(|a| !s.contains(a))
        .chain(&renamed.body)
        .map(|a| gamma.apply_atom(a))
        .collect();
    ConjunctiveQuery::new(gamma.apply_atom(&q.head), body)
}

/// `γ_S(q)` for the most general unifier `γ_S` of `s`.
pub fn factorize_step(q: &ConjunctiveQuery, s: &[Atom], original: &BTreeSet<Term>) -> Option<ConjunctiveQuery> {
    let current: HashSet<Term> = q.variables().into_iter().collect();
    let gamma = mgu_ranked(s, tier(original, &current))?;
    Some(gamma.apply_query(q))
}

/// Drops an atom when it equals an earlier one once every variable that is
/// not in `original` and occurs only once is read as a wildcard. Both atoms
/// then have the same instances, so the result is equivalent to `q`, and
/// bodies cannot grow with copies that differ only in such variables.
pub fn collapse_fresh_duplicates(q: ConjunctiveQuery, original: &BTreeSet<Term>) -> ConjunctiveQuery {
    let mut q = q;
    loop {
        let occ = q.occurrences();
        let wildcard = |t: &Term| t.is_variable() && !original.contains(t) && occ.get(t) == Some(&1);
        let mut seen: HashSet<(&Symbol, Vec<Option<&Term>>)> = HashSet::new();
        let keep: Vec<bool> = q
            .body
            .iter()
            .map(|a| {
                let key = a
                    .args
                    .iter()
                    .map(|t| if wildcard(t) { None } else { Some(t) })
                    .collect();
                seen.insert((&a.predicate, key))
            })
            .collect();
        if keep.iter().all(|k| *k) {
            return q;
        }
        let body = q
            .body
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(a, _)| a.clone())
            .collect();
        q = ConjunctiveQuery::new(q.head.clone(), body);
    }
}

type MguKey = (Vec<Atom>, Vec<u8>);

pub struct Rewriter {
    tgds: Vec<Tgd>,
    by_head: HashMap<Symbol, Vec<usize>>,
    hidden: BTreeSet<Symbol>,
    config: CacheConfig,
    max_path_len: usize,
    eliminator: OnceLock<Option<Eliminator>>,
    mgu_cache: Memo<MguKey, Option<Substitution>>,
    rename_cache: Memo<ConjunctiveQuery, Arc<Canonical>>,
}

impl Rewriter {
    /// `tgds` must be in normal form. Queries mentioning a `hidden`
    /// predicate are explored but never returned.
    pub fn new(tgds: Vec<Tgd>, hidden: BTreeSet<Symbol>) -> Self {
        Self::with_caches(tgds, hidden, CacheConfig::default())
    }

    pub fn with_caches(tgds: Vec<Tgd>, hidden: BTreeSet<Symbol>, config: CacheConfig) -> Self {
        let mut by_head: HashMap<Symbol, Vec<usize>> = HashMap::new();
        for (k, t) in tgds.iter().enumerate() {
            by_head.entry(t.head_predicate().clone()).or_default().push(k);
        }
        Rewriter {
            tgds,
            by_head,
            hidden,
            config,
            max_path_len: DEFAULT_MAX_PATH_LEN,
            eliminator: OnceLock::new(),
            mgu_cache: Memo::new(config.mgu),
            rename_cache: Memo::new(config.rename),
        }
    }

    /// Bound on propagation paths explored when building the cover graph.
    pub fn with_max_path_len(mut self, n: usize) -> Self {
        self.max_path_len = n;
        self.eliminator = OnceLock::new();
        self
    }

    pub fn tgds(&self) -> &[Tgd] {
        &self.tgds
    }

    pub fn hidden(&self) -> &BTreeSet<Symbol> {
        &self.hidden
    }

    pub fn is_linear(&self) -> bool {
        is_linear(&self.tgds)
    }

    /// The eliminator, built on first use; `None` for non-linear rules.
    pub fn eliminator(&self) -> Option<&Eliminator> {
        self.eliminator
            .get_or_init(|| {
                let pg = PropagationGraph::build(&self.tgds);
                let cover =
                    CoverGraph::build_bounded(&self.tgds, &pg, self.max_path_len, DEFAULT_MAX_SEQUENCES).ok()?;
                Eliminator::with_cover_graph(&self.tgds, cover, self.config.elimination).ok()
            })
            .as_ref()
    }

    pub fn canonical(&self, q: &ConjunctiveQuery) -> Arc<Canonical> {
        self.rename_cache
            .get_or_insert_with(q.clone(), || Arc::new(canonical_rename(q)))
    }

    pub fn cache_stats(&self) -> [(&'static str, u64, u64); 2] {
        [
            ("mgu", self.mgu_cache.hits(), self.mgu_cache.misses()),
            ("rename", self.rename_cache.hits(), self.rename_cache.misses()),
        ]
    }

    /// MGU memoized on the atoms with variables numbered by first
    /// occurrence, together with their tiers.
    fn mgu<F: Fn(&Term) -> u8>(&self, atoms: &[Atom], rank: F) -> Option<Substitution> {
        let mut vars: Vec<&Term> = Vec::new();
        let mut ids: HashMap<&Term, usize> = HashMap::new();
        for t in atoms.iter().flat_map(|a| &a.args).filter(|t| t.is_variable()) {
            ids.entry(t).or_insert_with(|| {
                vars.push(t);
                vars.len() - 1
            });
        }
        let local = |i: usize| Term::var(&format!("_{i}"));
        let key_atoms = atoms
            .iter()
            .map(|a| {
                Atom::new(
                    a.predicate.clone(),
                    a.args
                        .iter()
                        .map(|t| if t.is_variable() { local(ids[t]) } else { t.clone() })
                        .collect(),
                )
            })
            .collect::<Vec<_>>();
        let tiers: Vec<u8> = vars.iter().map(|v| rank(v)).collect();
        let key_tiers = tiers.clone();
        let result = self.mgu_cache.get_or_insert_with((key_atoms.clone(), key_tiers), || {
            let index: HashMap<Term, usize> = (0..vars.len()).map(|i| (local(i), i)).collect();
            mgu_ranked(&key_atoms, |t| index.get(t).map_or(0, |&i| tiers[i]))
        })?;
        let back = |t: &Term| -> Term {
            match t {
                Term::Variable(name) => vars[name[1..].parse::<usize>().expect("local variable")].clone(),
                other => other.clone(),
            }
        };
        Some(Substitution::from_pairs(result.iter().map(|(k, v)| (back(k), back(v)))))
    }

    pub fn rewrite(&self, q: &ConjunctiveQuery, opts: &RewriteOptions) -> Result<Rewriting> {
        let start = Instant::now();
        let eliminator = if opts.elimination { self.eliminator() } else { None };
        let mut run = Run {
            rw: self,
            eliminator,
            prune: opts.prune,
            original: q.variables().into_iter().collect(),
            queries: Vec::new(),
            r_index: HashMap::new(),
            all_index: HashMap::new(),
            rejected: HashSet::new(),
            graph: QueryGraph::default(),
            step: 0,
            metrics: Metrics::default(),
        };
        let q0 = run.reduce(q.clone());
        run.admit(q0, Origin::Rewriting);

        let mut queue: VecDeque<usize> = VecDeque::from([0]);
        while let Some(id) = queue.pop_front() {
            if run.queries[id].removed {
                continue;
            }
            if let Some(b) = opts.budget {
                if run.metrics.explored >= b {
                    return Err(Error::BudgetExhausted(b));
                }
            }
            let before = run.queries.len();
            run.explore(id);
            queue.extend(before..run.queries.len());
        }

        let ucq: Ucq = run
            .queries
            .iter()
            .filter(|l| l.origin == Origin::Rewriting && l.explored && !l.removed)
            .filter(|l| l.query.body.iter().all(|a| !self.hidden.contains(&a.predicate)))
            .map(|l| l.canonical.clone())
            .collect();
        let mut metrics = run.metrics;
        metrics.set_output(&ucq);
        metrics.rewrite_time = start.elapsed();
        Ok(Rewriting {
            ucq,
            queries: run.queries,
            graph: run.graph,
            metrics,
        })
    }
}

struct Run<'a> {
    rw: &'a Rewriter,
    eliminator: Option<&'a Eliminator>,
    prune: bool,
    original: BTreeSet<Term>,
    queries: Vec<LabeledQuery>,
    r_index: HashMap<ConjunctiveQuery, usize>,
    all_index: HashMap<ConjunctiveQuery, usize>,
    rejected: HashSet<ConjunctiveQuery>,
    graph: QueryGraph,
    step: usize,
    metrics: Metrics,
}

impl Run<'_> {
    fn reduce(&self, q: ConjunctiveQuery) -> ConjunctiveQuery {
        let q = collapse_fresh_duplicates(q, &self.original);
        match self.eliminator {
            Some(e) => e.reduce(&q),
            None => q,
        }
    }

    fn rank(&self, q: &ConjunctiveQuery) -> impl Fn(&Term) -> u8 + '_ {
        let current: HashSet<Term> = q.variables().into_iter().collect();
        move |t: &Term| {
            if self.original.contains(t) {
                0
            } else if current.contains(t) {
                1
            } else {
                2
            }
        }
    }

    fn explore(&mut self, id: usize) {
        let q = self.queries[id].query.clone();
        let occ = q.occurrences();
        let preds: BTreeSet<&Symbol> = q.body.iter().map(|a| &a.predicate).collect();
        let sigmas: Vec<usize> = preds
            .iter()
            .filter_map(|p| self.rw.by_head.get(*p))
            .flatten()
            .copied()
            .sorted()
            .collect();
        for k in sigmas {
            let sigma = &self.rw.tgds[k];
            let candidates: Vec<&Atom> = q
                .body
                .iter()
                .filter(|a| {
                    existential_free(sigma, std::slice::from_ref(*a), &occ) && a.predicate == sigma.head.predicate
                })
                .filter(|a| mgu_ranked(&[(*a).clone(), sigma.renamed(0).head], |_| 0).is_some())
                .collect();
            for size in 1..=candidates.len() {
                for s in candidates.iter().combinations(size) {
                    let s: Vec<Atom> = s.into_iter().map(|a| (*a).clone()).collect();
                    let renamed = sigma.renamed(self.step + 1);
                    let mut atoms = s.clone();
                    atoms.push(renamed.head.clone());
                    let Some(gamma) = self.rw.mgu(&atoms, self.rank(&q)) else {
                        continue;
                    };
                    self.step += 1;
                    self.metrics.generated += 1;
                    let child = self.reduce(apply_rewrite(&q, &s, &renamed, &gamma));
                    self.offer(child, Origin::Rewriting, id);
                }
            }

            let Some(ex) = sigma.existential_index() else {
                continue;
            };
            let vars: Vec<&Term> = q.body.iter().flat_map(|a| a.variables()).unique().collect();
            for v in vars {
                let s: Vec<Atom> = q.body.iter().filter(|a| a.contains(v)).cloned().collect();
                if s.len() < 2
                    || !s.iter().all(|a| {
                        a.predicate == sigma.head.predicate
                            && a.arity() == sigma.head.arity()
                            && a.positions_of(v) == [ex]
                    })
                {
                    continue;
                }
                let Some(gamma) = self.rw.mgu(&s, self.rank(&q)) else {
                    continue;
                };
                self.metrics.factorizations += 1;
                let child = self.reduce(gamma.apply_query(&q));
                self.offer(child, Origin::Factorization, id);
            }
        }
        self.queries[id].explored = true;
        self.metrics.explored += 1;
    }

    fn offer(&mut self, q: ConjunctiveQuery, origin: Origin, parent: usize) {
        let canon = self.rw.canonical(&q);
        let key = &canon.query;
        let existing = match origin {
            Origin::Rewriting => self.r_index.get(key),
            Origin::Factorization => self.all_index.get(key),
        };
        if let Some(&id) = existing {
            self.graph.add_edge(parent, id, origin);
            return;
        }
        if self.prune && origin == Origin::Rewriting {
            if self.rejected.contains(key) {
                return;
            }
            let subsumed = self
                .queries
                .iter()
                .any(|l| l.origin == Origin::Rewriting && !l.removed && subsumes(&l.query, &q));
            if subsumed {
                self.rejected.insert(key.clone());
                self.metrics.pruned += 1;
                return;
            }
            let victims: Vec<usize> = (0..self.queries.len())
                .filter(|&i| {
                    let l = &self.queries[i];
                    l.origin == Origin::Rewriting && !l.removed && subsumes(&q, &l.query) && !subsumes(&l.query, &q)
                })
                .collect();
            let id = self.admit_canonical(q, canon, origin);
            self.graph.add_edge(parent, id, origin);
            for v in victims {
                self.remove(v, id);
            }
            return;
        }
        let id = self.admit_canonical(q, canon, origin);
        self.graph.add_edge(parent, id, origin);
    }

    /// Drops `id`, then every rewriting-labeled descendant all of whose
    /// parents are dropped, except `keep` (the query that subsumes `id`,
    /// which may itself descend from it).
    fn remove(&mut self, id: usize, keep: usize) {
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if self.queries[n].removed || n == keep {
                continue;
            }
            self.queries[n].removed = true;
            self.metrics.pruned += 1;
            let key = self.queries[n].canonical.clone();
            if self.r_index.get(&key) == Some(&n) {
                self.r_index.remove(&key);
            }
            if self.all_index.get(&key) == Some(&n) {
                self.all_index.remove(&key);
            }
            for &c in self.graph.children(n) {
                let l = &self.queries[c];
                if l.origin == Origin::Rewriting
                    && !l.removed
                    && self.graph.parents(c).iter().all(|&p| self.queries[p].removed)
                {
                    stack.push(c);
                }
            }
        }
    }

    fn admit(&mut self, q: ConjunctiveQuery, origin: Origin) -> usize {
        let canon = self.rw.canonical(&q);
        self.admit_canonical(q, canon, origin)
    }

    fn admit_canonical(&mut self, q: ConjunctiveQuery, canon: Arc<Canonical>, origin: Origin) -> usize {
        let id = self.graph.add_node();
        let key = canon.query.clone();
        if origin == Origin::Rewriting {
            self.r_index.insert(key.clone(), id);
        }
        self.all_index.entry(key.clone()).or_insert(id);
        // bodies are kept in canonical order so that subsets are enumerated
        // deterministically
        let body = canon.order.iter().map(|&i| q.body[i].clone()).collect();
        self.queries.push(LabeledQuery {
            query: ConjunctiveQuery { head: q.head, body },
            canonical: key,
            origin,
            explored: false,
            removed: false,
        });
        id
    }
}
