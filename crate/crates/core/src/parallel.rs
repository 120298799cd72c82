//! Split a query into components that share no existential join, rewrite
//! them independently and join the results back.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::time::Instant;

use itertools::Itertools;

use crate::error::Result;
use crate::model::{mgu_ranked, sym, Atom, ConjunctiveQuery, Position, Symbol, Term, Ucq};
use crate::normalize::reserved_prefix;
use crate::rewriter::{Metrics, RewriteOptions, Rewriter};
use crate::subsume::{prune_tail, SubsumptionMode};

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Body indexes of each component, in body order.
    pub components: Vec<Vec<usize>>,
    pub queries: Vec<ConjunctiveQuery>,
    /// `head <- p_1(..), .., p_m(..)`.
    pub reconciliation: ConjunctiveQuery,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.queries {
            writeln!(f, "{q}")?;
        }
        write!(f, "{}", self.reconciliation)
    }
}

/// Variables of `q` whose body occurrences all sit at positions affected
/// with respect to one and the same rule.
pub fn existential_join_variables(q: &ConjunctiveQuery, affected: &[BTreeSet<Position>]) -> BTreeSet<Term> {
    let mut positions: HashMap<&Term, Vec<Position>> = HashMap::new();
    for a in &q.body {
        for (i, t) in a.args.iter().enumerate() {
            if t.is_variable() {
                positions.entry(t).or_default().push(a.position(i + 1));
            }
        }
    }
    positions
        .into_iter()
        .filter(|(_, ps)| affected.iter().any(|aff| ps.iter().all(|p| aff.contains(p))))
        .map(|(t, _)| t.clone())
        .collect()
}

/// The finest partition of the body in which atoms sharing an
/// existential-join variable stay together.
pub fn decompose(q: &ConjunctiveQuery, affected: &[BTreeSet<Position>]) -> Decomposition {
    let linking = existential_join_variables(q, affected);
    let n = q.body.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for v in &linking {
        let holders: Vec<usize> = (0..n).filter(|&i| q.body[i].contains(v)).collect();
        for w in holders.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }

    let mut names: BTreeSet<Symbol> = q.predicates();
    names.insert(q.head.predicate.clone());
    let prefix = reserved_prefix(q.head.predicate.as_ref(), names.iter());
    let distinguished: HashSet<Term> = q.distinguished().into_iter().collect();
    let order = q.variables();
    let mut queries = Vec::new();
    let mut body = Vec::new();
    for (k, g) in groups.iter().enumerate() {
        let inside: HashSet<&Term> = g.iter().flat_map(|&i| q.body[i].variables()).collect();
        let outside: HashSet<&Term> = (0..n)
            .filter(|i| !g.contains(i))
            .flat_map(|i| q.body[i].variables())
            .collect();
        let head_vars: Vec<Term> = order
            .iter()
            .filter(|v| inside.contains(v) && (distinguished.contains(v) || outside.contains(v)))
            .cloned()
            .collect();
        let head = Atom::new(sym(&format!("{prefix}{}", k + 1)), head_vars);
        body.push(head.clone());
        queries.push(ConjunctiveQuery::new(
            head,
            g.iter().map(|&i| q.body[i].clone()).collect(),
        ));
    }
    Decomposition {
        components: groups,
        queries,
        reconciliation: ConjunctiveQuery::new(q.head.clone(), body),
    }
}

/// Expands the reconciliation rule over every choice of one disjunct per
/// component. Disjuncts are renamed apart and their heads unified with the
/// matching body atom of the rule.
pub fn unfold(rewritings: &[Ucq], rule: &ConjunctiveQuery) -> Ucq {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let rule_vars: HashSet<Term> = rule.variables().into_iter().collect();
    for choice in rewritings.iter().map(|u| u.iter()).multi_cartesian_product() {
        let parts: Vec<ConjunctiveQuery> = choice.iter().enumerate().map(|(i, d)| rename_apart(d, i)).collect();
        let left = Atom::new(sym("="), parts.iter().flat_map(|d| d.head.args.clone()).collect());
        let right = Atom::new(sym("="), rule.body.iter().flat_map(|a| a.args.clone()).collect());
        let Some(gamma) = mgu_ranked(&[right, left], |t| if rule_vars.contains(t) { 0 } else { 1 }) else {
            continue;
        };
        let body = parts.iter().flat_map(|d| gamma.apply_atoms(&d.body)).collect();
        let q = ConjunctiveQuery::new(gamma.apply_atom(&rule.head), body);
        let key = crate::model::canonical_rename(&q).query;
        if seen.insert(key.clone()) {
            out.push(key);
        }
    }
    if rewritings.is_empty() {
        out.push(ConjunctiveQuery::new(rule.head.clone(), Vec::new()));
    }
    out
}

fn rename_apart(q: &ConjunctiveQuery, k: usize) -> ConjunctiveQuery {
    let s = crate::model::Substitution::from_pairs(
        q.variables()
            .into_iter()
            .map(|v| (v.clone(), Term::var(&format!("{v}#{k}")))),
    );
    s.apply_query(q)
}

#[derive(Clone, Debug)]
pub struct ParallelRewriting {
    pub ucq: Ucq,
    pub decomposition: Decomposition,
    /// Rewriting of each component query, in component order.
    pub components: Vec<Ucq>,
    pub metrics: Metrics,
}

#[derive(Clone, Copy, Debug)]
pub struct ParallelOptions {
    pub rewrite: RewriteOptions,
    pub subsumption: SubsumptionMode,
    /// Upper bound on worker threads.
    pub jobs: usize,
}

impl Default for ParallelOptions {
    fn default() -> Self {
        ParallelOptions {
            rewrite: RewriteOptions::default(),
            subsumption: SubsumptionMode::None,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Decompose, rewrite each component on its own worker, unfold.
pub fn rewrite_parallel(
    rw: &Rewriter,
    q: &ConjunctiveQuery,
    affected: &[BTreeSet<Position>],
    opts: &ParallelOptions,
) -> Result<ParallelRewriting> {
    let split_start = Instant::now();
    let eliminator = if opts.rewrite.elimination {
        rw.eliminator()
    } else {
        None
    };
    let reduced = match eliminator {
        Some(e) => e.reduce(q),
        None => q.clone(),
    };
    let decomposition = decompose(&reduced, affected);
    let split_time = split_start.elapsed();

    let rewrite_start = Instant::now();
    let mut ropts = opts.rewrite;
    ropts.prune = opts.subsumption == SubsumptionMode::IRew;
    let jobs = opts.jobs.max(1);
    let mut results: Vec<Option<Result<crate::rewriter::Rewriting>>> = (0..decomposition.len()).map(|_| None).collect();
    let indexes: Vec<usize> = (0..decomposition.len()).collect();
    for batch in indexes.chunks(jobs) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = batch
                .iter()
                .map(|&i| {
                    let cq = &decomposition.queries[i];
                    (i, scope.spawn(move || rw.rewrite(cq, &ropts)))
                })
                .collect();
            for (i, h) in handles {
                results[i] = Some(h.join().expect("rewriting worker panicked"));
            }
        });
    }
    let mut metrics = Metrics {
        components: decomposition.len(),
        split_time,
        ..Metrics::default()
    };
    let mut components = Vec::new();
    for r in results {
        let r = r.expect("every component rewritten")?;
        metrics.absorb(&r.metrics);
        let ucq = if opts.subsumption == SubsumptionMode::IDec {
            prune_tail(&r.ucq)
        } else {
            r.ucq
        };
        components.push(ucq);
    }
    metrics.rewrite_time = rewrite_start.elapsed();

    let unfold_start = Instant::now();
    let mut ucq = unfold(&components, &decomposition.reconciliation);
    if let Some(e) = eliminator {
        let mut seen = HashSet::new();
        ucq = ucq
            .iter()
            .map(|c| crate::model::canonical_rename(&e.reduce(c)).query)
            .filter(|c| seen.insert(c.clone()))
            .collect();
    }
    if opts.subsumption == SubsumptionMode::Tail {
        ucq = prune_tail(&ucq);
    }
    metrics.unfold_time = unfold_start.elapsed();
    metrics.set_output(&ucq);
    Ok(ParallelRewriting {
        ucq,
        decomposition,
        components,
        metrics,
    })
}
