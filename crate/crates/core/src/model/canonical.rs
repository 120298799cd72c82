use std::cmp::Ordering;
use std::collections::HashMap;

use super::atom::Atom;
use super::query::ConjunctiveQuery;
use super::subst::Substitution;
use super::term::{Symbol, Term};

/// Search nodes explored before ties are no longer branched on. Past this
/// point the form is still a valid renaming but may differ between
/// isomorphic inputs; only highly symmetric bodies ever get there.
const BRANCH_LIMIT: usize = 10_000;

/// `A`..`Z`, then `A1`..`Z1`, `A2`, ...
pub fn canonical_var_name(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    match i / 26 {
        0 => letter.to_string(),
        n => format!("{letter}{n}"),
    }
}

#[derive(Clone, Debug)]
pub struct Canonical {
    pub query: ConjunctiveQuery,
    /// `order[k]` is the index in the input body of the k-th canonical atom.
    pub order: Vec<usize>,
    /// Input variable to canonical variable.
    pub renaming: Substitution,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum KeyArg {
    Const(Symbol),
    Null(u64),
    Var(usize),
    Fresh(usize),
}

type AtomKey = (Symbol, Vec<KeyArg>);

struct Search<'q> {
    body: &'q [Atom],
    assigned: HashMap<&'q Term, usize>,
    next: usize,
    prefix: Vec<AtomKey>,
    order: Vec<usize>,
    best: Option<(Vec<AtomKey>, Vec<usize>)>,
    nodes: usize,
}

impl<'q> Search<'q> {
    fn key(&self, a: &Atom) -> AtomKey {
        let mut local: Vec<&Term> = Vec::new();
        let args = a
            .args
            .iter()
            .map(|t| match t {
                Term::Constant(c) => KeyArg::Const(c.clone()),
                Term::Null(n) => KeyArg::Null(*n),
                Term::Variable(_) => match self.assigned.get(t) {
                    Some(&i) => KeyArg::Var(i),
                    None => match local.iter().position(|u| *u == t) {
                        Some(i) => KeyArg::Fresh(i),
                        None => {
                            local.push(t);
                            KeyArg::Fresh(local.len() - 1)
                        }
                    },
                },
            })
            .collect();
        (a.predicate.clone(), args)
    }

    fn prefix_cmp(&self) -> Ordering {
        match &self.best {
            None => Ordering::Less,
            Some((best, _)) => self.prefix.as_slice().cmp(&best[..self.prefix.len()]),
        }
    }

    fn dfs(&mut self, remaining: &mut Vec<usize>) {
        if remaining.is_empty() {
            let better = match &self.best {
                None => true,
                Some((best, _)) => self.prefix < *best,
            };
            if better {
                self.best = Some((self.prefix.clone(), self.order.clone()));
            }
            return;
        }
        self.nodes += 1;
        let keys: Vec<AtomKey> = remaining.iter().map(|&i| self.key(&self.body[i])).collect();
        let min = keys.iter().min().expect("nonempty").clone();
        let mut candidates: Vec<usize> = (0..remaining.len()).filter(|&k| keys[k] == min).collect();

        self.prefix.push(min);
        if self.prefix_cmp() == Ordering::Greater {
            self.prefix.pop();
            return;
        }

        if candidates.len() > 1 {
            // Tied atoms whose unassigned variables appear in no other
            // remaining atom are interchangeable; branching on one suffices.
            let isolated = |k: usize| {
                let a = &self.body[remaining[k]];
                a.variables().filter(|v| !self.assigned.contains_key(v)).all(|v| {
                    remaining
                        .iter()
                        .enumerate()
                        .all(|(j, &i)| j == k || !self.body[i].contains(v))
                })
            };
            let mut kept_isolated = false;
            candidates.retain(|&k| {
                if isolated(k) {
                    let keep = !kept_isolated;
                    kept_isolated = true;
                    keep
                } else {
                    true
                }
            });
            if self.nodes > BRANCH_LIMIT {
                candidates.truncate(1);
            }
        }

        for k in candidates {
            let idx = remaining.remove(k);
            let atom = &self.body[idx];
            let mut fresh: Vec<&Term> = Vec::new();
            for t in atom.variables() {
                if !self.assigned.contains_key(t) {
                    self.assigned.insert(t, self.next);
                    self.next += 1;
                    fresh.push(t);
                }
            }
            self.order.push(idx);
            self.dfs(remaining);
            self.order.pop();
            for t in fresh {
                self.assigned.remove(t);
                self.next -= 1;
            }
            remaining.insert(k, idx);
        }
        self.prefix.pop();
    }
}

/// Renames `q` into a form shared exactly by the queries equal to it modulo
/// a bijective variable renaming (and body order).
///
/// Head variables are numbered first, in head order. The body is then built
/// one atom at a time, always taking an atom with the smallest key, where
/// already-numbered variables are compared by number and the others by
/// their first position in the atom; ties are explored and the
/// lexicographically smallest sequence wins.
pub fn canonical_rename(q: &ConjunctiveQuery) -> Canonical {
    let mut search = Search {
        body: &q.body,
        assigned: HashMap::new(),
        next: 0,
        prefix: Vec::new(),
        order: Vec::new(),
        best: None,
        nodes: 0,
    };
    for t in q.head.variables() {
        if !search.assigned.contains_key(t) {
            search.assigned.insert(t, search.next);
            search.next += 1;
        }
    }
    let mut remaining: Vec<usize> = (0..q.body.len()).collect();
    search.dfs(&mut remaining);
    let order = search.best.map(|(_, o)| o).unwrap_or_default();

    let mut names: HashMap<&Term, usize> = HashMap::new();
    for t in q
        .head
        .variables()
        .chain(order.iter().flat_map(|&i| q.body[i].variables()))
    {
        let n = names.len();
        names.entry(t).or_insert(n);
    }
    let renaming = Substitution::from_pairs(
        names
            .iter()
            .map(|(t, &i)| ((*t).clone(), Term::var(&canonical_var_name(i)))),
    );
    let query = ConjunctiveQuery {
        head: renaming.apply_atom(&q.head),
        body: order.iter().map(|&i| renaming.apply_atom(&q.body[i])).collect(),
    };
    Canonical { query, order, renaming }
}
