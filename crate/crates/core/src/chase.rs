//! Bounded oblivious chase, query evaluation over instances, and the check
//! queries for functional dependencies and negative constraints.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{
    for_each_homomorphism, match_atom, sym, Atom, AtomIndex, ConjunctiveQuery, FunctionalDependency,
    NegativeConstraint, RawTgd, Substitution, Symbol, Term,
};

/// One rule application: the rule index and the images of its body
/// variables, in sorted variable order.
pub type Trigger = (usize, Vec<Term>);

#[derive(Clone, Debug, Default)]
pub struct Instance {
    /// Every atom, in the order it was added.
    pub atoms: Vec<Atom>,
    present: HashSet<Atom>,
    next_null: u64,
    pub log: Vec<Trigger>,
    /// `sizes[k]`: number of atoms after `k` applications.
    sizes: Vec<usize>,
    /// No unapplied trigger was left when the chase stopped.
    pub saturated: bool,
}

impl Instance {
    pub fn new(facts: &[Atom]) -> Self {
        let mut i = Instance::default();
        for f in facts {
            i.add(f.clone());
        }
        i
    }

    /// The atoms of `chase^[k]`. Scheduling does not depend on the budget,
    /// so a shorter chase is always a prefix of a longer one.
    pub fn prefix(&self, k: usize) -> &[Atom] {
        let n = self.sizes.get(k).copied().unwrap_or(self.atoms.len());
        &self.atoms[..n]
    }

    fn add(&mut self, a: Atom) -> bool {
        if self.present.insert(a.clone()) {
            self.atoms.push(a);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.present.contains(a)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn fresh_null(&mut self) -> Term {
        self.next_null += 1;
        Term::Null(self.next_null)
    }

    /// Atoms in a deterministic, sorted order.
    pub fn sorted(&self) -> Vec<&Atom> {
        let mut v: Vec<&Atom> = self.atoms.iter().collect();
        v.sort();
        v
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.sorted() {
            writeln!(f, "{a}.")?;
        }
        Ok(())
    }
}

fn trigger_of(k: usize, rule: &RawTgd, h: &Substitution) -> Trigger {
    (k, rule.body_variables().iter().map(|v| h.apply_term(v)).collect())
}

/// Applies the oblivious chase to `facts` for at most `steps` rule
/// applications. Triggers are applied first-found first, so every trigger
/// is eventually applied when the budget allows.
pub fn chase(facts: &[Atom], rules: &[RawTgd], steps: usize) -> Instance {
    let mut inst = Instance::new(facts);
    let mut seen: HashSet<Trigger> = HashSet::new();
    let mut queue: VecDeque<(Trigger, Substitution)> = VecDeque::new();

    let discover =
        |inst: &Instance, new: &[Atom], seen: &mut HashSet<Trigger>, queue: &mut VecDeque<(Trigger, Substitution)>| {
            let index = AtomIndex::new(&inst.atoms);
            for (k, rule) in rules.iter().enumerate() {
                for (j, pattern) in rule.body.iter().enumerate() {
                    for fact in new {
                        let Some(init) = match_atom(pattern, fact) else {
                            continue;
                        };
                        let rest: Vec<Atom> = rule
                            .body
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != j)
                            .map(|(_, a)| a.clone())
                            .collect();
                        for_each_homomorphism(&rest, &index, &init, |h| {
                            let t = trigger_of(k, rule, h);
                            if seen.insert(t.clone()) {
                                queue.push_back((t, h.clone()));
                            }
                            true
                        });
                    }
                }
            }
        };

    inst.sizes.push(inst.atoms.len());
    let initial = inst.atoms.clone();
    discover(&inst, &initial, &mut seen, &mut queue);
    while inst.log.len() < steps {
        let Some((trigger, h)) = queue.pop_front() else {
            break;
        };
        let rule = &rules[trigger.0];
        let mut ext = h.clone();
        for z in rule.existential_variables() {
            let n = inst.fresh_null();
            ext.insert(z, n);
        }
        let mut added = Vec::new();
        for a in &rule.head {
            let fact = ext.apply_atom(a);
            if inst.add(fact.clone()) {
                added.push(fact);
            }
        }
        inst.log.push(trigger);
        inst.sizes.push(inst.atoms.len());
        if !added.is_empty() {
            discover(&inst, &added, &mut seen, &mut queue);
        }
    }
    inst.saturated = queue.is_empty();
    inst
}

/// Constant tuples `h(head)` for homomorphisms `h` of the body into `atoms`.
pub fn evaluate<'a, I>(q: &ConjunctiveQuery, atoms: I) -> BTreeSet<Vec<Term>>
where
    I: IntoIterator<Item = &'a Atom>,
{
    let index = AtomIndex::new(atoms);
    let mut out = BTreeSet::new();
    for_each_homomorphism(&q.body, &index, &Substitution::new(), |h| {
        let tuple: Vec<Term> = q.head.args.iter().map(|t| h.apply_term(t)).collect();
        if tuple.iter().all(Term::is_constant) {
            out.insert(tuple);
        }
        true
    });
    out
}

pub fn evaluate_ucq<'a, I>(ucq: &[ConjunctiveQuery], atoms: I) -> BTreeSet<Vec<Term>>
where
    I: IntoIterator<Item = &'a Atom>,
{
    let atoms: Vec<&Atom> = atoms.into_iter().collect();
    ucq.iter().flat_map(|q| evaluate(q, atoms.iter().copied())).collect()
}

#[derive(Clone, Debug)]
pub struct OracleAnswer {
    pub answers: BTreeSet<Vec<Term>>,
    /// The chase reached a fixpoint, so the answers are exact; otherwise
    /// they are a subset of the certain answers.
    pub saturated: bool,
}

pub fn certain_answers(q: &ConjunctiveQuery, facts: &[Atom], rules: &[RawTgd], steps: usize) -> OracleAnswer {
    let inst = chase(facts, rules, steps);
    OracleAnswer {
        answers: evaluate(q, &inst.atoms),
        saturated: inst.saturated,
    }
}

/// Name for the inequality predicate that clashes with no user predicate.
pub fn inequality_predicate<'a, I>(predicates: I) -> Symbol
where
    I: IntoIterator<Item = &'a Symbol>,
{
    let used: BTreeSet<&Symbol> = predicates.into_iter().collect();
    let mut name = String::from("neq");
    while used.iter().any(|p| p.as_ref() == name) {
        name.push('_');
    }
    sym(&name)
}

/// One Boolean query per dependent attribute: two atoms agreeing on the
/// determining attributes and differing on that attribute.
pub fn fd_check_queries(
    fds: &[FunctionalDependency],
    arities: &BTreeMap<Symbol, usize>,
    neq: &Symbol,
) -> Result<Vec<(usize, ConjunctiveQuery)>> {
    let mut out = Vec::new();
    for (k, fd) in fds.iter().enumerate() {
        let arity = *arities
            .get(&fd.predicate)
            .ok_or_else(|| Error::Config(format!("arity of `{}` unknown for {fd}", fd.predicate)))?;
        for &j in &fd.rhs {
            let left: Vec<Term> = (1..=arity).map(|i| Term::var(&format!("X{i}"))).collect();
            let right: Vec<Term> = (1..=arity)
                .map(|i| {
                    if fd.lhs.contains(&i) {
                        left[i - 1].clone()
                    } else {
                        Term::var(&format!("Y{i}"))
                    }
                })
                .collect();
            let body = vec![
                Atom::new(fd.predicate.clone(), left.clone()),
                Atom::new(fd.predicate.clone(), right.clone()),
                Atom::new(neq.clone(), vec![left[j - 1].clone(), right[j - 1].clone()]),
            ];
            out.push((k, ConjunctiveQuery::new(Atom::new(sym("p"), Vec::new()), body)));
        }
    }
    Ok(out)
}

/// `neq(a, b)` for every pair of distinct constants of `facts`.
pub fn materialize_inequality(facts: &[Atom], neq: &Symbol) -> Vec<Atom> {
    let consts: BTreeSet<&Term> = facts.iter().flat_map(|a| &a.args).filter(|t| t.is_constant()).collect();
    consts
        .iter()
        .flat_map(|a| consts.iter().filter(move |b| a != *b).map(move |b| (a, b)))
        .map(|(a, b)| Atom::new(neq.clone(), vec![(*a).clone(), (*b).clone()]))
        .collect()
}

/// Pairs of `fd.predicate` atoms agreeing on the determining attributes and
/// differing on some dependent attribute, found by scanning.
pub fn fd_violations<'a>(fd: &FunctionalDependency, atoms: &'a [Atom]) -> Vec<(&'a Atom, &'a Atom)> {
    let rel: Vec<&Atom> = atoms.iter().filter(|a| a.predicate == fd.predicate).collect();
    let mut out = Vec::new();
    for (i, a) in rel.iter().enumerate() {
        for b in &rel[i + 1..] {
            let agree = fd.lhs.iter().all(|&k| a.term_at(k) == b.term_at(k));
            if agree && fd.rhs.iter().any(|&k| a.term_at(k) != b.term_at(k)) {
                out.push((*a, *b));
            }
        }
    }
    out
}

/// `p() <- body(ν)`.
pub fn nc_check_query(nc: &NegativeConstraint) -> ConjunctiveQuery {
    ConjunctiveQuery::new(Atom::new(sym("p"), Vec::new()), nc.body.clone())
}

/// The constraint body with every variable distinguished, for listing
/// violating tuples.
pub fn nc_witness_query(nc: &NegativeConstraint) -> ConjunctiveQuery {
    let q = nc_check_query(nc);
    let head = Atom::new(sym("p"), q.variables());
    ConjunctiveQuery::new(head, q.body)
}
