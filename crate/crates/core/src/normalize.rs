//! Normal form and syntactic classification of rule sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{sym, Atom, RawTgd, Symbol, Term, Tgd};

#[derive(Clone, Debug)]
pub struct Normalized {
    pub tgds: Vec<Tgd>,
    /// `provenance[i]` is the index of the input rule `tgds[i]` came from.
    pub provenance: Vec<usize>,
    pub aux_predicates: BTreeSet<Symbol>,
    pub aux_prefix: String,
}

impl Normalized {
    pub fn is_aux(&self, predicate: &Symbol) -> bool {
        self.aux_predicates.contains(predicate)
    }
}

/// A prefix no user predicate starts with: `aux_`, `aux__`, ...
pub fn reserved_prefix<'a, I>(base: &str, predicates: I) -> String
where
    I: IntoIterator<Item = &'a Symbol>,
{
    let preds: Vec<&Symbol> = predicates.into_iter().collect();
    let mut prefix = format!("{base}_");
    while preds.iter().any(|p| p.starts_with(prefix.as_str())) {
        prefix.push('_');
    }
    prefix
}

/// Brings every rule into normal form: one head atom with at most one
/// existential variable, occurring once.
///
/// A rule with existentials `Z1..Zm` and frontier `X̄` becomes the chain
/// `body -> aux1(X̄,Z1)`, `aux1(X̄,Z1) -> aux2(X̄,Z1,Z2)`, ..., followed by one
/// rule `auxm(X̄,Z1..Zm) -> a` per head atom. Rules without existentials are
/// split per head atom.
pub fn normalize<'a, I>(raw: &[RawTgd], user_predicates: I) -> Normalized
where
    I: IntoIterator<Item = &'a Symbol>,
{
    let mut preds: BTreeSet<Symbol> = user_predicates.into_iter().cloned().collect();
    for r in raw {
        preds.extend(r.body.iter().chain(&r.head).map(|a| a.predicate.clone()));
    }
    let prefix = reserved_prefix("aux", &preds);
    let mut out = Normalized {
        tgds: Vec::new(),
        provenance: Vec::new(),
        aux_predicates: BTreeSet::new(),
        aux_prefix: prefix.clone(),
    };
    for (k, rule) in raw.iter().enumerate() {
        let mut push = |t: Tgd| {
            out.tgds.push(t);
            out.provenance.push(k);
        };
        if rule.is_normal() {
            push(Tgd::new(rule.body.clone(), rule.head[0].clone()).expect("normal"));
            continue;
        }
        let existentials = rule.existential_variables();
        if existentials.is_empty() {
            for h in &rule.head {
                push(Tgd::new(rule.body.clone(), h.clone()).expect("no existentials"));
            }
            continue;
        }
        let mut args: Vec<Term> = rule.frontier();
        let mut prev_body = rule.body.clone();
        for (step, z) in existentials.iter().enumerate() {
            args.push(z.clone());
            let name = sym(&format!("{prefix}{}_{}", k + 1, step + 1));
            out.aux_predicates.insert(name.clone());
            let head = Atom::new(name, args.clone());
            push(Tgd::new(prev_body, head.clone()).expect("one fresh existential"));
            prev_body = vec![head];
        }
        for h in &rule.head {
            push(Tgd::new(prev_body.clone(), h.clone()).expect("all variables bound"));
        }
    }
    out
}

pub fn is_linear(tgds: &[Tgd]) -> bool {
    tgds.iter().all(Tgd::is_linear)
}

/// Every body atom carries every body variable.
pub fn is_multi_linear(tgds: &[Tgd]) -> bool {
    tgds.iter().all(|t| {
        let vars = t.body_variables();
        t.body.iter().all(|a| vars.iter().all(|v| a.contains(v)))
    })
}

/// Result of the marking procedure: per rule, the marked body variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Marking {
    pub rules: Vec<RawTgd>,
    pub marked: Vec<BTreeSet<Term>>,
}

impl Marking {
    /// Marked occurrences as (body atom index, 1-based position).
    pub fn occurrences(&self, rule: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.rules[rule].body.iter().enumerate() {
            for (j, t) in a.args.iter().enumerate() {
                if self.marked[rule].contains(t) {
                    out.push((i, j + 1));
                }
            }
        }
        out
    }

    /// Every marked variable occurs at most once in its rule body.
    pub fn is_sticky(&self) -> bool {
        self.rules.iter().zip(&self.marked).all(|(r, marked)| {
            marked
                .iter()
                .all(|v| r.body.iter().flat_map(|a| a.args.iter()).filter(|t| *t == v).count() <= 1)
        })
    }

    fn propagate_once(&mut self) -> bool {
        let mut changed = false;
        for s in 0..self.rules.len() {
            let body_vars = self.rules[s].body_variables();
            let mut newly = Vec::new();
            for a in &self.rules[s].head {
                for v in a.variables().filter(|v| body_vars.contains(*v)) {
                    if self.marked[s].contains(v) || newly.contains(v) {
                        continue;
                    }
                    let positions = a.positions_of(v);
                    let hit = self.rules.iter().zip(&self.marked).any(|(other, marks)| {
                        other.body.iter().any(|b| {
                            b.predicate == a.predicate
                                && b.arity() == a.arity()
                                && positions.iter().all(|&p| {
                                    let t = b.term_at(p);
                                    t.is_variable() && marks.contains(t)
                                })
                        })
                    });
                    if hit {
                        newly.push(v.clone());
                    }
                }
            }
            if !newly.is_empty() {
                changed = true;
                self.marked[s].extend(newly);
            }
        }
        changed
    }
}

/// Initial marking followed by the propagation step up to its fixpoint.
pub fn smark(rules: &[RawTgd]) -> Marking {
    let marked = rules
        .iter()
        .map(|r| {
            r.body_variables()
                .into_iter()
                .filter(|v| r.head.iter().any(|a| !a.contains(v)))
                .collect()
        })
        .collect();
    let mut m = Marking {
        rules: rules.to_vec(),
        marked,
    };
    while m.propagate_once() {}
    m
}

pub fn is_sticky(tgds: &[Tgd]) -> bool {
    let raw: Vec<RawTgd> = tgds.iter().map(Tgd::to_raw).collect();
    smark(&raw).is_sticky()
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (r, marks)) in self.rules.iter().zip(&self.marked).enumerate() {
            let names: Vec<String> = marks.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{:>3}  {r}  marked: {{{}}}", i + 1, names.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub linear: bool,
    pub multi_linear: bool,
    /// Verdict on the normalized rules.
    pub sticky: bool,
    /// Verdict on the rules as written (single-head rules only; multi-head
    /// rules are marked the same way, per head atom).
    pub sticky_input: bool,
}

impl Classification {
    pub fn guarantees_termination(&self) -> bool {
        self.linear || self.multi_linear || self.sticky
    }
}

pub fn classify(raw: &[RawTgd], normalized: &[Tgd]) -> Classification {
    Classification {
        linear: is_linear(normalized),
        multi_linear: is_multi_linear(normalized),
        sticky: is_sticky(normalized),
        sticky_input: smark(raw).is_sticky(),
    }
}

/// Per-predicate arities over a rule set, for callers that need the schema.
pub fn arities(tgds: &[Tgd]) -> BTreeMap<Symbol, usize> {
    tgds.iter()
        .flat_map(|t| t.body.iter().chain(std::iter::once(&t.head)))
        .map(|a| (a.predicate.clone(), a.arity()))
        .collect()
}
