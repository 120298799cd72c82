#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xrewrite::graphs::affected_positions;
use xrewrite::model::{sym, Atom, ConjunctiveQuery, Position, RawTgd, Symbol, Term};
use xrewrite::normalize::{normalize, smark, Normalized};
use xrewrite::parser::parse_document;
use xrewrite::rewriter::Rewriter;

pub const FINANCE: &str = "
    stockPortfolio(X,Y,Z) -> company(X,V,W).
    stockPortfolio(X,Y,Z) -> stock(Y,V,W).
    listComponent(X,Y) -> finIndex(Y,Z,W).
    listComponent(X,Y) -> stock(X,Z,W).
    stockPortfolio(X,Y,Z) -> hasStock(Y,X).
    hasStock(X,Y) -> stockPortfolio(Y,X,Z).
    stock(X,Y,Z) -> stockPortfolio(V,X,W).
    stock(X,Y,Z) -> finInstrument(X).
    company(X,Y,Z) -> legalPerson(X).";

pub const FIN_QUERY: &str =
    "? p(A,B,C) :- finInstrument(A), stockPortfolio(B,A,D), company(B,E,F), listComponent(A,C), finIndex(C,G,H).";

pub const COLLAB: &str = "project(X), inArea(X,Y) -> hasCollaborator(Z,Y,X).";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Linear,
    Sticky,
}

#[derive(Clone, Debug)]
pub struct Case {
    pub kind: Kind,
    pub rules: Vec<RawTgd>,
    pub normalized: Normalized,
    pub arities: BTreeMap<Symbol, usize>,
    pub facts: Vec<Atom>,
    pub query: ConjunctiveQuery,
}

impl Case {
    pub fn rewriter(&self) -> Rewriter {
        Rewriter::new(self.normalized.tgds.clone(), self.normalized.aux_predicates.clone())
    }

    pub fn affected(&self) -> Vec<BTreeSet<Position>> {
        affected_positions(&self.normalized.tgds)
    }

    pub fn describe(&self) -> String {
        let rules: Vec<String> = self.rules.iter().map(|r| r.to_string()).collect();
        let facts: Vec<String> = self.facts.iter().map(|f| format!("{f}.")).collect();
        format!("{}\n{}\n? {}", rules.join("\n"), facts.join(" "), self.query)
    }
}

const PREDICATES: [&str; 4] = ["a", "b", "c", "d"];
const RULE_VARS: [&str; 4] = ["X", "Y", "Z", "W"];
const QUERY_VARS: [&str; 4] = ["A", "B", "C", "D"];

pub fn schema(rng: &mut impl Rng) -> BTreeMap<Symbol, usize> {
    PREDICATES.iter().map(|p| (sym(p), rng.gen_range(1..=3))).collect()
}

fn pick_predicate(rng: &mut impl Rng, schema: &BTreeMap<Symbol, usize>) -> (Symbol, usize) {
    let (p, n) = schema
        .iter()
        .nth(rng.gen_range(0..schema.len()))
        .expect("nonempty schema");
    (p.clone(), *n)
}

fn body_atom(rng: &mut impl Rng, schema: &BTreeMap<Symbol, usize>) -> Atom {
    let (p, n) = pick_predicate(rng, schema);
    let args = (0..n).map(|_| Term::var(RULE_VARS[rng.gen_range(0..3)])).collect();
    Atom::new(p, args)
}

fn rule(rng: &mut impl Rng, schema: &BTreeMap<Symbol, usize>, body_len: usize) -> RawTgd {
    let body: Vec<Atom> = (0..body_len).map(|_| body_atom(rng, schema)).collect();
    let vars: Vec<Term> = body
        .iter()
        .flat_map(|a| a.args.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let (p, n) = pick_predicate(rng, schema);
    let args = (0..n)
        .map(|_| {
            if rng.gen_bool(0.7) {
                vars.choose(rng).expect("body has variables").clone()
            } else {
                Term::var(["E", "F"][rng.gen_range(0..2)])
            }
        })
        .collect();
    RawTgd {
        body,
        head: vec![Atom::new(p, args)],
    }
}

/// A rule set whose normal form has between one and six rules.
pub fn ontology(rng: &mut impl Rng, kind: Kind, schema: &BTreeMap<Symbol, usize>) -> (Vec<RawTgd>, Normalized) {
    loop {
        let k = rng.gen_range(1..=4);
        let rules: Vec<RawTgd> = (0..k)
            .map(|_| {
                let len = if kind == Kind::Linear { 1 } else { rng.gen_range(1..=2) };
                rule(rng, schema, len)
            })
            .collect();
        let preds: Vec<Symbol> = schema.keys().cloned().collect();
        let n = normalize(&rules, preds.iter());
        if n.tgds.len() > 6 {
            continue;
        }
        let ok = match kind {
            Kind::Linear => true,
            Kind::Sticky => smark(&rules).is_sticky() && xrewrite::normalize::is_sticky(&n.tgds),
        };
        if ok {
            return (rules, n);
        }
    }
}

pub fn database(rng: &mut impl Rng, schema: &BTreeMap<Symbol, usize>, max_facts: usize, constants: usize) -> Vec<Atom> {
    let n = rng.gen_range(0..=max_facts);
    let mut facts: Vec<Atom> = Vec::new();
    for _ in 0..n {
        let (p, k) = pick_predicate(rng, schema);
        let args = (0..k)
            .map(|_| Term::constant(&format!("c{}", rng.gen_range(0..constants))))
            .collect();
        let a = Atom::new(p, args);
        if !facts.contains(&a) {
            facts.push(a);
        }
    }
    facts
}

pub fn query(rng: &mut impl Rng, schema: &BTreeMap<Symbol, usize>, max_atoms: usize) -> ConjunctiveQuery {
    let len = rng.gen_range(1..=max_atoms);
    let body: Vec<Atom> = (0..len)
        .map(|_| {
            let (p, n) = pick_predicate(rng, schema);
            let args = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.85) {
                        Term::var(QUERY_VARS[rng.gen_range(0..QUERY_VARS.len())])
                    } else {
                        Term::constant(&format!("c{}", rng.gen_range(0..4)))
                    }
                })
                .collect();
            Atom::new(p, args)
        })
        .collect();
    let vars: BTreeSet<Term> = body
        .iter()
        .flat_map(|a| a.args.iter())
        .filter(|t| t.is_variable())
        .cloned()
        .collect();
    let head: Vec<Term> = vars.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
    ConjunctiveQuery::new(Atom::new(sym("q"), head), body)
}

/// Random case: ontology with at most six normalized rules over arity at
/// most three, a database of at most eight facts over four constants, a
/// query of at most three atoms.
pub fn case(seed: u64) -> Case {
    let mut r = rng(seed);
    let schema = schema(&mut r);
    let kind = if seed.is_multiple_of(2) {
        Kind::Linear
    } else {
        Kind::Sticky
    };
    let (rules, normalized) = ontology(&mut r, kind, &schema);
    let facts = database(&mut r, &schema, 8, 4);
    let query = query(&mut r, &schema, 3);
    Case {
        kind,
        rules,
        normalized,
        arities: schema,
        facts,
        query,
    }
}

/// The fixed examples: (name, rules, query).
pub fn examples() -> Vec<(&'static str, String, ConjunctiveQuery)> {
    let q = |s: &str| xrewrite::parser::parse_query(s).unwrap();
    vec![
        (
            "rewriting step",
            COLLAB.to_string(),
            q("? p(B) :- hasCollaborator(A,db,B)."),
        ),
        (
            "unsound q1",
            COLLAB.to_string(),
            q("? p(B) :- hasCollaborator(c,db,B)."),
        ),
        (
            "unsound q2",
            COLLAB.to_string(),
            q("? p(B) :- hasCollaborator(B,db,B)."),
        ),
        (
            "incomplete",
            format!("{COLLAB} hasCollaborator(X,Y,Z) -> collaborator(X)."),
            q("? p(B,C) :- hasCollaborator(A,B,C), collaborator(A)."),
        ),
        ("financial", FINANCE.to_string(), q(FIN_QUERY)),
        (
            "symmetric",
            "p_1(X) -> p_0(X). p_2(X) -> p_0(X).".to_string(),
            q("? p :- p_0(A), p_0(B)."),
        ),
        (
            "chain",
            "a(X) -> b(X). b(X) -> c(X). c(X) -> d(X,Y).".to_string(),
            q("? p(A) :- d(A,B), c(A)."),
        ),
    ]
}

pub fn normalized(rules: &str) -> Normalized {
    let doc = parse_document(rules).unwrap();
    normalize(&doc.tgds, doc.predicates())
}

pub fn rewriter_for(rules: &str) -> Rewriter {
    let n = normalized(rules);
    Rewriter::new(n.tgds, n.aux_predicates)
}

/// Arities of every predicate in `rules` and `q`.
pub fn arities_of(rules: &str, q: &ConjunctiveQuery) -> BTreeMap<Symbol, usize> {
    let mut doc = parse_document(rules).unwrap();
    for a in &q.body {
        doc.arities.insert(a.predicate.clone(), a.arity());
    }
    doc.arities
}

/// Answer checks of one case against the chase oracle.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub violations: Vec<String>,
    pub saturated: bool,
    pub budget_hit: bool,
    pub rewriting: Vec<ConjunctiveQuery>,
    pub all_queries: Vec<ConjunctiveQuery>,
}

/// Rewrites the case query (in parallel with elimination for even
/// `variant`, sequentially without it otherwise) and compares the answers
/// of the rewriting over the database with the answers over every chase
/// prefix up to `steps`.
pub fn check_case(c: &Case, steps: usize, variant: usize) -> Outcome {
    use xrewrite::chase::{chase, evaluate, evaluate_ucq};
    use xrewrite::parallel::{rewrite_parallel, ParallelOptions};
    use xrewrite::rewriter::RewriteOptions;

    let mut out = Outcome::default();
    let rw = c.rewriter();
    let opts = RewriteOptions {
        elimination: variant.is_multiple_of(2),
        prune: false,
        budget: Some(50_000),
    };
    let seq = rw.rewrite(
        &c.query,
        &RewriteOptions {
            elimination: false,
            ..opts
        },
    );
    let result = if variant.is_multiple_of(2) {
        let popts = ParallelOptions {
            rewrite: opts,
            ..ParallelOptions::default()
        };
        rewrite_parallel(&rw, &c.query, &c.affected(), &popts).map(|r| r.ucq)
    } else {
        seq.as_ref()
            .map(|r| r.ucq.clone())
            .map_err(|e| xrewrite::Error::Config(e.to_string()))
    };
    let (ucq, seq) = match (result, seq) {
        (Ok(u), Ok(s)) => (u, s),
        _ => {
            out.budget_hit = true;
            return out;
        }
    };
    out.all_queries = seq.queries.iter().map(|l| l.query.clone()).collect();
    let inst = chase(&c.facts, &c.rules, steps);
    out.saturated = inst.saturated;
    let rewritten = evaluate_ucq(&ucq, &c.facts);
    let oracle = evaluate(&c.query, &inst.atoms);
    for t in rewritten.difference(&oracle) {
        out.violations.push(format!("unsound answer {t:?}"));
    }
    let mut last = usize::MAX;
    for k in 0..=inst.log.len() {
        let prefix = inst.prefix(k);
        if prefix.len() == last {
            continue;
        }
        last = prefix.len();
        for t in evaluate(&c.query, prefix).difference(&rewritten) {
            out.violations
                .push(format!("answer {t:?} of chase^[{k}] missing from the rewriting"));
        }
    }
    out.rewriting = ucq;
    out
}

/// Structural properties of every query produced from `q`: under linear
/// rules no body grows beyond the input; under sticky rules each variable
/// not in the input occurs once.
pub fn structural_violations(
    tgds: &[xrewrite::model::Tgd],
    q: &ConjunctiveQuery,
    produced: &[ConjunctiveQuery],
) -> Vec<String> {
    let mut v = Vec::new();
    let linear = xrewrite::normalize::is_linear(tgds);
    let sticky = xrewrite::normalize::is_sticky(tgds);
    let original: BTreeSet<Term> = q.variables().into_iter().collect();
    for p in produced {
        if linear && p.body.len() > q.body.len() {
            v.push(format!("body of `{p}` is larger than the input"));
        }
        if sticky {
            let occ = p.occurrences();
            for (t, n) in occ {
                if t.is_variable() && !original.contains(&t) && n != 1 {
                    v.push(format!("fresh variable {t} occurs {n} times in `{p}`"));
                }
            }
        }
    }
    v
}

/// Rule set and query of the size law: `p_i(X) -> p_0(X)` for `i` in
/// `1..=m`, and `p :- p_0(A1), .., p_0(An)`.
pub fn size_law(m: usize, n: usize) -> (String, ConjunctiveQuery) {
    let rules: Vec<String> = (1..=m).map(|i| format!("p_{i}(X) -> p_0(X).")).collect();
    let body: Vec<String> = (1..=n).map(|i| format!("p_0(A{i})")).collect();
    let q = xrewrite::parser::parse_query(&format!("? p :- {}.", body.join(", "))).unwrap();
    (rules.join(" "), q)
}

/// Queries reachable in the size-law setting, computed on multisets of
/// predicates: a step replaces any nonempty group of `p_0` atoms by one
/// `p_i` atom, `i >= 1`. Each multiset is one query up to renaming since
/// every atom has its own variable.
pub fn size_law_enumeration(m: usize, n: usize) -> BTreeSet<Vec<usize>> {
    let mut start = vec![0; m + 1];
    start[0] = n;
    let mut seen = BTreeSet::from([start.clone()]);
    let mut todo = vec![start];
    while let Some(s) = todo.pop() {
        for k in 1..=s[0] {
            for i in 1..=m {
                let mut t = s.clone();
                t[0] -= k;
                t[i] += 1;
                if seen.insert(t.clone()) {
                    todo.push(t);
                }
            }
        }
    }
    seen
}

/// The query of a size-law multiset.
pub fn size_law_query(counts: &[usize]) -> ConjunctiveQuery {
    let mut body = Vec::new();
    for (p, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            body.push(format!("p_{p}(A{})", body.len()));
        }
    }
    xrewrite::model::canonical_rename(&xrewrite::parser::parse_query(&format!("? p :- {}.", body.join(", "))).unwrap())
        .query
}

/// Loads `facts` into an in-memory SQLite database with one table per
/// predicate and text columns `c1..cn`.
pub fn sqlite_db(arities: &BTreeMap<Symbol, usize>, facts: &[Atom]) -> rusqlite::Connection {
    let conn = rusqlite::Connection::open_in_memory().unwrap();
    for (p, n) in arities {
        let cols: Vec<String> = (1..=*n).map(|i| format!("c{i} TEXT")).collect();
        conn.execute_batch(&format!("CREATE TABLE \"{p}\" ({});", cols.join(", ")))
            .unwrap();
    }
    for f in facts {
        let marks: Vec<&str> = f.args.iter().map(|_| "?").collect();
        let values: Vec<String> = f.args.iter().map(|t| t.to_string()).collect();
        conn.execute(
            &format!("INSERT INTO \"{}\" VALUES ({})", f.predicate, marks.join(", ")),
            rusqlite::params_from_iter(values),
        )
        .unwrap();
    }
    conn
}

/// Rows returned by `sql`, every value read as text.
pub fn sqlite_rows(conn: &rusqlite::Connection, sql: &str) -> BTreeSet<Vec<String>> {
    let mut stmt = conn.prepare(sql).unwrap();
    let n = stmt.column_count();
    stmt.query_map([], |row| {
        (0..n)
            .map(|i| {
                let v: rusqlite::types::Value = row.get(i)?;
                Ok(match v {
                    rusqlite::types::Value::Text(s) => s,
                    rusqlite::types::Value::Integer(i) => i.to_string(),
                    other => format!("{other:?}"),
                })
            })
            .collect::<rusqlite::Result<Vec<_>>>()
    })
    .unwrap()
    .map(|r| r.unwrap())
    .collect()
}

/// Random database over the predicates of the financial ontology.
pub fn finance_database(seed: u64) -> Vec<Atom> {
    let mut doc = parse_document(&format!("{FINANCE} {FIN_QUERY}")).unwrap();
    doc.arities.remove("p");
    let mut r = rng(seed);
    database(&mut r, &doc.arities, 40, 3)
}

/// Query whose atoms are mostly derived from a seed atom by a few chase
/// steps, read back with constants and nulls as variables, so that
/// elimination has something to find. At most `max_atoms` atoms.
pub fn derived_query(
    g: &mut impl Rng,
    rules: &[RawTgd],
    s: &BTreeMap<Symbol, usize>,
    max_atoms: usize,
) -> ConjunctiveQuery {
    let preds: Vec<_> = s.iter().collect();
    let (p, n) = preds[g.gen_range(0..preds.len())];
    let seed = Atom::new(
        p.clone(),
        (0..*n).map(|_| Term::constant(["a", "b"][g.gen_range(0..2)])).collect(),
    );
    let inst = xrewrite::chase::chase(std::slice::from_ref(&seed), rules, 6);
    let mut derived: Vec<Atom> = inst.atoms.iter().filter(|a| **a != seed).cloned().collect();
    derived.shuffle(g);
    let mut body = vec![seed];
    body.extend(derived.into_iter().take(max_atoms - 1));
    if g.gen_bool(0.3) && body.len() < max_atoms {
        let (p, n) = preds[g.gen_range(0..preds.len())];
        body.push(Atom::new(
            p.clone(),
            (0..*n).map(|_| Term::constant(["a", "b"][g.gen_range(0..2)])).collect(),
        ));
    }
    let as_var = |t: &Term| match t {
        Term::Constant(c) => Term::var(&c.to_uppercase()),
        Term::Null(k) => Term::var(&format!("N{k}")),
        v => v.clone(),
    };
    let body: Vec<Atom> = body
        .iter()
        .map(|a| Atom::new(a.predicate.clone(), a.args.iter().map(as_var).collect()))
        .collect();
    let head: Vec<Term> = [Term::var("A")]
        .into_iter()
        .filter(|t| g.gen_bool(0.5) && body.iter().any(|a| a.contains(t)))
        .collect();
    ConjunctiveQuery::new(Atom::new(sym("q"), head), body)
}

/// Fifty random linear ontologies with queries of at most five atoms.
pub fn linear_cases() -> Vec<(Rewriter, ConjunctiveQuery)> {
    (0..50u64)
        .map(|seed| {
            let mut g = rng(10_000 + seed);
            let s = schema(&mut g);
            let (rules, n) = ontology(&mut g, Kind::Linear, &s);
            let query = derived_query(&mut g, &rules, &s, 5);
            (Rewriter::new(n.tgds, n.aux_predicates), query)
        })
        .collect()
}
