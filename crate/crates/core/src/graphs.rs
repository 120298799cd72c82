//! Position-level graphs over a normalized rule set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{match_atom, Atom, Position, Tgd};

/// Default bound on the number of edges of an enumerated path. Square-free
/// paths over a graph with three or more cycles are unbounded in length, so
/// enumeration needs some bound; longer propagations are simply not used
/// for elimination.
pub const DEFAULT_MAX_PATH_LEN: usize = 12;

/// Default bound on the number of label sequences stored in a cover graph.
pub const DEFAULT_MAX_SEQUENCES: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: Position,
    pub to: Position,
    /// Index of the labelling rule.
    pub tgd: usize,
}

#[derive(Clone, Debug, Default)]
pub struct PropagationGraph {
    pub nodes: BTreeSet<Position>,
    pub edges: Vec<Edge>,
    out: BTreeMap<Position, Vec<usize>>,
}

fn positions(a: &Atom) -> impl Iterator<Item = Position> + '_ {
    (1..=a.arity()).map(move |i| a.position(i))
}

impl PropagationGraph {
    pub fn build(tgds: &[Tgd]) -> Self {
        let mut nodes = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for (k, t) in tgds.iter().enumerate() {
            for a in t.body.iter().chain(std::iter::once(&t.head)) {
                nodes.extend(positions(a));
            }
            for b in &t.body {
                for (i, v) in b.args.iter().enumerate() {
                    if !v.is_variable() {
                        continue;
                    }
                    for j in t.head.positions_of(v) {
                        edges.insert(Edge {
                            from: b.position(i + 1),
                            to: t.head.position(j),
                            tgd: k,
                        });
                    }
                }
            }
        }
        let edges: Vec<Edge> = edges.into_iter().collect();
        let mut out: BTreeMap<Position, Vec<usize>> = BTreeMap::new();
        for (i, e) in edges.iter().enumerate() {
            out.entry(e.from.clone()).or_default().push(i);
        }
        PropagationGraph { nodes, edges, out }
    }

    pub fn outgoing(&self, p: &Position) -> impl Iterator<Item = &Edge> {
        self.out
            .get(p)
            .into_iter()
            .flat_map(move |ids| ids.iter().map(move |&i| &self.edges[i]))
    }

    /// Label sequences of the minimal paths from `from` to `to` with at most
    /// `max_len` edges.
    pub fn minimal_paths(&self, from: &Position, to: &Position, max_len: usize) -> BTreeSet<Vec<usize>> {
        let mut found = BTreeSet::new();
        let mut path: Vec<&Edge> = Vec::new();
        self.walk(from, max_len, &mut path, &mut |p| {
            if p.last().map(|e| &e.to) == Some(to) {
                found.insert(p.iter().map(|e| e.tgd).collect());
            }
            true
        });
        found
    }

    /// Depth-first enumeration of minimal paths starting at `at`; `visit` is
    /// called on every nonempty prefix and returns whether to extend it.
    fn walk<'g, F>(&'g self, at: &Position, max_len: usize, path: &mut Vec<&'g Edge>, visit: &mut F)
    where
        F: FnMut(&[&'g Edge]) -> bool,
    {
        if path.len() == max_len {
            return;
        }
        for e in self.outgoing(at) {
            path.push(e);
            if !has_square_suffix(path) && visit(path) {
                self.walk(&e.to, max_len, path, visit);
            }
            path.pop();
        }
    }
}

/// Whether the edge word ends in a square `ww`. Checking only suffixes is
/// enough when the word is grown one edge at a time.
fn has_square_suffix(path: &[&Edge]) -> bool {
    let n = path.len();
    (1..=n / 2).any(|j| path[n - 2 * j..n - j] == path[n - j..])
}

/// Whether a node/label path is minimal: no block of consecutive edges is
/// immediately repeated.
pub fn is_minimal(path: &[Edge]) -> bool {
    let refs: Vec<&Edge> = path.iter().collect();
    (1..=refs.len()).all(|k| !has_square_suffix(&refs[..k]))
}

fn linear_body(t: &Tgd) -> Result<&Atom> {
    match t.body.as_slice() {
        [a] => Ok(a),
        _ => Err(Error::NotLinear),
    }
}

/// `σ, σ'` is tight when the body of `σ'` maps onto the head of `σ`.
pub fn tight_pair(first: &Tgd, second: &Tgd) -> Result<bool> {
    Ok(match_atom(linear_body(second)?, &first.head).is_some())
}

pub fn is_tight(seq: &[&Tgd]) -> Result<bool> {
    for t in seq {
        linear_body(t)?;
    }
    for w in seq.windows(2) {
        if !tight_pair(w[0], w[1])? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn is_compatible(seq: &[&Tgd], a: &Atom) -> Result<bool> {
    match seq.first() {
        None => Ok(false),
        Some(t) => Ok(match_atom(linear_body(t)?, a).is_some()),
    }
}

/// For every pair of positions, the label sequences of the tight minimal
/// paths between them.
#[derive(Clone, Debug, Default)]
pub struct CoverGraph {
    pub reach: BTreeMap<(Position, Position), BTreeSet<Vec<usize>>>,
    /// `tight[i][j]`: rule `j` may follow rule `i` in a tight sequence.
    pub tight: Vec<Vec<bool>>,
    pub max_path_len: usize,
    /// Set when some path hit the length bound or the sequence cap; the
    /// graph is then an under-approximation.
    pub truncated: bool,
}

impl CoverGraph {
    pub fn build(tgds: &[Tgd], pg: &PropagationGraph) -> Result<Self> {
        Self::build_bounded(tgds, pg, DEFAULT_MAX_PATH_LEN, DEFAULT_MAX_SEQUENCES)
    }

    pub fn build_bounded(
        tgds: &[Tgd],
        pg: &PropagationGraph,
        max_path_len: usize,
        max_sequences: usize,
    ) -> Result<Self> {
        let mut tight = vec![vec![false; tgds.len()]; tgds.len()];
        for (i, a) in tgds.iter().enumerate() {
            for (j, b) in tgds.iter().enumerate() {
                tight[i][j] = tight_pair(a, b)?;
            }
        }
        let mut cg = CoverGraph {
            reach: BTreeMap::new(),
            tight,
            max_path_len,
            truncated: false,
        };
        let mut stored = 0usize;
        for start in &pg.nodes {
            let mut path = Vec::new();
            let tight = &cg.tight;
            let reach = &mut cg.reach;
            let truncated = &mut cg.truncated;
            pg.walk(start, max_path_len, &mut path, &mut |p| {
                let n = p.len();
                if n >= 2 && !tight[p[n - 2].tgd][p[n - 1].tgd] {
                    return false;
                }
                if stored >= max_sequences {
                    *truncated = true;
                    return false;
                }
                let labels: Vec<usize> = p.iter().map(|e| e.tgd).collect();
                if reach
                    .entry((start.clone(), p[n - 1].to.clone()))
                    .or_default()
                    .insert(labels)
                {
                    stored += 1;
                }
                if n == max_path_len && pg.outgoing(&p[n - 1].to).next().is_some() {
                    *truncated = true;
                }
                true
            });
        }
        Ok(cg)
    }

    pub fn sequences(&self, from: &Position, to: &Position) -> Option<&BTreeSet<Vec<usize>>> {
        self.reach.get(&(from.clone(), to.clone()))
    }

    pub fn is_tight_seq(&self, seq: &[usize]) -> bool {
        seq.windows(2).all(|w| self.tight[w[0]][w[1]])
    }
}

/// For each rule `σ`, the positions affected with respect to `σ`: its
/// existential position, closed under propagation through head positions
/// whose variable occurs in the body only at affected positions.
pub fn affected_positions(tgds: &[Tgd]) -> Vec<BTreeSet<Position>> {
    tgds.iter()
        .map(|sigma| {
            let mut affected: BTreeSet<Position> = sigma.existential_position().into_iter().collect();
            if affected.is_empty() {
                return affected;
            }
            loop {
                let mut added = false;
                for t in tgds {
                    for (j, v) in t.head.args.iter().enumerate() {
                        if !v.is_variable() {
                            continue;
                        }
                        let mut body_positions = t
                            .body
                            .iter()
                            .flat_map(|b| b.positions_of(v).into_iter().map(move |i| b.position(i)))
                            .peekable();
                        if body_positions.peek().is_none() {
                            continue;
                        }
                        if body_positions.all(|p| affected.contains(&p)) && affected.insert(t.head.position(j + 1)) {
                            added = true;
                        }
                    }
                }
                if !added {
                    return affected;
                }
            }
        })
        .collect()
}

fn label(k: usize) -> String {
    format!("σ{}", k + 1)
}

impl fmt::Display for PropagationGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut grouped: BTreeMap<(&Position, &Position), Vec<usize>> = BTreeMap::new();
        for e in &self.edges {
            grouped.entry((&e.from, &e.to)).or_default().push(e.tgd);
        }
        for ((a, b), labels) in grouped {
            let labels: Vec<String> = labels.into_iter().map(label).collect();
            writeln!(f, "{a} -> {b} : {}", labels.join(","))?;
        }
        for n in &self.nodes {
            if !self.edges.iter().any(|e| &e.from == n || &e.to == n) {
                writeln!(f, "{n}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for CoverGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((a, b), seqs) in &self.reach {
            for s in seqs {
                let labels: Vec<String> = s.iter().map(|&k| label(k)).collect();
                writeln!(f, "{a} -> {b} : {}", labels.join(","))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sym;
    use crate::normalize::normalize;
    use crate::parser::parse_document;
    use proptest::prelude::*;

    fn tgds(text: &str) -> Vec<Tgd> {
        let doc = parse_document(text).unwrap();
        normalize(&doc.tgds, doc.predicates()).tgds
    }

    fn pos(p: &str, i: usize) -> Position {
        Position::new(sym(p), i)
    }

    const PROPAGATION: &str = "p(X,Y) -> r(X,Y,Z). r(X,Y,c) -> s(X,Y,Y). s(X,X,Y) -> p(X,Y).";

    #[test]
    fn propagation_graph_example() {
        let pg = PropagationGraph::build(&tgds(PROPAGATION));
        let got: BTreeSet<(String, String)> = pg
            .edges
            .iter()
            .map(|e| (e.from.to_string(), e.to.to_string()))
            .collect();
        let want: BTreeSet<(String, String)> = [
            ("p[1]", "r[1]"),
            ("p[2]", "r[2]"),
            ("r[1]", "s[1]"),
            ("r[2]", "s[2]"),
            ("r[2]", "s[3]"),
            ("s[1]", "p[1]"),
            ("s[2]", "p[1]"),
            ("s[3]", "p[2]"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        assert_eq!(got, want);
        assert!(pg.nodes.contains(&pos("r", 3)));
        assert!(pg.edges.iter().all(|e| e.from != pos("r", 3) && e.to != pos("r", 3)));
    }

    #[test]
    fn empty_and_swap() {
        assert!(PropagationGraph::build(&[]).edges.is_empty());
        let pg = PropagationGraph::build(&tgds("r(X,Y) -> r(Y,X)."));
        let got: Vec<String> = pg
            .edges
            .iter()
            .map(|e| format!("{}>{}:{}", e.from, e.to, e.tgd))
            .collect();
        assert_eq!(got, ["r[1]>r[2]:0", "r[2]>r[1]:0"]);
    }

    fn edge(a: Position, b: Position, t: usize) -> Edge {
        Edge { from: a, to: b, tgd: t }
    }

    #[test]
    fn minimality_of_repeated_cycle() {
        let cycle = [
            edge(pos("s", 3), pos("p", 2), 2),
            edge(pos("p", 2), pos("r", 2), 0),
            edge(pos("r", 2), pos("s", 3), 1),
        ];
        // v1..v6 with v1v2v3 = v4v5v6 = s[3]p[2]r[2]
        let six: Vec<Edge> = cycle.iter().chain(&cycle[..2]).cloned().collect();
        assert!(is_minimal(&six));
        let nine: Vec<Edge> = cycle.iter().chain(&cycle).chain(&cycle[..2]).cloned().collect();
        assert!(!is_minimal(&nine));

        let pg = PropagationGraph::build(&tgds(PROPAGATION));
        let paths = pg.minimal_paths(&pos("s", 3), &pos("r", 2), 20);
        assert!(paths.contains(&vec![2, 0]));
        assert!(!paths.contains(&vec![2, 0, 1, 2, 0, 1, 2, 0]));
    }

    #[test]
    fn cycles_from_a_node_back_to_itself() {
        let pg = PropagationGraph::build(&tgds(PROPAGATION));
        let paths = pg.minimal_paths(&pos("p", 2), &pos("p", 2), 20);
        assert!(paths.contains(&vec![0, 1, 2]));
        assert!(paths.iter().all(|p| !p.is_empty()));
    }

    #[test]
    fn tightness() {
        let t = tgds("r(X,Y) -> t(Y,Z). t(X,X) -> s(X).");
        assert!(!is_tight(&[&t[0], &t[1]]).unwrap());
        assert!(is_tight(&[&t[1]]).unwrap());
        let u = tgds("t(X,Y) -> r(X,Y,Z). r(X,Y,Z) -> s(Y,W,X).");
        assert!(is_tight(&[&u[0], &u[1]]).unwrap());
        let nl = tgds("a(X), b(X) -> c(X).");
        assert!(matches!(is_tight(&[&nl[0]]), Err(Error::NotLinear)));
    }

    const FINANCE: &str = "
        stockPortfolio(X,Y,Z) -> company(X,V,W).
        stockPortfolio(X,Y,Z) -> stock(Y,V,W).
        listComponent(X,Y) -> finIndex(Y,Z,W).
        listComponent(X,Y) -> stock(X,Z,W).
        stockPortfolio(X,Y,Z) -> hasStock(Y,X).
        hasStock(X,Y) -> stockPortfolio(Y,X,Z).
        stock(X,Y,Z) -> stockPortfolio(V,X,W).
        stock(X,Y,Z) -> finInstrument(X).
        company(X,Y,Z) -> legalPerson(X).";

    #[test]
    fn cover_graph_on_financial_rules() {
        let doc = parse_document(FINANCE).unwrap();
        let n = normalize(&doc.tgds, doc.predicates());
        let pg = PropagationGraph::build(&n.tgds);
        let cg = CoverGraph::build(&n.tgds, &pg).unwrap();
        let from_rule = |seq: &Vec<usize>| seq.iter().map(|&k| n.provenance[k] + 1).collect::<Vec<_>>();
        let seqs = cg
            .sequences(&pos("stockPortfolio", 2), &pos("finInstrument", 1))
            .unwrap();
        assert!(seqs.iter().any(|s| from_rule(s) == [2, 2, 2, 8]));
        let seqs = cg.sequences(&pos("listComponent", 2), &pos("finIndex", 1)).unwrap();
        assert!(seqs.iter().any(|s| from_rule(s) == [3, 3, 3]));
        assert!(CoverGraph::build(&[], &PropagationGraph::build(&[]))
            .unwrap()
            .reach
            .is_empty());
        // every stored sequence replays as a tight minimal path
        for ((a, b), seqs) in &cg.reach {
            for s in seqs {
                let refs: Vec<&Tgd> = s.iter().map(|&k| &n.tgds[k]).collect();
                assert!(is_tight(&refs).unwrap());
                assert!(pg.minimal_paths(a, b, s.len()).contains(s));
            }
        }
    }

    #[test]
    fn affected_positions_example() {
        let t = tgds("p(X,Y), s(Y,Z) -> t(Y,X,W). t(X,Y,Z) -> p(W,Z).");
        let aff = affected_positions(&t);
        let show = |s: &BTreeSet<Position>| s.iter().map(|p| p.to_string()).collect::<Vec<_>>();
        assert_eq!(show(&aff[0]), ["p[2]", "t[3]"]);
        assert_eq!(show(&aff[1]), ["p[1]", "t[2]"]);
        assert!(!aff[0].contains(&pos("t", 1)));
        let full = tgds("r(X) -> s(X).");
        assert!(affected_positions(&full)[0].is_empty());
    }

    fn arb_linear() -> impl Strategy<Value = Vec<Tgd>> {
        let var = (0..3usize).prop_map(|i| crate::model::Term::var(["X", "Y", "Z"][i]));
        let atom = (0..3usize, prop::collection::vec(var, 2)).prop_map(|(p, a)| Atom::new(sym(["r", "s", "t"][p]), a));
        prop::collection::vec((atom.clone(), atom), 1..5).prop_map(|pairs| {
            let raw: Vec<crate::model::RawTgd> = pairs
                .into_iter()
                .map(|(b, h)| crate::model::RawTgd {
                    body: vec![b],
                    head: vec![h],
                })
                .collect();
            normalize(&raw, std::iter::empty()).tgds
        })
    }

    proptest! {
        #[test]
        fn edge_count_matches_naive_loop(t in arb_linear()) {
            let pg = PropagationGraph::build(&t);
            let mut naive = BTreeSet::new();
            for (k, s) in t.iter().enumerate() {
                for v in s.variables() {
                    for b in &s.body {
                        for i in b.positions_of(&v) {
                            for j in s.head.positions_of(&v) {
                                naive.insert((b.position(i), s.head.position(j), k));
                            }
                        }
                    }
                }
            }
            prop_assert_eq!(pg.edges.len(), naive.len());
        }

        #[test]
        fn affected_is_a_fixpoint(t in arb_linear()) {
            for (k, aff) in affected_positions(&t).iter().enumerate() {
                if t[k].existential_position().is_none() {
                    prop_assert!(aff.is_empty());
                    continue;
                }
                for s in &t {
                    for (j, v) in s.head.args.iter().enumerate() {
                        let body: Vec<Position> = s.body.iter().flat_map(|b| b.positions_of(v).into_iter().map(move |i| b.position(i))).collect();
                        if !body.is_empty() && body.iter().all(|p| aff.contains(p)) {
                            prop_assert!(aff.contains(&s.head.position(j + 1)));
                        }
                    }
                }
            }
        }

        #[test]
        fn cover_graph_entries_replay(t in arb_linear()) {
            let pg = PropagationGraph::build(&t);
            let cg = CoverGraph::build_bounded(&t, &pg, 6, 10_000).unwrap();
            for ((a, b), seqs) in &cg.reach {
                for s in seqs {
                    prop_assert!(cg.is_tight_seq(s));
                    prop_assert!(pg.minimal_paths(a, b, s.len()).contains(s));
                }
            }
        }
    }
}
