use crate::model::Ucq;
use crate::parallel::Decomposition;

/// The rewriting of every component as rules over its head predicate,
/// followed by the reconciliation rule.
pub fn to_datalog(decomposition: &Decomposition, components: &[Ucq]) -> String {
    let mut out = String::new();
    for ucq in components {
        for q in ucq {
            out.push_str(&format!("{q}\n"));
        }
    }
    out.push_str(&format!("{}\n", decomposition.reconciliation));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::decompose;
    use crate::parser::parse_query;

    #[test]
    fn program_ends_with_reconciliation() {
        let q = parse_query("? p(A) :- r(A), s(A).").unwrap();
        let d = decompose(&q, &[]);
        let comps: Vec<Ucq> = d.queries.iter().map(|c| vec![c.clone()]).collect();
        let text = to_datalog(&d, &comps);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], d.reconciliation.to_string());
        assert!(lines[..2].iter().all(|l| l.starts_with("p_")));
    }
}
