use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{Atom, ConjunctiveQuery, Symbol, Term};
use crate::parser::TableDecl;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableSchema {
    pub table: String,
    pub columns: Vec<String>,
}

/// Binds predicates to tables. Atoms over the inequality predicate, when
/// one is set, become `<>` conditions instead of table references.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SchemaMapping {
    pub tables: BTreeMap<Symbol, TableSchema>,
    pub inequality: Option<Symbol>,
}

impl SchemaMapping {
    /// Mapping from `table` declarations, checked against known arities.
    pub fn from_decls(decls: &[TableDecl], arities: &BTreeMap<Symbol, usize>) -> Result<Self> {
        let mut m = SchemaMapping::default();
        for d in decls {
            if let Some(&arity) = arities.get(&d.predicate) {
                if arity != d.columns.len() {
                    return Err(Error::SchemaArity {
                        predicate: d.predicate.to_string(),
                        columns: d.columns.len(),
                        arity,
                    });
                }
            }
            m.tables.insert(
                d.predicate.clone(),
                TableSchema {
                    table: d.table.clone(),
                    columns: d.columns.clone(),
                },
            );
        }
        Ok(m)
    }

    /// Table named after the predicate with columns `c1..cn`.
    pub fn generic(arities: &BTreeMap<Symbol, usize>) -> Self {
        let tables = arities
            .iter()
            .map(|(p, &n)| {
                let schema = TableSchema {
                    table: p.to_string(),
                    columns: (1..=n).map(|i| format!("c{i}")).collect(),
                };
                (p.clone(), schema)
            })
            .collect();
        SchemaMapping {
            tables,
            inequality: None,
        }
    }

    pub fn with_inequality(mut self, predicate: Symbol) -> Self {
        self.inequality = Some(predicate);
        self
    }

    fn schema(&self, a: &Atom) -> Result<&TableSchema> {
        let s = self
            .tables
            .get(&a.predicate)
            .ok_or_else(|| Error::UnmappedPredicate(a.predicate.to_string()))?;
        if s.columns.len() != a.arity() {
            return Err(Error::SchemaArity {
                predicate: a.predicate.to_string(),
                columns: s.columns.len(),
                arity: a.arity(),
            });
        }
        Ok(s)
    }
}

fn ident(name: &str) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        name.to_string()
    } else {
        format!("\"{}\"", name.replace('"', "\"\""))
    }
}

fn literal(t: &Term) -> Result<String> {
    match t {
        Term::Constant(c) => Ok(format!("'{}'", c.replace('\'', "''"))),
        other => Err(Error::Config(format!("cannot render `{other}` as an SQL literal"))),
    }
}

fn select_block(q: &ConjunctiveQuery, mapping: &SchemaMapping) -> Result<String> {
    let mut from = Vec::new();
    let mut cond = Vec::new();
    let mut column: HashMap<&Term, String> = HashMap::new();
    let mut inequalities = Vec::new();
    for a in &q.body {
        if mapping.inequality.as_ref() == Some(&a.predicate) && a.arity() == 2 {
            inequalities.push(a);
            continue;
        }
        let schema = mapping.schema(a)?;
        let alias = format!("t{}", from.len() + 1);
        from.push(format!("{} {alias}", ident(&schema.table)));
        for (t, col) in a.args.iter().zip(&schema.columns) {
            let here = format!("{alias}.{}", ident(col));
            match t {
                Term::Variable(_) => match column.get(t) {
                    Some(first) => cond.push(format!("{first} = {here}")),
                    None => {
                        column.insert(t, here);
                    }
                },
                Term::Constant(_) => cond.push(format!("{here} = {}", literal(t)?)),
                Term::Null(_) => return Err(Error::Config(format!("query `{q}` contains a labeled null"))),
            }
        }
    }
    let render = |t: &Term| -> Result<String> {
        match t {
            Term::Variable(_) => column.get(t).cloned().ok_or_else(|| Error::UnsafeQuery {
                query: q.to_string(),
                variable: t.to_string(),
            }),
            _ => literal(t),
        }
    };
    for a in inequalities {
        cond.push(format!("{} <> {}", render(&a.args[0])?, render(&a.args[1])?));
    }
    let projection = if q.head.args.is_empty() {
        "1".to_string()
    } else {
        q.head.args.iter().map(render).collect::<Result<Vec<_>>>()?.join(", ")
    };
    let mut block = format!("SELECT {projection}");
    if !from.is_empty() {
        block.push_str(&format!(" FROM {}", from.join(", ")));
    }
    if !cond.is_empty() {
        block.push_str(&format!("\nWHERE {}", cond.join(" AND ")));
    }
    Ok(block)
}

/// One `SELECT` per disjunct, joined by `UNION`. Tables are aliased `t1`,
/// `t2`, ... in body order. Boolean queries select the constant 1 and are
/// closed with `LIMIT 1`; an empty union becomes a query with no rows.
pub fn to_sql(ucq: &[ConjunctiveQuery], mapping: &SchemaMapping) -> Result<String> {
    let Some(first) = ucq.first() else {
        return Ok("SELECT 1 WHERE 1 = 0;\n".to_string());
    };
    let blocks = ucq
        .iter()
        .map(|q| select_block(q, mapping))
        .collect::<Result<Vec<_>>>()?;
    let mut sql = blocks.join("\nUNION\n");
    if first.head.args.is_empty() {
        sql.push_str("\nLIMIT 1");
    }
    sql.push_str(";\n");
    Ok(sql)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sym;
    use crate::parser::{parse_document, parse_query};

    fn example_mapping() -> SchemaMapping {
        let d =
            parse_document("table project(p_id). table inArea(p_id, area). table hasCollaborator(c_id, area, p_id).")
                .unwrap();
        SchemaMapping::from_decls(&d.tables, &d.arities).unwrap()
    }

    #[test]
    fn example_union() {
        let ucq = vec![
            parse_query("? p(B) :- hasCollaborator(A,db,B).").unwrap(),
            parse_query("? p(B) :- project(B), inArea(B,db).").unwrap(),
        ];
        let sql = to_sql(&ucq, &example_mapping()).unwrap();
        assert_eq!(
            sql,
            "SELECT t1.p_id FROM hasCollaborator t1\nWHERE t1.area = 'db'\nUNION\n\
             SELECT t1.p_id FROM project t1, inArea t2\nWHERE t1.p_id = t2.p_id AND t2.area = 'db';\n"
        );
    }

    #[test]
    fn repeated_variable_in_one_atom() {
        let q = parse_query("? p(A) :- hasCollaborator(A,B,A).").unwrap();
        let sql = to_sql(&[q], &example_mapping()).unwrap();
        assert!(sql.contains("WHERE t1.c_id = t1.p_id"), "{sql}");
    }

    #[test]
    fn boolean_query() {
        let q = parse_query("? p :- project(A).").unwrap();
        assert_eq!(
            to_sql(&[q], &example_mapping()).unwrap(),
            "SELECT 1 FROM project t1\nLIMIT 1;\n"
        );
    }

    #[test]
    fn unmapped_and_mismatched() {
        let q = parse_query("? p(A) :- unknown(A).").unwrap();
        assert!(matches!(
            to_sql(&[q], &example_mapping()),
            Err(Error::UnmappedPredicate(_))
        ));
        let schema = parse_document("table r(x).").unwrap();
        let data = parse_document("r(a,b).").unwrap();
        assert!(matches!(
            SchemaMapping::from_decls(&schema.tables, &data.arities),
            Err(Error::SchemaArity { .. })
        ));
    }

    #[test]
    fn inequality_and_quoting() {
        let q = parse_query("? p :- r(X,Y), r(X,Z), neq(Y,Z).").unwrap();
        let arities = BTreeMap::from([(sym("r"), 2)]);
        let m = SchemaMapping::generic(&arities).with_inequality(sym("neq"));
        let sql = to_sql(&[q], &m).unwrap();
        assert!(sql.contains("t1.c2 <> t2.c2"), "{sql}");
        let q = parse_query("? p(A) :- r(A,'it''s').").unwrap();
        assert!(to_sql(&[q], &m).unwrap().contains("'it''s'"));
        assert_eq!(ident("order by"), "\"order by\"");
    }

    fn sqlite_answers(conn: &rusqlite::Connection, sql: &str) -> std::collections::BTreeSet<Vec<String>> {
        let mut stmt = conn.prepare(sql).unwrap();
        let n = stmt.column_count();
        stmt.query_map([], |row| {
            (0..n)
                .map(|i| row.get::<_, String>(i))
                .collect::<rusqlite::Result<Vec<_>>>()
        })
        .unwrap()
        .map(|r| r.unwrap())
        .collect()
    }

    #[test]
    fn runs_on_sqlite() {
        let conn = rusqlite::Connection::open_in_memory().unwrap();
        conn.execute_batch(
            "CREATE TABLE project(p_id TEXT); CREATE TABLE inArea(p_id TEXT, area TEXT);
             CREATE TABLE hasCollaborator(c_id TEXT, area TEXT, p_id TEXT);
             INSERT INTO project VALUES ('a'), ('b');
             INSERT INTO inArea VALUES ('a', 'db'), ('b', 'ai');
             INSERT INTO hasCollaborator VALUES ('x', 'db', 'c');",
        )
        .unwrap();
        let ucq = vec![
            parse_query("? p(B) :- hasCollaborator(A,db,B).").unwrap(),
            parse_query("? p(B) :- project(B), inArea(B,db).").unwrap(),
        ];
        let sql = to_sql(&ucq, &example_mapping()).unwrap();
        let got = sqlite_answers(&conn, &sql);
        let want = [vec!["a".to_string()], vec!["c".to_string()]].into_iter().collect();
        assert_eq!(got, want);
    }
}
