//! Reader and writer for the `.dlog` text format.
//!
//! ```text
//! % comment
//! project(X), inArea(X,Y) -> hasCollaborator(Z,Y,X).   % rule
//! student(X), professor(X) -> !.                       % negative constraint
//! fd fatherOf: 2 -> 1.                                 % functional dependency
//! ? p(B) :- hasCollaborator(A, db, B).                 % query
//! project(a).                                          % fact
//! table inArea(p_id, area).                            % schema mapping
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{sym, Atom, ConjunctiveQuery, FunctionalDependency, NegativeConstraint, RawTgd, Symbol, Term};

/// `table pred as name(col, ...)`: binds a predicate to a relational table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableDecl {
    pub predicate: Symbol,
    pub table: String,
    pub columns: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub tgds: Vec<RawTgd>,
    pub ncs: Vec<NegativeConstraint>,
    pub fds: Vec<FunctionalDependency>,
    pub queries: Vec<ConjunctiveQuery>,
    pub facts: Vec<Atom>,
    pub tables: Vec<TableDecl>,
    pub arities: BTreeMap<Symbol, usize>,
}

impl Document {
    /// Predicates occurring anywhere in the document.
    pub fn predicates(&self) -> impl Iterator<Item = &Symbol> {
        self.arities.keys()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    If,
    Arrow,
    Bang,
    Query,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "'{s}'"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::If => f.write_str("`:-`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Query => f.write_str("`?`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i, &mut col);
                continue;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' | ')' | ',' | '.' | '!' | '?' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '!' => Tok::Bang,
                    _ => Tok::Query,
                };
                advance(1, &mut i, &mut col);
                out.push(Spanned {
                    tok,
                    line: l0,
                    column: c0,
                });
            }
            ':' => {
                if chars.get(i + 1) == Some(&'-') {
                    advance(2, &mut i, &mut col);
                    out.push(Spanned {
                        tok: Tok::If,
                        line: l0,
                        column: c0,
                    });
                } else {
                    advance(1, &mut i, &mut col);
                    out.push(Spanned {
                        tok: Tok::Colon,
                        line: l0,
                        column: c0,
                    });
                }
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                advance(2, &mut i, &mut col);
                out.push(Spanned {
                    tok: Tok::Arrow,
                    line: l0,
                    column: c0,
                });
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                col += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(l0, c0, "unterminated quoted constant")),
                        Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                            s.push('\'');
                            i += 2;
                            col += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        Some('\n') => {
                            s.push('\n');
                            i += 1;
                            line += 1;
                            col = 1;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                out.push(Spanned {
                    tok: Tok::Quoted(s),
                    line: l0,
                    column: c0,
                });
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                let word: String = chars[start..i].iter().collect();
                let tok = if c.is_ascii_digit() {
                    Tok::Number(word)
                } else {
                    Tok::Ident(word)
                };
                out.push(Spanned {
                    tok,
                    line: l0,
                    column: c0,
                });
            }
            other => return Err(syntax(l0, c0, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    doc: &'a mut Document,
    anonymous: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        let (l, c) = self.here();
        let got = self.bump();
        if got.tok == want {
            Ok(())
        } else {
            Err(syntax(l, c, format!("expected {want}, found {}", got.tok)))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        let (l, c) = self.here();
        match self.bump().tok {
            Tok::Ident(s) => Ok(s),
            other => Err(syntax(l, c, format!("expected {what}, found {other}"))),
        }
    }

    fn number(&mut self) -> Result<usize> {
        let (l, c) = self.here();
        match self.bump().tok {
            Tok::Number(s) => s
                .parse()
                .map_err(|_| syntax(l, c, format!("invalid attribute index `{s}`"))),
            other => Err(syntax(l, c, format!("expected attribute index, found {other}"))),
        }
    }

    fn record_arity(&mut self, predicate: &Symbol, arity: usize, line: usize, column: usize) -> Result<()> {
        match self.doc.arities.get(predicate) {
            Some(&known) if known != arity => Err(Error::ArityConflict {
                predicate: predicate.to_string(),
                expected: known,
                found: arity,
                line,
                column,
            }),
            Some(_) => Ok(()),
            None => {
                self.doc.arities.insert(predicate.clone(), arity);
                Ok(())
            }
        }
    }

    fn term(&mut self) -> Result<Term> {
        let (l, c) = self.here();
        match self.bump().tok {
            Tok::Ident(s) if s == "_" => {
                self.anonymous += 1;
                Ok(Term::var(&format!("_{}", self.anonymous)))
            }
            Tok::Ident(s) if s.starts_with(|ch: char| ch.is_ascii_uppercase() || ch == '_') => Ok(Term::var(&s)),
            Tok::Ident(s) | Tok::Number(s) | Tok::Quoted(s) => Ok(Term::constant(&s)),
            other => Err(syntax(l, c, format!("expected a term, found {other}"))),
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let (l, c) = self.here();
        let name = self.ident("a predicate")?;
        if name.starts_with(|ch: char| ch.is_ascii_uppercase() || ch == '_') {
            return Err(syntax(
                l,
                c,
                format!("predicate `{name}` must start with a lowercase letter"),
            ));
        }
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                args.push(self.term()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.term()?);
                }
            }
            self.expect(Tok::RParen)?;
        }
        let predicate = sym(&name);
        self.record_arity(&predicate, args.len(), l, c)?;
        Ok(Atom::new(predicate, args))
    }

    fn atoms(&mut self) -> Result<Vec<Atom>> {
        let mut out = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn indices(&mut self) -> Result<Vec<usize>> {
        let mut out = vec![self.number()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.number()?);
        }
        Ok(out)
    }

    fn fd(&mut self) -> Result<()> {
        self.bump();
        let (l, c) = self.here();
        let predicate = sym(&self.ident("a predicate")?);
        self.expect(Tok::Colon)?;
        let lhs = self.indices()?;
        self.expect(Tok::Arrow)?;
        let rhs = self.indices()?;
        self.expect(Tok::Dot)?;
        if let Some(&arity) = self.doc.arities.get(&predicate) {
            if let Some(&bad) = lhs.iter().chain(&rhs).find(|&&i| i == 0 || i > arity) {
                return Err(Error::FdIndexOutOfRange {
                    predicate: predicate.to_string(),
                    index: bad,
                    arity,
                    line: l,
                    column: c,
                });
            }
        }
        self.doc.fds.push(FunctionalDependency { predicate, lhs, rhs });
        Ok(())
    }

    fn table(&mut self) -> Result<()> {
        self.bump();
        let (l, c) = self.here();
        let predicate = sym(&self.ident("a predicate")?);
        let table = if matches!(self.peek(), Tok::Ident(s) if s == "as") {
            self.bump();
            self.ident("a table name")?
        } else {
            predicate.to_string()
        };
        self.expect(Tok::LParen)?;
        let mut columns = Vec::new();
        if *self.peek() != Tok::RParen {
            columns.push(self.ident("a column name")?);
            while *self.peek() == Tok::Comma {
                self.bump();
                columns.push(self.ident("a column name")?);
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        self.record_arity(&predicate, columns.len(), l, c)?;
        self.doc.tables.push(TableDecl {
            predicate,
            table,
            columns,
        });
        Ok(())
    }

    fn query(&mut self, head: Atom) -> Result<()> {
        let body = self.atoms()?;
        self.expect(Tok::Dot)?;
        let q = ConjunctiveQuery::checked(head, body)?;
        self.doc.queries.push(q);
        Ok(())
    }

    fn statement(&mut self) -> Result<()> {
        let keyword = |p: &Parser<'_>, kw: &str| {
            matches!(p.peek(), Tok::Ident(s) if s == kw) && matches!(p.peek_at(1), Tok::Ident(_))
        };
        if keyword(self, "fd") {
            return self.fd();
        }
        if keyword(self, "table") {
            return self.table();
        }
        if *self.peek() == Tok::Query {
            self.bump();
            let head = self.atom()?;
            self.expect(Tok::If)?;
            return self.query(head);
        }
        let (l, c) = self.here();
        let body = self.atoms()?;
        match self.bump().tok {
            Tok::If if body.len() == 1 => {
                let head = body.into_iter().next().expect("one atom");
                self.query(head)
            }
            Tok::Arrow => {
                if *self.peek() == Tok::Bang {
                    self.bump();
                    self.expect(Tok::Dot)?;
                    self.doc.ncs.push(NegativeConstraint { body });
                } else {
                    let head = self.atoms()?;
                    self.expect(Tok::Dot)?;
                    self.doc.tgds.push(RawTgd { body, head });
                }
                Ok(())
            }
            Tok::Dot => {
                for a in body {
                    if !a.is_ground() {
                        return Err(syntax(l, c, format!("fact `{a}` contains variables")));
                    }
                    self.doc.facts.push(a);
                }
                Ok(())
            }
            Tok::If => Err(syntax(l, c, "a query head must be a single atom")),
            other => Err(syntax(l, c, format!("expected `->`, `:-` or `.`, found {other}"))),
        }
    }
}

/// Parses `text` into `doc`, checking arities against what `doc` already holds.
pub fn parse_into(doc: &mut Document, text: &str) -> Result<()> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        doc,
        anonymous: 0,
    };
    while *p.peek() != Tok::Eof {
        p.statement()?;
    }
    Ok(())
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::default();
    parse_into(&mut doc, text)?;
    Ok(doc)
}

/// Alias of [`parse_document`]; an ontology file may also carry facts and queries.
pub fn parse_ontology(text: &str) -> Result<Document> {
    parse_document(text)
}

/// Parses a text holding exactly one query (with or without the `?` prefix).
pub fn parse_query(text: &str) -> Result<ConjunctiveQuery> {
    let doc = parse_document(text)?;
    match doc.queries.len() {
        1 => Ok(doc.queries.into_iter().next().expect("one query")),
        n => Err(Error::QueryCount(n)),
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tables {
            writeln!(f, "table {} as {}({}).", t.predicate, t.table, t.columns.join(","))?;
        }
        for t in &self.tgds {
            writeln!(f, "{t}")?;
        }
        for n in &self.ncs {
            writeln!(f, "{n}")?;
        }
        for d in &self.fds {
            writeln!(f, "{d}")?;
        }
        for q in &self.queries {
            writeln!(f, "? {q}")?;
        }
        for a in &self.facts {
            writeln!(f, "{a}.")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tgd_with_existential() {
        let doc = parse_document("project(X), inArea(X,Y) -> hasCollaborator(Z,Y,X).").unwrap();
        assert_eq!(doc.tgds.len(), 1);
        assert_eq!(doc.tgds[0].existential_variables(), vec![Term::var("Z")]);
    }

    #[test]
    fn negative_constraint() {
        let doc = parse_document("student(X), professor(X) -> !.").unwrap();
        assert_eq!(doc.ncs.len(), 1);
        assert_eq!(doc.ncs[0].body.len(), 2);
    }

    #[test]
    fn functional_dependency() {
        let doc = parse_document("fd fatherOf: 2 -> 1.").unwrap();
        assert_eq!(
            doc.fds,
            vec![FunctionalDependency {
                predicate: sym("fatherOf"),
                lhs: vec![2],
                rhs: vec![1]
            }]
        );
    }

    #[test]
    fn queries() {
        let q = parse_query("p(B) :- hasCollaborator(A, db, B).").unwrap();
        assert_eq!(q.distinguished(), vec![Term::var("B")]);
        let b = parse_query("p() :- r(X).").unwrap();
        assert!(b.is_boolean());
        assert!(matches!(parse_query("p(C) :- r(A,B)."), Err(Error::UnsafeQuery { .. })));
    }

    #[test]
    fn errors_carry_positions() {
        match parse_document("r(X) -> s(X).\n  r(X,Y) -> s(Y).") {
            Err(Error::ArityConflict {
                predicate,
                line,
                column,
                ..
            }) => {
                assert_eq!((predicate.as_str(), line, column), ("r", 2, 3));
            }
            other => panic!("{other:?}"),
        }
        match parse_document("r(X) -> s(X)\n") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_document("r(X,Y) -> s(X). fd r: 1 -> 3."),
            Err(Error::FdIndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn mixed_file_with_comments_and_quotes() {
        let text =
            "% ontology\nr(X) -> s(X). % trailing\n? q(X) :- s(X).\nr('hello world').\nr(42).\ntable s as s_tab(id).";
        let doc = parse_document(text).unwrap();
        assert_eq!(doc.facts[0].args[0], Term::constant("hello world"));
        assert_eq!(doc.facts[1].args[0], Term::constant("42"));
        assert_eq!(doc.tables[0].table, "s_tab");
        assert_eq!(doc.queries.len(), 1);
    }

    fn arb_document() -> impl Strategy<Value = Document> {
        let term = prop_oneof![
            (0..3usize).prop_map(|i| Term::var(["X", "Y", "Z"][i])),
            (0..3usize).prop_map(|i| Term::constant(["a", "it's", "7"][i])),
        ];
        let atom =
            (0..3usize, prop::collection::vec(term, 2)).prop_map(|(p, args)| Atom::new(sym(["r", "s", "t"][p]), args));
        (
            prop::collection::vec(atom.clone(), 1..3),
            prop::collection::vec(atom, 1..3),
        )
            .prop_map(|(body, head)| {
                let mut doc = Document::default();
                for a in body.iter().chain(&head) {
                    doc.arities.insert(a.predicate.clone(), 2);
                }
                doc.ncs.push(NegativeConstraint { body: body.clone() });
                let vars: Vec<Term> = body.iter().flat_map(|a| a.variables().cloned()).collect();
                doc.queries.push(ConjunctiveQuery::new(
                    Atom::new(sym("q"), vars.into_iter().take(1).collect()),
                    body.clone(),
                ));
                doc.arities.insert(sym("q"), doc.queries[0].head.arity());
                doc.fds.push(FunctionalDependency {
                    predicate: body[0].predicate.clone(),
                    lhs: vec![1],
                    rhs: vec![2],
                });
                doc.tgds.push(RawTgd { body, head });
                doc
            })
    }

    proptest! {
        #[test]
        fn round_trip(doc in arb_document()) {
            let text = doc.to_string();
            let back = parse_document(&text).unwrap();
            prop_assert_eq!(back, doc);
        }
    }
}
