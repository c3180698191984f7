//! Text syntax for programs, facts and queries, and rendering back to text/JSON.
//!
//! ```text
//! program := { fact | rule | query } ;
//! fact    := atom "." ;
//! rule    := atom { "," atom } "->" [ "exists" var { "," var } ] atom "." ;
//! query   := "?" ident [ "(" var { "," var } ")" ] ":-" atom { "," atom } "." ;
//! atom    := ident "(" [ term { "," term } ] ")" ;
//! ```
//!
//! Variables start with an uppercase letter, constants with a lowercase letter
//! or digit (or are single-quoted). Nulls are written `_:n<k>` and frozen nulls
//! `_:f<k>`; they are accepted in facts so that dumped instances read back.
//! `%` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{Atom, ConjunctiveQuery, Instance, Program, Rule, Sym, Term};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Null(u32),
    Frozen(u32),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    Neck,
    Question,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let syntax = |line, col, msg: String| Error::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let adv = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => adv(1, &mut i, &mut col),
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' | ')' | ',' | '.' | '?' => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    _ => Tok::Question,
                };
                out.push(Token { tok, line: l0, col: c0 });
                adv(1, &mut i, &mut col);
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Token { tok: Tok::Arrow, line: l0, col: c0 });
                adv(2, &mut i, &mut col);
            }
            ':' if chars.get(i + 1) == Some(&'-') => {
                out.push(Token { tok: Tok::Neck, line: l0, col: c0 });
                adv(2, &mut i, &mut col);
            }
            '_' if chars.get(i + 1) == Some(&':') => {
                let kind = chars.get(i + 2).copied();
                let mut j = i + 3;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let digits: String = chars[i + 3..j.max(i + 3)].iter().collect();
                let k: u32 = digits
                    .parse()
                    .map_err(|_| syntax(l0, c0, "malformed null".into()))?;
                let tok = match kind {
                    Some('n') => Tok::Null(k),
                    Some('f') => Tok::Frozen(k),
                    _ => return Err(syntax(l0, c0, "malformed null".into())),
                };
                out.push(Token { tok, line: l0, col: c0 });
                adv(j - i, &mut i, &mut col);
            }
            '\'' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(syntax(l0, c0, "unterminated quoted constant".into()))
                        }
                        Some('\\') if j + 1 < chars.len() => {
                            s.push(chars[j + 1]);
                            j += 2;
                        }
                        Some('\'') => break,
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                out.push(Token { tok: Tok::Quoted(s), line: l0, col: c0 });
                adv(j + 1 - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push(Token {
                    tok: Tok::Word(chars[i..j].iter().collect()),
                    line: l0,
                    col: c0,
                });
                adv(j - i, &mut i, &mut col);
            }
            other => return Err(syntax(l0, c0, format!("unexpected character {other:?}"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn is_var_word(w: &str) -> bool {
    w.starts_with(|c: char| c.is_ascii_uppercase())
}

fn is_const_word(w: &str) -> bool {
    w.starts_with(|c: char| c.is_ascii_lowercase() || c.is_ascii_digit())
}

/// Atom with the source location of each argument.
struct Located {
    atom: Atom,
    arg_locs: Vec<(usize, usize)>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    schema: BTreeMap<Sym, usize>,
}

enum Statement {
    Fact(Atom),
    Rule(Rule),
    Query(ConjunctiveQuery),
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            self.err(&t, format!("expected {what}, found {}", describe(&t.tok)))
        }
    }

    fn var(&mut self) -> Result<(Sym, Token)> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if is_var_word(w) => Ok((Arc::from(w.as_str()), t.clone())),
            other => self.err(&t, format!("expected a variable, found {}", describe(other))),
        }
    }

    fn term(&mut self) -> Result<Term> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if is_var_word(w) => Ok(Term::Var(Arc::from(w.as_str()))),
            Tok::Word(w) if w == "exists" => self.err(&t, "'exists' is reserved"),
            Tok::Word(w) if is_const_word(w) => Ok(Term::Const(Arc::from(w.as_str()))),
            Tok::Quoted(s) => Ok(Term::Const(Arc::from(s.as_str()))),
            Tok::Null(k) => Ok(Term::Null(*k)),
            Tok::Frozen(k) => Ok(Term::Frozen(*k)),
            other => self.err(&t, format!("expected a term, found {}", describe(other))),
        }
    }

    fn atom(&mut self) -> Result<Located> {
        let t = self.next();
        let pred = match &t.tok {
            Tok::Word(w) if w != "exists" => w.clone(),
            other => return self.err(&t, format!("expected a predicate, found {}", describe(other))),
        };
        self.expect(Tok::LParen, "'('")?;
        let mut args = Vec::new();
        let mut arg_locs = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                let at = self.peek().clone();
                arg_locs.push((at.line, at.col));
                args.push(self.term()?);
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "')' or ','")?;
        match self.schema.get(pred.as_str()) {
            Some(&k) if k != args.len() => {
                return Err(Error::Arity {
                    line: t.line,
                    col: t.col,
                    pred,
                    expected: k,
                    found: args.len(),
                })
            }
            Some(_) => {}
            None => {
                self.schema.insert(Arc::from(pred.as_str()), args.len());
            }
        }
        Ok(Located {
            atom: Atom::new(&pred, args),
            arg_locs,
        })
    }

    fn statement(&mut self, rule_no: usize) -> Result<Statement> {
        if self.peek().tok == Tok::Question {
            return self.query().map(Statement::Query);
        }
        let mut body = vec![self.atom()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            body.push(self.atom()?);
        }
        let t = self.next();
        match &t.tok {
            Tok::Dot if body.len() == 1 => {
                let f = body.pop().unwrap();
                if let Some((i, v)) = f.atom.args.iter().enumerate().find(|(_, a)| a.is_var()) {
                    let (line, col) = f.arg_locs[i];
                    return Err(Error::NonGroundFact {
                        line,
                        col,
                        var: v.to_string(),
                    });
                }
                Ok(Statement::Fact(f.atom))
            }
            Tok::Dot => self.err(&t, "a fact has a single atom; expected '->'"),
            Tok::Arrow => self.rule_rest(body, rule_no).map(Statement::Rule),
            other => self.err(&t, format!("expected '.' or '->', found {}", describe(other))),
        }
    }

    fn rule_rest(&mut self, body: Vec<Located>, rule_no: usize) -> Result<Rule> {
        let mut exist: Vec<(Sym, Token)> = Vec::new();
        if matches!(&self.peek().tok, Tok::Word(w) if w == "exists") {
            self.next();
            exist.push(self.var()?);
            while self.peek().tok == Tok::Comma {
                self.next();
                exist.push(self.var()?);
            }
        }
        let head = self.atom()?;
        let t = self.next();
        match &t.tok {
            Tok::Dot => {}
            Tok::Comma => return Err(Error::MultiAtomHead { line: t.line, col: t.col }),
            other => return self.err(&t, format!("expected '.', found {}", describe(other))),
        }
        let body_vars: BTreeSet<&Sym> = body.iter().flat_map(|a| a.atom.vars()).collect();
        for (z, tok) in &exist {
            if body_vars.contains(z) {
                let (line, col) = body
                    .iter()
                    .flat_map(|a| a.atom.args.iter().zip(&a.arg_locs))
                    .find(|(t, _)| t.as_var() == Some(z))
                    .map(|(_, &loc)| loc)
                    .unwrap_or((tok.line, tok.col));
                return Err(Error::ExistentialInBody {
                    line,
                    col,
                    var: z.to_string(),
                });
            }
            if !head.atom.vars().any(|v| v == z) {
                return Err(Error::UnusedExistential {
                    line: tok.line,
                    col: tok.col,
                    var: z.to_string(),
                });
            }
        }
        for (i, t) in head.atom.args.iter().enumerate() {
            if let Term::Var(v) = t {
                if !body_vars.contains(v) && !exist.iter().any(|(z, _)| z == v) {
                    let (line, col) = head.arg_locs[i];
                    return Err(Error::UnsafeHeadVariable {
                        line,
                        col,
                        var: v.to_string(),
                    });
                }
            }
        }
        let mut zs: Vec<Sym> = Vec::new();
        for (z, _) in exist {
            if !zs.contains(&z) {
                zs.push(z);
            }
        }
        Rule::new(
            &format!("r{rule_no}"),
            body.into_iter().map(|a| a.atom).collect(),
            head.atom,
            zs,
        )
    }

    fn query(&mut self) -> Result<ConjunctiveQuery> {
        self.expect(Tok::Question, "'?'")?;
        let t = self.next();
        let name = match &t.tok {
            Tok::Word(w) => w.clone(),
            other => return self.err(&t, format!("expected a query name, found {}", describe(other))),
        };
        let mut free: Vec<(Sym, Token)> = Vec::new();
        if self.peek().tok == Tok::LParen {
            let open = self.next();
            if self.peek().tok == Tok::RParen {
                return self.err(&open, "empty answer tuple; write '?Q :- ...' for a Boolean query");
            }
            free.push(self.var()?);
            while self.peek().tok == Tok::Comma {
                self.next();
                free.push(self.var()?);
            }
            self.expect(Tok::RParen, "')'")?;
        }
        self.expect(Tok::Neck, "':-'")?;
        let mut body = vec![self.atom()?.atom];
        while self.peek().tok == Tok::Comma {
            self.next();
            body.push(self.atom()?.atom);
        }
        self.expect(Tok::Dot, "'.'")?;
        for (v, tok) in &free {
            if !body.iter().flat_map(Atom::vars).any(|x| x == v) {
                return Err(Error::UnsafeQuery {
                    line: tok.line,
                    col: tok.col,
                    var: v.to_string(),
                });
            }
        }
        let mut vars: Vec<Sym> = Vec::new();
        for (v, _) in free {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        Ok(ConjunctiveQuery::new(&name, vars, body))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("'{w}'"),
        Tok::Quoted(s) => format!("'{s}'"),
        Tok::Null(k) => format!("_:n{k}"),
        Tok::Frozen(k) => format!("_:f{k}"),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Dot => "'.'".into(),
        Tok::Arrow => "'->'".into(),
        Tok::Neck => "':-'".into(),
        Tok::Question => "'?'".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a whole source text: rules, facts and queries.
pub fn parse_document(text: &str) -> Result<(Program, Vec<ConjunctiveQuery>)> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        schema: BTreeMap::new(),
    };
    let mut rules = Vec::new();
    let mut edb = Instance::new();
    let mut queries = Vec::new();
    while p.peek().tok != Tok::Eof {
        match p.statement(rules.len() + 1)? {
            Statement::Fact(a) => {
                edb.insert(a);
            }
            Statement::Rule(r) => rules.push(r),
            Statement::Query(q) => queries.push(q),
        }
    }
    let program = Program::new(rules, Instance::new())?;
    // Facts may carry nulls in dumped instances; keep them outside the
    // null-free EDB check by inserting directly.
    let mut program = program;
    for a in edb.iter() {
        program.schema.entry(a.pred.clone()).or_insert(a.arity());
    }
    program.edb = edb;
    Ok((program, queries))
}

/// Parses rules and facts. Queries in the text are ignored.
pub fn parse_program(text: &str) -> Result<Program> {
    let (program, _) = parse_document(text)?;
    if let Some(a) = program.edb.iter().find(|a| a.has_null()) {
        return Err(Error::NonGroundEdb(a.to_string()));
    }
    Ok(program)
}

/// Parses a set of facts, which may contain nulls and frozen nulls.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let (program, queries) = parse_document(text)?;
    if !program.rules.is_empty() || !queries.is_empty() {
        return Err(Error::Syntax {
            line: 1,
            col: 1,
            msg: "an instance contains facts only".into(),
        });
    }
    Ok(program.edb)
}

/// Parses a text holding exactly one query.
pub fn parse_query(text: &str) -> Result<ConjunctiveQuery> {
    let (program, mut queries) = parse_document(text)?;
    if !program.rules.is_empty() || !program.edb.is_empty() || queries.len() != 1 {
        return Err(Error::QueryCount(queries.len()));
    }
    Ok(queries.pop().unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

pub fn term_json(t: &Term) -> Value {
    Value::String(match t {
        Term::Const(c) => c.to_string(),
        other => other.to_string(),
    })
}

pub fn atom_json(a: &Atom) -> Value {
    json!({"pred": a.pred.as_ref(), "args": a.args.iter().map(term_json).collect::<Vec<_>>()})
}

pub fn instance_json(i: &Instance) -> Value {
    Value::Array(i.sorted().into_iter().map(atom_json).collect())
}

/// Deterministic rendering: atoms sorted lexicographically, one fact per line.
pub fn render_instance(i: &Instance, format: Format) -> String {
    match format {
        Format::Text => {
            let mut s = String::new();
            for a in i.sorted() {
                s.push_str(&format!("{a}.\n"));
            }
            s
        }
        Format::Json => {
            let v = json!({"format_version": FORMAT_VERSION, "atoms": instance_json(i)});
            format!("{}\n", serde_json::to_string(&v).expect("json"))
        }
    }
}

/// Rules in order, then facts sorted.
pub fn render_program(p: &Program) -> String {
    let mut s = String::new();
    for r in &p.rules {
        s.push_str(&format!("{r}\n"));
    }
    s.push_str(&render_instance(&p.edb, Format::Text));
    s
}

pub fn render_query(q: &ConjunctiveQuery) -> String {
    format!("{q}\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fact_and_existential_rule() {
        let p = parse_program("R(a,b). R(X,Y) -> exists Z R(Y,Z).").unwrap();
        assert_eq!(p.edb.len(), 1);
        assert_eq!(p.rules.len(), 1);
        assert_eq!(p.rules[0].exist_vars, vec![Sym::from("Z")]);
    }

    #[test]
    fn empty_input() {
        let p = parse_program("").unwrap();
        assert!(p.rules.is_empty() && p.edb.is_empty());
    }

    #[test]
    fn two_atom_body() {
        let p = parse_program("R(X,Y), R(Y,Z) -> S(X,Y,Z).").unwrap();
        assert_eq!(p.rules[0].body.len(), 2);
        assert!(p.rules[0].exist_vars.is_empty());
    }

    #[test]
    fn queries() {
        let q = parse_query("?Q(X) :- R(X,Y).").unwrap();
        assert_eq!(q.m_q(), 1);
        let q = parse_query("?Q(X) :- U(X).").unwrap();
        assert_eq!(q.m_q(), 0);
        let q = parse_query("?Q :- P(a1,X).").unwrap();
        assert!(q.is_boolean());
        assert_eq!(q.m_q(), 1);
        assert!(matches!(parse_query("?Q() :- P(a1,X)."), Err(Error::Syntax { .. })));
        assert!(matches!(parse_query("?Q(Y) :- P(a1,X)."), Err(Error::UnsafeQuery { .. })));
    }

    #[test]
    fn positioned_errors() {
        match parse_program("R(a).\nR(a,b).") {
            Err(Error::Arity { line: 2, col: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_program("R(X,Z) -> exists Z S(Z).") {
            Err(Error::ExistentialInBody { line: 1, col: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_program("R(X) -> S(X,Y).") {
            Err(Error::UnsafeHeadVariable { line: 1, col: 13, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_program("R(X) -> S(X), T(X)."),
            Err(Error::MultiAtomHead { .. })
        ));
        assert!(matches!(parse_program("R(a) -> "), Err(Error::Syntax { .. })));
        assert!(matches!(parse_program("R(X)."), Err(Error::NonGroundFact { .. })));
    }

    #[test]
    fn comments_quotes_and_nulls() {
        let i = parse_instance("% dump\nP(b,_:f1). P('Hello world',_:n2).").unwrap();
        assert!(i.contains(&Atom::new("P", vec![Term::constant("b"), Term::Frozen(1)])));
        let text = render_instance(&i, Format::Text);
        assert_eq!(text, "P('Hello world',_:n2).\nP(b,_:f1).\n");
        assert_eq!(parse_instance(&text).unwrap(), i);
    }

    #[test]
    fn render_examples() {
        let i = parse_instance("R(a,b).").unwrap();
        assert_eq!(render_instance(&i, Format::Text), "R(a,b).\n");
        let i: Instance = [Atom::new("P", vec![Term::constant("b"), Term::Frozen(1)])]
            .into_iter()
            .collect();
        assert_eq!(render_instance(&i, Format::Text), "P(b,_:f1).\n");
        let j = parse_instance("R(a,b).").unwrap();
        let v: Value = serde_json::from_str(&render_instance(&j, Format::Json)).unwrap();
        assert_eq!(v["atoms"], json!([{"pred":"R","args":["a","b"]}]));
        assert_eq!(v["format_version"], json!(FORMAT_VERSION));
    }

    #[test]
    fn zero_arity_atoms() {
        let p = parse_program("mg__P__ff(). mg__P__ff(), R(X) -> P(X).").unwrap();
        assert_eq!(p.arity("mg__P__ff"), Some(0));
        assert_eq!(parse_program(&render_program(&p)).unwrap(), p);
    }
}
