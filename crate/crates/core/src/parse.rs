//! Query text format:
//!
//! ```text
//! answer(x, y) :- E(x, y), E(y, z).
//! ```
//!
//! Head variables are free, in head order; all other body variables are
//! existentially quantified. Whitespace is insignificant.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::structure::{ConjunctiveQuery, RelationalStructure, Vocabulary};

const HEAD: &str = "answer";

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Turnstile,
    Dot,
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

fn tokenize(text: &str) -> Result<(Vec<Spanned>, (usize, usize))> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (l, col) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().expect("peeked");
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
        };
        let tok = match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            ':' => {
                bump(&mut chars);
                if chars.peek() != Some(&'-') {
                    return Err(syntax(l, col, "expected `:-`"));
                }
                Tok::Turnstile
            }
            c if c.is_ascii_alphabetic() => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                out.push(Spanned {
                    tok: Tok::Ident(ident),
                    line: l,
                    column: col,
                });
                continue;
            }
            '_' => return Err(syntax(l, col, "identifiers must start with a letter; `__` names are reserved")),
            other => return Err(syntax(l, col, format!("unexpected character `{other}`"))),
        };
        bump(&mut chars);
        out.push(Spanned {
            tok,
            line: l,
            column: col,
        });
    }
    Ok((out, (line, column)))
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.end, |t| (t.line, t.column))
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(syntax(line, column, message))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.toks.get(self.pos) {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail(format!("expected {what}")),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, (usize, usize))> {
        let at = self.here();
        match self.toks.get(self.pos) {
            Some(Spanned { tok: Tok::Ident(s), .. }) => {
                self.pos += 1;
                Ok((s.clone(), at))
            }
            _ => self.fail(format!("expected {what}")),
        }
    }

    fn peek_is(&self, tok: &Tok) -> bool {
        self.toks.get(self.pos).is_some_and(|t| &t.tok == tok)
    }

    /// `( var, ... )`; an empty list only when `allow_empty`.
    fn var_list(&mut self, allow_empty: bool) -> Result<Vec<(String, (usize, usize))>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut vars = Vec::new();
        if allow_empty && self.peek_is(&Tok::RParen) {
            self.pos += 1;
            return Ok(vars);
        }
        loop {
            vars.push(self.ident("a variable")?);
            if self.peek_is(&Tok::Comma) {
                self.pos += 1;
            } else {
                self.expect(Tok::RParen, "`,` or `)`")?;
                return Ok(vars);
            }
        }
    }
}

/// A parsed query with non-fatal diagnostics.
#[derive(Clone, Debug)]
pub struct ParsedQuery {
    pub query: ConjunctiveQuery,
    pub warnings: Vec<String>,
}

pub fn parse_query(text: &str) -> Result<ConjunctiveQuery> {
    Ok(parse_query_with_warnings(text)?.query)
}

pub fn parse_query_with_warnings(text: &str) -> Result<ParsedQuery> {
    let (toks, end) = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end };
    let (head, at) = p.ident("`answer`")?;
    if head != HEAD {
        return Err(syntax(at.0, at.1, format!("the head must be `{HEAD}`, found `{head}`")));
    }
    let free = p.var_list(true)?;
    p.expect(Tok::Turnstile, "`:-`")?;

    let mut vocabulary = Vocabulary::new();
    let mut atoms: Vec<(String, Vec<String>)> = Vec::new();
    loop {
        let (name, at) = p.ident("a relation name")?;
        let vars = p.var_list(false)?;
        if let Some(expected) = vocabulary.arity(&name) {
            if expected != vars.len() {
                return Err(syntax(
                    at.0,
                    at.1,
                    format!("`{name}` used with arity {} and {expected}", vars.len()),
                ));
            }
        }
        vocabulary.insert(&name, vars.len())?;
        atoms.push((name, vars.into_iter().map(|(v, _)| v).collect()));
        if p.peek_is(&Tok::Comma) {
            p.pos += 1;
        } else {
            p.expect(Tok::Dot, "`,` or `.`")?;
            break;
        }
    }
    if p.pos < p.toks.len() {
        return p.fail("unexpected input after the final `.`");
    }

    let mut seen = BTreeSet::new();
    for (v, _) in &free {
        if !seen.insert(v.as_str()) {
            return Err(Error::DuplicateFreeVariable(v.clone()));
        }
    }
    let body_vars: BTreeSet<&str> = atoms.iter().flat_map(|(_, vs)| vs.iter().map(String::as_str)).collect();
    let warnings = free
        .iter()
        .filter(|(v, _)| !body_vars.contains(v.as_str()))
        .map(|(v, (line, column))| {
            format!("line {line}, column {column}: head variable `{v}` does not occur in the body and ranges over the whole domain")
        })
        .collect();
    let domain: BTreeSet<&str> = body_vars.iter().copied().chain(free.iter().map(|(v, _)| v.as_str())).collect();
    let structure = RelationalStructure::from_named(
        vocabulary,
        domain,
        atoms.iter().map(|(n, vs)| (n.as_str(), vs.iter().map(String::as_str).collect::<Vec<_>>())),
    )?;
    let names: Vec<&str> = free.iter().map(|(v, _)| v.as_str()).collect();
    Ok(ParsedQuery {
        query: ConjunctiveQuery::from_names(structure, &names)?,
        warnings,
    })
}

/// Renders a query in the text format. Atoms are listed by relation name and
/// then by tuple. Quantified elements occurring in no atom, and 0-ary atoms,
/// have no textual form and are omitted.
pub fn render_query(q: &ConjunctiveQuery) -> String {
    let a = q.structure();
    let atoms: Vec<String> = a
        .relations()
        .flat_map(|(name, tuples)| {
            tuples
                .iter()
                .filter(|t| !t.is_empty())
                .map(move |t| format!("{name}({})", a.tuple_names(t).join(", ")))
        })
        .collect();
    format!("{HEAD}({}) :- {}.", q.free_var_names().join(", "), atoms.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_query() {
        let q = parse_query("answer(x,y) :- E(x,y), E(y,z).").unwrap();
        assert_eq!(q.free_var_names(), ["x", "y"]);
        assert_eq!(q.structure().domain(), ["x", "y", "z"]);
        assert_eq!(q.structure().relation("E").unwrap().len(), 2);
    }

    #[test]
    fn boolean_and_loop() {
        let q = parse_query("answer() :- E(x,y).").unwrap();
        assert!(q.is_boolean());
        let q = parse_query("answer(x) :- R(x,x).").unwrap();
        assert_eq!(q.structure().relation("R").unwrap().iter().next().unwrap(), &vec![0, 0]);
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_query("answer(x,y):-E(x,y).").unwrap();
        let b = parse_query("  answer ( x , y )\n :-\n\tE( x,y ) .\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors_carry_positions() {
        match parse_query("answer(x) :-\n  E(x,,y).") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 7)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_query("answer(x) :- E(x)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_query("query(x) :- E(x)."), Err(Error::Syntax { line: 1, column: 1, .. })));
        assert!(matches!(parse_query("answer(x) :- E(x). E(x)."), Err(Error::Syntax { .. })));
        assert!(matches!(parse_query("answer(x) :- ."), Err(Error::Syntax { .. })));
        assert!(matches!(parse_query("answer(x) :- E()."), Err(Error::Syntax { .. })));
    }

    #[test]
    fn inconsistent_arity() {
        assert!(matches!(parse_query("answer(x) :- E(x,y), E(x)."), Err(Error::Syntax { .. })));
    }

    #[test]
    fn reserved_and_duplicates() {
        assert!(parse_query("answer(x) :- __aug_x(x).").is_err());
        assert!(matches!(
            parse_query("answer(x,x) :- E(x,y)."),
            Err(Error::DuplicateFreeVariable(_))
        ));
    }

    #[test]
    fn head_only_variable_warns() {
        let p = parse_query_with_warnings("answer(x,w) :- E(x,y).").unwrap();
        assert_eq!(p.warnings.len(), 1);
        assert!(p.query.structure().index_of("w").is_some());
    }

    #[test]
    fn render_round_trip() {
        for text in [
            "answer(y,x) :- E(x,y), E(y,z), R(z,z,x).",
            "answer() :- E(x,y).",
            "answer(x,w) :- E(x,y).",
        ] {
            let q = parse_query(text).unwrap();
            assert_eq!(parse_query(&render_query(&q)).unwrap(), q);
        }
    }
}
