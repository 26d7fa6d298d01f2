//! Query DSL parser.
//!
//! ```text
//! q() :- R(x, y), S(y, z).      one rule per line; several rules = union
//! q() :- true.                  the empty conjunction
//! reach(a, b, "E.(F|G)*")       reachability along a regular path
//! ```
//! Lines starting with `#` are comments.

use super::{Atom, CqQuery, Query, Regex, RpqQuery, UcqQuery};
use crate::error::{Error, Result};

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col0: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize, col0: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            col0,
            _src: src,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::QuerySyntax {
            line: self.line,
            column: self.col0 + self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(found) => self.err(format!("expected '{c}', found '{found}'")),
                None => self.err(format!("expected '{c}', found end of line")),
            }
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|&c| c.is_alphanumeric() || c == '_' || c == '\'')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return match self.chars.get(self.pos) {
                Some(c) => self.err(format!("expected identifier, found '{c}'")),
                None => self.err("expected identifier, found end of line"),
            };
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    /// An element name: any run of characters other than whitespace,
    /// parentheses, commas and quotes.
    fn element(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|&c| !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '"'))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected element name");
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }
}

pub fn parse_query(text: &str) -> Result<Query> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .collect();
    let Some(&(first_line, first)) = lines.first() else {
        return Err(Error::EmptyQuery);
    };
    if first.trim_start().starts_with("reach") {
        if let Some(&(line, _)) = lines.get(1) {
            return Err(Error::QuerySyntax {
                line,
                column: 1,
                msg: "a reachability query must be alone in its file".into(),
            });
        }
        return parse_rpq(first, first_line).map(Query::Rpq);
    }
    let disjuncts = lines
        .iter()
        .map(|&(line, l)| parse_rule(l, line))
        .collect::<Result<Vec<_>>>()?;
    Ok(Query::Ucq(UcqQuery { disjuncts }))
}

fn parse_rule(text: &str, line: usize) -> Result<CqQuery> {
    let mut c = Cursor::new(text, line, 1);
    c.ident()?;
    c.expect('(')?;
    c.expect(')')?;
    if c.eat('.') {
        return finish(&mut c, CqQuery::new(Vec::new()));
    }
    c.expect(':')?;
    if c.chars.get(c.pos) != Some(&'-') {
        return c.err("expected ':-'");
    }
    c.pos += 1;
    let mut atoms = Vec::new();
    loop {
        let relation = c.ident()?;
        if relation == "true" && atoms.is_empty() && c.peek() == Some('.') {
            c.expect('.')?;
            return finish(&mut c, CqQuery::new(Vec::new()));
        }
        c.expect('(')?;
        let mut args = Vec::new();
        if !c.eat(')') {
            loop {
                args.push(c.ident()?);
                if c.eat(')') {
                    break;
                }
                c.expect(',')?;
            }
        }
        atoms.push(Atom { relation, args });
        if c.eat('.') {
            break;
        }
        c.expect(',')?;
    }
    finish(&mut c, CqQuery::new(atoms))
}

fn finish(c: &mut Cursor<'_>, q: CqQuery) -> Result<CqQuery> {
    if c.at_end() {
        Ok(q)
    } else {
        c.err("trailing input after rule")
    }
}

fn parse_rpq(text: &str, line: usize) -> Result<RpqQuery> {
    let mut c = Cursor::new(text, line, 1);
    let kw = c.ident()?;
    if kw != "reach" {
        return c.err(format!("unknown query form {kw:?}"));
    }
    c.expect('(')?;
    let source = c.element()?;
    c.expect(',')?;
    let target = c.element()?;
    c.expect(',')?;
    c.expect('"')?;
    let start = c.pos;
    let Some(len) = c.chars[start..].iter().position(|&ch| ch == '"') else {
        return c.err("unterminated regular expression");
    };
    let body: String = c.chars[start..start + len].iter().collect();
    let regex = parse_regex(&body, line, start + 1)?;
    c.pos = start + len + 1;
    c.expect(')')?;
    c.eat('.');
    if !c.at_end() {
        return c.err("trailing input after query");
    }
    Ok(RpqQuery {
        source,
        target,
        regex,
    })
}

/// Parses a regular expression; `line` and `col0` locate it for errors.
pub(crate) fn parse_regex(text: &str, line: usize, col0: usize) -> Result<Regex> {
    let mut c = Cursor::new(text, line, col0);
    if c.at_end() {
        return c.err("empty regular expression");
    }
    let r = alternation(&mut c)?;
    match c.peek() {
        None => Ok(r),
        Some(')') => c.err("unbalanced ')'"),
        Some(ch) => c.err(format!("unknown operator '{ch}'")),
    }
}

fn alternation(c: &mut Cursor<'_>) -> Result<Regex> {
    let mut left = concatenation(c)?;
    while c.eat('|') {
        let right = concatenation(c)?;
        left = Regex::Alt(Box::new(left), Box::new(right));
    }
    Ok(left)
}

fn concatenation(c: &mut Cursor<'_>) -> Result<Regex> {
    let mut left = postfix(c)?;
    while c.eat('.') {
        let right = postfix(c)?;
        left = Regex::Concat(Box::new(left), Box::new(right));
    }
    Ok(left)
}

fn postfix(c: &mut Cursor<'_>) -> Result<Regex> {
    let mut r = atom(c)?;
    loop {
        r = match c.peek() {
            Some('*') => Regex::Star(Box::new(r)),
            Some('+') => Regex::Plus(Box::new(r)),
            Some('?') => Regex::Opt(Box::new(r)),
            _ => return Ok(r),
        };
        c.pos += 1;
    }
}

fn atom(c: &mut Cursor<'_>) -> Result<Regex> {
    match c.peek() {
        Some('(') => {
            c.pos += 1;
            let r = alternation(c)?;
            c.expect(')')?;
            Ok(r)
        }
        Some(ch) if ch.is_alphanumeric() || ch == '_' => Ok(Regex::Rel(c.ident()?)),
        Some(ch) => c.err(format!("unknown operator '{ch}'")),
        None => c.err("unexpected end of regular expression"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_atom_cq() {
        let Query::Ucq(u) = parse_query("q() :- R(x).").unwrap() else {
            panic!("expected UCQ")
        };
        assert_eq!(u.disjuncts.len(), 1);
        assert_eq!(u.disjuncts[0].atoms.len(), 1);
        assert_eq!(u.disjuncts[0].variables.len(), 1);
    }

    #[test]
    fn two_rules_make_a_union() {
        let Query::Ucq(u) = parse_query("q() :- R(x,y), S(y,z).\nq() :- T(x).\n").unwrap() else {
            panic!("expected UCQ")
        };
        assert_eq!(u.disjuncts.len(), 2);
        assert_eq!(u.disjuncts[0].variables.len(), 3);
    }

    #[test]
    fn reach_query() {
        let Query::Rpq(r) = parse_query("reach(a, b, \"E+\")").unwrap() else {
            panic!("expected RPQ")
        };
        assert_eq!(r.source, "a");
        assert_eq!(r.target, "b");
        assert_eq!(r.regex, Regex::Plus(Box::new(Regex::rel("E"))));
    }

    #[test]
    fn empty_conjunction() {
        let q = parse_query("q() :- true.").unwrap();
        assert_eq!(q, Query::Ucq(UcqQuery { disjuncts: vec![CqQuery::new(vec![])] }));
        assert_eq!(parse_query("q().").unwrap(), q);
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse_query("  \n# only a comment\n"), Err(Error::EmptyQuery));
        match parse_query("q() :- R(x) S(y).") {
            Err(Error::QuerySyntax { line: 1, column, .. }) => assert_eq!(column, 13),
            other => panic!("{other:?}"),
        }
        match parse_query("q() :- R(x).\nq() :- R(x,.") {
            Err(Error::QuerySyntax { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_query("reach(a, b, \"E&F\")") {
            Err(Error::QuerySyntax { msg, column, .. }) => {
                assert!(msg.contains("unknown operator '&'"), "{msg}");
                assert_eq!(column, 15);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_query("reach(a, b, \"(E\")").is_err());
        assert!(parse_query("reach(a, b, \"\")").is_err());
    }

    fn arb_regex() -> impl Strategy<Value = Regex> {
        let leaf = prop_oneof![Just("E"), Just("F"), Just("Road_2")].prop_map(Regex::rel);
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Regex::Concat(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Regex::Alt(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Regex::Star(Box::new(a))),
                inner.clone().prop_map(|a| Regex::Plus(Box::new(a))),
                inner.prop_map(|a| Regex::Opt(Box::new(a))),
            ]
        })
    }

    fn arb_ucq() -> impl Strategy<Value = UcqQuery> {
        let var = prop_oneof![Just("x"), Just("y"), Just("z"), Just("w1")].prop_map(String::from);
        let atom = (prop_oneof![Just("R"), Just("S"), Just("T")], prop::collection::vec(var, 0..4))
            .prop_map(|(r, args)| Atom { relation: r.to_string(), args });
        let cq = prop::collection::vec(atom, 0..4).prop_map(CqQuery::new);
        prop::collection::vec(cq, 1..4).prop_map(|disjuncts| UcqQuery { disjuncts })
    }

    proptest! {
        #[test]
        fn regex_print_parse_identity(r in arb_regex()) {
            let q = Query::Rpq(RpqQuery { source: "s1".into(), target: "t".into(), regex: r });
            prop_assert_eq!(parse_query(&q.to_string()).unwrap(), q);
        }

        #[test]
        fn ucq_print_parse_identity(u in arb_ucq()) {
            let q = Query::Ucq(u);
            prop_assert_eq!(parse_query(&q.to_string()).unwrap(), q);
        }
    }
}
