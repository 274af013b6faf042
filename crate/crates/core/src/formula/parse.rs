//! Recursive-descent parser for the query file format.
//!
//! ```text
//! file    := "inputs:" declist ";" "outputs:" declist ";" ("falsify:"|"prove:") expr
//! declist := ident "[" rational "," rational "]" ("," ident "[" rational "," rational "]")*
//! expr    := precedence ! > & > | > -> > <-> ; "->" right-associative
//! cmp     := poly ("<"|"<="|"="|"!="|">="|">") poly | "argmax_out" "=" integer
//! poly    := "+ - * ^" over declared idents and rational literals
//! ```
//!
//! `#` starts a comment running to end of line. Rational literals are
//! decimals (`0.5`) or compact fractions (`1/2`, no spaces around `/`).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::ParseError;
use crate::rat::{self, Rat};

use super::ast::Formula;
use super::atom::{Atom, Relation};
use super::term::Term;
use super::{Mode, QuerySpec, Ranges};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(Rat),
    Keyword(&'static str), // inputs: outputs: falsify: prove:
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, msg: msg.into() }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.bump();
                continue;
            }
            if c == b'#' {
                while let Some(c) = self.peek() {
                    if c == b'\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let (line, col) = (self.line, self.col);
            let tok = if c.is_ascii_digit() || (c == b'.' && self.peek2().is_some_and(|d| d.is_ascii_digit())) {
                self.lex_number()?
            } else if c.is_ascii_alphabetic() || c == b'_' {
                self.lex_word()?
            } else {
                self.lex_symbol()?
            };
            out.push(Spanned { tok, line, col });
        }
        Ok(out)
    }

    fn lex_number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some(b'.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        } else if self.peek() == Some(b'/') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            // Compact fraction literal a/b.
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        rat::parse_rat(text)
            .map(Tok::Number)
            .ok_or_else(|| self.error(format!("malformed number '{}'", text)))
    }

    fn lex_word(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.bump();
        }
        let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
        for kw in ["inputs", "outputs", "falsify", "prove"] {
            if word == kw && self.peek() == Some(b':') {
                self.bump();
                let stat: &'static str = match kw {
                    "inputs" => "inputs:",
                    "outputs" => "outputs:",
                    "falsify" => "falsify:",
                    _ => "prove:",
                };
                return Ok(Tok::Keyword(stat));
            }
        }
        Ok(Tok::Ident(word))
    }

    fn lex_symbol(&mut self) -> Result<Tok, ParseError> {
        let c = self.bump();
        let two = |l: &mut Lexer, next: u8, a: &'static str, b: &'static str| {
            if l.peek() == Some(next) {
                l.bump();
                a
            } else {
                b
            }
        };
        let sym = match c {
            b';' => ";",
            b',' => ",",
            b'[' => "[",
            b']' => "]",
            b'(' => "(",
            b')' => ")",
            b'+' => "+",
            b'*' => "*",
            b'^' => "^",
            b'&' => "&",
            b'|' => "|",
            b'=' => "=",
            b'!' => two(self, b'=', "!=", "!"),
            b'<' => {
                if self.peek() == Some(b'-') && self.peek2() == Some(b'>') {
                    self.bump();
                    self.bump();
                    "<->"
                } else {
                    two(self, b'=', "<=", "<")
                }
            }
            b'>' => two(self, b'=', ">=", ">"),
            b'-' => two(self, b'>', "->", "-"),
            other => {
                return Err(ParseError {
                    line: self.line,
                    col: self.col.saturating_sub(1),
                    msg: format!("unexpected character '{}'", other as char),
                })
            }
        };
        Ok(Tok::Sym(sym))
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    vars: BTreeSet<String>,
    last: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or(self.last)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, msg: msg.into() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t.map(|s| s.tok)
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == sym => {
                self.pos += 1;
                Ok(())
            }
            other => Err(self.error(format!("expected '{}', found {}", sym, describe(other)))),
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn decl_list(&mut self) -> Result<(Vec<String>, Vec<(String, Rat, Rat)>), ParseError> {
        let mut names = Vec::new();
        let mut ranges = Vec::new();
        loop {
            let name = match self.next() {
                Some(Tok::Ident(n)) => n,
                other => return Err(self.error(format!("expected identifier, found {}", describe(other.as_ref())))),
            };
            if self.vars.contains(&name) {
                return Err(self.error(format!("duplicate declaration of '{}'", name)));
            }
            self.expect_sym("[")?;
            let lo = self.signed_number()?;
            self.expect_sym(",")?;
            let hi = self.signed_number()?;
            self.expect_sym("]")?;
            if lo > hi {
                return Err(self.error(format!("empty range for '{}'", name)));
            }
            self.vars.insert(name.clone());
            ranges.push((name.clone(), lo, hi));
            names.push(name);
            if !self.eat_sym(",") {
                break;
            }
        }
        Ok((names, ranges))
    }

    fn signed_number(&mut self) -> Result<Rat, ParseError> {
        let negate = self.eat_sym("-");
        match self.next() {
            Some(Tok::Number(n)) => Ok(if negate { -n } else { n }),
            other => Err(self.error(format!("expected number, found {}", describe(other.as_ref())))),
        }
    }

    // expr := iff
    fn expr(&mut self, outputs: &[String]) -> Result<Formula, ParseError> {
        self.iff(outputs)
    }

    fn iff(&mut self, outputs: &[String]) -> Result<Formula, ParseError> {
        let mut lhs = self.implication(outputs)?;
        while self.eat_sym("<->") {
            let rhs = self.implication(outputs)?;
            lhs = Formula::Iff(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn implication(&mut self, outputs: &[String]) -> Result<Formula, ParseError> {
        let lhs = self.disjunction(outputs)?;
        if self.eat_sym("->") {
            // Right-associative.
            let rhs = self.implication(outputs)?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self, outputs: &[String]) -> Result<Formula, ParseError> {
        let mut parts = vec![self.conjunction(outputs)?];
        while self.eat_sym("|") {
            parts.push(self.conjunction(outputs)?);
        }
        Ok(Formula::or(parts))
    }

    fn conjunction(&mut self, outputs: &[String]) -> Result<Formula, ParseError> {
        let mut parts = vec![self.negation(outputs)?];
        while self.eat_sym("&") {
            parts.push(self.negation(outputs)?);
        }
        Ok(Formula::and(parts))
    }

    fn negation(&mut self, outputs: &[String]) -> Result<Formula, ParseError> {
        if self.eat_sym("!") {
            Ok(Formula::not(self.negation(outputs)?))
        } else if self.eat_sym("(") {
            let inner = self.expr(outputs)?;
            self.expect_sym(")")?;
            Ok(inner)
        } else {
            self.comparison(outputs)
        }
    }

    fn comparison(&mut self, outputs: &[String]) -> Result<Formula, ParseError> {
        if matches!(self.peek(), Some(Tok::Ident(w)) if w == "argmax_out") {
            self.pos += 1;
            self.expect_sym("=")?;
            let idx = match self.next() {
                Some(Tok::Number(n)) if n.is_integer() && n >= rat::zero() => {
                    use num_traits::ToPrimitive;
                    n.to_integer().to_usize().ok_or_else(|| self.error("argmax index too large"))?
                }
                other => {
                    return Err(self.error(format!(
                        "expected output index after 'argmax_out =', found {}",
                        describe(other.as_ref())
                    )))
                }
            };
            if idx >= outputs.len() {
                return Err(self.error(format!(
                    "argmax_out index {} out of range for {} outputs",
                    idx,
                    outputs.len()
                )));
            }
            return Ok(Formula::Atom(Atom::ArgmaxIs(idx)));
        }
        let lhs = self.poly()?;
        let rel = match self.peek() {
            Some(Tok::Sym("<")) => Relation::Lt,
            Some(Tok::Sym("<=")) => Relation::Le,
            Some(Tok::Sym("=")) => Relation::Eq,
            Some(Tok::Sym("!=")) => Relation::Ne,
            Some(Tok::Sym(">=")) => Relation::Ge,
            Some(Tok::Sym(">")) => Relation::Gt,
            other => return Err(self.error(format!("expected comparison, found {}", describe(other)))),
        };
        self.pos += 1;
        let rhs = self.poly()?;
        Ok(Formula::Atom(Atom::cmp(lhs, rel, rhs)))
    }

    // poly := mono (('+'|'-') mono)*
    fn poly(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.mono()?;
        loop {
            if self.eat_sym("+") {
                acc = acc.add(&self.mono()?);
            } else if self.eat_sym("-") {
                acc = acc.sub(&self.mono()?);
            } else {
                return Ok(acc);
            }
        }
    }

    // mono := factor ('*' factor)*
    fn mono(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.factor()?;
        while self.eat_sym("*") {
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    // factor := base ('^' nat)?
    fn factor(&mut self) -> Result<Term, ParseError> {
        if self.eat_sym("-") {
            return Ok(self.factor()?.neg());
        }
        let base = match self.next() {
            Some(Tok::Number(n)) => Term::constant(n),
            Some(Tok::Ident(name)) => {
                if !self.vars.contains(&name) {
                    self.pos -= 1;
                    return Err(self.error(format!("undeclared variable '{}'", name)));
                }
                Term::var(&name)
            }
            Some(Tok::Sym("(")) => {
                let inner = self.poly()?;
                self.expect_sym(")")?;
                inner
            }
            other => {
                return Err(self.error(format!(
                    "expected variable, number or '(', found {}",
                    describe(other.as_ref())
                )))
            }
        };
        if self.eat_sym("^") {
            let exp = match self.next() {
                Some(Tok::Number(n)) if n.is_integer() && n >= rat::zero() => {
                    use num_traits::ToPrimitive;
                    n.to_integer()
                        .to_u32()
                        .ok_or_else(|| self.error("exponent too large"))?
                }
                other => {
                    return Err(self.error(format!(
                        "expected non-negative integer exponent, found {}",
                        describe(other.as_ref())
                    )))
                }
            };
            Ok(base.pow(exp))
        } else {
            Ok(base)
        }
    }
}

fn describe(tok: Option<&Tok>) -> String {
    match tok {
        None => "end of input".to_string(),
        Some(Tok::Ident(w)) => format!("'{}'", w),
        Some(Tok::Number(n)) => format!("number '{}'", rat::display(n)),
        Some(Tok::Keyword(k)) => format!("'{}'", k),
        Some(Tok::Sym(s)) => format!("'{}'", s),
    }
}

/// Parse a complete query file.
pub fn parse(text: &str) -> Result<QuerySpec, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let last = toks
        .last()
        .map(|s| (s.line, s.col))
        .unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, vars: BTreeSet::new(), last };

    match p.next() {
        Some(Tok::Keyword("inputs:")) => {}
        other => return Err(p.error(format!("expected 'inputs:', found {}", describe(other.as_ref())))),
    }
    let (inputs, in_ranges) = p.decl_list()?;
    p.expect_sym(";")?;
    match p.next() {
        Some(Tok::Keyword("outputs:")) => {}
        other => return Err(p.error(format!("expected 'outputs:', found {}", describe(other.as_ref())))),
    }
    let (outputs, out_ranges) = p.decl_list()?;
    p.expect_sym(";")?;
    let mode = match p.next() {
        Some(Tok::Keyword("falsify:")) => Mode::Falsify,
        Some(Tok::Keyword("prove:")) => Mode::Prove,
        other => {
            return Err(p.error(format!(
                "expected 'falsify:' or 'prove:', found {}",
                describe(other.as_ref())
            )))
        }
    };
    let formula = p.expr(&outputs)?;
    if let Some(t) = p.peek() {
        return Err(p.error(format!("trailing input starting at {}", describe(Some(t)))));
    }

    let mut ranges = BTreeMap::new();
    for (name, lo, hi) in in_ranges.into_iter().chain(out_ranges) {
        ranges.insert(name, (lo, hi));
    }
    let spec = QuerySpec {
        formula,
        inputs,
        outputs,
        ranges: Ranges(ranges),
        mode,
    };
    spec.validate().map_err(|msg| ParseError { line: last.0, col: last.1, msg })?;
    Ok(spec)
}
