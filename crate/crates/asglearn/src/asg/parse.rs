//! Reader for annotation blocks and annotated grammar files.

use crate::grammar::parse::{parse_raw, resolve};
use crate::grammar::ParseError;

use super::{
    AffineTerm, AnnotatedGrammar, AnnotationRule, AtomTemplate, BodyLiteral, CompareOp, Scope,
};

pub(super) fn parse_asg(text: &str) -> Result<AnnotatedGrammar, ParseError> {
    let raw = parse_raw(text, true)?;
    let (grammar, blocks) = resolve(&raw)?;
    let mut annotations = Vec::with_capacity(blocks.len());
    let mut lines = Vec::with_capacity(blocks.len());
    for block in &blocks {
        match block {
            None => {
                annotations.push(Vec::new());
                lines.push(0);
            }
            Some((body, line)) => {
                annotations.push(parse_rules(body, *line)?);
                lines.push(*line);
            }
        }
    }
    AnnotatedGrammar::new_with_lines(grammar, annotations, lines)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    At,
    If, // ":-"
    Dot,
    Not,
    Plus,
    Minus,
    Cmp(CompareOp),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column: 0,
        message: message.into(),
    }
}

fn lex_rules(text: &str, line0: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut line = line0;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '%' | '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                out.push((Tok::LParen, line));
            }
            ')' => {
                chars.next();
                out.push((Tok::RParen, line));
            }
            ',' => {
                chars.next();
                out.push((Tok::Comma, line));
            }
            '@' => {
                chars.next();
                out.push((Tok::At, line));
            }
            '.' => {
                chars.next();
                out.push((Tok::Dot, line));
            }
            '+' => {
                chars.next();
                out.push((Tok::Plus, line));
            }
            '-' => {
                chars.next();
                out.push((Tok::Minus, line));
            }
            ':' => {
                chars.next();
                if chars.peek() == Some(&'-') {
                    chars.next();
                    out.push((Tok::If, line));
                } else {
                    return Err(syntax(line, "expected `:-`"));
                }
            }
            '<' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    out.push((Tok::Cmp(CompareOp::Le), line));
                } else {
                    out.push((Tok::Cmp(CompareOp::Lt), line));
                }
            }
            '>' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    out.push((Tok::Cmp(CompareOp::Ge), line));
                } else {
                    out.push((Tok::Cmp(CompareOp::Gt), line));
                }
            }
            c if c.is_ascii_digit() => {
                let mut n = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        n.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let value: i64 = n
                    .parse()
                    .map_err(|_| syntax(line, format!("integer `{n}` out of range")))?;
                out.push((Tok::Int(value), line));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if ident == "not" {
                    out.push((Tok::Not, line));
                } else {
                    out.push((Tok::Ident(ident), line));
                }
            }
            other => return Err(syntax(line, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Rules<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line0: usize,
}

impl<'a> Rules<'a> {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| t.1)
            .unwrap_or(self.line0)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.0);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let line = self.line();
        match self.next() {
            Some(t) if *t == want => Ok(()),
            _ => Err(syntax(line, format!("expected {what}"))),
        }
    }

    /// rule := [atom] [":-" literal {"," literal}] "."
    fn rule(&mut self) -> Result<AnnotationRule, ParseError> {
        let head = match self.peek() {
            Some(Tok::If) => None,
            _ => Some(self.atom()?),
        };
        let mut body = Vec::new();
        if matches!(self.peek(), Some(Tok::If)) {
            self.next();
            body.push(self.literal()?);
            while matches!(self.peek(), Some(Tok::Comma)) {
                self.next();
                body.push(self.literal()?);
            }
        }
        if head.is_none() && body.is_empty() {
            return Err(syntax(self.line(), "a constraint needs a body"));
        }
        self.expect(Tok::Dot, "`.` at end of rule")?;
        Ok(AnnotationRule { head, body })
    }

    /// literal := ["not"] atom ["@" int] | term cmp term
    fn literal(&mut self) -> Result<BodyLiteral, ParseError> {
        let negated = if matches!(self.peek(), Some(Tok::Not)) {
            self.next();
            true
        } else {
            false
        };
        // A comparison starts with a term; an atom starts with an identifier
        // followed by `(`, `@`, or nothing useful. Disambiguate by peeking.
        if !negated {
            if let Some(lit) = self.try_comparison()? {
                return Ok(lit);
            }
        }
        let atom = self.atom()?;
        let scope = if matches!(self.peek(), Some(Tok::At)) {
            self.next();
            let line = self.line();
            match self.next() {
                Some(Tok::Int(k)) if *k >= 0 => Scope::Child(*k as usize),
                _ => return Err(syntax(line, "expected a child position after `@`")),
            }
        } else {
            Scope::Local
        };
        Ok(BodyLiteral::Atom {
            negated,
            atom,
            scope,
        })
    }

    /// Parses `term cmp term` if the upcoming tokens form one.
    fn try_comparison(&mut self) -> Result<Option<BodyLiteral>, ParseError> {
        let save = self.pos;
        let left = match self.try_term() {
            Some(t) => t,
            None => {
                self.pos = save;
                return Ok(None);
            }
        };
        let op = match self.peek() {
            Some(Tok::Cmp(op)) => *op,
            _ => {
                self.pos = save;
                return Ok(None);
            }
        };
        self.next();
        let line = self.line();
        let right = self
            .try_term()
            .ok_or_else(|| syntax(line, "expected a term after comparison operator"))?;
        Ok(Some(BodyLiteral::Compare { left, op, right }))
    }

    /// term := int | "-" int | var ["+" int | "-" int]
    fn try_term(&mut self) -> Option<AffineTerm> {
        match self.peek()? {
            Tok::Int(n) => {
                let n = *n;
                self.next();
                Some(AffineTerm::constant(n))
            }
            Tok::Minus => {
                self.next();
                match self.peek() {
                    Some(Tok::Int(n)) => {
                        let n = *n;
                        self.next();
                        Some(AffineTerm::constant(-n))
                    }
                    _ => None,
                }
            }
            Tok::Ident(name) if is_variable(name) => {
                let name = name.clone();
                self.next();
                let mut offset = 0i64;
                match self.peek() {
                    Some(Tok::Plus) => {
                        self.next();
                        if let Some(Tok::Int(n)) = self.peek() {
                            offset = *n;
                            self.next();
                        } else {
                            return None;
                        }
                    }
                    Some(Tok::Minus) => {
                        self.next();
                        if let Some(Tok::Int(n)) = self.peek() {
                            offset = -*n;
                            self.next();
                        } else {
                            return None;
                        }
                    }
                    _ => {}
                }
                Some(AffineTerm::variable(name, offset))
            }
            _ => None,
        }
    }

    /// atom := pred ["(" term {"," term} ")"]
    fn atom(&mut self) -> Result<AtomTemplate, ParseError> {
        let line = self.line();
        let predicate = match self.next() {
            Some(Tok::Ident(name)) if !is_variable(name) => name.clone(),
            Some(Tok::Ident(name)) => {
                return Err(syntax(
                    line,
                    format!("`{name}` looks like a variable; predicates start lowercase"),
                ))
            }
            _ => return Err(syntax(line, "expected a predicate name")),
        };
        let mut args = Vec::new();
        if matches!(self.peek(), Some(Tok::LParen)) {
            self.next();
            loop {
                let line = self.line();
                let term = self
                    .try_term()
                    .ok_or_else(|| syntax(line, "expected a term"))?;
                args.push(term);
                match self.next() {
                    Some(Tok::Comma) => continue,
                    Some(Tok::RParen) => break,
                    _ => return Err(syntax(line, "expected `,` or `)`")),
                }
            }
        }
        Ok(AtomTemplate { predicate, args })
    }
}

fn is_variable(name: &str) -> bool {
    name.chars()
        .next()
        .is_some_and(|c| c.is_uppercase() || c == '_')
}

pub(super) fn parse_rules(block: &str, line0: usize) -> Result<Vec<AnnotationRule>, ParseError> {
    let toks = lex_rules(block, line0)?;
    let mut rules = Vec::new();
    let mut parser = Rules {
        toks: &toks,
        pos: 0,
        line0,
    };
    while parser.peek().is_some() {
        rules.push(parser.rule()?);
    }
    Ok(rules)
}
