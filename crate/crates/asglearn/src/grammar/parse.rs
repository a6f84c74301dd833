//! Reader for the grammar file format.
//!
//! One `head -> body` statement per line; alternatives separated by `|`; an
//! empty body is ε; terminals are quoted and multi-character literals expand
//! to one body symbol per character; `#` starts a comment. A line starting
//! with `|` continues the previous statement, and annotated grammars may
//! attach a `{ ... }` block (possibly spanning lines) to each alternative.
//! The annotated-grammar reader reuses this parser, so stripping blocks from
//! an annotated file and parsing the rest yields the identical grammar.

use super::{Grammar, ParseError, Production, Symbol};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Quoted(String),
    Arrow,
    Pipe,
    Newline,
    /// Raw text between `{` and `}`, left for the annotation parser.
    Block(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

pub(crate) fn lex(text: &str, allow_blocks: bool) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut column = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, column);
        let bump = |chars: &mut std::iter::Peekable<std::str::Chars>,
                    line: &mut usize,
                    column: &mut usize| {
            let c = chars.next().expect("peeked");
            if c == '\n' {
                *line += 1;
                *column = 1;
            } else {
                *column += 1;
            }
            c
        };
        match c {
            '\n' => {
                bump(&mut chars, &mut line, &mut column);
                out.push(Spanned {
                    tok: Tok::Newline,
                    line: tline,
                    column: tcol,
                });
            }
            c if c.is_whitespace() => {
                bump(&mut chars, &mut line, &mut column);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars, &mut line, &mut column);
                }
            }
            '-' => {
                bump(&mut chars, &mut line, &mut column);
                if chars.peek() == Some(&'>') {
                    bump(&mut chars, &mut line, &mut column);
                    out.push(Spanned {
                        tok: Tok::Arrow,
                        line: tline,
                        column: tcol,
                    });
                } else {
                    return Err(syntax(tline, tcol, "expected `->`"));
                }
            }
            '|' => {
                bump(&mut chars, &mut line, &mut column);
                out.push(Spanned {
                    tok: Tok::Pipe,
                    line: tline,
                    column: tcol,
                });
            }
            '"' => {
                bump(&mut chars, &mut line, &mut column);
                let mut lit = String::new();
                loop {
                    match chars.peek() {
                        Some('"') => {
                            bump(&mut chars, &mut line, &mut column);
                            break;
                        }
                        Some('\n') | None => {
                            return Err(syntax(tline, tcol, "unterminated string literal"));
                        }
                        Some(_) => lit.push(bump(&mut chars, &mut line, &mut column)),
                    }
                }
                out.push(Spanned {
                    tok: Tok::Quoted(lit),
                    line: tline,
                    column: tcol,
                });
            }
            '{' => {
                if !allow_blocks {
                    return Err(syntax(
                        tline,
                        tcol,
                        "annotation blocks are not allowed in a plain grammar file",
                    ));
                }
                bump(&mut chars, &mut line, &mut column);
                let mut body = String::new();
                loop {
                    match chars.peek() {
                        Some('}') => {
                            bump(&mut chars, &mut line, &mut column);
                            break;
                        }
                        None => return Err(syntax(tline, tcol, "unterminated `{` block")),
                        Some(_) => body.push(bump(&mut chars, &mut line, &mut column)),
                    }
                }
                out.push(Spanned {
                    tok: Tok::Block(body),
                    line: tline,
                    column: tcol,
                });
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '\'' {
                        ident.push(bump(&mut chars, &mut line, &mut column));
                    } else {
                        break;
                    }
                }
                out.push(Spanned {
                    tok: Tok::Ident(ident),
                    line: tline,
                    column: tcol,
                });
            }
            other => {
                return Err(syntax(
                    tline,
                    tcol,
                    format!("unexpected character {other:?}"),
                ));
            }
        }
    }
    Ok(out)
}

/// One alternative as read from the file: raw symbols plus an optional
/// annotation block (`None` for plain grammars).
pub(crate) struct RawAlternative {
    pub symbols: Vec<RawSymbol>,
    pub block: Option<(String, usize)>,
}

pub(crate) enum RawSymbol {
    Name(String, usize),
    Literal(String),
}

pub(crate) struct RawFile {
    /// (head name, head line, alternatives) in statement order.
    pub statements: Vec<(String, usize, Vec<RawAlternative>)>,
}

pub(crate) fn parse_raw(text: &str, allow_blocks: bool) -> Result<RawFile, ParseError> {
    let toks = lex(text, allow_blocks)?;
    let mut statements: Vec<(String, usize, Vec<RawAlternative>)> = Vec::new();
    let mut i = 0usize;
    while i < toks.len() {
        match &toks[i].tok {
            Tok::Newline => {
                i += 1;
            }
            Tok::Pipe => {
                // Continuation line: append an alternative to the last statement.
                let Some(last) = statements.last_mut() else {
                    return Err(syntax(
                        toks[i].line,
                        toks[i].column,
                        "`|` before any production",
                    ));
                };
                i += 1;
                let alt = read_alternative(&toks, &mut i)?;
                last.2.push(alt);
            }
            Tok::Ident(head) => {
                let head = head.clone();
                let head_line = toks[i].line;
                i += 1;
                match toks.get(i).map(|s| &s.tok) {
                    Some(Tok::Arrow) => i += 1,
                    _ => {
                        return Err(syntax(
                            toks[i - 1].line,
                            toks[i - 1].column,
                            format!("expected `->` after `{head}`"),
                        ))
                    }
                }
                let mut alts = vec![read_alternative(&toks, &mut i)?];
                while matches!(toks.get(i).map(|s| &s.tok), Some(Tok::Pipe)) {
                    i += 1;
                    alts.push(read_alternative(&toks, &mut i)?);
                }
                statements.push((head, head_line, alts));
            }
            _ => {
                return Err(syntax(
                    toks[i].line,
                    toks[i].column,
                    "expected a production (`head -> body`)",
                ));
            }
        }
    }
    Ok(RawFile { statements })
}

/// Reads symbols and an optional block; consumes trailing newlines only when
/// they are followed by `|` or a block, so the next statement stays intact.
fn read_alternative(toks: &[Spanned], i: &mut usize) -> Result<RawAlternative, ParseError> {
    let mut symbols = Vec::new();
    let mut block = None;
    loop {
        match toks.get(*i).map(|s| &s.tok) {
            Some(Tok::Ident(name)) if block.is_none() => {
                symbols.push(RawSymbol::Name(name.clone(), toks[*i].line));
                *i += 1;
            }
            Some(Tok::Quoted(lit)) if block.is_none() => {
                symbols.push(RawSymbol::Literal(lit.clone()));
                *i += 1;
            }
            Some(Tok::Block(body)) if block.is_none() => {
                block = Some((body.clone(), toks[*i].line));
                *i += 1;
            }
            Some(Tok::Newline) => {
                // Peek past newlines: `|` or `{` continues this statement.
                let mut j = *i;
                while matches!(toks.get(j).map(|s| &s.tok), Some(Tok::Newline)) {
                    j += 1;
                }
                match toks.get(j).map(|s| &s.tok) {
                    Some(Tok::Pipe) => {
                        *i = j;
                        break;
                    }
                    Some(Tok::Block(_)) if block.is_none() => {
                        *i = j;
                    }
                    _ => break,
                }
            }
            _ => break,
        }
    }
    Ok(RawAlternative { symbols, block })
}

/// Per-production annotation block text with its source line, `None` when a
/// production carries no block.
pub(crate) type RawBlocks = Vec<Option<(String, usize)>>;

/// Resolves raw statements into a [`Grammar`]; the start symbol is the first
/// statement's head and production order follows the source.
pub(crate) fn resolve(raw: &RawFile) -> Result<(Grammar, RawBlocks), ParseError> {
    if raw.statements.is_empty() {
        return Err(ParseError::EmptyGrammar);
    }
    let mut names: Vec<String> = Vec::new();
    for (head, _, _) in &raw.statements {
        if !names.iter().any(|n| n == head) {
            names.push(head.clone());
        }
    }
    let lookup = |name: &str| names.iter().position(|n| n == name);
    let mut productions = Vec::new();
    let mut blocks = Vec::new();
    for (head, _, alts) in &raw.statements {
        let head_id = lookup(head).expect("head was indexed");
        for alt in alts {
            let mut body = Vec::new();
            for sym in &alt.symbols {
                match sym {
                    RawSymbol::Name(name, line) => match lookup(name) {
                        Some(id) => body.push(Symbol::Nonterminal(id)),
                        None => {
                            return Err(ParseError::UndefinedNonterminal {
                                name: name.clone(),
                                line: *line,
                            })
                        }
                    },
                    RawSymbol::Literal(lit) => {
                        for c in lit.chars() {
                            body.push(Symbol::Terminal(c));
                        }
                    }
                }
            }
            productions.push(Production {
                head: head_id,
                body,
            });
            blocks.push(alt.block.clone());
        }
    }
    let grammar = Grammar::from_parts(names, productions, 0)?;
    Ok((grammar, blocks))
}

pub(crate) fn parse_grammar(text: &str) -> Result<Grammar, ParseError> {
    let raw = parse_raw(text, false)?;
    let (grammar, _) = resolve(&raw)?;
    Ok(grammar)
}

/// Removes every `{ ... }` annotation block, leaving a plain grammar file.
/// Comments and quoted literals are respected, so braces inside them survive.
pub fn strip_annotations(text: &str) -> String {
    let mut out = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '#' => {
                out.push(c);
                for c in chars.by_ref() {
                    out.push(c);
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                out.push(c);
                for c in chars.by_ref() {
                    out.push(c);
                    if c == '"' {
                        break;
                    }
                }
            }
            '{' => {
                for c in chars.by_ref() {
                    if c == '}' {
                        break;
                    }
                }
            }
            _ => out.push(c),
        }
    }
    out
}
