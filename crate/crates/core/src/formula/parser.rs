//! Recursive-descent parser for `.parcc` text.
//!
//! ```text
//! spec    := (clause (NEWLINE | '&'))* clause?
//! clause  := literal ('|' literal)*
//! literal := '!'? KIND '_' DIR '(' IDENT ',' IDENT ')'
//! ```
//!
//! `#` starts a comment running to the end of the line. Blank lines are
//! ignored and whitespace between tokens is insignificant.

use std::fmt;

use super::{Atom, Clause, RelationKind, Spec};
use crate::geometry::Direction;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Bar,
    Bang,
    Amp,
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        let single = |tok: Tok| Token { tok, line: tl, column: tc };
        match c {
            '\n' => {
                chars.next();
                tokens.push(single(Tok::Newline));
                line += 1;
                column = 1;
                continue;
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                column += 1;
                continue;
            }
            '(' => tokens.push(single(Tok::LParen)),
            ')' => tokens.push(single(Tok::RParen)),
            ',' => tokens.push(single(Tok::Comma)),
            '|' => tokens.push(single(Tok::Bar)),
            '!' => tokens.push(single(Tok::Bang)),
            '&' => tokens.push(single(Tok::Amp)),
            c if is_ident_start(c) => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    ident.push(c);
                    chars.next();
                    column += 1;
                }
                tokens.push(Token { tok: Tok::Ident(ident), line: tl, column: tc });
                continue;
            }
            other => {
                return Err(ParseError { line, column, message: format!("unexpected character `{other}`") });
            }
        }
        chars.next();
        column += 1;
    }
    tokens.push(Token { tok: Tok::Eof, line, column });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(token: &Token, message: impl Into<String>) -> ParseError {
        ParseError { line: token.line, column: token.column, message: message.into() }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, ParseError> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            Err(Self::error_at(&t, format!("expected {what}, found {}", t.tok.describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        let t = self.bump();
        match &t.tok {
            Tok::Ident(s) => Ok((s.clone(), t.clone())),
            other => Err(Self::error_at(&t, format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek().tok, Tok::Newline | Tok::Amp) {
            self.bump();
        }
    }

    fn spec(&mut self) -> Result<Spec, ParseError> {
        let mut spec = Spec::default();
        self.skip_separators();
        while self.peek().tok != Tok::Eof {
            spec.insert(self.clause()?);
            let t = self.peek().clone();
            match &t.tok {
                Tok::Newline | Tok::Amp => self.skip_separators(),
                Tok::Eof => {}
                other => {
                    return Err(Self::error_at(
                        &t,
                        format!("expected `|`, `&` or end of line, found {}", other.describe()),
                    ))
                }
            }
        }
        Ok(spec)
    }

    fn clause(&mut self) -> Result<Clause, ParseError> {
        let mut atoms = vec![self.literal()?];
        while self.peek().tok == Tok::Bar {
            self.bump();
            atoms.push(self.literal()?);
        }
        Ok(Clause::new(atoms).expect("at least one literal was parsed"))
    }

    fn literal(&mut self) -> Result<Atom, ParseError> {
        let negated = if self.peek().tok == Tok::Bang {
            self.bump();
            true
        } else {
            false
        };
        let (relation, at) = self.ident("a relation such as `DR_N` or `EC_W`")?;
        let (kind, dir) = split_relation(&relation).map_err(|m| Self::error_at(&at, m))?;
        self.expect(Tok::LParen, "`(`")?;
        let (head, _) = self.ident("a head class name")?;
        self.expect(Tok::Comma, "`,`")?;
        let (related, _) = self.ident("a related class name")?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Atom { kind, dir, negated, head, related })
    }
}

fn split_relation(relation: &str) -> Result<(RelationKind, Direction), String> {
    let (kind, dir) = relation
        .split_once('_')
        .ok_or_else(|| format!("malformed relation `{relation}` (expected KIND_DIR such as `DR_N`)"))?;
    let kind: RelationKind = kind.parse()?;
    let dir: Direction = dir.parse()?;
    Ok((kind, dir))
}

pub fn parse_spec(text: &str) -> Result<Spec, ParseError> {
    let mut parser = Parser { tokens: lex(text)?, pos: 0 };
    parser.spec()
}

/// Parses exactly one clause (no `&` or line breaks between atoms).
pub fn parse_clause(text: &str) -> Result<Clause, ParseError> {
    let mut parser = Parser { tokens: lex(text)?, pos: 0 };
    while parser.peek().tok == Tok::Newline {
        parser.bump();
    }
    let clause = parser.clause()?;
    while parser.peek().tok == Tok::Newline {
        parser.bump();
    }
    let t = parser.peek().clone();
    if t.tok != Tok::Eof {
        return Err(Parser::error_at(&t, format!("expected end of clause, found {}", t.tok.describe())));
    }
    Ok(clause)
}
