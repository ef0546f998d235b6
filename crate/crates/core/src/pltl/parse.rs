//! Recursive-descent parser for the formula text syntax.
//!
//! ```text
//! implies := or ( "->" implies )?
//! or      := and ( "|" and )*
//! and     := since ( "&" since )*
//! since   := unary ( "S" unary )*
//! unary   := ( "!" | "H" | "O" | "Y" ) unary | primary
//! primary := atom | "true" | "false" | "(" implies ")"
//! ```
//!
//! Atoms are lowercase identifiers. Patterns additionally accept `$name` and
//! `?name` placeholders, kept as atoms with the sigil attached.

use alloc::string::{String, ToString};
use core::fmt;

use super::Formula;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnbalancedParen,
    UnknownOperator(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at byte {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token `{t}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UnbalancedParen => f.write_str("unbalanced parentheses"),
            ParseErrorKind::UnknownOperator(op) => write!(f, "unknown operator `{op}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    Hist,
    Once,
    Since,
    Yest,
    True,
    False,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tok::Ident(s) => s,
            Tok::Not => "!",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Arrow => "->",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Hist => "H",
            Tok::Once => "O",
            Tok::Since => "S",
            Tok::Yest => "Y",
            Tok::True => "true",
            Tok::False => "false",
        })
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    patterns: bool,
}

impl<'a> Lexer<'a> {
    fn err(&self, kind: ParseErrorKind, position: usize) -> ParseError {
        ParseError { kind, position }
    }

    fn next_token(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(self.pos) else {
            return Ok(None);
        };
        let single = match b {
            b'!' => Some(Tok::Not),
            b'&' => Some(Tok::And),
            b'|' => Some(Tok::Or),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok(Some((tok, start)));
        }
        if b == b'-' {
            if bytes.get(self.pos + 1) == Some(&b'>') {
                self.pos += 2;
                return Ok(Some((Tok::Arrow, start)));
            }
            return Err(self.err(ParseErrorKind::UnexpectedChar('-'), start));
        }
        let sigil = self.patterns && (b == b'$' || b == b'?');
        if b.is_ascii_alphabetic() || b == b'_' || sigil {
            self.pos += 1;
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            let word = &self.src[start..self.pos];
            let tok = match word {
                "H" => Tok::Hist,
                "O" => Tok::Once,
                "S" => Tok::Since,
                "Y" => Tok::Yest,
                "true" => Tok::True,
                "false" => Tok::False,
                _ if sigil && word.len() == 1 => return Err(self.err(ParseErrorKind::UnexpectedChar(b as char), start)),
                _ if word.starts_with(|c: char| c.is_ascii_uppercase()) => {
                    return Err(self.err(ParseErrorKind::UnknownOperator(word.to_string()), start))
                }
                _ if word.chars().skip(usize::from(sigil)).any(|c| c.is_ascii_uppercase()) => {
                    return Err(self.err(ParseErrorKind::UnexpectedToken(word.to_string()), start))
                }
                _ => Tok::Ident(word.to_string()),
            };
            return Ok(Some((tok, start)));
        }
        let c = self.src[start..].chars().next().unwrap_or('\0');
        Err(self.err(ParseErrorKind::UnexpectedChar(c), start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Tok, usize)>,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<Option<&Tok>, ParseError> {
        if self.peeked.is_none() {
            self.peeked = self.lexer.next_token()?;
        }
        Ok(self.peeked.as_ref().map(|(t, _)| t))
    }

    fn bump(&mut self) -> Result<Option<(Tok, usize)>, ParseError> {
        self.peek()?;
        Ok(self.peeked.take())
    }

    fn end_pos(&self) -> usize {
        self.lexer.src.len()
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peek()? == Some(&Tok::Arrow) {
            self.bump()?;
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.peek()? == Some(&Tok::Or) {
            self.bump()?;
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.since()?;
        while self.peek()? == Some(&Tok::And) {
            self.bump()?;
            lhs = Formula::and(lhs, self.since()?);
        }
        Ok(lhs)
    }

    fn since(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek()? == Some(&Tok::Since) {
            self.bump()?;
            lhs = Formula::since(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let wrap: fn(Formula) -> Formula = match self.peek()? {
            Some(Tok::Not) => Formula::not,
            Some(Tok::Hist) => Formula::historically,
            Some(Tok::Once) => Formula::once,
            Some(Tok::Yest) => Formula::yesterday,
            _ => return self.primary(),
        };
        self.bump()?;
        Ok(wrap(self.unary()?))
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let end = self.end_pos();
        let Some((tok, pos)) = self.bump()? else {
            let kind = if self.depth > 0 { ParseErrorKind::UnbalancedParen } else { ParseErrorKind::UnexpectedEnd };
            return Err(ParseError { kind, position: end });
        };
        match tok {
            Tok::Ident(name) => Ok(Formula::Atom(name)),
            Tok::True => Ok(Formula::True),
            Tok::False => Ok(Formula::False),
            Tok::LParen => {
                self.depth += 1;
                let inner = self.implies()?;
                match self.bump()? {
                    Some((Tok::RParen, _)) => {
                        self.depth -= 1;
                        Ok(inner)
                    }
                    Some((other, p)) => {
                        Err(ParseError { kind: ParseErrorKind::UnexpectedToken(other.to_string()), position: p })
                    }
                    None => Err(ParseError { kind: ParseErrorKind::UnbalancedParen, position: end }),
                }
            }
            Tok::RParen => Err(ParseError { kind: ParseErrorKind::UnbalancedParen, position: pos }),
            other => Err(ParseError { kind: ParseErrorKind::UnexpectedToken(other.to_string()), position: pos }),
        }
    }
}

fn parse(text: &str, patterns: bool) -> Result<Formula, ParseError> {
    let mut p = Parser { lexer: Lexer { src: text, pos: 0, patterns }, peeked: None, depth: 0 };
    let f = p.implies()?;
    match p.bump()? {
        None => Ok(f),
        Some((Tok::RParen, pos)) => Err(ParseError { kind: ParseErrorKind::UnbalancedParen, position: pos }),
        Some((tok, pos)) => Err(ParseError { kind: ParseErrorKind::UnexpectedToken(tok.to_string()), position: pos }),
    }
}

/// Parses formula text such as `H !red & O yellow`.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    parse(text, false)
}

/// Parses a template: like [`parse_formula`], but also accepts `$x`
/// (atom) and `?x` (literal) placeholders.
pub fn parse_pattern(text: &str) -> Result<Formula, ParseError> {
    parse(text, true)
}
