//! Recursive-descent parser for the term language.
//!
//! ```text
//! equation := term "=" term
//! term     := factor { ["*" | "."] factor }
//! factor   := divisee [ (":" | "/") divisee ]
//! divisee  := letter | "(" term ")"
//! ```
//!
//! Whitespace is insignificant and `#` starts a comment running to the end of
//! the line. Divisions do not chain: `a:b:c` is rejected.

use thiserror::Error;

use super::{Equation, OpSymbol, Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at offset {pos}: {message}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub message: String,
}

impl ParseError {
    fn new(pos: usize, message: impl Into<String>) -> ParseError {
        ParseError { pos, message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Tok {
    Letter(char),
    Open,
    Close,
    Star,
    Colon,
    Slash,
    Equals,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((pos, c)) = chars.next() {
        let tok = match c {
            c if c.is_whitespace() => continue,
            '#' => {
                while let Some(&(_, c)) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            'a'..='z' => Tok::Letter(c),
            '(' => Tok::Open,
            ')' => Tok::Close,
            '*' | '.' => Tok::Star,
            ':' => Tok::Colon,
            '/' => Tok::Slash,
            '=' => Tok::Equals,
            'A'..='Z' => {
                return Err(ParseError::new(
                    pos,
                    format!("uppercase {c:?}: variables are single lowercase letters"),
                ))
            }
            _ => return Err(ParseError::new(pos, format!("unknown operator character {c:?}"))),
        };
        toks.push((pos, tok));
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: tokenize(text)?, at: 0, end: text.len() })
    }

    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.at).map(|&(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |&(p, _)| p)
    }

    fn bump(&mut self) {
        self.at += 1;
    }

    fn starts_factor(tok: Option<Tok>) -> bool {
        matches!(tok, Some(Tok::Letter(_)) | Some(Tok::Open))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.factor()?;
                    acc = Term::prod(acc, rhs);
                }
                t if Self::starts_factor(t) => {
                    let rhs = self.factor()?;
                    acc = Term::prod(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Term, ParseError> {
        let left = self.divisee()?;
        let op = match self.peek() {
            Some(Tok::Colon) => OpSymbol::LDiv,
            Some(Tok::Slash) => OpSymbol::RDiv,
            _ => return Ok(left),
        };
        self.bump();
        let right = self.divisee()?;
        if matches!(self.peek(), Some(Tok::Colon) | Some(Tok::Slash)) {
            return Err(ParseError::new(
                self.pos(),
                "chained division needs explicit parentheses",
            ));
        }
        Ok(Term::apply(op, left, right))
    }

    fn divisee(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Letter(c)) => {
                self.bump();
                Ok(Term::Var(Var(c)))
            }
            Some(Tok::Open) => {
                let open = self.pos();
                self.bump();
                let inner = self.term()?;
                if self.peek() != Some(Tok::Close) {
                    return Err(ParseError::new(
                        self.pos(),
                        format!("expected ')' to close '(' at offset {open}"),
                    ));
                }
                self.bump();
                Ok(inner)
            }
            Some(Tok::Close) => Err(ParseError::new(self.pos(), "unexpected ')'")),
            Some(Tok::Equals) => Err(ParseError::new(self.pos(), "unexpected '='")),
            Some(_) => Err(ParseError::new(self.pos(), "expected a variable or '('")),
            None => Err(ParseError::new(self.pos(), "unexpected end of input")),
        }
    }

    fn expect_end(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(Tok::Equals) => Err(ParseError::new(self.pos(), "unexpected '='")),
            Some(_) => Err(ParseError::new(self.pos(), "unexpected trailing input")),
        }
    }
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term()?;
    p.expect_end()?;
    Ok(t)
}

pub fn parse_equation(text: &str) -> Result<Equation, ParseError> {
    let mut p = Parser::new(text)?;
    let equals: Vec<usize> = p
        .toks
        .iter()
        .filter(|(_, t)| *t == Tok::Equals)
        .map(|&(pos, _)| pos)
        .collect();
    match equals.len() {
        0 => return Err(ParseError::new(text.len(), "equation has no '='")),
        1 => {}
        _ => return Err(ParseError::new(equals[1], "equation has more than one '='")),
    }
    let lhs = p.term()?;
    if p.peek() != Some(Tok::Equals) {
        return Err(ParseError::new(p.pos(), "expected '='"));
    }
    p.bump();
    let rhs = p.term()?;
    p.expect_end()?;
    Ok(Equation::new(lhs, rhs))
}
