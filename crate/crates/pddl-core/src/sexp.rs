//! Minimal s-expression reader with line/column tracking.
//!
//! The PDDL dialect used here is a plain paren/atom language: atoms are
//! runs of non-whitespace, non-paren characters; `;` starts a comment that
//! runs to end of line. Identifiers are case-insensitive and normalized to
//! lower case by the readers built on top of this module.

use crate::error::{PddlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            Sexp::Atom(..) => None,
        }
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str> {
        self.as_atom().ok_or_else(|| syntax(self.pos(), what))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexp]> {
        self.as_list().ok_or_else(|| syntax(self.pos(), what))
    }
}

pub fn syntax(pos: Pos, expected: impl Into<String>) -> PddlError {
    PddlError::SyntaxError {
        line: pos.line,
        col: pos.col,
        expected: expected.into(),
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    i: usize,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen(Pos),
    RParen(Pos),
    Atom(String, Pos),
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            i: 0,
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.bytes.get(self.i)?;
        self.i += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.i).copied()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b';') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(b) = self.peek() else {
            return Ok(None);
        };
        match b {
            b'(' => {
                self.bump();
                Ok(Some(Token::LParen(pos)))
            }
            b')' => {
                self.bump();
                Ok(Some(Token::RParen(pos)))
            }
            _ => {
                let start = self.i;
                while let Some(b) = self.peek() {
                    if b.is_ascii_whitespace() || b == b'(' || b == b')' || b == b';' {
                        break;
                    }
                    self.bump();
                }
                let text = &self.src[start..self.i];
                Ok(Some(Token::Atom(text.to_string(), pos)))
            }
        }
    }
}

/// Parses one complete s-expression; trailing input other than whitespace
/// and comments is an error.
pub fn parse_one(src: &str) -> Result<Sexp> {
    let mut lexer = Lexer::new(src);
    let first = lexer
        .next_token()?
        .ok_or_else(|| syntax(lexer.pos(), "an s-expression"))?;
    let sexp = parse_from(&mut lexer, first)?;
    if let Some(tok) = lexer.next_token()? {
        let pos = match tok {
            Token::LParen(p) | Token::RParen(p) | Token::Atom(_, p) => p,
        };
        return Err(syntax(pos, "end of input"));
    }
    Ok(sexp)
}

fn parse_from(lexer: &mut Lexer<'_>, tok: Token) -> Result<Sexp> {
    match tok {
        Token::Atom(s, pos) => Ok(Sexp::Atom(s, pos)),
        Token::RParen(pos) => Err(syntax(pos, "an atom or `(`")),
        Token::LParen(open) => {
            let mut items = Vec::new();
            loop {
                let tok = lexer
                    .next_token()?
                    .ok_or_else(|| syntax(lexer.pos(), "`)` to close the list"))?;
                if let Token::RParen(_) = tok {
                    return Ok(Sexp::List(items, open));
                }
                items.push(parse_from(lexer, tok)?);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_and_lists() {
        let s = parse_one("(a (b c) d)").unwrap();
        let items = s.as_list().unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].as_atom(), Some("a"));
        assert_eq!(items[1].as_list().unwrap().len(), 2);
    }

    #[test]
    fn comments_are_skipped() {
        let s = parse_one("; header\n(a ; inline\n b)").unwrap();
        assert_eq!(s.as_list().unwrap().len(), 2);
    }

    #[test]
    fn trailing_input_is_an_error() {
        let err = parse_one("(a) (b)").unwrap_err();
        match err {
            PddlError::SyntaxError { line, col, .. } => {
                assert_eq!((line, col), (1, 5));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unbalanced_paren_reports_position() {
        let err = parse_one("(a (b)").unwrap_err();
        assert!(matches!(err, PddlError::SyntaxError { .. }));
    }
}
