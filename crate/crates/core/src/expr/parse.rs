use thiserror::Error;

use super::{BinOp, Expr, Func, NamedConst};
use crate::scalar::Scalar;

/// Parse failure; offsets are byte positions in the input text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { offset, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // exponent only when digits follow, so `2e` stays `2` then `e`
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lexeme = &text[start..i];
                let value: f64 = lexeme.parse().map_err(|_| syntax(start, format!("malformed number `{lexeme}`")))?;
                if !value.is_finite() {
                    return Err(syntax(start, format!("number `{lexeme}` out of range")));
                }
                toks.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        toks.push((tok, start));
        i += 1;
    }
    toks.push((Tok::End, text.len()));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.power()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom<T: Scalar>(&mut self) -> Result<Expr<T>, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Const(T::from_f64(v).unwrap_or_else(T::nan))),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X),
                "u" => Ok(Expr::U),
                "pi" => Ok(Expr::Named(NamedConst::Pi)),
                "e" => Ok(Expr::Named(NamedConst::E)),
                _ => {
                    let func = Func::from_name(&name).ok_or(ParseError::UnknownIdentifier { name, offset })?;
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
            },
            Tok::End => Err(syntax(offset, "unexpected end of input")),
            other => Err(syntax(offset, format!("unexpected token {other:?}"))),
        }
    }
}

pub(super) fn parse<T: Scalar>(text: &str) -> Result<Expr<T>, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let tree = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), "trailing input"));
    }
    Ok(tree)
}
