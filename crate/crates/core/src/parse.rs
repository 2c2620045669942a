//! Recursive-descent parser for terms and formulas.
//!
//! ```text
//! term    := VAR | SYM | SYM "(" term ("," term)* ")"
//! atom    := term "=" term | term "!=" term
//! formula := disj
//! disj    := conj ("|" conj)*
//! conj    := unary ("&" unary)*
//! unary   := "!" unary | "(" formula ")" | "true" | "false" | atom
//! ```
//!
//! `VAR` is `x` followed by decimal digits. A `SYM` is any run of characters
//! other than whitespace and `(),=!&|`; a bare `SYM` names a constant.
//! Chains of `&` (or `|`), including parenthesised ones, parse as a single
//! flat conjunction (disjunction).

use thiserror::Error;

use crate::algebra::is_variable_name;
use crate::syntax::{QfFormula, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Word(&'a str),
    LParen,
    RParen,
    Comma,
    Eq,
    Neq,
    Not,
    And,
    Or,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(usize, Tok<'a>), ParseError> {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
        let start = self.pos;
        let mut chars = trimmed.chars();
        let Some(c) = chars.next() else {
            return Ok((start, Tok::End));
        };
        let single = |tok| (1, tok);
        let (len, tok) = match c {
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            ',' => single(Tok::Comma),
            '=' => single(Tok::Eq),
            '&' => single(Tok::And),
            '|' => single(Tok::Or),
            '!' if trimmed[1..].starts_with('=') => (2, Tok::Neq),
            '!' => single(Tok::Not),
            _ => {
                let end = trimmed
                    .find(|c: char| {
                        c.is_whitespace() || matches!(c, '(' | ')' | ',' | '=' | '!' | '&' | '|')
                    })
                    .unwrap_or(trimmed.len());
                (end, Tok::Word(&trimmed[..end]))
            }
        };
        self.pos += len;
        Ok((start, tok))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(usize, Tok<'a>)>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            lexer: Lexer { src, pos: 0 },
            peeked: None,
        }
    }

    fn peek(&mut self) -> Result<&(usize, Tok<'a>), ParseError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next()?);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    fn bump(&mut self) -> Result<(usize, Tok<'a>), ParseError> {
        self.peek()?;
        Ok(self.peeked.take().unwrap())
    }

    // Whether the token after the peeked one is "(" (used to tell
    // `true(...)` applications from the keyword).
    fn followed_by_paren(&mut self) -> bool {
        self.lexer.src[self.lexer.pos..]
            .trim_start()
            .starts_with('(')
    }

    fn error<T>(&self, position: usize, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok<'static>, what: &str) -> Result<(), ParseError> {
        let (pos, tok) = self.bump()?;
        if tok == want {
            Ok(())
        } else {
            self.error(pos, format!("expected {what}, found {}", describe(&tok)))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let (pos, tok) = self.bump()?;
        let Tok::Word(word) = tok else {
            return self.error(pos, format!("expected a term, found {}", describe(&tok)));
        };
        if is_variable_name(word) {
            return match word[1..].parse::<usize>() {
                Ok(i) => Ok(Term::Var(i)),
                Err(_) => self.error(pos, format!("variable index `{word}` is too large")),
            };
        }
        if !matches!(self.peek()?.1, Tok::LParen) {
            return Ok(Term::App(word.to_string(), Vec::new()));
        }
        self.bump()?;
        let mut args = vec![self.term()?];
        loop {
            let (pos, tok) = self.bump()?;
            match tok {
                Tok::Comma => args.push(self.term()?),
                Tok::RParen => break,
                other => {
                    return self.error(
                        pos,
                        format!("expected `,` or `)`, found {}", describe(&other)),
                    )
                }
            }
        }
        Ok(Term::App(word.to_string(), args))
    }

    fn formula(&mut self) -> Result<QfFormula, ParseError> {
        let mut parts = vec![self.conj()?];
        while matches!(self.peek()?.1, Tok::Or) {
            self.bump()?;
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            QfFormula::or(parts)
        })
    }

    fn conj(&mut self) -> Result<QfFormula, ParseError> {
        let mut parts = vec![self.unary()?];
        while matches!(self.peek()?.1, Tok::And) {
            self.bump()?;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            QfFormula::and(parts)
        })
    }

    fn unary(&mut self) -> Result<QfFormula, ParseError> {
        let (pos, tok) = self.peek()?.clone();
        match tok {
            Tok::Not => {
                self.bump()?;
                Ok(QfFormula::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Word("true") if !self.followed_by_paren() => {
                self.bump()?;
                Ok(QfFormula::True)
            }
            Tok::Word("false") if !self.followed_by_paren() => {
                self.bump()?;
                Ok(QfFormula::False)
            }
            Tok::Word(_) => {
                let lhs = self.term()?;
                let (pos, op) = self.bump()?;
                let rhs = match op {
                    Tok::Eq | Tok::Neq => self.term()?,
                    other => {
                        return self.error(
                            pos,
                            format!("expected `=` or `!=`, found {}", describe(&other)),
                        )
                    }
                };
                Ok(if op == Tok::Eq {
                    QfFormula::eq(lhs, rhs)
                } else {
                    QfFormula::neq(lhs, rhs)
                })
            }
            other => self.error(
                pos,
                format!("expected a formula, found {}", describe(&other)),
            ),
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        let (pos, tok) = self.bump()?;
        match tok {
            Tok::End => Ok(()),
            other => self.error(
                pos,
                format!("unexpected {} after the end of input", describe(&other)),
            ),
        }
    }
}

fn describe(tok: &Tok<'_>) -> String {
    match tok {
        Tok::Word(w) => format!("`{w}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Neq => "`!=`".into(),
        Tok::Not => "`!`".into(),
        Tok::And => "`&`".into(),
        Tok::Or => "`|`".into(),
        Tok::End => "end of input".into(),
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src);
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_formula(src: &str) -> Result<QfFormula, ParseError> {
    let mut p = Parser::new(src);
    let phi = p.formula()?;
    p.finish()?;
    Ok(phi)
}

impl std::str::FromStr for Term {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_term(s)
    }
}

impl std::str::FromStr for QfFormula {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
