//! The problem-file format: s-expression declarations followed by the two
//! formula partitions.
//!
//! ```text
//! (declare-fun f 1)
//! (declare-pred P 2)
//! (declare-const a)
//! (enable-idl)
//! (A (= a (f x)) (< a (+ x 3)))
//! (B (not (= a x)))
//! ```
//!
//! Formulas use `=`, `<`, `not`, `and`, `or`, `true`, `false`; IDL terms
//! use `succ`, `pred`, `(+ t n)`, `(- t n)`, `0`, and bare integers as
//! offsets from `0`. All symbols must be declared before use and the `<`,
//! `succ`, `pred`, offset and numeral forms require `(enable-idl)`.

use std::fmt;

use thiserror::Error;

use crate::term::{Atom, Formula, FormulaSet, Signature, SymbolKind, Term, TheoryId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

fn err<T>(pos: (usize, usize), message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line: pos.0, col: pos.1, message: message.into() })
}

const KEYWORDS: &[&str] = &[
    "A", "B", "and", "or", "not", "true", "false", "succ", "pred", "declare-fun",
    "declare-pred", "declare-const", "enable-idl",
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    Word(String),
    Int(i64),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::LParen => write!(f, "("),
            Token::RParen => write!(f, ")"),
            Token::Word(w) => write!(f, "{w}"),
            Token::Int(n) => write!(f, "{n}"),
        }
    }
}

struct Lexer {
    tokens: Vec<(Token, (usize, usize))>,
    pos: usize,
    end: (usize, usize),
}

fn lex(input: &str) -> Result<Lexer, ParseError> {
    let mut tokens = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        let here = (line, col);
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            _ if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                tokens.push((Token::LParen, here));
            }
            ')' => {
                chars.next();
                col += 1;
                tokens.push((Token::RParen, here));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    col += 1;
                }
                let is_int = word.parse::<i64>().is_ok();
                if is_int {
                    tokens.push((Token::Int(word.parse().unwrap()), here));
                } else if word.chars().all(|c| {
                    c.is_ascii_alphanumeric() || "_-'.!?+<=*$".contains(c)
                }) {
                    tokens.push((Token::Word(word), here));
                } else {
                    return err(here, format!("unexpected characters in `{word}`"));
                }
            }
        }
    }
    Ok(Lexer { tokens, pos: 0, end: (line, col) })
}

impl Lexer {
    fn peek(&self) -> Option<&(Token, (usize, usize))> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<(Token, (usize, usize))> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn expect_lparen(&mut self) -> Result<(usize, usize), ParseError> {
        match self.next() {
            Some((Token::LParen, p)) => Ok(p),
            Some((t, p)) => err(p, format!("expected `(`, found `{t}`")),
            None => err(self.end, "expected `(`, found end of input"),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.next() {
            Some((Token::RParen, _)) => Ok(()),
            Some((t, p)) => err(p, format!("expected `)`, found `{t}`")),
            None => err(self.end, "expected `)`, found end of input"),
        }
    }

    fn expect_word(&mut self) -> Result<(String, (usize, usize)), ParseError> {
        match self.next() {
            Some((Token::Word(w), p)) => Ok((w, p)),
            Some((t, p)) => err(p, format!("expected a name, found `{t}`")),
            None => err(self.end, "expected a name, found end of input"),
        }
    }

    fn expect_int(&mut self) -> Result<(i64, (usize, usize)), ParseError> {
        match self.next() {
            Some((Token::Int(n), p)) => Ok((n, p)),
            Some((t, p)) => err(p, format!("expected an integer, found `{t}`")),
            None => err(self.end, "expected an integer, found end of input"),
        }
    }
}

/// A parsed problem: declarations plus the two partitions.
#[derive(Debug, Clone, Default)]
pub struct ProblemFile {
    pub signature: Signature,
    pub a: FormulaSet,
    pub b: FormulaSet,
}

struct Parser<'s> {
    lexer: Lexer,
    sig: &'s Signature,
}

impl Parser<'_> {
    fn require_idl(&self, pos: (usize, usize), what: &str) -> Result<(), ParseError> {
        if self.sig.idl_enabled() {
            Ok(())
        } else {
            err(pos, format!("{what} requires (enable-idl)"))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let here = self.lexer.here();
        match self.lexer.next() {
            Some((Token::Int(n), pos)) => {
                self.require_idl(pos, "an integer literal")?;
                Ok(Term::int(n))
            }
            Some((Token::Word(w), pos)) => match self.sig.kind_of(&w) {
                Some(SymbolKind::Const) => Ok(Term::constant(w)),
                Some(SymbolKind::Func { arity: 0, .. }) => Ok(Term::app(w, vec![])),
                Some(SymbolKind::Func { .. }) => {
                    err(pos, format!("function `{w}` needs arguments; write `({w} ...)`"))
                }
                Some(SymbolKind::Pred { .. }) => {
                    err(pos, format!("`{w}` is a predicate, not a term"))
                }
                None => err(pos, format!("undeclared symbol `{w}`")),
            },
            Some((Token::LParen, _)) => {
                let (head, pos) = self.lexer.expect_word()?;
                let t = match head.as_str() {
                    "succ" | "pred" => {
                        self.require_idl(pos, "succ/pred")?;
                        let inner = self.term()?;
                        if head == "succ" {
                            Term::succ(inner)
                        } else {
                            Term::pred(inner)
                        }
                    }
                    "+" | "-" => {
                        self.require_idl(pos, "an offset term")?;
                        let inner = self.term()?;
                        let (n, _) = self.lexer.expect_int()?;
                        Term::offset(inner, if head == "+" { n } else { -n })
                    }
                    name => match self.sig.kind_of(name) {
                        Some(SymbolKind::Func { arity, .. }) => {
                            let mut args = Vec::new();
                            for _ in 0..arity {
                                args.push(self.term()?);
                            }
                            Term::app(name.to_string(), args)
                        }
                        Some(_) => {
                            return err(pos, format!("`{name}` is not a function symbol"))
                        }
                        None => return err(pos, format!("undeclared symbol `{name}`")),
                    },
                };
                self.lexer.expect_rparen()?;
                Ok(t)
            }
            Some((t, pos)) => err(pos, format!("expected a term, found `{t}`")),
            None => err(here, "expected a term, found end of input"),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let here = self.lexer.here();
        match self.lexer.next() {
            Some((Token::Word(w), pos)) => match w.as_str() {
                "true" => Ok(Formula::TRUE),
                "false" => Ok(Formula::FALSE),
                // A bare integer-like word can only be `0`, already lexed
                // as Int; anything else must be a 0-ary predicate.
                name => match self.sig.kind_of(name) {
                    Some(SymbolKind::Pred { arity: 0, .. }) => {
                        Ok(Formula::atom(Atom::Pred(name.to_string(), vec![])))
                    }
                    Some(_) => err(pos, format!("`{name}` is not a formula")),
                    None => err(pos, format!("undeclared symbol `{name}`")),
                },
            },
            Some((Token::LParen, _)) => {
                let (head, pos) = self.lexer.expect_word()?;
                let f = match head.as_str() {
                    "=" => {
                        let l = self.term()?;
                        let r = self.term()?;
                        Formula::atom(Atom::Eq(l, r))
                    }
                    "<" => {
                        self.require_idl(pos, "`<`")?;
                        let l = self.term()?;
                        let r = self.term()?;
                        Formula::atom(Atom::Lt(l, r))
                    }
                    "not" => Formula::not(self.formula()?),
                    "and" | "or" => {
                        let mut items = Vec::new();
                        while !matches!(self.lexer.peek(), Some((Token::RParen, _)) | None) {
                            items.push(self.formula()?);
                        }
                        if head == "and" {
                            Formula::and(items)
                        } else {
                            Formula::or(items)
                        }
                    }
                    name => match self.sig.kind_of(name) {
                        Some(SymbolKind::Pred { arity, .. }) => {
                            let mut args = Vec::new();
                            for _ in 0..arity {
                                args.push(self.term()?);
                            }
                            Formula::atom(Atom::Pred(name.to_string(), args))
                        }
                        Some(_) => {
                            return err(pos, format!("`{name}` is not a predicate symbol"))
                        }
                        None => return err(pos, format!("undeclared symbol `{name}`")),
                    },
                };
                self.lexer.expect_rparen()?;
                Ok(f)
            }
            Some((t, pos)) => err(pos, format!("expected a formula, found `{t}`")),
            None => err(here, "expected a formula, found end of input"),
        }
    }
}

fn declare(
    sig: &mut Signature,
    name: &str,
    kind: SymbolKind,
    pos: (usize, usize),
) -> Result<(), ParseError> {
    if KEYWORDS.contains(&name) || name.parse::<i64>().is_ok() {
        return err(pos, format!("`{name}` is a reserved word"));
    }
    sig.declare(name, kind).map_err(|e| ParseError {
        line: pos.0,
        col: pos.1,
        message: e.to_string(),
    })
}

/// Parses a whole problem file.
pub fn parse_problem(input: &str) -> Result<ProblemFile, ParseError> {
    let mut lexer = lex(input)?;
    let mut sig = Signature::new();
    let mut a = FormulaSet::new();
    let mut b = FormulaSet::new();

    while lexer.peek().is_some() {
        lexer.expect_lparen()?;
        let (head, pos) = lexer.expect_word()?;
        match head.as_str() {
            "declare-fun" | "declare-pred" => {
                let (name, npos) = lexer.expect_word()?;
                let (arity, apos) = lexer.expect_int()?;
                if arity < 0 {
                    return err(apos, "arity must be non-negative");
                }
                let kind = if head == "declare-fun" {
                    SymbolKind::Func { theory: TheoryId::Euf, arity: arity as usize }
                } else {
                    SymbolKind::Pred { theory: TheoryId::Euf, arity: arity as usize }
                };
                declare(&mut sig, &name, kind, npos)?;
                lexer.expect_rparen()?;
            }
            "declare-const" => {
                let (name, npos) = lexer.expect_word()?;
                declare(&mut sig, &name, SymbolKind::Const, npos)?;
                lexer.expect_rparen()?;
            }
            "enable-idl" => {
                sig.enable_idl();
                lexer.expect_rparen()?;
            }
            "A" | "B" => {
                let mut parser = Parser { lexer, sig: &sig };
                while !matches!(parser.lexer.peek(), Some((Token::RParen, _)) | None) {
                    let f = parser.formula()?;
                    if head == "A" {
                        a.insert(f);
                    } else {
                        b.insert(f);
                    }
                }
                lexer = parser.lexer;
                lexer.expect_rparen()?;
            }
            other => {
                return err(pos, format!("unknown directive `{other}`"));
            }
        }
    }
    Ok(ProblemFile { signature: sig, a, b })
}

/// Parses one formula against an existing signature; round-trips the
/// library's printed output.
pub fn parse_formula(input: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let lexer = lex(input)?;
    let mut parser = Parser { lexer, sig };
    let f = parser.formula()?;
    if let Some((t, pos)) = parser.lexer.peek() {
        return err(*pos, format!("trailing input starting at `{t}`"));
    }
    Ok(f)
}
