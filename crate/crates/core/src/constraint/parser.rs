//! Tokenizer and recursive-descent parser for constraint expressions.
//!
//! ```text
//! expr  := or
//! or    := and { OR and }
//! and   := unary { AND unary }
//! unary := NOT unary | "(" expr ")" | pred
//! pred  := field cmp literal
//!        | field BETWEEN literal AND literal
//!        | field [NOT] LIKE string
//!        | field [NOT] IN "(" literal { "," literal } ")"
//!        | field IS [NOT] NULL
//! cmp   := "=" | "!=" | "<>" | "<" | "<=" | ">" | ">="
//! ```
//!
//! Keywords are case-insensitive. Fields are bare dotted identifiers or
//! double-quoted names; strings are single-quoted with `''` as an embedded
//! quote.

use std::fmt;

use thiserror::Error;

use super::ast::{is_keyword, CompareOp, ConstraintExpr, Literal};
use super::like::{LikeError, LikePattern};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at column {column}: {kind}")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unknown operator {0:?}")]
    UnknownOperator(String),
    #[error("unterminated string literal")]
    UnterminatedString,
    #[error("unterminated quoted field name")]
    UnterminatedField,
    #[error("invalid identifier {0:?}")]
    InvalidIdentifier(String),
    #[error("invalid number {0:?}")]
    InvalidNumber(String),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: &'static str, found: String },
    #[error("BETWEEN lower bound {low} exceeds upper bound {high}")]
    InvertedRange { low: f64, high: f64 },
    #[error("invalid LIKE pattern: {0}")]
    Pattern(LikeError),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    QuotedField(String),
    Str(String),
    Num(f64),
    Op(CompareOp),
    LParen,
    RParen,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "{w:?}"),
            Tok::QuotedField(w) => write!(f, "field \"{w}\""),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::Num(n) => write!(f, "number {n}"),
            Tok::Op(op) => write!(f, "{:?}", op.symbol()),
            Tok::LParen => f.write_str("\"(\""),
            Tok::RParen => f.write_str("\")\""),
            Tok::Comma => f.write_str("\",\""),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn err(column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { column, kind }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            '\'' | '"' => {
                let quote = c;
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => {
                            let kind = if quote == '\'' {
                                ParseErrorKind::UnterminatedString
                            } else {
                                ParseErrorKind::UnterminatedField
                            };
                            return Err(err(col, kind));
                        }
                        Some(&q) if q == quote => {
                            if chars.get(i + 1) == Some(&quote) {
                                s.push(quote);
                                i += 2;
                            } else {
                                i += 1;
                                break;
                            }
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push((if quote == '\'' { Tok::Str(s) } else { Tok::QuotedField(s) }, col));
            }
            '=' | '!' | '<' | '>' => {
                let start = i;
                while i < chars.len() && matches!(chars[i], '=' | '!' | '<' | '>') {
                    i += 1;
                }
                let sym: String = chars[start..i].iter().collect();
                let op = match sym.as_str() {
                    "=" => CompareOp::Eq,
                    "!=" | "<>" => CompareOp::NotEq,
                    "<" => CompareOp::Lt,
                    "<=" => CompareOp::LtEq,
                    ">" => CompareOp::Gt,
                    ">=" => CompareOp::GtEq,
                    _ => return Err(err(col, ParseErrorKind::UnknownOperator(sym))),
                };
                out.push((Tok::Op(op), col));
            }
            c if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let valid = {
                    let body = text.trim_start_matches('-');
                    match body.split_once('.') {
                        Some((a, b)) => !a.is_empty() && !b.is_empty() && !b.contains('.'),
                        None => true,
                    }
                };
                if !valid || chars.get(i).is_some_and(|ch| ch.is_alphabetic() || *ch == '_') {
                    return Err(err(col, ParseErrorKind::InvalidNumber(text)));
                }
                let n = text.parse::<f64>().map_err(|_| err(col, ParseErrorKind::InvalidNumber(text)))?;
                out.push((Tok::Num(n), col));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if word.split('.').any(str::is_empty) {
                    return Err(err(col, ParseErrorKind::InvalidIdentifier(word)));
                }
                out.push((Tok::Word(word), col));
            }
            other => {
                let kind = if "~&|^+*/%".contains(other) {
                    ParseErrorKind::UnknownOperator(other.to_string())
                } else {
                    ParseErrorKind::UnexpectedChar(other)
                };
                return Err(err(col, kind));
            }
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        err(self.column(), ParseErrorKind::Unexpected { expected, found: self.peek().to_string() })
    }

    fn expect_keyword(&mut self, kw: &'static str) -> Result<(), ParseError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn expr(&mut self) -> Result<ConstraintExpr, ParseError> {
        let mut lhs = self.and()?;
        while self.eat_keyword("OR") {
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<ConstraintExpr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat_keyword("AND") {
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<ConstraintExpr, ParseError> {
        if self.eat_keyword("NOT") {
            return Ok(!self.unary()?);
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let inner = self.expr()?;
            self.expect(Tok::RParen, "\")\"")?;
            return Ok(inner);
        }
        self.predicate()
    }

    fn field(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Word(w) if !is_keyword(&w) => {
                self.bump();
                Ok(w)
            }
            Tok::QuotedField(w) if !w.is_empty() => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.unexpected("field name")),
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Literal::Number(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Literal::Text(s))
            }
            _ => Err(self.unexpected("literal")),
        }
    }

    fn predicate(&mut self) -> Result<ConstraintExpr, ParseError> {
        let field = self.field()?;
        if let Tok::Op(op) = *self.peek() {
            self.bump();
            let value = self.literal()?;
            return Ok(ConstraintExpr::Compare { field, op, value });
        }
        if self.eat_keyword("BETWEEN") {
            let low_col = self.column();
            let low = self.literal()?;
            self.expect_keyword("AND")?;
            let high = self.literal()?;
            if let (Literal::Number(l), Literal::Number(h)) = (&low, &high) {
                if l > h {
                    return Err(err(low_col, ParseErrorKind::InvertedRange { low: *l, high: *h }));
                }
            }
            return Ok(ConstraintExpr::Between { field, low, high });
        }
        if self.eat_keyword("IS") {
            let negated = self.eat_keyword("NOT");
            self.expect_keyword("NULL")?;
            return Ok(ConstraintExpr::IsNull { field, negated });
        }
        let negated = self.eat_keyword("NOT");
        if self.eat_keyword("LIKE") {
            let col = self.column();
            return match self.bump() {
                (Tok::Str(s), _) => {
                    let pattern = LikePattern::new(&s).map_err(|e| err(col, ParseErrorKind::Pattern(e)))?;
                    Ok(ConstraintExpr::Like { field, pattern, negated })
                }
                (found, col) => {
                    Err(err(col, ParseErrorKind::Unexpected { expected: "string pattern", found: found.to_string() }))
                }
            };
        }
        if self.eat_keyword("IN") {
            self.expect(Tok::LParen, "\"(\"")?;
            let mut values = vec![self.literal()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                values.push(self.literal()?);
            }
            self.expect(Tok::RParen, "\")\"")?;
            return Ok(ConstraintExpr::In { field, values, negated });
        }
        Err(self.unexpected(if negated { "LIKE or IN" } else { "comparison operator" }))
    }
}

/// Parses a constraint expression.
pub fn parse(text: &str) -> Result<ConstraintExpr, ParseError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let expr = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(expr)
}

impl std::str::FromStr for ConstraintExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
