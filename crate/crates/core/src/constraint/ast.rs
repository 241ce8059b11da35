use std::fmt;

use super::like::LikePattern;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::NotEq => "!=",
            CompareOp::Lt => "<",
            CompareOp::LtEq => "<=",
            CompareOp::Gt => ">",
            CompareOp::GtEq => ">=",
        }
    }

    pub(crate) fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CompareOp::Eq => ord == Equal,
            CompareOp::NotEq => ord != Equal,
            CompareOp::Lt => ord == Less,
            CompareOp::LtEq => ord != Greater,
            CompareOp::Gt => ord == Greater,
            CompareOp::GtEq => ord != Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

/// A parsed correctness predicate.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintExpr {
    Compare { field: String, op: CompareOp, value: Literal },
    Between { field: String, low: Literal, high: Literal },
    Like { field: String, pattern: LikePattern, negated: bool },
    In { field: String, values: Vec<Literal>, negated: bool },
    IsNull { field: String, negated: bool },
    And(Box<ConstraintExpr>, Box<ConstraintExpr>),
    Or(Box<ConstraintExpr>, Box<ConstraintExpr>),
    Not(Box<ConstraintExpr>),
}

pub(crate) const KEYWORDS: [&str; 8] = ["AND", "OR", "NOT", "BETWEEN", "LIKE", "IN", "IS", "NULL"];

pub(crate) fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

/// Whether `name` can be written without double quotes.
pub(crate) fn is_bare_field(name: &str) -> bool {
    let mut segments = name.split('.');
    let first_ok =
        segments.next().is_some_and(|s| s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_'));
    first_ok
        && name.split('.').all(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_'))
        && !is_keyword(name)
}

struct Field<'a>(&'a str);

impl fmt::Display for Field<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_bare_field(self.0) {
            f.write_str(self.0)
        } else {
            write!(f, "\"{}\"", self.0.replace('"', "\"\""))
        }
    }
}

impl std::ops::Not for ConstraintExpr {
    type Output = ConstraintExpr;

    fn not(self) -> ConstraintExpr {
        ConstraintExpr::Not(Box::new(self))
    }
}

impl ConstraintExpr {
    pub fn and(self, rhs: ConstraintExpr) -> ConstraintExpr {
        ConstraintExpr::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: ConstraintExpr) -> ConstraintExpr {
        ConstraintExpr::Or(Box::new(self), Box::new(rhs))
    }

    /// Every field referenced by a leaf, in left-to-right order.
    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_fields(&mut out);
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ConstraintExpr::Compare { field, .. }
            | ConstraintExpr::Between { field, .. }
            | ConstraintExpr::Like { field, .. }
            | ConstraintExpr::In { field, .. }
            | ConstraintExpr::IsNull { field, .. } => out.push(field),
            ConstraintExpr::And(l, r) | ConstraintExpr::Or(l, r) => {
                l.collect_fields(out);
                r.collect_fields(out);
            }
            ConstraintExpr::Not(e) => e.collect_fields(out),
        }
    }

    // 0 = OR, 1 = AND, 2 = NOT / leaf
    fn precedence(&self) -> u8 {
        match self {
            ConstraintExpr::Or(..) => 0,
            ConstraintExpr::And(..) => 1,
            _ => 2,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for ConstraintExpr {
    /// Renders canonical source text that parses back to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = |negated: &bool| if *negated { "NOT " } else { "" };
        match self {
            ConstraintExpr::Compare { field, op, value } => {
                write!(f, "{} {} {}", Field(field), op.symbol(), value)
            }
            ConstraintExpr::Between { field, low, high } => {
                write!(f, "{} BETWEEN {} AND {}", Field(field), low, high)
            }
            ConstraintExpr::Like { field, pattern, negated } => {
                write!(f, "{} {}LIKE {}", Field(field), neg(negated), Literal::Text(pattern.as_str().to_string()))
            }
            ConstraintExpr::In { field, values, negated } => {
                write!(f, "{} {}IN (", Field(field), neg(negated))?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            ConstraintExpr::IsNull { field, negated } => {
                write!(f, "{} IS {}NULL", Field(field), neg(negated))
            }
            // left-associative: the right operand needs parens at equal precedence
            ConstraintExpr::And(l, r) => {
                l.fmt_child(f, 1)?;
                f.write_str(" AND ")?;
                r.fmt_child(f, 2)
            }
            ConstraintExpr::Or(l, r) => {
                l.fmt_child(f, 0)?;
                f.write_str(" OR ")?;
                r.fmt_child(f, 1)
            }
            ConstraintExpr::Not(e) => {
                f.write_str("NOT ")?;
                e.fmt_child(f, 2)
            }
        }
    }
}
