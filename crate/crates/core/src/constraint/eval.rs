use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::{ConstraintExpr, Literal};
use crate::table::{parse_decimal, CellValue, RecordView};

/// Kleene three-valued truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn and(self, rhs: Truth) -> Truth {
        use Truth::*;
        match (self, rhs) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Unknown,
        }
    }

    pub fn or(self, rhs: Truth) -> Truth {
        use Truth::*;
        match (self, rhs) {
            (True, _) | (_, True) => True,
            (False, False) => False,
            _ => Unknown,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("field {0:?} is not present in the row")]
    UnknownField(String),
    #[error("field {field:?}: value {value:?} is not numeric")]
    TypeMismatch { field: String, value: String },
}

/// Anything that can supply cell values by field name.
pub trait Row {
    fn value(&self, field: &str) -> Option<CellValue<'_>>;
}

impl Row for HashMap<String, CellValue<'_>> {
    fn value(&self, field: &str) -> Option<CellValue<'_>> {
        self.get(field).copied()
    }
}

impl Row for BTreeMap<String, CellValue<'_>> {
    fn value(&self, field: &str) -> Option<CellValue<'_>> {
        self.get(field).copied()
    }
}

impl Row for RecordView<'_> {
    fn value(&self, field: &str) -> Option<CellValue<'_>> {
        self.get(field)
    }
}

/// A row holding a single named cell; used for per-attribute rules.
pub struct SingleCell<'a> {
    pub field: &'a str,
    pub cell: CellValue<'a>,
}

impl Row for SingleCell<'_> {
    fn value(&self, field: &str) -> Option<CellValue<'_>> {
        (field == self.field).then_some(self.cell)
    }
}

fn compare(field: &str, cell: &CellValue<'_>, lit: &Literal) -> Result<Ordering, EvalError> {
    match lit {
        Literal::Number(n) => {
            let v = match *cell {
                CellValue::Number { value, .. } => value,
                CellValue::Text(t) => parse_decimal(t)
                    .ok_or_else(|| EvalError::TypeMismatch { field: field.to_string(), value: t.to_string() })?,
                CellValue::Missing => unreachable!("missing handled by caller"),
            };
            Ok(v.partial_cmp(n).expect("finite values"))
        }
        Literal::Text(s) => Ok(cell.text().unwrap_or("").cmp(s.as_str())),
    }
}

impl ConstraintExpr {
    /// Evaluates the predicate over `row` with Kleene logic. Any leaf other
    /// than `IS [NOT] NULL` that reads a missing value is unknown.
    pub fn evaluate<R: Row + ?Sized>(&self, row: &R) -> Result<Truth, EvalError> {
        let fetch = |field: &str| row.value(field).ok_or_else(|| EvalError::UnknownField(field.to_string()));
        let negate = |t: Truth, negated: bool| if negated { t.not() } else { t };
        Ok(match self {
            ConstraintExpr::IsNull { field, negated } => negate(fetch(field)?.is_missing().into(), *negated),
            ConstraintExpr::Compare { field, op, value } => {
                let cell = fetch(field)?;
                if cell.is_missing() {
                    return Ok(Truth::Unknown);
                }
                op.holds(compare(field, &cell, value)?).into()
            }
            ConstraintExpr::Between { field, low, high } => {
                let cell = fetch(field)?;
                if cell.is_missing() {
                    return Ok(Truth::Unknown);
                }
                let above = compare(field, &cell, low)? != Ordering::Less;
                let below = compare(field, &cell, high)? != Ordering::Greater;
                (above && below).into()
            }
            ConstraintExpr::Like { field, pattern, negated } => match fetch(field)?.text() {
                None => Truth::Unknown,
                Some(t) => negate(pattern.matches(t).into(), *negated),
            },
            ConstraintExpr::In { field, values, negated } => {
                let cell = fetch(field)?;
                if cell.is_missing() {
                    return Ok(Truth::Unknown);
                }
                let mut hit = false;
                for v in values {
                    if compare(field, &cell, v)? == Ordering::Equal {
                        hit = true;
                        break;
                    }
                }
                negate(hit.into(), *negated)
            }
            ConstraintExpr::And(l, r) => l.evaluate(row)?.and(r.evaluate(row)?),
            ConstraintExpr::Or(l, r) => l.evaluate(row)?.or(r.evaluate(row)?),
            ConstraintExpr::Not(e) => e.evaluate(row)?.not(),
        })
    }

    /// Evaluates a rule whose leaves all reference `field` against one cell.
    pub fn evaluate_cell(&self, field: &str, cell: CellValue<'_>) -> Result<Truth, EvalError> {
        self.evaluate(&SingleCell { field, cell })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::parse;

    fn num(v: f64) -> CellValue<'static> {
        CellValue::Number { value: v, raw: "" }
    }

    fn one(field: &str, cell: CellValue<'static>) -> HashMap<String, CellValue<'static>> {
        HashMap::from([(field.to_string(), cell)])
    }

    #[test]
    fn compare_numbers() {
        let e = parse("price >= 0").unwrap();
        assert_eq!(e.evaluate(&one("price", CellValue::Number { value: 12.5, raw: "12.5" })), Ok(Truth::True));
        assert_eq!(e.evaluate(&one("price", num(-1.0))), Ok(Truth::False));
        assert_eq!(e.evaluate(&one("price", CellValue::Missing)), Ok(Truth::Unknown));
    }

    #[test]
    fn like_equality() {
        let e = parse("country LIKE 'AA'").unwrap();
        assert_eq!(e.evaluate(&one("country", CellValue::Text("AA"))), Ok(Truth::True));
        assert_eq!(e.evaluate(&one("country", CellValue::Text("AAB"))), Ok(Truth::False));
        let e = parse("country NOT LIKE 'AA'").unwrap();
        assert_eq!(e.evaluate(&one("country", CellValue::Text("AA"))), Ok(Truth::False));
        assert_eq!(e.evaluate(&one("country", CellValue::Missing)), Ok(Truth::Unknown));
    }

    #[test]
    fn numeric_text_and_mismatch() {
        let e = parse("age > 18").unwrap();
        assert_eq!(e.evaluate(&one("age", CellValue::Text("21"))), Ok(Truth::True));
        assert_eq!(
            e.evaluate(&one("age", CellValue::Text("abc"))),
            Err(EvalError::TypeMismatch { field: "age".into(), value: "abc".into() })
        );
        assert_eq!(e.evaluate(&one("other", num(1.0))), Err(EvalError::UnknownField("age".into())));
    }

    #[test]
    fn string_comparison_uses_raw_text() {
        let e = parse("zip = '02139'").unwrap();
        assert_eq!(e.evaluate(&one("zip", CellValue::Number { value: 2139.0, raw: "02139" })), Ok(Truth::True));
    }

    #[test]
    fn null_tests() {
        let e = parse("a IS NULL").unwrap();
        assert_eq!(e.evaluate(&one("a", CellValue::Missing)), Ok(Truth::True));
        assert_eq!(e.evaluate(&one("a", num(1.0))), Ok(Truth::False));
        let e = parse("a IS NOT NULL").unwrap();
        assert_eq!(e.evaluate(&one("a", CellValue::Missing)), Ok(Truth::False));
    }

    #[test]
    fn between_and_in() {
        let e = parse("x BETWEEN 1 AND 5").unwrap();
        assert_eq!(e.evaluate(&one("x", num(1.0))), Ok(Truth::True));
        assert_eq!(e.evaluate(&one("x", num(5.0))), Ok(Truth::True));
        assert_eq!(e.evaluate(&one("x", num(5.5))), Ok(Truth::False));
        let e = parse("os IN ('iOS', 'Android')").unwrap();
        assert_eq!(e.evaluate(&one("os", CellValue::Text("iOS"))), Ok(Truth::True));
        assert_eq!(e.evaluate(&one("os", CellValue::Text("web"))), Ok(Truth::False));
        let e = parse("os NOT IN ('iOS', 'Android')").unwrap();
        assert_eq!(e.evaluate(&one("os", CellValue::Text("web"))), Ok(Truth::True));
    }

    #[test]
    fn kleene_connectives() {
        let row: HashMap<String, CellValue<'static>> =
            HashMap::from([("a".to_string(), CellValue::Missing), ("b".to_string(), num(1.0))]);
        assert_eq!(parse("a > 0 OR b = 1").unwrap().evaluate(&row), Ok(Truth::True));
        assert_eq!(parse("a > 0 AND b = 2").unwrap().evaluate(&row), Ok(Truth::False));
        assert_eq!(parse("a > 0 AND b = 1").unwrap().evaluate(&row), Ok(Truth::Unknown));
        assert_eq!(parse("NOT a > 0").unwrap().evaluate(&row), Ok(Truth::Unknown));
    }

    #[test]
    fn truth_tables() {
        use Truth::*;
        let all = [True, False, Unknown];
        for a in all {
            for b in all {
                assert_eq!(a.and(b).not(), a.not().or(b.not()));
                assert_eq!(a.and(b), b.and(a));
                assert_eq!(a.or(b), b.or(a));
            }
        }
    }
}
