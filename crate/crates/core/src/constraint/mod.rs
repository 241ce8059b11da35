//! Correctness predicates: a small SQL-flavoured expression language with
//! comparisons, `BETWEEN`, `LIKE`, `IN`, `IS NULL` and boolean connectives.

mod ast;
mod eval;
mod like;
mod parser;

use std::collections::BTreeMap;

use thiserror::Error;

pub use ast::{CompareOp, ConstraintExpr, Literal};
pub use eval::{EvalError, Row, SingleCell, Truth};
pub use like::{like_match, LikeError, LikePattern};
pub use parser::{parse, ParseError, ParseErrorKind};

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("rule for {attribute:?}: {source}")]
    Parse {
        attribute: String,
        #[source]
        source: ParseError,
    },
    #[error("rule for {attribute:?} references other field {field:?}")]
    ForeignField { attribute: String, field: String },
}

/// Correct-if rules keyed by the attribute they judge.
///
/// Each rule may only reference its own attribute. Attributes without a rule
/// are simply absent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RuleSet {
    rules: BTreeMap<String, ConstraintExpr>,
}

impl RuleSet {
    pub fn new() -> RuleSet {
        RuleSet::default()
    }

    pub fn insert(&mut self, attribute: &str, rule: ConstraintExpr) -> Result<(), RuleError> {
        if let Some(field) = rule.fields().into_iter().find(|f| *f != attribute) {
            return Err(RuleError::ForeignField { attribute: attribute.to_string(), field: field.to_string() });
        }
        self.rules.insert(attribute.to_string(), rule);
        Ok(())
    }

    /// Parses and inserts a rule. With `incorrect_if` the text describes the
    /// violating values and is negated on load.
    pub fn insert_text(&mut self, attribute: &str, text: &str, incorrect_if: bool) -> Result<(), RuleError> {
        let rule = parse(text).map_err(|source| RuleError::Parse { attribute: attribute.to_string(), source })?;
        self.insert(attribute, if incorrect_if { !rule } else { rule })
    }

    pub fn get(&self, attribute: &str) -> Option<&ConstraintExpr> {
        self.rules.get(attribute)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ConstraintExpr)> {
        self.rules.iter().map(|(k, v)| (k.as_str(), v))
    }
}
