//! SQL `LIKE` matching.
//!
//! `%` matches any run of characters (possibly empty), `_` exactly one
//! character, and a backslash makes the next character literal. Matching is
//! case-sensitive and anchored at both ends.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LikeError {
    #[error("pattern ends with a dangling escape")]
    DanglingEscape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Token {
    AnySeq,
    AnyOne,
    Lit(char),
}

/// A compiled `LIKE` pattern. Equality compares the source text.
#[derive(Clone)]
pub struct LikePattern {
    source: String,
    tokens: Vec<Token>,
}

impl PartialEq for LikePattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
    }
}

impl fmt::Debug for LikePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LikePattern({:?})", self.source)
    }
}

impl LikePattern {
    pub fn new(source: &str) -> Result<LikePattern, LikeError> {
        let mut tokens = Vec::with_capacity(source.len());
        let mut chars = source.chars();
        while let Some(c) = chars.next() {
            let t = match c {
                '\\' => Token::Lit(chars.next().ok_or(LikeError::DanglingEscape)?),
                '%' => {
                    if tokens.last() == Some(&Token::AnySeq) {
                        continue;
                    }
                    Token::AnySeq
                }
                '_' => Token::AnyOne,
                c => Token::Lit(c),
            };
            tokens.push(t);
        }
        Ok(LikePattern { source: source.to_string(), tokens })
    }

    pub fn as_str(&self) -> &str {
        &self.source
    }

    pub fn matches(&self, text: &str) -> bool {
        let p = &self.tokens;
        let (mut pi, mut ti) = (0usize, 0usize);
        // position after the most recent `%` and the text offset it is trying
        let mut resume: Option<(usize, usize)> = None;
        loop {
            let next = text[ti..].chars().next();
            match (p.get(pi), next) {
                (Some(Token::AnySeq), _) => {
                    pi += 1;
                    resume = Some((pi, ti));
                    continue;
                }
                (Some(Token::AnyOne), Some(c)) => {
                    pi += 1;
                    ti += c.len_utf8();
                    continue;
                }
                (Some(Token::Lit(l)), Some(c)) if *l == c => {
                    pi += 1;
                    ti += c.len_utf8();
                    continue;
                }
                (None, None) => return true,
                _ => {}
            }
            // mismatch: let the last `%` swallow one more character
            match resume {
                Some((rp, rt)) => match text[rt..].chars().next() {
                    Some(c) => {
                        let rt = rt + c.len_utf8();
                        resume = Some((rp, rt));
                        pi = rp;
                        ti = rt;
                    }
                    None => return false,
                },
                None => return false,
            }
        }
    }
}

/// Matches `value` against a `LIKE` pattern.
pub fn like_match(value: &str, pattern: &str) -> Result<bool, LikeError> {
    Ok(LikePattern::new(pattern)?.matches(value))
}
