use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MklError, Result};

/// Binary labels in `{-1, +1}` with cached class counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    values: Vec<i8>,
    n_pos: usize,
    n_neg: usize,
}

impl LabelVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(MklError::InvalidInput(format!("label {bad} is not +1 or -1")));
        }
        let n_pos = values.iter().filter(|&&v| v == 1).count();
        let n_neg = values.len() - n_pos;
        Ok(Self { values, n_pos, n_neg })
    }

    pub fn from_bools(positive: impl IntoIterator<Item = bool>) -> Self {
        let values: Vec<i8> = positive.into_iter().map(|p| if p { 1 } else { -1 }).collect();
        Self::new(values).expect("labels built from bools are valid")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.values[i]
    }

    #[inline]
    pub fn is_positive(&self, i: usize) -> bool {
        self.values[i] > 0
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        if self.n_pos == 0 || self.n_neg == 0 {
            return Err(MklError::SingleClass {
                n_pos: self.n_pos,
                n_neg: self.n_neg,
            });
        }
        Ok(())
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self::new(idx.iter().map(|&i| self.values[i]).collect()).expect("subset of valid labels")
    }

    pub fn flipped(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            n_pos: self.n_neg,
            n_neg: self.n_pos,
        }
    }

    /// Parses one `+1` / `-1` token per line; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let tok = line.trim();
            if tok.is_empty() {
                continue;
            }
            let v = match tok {
                "+1" | "1" => 1,
                "-1" => -1,
                other => {
                    return Err(MklError::Format(format!(
                        "line {}: expected +1 or -1, found '{other}'",
                        lineno + 1
                    )))
                }
            };
            values.push(v);
        }
        Self::new(values)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 3);
        for &v in &self.values {
            let _ = writeln!(out, "{}", if v > 0 { "+1" } else { "-1" });
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_checks() {
        let y = LabelVector::new(vec![1, -1, -1]).unwrap();
        assert_eq!((y.n_pos(), y.n_neg()), (1, 2));
        assert!(y.require_both_classes().is_ok());
        assert!(LabelVector::new(vec![1, 1]).unwrap().require_both_classes().is_err());
        assert!(LabelVector::new(vec![1, 0]).is_err());
        assert_eq!(y.flipped().n_pos(), 2);
    }

    #[test]
    fn text_roundtrip() {
        let y = LabelVector::parse("+1\n-1\n\n1\n").unwrap();
        assert_eq!(y.values(), &[1, -1, 1]);
        assert_eq!(LabelVector::parse(&y.to_text()).unwrap(), y);
        assert!(LabelVector::parse("+1\n2\n").is_err());
    }
}
