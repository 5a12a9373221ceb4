use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing set of positive lags that always contains lag 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct LagSet(Vec<usize>);

impl LagSet {
    /// Sorts and validates `lags`. Duplicates, zero, or a missing lag 1 are errors.
    pub fn new(mut lags: Vec<usize>) -> Result<Self> {
        lags.sort_unstable();
        if lags.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!("duplicate lags in {lags:?}")));
        }
        if lags.first() != Some(&1) {
            return Err(Error::Argument(format!(
                "lag set must start at 1, got {lags:?}"
            )));
        }
        Ok(Self(lags))
    }

    /// The classical one-step DMD lag set `{1}`.
    pub fn unit() -> Self {
        Self(vec![1])
    }

    /// All lags `{1, ..., d}`.
    pub fn contiguous(d: usize) -> Result<Self> {
        Self::new((1..=d).collect())
    }

    /// Checks the upper bound `max lag <= d`.
    pub fn bounded_by(self, d: usize) -> Result<Self> {
        if self.max() > d {
            return Err(Error::Argument(format!(
                "lag {} exceeds maximum lag {d}",
                self.max()
            )));
        }
        Ok(self)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("lag set is never empty")
    }

    pub fn contains(&self, lag: usize) -> bool {
        self.0.binary_search(&lag).is_ok()
    }

    pub fn position(&self, lag: usize) -> Option<usize> {
        self.0.binary_search(&lag).ok()
    }

    pub fn with(&self, lag: usize) -> Result<Self> {
        let mut v = self.0.clone();
        v.push(lag);
        Self::new(v)
    }

    pub fn without(&self, lag: usize) -> Result<Self> {
        if lag == 1 {
            return Err(Error::Argument("lag 1 cannot be removed".into()));
        }
        if !self.contains(lag) {
            return Err(Error::Argument(format!("lag {lag} not in {self}")));
        }
        Self::new(self.0.iter().copied().filter(|&l| l != lag).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl TryFrom<Vec<usize>> for LagSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LagSet> for Vec<usize> {
    fn from(l: LagSet) -> Self {
        l.0
    }
}

impl fmt::Display for LagSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}
