use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer widths `[n_0, n_1, ..., n_L]` of a feedforward network.
///
/// Input and output widths are always at least one. Hidden widths may be zero
/// while a topology is being reduced; such a topology is not runnable until
/// its empty layers are dropped (see [`crate::topology::effective_topology`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Topology(Vec<usize>);

impl Topology {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidTopology {
            widths: widths.clone(),
            reason: reason.to_string(),
        };
        if widths.len() < 2 {
            return Err(invalid("need at least an input and an output layer"));
        }
        if widths[0] == 0 || widths[widths.len() - 1] == 0 {
            return Err(invalid("input and output widths must be positive"));
        }
        Ok(Topology(widths))
    }

    pub fn widths(&self) -> &[usize] {
        &self.0
    }

    pub fn inputs(&self) -> usize {
        self.0[0]
    }

    pub fn outputs(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn hidden(&self) -> &[usize] {
        &self.0[1..self.0.len() - 1]
    }

    /// Number of weight layers, `L`.
    pub fn depth(&self) -> usize {
        self.0.len() - 1
    }

    /// True when no hidden layer is empty.
    pub fn is_runnable(&self) -> bool {
        self.hidden().iter().all(|&w| w > 0)
    }

    pub(crate) fn require_runnable(&self) -> Result<()> {
        if self.is_runnable() {
            Ok(())
        } else {
            Err(Error::InvalidTopology {
                widths: self.0.clone(),
                reason: "zero-width hidden layer".into(),
            })
        }
    }
}

impl TryFrom<Vec<usize>> for Topology {
    type Error = Error;

    fn try_from(widths: Vec<usize>) -> Result<Self> {
        Topology::new(widths)
    }
}

impl From<Topology> for Vec<usize> {
    fn from(t: Topology) -> Self {
        t.0
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "]")
    }
}

/// Accepts `4,8,3`, `[4, 8, 3]` or `4-8-3`.
impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
        let widths = trimmed
            .split([',', '-', ' '])
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.parse::<usize>().map_err(|_| Error::InvalidTopology {
                    widths: Vec::new(),
                    reason: format!("cannot parse `{s}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Topology::new(widths)
    }
}
