//! Exact inference for discrete Bayesian networks.
//!
//! Networks are built incrementally: a variable can only reference parents
//! that already exist, so insertion order is a topological order and the
//! graph is acyclic by construction. Queries run variable elimination with
//! a greedy min-fill ordering after folding hard evidence and deterministic
//! consequences of that evidence into the factors.

mod enumerate;
mod factor;
mod inference;
mod network;

use std::fmt;

pub use enumerate::{joint_enumerate_oracle, DEFAULT_ENUMERATION_CAP};
pub use factor::{Factor, FactorKind};
pub use inference::EliminationOrder;
pub use network::{Cpt, Evidence, Network, Rule, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BnError {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("cardinality mismatch for {var}: {left} vs {right}")]
    CardinalityMismatch { var: VarId, left: usize, right: usize },
    #[error("variable {0} not in factor scope")]
    NotInScope(VarId),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("state {state} out of range for {var} (cardinality {cardinality})")]
    StateOutOfRange { var: VarId, state: usize, cardinality: usize },
    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),
    #[error("evidence has zero probability: {0}")]
    Contradiction(String),
    #[error("joint state space {size} exceeds enumeration cap {cap}")]
    EnumerationCap { size: f64, cap: f64 },
}

/// Posterior marginal of one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub var: VarId,
    pub name: String,
    pub probabilities: Vec<f64>,
}

impl Distribution {
    pub fn prob(&self, state: usize) -> f64 {
        self.probabilities[state]
    }

    pub fn sum(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mode(&self) -> usize {
        self.probabilities
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }
}
