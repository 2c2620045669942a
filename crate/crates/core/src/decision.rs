//! Results shared by the deciders and the oracle.

use std::time::Instant;

use thiserror::Error;

use crate::algebra::{Algebra, Element};
use crate::isotype::Subisomorphism;
use crate::relation::{Relation, RelationError};
use crate::syntax::QfFormula;

/// A subisomorphism that moves a tuple of the target outside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub witness_in: Vec<Element>,
    pub witness_out: Vec<Element>,
    pub gamma: Subisomorphism,
}

impl Counterexample {
    /// Checks that γ is a subisomorphism carrying `witness_in ∈ R` to `witness_out ∉ R`.
    pub fn verify(&self, alg: &Algebra, r: &Relation) -> Result<(), String> {
        self.gamma.verify(alg).map_err(|e| e.to_string())?;
        if self.gamma.apply_tuple(&self.witness_in).as_deref() != Some(&self.witness_out[..]) {
            return Err(format!(
                "γ does not map {:?} to {:?}",
                self.witness_in, self.witness_out
            ));
        }
        if !r.contains(&self.witness_in) {
            return Err(format!("{:?} is not in the target", self.witness_in));
        }
        if r.contains(&self.witness_out) {
            return Err(format!("{:?} is in the target", self.witness_out));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    /// `formula` is `None` when the strategy does not build one.
    Definable {
        formula: Option<QfFormula>,
    },
    NotDefinable(Counterexample),
}

impl Decision {
    pub fn is_definable(&self) -> bool {
        matches!(self, Decision::Definable { .. })
    }

    pub fn formula(&self) -> Option<&QfFormula> {
        match self {
            Decision::Definable { formula } => formula.as_ref(),
            Decision::NotDefinable(_) => None,
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Decision::NotDefinable(c) => Some(c),
            Decision::Definable { .. } => None,
        }
    }

    /// Re-checks the answer: a formula must define `r` exactly, a
    /// counterexample must separate it.
    pub fn verify(&self, alg: &Algebra, r: &Relation) -> Result<(), String> {
        match self {
            Decision::Definable { formula: None } => Ok(()),
            Decision::Definable { formula: Some(phi) } => {
                let ext = alg.extension(phi, r.arity()).map_err(|e| e.to_string())?;
                if &ext == r {
                    Ok(())
                } else {
                    Err(format!(
                        "formula defines {} tuples, target has {}",
                        ext.len(),
                        r.len()
                    ))
                }
            }
            Decision::NotDefinable(c) => c.verify(alg, r),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Re-check the algorithm's invariants after every mutation; panics on a violation.
    pub check_invariants: bool,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("target does not fit the algebra: {0}")]
    Universe(#[from] RelationError),
    #[error("time budget exceeded")]
    Timeout,
    #[error("oracle budget of {limit} candidate maps exceeded")]
    OracleBudget { limit: u64 },
}

pub(crate) fn check_deadline(deadline: Option<Instant>) -> Result<(), DecideError> {
    match deadline {
        Some(d) if Instant::now() >= d => Err(DecideError::Timeout),
        _ => Ok(()),
    }
}
