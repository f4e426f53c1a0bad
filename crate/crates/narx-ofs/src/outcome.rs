//! Qualitative search outcomes: the identified subset compared to ground
//! truth.

use serde::{Deserialize, Serialize};

use crate::criterion::TermSubset;
use crate::error::{Error, Result};

/// The four possible outcomes of a structure search against a known
/// system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeLabel {
    /// All system terms found, nothing spurious.
    ExactFitting,
    /// All system terms found, plus spurious ones.
    OverFitting,
    /// System terms missing, nothing spurious.
    UnderFitting1,
    /// System terms missing and spurious terms present.
    UnderFitting2,
}

impl OutcomeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutcomeLabel::ExactFitting => "exact_fitting",
            OutcomeLabel::OverFitting => "over_fitting",
            OutcomeLabel::UnderFitting1 => "under_fitting_1",
            OutcomeLabel::UnderFitting2 => "under_fitting_2",
        }
    }

    /// A search is qualitatively successful when every system term was
    /// identified (spurious extras are removable downstream).
    pub fn is_success(&self) -> bool {
        matches!(self, OutcomeLabel::ExactFitting | OutcomeLabel::OverFitting)
    }
}

/// Classification of a found subset against the true one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: OutcomeLabel,
    /// Selected terms absent from the system (candidate indices).
    pub spurious: Vec<usize>,
    /// System terms the search missed (candidate indices).
    pub missing: Vec<usize>,
}

/// Compares `found` against the non-empty `truth` by set relations.
pub fn classify_outcome(found: &TermSubset, truth: &TermSubset) -> Result<Outcome> {
    if truth.is_empty() {
        return Err(Error::Subset("ground truth subset is empty".into()));
    }
    let mut spurious: Vec<usize> =
        found.indices().iter().copied().filter(|i| !truth.contains(*i)).collect();
    let mut missing: Vec<usize> =
        truth.indices().iter().copied().filter(|i| !found.contains(*i)).collect();
    spurious.sort_unstable();
    missing.sort_unstable();
    let label = match (spurious.is_empty(), missing.is_empty()) {
        (true, true) => OutcomeLabel::ExactFitting,
        (false, true) => OutcomeLabel::OverFitting,
        (true, false) => OutcomeLabel::UnderFitting1,
        (false, false) => OutcomeLabel::UnderFitting2,
    };
    Ok(Outcome { label, spurious, missing })
}
