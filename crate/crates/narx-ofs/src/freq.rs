//! Term-selection frequency across a cardinality sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::SweepReport;
use crate::term::CandidateSet;

/// Binary table `τ[i][ξ]`: whether term i is a member of the subset
/// identified at cardinality ξ.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencyTable {
    /// Candidate indices of the tracked terms.
    pub terms: Vec<usize>,
    /// Swept cardinalities, ascending and contiguous.
    pub cardinalities: Vec<usize>,
    /// Row per term, column per cardinality.
    pub tau: Vec<Vec<u8>>,
}

impl FrequencyTable {
    /// True when the term's row is all-ones for every ξ ≥ `from`.
    pub fn always_selected_from(&self, term_row: usize, from: usize) -> bool {
        self.cardinalities
            .iter()
            .zip(&self.tau[term_row])
            .filter(|(&xi, _)| xi >= from)
            .all(|(_, &t)| t == 1)
    }

    /// CSV: `term,<xi...>` header then one row per tracked term.
    pub fn to_csv(&self, candidates: &CandidateSet) -> String {
        let mut out = String::from("term");
        for xi in &self.cardinalities {
            out.push_str(&format!(",{xi}"));
        }
        out.push('\n');
        for (row, &term) in self.terms.iter().enumerate() {
            out.push_str(&candidates.term(term).to_string());
            for v in &self.tau[row] {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the frequency table of `terms_of_interest` over a sweep report
/// covering a contiguous interval.
pub fn term_frequency(report: &SweepReport, terms_of_interest: &[usize]) -> Result<FrequencyTable> {
    let cardinalities: Vec<usize> = report.entries.keys().copied().collect();
    if cardinalities.is_empty() {
        return Err(Error::Subset("sweep report has no entries".into()));
    }
    for w in cardinalities.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(Error::Subset(format!(
                "sweep coverage has a gap between xi {} and {}",
                w[0], w[1]
            )));
        }
    }
    let tau = terms_of_interest
        .iter()
        .map(|&term| {
            cardinalities
                .iter()
                .map(|xi| u8::from(report.entries[xi].subset.contains(term)))
                .collect()
        })
        .collect();
    Ok(FrequencyTable { terms: terms_of_interest.to_vec(), cardinalities, tau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::{CriterionSpec, Sweeper};
    use crate::search::Algorithm;
    use crate::systems::builtin_system;
    use crate::term::enumerate_terms;

    #[test]
    fn membership_is_reported_per_cardinality() {
        let sys = builtin_system("S2").unwrap();
        let data = sys.generate(400, 280, 3).unwrap();
        let candidates = enumerate_terms(&sys.model_spec).unwrap();
        let sweeper = Sweeper::new(&candidates, &data).unwrap();
        let report = sweeper
            .sweep(Algorithm::Oif, 2, 8, CriterionSpec::default())
            .unwrap();
        let truth = candidates.indices_of(sys.true_terms.as_ref().unwrap()).unwrap();
        let table = term_frequency(&report, &truth).unwrap();
        assert_eq!(table.cardinalities, (2..=8).collect::<Vec<_>>());
        for (row, &term) in table.terms.iter().enumerate() {
            for (col, &xi) in table.cardinalities.iter().enumerate() {
                let member = report.entries[&xi].subset.contains(term);
                assert_eq!(table.tau[row][col] == 1, member);
            }
        }
        // Single-cardinality report gives a one-column table.
        let single = sweeper
            .sweep(Algorithm::Oif, 4, 4, CriterionSpec::default())
            .unwrap();
        let table = term_frequency(&single, &truth).unwrap();
        assert_eq!(table.cardinalities, vec![4]);
        assert!(table.tau.iter().all(|row| row.len() == 1));
    }
}
