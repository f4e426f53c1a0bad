//! The classical forward-regression baseline: ξ greedy inclusions by
//! maximal ERR, never removing anything. Kept both as a baseline and as
//! the initializer of the oscillating search.

use crate::criterion::{ErrEngine, TermSubset, IMPROVEMENT_EPS};
use crate::error::{Error, Result};

use super::trace::{Phase, SearchTrace, TraceStep};
use super::SearchResult;

/// Pure greedy forward selection of `xi` terms.
pub fn ofr_err(engine: &ErrEngine<'_>, xi: usize, step_budget: usize) -> Result<SearchResult> {
    if xi < 1 || xi >= engine.n() {
        return Err(Error::Config(format!(
            "target cardinality {xi} outside 1..{}",
            engine.n()
        )));
    }
    let mut subset: Vec<usize> = Vec::with_capacity(xi);
    let mut j = 0.0;
    let mut trace = SearchTrace::default();
    let mut zero_gain_additions = 0;
    let mut budget_exceeded = false;
    for _ in 0..xi {
        if trace.len() >= step_budget {
            budget_exceeded = true;
            break;
        }
        let pick = engine.most_significant_term(&subset)?;
        let zero_gain = pick.j - j <= IMPROVEMENT_EPS;
        if zero_gain {
            zero_gain_additions += 1;
        }
        subset.push(pick.index);
        j = pick.j;
        trace.push(TraceStep {
            step: 0,
            phase: Phase::Forward,
            xi_step: subset.len(),
            subset: subset.clone(),
            j,
            improved: true,
            zero_gain,
            f1: None,
            f2: None,
            depth: None,
        });
    }
    Ok(SearchResult {
        subset: TermSubset::new(subset)?.with_criterion(j),
        trace,
        budget_exceeded,
        zero_gain_additions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_true_term_is_found_at_xi_1() {
        let c0: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let c1: Vec<f64> = (0..40).map(|i| ((i * 3) % 13) as f64 - 6.0).collect();
        let y: Vec<f64> = c1.iter().map(|v| 1.5 * v).collect();
        let cols = vec![c0, c1, vec![1.0; 40]];
        let engine =
            ErrEngine::from_columns(cols.iter().map(Vec::as_slice).collect(), &y).unwrap();
        let result = ofr_err(&engine, 1, 1000).unwrap();
        assert_eq!(result.subset.indices(), &[1]);
        assert!(result.j() >= 1.0 - 1e-10);
        assert_eq!(result.trace.len(), 1);
    }

    #[test]
    fn trace_has_exactly_xi_forward_steps() {
        let sys = crate::systems::builtin_system("S2").unwrap();
        let data = sys.generate(300, 200, 1).unwrap();
        let candidates = crate::term::enumerate_terms(&sys.model_spec).unwrap();
        let matrix = crate::regressor::build_regressors(&candidates, &data).unwrap();
        let est = matrix.estimation_rows(data.split_index()).unwrap();
        let engine = ErrEngine::new(&matrix, est).unwrap();
        let result = ofr_err(&engine, 6, 1000).unwrap();
        assert_eq!(result.trace.len(), 6);
        assert!(result
            .trace
            .steps
            .iter()
            .all(|s| s.phase == Phase::Forward));
        // Nested by construction.
        for w in result.trace.steps.windows(2) {
            assert!(w[1].subset.starts_with(&w[0].subset));
        }
    }
}
