//! The floating structure searches.
//!
//! Both searches grow the subset by most-significant-term inclusions with
//! a per-cardinality best-subset memory (a non-improving inclusion
//! restores the remembered best), then backtrack: the least significant
//! term is removed as long as removal strictly improves the remembered
//! best at the smaller cardinality. A first-exclusion guard keeps the
//! just-added term from being removed straight away. OIF additionally
//! swaps: each selected term is tentatively replaced by the most
//! significant alternative, and the best replacement is accepted when it
//! beats the current cardinality's best, feeding back into backtracking.

use std::collections::HashMap;

use crate::criterion::{improves, ErrEngine, TermSubset, IMPROVEMENT_EPS};
use crate::error::Result;

use super::trace::{Phase, SearchTrace, TraceStep};
use super::{SearchConfig, SearchResult};

/// Orthogonal sequential floating search (no term swapping).
pub fn osf_search(engine: &ErrEngine<'_>, config: &SearchConfig) -> Result<SearchResult> {
    floating_search(engine, config, false)
}

/// Orthogonal improved floating search (with term swapping).
pub fn oif_search(engine: &ErrEngine<'_>, config: &SearchConfig) -> Result<SearchResult> {
    floating_search(engine, config, true)
}

struct Memory {
    best: Vec<Option<(Vec<usize>, f64)>>,
    version: u64,
}

impl Memory {
    fn new(xi: usize) -> Self {
        Memory { best: vec![None; xi + 1], version: 0 }
    }

    fn j_at(&self, k: usize) -> Option<f64> {
        self.best[k].as_ref().map(|(_, j)| *j)
    }

    /// Accept when strictly better than the stored value (unset counts
    /// as J = 0, but the very first visit is always stored).
    fn accepts(&self, k: usize, j: f64) -> bool {
        match self.j_at(k) {
            None => true,
            Some(stored) => improves(j, stored),
        }
    }

    fn store(&mut self, k: usize, subset: Vec<usize>, j: f64) {
        self.best[k] = Some((subset, j));
        self.version += 1;
    }

    fn restore(&self, k: usize) -> (Vec<usize>, f64) {
        self.best[k].clone().expect("restore target was stored on first visit")
    }
}

fn floating_search(
    engine: &ErrEngine<'_>,
    config: &SearchConfig,
    swapping: bool,
) -> Result<SearchResult> {
    config.validate(engine.n())?;
    let xi = config.xi;
    let mut memory = Memory::new(xi);
    let mut x: Vec<usize> = Vec::new();
    let mut j_x = 0.0_f64;
    let mut k = 0usize;
    let mut trace = SearchTrace::default();
    let mut zero_gain_additions = 0usize;
    let mut budget_exceeded = false;
    // (cardinality, sorted subset) -> memory version when last seen; a
    // repeat without memory progress forces a plain forward step.
    let mut seen: HashMap<(usize, Vec<usize>), u64> = HashMap::new();
    let mut force_forward = false;

    while k < xi {
        if trace.len() >= config.step_budget {
            budget_exceeded = true;
            break;
        }

        // Sequential forward inclusion.
        let pick = engine.most_significant_term(&x)?;
        let gain = pick.j - j_x;
        let accepted = memory.accepts(k + 1, pick.j);
        let mut protected = None;
        if accepted {
            x.push(pick.index);
            j_x = pick.j;
            memory.store(k + 1, x.clone(), j_x);
            protected = Some(pick.index);
            if gain <= IMPROVEMENT_EPS {
                zero_gain_additions += 1;
            }
        } else {
            let (restored, restored_j) = memory.restore(k + 1);
            x = restored;
            j_x = restored_j;
        }
        k += 1;
        trace.push(TraceStep {
            step: 0,
            phase: Phase::Forward,
            xi_step: k,
            subset: x.clone(),
            j: j_x,
            improved: accepted,
            zero_gain: accepted && gain <= IMPROVEMENT_EPS,
            f1: None,
            f2: None,
            depth: None,
        });

        if force_forward {
            force_forward = false;
            continue;
        }

        // Backward elimination, re-entered after an accepted swap.
        loop {
            let mut first_exclusion = true;
            while k > 2 {
                if trace.len() >= config.step_budget {
                    budget_exceeded = true;
                    break;
                }
                let removal = engine.least_significant_term(&x)?;
                if first_exclusion && Some(removal.index) == protected {
                    break;
                }
                if !memory.accepts(k - 1, removal.j) {
                    break;
                }
                x.retain(|&i| i != removal.index);
                j_x = removal.j;
                k -= 1;
                memory.store(k, x.clone(), j_x);
                trace.push(TraceStep {
                    step: 0,
                    phase: Phase::Backtrack,
                    xi_step: k,
                    subset: x.clone(),
                    j: j_x,
                    improved: true,
                    zero_gain: false,
                    f1: Some(first_exclusion),
                    f2: None,
                    depth: None,
                });
                first_exclusion = false;
            }

            if !swapping || k < 2 || budget_exceeded {
                break;
            }

            // Term swapping: best single replacement of a selected term.
            let mut best_swap: Option<(Vec<usize>, f64, usize)> = None;
            for pos in 0..k {
                let mut reduced: Vec<usize> = x.clone();
                reduced.remove(pos);
                let pick = engine.most_significant_term(&reduced)?;
                reduced.push(pick.index);
                let better = match &best_swap {
                    None => true,
                    Some((_, bj, _)) => pick.j > *bj,
                };
                if better {
                    best_swap = Some((reduced, pick.j, pick.index));
                }
            }
            let Some((candidate, candidate_j, added)) = best_swap else {
                break;
            };
            let accepted = improves(candidate_j, j_x);
            if accepted {
                x = candidate;
                j_x = candidate_j;
                memory.store(k, x.clone(), j_x);
            }
            trace.push(TraceStep {
                step: 0,
                phase: Phase::Swap,
                xi_step: k,
                subset: x.clone(),
                j: j_x,
                improved: accepted,
                zero_gain: false,
                f1: None,
                f2: None,
                depth: None,
            });
            if accepted && k > 2 {
                protected = Some(added);
                continue;
            }
            break;
        }

        // Cycle guard: the same state without memory progress cannot
        // recur productively.
        let mut state = x.clone();
        state.sort_unstable();
        match seen.insert((k, state), memory.version) {
            Some(version) if version == memory.version => force_forward = true,
            _ => {}
        }
    }

    Ok(SearchResult {
        subset: TermSubset::new(x)?.with_criterion(j_x),
        trace,
        budget_exceeded,
        zero_gain_additions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressor::build_regressors;
    use crate::systems::builtin_system;
    use crate::term::enumerate_terms;

    fn engine_for<'a>(
        matrix: &'a crate::regressor::RegressorMatrix,
        split: usize,
    ) -> ErrEngine<'a> {
        let est = matrix.estimation_rows(split).unwrap();
        ErrEngine::new(matrix, est).unwrap()
    }

    #[test]
    fn noise_free_two_term_system_is_recovered_exactly() {
        let sys = builtin_system("S2").unwrap();
        let mut model = sys.narx_model().unwrap().clone();
        model.terms.truncate(2);
        model.coefficients.truncate(2);
        let u = crate::signal::generate_signal(&sys.excitation, 400, 3, crate::signal::SeedStream::Input).unwrap();
        let y = crate::simulate::simulate_narx(&model, &u, &vec![0.0; 400]).unwrap();
        let data = crate::dataset::Dataset::new(u, y, 300).unwrap();
        let candidates = enumerate_terms(&sys.model_spec).unwrap();
        let matrix = build_regressors(&candidates, &data).unwrap();
        let engine = engine_for(&matrix, 300);
        let result = osf_search(&engine, &SearchConfig::new(2)).unwrap();
        let expected = candidates.indices_of(&model.terms).unwrap();
        let mut found = result.subset.sorted();
        found.sort_unstable();
        let mut want = expected.clone();
        want.sort_unstable();
        assert_eq!(found, want);
        assert!(result.j() >= 1.0 - 1e-9);
    }

    #[test]
    fn oif_swap_is_a_no_op_on_the_true_subset() {
        // Noise-free S5: once the true terms are found the swap phase must
        // leave the subset unchanged.
        let sys = builtin_system("S5").unwrap();
        let model = sys.narx_model().unwrap();
        let u = crate::signal::generate_signal(&sys.excitation, 600, 9, crate::signal::SeedStream::Input).unwrap();
        let y = crate::simulate::simulate_narx(model, &u, &vec![0.0; 600]).unwrap();
        let data = crate::dataset::Dataset::new(u, y, 450).unwrap();
        let candidates = enumerate_terms(&sys.model_spec).unwrap();
        let matrix = build_regressors(&candidates, &data).unwrap();
        let engine = engine_for(&matrix, 450);
        let result = oif_search(&engine, &SearchConfig::new(4)).unwrap();
        let mut found = result.subset.sorted();
        found.sort_unstable();
        let mut want = candidates.indices_of(&model.terms).unwrap();
        want.sort_unstable();
        assert_eq!(found, want);
        // Any swap steps recorded on the final subset must be rejections.
        let last_swap = result
            .trace
            .steps
            .iter()
            .rev()
            .find(|s| s.phase == Phase::Swap);
        if let Some(s) = last_swap {
            assert!(!s.improved || s.j >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn floating_final_j_is_at_least_greedy_j() {
        let sys = builtin_system("S1").unwrap();
        let candidates = enumerate_terms(&sys.model_spec).unwrap();
        for seed in 0..5 {
            let data = sys.generate(500, 350, seed).unwrap();
            let matrix = build_regressors(&candidates, &data).unwrap();
            let engine = engine_for(&matrix, 350);
            let xi = 6;
            let greedy = super::super::ofr::ofr_err(&engine, xi, 10_000).unwrap();
            let floating = osf_search(&engine, &SearchConfig::new(xi)).unwrap();
            assert!(
                floating.j() >= greedy.j() - 1e-12,
                "seed {seed}: OSF {} < OFR {}",
                floating.j(),
                greedy.j()
            );
            assert_eq!(floating.subset.len(), xi);
            assert!(floating.trace.steps.iter().all(|s| s.xi_step <= xi));
        }
    }

    #[test]
    fn per_cardinality_best_is_monotone_across_the_trace() {
        let sys = builtin_system("S1").unwrap();
        let candidates = enumerate_terms(&sys.model_spec).unwrap();
        let data = sys.generate(600, 420, 11).unwrap();
        let matrix = build_regressors(&candidates, &data).unwrap();
        let engine = engine_for(&matrix, 420);
        let result = oif_search(&engine, &SearchConfig::new(7)).unwrap();
        let mut best_seen: std::collections::HashMap<usize, f64> = Default::default();
        for s in &result.trace.steps {
            let entry = best_seen.entry(s.xi_step).or_insert(f64::NEG_INFINITY);
            if s.improved {
                assert!(s.j > *entry, "improvement step did not improve: {s:?}");
            }
            *entry = entry.max(s.j);
        }
    }
}
