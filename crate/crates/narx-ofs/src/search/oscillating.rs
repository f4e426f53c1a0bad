//! The oscillating search: greedy initialization at the target
//! cardinality, then alternating down swings (drop to ξ−o terms, refill
//! to ξ) and up swings (grow to ξ+o, trim back), accepting only strict
//! improvements. The depth `o` starts at 1, grows by one whenever two
//! consecutive swings fail, resets to 1 on any improvement, and the
//! search stops when an increment would push `o` past the configured
//! maximum.
//!
//! In sequential mode each half-swing is itself a small floating search
//! over the full candidate pool: reduction interleaves least-significant
//! removals with conditional re-additions, growth interleaves
//! most-significant additions with conditional removals, both under
//! per-cardinality best-subset memory. That is what lets a single swing
//! at depth 1 walk a poor subset onto an entirely different one. In
//! exhaustive mode the swing exchanges exactly `o` terms, evaluated over
//! all combinations within the budget.

use crate::criterion::{improves, ErrEngine, SubsetMode, TermSubset};
use crate::error::Result;

use super::trace::{Phase, SearchTrace, TraceStep};
use super::{SearchConfig, SearchResult};

struct Ladder {
    best: Vec<Option<(Vec<usize>, f64)>>,
}

impl Ladder {
    fn new(max_len: usize) -> Self {
        Ladder { best: vec![None; max_len + 1] }
    }

    fn accepts(&self, len: usize, j: f64) -> bool {
        match &self.best[len] {
            None => true,
            Some((_, stored)) => improves(j, *stored),
        }
    }

    fn store(&mut self, len: usize, subset: Vec<usize>, j: f64) {
        self.best[len] = Some((subset, j));
    }

    fn restore(&self, len: usize) -> (Vec<usize>, f64) {
        self.best[len].clone().expect("restore target stored on first visit")
    }
}

/// Floating reduction from `start` to `target < |start|` terms:
/// least-significant removals with conditional re-additions from the
/// whole pool, under per-cardinality best memory.
fn reduce_floating(
    engine: &ErrEngine<'_>,
    start: &[usize],
    start_j: f64,
    target: usize,
) -> Result<(Vec<usize>, f64)> {
    let start_len = start.len();
    debug_assert!(target >= 1 && target < start_len);
    let mut ladder = Ladder::new(start_len);
    let mut x = start.to_vec();
    ladder.store(start_len, x.clone(), start_j);
    loop {
        let removal = engine.least_significant_term(&x)?;
        let shrunk = x.len() - 1;
        let just_removed = if ladder.accepts(shrunk, removal.j) {
            x.retain(|&i| i != removal.index);
            ladder.store(shrunk, x.clone(), removal.j);
            Some(removal.index)
        } else {
            let (restored, _) = ladder.restore(shrunk);
            x = restored;
            None
        };
        let mut first = true;
        while x.len() < start_len {
            let addition = engine.most_significant_term(&x)?;
            if first && Some(addition.index) == just_removed {
                break;
            }
            let grown = x.len() + 1;
            if !ladder.accepts(grown, addition.j) {
                break;
            }
            x.push(addition.index);
            ladder.store(grown, x.clone(), addition.j);
            first = false;
        }
        if x.len() == target {
            return Ok(ladder.restore(target));
        }
    }
}

/// Floating growth from `start` to `target > |start|` terms:
/// most-significant additions with conditional removals (any member),
/// floored so the subset never shrinks below `|start|`.
fn grow_floating(
    engine: &ErrEngine<'_>,
    start: &[usize],
    start_j: f64,
    target: usize,
) -> Result<(Vec<usize>, f64)> {
    let start_len = start.len();
    debug_assert!(target > start_len && target <= engine.n());
    let mut ladder = Ladder::new(target);
    let mut x = start.to_vec();
    ladder.store(start_len, x.clone(), start_j);
    loop {
        let addition = engine.most_significant_term(&x)?;
        let grown = x.len() + 1;
        let just_added = if ladder.accepts(grown, addition.j) {
            x.push(addition.index);
            ladder.store(grown, x.clone(), addition.j);
            Some(addition.index)
        } else {
            let (restored, _) = ladder.restore(grown);
            x = restored;
            None
        };
        let mut first = true;
        while x.len() > start_len {
            let removal = engine.least_significant_term(&x)?;
            if first && Some(removal.index) == just_added {
                break;
            }
            let shrunk = x.len() - 1;
            if !ladder.accepts(shrunk, removal.j) {
                break;
            }
            x.retain(|&i| i != removal.index);
            ladder.store(shrunk, x.clone(), removal.j);
            first = false;
        }
        if x.len() == target {
            return Ok(ladder.restore(target));
        }
    }
}

/// One half of a swing: move from `x` (cardinality ξ) to `target`
/// cardinality, by the configured mode.
fn half_swing(
    engine: &ErrEngine<'_>,
    x: &[usize],
    j_x: f64,
    target: usize,
    mode: SubsetMode,
) -> Result<(Vec<usize>, f64)> {
    match mode {
        SubsetMode::Sequential => {
            if target < x.len() {
                reduce_floating(engine, x, j_x, target)
            } else {
                grow_floating(engine, x, j_x, target)
            }
        }
        SubsetMode::Exhaustive => {
            if target < x.len() {
                let o = x.len() - target;
                let (removed, j) = engine.least_significant_subset(o, x, mode)?;
                let kept: Vec<usize> =
                    x.iter().copied().filter(|i| !removed.contains(i)).collect();
                Ok((kept, j))
            } else {
                let o = target - x.len();
                let (added, j) = engine.most_significant_subset(o, x, mode)?;
                let mut grown = x.to_vec();
                grown.extend(added);
                Ok((grown, j))
            }
        }
    }
}

pub fn o2s_search(engine: &ErrEngine<'_>, config: &SearchConfig) -> Result<SearchResult> {
    config.validate(engine.n())?;
    let n = engine.n();
    let xi = config.xi;
    let o_max = config.o_max(n);
    let mode = config.subset_mode;

    // Initialization: ξ greedy forward inclusions.
    let mut x: Vec<usize> = Vec::with_capacity(xi);
    for _ in 0..xi {
        let pick = engine.most_significant_term(&x)?;
        x.push(pick.index);
    }
    let mut j_x = engine.j(&x)?;
    let mut trace = SearchTrace::default();
    trace.push(TraceStep {
        step: 0,
        phase: Phase::Init,
        xi_step: xi,
        subset: x.clone(),
        j: j_x,
        improved: true,
        zero_gain: false,
        f1: Some(false),
        f2: Some(false),
        depth: None,
    });

    let mut o = 1usize;
    let mut f1 = false;
    let mut f2 = false;
    let mut budget_exceeded = false;

    'swings: loop {
        // Down swing: remove o, then refill.
        if trace.len() >= config.step_budget {
            budget_exceeded = true;
            break;
        }
        let swing_depth = o;
        if swing_depth < xi {
            let (reduced, j_reduced) = half_swing(engine, &x, j_x, xi - swing_depth, mode)?;
            trace.push(TraceStep {
                step: 0,
                phase: Phase::DownSwing,
                xi_step: xi - swing_depth,
                subset: reduced.clone(),
                j: j_reduced,
                improved: false,
                zero_gain: false,
                f1: Some(f1),
                f2: Some(f2),
                depth: Some(swing_depth),
            });
            let (candidate, candidate_j) = half_swing(engine, &reduced, j_reduced, xi, mode)?;
            if improves(candidate_j, j_x) {
                x = candidate;
                j_x = candidate_j;
                f1 = false;
                o = 1;
            } else {
                f1 = true;
            }
        } else {
            // Depth exceeds what the subset can give up; counts as a
            // failed swing.
            f1 = true;
        }
        trace.push(TraceStep {
            step: 0,
            phase: Phase::DownSwing,
            xi_step: xi,
            subset: x.clone(),
            j: j_x,
            improved: !f1,
            zero_gain: false,
            f1: Some(f1),
            f2: Some(f2),
            depth: Some(swing_depth),
        });
        if f1 && f2 {
            o += 1;
            if o > o_max {
                break 'swings;
            }
        }

        // Up swing: grow by o, then trim back.
        if trace.len() >= config.step_budget {
            budget_exceeded = true;
            break;
        }
        let swing_depth = o;
        if swing_depth <= n - xi {
            let (grown, j_grown) = half_swing(engine, &x, j_x, xi + swing_depth, mode)?;
            trace.push(TraceStep {
                step: 0,
                phase: Phase::UpSwing,
                xi_step: xi + swing_depth,
                subset: grown.clone(),
                j: j_grown,
                improved: false,
                zero_gain: false,
                f1: Some(f1),
                f2: Some(f2),
                depth: Some(swing_depth),
            });
            let (candidate, candidate_j) = half_swing(engine, &grown, j_grown, xi, mode)?;
            if improves(candidate_j, j_x) {
                x = candidate;
                j_x = candidate_j;
                f2 = false;
                o = 1;
            } else {
                f2 = true;
            }
        } else {
            f2 = true;
        }
        trace.push(TraceStep {
            step: 0,
            phase: Phase::UpSwing,
            xi_step: xi,
            subset: x.clone(),
            j: j_x,
            improved: !f2,
            zero_gain: false,
            f1: Some(f1),
            f2: Some(f2),
            depth: Some(swing_depth),
        });
        if f1 && f2 {
            o += 1;
            if o > o_max {
                break 'swings;
            }
        }
    }

    Ok(SearchResult {
        subset: TermSubset::new(x)?.with_criterion(j_x),
        trace,
        budget_exceeded,
        zero_gain_additions: 0,
    })
}
