//! Structure selection for polynomial NARX models.
//!
//! A NARX model writes a sampled output as a polynomial in lagged outputs
//! and inputs. Which monomials enter the model — the *structure* — matters
//! far more than their coefficients, and this crate selects that structure
//! from input/output data with orthogonal floating searches driven by the
//! Error-Reduction-Ratio:
//!
//! * [`ofr_err`] — the classical greedy forward-regression baseline;
//! * [`osf_search`] — floating search: forward inclusions with
//!   conditional backtracking;
//! * [`oif_search`] — floating search plus term swapping;
//! * [`o2s_search`] — oscillating search over subset exchanges of
//!   adaptive depth.
//!
//! Around the searches sit candidate-set enumeration ([`enumerate_terms`]),
//! benchmark data generation ([`builtin_system`]), model-order selection by
//! information criteria ([`Sweeper`]), outcome classification
//! ([`classify_outcome`]) and a reproducible experiment harness
//! ([`run_experiment`]).
//!
//! ```
//! use narx_ofs::{
//!     builtin_system, enumerate_terms, osf_search, ErrEngine, SearchConfig,
//!     build_regressors,
//! };
//!
//! // Identify the 4-term benchmark system S5 from 1000 simulated samples.
//! let system = builtin_system("S5")?;
//! let data = system.generate(1000, 700, 42)?;
//! let candidates = enumerate_terms(&system.model_spec)?;
//! let matrix = build_regressors(&candidates, &data)?;
//! let engine = ErrEngine::new(&matrix, matrix.estimation_rows(700)?)?;
//! let result = osf_search(&engine, &SearchConfig::new(4))?;
//! assert_eq!(result.subset.len(), 4);
//! # Ok::<(), narx_ofs::Error>(())
//! ```
//!
//! The `book/` directory of the repository walks through the concepts
//! chapter by chapter; its code snippets compile and run as doc-tests of
//! this crate.

pub mod criterion;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod freq;
pub mod order;
pub mod ortho;
pub mod outcome;
pub mod regressor;
pub mod search;
pub mod signal;
pub mod simulate;
pub mod systems;
pub mod term;

pub use criterion::{
    ErrEngine, FittedModel, GramTables, JDetail, Pick, SubsetMode, TermSubset,
    EXHAUSTIVE_BUDGET, IMPROVEMENT_EPS, TIE_RELATIVE_WINDOW,
};
pub use dataset::{read_dataset, write_dataset, Dataset, DatasetMeta};
pub use error::{Error, Result};
pub use experiment::{run_experiment, sweep_report_json, ExperimentConfig, ExperimentOutput};
pub use freq::{term_frequency, FrequencyTable};
pub use order::{
    info_criterion, prediction_error, sweep, CriterionKind, CriterionSpec, PredictionMode,
    SweepEntry, SweepReport, Sweeper,
};
pub use ortho::{orthogonalize, OrthoDecomposition, RANK_TOLERANCE};
pub use outcome::{classify_outcome, Outcome, OutcomeLabel};
pub use regressor::{build_regressors, RegressorMatrix};
pub use search::{
    o2s_search, ofr_err, oif_search, osf_search, Algorithm, Phase, SearchConfig, SearchResult,
    SearchTrace, TraceStep,
};
pub use signal::{generate_signal, iir_filter, SeedRecord, SeedStream, SignalSpec};
pub use simulate::{simulate_duffing, simulate_narx, DuffingSpec, TrueModel, OVERFLOW_GUARD};
pub use systems::{builtin_system, BuiltinSystem, SystemKind, SYSTEM_NAMES};
pub use term::{count_terms, enumerate_terms, CandidateSet, Factor, ModelSpec, Signal, TermSpec};

#[cfg(doctest)]
mod book {
    //! The guide chapters double as doc-tests, keeping the book's code in
    //! sync with the crate.
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub mod $name {}
        };
    }
    chapter!(narx_models, "../../../book/src/narx-models.md");
    chapter!(orthogonal_err, "../../../book/src/orthogonal-err.md");
    chapter!(floating_search, "../../../book/src/floating-search.md");
    chapter!(order_selection, "../../../book/src/order-selection.md");
    chapter!(benchmarks, "../../../book/src/benchmarks.md");
}
