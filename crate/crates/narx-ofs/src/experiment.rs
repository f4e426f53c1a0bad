//! End-to-end experiment orchestration: data, sweep, final fit, outcome
//! classification, and a persisted artifact bundle.
//!
//! A run directory always ends up containing either the full bundle —
//! `dataset.csv` + `dataset.json`, per-cardinality traces under
//! `traces/`, `trace.jsonl` for the chosen cardinality, `sweep.csv` /
//! `sweep.json`, `model.json`, `outcome.json` when ground truth is known,
//! and `metadata.json` — or an `error.json` describing the failed stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::criterion::{SubsetMode, TermSubset, EXHAUSTIVE_BUDGET, IMPROVEMENT_EPS};
use crate::dataset::{read_dataset, write_dataset, Dataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::order::{CriterionKind, CriterionSpec, PredictionMode, SweepReport, Sweeper};
use crate::ortho::RANK_TOLERANCE;
use crate::outcome::{classify_outcome, Outcome};
use crate::search::{Algorithm, SearchConfig};
use crate::systems::{builtin_system, BuiltinSystem, SystemKind};
use crate::term::{enumerate_terms, CandidateSet, ModelSpec};

fn default_xi_min() -> usize {
    2
}
fn default_xi_max() -> usize {
    20
}
fn default_n() -> usize {
    1000
}
fn default_split() -> usize {
    700
}
fn default_budget() -> usize {
    10_000
}
fn default_algorithm() -> Algorithm {
    Algorithm::Oif
}
fn default_criterion() -> CriterionKind {
    CriterionKind::Bic
}
fn default_prediction() -> PredictionMode {
    PredictionMode::OneStep
}
fn default_subset_mode() -> SubsetMode {
    SubsetMode::Sequential
}
fn default_depth_fraction() -> f64 {
    0.25
}

/// Everything a run needs; every field has a recorded default and all of
/// it is echoed into the bundle metadata.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Builtin system name (`S1`..`S8`, `duffing`).
    pub system: Option<String>,
    /// Alternatively, a dataset CSV (with its JSON sidecar) to load.
    pub dataset: Option<PathBuf>,
    /// Candidate-set specification; defaults to the system's.
    pub model_spec: Option<ModelSpec>,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    /// Fixed target cardinality; when absent the interval is swept.
    pub xi: Option<usize>,
    #[serde(default = "default_xi_min")]
    pub xi_min: usize,
    #[serde(default = "default_xi_max")]
    pub xi_max: usize,
    /// Automatic interval extension target when the arg-min lands on
    /// the boundary.
    pub extend_to: Option<usize>,
    #[serde(default = "default_criterion")]
    pub criterion: CriterionKind,
    #[serde(default = "default_prediction")]
    pub prediction_mode: PredictionMode,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_split")]
    pub split_index: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_subset_mode")]
    pub subset_mode: SubsetMode,
    #[serde(default = "default_depth_fraction")]
    pub max_depth_fraction: f64,
    pub max_depth: Option<usize>,
    #[serde(default = "default_budget")]
    pub step_budget: usize,
    /// Bundle directory; nothing is persisted when absent.
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn for_system(name: &str) -> Self {
        ExperimentConfig {
            system: Some(name.to_string()),
            dataset: None,
            model_spec: None,
            algorithm: default_algorithm(),
            xi: None,
            xi_min: default_xi_min(),
            xi_max: default_xi_max(),
            extend_to: None,
            criterion: default_criterion(),
            prediction_mode: default_prediction(),
            n: default_n(),
            split_index: default_split(),
            seed: 0,
            subset_mode: default_subset_mode(),
            max_depth_fraction: default_depth_fraction(),
            max_depth: None,
            step_budget: default_budget(),
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.system.is_none() && self.dataset.is_none() {
            return Err(Error::Config("need either a system name or a dataset path".into()));
        }
        if self.system.is_some() && self.dataset.is_some() {
            return Err(Error::Config("system name and dataset path are exclusive".into()));
        }
        let (lo, hi) = self.interval();
        if lo > hi {
            return Err(Error::Config(format!("xi_min {lo} exceeds xi_max {hi}")));
        }
        if lo < 2 {
            return Err(Error::Config(format!("xi_min {lo} must be at least 2")));
        }
        if let Some(target) = self.extend_to {
            if target <= hi {
                return Err(Error::Config(format!(
                    "extend_to {target} must exceed xi_max {hi}"
                )));
            }
        }
        if self.dataset.is_none() && self.split_index >= self.n {
            return Err(Error::Config(format!(
                "split index {} outside the {}-sample record",
                self.split_index, self.n
            )));
        }
        Ok(())
    }

    /// The swept interval: a fixed ξ collapses it to one point.
    pub fn interval(&self) -> (usize, usize) {
        match self.xi {
            Some(xi) => (xi, xi),
            None => (self.xi_min, self.xi_max),
        }
    }

    fn search_config(&self) -> SearchConfig {
        SearchConfig {
            xi: 2, // set per run
            max_depth_fraction: self.max_depth_fraction,
            max_depth: self.max_depth,
            subset_mode: self.subset_mode,
            step_budget: self.step_budget,
        }
    }
}

/// The in-memory result of a run.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub report: SweepReport,
    pub outcome: Option<Outcome>,
    pub candidates: CandidateSet,
    pub bundle_dir: Option<PathBuf>,
    /// True when any per-cardinality search hit its step budget.
    pub budget_exceeded: bool,
}

/// Runs a full experiment; when `out_dir` is set, persists the bundle
/// (or an `error.json` naming the failed stage).
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    match run_stages(config) {
        Ok(output) => Ok(output),
        Err((stage, err)) => {
            if let Some(dir) = &config.out_dir {
                let _ = std::fs::create_dir_all(dir);
                let record = json!({
                    "stage": stage,
                    "error": err.to_string(),
                });
                let _ = std::fs::write(
                    dir.join("error.json"),
                    serde_json::to_string_pretty(&record).unwrap_or_default(),
                );
            }
            Err(err)
        }
    }
}

type Staged<T> = std::result::Result<T, (&'static str, Error)>;

fn stage<T>(name: &'static str, r: Result<T>) -> Staged<T> {
    r.map_err(|e| (name, e))
}

fn run_stages(config: &ExperimentConfig) -> Staged<ExperimentOutput> {
    stage("config", config.validate())?;
    let mut system: Option<BuiltinSystem> = match &config.system {
        Some(name) => Some(stage("config", builtin_system(name))?),
        None => None,
    };

    // Data: generate from the system or load a persisted record.
    let (data, loaded_meta): (Dataset, Option<DatasetMeta>) = match (&system, &config.dataset) {
        (Some(sys), None) => (
            stage("data", sys.generate(config.n, config.split_index, config.seed))?,
            None,
        ),
        (None, Some(path)) => {
            let (data, meta) = stage("data", read_dataset(path))?;
            // A persisted benchmark dataset still knows which system
            // produced it; recover it for ground truth and metadata
            // (never for regeneration).
            if let Some(name) = &meta.system {
                system = builtin_system(name).ok();
            }
            (data, Some(meta))
        }
        _ => unreachable!("validated above"),
    };

    let model_spec = config
        .model_spec
        .or_else(|| system.as_ref().map(|s| s.model_spec))
        .or_else(|| loaded_meta.as_ref().and_then(|m| m.model_spec))
        .ok_or_else(|| ("config", Error::Config("no model spec available".into())))?;
    let candidates = stage("terms", enumerate_terms(&model_spec))?;

    let (xi_min, xi_max) = config.interval();
    if xi_max >= candidates.len() {
        return Err((
            "config",
            Error::Config(format!(
                "xi_max {xi_max} must stay below the candidate count {}",
                candidates.len()
            )),
        ));
    }

    if let Some(dir) = &config.out_dir {
        stage("persist", std::fs::create_dir_all(dir).map_err(Error::from))?;
        let meta = DatasetMeta {
            system: system.as_ref().map(|s| s.name.clone()).or_else(|| {
                loaded_meta.as_ref().and_then(|m| m.system.clone())
            }),
            seed: data.seed().cloned(),
            split_index: data.split_index(),
            n: data.len(),
            model_spec: Some(model_spec),
        };
        stage("persist", write_dataset(&data, &dir.join("dataset.csv"), &meta))?;
    }

    let crit = CriterionSpec { kind: config.criterion, prediction_mode: config.prediction_mode };
    let sweeper = stage("sweep", Sweeper::new(&candidates, &data))?
        .with_config(config.search_config());
    let mut report = stage(
        "sweep",
        sweeper.sweep(config.algorithm, xi_min, xi_max, crit),
    )?;
    if report.boundary_flag {
        if let Some(target) = config.extend_to {
            report = stage("sweep", sweeper.extend_interval(&report, target))?;
        }
    }

    // Ground truth: builtin truth terms, resolved in the candidate
    // language.
    let truth: Option<TermSubset> = match system.as_ref().and_then(|s| s.true_terms.as_ref()) {
        Some(terms) => Some(stage(
            "classify",
            candidates
                .indices_of(terms)
                .and_then(TermSubset::new),
        )?),
        None => None,
    };
    let outcome = match (&truth, report.chosen()) {
        (Some(truth), Some(entry)) => {
            Some(stage("classify", classify_outcome(&entry.subset, truth))?)
        }
        _ => None,
    };

    let budget_exceeded = report.entries.values().any(|e| e.budget_exceeded);

    if let Some(dir) = &config.out_dir {
        stage(
            "persist",
            persist_bundle(dir, config, &report, &candidates, &outcome, &system),
        )?;
    }

    Ok(ExperimentOutput {
        report,
        outcome,
        candidates,
        bundle_dir: config.out_dir.clone(),
        budget_exceeded,
    })
}

/// JSON form of a sweep report with term strings alongside indices.
pub fn sweep_report_json(report: &SweepReport, candidates: &CandidateSet) -> serde_json::Value {
    let entries: Vec<_> = report
        .entries
        .values()
        .map(|entry| {
            json!({
                "xi": entry.xi,
                "J": entry.j,
                "E": entry.e,
                "AIC": entry.aic,
                "BIC": entry.bic,
                "FPE": entry.fpe,
                "LILC": entry.lilc,
                "subset": entry.subset.indices(),
                "terms": candidates.render(entry.subset.indices()),
                "coefficients": entry.model.theta,
                "rss": entry.model.rss,
                "rank_deficient": entry.model.rank_deficient,
                "budget_exceeded": entry.budget_exceeded,
            })
        })
        .collect();
    json!({
        "algorithm": report.algorithm.as_str(),
        "criterion": report.criterion.kind.name(),
        "prediction_mode": report.criterion.prediction_mode,
        "xi_min": report.xi_min,
        "xi_max": report.xi_max,
        "chosen_xi": report.chosen_xi,
        "boundary_flag": report.boundary_flag,
        "entries": entries,
        "failures": report.failures,
    })
}

fn persist_bundle(
    dir: &Path,
    config: &ExperimentConfig,
    report: &SweepReport,
    candidates: &CandidateSet,
    outcome: &Option<Outcome>,
    system: &Option<BuiltinSystem>,
) -> Result<()> {
    let traces_dir = dir.join("traces");
    std::fs::create_dir_all(&traces_dir)?;
    for (xi, entry) in &report.entries {
        entry
            .trace
            .write_jsonl(&traces_dir.join(format!("trace_xi{xi:02}.jsonl")), candidates)?;
    }
    if let Some(entry) = report.chosen() {
        entry.trace.write_jsonl(&dir.join("trace.jsonl"), candidates)?;
    }

    std::fs::write(dir.join("sweep.csv"), report.to_csv())?;
    std::fs::write(
        dir.join("sweep.json"),
        serde_json::to_string_pretty(&sweep_report_json(report, candidates))?,
    )?;

    if let Some(entry) = report.chosen() {
        let model = json!({
            "xi": entry.xi,
            "terms": candidates.render(entry.model.subset.indices()),
            "indices": entry.model.subset.indices(),
            "coefficients": entry.model.theta,
            "rss": entry.model.rss,
            "rank_deficient": entry.model.rank_deficient,
            "J": entry.j,
            "E": entry.e,
        });
        std::fs::write(dir.join("model.json"), serde_json::to_string_pretty(&model)?)?;
    }

    if let Some(outcome) = outcome {
        let record = json!({
            "label": outcome.label.as_str(),
            "success": outcome.label.is_success(),
            "spurious": candidates.render(&outcome.spurious),
            "missing": candidates.render(&outcome.missing),
        });
        std::fs::write(dir.join("outcome.json"), serde_json::to_string_pretty(&record)?)?;
    }

    let metadata = json!({
        "crate": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "defaults": {
            "rank_tolerance": RANK_TOLERANCE,
            "improvement_eps": IMPROVEMENT_EPS,
            "exhaustive_budget": EXHAUSTIVE_BUDGET,
            "prng": "chacha8 (input stream 0, noise stream 1)",
            "tie_rule": "lowest canonical term index",
            "valid_rows": "first max-lag rows dropped",
            "initial_conditions": "zero",
            "rk4_substeps": system.as_ref().and_then(|s| match &s.kind {
                SystemKind::Duffing(d) => Some(d.substeps),
                SystemKind::Narx(_) => None,
            }),
        },
        "system": system.as_ref().map(|s| s.name.clone()),
        "seed": config.seed,
    });
    std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&metadata)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_interval_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::for_system("S2");
        config.xi_min = 10;
        config.xi_max = 5;
        config.out_dir = Some(dir.path().join("run"));
        let err = run_experiment(&config).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(!dir.path().join("run").join("dataset.csv").exists());
    }

    #[test]
    fn bundle_is_complete_and_replayable() {
        let dir = tempfile::tempdir().unwrap();
        let run_dir = dir.path().join("run");
        let mut config = ExperimentConfig::for_system("S2");
        config.n = 400;
        config.split_index = 280;
        config.seed = 12;
        config.xi_min = 2;
        config.xi_max = 6;
        config.out_dir = Some(run_dir.clone());
        let output = run_experiment(&config).unwrap();
        for file in ["dataset.csv", "dataset.json", "sweep.csv", "sweep.json", "trace.jsonl", "model.json", "metadata.json", "outcome.json"] {
            assert!(run_dir.join(file).exists(), "missing {file}");
        }
        // Replay from the persisted dataset: identical sweep table.
        let mut replay = config.clone();
        replay.system = None;
        replay.dataset = Some(run_dir.join("dataset.csv"));
        replay.out_dir = None;
        let replayed = run_experiment(&replay).unwrap();
        assert_eq!(output.report.to_csv(), replayed.report.to_csv());
    }
}
