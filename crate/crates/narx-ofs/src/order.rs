//! Model-order selection: validation prediction error, information
//! criteria, and the cardinality sweep.
//!
//! For each cardinality ξ in a search interval the chosen algorithm
//! identifies a subset, coefficients are fitted on the estimation rows,
//! and the validation mean squared error E feeds four information
//! criteria:
//!
//! ```text
//! AIC  = N_v ln E + ϱ ξ              (ϱ = 2 by default)
//! BIC  = N_v ln E + ξ ln N_v
//! FPE  = N_v ln E + N_v ln((N_v + ξ)/(N_v − ξ))
//! LILC = N_v ln E + 2 ξ ln ln N_v
//! ```
//!
//! The model order is the arg-min of the configured criterion (BIC by
//! default). When the minimum sits on the upper boundary of the interval
//! the report carries a boundary flag, the cue to extend the sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use std::sync::Arc;

use crate::criterion::{ErrEngine, FittedModel, GramTables, TermSubset};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::regressor::{build_regressors, RegressorMatrix};
use crate::search::{Algorithm, SearchConfig, SearchTrace};
use crate::simulate::OVERFLOW_GUARD;
use crate::term::CandidateSet;

/// How the validation prediction ŷ is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// ŷ(k) from measured lagged data.
    OneStep,
    /// ŷ(k) from previously predicted outputs, fed back recursively.
    FreeRun,
}

/// Which information criterion ranks the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Aic { rho: f64 },
    Bic,
    Fpe,
    Lilc,
}

impl CriterionKind {
    pub fn aic() -> Self {
        CriterionKind::Aic { rho: 2.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CriterionKind::Aic { .. } => "AIC",
            CriterionKind::Bic => "BIC",
            CriterionKind::Fpe => "FPE",
            CriterionKind::Lilc => "LILC",
        }
    }
}

impl std::str::FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AIC" => Ok(CriterionKind::aic()),
            "BIC" => Ok(CriterionKind::Bic),
            "FPE" => Ok(CriterionKind::Fpe),
            "LILC" => Ok(CriterionKind::Lilc),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}

/// Criterion kind plus the prediction mode feeding E.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub kind: CriterionKind,
    pub prediction_mode: PredictionMode,
}

impl Default for CriterionSpec {
    fn default() -> Self {
        CriterionSpec { kind: CriterionKind::Bic, prediction_mode: PredictionMode::OneStep }
    }
}

/// Evaluates one information criterion. E = 0 yields negative infinity
/// (the model explains validation data exactly); ξ ≥ N_v under FPE is a
/// domain error.
pub fn info_criterion(e: f64, xi: usize, n_v: usize, kind: CriterionKind) -> Result<f64> {
    if e < 0.0 {
        return Err(Error::Domain(format!("negative prediction error {e}")));
    }
    if n_v == 0 {
        return Err(Error::Domain("empty validation partition".into()));
    }
    let nv = n_v as f64;
    if e == 0.0 {
        // ln(0) propagates as the negative-infinity sentinel; make the
        // degenerate case visible.
        eprintln!("warning: zero prediction error; criterion value is -inf");
    }
    let fit = nv * e.ln();
    let xi_f = xi as f64;
    let value = match kind {
        CriterionKind::Aic { rho } => {
            if rho <= 0.0 {
                return Err(Error::Domain(format!("AIC weight {rho} must be positive")));
            }
            fit + rho * xi_f
        }
        CriterionKind::Bic => fit + nv.ln() * xi_f,
        CriterionKind::Fpe => {
            if xi >= n_v {
                return Err(Error::Domain(format!("FPE needs xi < N_v, got {xi} >= {n_v}")));
            }
            fit + nv * ((nv + xi_f) / (nv - xi_f)).ln()
        }
        CriterionKind::Lilc => fit + 2.0 * xi_f * nv.ln().ln(),
    };
    Ok(value)
}

/// Mean squared one-step or free-run prediction error over the
/// validation rows.
pub fn prediction_error(
    model: &FittedModel,
    candidates: &CandidateSet,
    data: &Dataset,
    mode: PredictionMode,
) -> Result<f64> {
    let split = data.split_index();
    let n_v = data.validation_len();
    if n_v == 0 {
        return Err(Error::InsufficientData("empty validation partition".into()));
    }
    let indices = model.subset.sorted();
    let terms: Vec<_> = indices.iter().map(|&i| candidates.term(i).clone()).collect();
    let u = data.u();
    let y = data.y();
    match mode {
        PredictionMode::OneStep => {
            let mut sum = 0.0;
            for t in split..data.len() {
                let mut pred = 0.0;
                for (term, theta) in terms.iter().zip(&model.theta) {
                    pred += theta * term.eval(u, y, t);
                }
                let e = y[t] - pred;
                sum += e * e;
            }
            Ok(sum / n_v as f64)
        }
        PredictionMode::FreeRun => {
            // Measured history up to the split, predictions after it.
            let mut y_hat = y[..split].to_vec();
            let mut sum = 0.0;
            for t in split..data.len() {
                let mut pred = 0.0;
                for (term, theta) in terms.iter().zip(&model.theta) {
                    pred += theta * term.eval(u, &y_hat, t);
                }
                if !pred.is_finite() || pred.abs() > OVERFLOW_GUARD {
                    return Err(Error::PredictionDiverged {
                        index: t - split,
                        partial_e: sum / (t - split).max(1) as f64,
                    });
                }
                y_hat.push(pred);
                let e = y[t] - pred;
                sum += e * e;
            }
            Ok(sum / n_v as f64)
        }
    }
}

/// One cardinality's results inside a sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepEntry {
    pub xi: usize,
    pub subset: TermSubset,
    pub model: FittedModel,
    pub j: f64,
    pub e: f64,
    pub aic: f64,
    pub bic: f64,
    pub fpe: f64,
    pub lilc: f64,
    #[serde(skip)]
    pub trace: SearchTrace,
    pub budget_exceeded: bool,
}

impl SweepEntry {
    pub fn criterion_value(&self, kind: CriterionKind) -> f64 {
        match kind {
            CriterionKind::Aic { .. } => self.aic,
            CriterionKind::Bic => self.bic,
            CriterionKind::Fpe => self.fpe,
            CriterionKind::Lilc => self.lilc,
        }
    }
}

/// The family Ω of identified subsets across a cardinality interval,
/// with per-ξ criteria and the chosen model order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub algorithm: Algorithm,
    pub criterion: CriterionSpec,
    pub xi_min: usize,
    pub xi_max: usize,
    pub entries: BTreeMap<usize, SweepEntry>,
    /// Cardinalities whose search or fit failed, with the error text.
    pub failures: BTreeMap<usize, String>,
    pub chosen_xi: Option<usize>,
    /// The arg-min sits on ξ_max: extend the interval.
    pub boundary_flag: bool,
}

impl SweepReport {
    pub fn chosen(&self) -> Option<&SweepEntry> {
        self.chosen_xi.and_then(|xi| self.entries.get(&xi))
    }

    fn select(&mut self) {
        let kind = self.criterion.kind;
        let mut best: Option<(usize, f64)> = None;
        for (&xi, entry) in &self.entries {
            let value = entry.criterion_value(kind);
            let better = match best {
                None => true,
                Some((_, bv)) => value < bv,
            };
            if better {
                best = Some((xi, value));
            }
        }
        self.chosen_xi = best.map(|(xi, _)| xi);
        self.boundary_flag = self.chosen_xi == Some(self.xi_max);
    }

    /// CSV table `xi,J,E,AIC,BIC,FPE,LILC,boundary_flag` (one row per ξ;
    /// failed cardinalities are skipped and listed in `failures`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi,J,E,AIC,BIC,FPE,LILC,boundary_flag\n");
        for (&xi, entry) in &self.entries {
            let boundary = self.boundary_flag && Some(xi) == self.chosen_xi;
            out.push_str(&format!(
                "{},{:.12},{:.16e},{:.8},{:.8},{:.8},{:.8},{}\n",
                xi, entry.j, entry.e, entry.aic, entry.bic, entry.fpe, entry.lilc, boundary
            ));
        }
        out
    }
}

/// Runs searches across a cardinality interval and assembles the report.
/// Owns the shared design matrix so extensions can reuse it.
pub struct Sweeper<'a> {
    candidates: &'a CandidateSet,
    data: &'a Dataset,
    matrix: RegressorMatrix,
    est_rows: usize,
    gram: Arc<GramTables>,
    config_template: SearchConfig,
}

impl<'a> Sweeper<'a> {
    pub fn new(candidates: &'a CandidateSet, data: &'a Dataset) -> Result<Self> {
        let matrix = build_regressors(candidates, data)?;
        let est_rows = matrix.estimation_rows(data.split_index())?;
        let gram = ErrEngine::new(&matrix, est_rows)?.gram_tables();
        Ok(Sweeper {
            candidates,
            data,
            matrix,
            est_rows,
            gram,
            config_template: SearchConfig::new(2),
        })
    }

    /// Overrides the search configuration template (ξ is set per run).
    pub fn with_config(mut self, config: SearchConfig) -> Self {
        self.config_template = config;
        self
    }

    pub fn matrix(&self) -> &RegressorMatrix {
        &self.matrix
    }

    pub fn estimation_rows(&self) -> usize {
        self.est_rows
    }

    fn run_one(
        &self,
        algorithm: Algorithm,
        xi: usize,
        crit: &CriterionSpec,
    ) -> Result<SweepEntry> {
        let engine =
            ErrEngine::new(&self.matrix, self.est_rows)?.with_gram(Arc::clone(&self.gram));
        let mut config = self.config_template;
        config.xi = xi;
        let result = algorithm.run(&engine, &config)?;
        let model = engine.estimate_coefficients(&result.subset)?;
        let e = prediction_error(&model, self.candidates, self.data, crit.prediction_mode)?;
        let n_v = self.data.validation_len();
        Ok(SweepEntry {
            xi,
            j: result.j(),
            subset: result.subset.clone(),
            model,
            e,
            aic: info_criterion(e, xi, n_v, CriterionKind::aic())?,
            bic: info_criterion(e, xi, n_v, CriterionKind::Bic)?,
            fpe: info_criterion(e, xi, n_v, CriterionKind::Fpe)?,
            lilc: info_criterion(e, xi, n_v, CriterionKind::Lilc)?,
            trace: result.trace,
            budget_exceeded: result.budget_exceeded,
        })
    }

    /// Sweeps ξ over `[xi_min, xi_max]`, running the cardinalities in
    /// parallel; per-ξ failures are recorded and the sweep continues.
    pub fn sweep(
        &self,
        algorithm: Algorithm,
        xi_min: usize,
        xi_max: usize,
        crit: CriterionSpec,
    ) -> Result<SweepReport> {
        if xi_min < 2 || xi_min > xi_max || xi_max >= self.candidates.len() {
            return Err(Error::Config(format!(
                "cardinality interval [{xi_min}, {xi_max}] invalid for n = {}",
                self.candidates.len()
            )));
        }
        let mut report = SweepReport {
            algorithm,
            criterion: crit,
            xi_min,
            xi_max,
            entries: BTreeMap::new(),
            failures: BTreeMap::new(),
            chosen_xi: None,
            boundary_flag: false,
        };
        self.fill(&mut report, xi_min, xi_max)?;
        report.select();
        Ok(report)
    }

    /// Extends a report to a larger ξ_max, reusing all prior entries.
    pub fn extend_interval(&self, report: &SweepReport, new_xi_max: usize) -> Result<SweepReport> {
        if new_xi_max <= report.xi_max {
            return Err(Error::Config(format!(
                "extension target {new_xi_max} must exceed current xi_max {}",
                report.xi_max
            )));
        }
        if new_xi_max >= self.candidates.len() {
            return Err(Error::Config(format!(
                "extension target {new_xi_max} must stay below n = {}",
                self.candidates.len()
            )));
        }
        let mut extended = report.clone();
        extended.xi_max = new_xi_max;
        self.fill(&mut extended, report.xi_max + 1, new_xi_max)?;
        extended.select();
        Ok(extended)
    }

    fn fill(&self, report: &mut SweepReport, from: usize, to: usize) -> Result<()> {
        let crit = report.criterion;
        let algorithm = report.algorithm;
        let todo: Vec<usize> =
            (from..=to).filter(|xi| !report.entries.contains_key(xi)).collect();
        let results: Vec<(usize, Result<SweepEntry>)> = todo
            .par_iter()
            .map(|&xi| (xi, self.run_one(algorithm, xi, &crit)))
            .collect();
        for (xi, result) in results {
            match result {
                Ok(entry) => {
                    report.entries.insert(xi, entry);
                }
                Err(err) => {
                    report.failures.insert(xi, err.to_string());
                }
            }
        }
        Ok(())
    }
}

/// Convenience wrapper: one-off sweep without keeping the sweeper.
pub fn sweep(
    algorithm: Algorithm,
    candidates: &CandidateSet,
    data: &Dataset,
    xi_min: usize,
    xi_max: usize,
    crit: CriterionSpec,
) -> Result<SweepReport> {
    Sweeper::new(candidates, data)?.sweep(algorithm, xi_min, xi_max, crit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::builtin_system;
    use crate::term::enumerate_terms;

    #[test]
    fn bic_formula_matches_hand_computation() {
        // 300 ln(0.01) + 5 ln(300)
        let v = info_criterion(0.01, 5, 300, CriterionKind::Bic).unwrap();
        let want = 300.0 * 0.01_f64.ln() + 5.0 * 300.0_f64.ln();
        assert!((v - want).abs() < 1e-9, "BIC {v} vs {want}");
        assert!((v - (-1353.0321434231)).abs() < 1e-6);
        assert_eq!(info_criterion(1.0, 0, 300, CriterionKind::Bic).unwrap(), 0.0);
        // FPE penalty vanishes at xi = 0.
        let e = 0.37;
        let fpe0 = info_criterion(e, 0, 250, CriterionKind::Fpe).unwrap();
        assert!((fpe0 - 250.0 * e.ln()).abs() < 1e-12);
    }

    #[test]
    fn criterion_domain_errors() {
        assert!(info_criterion(0.1, 300, 300, CriterionKind::Fpe).is_err());
        assert!(info_criterion(-1.0, 2, 300, CriterionKind::Bic).is_err());
        let zero = info_criterion(0.0, 2, 300, CriterionKind::Bic).unwrap();
        assert!(zero.is_infinite() && zero < 0.0);
    }

    #[test]
    fn penalties_increase_with_cardinality_at_fixed_error() {
        let e = 0.05;
        let n_v = 300;
        for kind in [CriterionKind::aic(), CriterionKind::Bic, CriterionKind::Fpe, CriterionKind::Lilc] {
            let mut prev = f64::NEG_INFINITY;
            for xi in 0..40 {
                let v = info_criterion(e, xi, n_v, kind).unwrap();
                assert!(v > prev, "{} not increasing at xi {xi}", kind.name());
                prev = v;
            }
        }
    }

    #[test]
    fn perfect_model_has_tiny_one_step_error_and_zero_model_matches_mean_square() {
        let sys = builtin_system("S2").unwrap();
        let model = sys.narx_model().unwrap();
        let u = crate::signal::generate_signal(
            &sys.excitation,
            400,
            5,
            crate::signal::SeedStream::Input,
        )
        .unwrap();
        let y = crate::simulate::simulate_narx(model, &u, &vec![0.0; 400]).unwrap();
        let data = crate::dataset::Dataset::new(u, y, 300).unwrap();
        let candidates = enumerate_terms(&sys.model_spec).unwrap();
        let matrix = crate::regressor::build_regressors(&candidates, &data).unwrap();
        let est = matrix.estimation_rows(300).unwrap();
        let engine = ErrEngine::new(&matrix, est).unwrap();
        let subset = TermSubset::new(candidates.indices_of(&model.terms).unwrap()).unwrap();
        let fit = engine.estimate_coefficients(&subset).unwrap();
        let e = prediction_error(&fit, &candidates, &data, PredictionMode::OneStep).unwrap();
        assert!(e <= 1e-20, "perfect model E = {e}");

        // A zero model’s error is the mean square of y over validation rows.
        let zero = FittedModel {
            subset: TermSubset::new(vec![0]).unwrap(),
            theta: vec![0.0],
            rss: 0.0,
            rank_deficient: false,
        };
        let e0 = prediction_error(&zero, &candidates, &data, PredictionMode::OneStep).unwrap();
        let want: f64 = data.y()[300..].iter().map(|v| v * v).sum::<f64>() / 100.0;
        assert!((e0 - want).abs() < 1e-12);
    }

    #[test]
    fn free_run_matches_one_step_for_input_only_models() {
        // No output lags: feeding back predictions changes nothing.
        let sys = builtin_system("S8").unwrap();
        let data = sys.generate(500, 350, 4).unwrap();
        let candidates = enumerate_terms(&sys.model_spec).unwrap();
        let matrix = crate::regressor::build_regressors(&candidates, &data).unwrap();
        let est = matrix.estimation_rows(350).unwrap();
        let engine = ErrEngine::new(&matrix, est).unwrap();
        let truth = sys.true_terms.as_ref().unwrap();
        let subset = TermSubset::new(candidates.indices_of(truth).unwrap()).unwrap();
        let fit = engine.estimate_coefficients(&subset).unwrap();
        let one = prediction_error(&fit, &candidates, &data, PredictionMode::OneStep).unwrap();
        let free = prediction_error(&fit, &candidates, &data, PredictionMode::FreeRun).unwrap();
        assert!((one - free).abs() < 1e-15);
    }

    #[test]
    fn sweep_reuses_entries_on_extension() {
        let sys = builtin_system("S2").unwrap();
        let data = sys.generate(400, 280, 8).unwrap();
        let candidates = enumerate_terms(&sys.model_spec).unwrap();
        let sweeper = Sweeper::new(&candidates, &data).unwrap();
        let report = sweeper
            .sweep(Algorithm::Osf, 2, 6, CriterionSpec::default())
            .unwrap();
        assert_eq!(report.entries.len() + report.failures.len(), 5);
        let extended = sweeper.extend_interval(&report, 8).unwrap();
        assert_eq!(extended.entries.len() + extended.failures.len(), 7);
        for xi in 2..=6 {
            if let (Some(a), Some(b)) = (report.entries.get(&xi), extended.entries.get(&xi)) {
                assert_eq!(a.j, b.j);
                assert_eq!(a.e, b.e);
            }
        }
        // Extension with no new minimum keeps the choice.
        if !extended.boundary_flag {
            assert_eq!(report.chosen_xi.is_some(), extended.chosen_xi.is_some());
        }
    }
}
