//! Batch experiment runner for NARX structure selection.
//!
//! Subcommands: `simulate` (generate benchmark data), `identify` (full
//! run: data, sweep or fixed-cardinality search, fit, classification,
//! artifact bundle), `sweep` (print the cardinality/criterion table),
//! `classify` (compare a found subset against ground truth), `freq`
//! (term-selection frequency table from a persisted sweep) and `report`
//! (summarize a run directory).
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 search budget exceeded.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use narx_ofs::{
    builtin_system, classify_outcome, enumerate_terms, run_experiment, write_dataset,
    Algorithm, CriterionKind, DatasetMeta, Error, ExperimentConfig, ModelSpec,
    PredictionMode, SubsetMode, TermSpec, TermSubset,
};

#[derive(Parser)]
#[command(name = "narx-ofs", version, about = "NARX structure selection with orthogonal floating search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark dataset and write CSV + JSON sidecar.
    Simulate(SimulateArgs),
    /// Run a full identification experiment and persist the bundle.
    Identify(RunArgs),
    /// Run the cardinality sweep and print the criterion table as CSV.
    Sweep(RunArgs),
    /// Classify a found term subset against ground truth.
    Classify(ClassifyArgs),
    /// Term-selection frequency table from a persisted sweep.
    Freq(FreqArgs),
    /// Summarize a persisted run directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Benchmark system name (S1..S8, duffing).
    #[arg(long)]
    system: String,
    /// Number of samples.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// First validation sample index.
    #[arg(long, default_value_t = 700)]
    split: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (sidecar JSON written next to it).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Default)]
struct RunArgs {
    /// Benchmark system name (S1..S8, duffing).
    #[arg(long)]
    system: Option<String>,
    /// Dataset CSV to load instead of simulating.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Search algorithm: ofr, osf, oif, o2s.
    #[arg(long)]
    algo: Option<String>,
    /// Fixed target cardinality (skips order selection).
    #[arg(long)]
    xi: Option<usize>,
    #[arg(long)]
    xi_min: Option<usize>,
    #[arg(long)]
    xi_max: Option<usize>,
    /// Extend the interval this far when the arg-min hits the boundary.
    #[arg(long)]
    extend_to: Option<usize>,
    /// Ranking criterion: aic, bic, fpe, lilc.
    #[arg(long)]
    criterion: Option<String>,
    /// Validation prediction mode: one-step or free-run.
    #[arg(long)]
    prediction: Option<String>,
    /// Model spec as n_u,n_y,n_l (defaults to the system's).
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    split: Option<usize>,
    /// Oscillating-search depth cap (defaults to the 25% rule).
    #[arg(long)]
    max_depth: Option<usize>,
    /// Significant-subset mode inside swings: sequential or exhaustive.
    #[arg(long)]
    subset_mode: Option<String>,
    /// Search step budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Run directory for the artifact bundle.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML config file; flags win over its keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Comma-separated found terms, e.g. "y(k-1),u(k-2)^2".
    #[arg(long)]
    found: String,
    /// Comma-separated ground-truth terms; defaults to the system's.
    #[arg(long)]
    truth: Option<String>,
    /// Benchmark system supplying ground truth (and the term language).
    #[arg(long)]
    system: Option<String>,
    /// Model spec as n_u,n_y,n_l when no system is given.
    #[arg(long)]
    spec: Option<String>,
}

#[derive(Args)]
struct FreqArgs {
    /// Run directory holding sweep.json and metadata.json.
    #[arg(long)]
    run: PathBuf,
    /// Comma-separated terms of interest; defaults to the system's truth.
    #[arg(long)]
    terms: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory written by `identify`.
    #[arg(long)]
    run: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe, like other line-oriented tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Identify(args) => run(args, true),
        Command::Sweep(args) => run(args, false),
        Command::Classify(args) => classify(args),
        Command::Freq(args) => freq(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidSpec(_) | Error::UnknownSystem(_) | Error::Format(_) => 2,
        Error::DegenerateOutput
        | Error::Unstable { .. }
        | Error::PredictionDiverged { .. }
        | Error::Domain(_)
        | Error::Subset(_)
        | Error::InsufficientData(_) => 3,
        Error::ExhaustiveBudget { .. } => 4,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
    }
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let system = builtin_system(&args.system)?;
    let dataset = system.generate(args.n, args.split, args.seed)?;
    let meta = DatasetMeta {
        system: Some(system.name.clone()),
        seed: dataset.seed().cloned(),
        split_index: args.split,
        n: args.n,
        model_spec: Some(system.model_spec),
    };
    write_dataset(&dataset, &args.out, &meta)?;
    println!(
        "wrote {} samples of {} (split {}) to {}",
        args.n,
        system.name,
        args.split,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_spec(text: &str) -> Result<ModelSpec, Error> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("model spec `{text}` is not n_u,n_y,n_l")));
    }
    let parse = |s: &str| {
        s.parse::<u32>()
            .map_err(|e| Error::Config(format!("bad model spec field `{s}`: {e}")))
    };
    ModelSpec::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)
}

fn parse_terms(text: &str) -> Result<Vec<TermSpec>, Error> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

/// Resolves a run configuration: config-file values fill in whatever the
/// flags left unset; built-in defaults fill the rest.
fn resolve_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut config: ExperimentConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::for_system(""),
    };
    if args.config.is_none() {
        config.system = None;
    }
    if let Some(system) = &args.system {
        config.system = Some(system.clone());
        config.dataset = None;
    }
    if let Some(data) = &args.data {
        config.dataset = Some(data.clone());
        config.system = None;
    }
    if let Some(algo) = &args.algo {
        config.algorithm = algo.parse::<Algorithm>()?;
    }
    if args.xi.is_some() {
        config.xi = args.xi;
    }
    if let Some(v) = args.xi_min {
        config.xi_min = v;
    }
    if let Some(v) = args.xi_max {
        config.xi_max = v;
    }
    if args.extend_to.is_some() {
        config.extend_to = args.extend_to;
    }
    if let Some(c) = &args.criterion {
        config.criterion = c.parse::<CriterionKind>()?;
    }
    if let Some(p) = &args.prediction {
        config.prediction_mode = match p.to_ascii_lowercase().as_str() {
            "one-step" | "one_step" => PredictionMode::OneStep,
            "free-run" | "free_run" => PredictionMode::FreeRun,
            other => return Err(Error::Config(format!("unknown prediction mode `{other}`"))),
        };
    }
    if let Some(s) = &args.spec {
        config.model_spec = Some(parse_spec(s)?);
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.n {
        config.n = v;
    }
    if let Some(v) = args.split {
        config.split_index = v;
    }
    if args.max_depth.is_some() {
        config.max_depth = args.max_depth;
    }
    if let Some(m) = &args.subset_mode {
        config.subset_mode = match m.to_ascii_lowercase().as_str() {
            "sequential" => SubsetMode::Sequential,
            "exhaustive" => SubsetMode::Exhaustive,
            other => return Err(Error::Config(format!("unknown subset mode `{other}`"))),
        };
    }
    if let Some(v) = args.budget {
        config.step_budget = v;
    }
    if let Some(out) = &args.out {
        config.out_dir = Some(out.clone());
    }
    Ok(config)
}

fn run(args: RunArgs, full_report: bool) -> Result<ExitCode, Error> {
    let config = resolve_config(&args)?;
    let output = run_experiment(&config)?;
    if full_report {
        let chosen = output.report.chosen();
        match chosen {
            Some(entry) => {
                println!(
                    "chosen xi = {} ({} over [{}, {}]), J = {:.6}, E = {:.6e}",
                    entry.xi,
                    output.report.criterion.kind.name(),
                    output.report.xi_min,
                    output.report.xi_max,
                    entry.j,
                    entry.e
                );
                for (term, theta) in output
                    .candidates
                    .render(entry.model.subset.indices())
                    .iter()
                    .zip(&entry.model.theta)
                {
                    println!("  {theta:+.6e} * {term}");
                }
            }
            None => println!("no cardinality produced a model"),
        }
        if output.report.boundary_flag && output.report.xi_min < output.report.xi_max {
            println!("boundary flag: arg-min at xi_max; consider extending the interval");
        }
        if let Some(outcome) = &output.outcome {
            println!(
                "outcome: {} (spurious {:?}, missing {:?})",
                outcome.label.as_str(),
                output.candidates.render(&outcome.spurious),
                output.candidates.render(&outcome.missing),
            );
        }
        if let Some(dir) = &output.bundle_dir {
            println!("bundle: {}", dir.display());
        }
    } else {
        print!("{}", output.report.to_csv());
    }
    if output.budget_exceeded {
        eprintln!("warning: search step budget exceeded; results are partial");
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

fn classify(args: ClassifyArgs) -> Result<ExitCode, Error> {
    let (spec, truth_terms): (ModelSpec, Vec<TermSpec>) = match (&args.system, &args.truth) {
        (Some(name), None) => {
            let sys = builtin_system(name)?;
            let truth = sys.true_terms.clone().ok_or_else(|| {
                Error::Config(format!("system {name} has no polynomial ground truth"))
            })?;
            (sys.model_spec, truth)
        }
        (maybe_system, Some(text)) => {
            let spec = match (maybe_system, &args.spec) {
                (Some(name), _) => builtin_system(name)?.model_spec,
                (None, Some(s)) => parse_spec(s)?,
                (None, None) => ModelSpec::new(4, 4, 3).expect("static spec"),
            };
            (spec, parse_terms(text)?)
        }
        (None, None) => {
            return Err(Error::Config("need --truth or --system for ground truth".into()))
        }
    };
    let candidates = enumerate_terms(&spec)?;
    let truth = TermSubset::new(candidates.indices_of(&truth_terms)?)?;
    let found = TermSubset::new(candidates.indices_of(&parse_terms(&args.found)?)?)?;
    let outcome = classify_outcome(&found, &truth)?;
    let record = serde_json::json!({
        "label": outcome.label.as_str(),
        "success": outcome.label.is_success(),
        "spurious": candidates.render(&outcome.spurious),
        "missing": candidates.render(&outcome.missing),
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(ExitCode::SUCCESS)
}

fn load_json(path: &Path) -> Result<serde_json::Value, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn freq(args: FreqArgs) -> Result<ExitCode, Error> {
    let sweep = load_json(&args.run.join("sweep.json"))?;
    let meta = load_json(&args.run.join("metadata.json"))?;
    let spec: ModelSpec = serde_json::from_value(
        meta.pointer("/config/model_spec")
            .filter(|v| !v.is_null())
            .cloned()
            .or_else(|| {
                // Fall back to the dataset sidecar.
                load_json(&args.run.join("dataset.json"))
                    .ok()
                    .and_then(|d| d.get("model_spec").filter(|v| !v.is_null()).cloned())
            })
            .ok_or_else(|| Error::Format("run metadata lacks a model spec".into()))?,
    )?;
    let candidates = enumerate_terms(&spec)?;

    let terms: Vec<TermSpec> = match (&args.terms, meta.pointer("/system")) {
        (Some(text), _) => parse_terms(text)?,
        (None, Some(serde_json::Value::String(name))) => builtin_system(name)?
            .true_terms
            .ok_or_else(|| Error::Config("system has no ground-truth terms".into()))?,
        _ => return Err(Error::Config("need --terms or a system with ground truth".into())),
    };
    let indices = candidates.indices_of(&terms)?;

    let entries = sweep
        .get("entries")
        .and_then(|e| e.as_array())
        .ok_or_else(|| Error::Format("sweep.json has no entries".into()))?;
    let mut memberships: Vec<(usize, Vec<usize>)> = Vec::new();
    for entry in entries {
        let xi = entry.get("xi").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
        let subset: Vec<usize> = entry
            .get("subset")
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|v| v.as_u64()).map(|v| v as usize).collect())
            .unwrap_or_default();
        memberships.push((xi, subset));
    }
    memberships.sort_by_key(|(xi, _)| *xi);

    print!("term");
    for (xi, _) in &memberships {
        print!(",{xi}");
    }
    println!();
    for &term in &indices {
        print!("{}", candidates.term(term));
        for (_, subset) in &memberships {
            print!(",{}", u8::from(subset.contains(&term)));
        }
        println!();
    }
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode, Error> {
    let dir = &args.run;
    if let Ok(error) = load_json(&dir.join("error.json")) {
        println!("run FAILED at stage {}: {}", error["stage"], error["error"]);
        return Ok(ExitCode::from(3));
    }
    let meta = load_json(&dir.join("metadata.json"))?;
    println!(
        "run of {} v{} — system {}, seed {}",
        meta["crate"].as_str().unwrap_or("?"),
        meta["version"].as_str().unwrap_or("?"),
        meta["system"],
        meta["seed"]
    );
    let sweep = load_json(&dir.join("sweep.json"))?;
    println!(
        "algorithm {}, criterion {}, interval [{}, {}], chosen xi {}, boundary {}",
        sweep["algorithm"], sweep["criterion"], sweep["xi_min"], sweep["xi_max"],
        sweep["chosen_xi"], sweep["boundary_flag"]
    );
    if let Ok(model) = load_json(&dir.join("model.json")) {
        println!("model (J {}, E {}):", model["J"], model["E"]);
        if let (Some(terms), Some(coefs)) =
            (model["terms"].as_array(), model["coefficients"].as_array())
        {
            for (t, c) in terms.iter().zip(coefs) {
                println!("  {c} * {}", t.as_str().unwrap_or("?"));
            }
        }
    }
    if let Ok(outcome) = load_json(&dir.join("outcome.json")) {
        println!(
            "outcome: {} (spurious {}, missing {})",
            outcome["label"], outcome["spurious"], outcome["missing"]
        );
    }
    Ok(ExitCode::SUCCESS)
}
