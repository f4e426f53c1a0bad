//! The structure-search strategies: greedy forward regression (the
//! OFR-ERR baseline), the floating searches OSF and OIF, and the
//! oscillating search O2S.

mod floating;
mod ofr;
mod oscillating;
pub mod trace;

pub use floating::{oif_search, osf_search};
pub use ofr::ofr_err;
pub use oscillating::o2s_search;
pub use trace::{Phase, SearchTrace, TraceStep};

use serde::{Deserialize, Serialize};

use crate::criterion::{SubsetMode, TermSubset};
use crate::error::{Error, Result};

/// Configuration shared by the floating and oscillating searches.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Target cardinality ξ.
    pub xi: usize,
    /// O_max = ceil(max_depth_fraction × min{ξ, n−ξ}) unless overridden.
    pub max_depth_fraction: f64,
    /// Explicit maximum search depth for the oscillating search.
    pub max_depth: Option<usize>,
    /// How significant subsets are identified inside swings.
    pub subset_mode: SubsetMode,
    /// Cap on recorded steps; exceeding it flags a partial result.
    pub step_budget: usize,
}

impl SearchConfig {
    pub fn new(xi: usize) -> Self {
        SearchConfig {
            xi,
            max_depth_fraction: 0.25,
            max_depth: None,
            subset_mode: SubsetMode::Sequential,
            step_budget: 10_000,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.xi < 2 || self.xi >= n {
            return Err(Error::Config(format!(
                "target cardinality {} outside 2..{n}",
                self.xi
            )));
        }
        if !(self.max_depth_fraction > 0.0 && self.max_depth_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "max depth fraction {} outside (0, 1]",
                self.max_depth_fraction
            )));
        }
        if let Some(d) = self.max_depth {
            if d < 1 {
                return Err(Error::Config("max depth must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Maximum oscillating-search depth for a candidate set of size `n`.
    pub fn o_max(&self, n: usize) -> usize {
        self.max_depth.unwrap_or_else(|| {
            let bound = self.xi.min(n - self.xi) as f64;
            ((self.max_depth_fraction * bound).ceil() as usize).max(1)
        })
    }
}

/// A finished search: the selected subset (with its J cached), the step
/// trace, and run flags.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub subset: TermSubset,
    pub trace: SearchTrace,
    /// The step budget ran out; `subset` is the best state reached.
    pub budget_exceeded: bool,
    /// Forced additions that contributed no measurable J gain.
    pub zero_gain_additions: usize,
}

impl SearchResult {
    pub fn j(&self) -> f64 {
        self.subset.criterion().unwrap_or(0.0)
    }
}

/// Which search strategy to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ofr,
    Osf,
    Oif,
    O2s,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Ofr => "ofr",
            Algorithm::Osf => "osf",
            Algorithm::Oif => "oif",
            Algorithm::O2s => "o2s",
        }
    }

    /// Runs this strategy with the given configuration.
    pub fn run(
        &self,
        engine: &crate::criterion::ErrEngine<'_>,
        config: &SearchConfig,
    ) -> Result<SearchResult> {
        match self {
            Algorithm::Ofr => ofr_err(engine, config.xi, config.step_budget),
            Algorithm::Osf => osf_search(engine, config),
            Algorithm::Oif => oif_search(engine, config),
            Algorithm::O2s => o2s_search(engine, config),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ofr" | "ofr-err" => Ok(Algorithm::Ofr),
            "osf" => Ok(Algorithm::Osf),
            "oif" => Ok(Algorithm::Oif),
            "o2s" => Ok(Algorithm::O2s),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}
