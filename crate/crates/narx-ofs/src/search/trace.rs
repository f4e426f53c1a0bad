//! Step-by-step search traces, exportable as JSON lines and CSV.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::term::CandidateSet;

/// What a trace step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Forward,
    Backtrack,
    Swap,
    DownSwing,
    UpSwing,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Forward => "forward",
            Phase::Backtrack => "backtrack",
            Phase::Swap => "swap",
            Phase::DownSwing => "down_swing",
            Phase::UpSwing => "up_swing",
        }
    }
}

/// One recorded search event.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub phase: Phase,
    /// Cardinality of the recorded subset.
    pub xi_step: usize,
    /// Candidate indices of the recorded subset (search order).
    pub subset: Vec<usize>,
    pub j: f64,
    /// Whether this event strictly improved the stored state.
    pub improved: bool,
    /// Accepted addition with no measurable J gain (forced padding).
    pub zero_gain: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f2: Option<bool>,
    /// Search depth `o`, for oscillating search steps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
}

/// Full step record of one search run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
}

impl SearchTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub(crate) fn push(&mut self, mut step: TraceStep) {
        step.step = self.steps.len() + 1;
        self.steps.push(step);
    }

    /// One JSON object per step with the subset rendered as canonical
    /// term strings.
    pub fn to_jsonl(&self, candidates: &CandidateSet) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let record = serde_json::json!({
                "step": s.step,
                "phase": s.phase.as_str(),
                "xi_step": s.xi_step,
                "subset": candidates.render(&s.subset),
                "J": s.j,
                "flags": {
                    "improved": s.improved,
                    "zero_gain": s.zero_gain,
                    "f1": s.f1,
                    "f2": s.f2,
                },
                "depth": s.depth,
            });
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, path: &Path, candidates: &CandidateSet) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_jsonl(candidates).as_bytes())?;
        Ok(())
    }

    /// CSV summary: one row per step, subset joined with `;`.
    pub fn to_csv(&self, candidates: &CandidateSet) -> String {
        let mut out = String::from("step,phase,xi_step,J,improved,zero_gain,f1,f2,depth,subset\n");
        for s in &self.steps {
            let opt = |b: Option<bool>| b.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{:.10},{},{},{},{},{},{}\n",
                s.step,
                s.phase.as_str(),
                s.xi_step,
                s.j,
                s.improved,
                s.zero_gain,
                opt(s.f1),
                opt(s.f2),
                s.depth.map(|d| d.to_string()).unwrap_or_default(),
                candidates.render(&s.subset).join(";"),
            ));
        }
        out
    }
}
