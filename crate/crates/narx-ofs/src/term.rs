//! Candidate NARX terms: lagged monomials in the input and output.
//!
//! A polynomial NARX model writes the output as a linear combination of
//! monomials in lagged outputs `y(k-1) .. y(k-n_y)` and lagged inputs
//! `u(k-1) .. u(k-n_u)`, up to total degree `n_l`. This module enumerates
//! that candidate set in a fixed canonical order and counts it in closed
//! form, so searches and traces are reproducible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which measured signal a factor refers to.
///
/// Output factors sort before input factors, matching the conventional
/// `y(...)·u(...)` way of writing NARX monomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Signal {
    Output,
    Input,
}

/// One factor of a monomial: a lagged signal raised to a power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub signal: Signal,
    /// Lag in samples, at least 1.
    pub lag: u32,
    /// Exponent, at least 1.
    pub exponent: u32,
}

impl Factor {
    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.signal {
            Signal::Output => 'y',
            Signal::Input => 'u',
        };
        write!(f, "{name}(k-{})", self.lag)?;
        if self.exponent > 1 {
            write!(f, "^{}", self.exponent)?;
        }
        Ok(())
    }
}

/// One candidate term: a multiset of lagged-signal factors.
///
/// The empty factor list is the constant term. Factors are kept in a
/// canonical order (output before input, then ascending lag) with equal
/// factors merged into exponents, so structurally equal terms compare equal:
///
/// ```
/// use narx_ofs::{Factor, Signal, TermSpec};
///
/// let a = TermSpec::new(vec![
///     Factor { signal: Signal::Input, lag: 2, exponent: 1 },
///     Factor { signal: Signal::Output, lag: 1, exponent: 1 },
///     Factor { signal: Signal::Input, lag: 2, exponent: 1 },
/// ]);
/// let b = TermSpec::new(vec![
///     Factor { signal: Signal::Output, lag: 1, exponent: 1 },
///     Factor { signal: Signal::Input, lag: 2, exponent: 2 },
/// ]);
/// assert_eq!(a, b);
/// assert_eq!(a.to_string(), "y(k-1)*u(k-2)^2");
/// ```
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermSpec {
    factors: Vec<Factor>,
}

impl TermSpec {
    /// Builds a term from factors in any order, canonicalizing as it goes.
    pub fn new(factors: Vec<Factor>) -> Self {
        let mut expanded: Vec<(Signal, u32)> = Vec::new();
        for f in factors {
            for _ in 0..f.exponent {
                expanded.push((f.signal, f.lag));
            }
        }
        expanded.sort_unstable();
        let mut merged: Vec<Factor> = Vec::new();
        for (signal, lag) in expanded {
            match merged.last_mut() {
                Some(prev) if prev.signal == signal && prev.lag == lag => prev.exponent += 1,
                _ => merged.push(Factor { signal, lag, exponent: 1 }),
            }
        }
        TermSpec { factors: merged }
    }

    /// The constant term.
    pub fn constant() -> Self {
        TermSpec { factors: Vec::new() }
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Total degree (sum of exponents).
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.exponent).sum()
    }

    /// Largest lag on the given signal used by this term.
    pub fn max_lag(&self, signal: Signal) -> u32 {
        self.factors
            .iter()
            .filter(|f| f.signal == signal)
            .map(|f| f.lag)
            .max()
            .unwrap_or(0)
    }

    /// True when every factor is an output lag and the degree is exactly
    /// `degree`. Degree-3 pure-output terms are the "cubic output terms"
    /// of the oscillator benchmark.
    pub fn is_pure_output_of_degree(&self, degree: u32) -> bool {
        !self.factors.is_empty()
            && self.factors.iter().all(|f| f.signal == Signal::Output)
            && self.degree() == degree
    }

    /// Evaluates the monomial at (0-based) time `t` against full signal
    /// histories; lags reaching before the start of the data read as zero.
    pub fn eval(&self, u: &[f64], y: &[f64], t: usize) -> f64 {
        let mut prod = 1.0;
        for f in &self.factors {
            let lag = f.lag as usize;
            let sample = if t >= lag {
                match f.signal {
                    Signal::Output => y[t - lag],
                    Signal::Input => u[t - lag],
                }
            } else {
                0.0
            };
            prod *= sample.powi(f.exponent as i32);
        }
        prod
    }

    /// Sort key: degree first, then the expanded factor sequence, which is
    /// the enumeration order of [`enumerate_terms`].
    fn sort_key(&self) -> (u32, Vec<(Signal, u32)>) {
        let mut expanded = Vec::with_capacity(self.degree() as usize);
        for f in &self.factors {
            for _ in 0..f.exponent {
                expanded.push((f.signal, f.lag));
            }
        }
        (self.degree(), expanded)
    }
}

impl PartialOrd for TermSpec {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TermSpec {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for TermSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            factor.render(f)?;
        }
        Ok(())
    }
}

impl FromStr for TermSpec {
    type Err = Error;

    /// Parses the canonical rendering, e.g. `1`, `y(k-1)`, `y(k-1)*u(k-2)^2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" || s == "c" {
            return Ok(TermSpec::constant());
        }
        let mut factors = Vec::new();
        for piece in s.split('*') {
            let piece = piece.trim();
            let err = || Error::Format(format!("malformed term factor `{piece}`"));
            let mut chars = piece.chars();
            let signal = match chars.next() {
                Some('y') => Signal::Output,
                Some('u') => Signal::Input,
                _ => return Err(err()),
            };
            let rest = chars.as_str();
            let rest = rest.strip_prefix("(k-").ok_or_else(err)?;
            let close = rest.find(')').ok_or_else(err)?;
            let lag: u32 = rest[..close].parse().map_err(|_| err())?;
            let tail = &rest[close + 1..];
            let exponent: u32 = if tail.is_empty() {
                1
            } else {
                tail.strip_prefix('^').ok_or_else(err)?.parse().map_err(|_| err())?
            };
            if lag == 0 || exponent == 0 {
                return Err(err());
            }
            factors.push(Factor { signal, lag, exponent });
        }
        if factors.is_empty() {
            return Err(Error::Format(format!("empty term `{s}`")));
        }
        Ok(TermSpec::new(factors))
    }
}

/// Lag/degree specification of the NARX candidate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Maximum input lag, samples.
    pub n_u: u32,
    /// Maximum output lag, samples.
    pub n_y: u32,
    /// Maximum polynomial degree.
    pub n_l: u32,
}

impl ModelSpec {
    pub fn new(n_u: u32, n_y: u32, n_l: u32) -> Result<Self> {
        let spec = ModelSpec { n_u, n_y, n_l };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_l < 1 {
            return Err(Error::InvalidSpec("n_l must be at least 1".into()));
        }
        if self.n_u + self.n_y < 1 {
            return Err(Error::InvalidSpec("n_u + n_y must be at least 1".into()));
        }
        Ok(())
    }

    /// Largest lag appearing in any candidate term.
    pub fn max_lag(&self) -> usize {
        self.n_u.max(self.n_y) as usize
    }

    /// True when `term` fits within these lags and this degree.
    pub fn admits(&self, term: &TermSpec) -> bool {
        term.degree() <= self.n_l
            && term.max_lag(Signal::Input) <= self.n_u
            && term.max_lag(Signal::Output) <= self.n_y
    }
}

/// Number of candidate terms for `spec`, via the closed-form recurrence
/// n_i = n_{i-1} (n_y + n_u + i - 1) / i with n_0 = 1, without enumerating.
///
/// ```
/// use narx_ofs::{count_terms, ModelSpec};
///
/// let spec = ModelSpec::new(4, 4, 3).unwrap();
/// assert_eq!(count_terms(&spec).unwrap(), 165);
/// assert_eq!(count_terms(&ModelSpec::new(5, 5, 3).unwrap()).unwrap(), 286);
/// ```
pub fn count_terms(spec: &ModelSpec) -> Result<usize> {
    spec.validate()?;
    let m = (spec.n_u + spec.n_y) as u128;
    let mut total: u128 = 1; // n_0
    let mut n_i: u128 = 1;
    for i in 1..=spec.n_l as u128 {
        n_i = n_i
            .checked_mul(m + i - 1)
            .ok_or_else(|| Error::InvalidSpec("term count overflow".into()))?
            / i;
        total = total
            .checked_add(n_i)
            .ok_or_else(|| Error::InvalidSpec("term count overflow".into()))?;
    }
    usize::try_from(total).map_err(|_| Error::InvalidSpec("term count exceeds usize".into()))
}

/// The full ordered candidate set for a [`ModelSpec`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CandidateSet {
    spec: ModelSpec,
    terms: Vec<TermSpec>,
}

impl CandidateSet {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn terms(&self) -> &[TermSpec] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, index: usize) -> &TermSpec {
        &self.terms[index]
    }

    /// Canonical index of `term`, if it belongs to this set.
    pub fn index_of(&self, term: &TermSpec) -> Option<usize> {
        self.terms.binary_search_by(|t| t.cmp(term)).ok()
    }

    /// Resolves a list of terms to canonical indices, erroring on terms
    /// outside the candidate set.
    pub fn indices_of(&self, terms: &[TermSpec]) -> Result<Vec<usize>> {
        terms
            .iter()
            .map(|t| {
                self.index_of(t)
                    .ok_or_else(|| Error::Subset(format!("term `{t}` is not in the candidate set")))
            })
            .collect()
    }

    /// Renders a subset of indices as canonical term strings.
    pub fn render(&self, indices: &[usize]) -> Vec<String> {
        indices.iter().map(|&i| self.terms[i].to_string()).collect()
    }
}

/// Enumerates every distinct monomial of degree 0..=n_l over the lagged
/// signals, in canonical order (degree, then output-before-input and
/// ascending lags). Term 0 is the constant.
///
/// ```
/// use narx_ofs::{enumerate_terms, ModelSpec};
///
/// let set = enumerate_terms(&ModelSpec::new(1, 1, 1).unwrap()).unwrap();
/// let rendered: Vec<String> = set.terms().iter().map(|t| t.to_string()).collect();
/// assert_eq!(rendered, ["1", "y(k-1)", "u(k-1)"]);
/// ```
pub fn enumerate_terms(spec: &ModelSpec) -> Result<CandidateSet> {
    spec.validate()?;
    // Variables in canonical order: y(k-1)..y(k-n_y), u(k-1)..u(k-n_u).
    let mut vars: Vec<(Signal, u32)> = Vec::new();
    for lag in 1..=spec.n_y {
        vars.push((Signal::Output, lag));
    }
    for lag in 1..=spec.n_u {
        vars.push((Signal::Input, lag));
    }

    let mut terms = vec![TermSpec::constant()];
    for degree in 1..=spec.n_l as usize {
        // Non-decreasing index sequences = multisets of size `degree`.
        let mut combo = vec![0usize; degree];
        'combos: loop {
            let factors = combo
                .iter()
                .map(|&v| Factor { signal: vars[v].0, lag: vars[v].1, exponent: 1 })
                .collect();
            terms.push(TermSpec::new(factors));
            let mut i = degree;
            while i > 0 && combo[i - 1] == vars.len() - 1 {
                i -= 1;
            }
            if i == 0 {
                break 'combos;
            }
            let next = combo[i - 1] + 1;
            for slot in combo.iter_mut().skip(i - 1) {
                *slot = next;
            }
        }
    }
    let set = CandidateSet { spec: *spec, terms };
    debug_assert_eq!(set.terms.len(), count_terms(spec)?);
    Ok(set)
}
