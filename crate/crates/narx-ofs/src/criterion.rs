//! The subset criterion J, term-significance primitives, and coefficient
//! estimation.
//!
//! J(X) = Σ ERR(x_i) over the subset; maximizing J over subsets of a given
//! cardinality is the structure-selection objective. Four primitives drive
//! every search:
//!
//! * the *most significant term* w.r.t. X: the unselected term whose
//!   inclusion maximizes J,
//! * the *least significant term* in X: the member whose removal leaves
//!   the largest J,
//! * and their size-`o` subset generalizations, available exhaustively
//!   (within a combination budget) or as sequential floating
//!   approximations.
//!
//! Ties are always broken toward the lowest canonical term index. J values
//! are memoized per index set: the ERR split depends on the
//! orthogonalization order but the sum does not, so the cache is keyed on
//! the sorted subset.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ortho::{dot, orthogonalize_with_order, project_out, BasisVector, OrthoDecomposition, RANK_TOLERANCE};
use crate::regressor::RegressorMatrix;

/// Precomputed inner products: the candidate Gram matrix, candidate/output
/// products and `y'y`. Sharable across the per-cardinality engines of a
/// sweep, since they all see the same estimation block.
#[derive(Debug)]
pub struct GramTables {
    n: usize,
    /// Row-major n×n Gram matrix of the candidate columns.
    g: Vec<f64>,
    /// Candidate-column / output inner products.
    b: Vec<f64>,
}

impl GramTables {
    fn build(cols: &[&[f64]], y: &[f64]) -> Self {
        let n = cols.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let d = dot(cols[i], cols[j]);
                g[i * n + j] = d;
                g[j * n + i] = d;
            }
        }
        let b = cols.iter().map(|c| dot(c, y)).collect();
        GramTables { n, g, b }
    }

    #[inline]
    fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.g[i * self.n..(i + 1) * self.n]
    }
}

/// Improvements smaller than this are treated as no improvement, so
/// equal-J states cannot make a search oscillate.
pub const IMPROVEMENT_EPS: f64 = 1e-12;

/// Cap on the number of subsets an exhaustive mode may evaluate.
pub const EXHAUSTIVE_BUDGET: u128 = 100_000;

/// Returns true when `candidate` improves on `incumbent` by more than
/// [`IMPROVEMENT_EPS`].
pub fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + IMPROVEMENT_EPS
}

/// Relative width of the selection tie window: scores this close to the
/// maximum (relative to its magnitude) are indistinguishable across the
/// orthogonalized and Gram evaluation routes, and the lowest candidate
/// index wins among them.
pub const TIE_RELATIVE_WINDOW: f64 = 1e-9;

fn tie_threshold(max: f64) -> f64 {
    max - TIE_RELATIVE_WINDOW * max.abs()
}

/// Argmax with the tie rule; the two-pass form keeps the choice
/// independent of scan order.
fn select_best(scored: &[(usize, f64)]) -> Option<usize> {
    let max = scored
        .iter()
        .map(|&(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    scored
        .iter()
        .filter(|&&(_, s)| s >= tie_threshold(max))
        .map(|&(i, _)| i)
        .min()
}

/// Whether the size-o significance primitives evaluate every combination or run the floating
/// sequential approximation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetMode {
    Exhaustive,
    Sequential,
}

/// An ordered set of candidate-term indices with an optional cached J.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSubset {
    indices: Vec<usize>,
    criterion: Option<f64>,
}

impl TermSubset {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        let mut seen = indices.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Subset("duplicate indices in term subset".into()));
        }
        Ok(TermSubset { indices, criterion: None })
    }

    pub fn with_criterion(mut self, j: f64) -> Self {
        self.criterion = Some(j);
        self
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Indices in ascending canonical order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut s = self.indices.clone();
        s.sort_unstable();
        s
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.contains(&index)
    }

    pub fn criterion(&self) -> Option<f64> {
        self.criterion
    }
}

/// J plus how many columns were dropped as rank-degenerate while
/// computing it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JDetail {
    pub j: f64,
    pub degenerate: usize,
}

/// A single-term selection: the chosen candidate index and the J of the
/// resulting subset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pick {
    pub index: usize,
    pub j: f64,
}

/// A least-squares fit of a term subset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedModel {
    /// Subset in ascending canonical order; `theta` is aligned to it.
    pub subset: TermSubset,
    pub theta: Vec<f64>,
    /// Residual sum of squares on the estimation rows.
    pub rss: f64,
    pub rank_deficient: bool,
}

/// ERR/J evaluation engine over the estimation block of a regressor
/// matrix. All methods are pure given the borrowed data; the memo cache
/// is per-engine, so concurrent runs each own an engine.
pub struct ErrEngine<'a> {
    cols: Vec<&'a [f64]>,
    y: &'a [f64],
    yty: f64,
    cache: RefCell<HashMap<Vec<u32>, JDetail>>,
    gram: RefCell<Option<Arc<GramTables>>>,
}

impl<'a> ErrEngine<'a> {
    /// Engine over the first `est_rows` rows of `matrix`.
    pub fn new(matrix: &'a RegressorMatrix, est_rows: usize) -> Result<Self> {
        if est_rows == 0 || est_rows > matrix.rows() {
            return Err(Error::InsufficientData(format!(
                "estimation rows {est_rows} outside 1..={}",
                matrix.rows()
            )));
        }
        let cols = (0..matrix.cols())
            .map(|j| matrix.column_head(j, est_rows))
            .collect();
        Self::from_columns(cols, &matrix.target()[..est_rows])
    }

    /// Engine over explicit columns (used by oracles and small tests).
    pub fn from_columns(cols: Vec<&'a [f64]>, y: &'a [f64]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::Subset("engine needs at least one candidate column".into()));
        }
        if cols.iter().any(|c| c.len() != y.len()) {
            return Err(Error::InvalidSpec("column/output row counts differ".into()));
        }
        let yty = dot(y, y);
        if yty <= 0.0 {
            return Err(Error::DegenerateOutput);
        }
        Ok(ErrEngine { cols, y, yty, cache: RefCell::new(HashMap::new()), gram: RefCell::new(None) })
    }

    /// Installs precomputed inner-product tables (e.g. shared across a
    /// sweep's per-cardinality engines).
    pub fn with_gram(self, gram: Arc<GramTables>) -> Self {
        debug_assert_eq!(gram.n, self.cols.len());
        *self.gram.borrow_mut() = Some(gram);
        self
    }

    /// The engine's inner-product tables, built on first use.
    pub fn gram_tables(&self) -> Arc<GramTables> {
        if let Some(g) = self.gram.borrow().as_ref() {
            return Arc::clone(g);
        }
        let built = Arc::new(GramTables::build(&self.cols, self.y));
        *self.gram.borrow_mut() = Some(Arc::clone(&built));
        built
    }

    /// Number of candidate terms.
    pub fn n(&self) -> usize {
        self.cols.len()
    }

    /// Number of estimation rows.
    pub fn rows(&self) -> usize {
        self.y.len()
    }

    pub fn yty(&self) -> f64 {
        self.yty
    }

    fn cache_key(subset: &[usize]) -> Vec<u32> {
        let mut key: Vec<u32> = subset.iter().map(|&i| i as u32).collect();
        key.sort_unstable();
        key
    }

    /// Full orthogonal decomposition of `subset` in its given order.
    pub fn decompose(&self, subset: &[usize]) -> Result<OrthoDecomposition> {
        let cols: Vec<&[f64]> = subset.iter().map(|&i| self.cols[i]).collect();
        orthogonalize_with_order(&cols, self.y, subset.to_vec())
    }

    /// J of a subset; the empty subset has J = 0.
    pub fn j(&self, subset: &[usize]) -> Result<f64> {
        Ok(self.j_detail(subset)?.j)
    }

    /// J with the degenerate-column count. Returns 0 with all columns
    /// flagged when every column is rank-deficient.
    pub fn j_detail(&self, subset: &[usize]) -> Result<JDetail> {
        if subset.is_empty() {
            return Ok(JDetail { j: 0.0, degenerate: 0 });
        }
        let key = Self::cache_key(subset);
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(*hit);
        }
        let decomposition = self.decompose(subset)?;
        let detail = JDetail { j: decomposition.j(), degenerate: decomposition.degenerate_count() };
        self.cache.borrow_mut().insert(key, detail);
        Ok(detail)
    }

    /// The subset criterion J; errors on an empty subset.
    pub fn criterion_j(&self, subset: &TermSubset) -> Result<JDetail> {
        if subset.is_empty() {
            return Err(Error::Subset("criterion J needs a non-empty subset".into()));
        }
        self.j_detail(subset.indices())
    }

    /// Orthogonal basis of the subset's non-degenerate columns plus the
    /// J it explains.
    fn basis(&self, subset: &[usize]) -> Result<(Vec<BasisVector>, f64)> {
        let mut basis: Vec<BasisVector> = Vec::with_capacity(subset.len());
        let mut j = 0.0;
        for &i in subset {
            let col = self.cols[i];
            let orig_norm2 = dot(col, col);
            let mut v = col.to_vec();
            project_out(&basis, &mut v);
            let norm2 = dot(&v, &v);
            if orig_norm2 > 0.0 && norm2 > RANK_TOLERANCE * orig_norm2 {
                let g = dot(&v, self.y) / norm2;
                j += g * g * norm2 / self.yty;
                basis.push(BasisVector { v, norm2 });
            }
        }
        Ok((basis, j))
    }

    /// ERR of `col` after projecting out `basis`.
    fn residual_err(&self, basis: &[BasisVector], col: &[f64]) -> f64 {
        let orig_norm2 = dot(col, col);
        if orig_norm2 <= 0.0 {
            return 0.0;
        }
        let mut v = col.to_vec();
        project_out(basis, &mut v);
        let norm2 = dot(&v, &v);
        if norm2 <= RANK_TOLERANCE * orig_norm2 {
            return 0.0;
        }
        let g = dot(&v, self.y) / norm2;
        g * g * norm2 / self.yty
    }

    /// Most significant term w.r.t. `subset` among all unselected terms.
    pub fn most_significant_term(&self, subset: &[usize]) -> Result<Pick> {
        let pool: Vec<usize> = (0..self.n()).filter(|i| !subset.contains(i)).collect();
        self.most_significant_term_in_pool(subset, &pool)
    }

    /// Most significant term drawn only from `pool` (disjoint from
    /// `subset`).
    pub fn most_significant_term_in_pool(&self, subset: &[usize], pool: &[usize]) -> Result<Pick> {
        if pool.is_empty() {
            return Err(Error::Subset("no candidate terms remain".into()));
        }
        let index = match self.gram_scan(subset, pool) {
            Some(index) => index,
            None => self.row_scan(subset, pool)?,
        };
        let mut extended = subset.to_vec();
        extended.push(index);
        Ok(Pick { index, j: self.j(&extended)? })
    }

    /// Candidate scan in the orthogonalized row space (the reference
    /// path; also the fallback when the Gram system is ill-conditioned).
    fn row_scan(&self, subset: &[usize], pool: &[usize]) -> Result<usize> {
        let (basis, _) = self.basis(subset)?;
        let scored: Vec<(usize, f64)> = pool
            .iter()
            .map(|&i| {
                debug_assert!(!subset.contains(&i));
                (i, self.residual_err(&basis, self.cols[i]))
            })
            .collect();
        Ok(select_best(&scored).expect("pool checked non-empty"))
    }

    /// Candidate scan through the precomputed Gram tables: the marginal
    /// ERR of candidate i given subset S needs only
    /// r = b_i − g_i' G_S^-1 b_S and d = G_ii − g_i' G_S^-1 g_i
    /// (d is exactly the squared residual norm). Selection only — the
    /// accepted J is recomputed by orthogonalization. Returns `None`
    /// when the Gram factorization is not safely positive definite.
    fn gram_scan(&self, subset: &[usize], pool: &[usize]) -> Option<usize> {
        let tables = self.gram_tables();
        let k = subset.len();
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(pool.len());
        let mut suspicious: Vec<usize> = Vec::new();
        if k == 0 {
            for &i in pool {
                let gii = tables.g(i, i);
                let err = if gii <= 0.0 {
                    0.0
                } else {
                    let r = tables.b[i];
                    r * r / (gii * self.yty)
                };
                if err > 1.0 + 1e-9 {
                    suspicious.push(i);
                } else {
                    scored.push((i, err));
                }
            }
        } else {
            let mut gs = DMatrix::<f64>::zeros(k, k);
            let mut bs = DVector::<f64>::zeros(k);
            for (a, &ia) in subset.iter().enumerate() {
                let row = tables.row(ia);
                for (b, &ib) in subset.iter().enumerate() {
                    gs[(a, b)] = row[ib];
                }
                bs[a] = tables.b[ia];
            }
            let chol = Cholesky::new(gs)?;
            let l = chol.l();
            let mut dmin = f64::INFINITY;
            let mut dmax = 0.0_f64;
            for i in 0..k {
                let d = l[(i, i)];
                dmin = dmin.min(d);
                dmax = dmax.max(d);
            }
            if !(dmin > 0.0) || (dmin / dmax).powi(2) < 1e-10 {
                return None;
            }
            let c = l.solve_lower_triangular(&bs)?;
            let mut g_i = DVector::<f64>::zeros(k);
            for &i in pool {
                let row = tables.row(i);
                for (a, &s) in subset.iter().enumerate() {
                    g_i[a] = row[s];
                }
                let z = l.solve_lower_triangular(&g_i)?;
                let gii = tables.g(i, i);
                let d = gii - z.norm_squared();
                let err = if gii <= 0.0 || d <= RANK_TOLERANCE * gii {
                    0.0
                } else {
                    let r = tables.b[i] - z.dot(&c);
                    r * r / (d * self.yty)
                };
                if err > 1.0 + 1e-9 {
                    suspicious.push(i);
                } else {
                    scored.push((i, err));
                }
            }
        }
        if !suspicious.is_empty() {
            // Cancellation pushed an estimate out of [0, 1]; re-evaluate
            // those candidates in the row space.
            let (basis, _) = self.basis(subset).ok()?;
            for i in suspicious {
                scored.push((i, self.residual_err(&basis, self.cols[i])));
            }
        }
        select_best(&scored)
    }

    /// Least significant term in `subset`: the member whose removal
    /// leaves the largest J. Needs at least two members.
    pub fn least_significant_term(&self, subset: &[usize]) -> Result<Pick> {
        self.least_significant_term_among(subset, subset)
    }

    /// Least significant term restricted to `removable` (a subset of
    /// `subset`).
    pub fn least_significant_term_among(&self, subset: &[usize], removable: &[usize]) -> Result<Pick> {
        if subset.len() < 2 {
            return Err(Error::Subset("least-significant term needs at least two terms".into()));
        }
        if removable.is_empty() {
            return Err(Error::Subset("no removable terms".into()));
        }
        let mut scored: Vec<(usize, f64)> = Vec::with_capacity(removable.len());
        match self.leave_one_out_j(subset) {
            Some(values) => {
                for (pos, &i) in subset.iter().enumerate() {
                    if removable.contains(&i) {
                        scored.push((i, values[pos]));
                    }
                }
            }
            None => {
                for &i in removable {
                    debug_assert!(subset.contains(&i));
                    let without: Vec<usize> =
                        subset.iter().copied().filter(|&x| x != i).collect();
                    scored.push((i, self.j(&without)?));
                }
            }
        }
        let index = select_best(&scored).expect("removable checked non-empty");
        let without: Vec<usize> = subset.iter().copied().filter(|&x| x != index).collect();
        Ok(Pick { index, j: self.j(&without)? })
    }

    /// Leave-one-out J values via the Gram system: dropping column i
    /// costs theta_i^2 / (G^-1)_ii of explained energy. Falls back to
    /// per-removal orthogonalization (returning `None`) when the Gram
    /// matrix is not safely positive definite.
    fn leave_one_out_j(&self, subset: &[usize]) -> Option<Vec<f64>> {
        let tables = self.gram_tables();
        let k = subset.len();
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for (a, &ia) in subset.iter().enumerate() {
            let row = tables.row(ia);
            for (b, &ib) in subset.iter().enumerate() {
                gram[(a, b)] = row[ib];
            }
            rhs[a] = tables.b[ia];
        }
        let chol = Cholesky::new(gram)?;
        let l = chol.l_dirty();
        let mut dmin = f64::INFINITY;
        let mut dmax = 0.0_f64;
        for i in 0..k {
            let d = l[(i, i)];
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
        if !(dmin > 0.0) || (dmin / dmax).powi(2) < 1e-10 {
            return None;
        }
        let theta = chol.solve(&rhs);
        let inv = chol.inverse();
        let j_full = rhs.dot(&theta) / self.yty;
        Some(
            (0..k)
                .map(|i| j_full - theta[i] * theta[i] / inv[(i, i)] / self.yty)
                .collect(),
        )
    }

    /// Most significant size-`o` subset w.r.t. `subset`.
    pub fn most_significant_subset(
        &self,
        o: usize,
        subset: &[usize],
        mode: SubsetMode,
    ) -> Result<(Vec<usize>, f64)> {
        let available: Vec<usize> = (0..self.n()).filter(|i| !subset.contains(i)).collect();
        if o == 0 {
            return Err(Error::Subset("subset size o must be at least 1".into()));
        }
        if o > available.len() {
            return Err(Error::Subset(format!(
                "cannot select {o} terms from {} remaining",
                available.len()
            )));
        }
        if o == 1 {
            let pick = self.most_significant_term(subset)?;
            return Ok((vec![pick.index], pick.j));
        }
        match mode {
            SubsetMode::Exhaustive => {
                self.exhaustive_extension(subset, &available, o)
            }
            SubsetMode::Sequential => self.sequential_extension(subset, o),
        }
    }

    /// Least significant size-`o` subset of `subset`.
    pub fn least_significant_subset(
        &self,
        o: usize,
        subset: &[usize],
        mode: SubsetMode,
    ) -> Result<(Vec<usize>, f64)> {
        if o == 0 {
            return Err(Error::Subset("subset size o must be at least 1".into()));
        }
        if o + 1 > subset.len() {
            return Err(Error::Subset(format!(
                "cannot remove {o} terms from a {}-term subset",
                subset.len()
            )));
        }
        if o == 1 {
            let pick = self.least_significant_term(subset)?;
            return Ok((vec![pick.index], pick.j));
        }
        match mode {
            SubsetMode::Exhaustive => self.exhaustive_removal(subset, o),
            SubsetMode::Sequential => self.sequential_removal(subset, o),
        }
    }

    fn exhaustive_extension(
        &self,
        subset: &[usize],
        available: &[usize],
        o: usize,
    ) -> Result<(Vec<usize>, f64)> {
        check_budget(available.len(), o)?;
        // First pass: the maximum J; second pass: the lexicographically
        // first combination within the tie window (J values are memoized,
        // so the re-enumeration is cheap).
        let mut max_j = f64::NEG_INFINITY;
        let mut extended = subset.to_vec();
        for_each_combination(available.len(), o, |combo| {
            extended.truncate(subset.len());
            extended.extend(combo.iter().map(|&p| available[p]));
            let j = self.j(&extended).expect("columns validated at construction");
            max_j = max_j.max(j);
        });
        let mut chosen: Option<(Vec<usize>, f64)> = None;
        for_each_combination(available.len(), o, |combo| {
            if chosen.is_some() {
                return;
            }
            extended.truncate(subset.len());
            extended.extend(combo.iter().map(|&p| available[p]));
            let j = self.j(&extended).expect("columns validated at construction");
            if j >= tie_threshold(max_j) {
                chosen = Some((combo.iter().map(|&p| available[p]).collect(), j));
            }
        });
        let (mut indices, j) = chosen.expect("combination space non-empty");
        indices.sort_unstable();
        Ok((indices, j))
    }

    fn exhaustive_removal(&self, subset: &[usize], o: usize) -> Result<(Vec<usize>, f64)> {
        check_budget(subset.len(), o)?;
        let mut max_j = f64::NEG_INFINITY;
        for_each_combination(subset.len(), o, |combo| {
            let removed: Vec<usize> = combo.iter().map(|&p| subset[p]).collect();
            let kept: Vec<usize> =
                subset.iter().copied().filter(|i| !removed.contains(i)).collect();
            let j = self.j(&kept).expect("columns validated at construction");
            max_j = max_j.max(j);
        });
        let mut chosen: Option<(Vec<usize>, f64)> = None;
        for_each_combination(subset.len(), o, |combo| {
            if chosen.is_some() {
                return;
            }
            let removed: Vec<usize> = combo.iter().map(|&p| subset[p]).collect();
            let kept: Vec<usize> =
                subset.iter().copied().filter(|i| !removed.contains(i)).collect();
            let j = self.j(&kept).expect("columns validated at construction");
            if j >= tie_threshold(max_j) {
                chosen = Some((removed, j));
            }
        });
        let (mut indices, j) = chosen.expect("combination space non-empty");
        indices.sort_unstable();
        Ok((indices, j))
    }

    /// Floating forward mini-search: grows an added set to size `o` with
    /// per-size best memory and conditional backtracking, exactly the OSF
    /// step pattern restricted to the added terms.
    fn sequential_extension(&self, subset: &[usize], o: usize) -> Result<(Vec<usize>, f64)> {
        let mut added: Vec<usize> = Vec::new();
        let mut best: Vec<Option<(Vec<usize>, f64)>> = vec![None; o + 1];
        loop {
            let current: Vec<usize> = subset.iter().copied().chain(added.iter().copied()).collect();
            let pick = self.most_significant_term(&current)?;
            let count = added.len() + 1;
            let accept = match &best[count] {
                None => true,
                Some((_, bj)) => improves(pick.j, *bj),
            };
            let just_added = if accept {
                added.push(pick.index);
                best[count] = Some((added.clone(), pick.j));
                Some(pick.index)
            } else {
                added = best[count].as_ref().expect("restore target exists").0.clone();
                None
            };
            let mut first = true;
            while added.len() > 2 {
                let current: Vec<usize> =
                    subset.iter().copied().chain(added.iter().copied()).collect();
                let removal = self.least_significant_term_among(&current, &added)?;
                if first && Some(removal.index) == just_added {
                    break;
                }
                let lower = added.len() - 1;
                let accept_removal = match &best[lower] {
                    None => true,
                    Some((_, bj)) => improves(removal.j, *bj),
                };
                if !accept_removal {
                    break;
                }
                added.retain(|&i| i != removal.index);
                best[lower] = Some((added.clone(), removal.j));
                first = false;
            }
            if added.len() == o {
                let (mut chosen, j) = best[o].clone().expect("target size reached");
                chosen.sort_unstable();
                return Ok((chosen, j));
            }
        }
    }

    /// Floating backward mini-search (the top-down mirror): removals with
    /// conditional re-additions drawn from the removed terms, so the
    /// result is a size-`o` subset of the input subset.
    fn sequential_removal(&self, subset: &[usize], o: usize) -> Result<(Vec<usize>, f64)> {
        let mut removed: Vec<usize> = Vec::new();
        let mut best: Vec<Option<(Vec<usize>, f64)>> = vec![None; o + 1];
        loop {
            let kept: Vec<usize> =
                subset.iter().copied().filter(|i| !removed.contains(i)).collect();
            let pick = self.least_significant_term(&kept)?;
            let count = removed.len() + 1;
            let accept = match &best[count] {
                None => true,
                Some((_, bj)) => improves(pick.j, *bj),
            };
            let just_removed = if accept {
                removed.push(pick.index);
                best[count] = Some((removed.clone(), pick.j));
                Some(pick.index)
            } else {
                removed = best[count].as_ref().expect("restore target exists").0.clone();
                None
            };
            let mut first = true;
            while removed.len() > 2 {
                let kept: Vec<usize> =
                    subset.iter().copied().filter(|i| !removed.contains(i)).collect();
                let addition = self.most_significant_term_in_pool(&kept, &removed)?;
                if first && Some(addition.index) == just_removed {
                    break;
                }
                let lower = removed.len() - 1;
                let accept_addition = match &best[lower] {
                    None => true,
                    Some((_, bj)) => improves(addition.j, *bj),
                };
                if !accept_addition {
                    break;
                }
                removed.retain(|&i| i != addition.index);
                best[lower] = Some((removed.clone(), addition.j));
                first = false;
            }
            if removed.len() == o {
                let (mut chosen, j) = best[o].clone().expect("target size reached");
                chosen.sort_unstable();
                return Ok((chosen, j));
            }
        }
    }

    /// Ordinary least squares on the subset's columns over the estimation
    /// rows. Rank-deficient subsets get the least-norm solution and a
    /// deficiency flag.
    pub fn estimate_coefficients(&self, subset: &TermSubset) -> Result<FittedModel> {
        if subset.is_empty() {
            return Err(Error::Subset("cannot fit an empty subset".into()));
        }
        let indices = subset.sorted();
        let rows = self.rows();
        let k = indices.len();
        let mut a = DMatrix::<f64>::zeros(rows, k);
        for (c, &i) in indices.iter().enumerate() {
            for (r, &v) in self.cols[i].iter().enumerate() {
                a[(r, c)] = v;
            }
        }
        let b = DVector::from_column_slice(self.y);
        let svd = a.clone().svd(true, true);
        let max_sv = svd.singular_values.iter().copied().fold(0.0_f64, f64::max);
        let tol = max_sv * rows.max(k) as f64 * f64::EPSILON;
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        let theta = svd
            .solve(&b, tol)
            .map_err(|e| Error::Domain(format!("least squares failed: {e}")))?;
        let residual = &b - &a * &theta;
        let rss = residual.norm_squared();
        let j = self.j(&indices)?;
        Ok(FittedModel {
            subset: TermSubset::new(indices)?.with_criterion(j),
            theta: theta.iter().copied().collect(),
            rss,
            rank_deficient: rank < k,
        })
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn check_budget(n: usize, o: usize) -> Result<()> {
    let combinations = binomial(n, o);
    if combinations > EXHAUSTIVE_BUDGET {
        return Err(Error::ExhaustiveBudget { combinations, budget: EXHAUSTIVE_BUDGET });
    }
    Ok(())
}

/// Visits every size-`k` combination of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        f(&combo);
        let mut i = k;
        while i > 0 {
            i -= 1;
            if combo[i] != i + n - k {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_engine<'a>(cols: &'a [Vec<f64>], y: &'a [f64]) -> ErrEngine<'a> {
        ErrEngine::from_columns(cols.iter().map(Vec::as_slice).collect(), y).unwrap()
    }

    #[test]
    fn j_is_cached_and_order_invariant() {
        let cols = vec![
            vec![1.0, 0.0, 0.5, -0.25],
            vec![0.0, 1.0, 1.0, 2.0],
            vec![0.5, 0.5, -1.0, 1.0],
        ];
        let y = vec![1.0, 2.0, -1.0, 0.5];
        let engine = toy_engine(&cols, &y);
        let a = engine.j(&[0, 1, 2]).unwrap();
        let b = engine.j(&[2, 0, 1]).unwrap();
        assert!((a - b).abs() < 1e-9, "order dependence on the sum: {a} vs {b}");
    }

    #[test]
    fn most_significant_prefers_lower_index_on_duplicate_ties() {
        let shared = vec![1.0, 2.0, 3.0, 4.0];
        let cols = vec![shared.clone(), shared.clone(), vec![0.1, -0.2, 0.0, 0.3]];
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let engine = toy_engine(&cols, &y);
        let pick = engine.most_significant_term(&[]).unwrap();
        assert_eq!(pick.index, 0);
        assert!((pick.j - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_significant_flags_spurious_term_on_noise_free_data() {
        // y built exactly from columns 0 and 1; column 2 is irrelevant.
        let c0 = vec![1.0, 0.0, 1.0, 0.0, 1.0, 2.0];
        let c1 = vec![0.0, 1.0, 0.5, -1.0, 2.0, 0.0];
        let c2 = vec![0.3, 0.3, -0.3, 0.3, 0.1, 0.7];
        let y: Vec<f64> = (0..6).map(|i| 2.0 * c0[i] - 0.5 * c1[i]).collect();
        let cols = vec![c0, c1, c2];
        let engine = toy_engine(&cols, &y);
        let pick = engine.least_significant_term(&[0, 1, 2]).unwrap();
        assert_eq!(pick.index, 2);
        assert!(pick.j >= 1.0 - 1e-10);
    }

    #[test]
    fn definition_generalizations_agree_with_single_term_at_o_1() {
        let cols = vec![
            vec![1.0, 2.0, 0.0, 1.0, -1.0],
            vec![0.0, 1.0, 1.0, 0.0, 2.0],
            vec![1.0, 0.0, 2.0, -1.0, 0.0],
            vec![0.5, 0.5, 0.5, 0.5, 0.5],
        ];
        let y = vec![1.0, 1.5, 2.0, -0.5, 1.0];
        let engine = toy_engine(&cols, &y);
        for mode in [SubsetMode::Exhaustive, SubsetMode::Sequential] {
            let (set, j) = engine.most_significant_subset(1, &[3], mode).unwrap();
            let single = engine.most_significant_term(&[3]).unwrap();
            assert_eq!(set, vec![single.index]);
            assert!((j - single.j).abs() < 1e-12);

            let (rem, jr) = engine.least_significant_subset(1, &[0, 1, 2], mode).unwrap();
            let single = engine.least_significant_term(&[0, 1, 2]).unwrap();
            assert_eq!(rem, vec![single.index]);
            assert!((jr - single.j).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_budget_is_enforced() {
        assert!(check_budget(100, 5).is_err());
        assert!(check_budget(100, 2).is_ok());
    }

    #[test]
    fn estimate_recovers_exact_coefficients_and_flags_duplicates() {
        let c0 = vec![1.0; 6];
        let c1 = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = c1.iter().map(|v| 2.0 + 0.0 * v).collect();
        let cols = vec![c0.clone(), c1, c0.clone()];
        let engine = toy_engine(&cols, &y);
        let fit = engine
            .estimate_coefficients(&TermSubset::new(vec![0]).unwrap())
            .unwrap();
        assert!((fit.theta[0] - 2.0).abs() < 1e-12);
        assert!(!fit.rank_deficient);

        let dup = engine
            .estimate_coefficients(&TermSubset::new(vec![0, 2]).unwrap())
            .unwrap();
        assert!(dup.rank_deficient);
    }

    #[test]
    fn combination_visitor_is_lexicographic_and_complete() {
        let mut seen = Vec::new();
        for_each_combination(5, 3, |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1, 2]);
        assert_eq!(seen[9], vec![2, 3, 4]);
        for pair in seen.windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }
}
