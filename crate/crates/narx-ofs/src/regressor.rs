//! Design-matrix construction: one column per candidate term, rows over
//! the time indices with a full measured history.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::term::CandidateSet;

/// Column-major design matrix aligned to valid time indices.
///
/// The first `max_lag` samples only feed lags; row `r` corresponds to the
/// 0-based time index `max_lag + r`, so every entry is a product of real
/// measurements and the ERR statistics carry no start-up transient.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressorMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
    max_lag: usize,
    /// Output samples aligned with the rows.
    target: Vec<f64>,
}

impl RegressorMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    /// Column `j` over all rows.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Column `j` restricted to the first `n_rows` rows.
    pub fn column_head(&self, j: usize, n_rows: usize) -> &[f64] {
        &self.data[j * self.rows..j * self.rows + n_rows]
    }

    /// The output samples aligned with the rows.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// 0-based time index of row `r`.
    pub fn time_of_row(&self, r: usize) -> usize {
        self.max_lag + r
    }

    /// Number of leading rows that fall in the estimation partition for
    /// the given split index.
    pub fn estimation_rows(&self, split_index: usize) -> Result<usize> {
        if split_index <= self.max_lag {
            return Err(Error::InsufficientData(format!(
                "split index {split_index} leaves no estimation rows past lag {}",
                self.max_lag
            )));
        }
        Ok((split_index - self.max_lag).min(self.rows))
    }
}

/// Builds the design matrix for every candidate term over `data`.
///
/// ```
/// use narx_ofs::{build_regressors, enumerate_terms, Dataset, ModelSpec};
///
/// let spec = ModelSpec::new(2, 2, 2).unwrap();
/// let candidates = enumerate_terms(&spec).unwrap();
/// let data = Dataset::new(vec![1.0; 10], vec![2.0; 10], 7).unwrap();
/// let matrix = build_regressors(&candidates, &data).unwrap();
/// assert_eq!(matrix.rows(), 8); // N - max_lag
/// assert!(matrix.column(0).iter().all(|&v| v == 1.0)); // constant column
/// ```
pub fn build_regressors(candidates: &CandidateSet, data: &Dataset) -> Result<RegressorMatrix> {
    let max_lag = candidates.spec().max_lag();
    let n = data.len();
    if n <= max_lag {
        return Err(Error::InsufficientData(format!(
            "{n} samples cannot support lags up to {max_lag}"
        )));
    }
    let rows = n - max_lag;
    let cols = candidates.len();
    let u = data.u();
    let y = data.y();
    let mut matrix = Vec::with_capacity(rows * cols);
    for term in candidates.terms() {
        for r in 0..rows {
            matrix.push(term.eval(u, y, max_lag + r));
        }
    }
    let target = y[max_lag..].to_vec();
    Ok(RegressorMatrix { data: matrix, rows, cols, max_lag, target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{enumerate_terms, ModelSpec};

    #[test]
    fn row_count_drops_the_max_lag() {
        let spec = ModelSpec::new(4, 4, 3).unwrap();
        let candidates = enumerate_terms(&spec).unwrap();
        let data = Dataset::new(vec![0.5; 1000], vec![0.25; 1000], 700).unwrap();
        let m = build_regressors(&candidates, &data).unwrap();
        assert_eq!(m.rows(), 996);
        assert_eq!(m.cols(), 165);
        assert_eq!(m.estimation_rows(700).unwrap(), 696);
    }

    #[test]
    fn entries_are_lagged_products() {
        let spec = ModelSpec::new(2, 1, 2).unwrap();
        let candidates = enumerate_terms(&spec).unwrap();
        let u = vec![1.0, 2.0, 3.0, 4.0];
        let y = vec![1.0, 1.0, 2.0, 3.0];
        let data = Dataset::new(u, y, 3).unwrap();
        let m = build_regressors(&candidates, &data).unwrap();
        // max_lag = 2, rows are times 2 and 3 (0-based).
        let idx = candidates.index_of(&"y(k-1)*u(k-2)".parse().unwrap()).unwrap();
        assert_eq!(m.column(idx), &[1.0 * 1.0, 2.0 * 2.0]);
        assert_eq!(m.target(), &[2.0, 3.0]);
    }

    #[test]
    fn too_short_data_is_rejected() {
        let spec = ModelSpec::new(4, 4, 1).unwrap();
        let candidates = enumerate_terms(&spec).unwrap();
        let data = Dataset::new(vec![0.0; 4], vec![0.0; 4], 2).unwrap();
        assert!(matches!(
            build_regressors(&candidates, &data),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn construction_is_deterministic() {
        let spec = ModelSpec::new(3, 3, 2).unwrap();
        let candidates = enumerate_terms(&spec).unwrap();
        let sys = crate::systems::builtin_system("S2").unwrap();
        let data = sys.generate(120, 80, 17).unwrap();
        let a = build_regressors(&candidates, &data).unwrap();
        let b = build_regressors(&candidates, &data).unwrap();
        assert_eq!(a, b);
    }
}
