//! Gram-Schmidt orthogonalization and the Error-Reduction-Ratio.
//!
//! Orthogonalizing the selected columns against each other decouples their
//! contributions: the ERR of a column is the fraction of output variance
//! its orthogonalized direction explains,
//!
//! ```text
//! err_i = g_i^2 (w_i' w_i) / (y' y),   g_i = (w_i' y) / (w_i' w_i)
//! ```
//!
//! and the subset criterion J is the sum of ERRs, which equals the
//! fraction of `y`'s energy captured by the subset's column span (so the
//! sum is independent of the orthogonalization order even though the
//! individual ERRs are not).
//!
//! The projection is the modified Gram-Schmidt update
//! `w_i = x_i − Σ_m (w_m' x_i / w_m' w_m) w_m`, applied twice for
//! numerical orthogonality. Columns whose orthogonalized energy falls
//! below [`RANK_TOLERANCE`] times their original energy are flagged
//! degenerate, contribute zero ERR, and are excluded from later
//! projections.

use crate::error::{Error, Result};

/// Relative rank tolerance: a column is degenerate when its orthogonalized
/// squared norm drops below this fraction of its original squared norm.
pub const RANK_TOLERANCE: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// One orthogonal direction kept by the decomposition.
#[derive(Clone, Debug)]
pub(crate) struct BasisVector {
    pub v: Vec<f64>,
    pub norm2: f64,
}

/// Subtracts the projections of `v` onto `basis` (two passes).
pub(crate) fn project_out(basis: &[BasisVector], v: &mut [f64]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(&b.v, v) / b.norm2;
            for (lhs, rhs) in v.iter_mut().zip(&b.v) {
                *lhs -= c * rhs;
            }
        }
    }
}

/// Result of orthogonalizing a list of columns against an output.
#[derive(Clone, Debug)]
pub struct OrthoDecomposition {
    w: Vec<Vec<f64>>,
    g: Vec<f64>,
    err: Vec<f64>,
    order: Vec<usize>,
    degenerate: Vec<bool>,
    yty: f64,
}

impl OrthoDecomposition {
    /// Orthogonal columns, one per input column in orthogonalization order.
    /// Degenerate columns keep their (numerically zero) residual vector.
    pub fn w(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// Projection coefficients per column (zero for degenerate columns).
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// ERR per column, each in [0, 1].
    pub fn err(&self) -> &[f64] {
        &self.err
    }

    /// The term indices in orthogonalization order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn degenerate(&self) -> &[bool] {
        &self.degenerate
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }

    /// Σ err: the criterion J of the orthogonalized subset.
    pub fn j(&self) -> f64 {
        self.err.iter().sum()
    }

    pub fn yty(&self) -> f64 {
        self.yty
    }
}

/// Orthogonalizes `columns` (in the given order) against `y` and computes
/// per-column ERR values.
///
/// `order` labels the columns in the returned decomposition; pass
/// `0..columns.len()` when the columns are not drawn from a candidate set.
pub fn orthogonalize_with_order(
    columns: &[&[f64]],
    y: &[f64],
    order: Vec<usize>,
) -> Result<OrthoDecomposition> {
    if columns.is_empty() {
        return Err(Error::Subset("cannot orthogonalize an empty column set".into()));
    }
    if columns.iter().any(|c| c.len() != y.len()) {
        return Err(Error::InvalidSpec("column/output row counts differ".into()));
    }
    let yty = dot(y, y);
    if yty <= 0.0 {
        return Err(Error::DegenerateOutput);
    }
    let mut basis: Vec<BasisVector> = Vec::with_capacity(columns.len());
    let mut w = Vec::with_capacity(columns.len());
    let mut g = Vec::with_capacity(columns.len());
    let mut err = Vec::with_capacity(columns.len());
    let mut degenerate = Vec::with_capacity(columns.len());
    for col in columns {
        let orig_norm2 = dot(col, col);
        let mut v = col.to_vec();
        project_out(&basis, &mut v);
        let norm2 = dot(&v, &v);
        if orig_norm2 <= 0.0 || norm2 <= RANK_TOLERANCE * orig_norm2 {
            degenerate.push(true);
            g.push(0.0);
            err.push(0.0);
            w.push(v);
        } else {
            let gi = dot(&v, y) / norm2;
            g.push(gi);
            err.push(gi * gi * norm2 / yty);
            degenerate.push(false);
            w.push(v.clone());
            basis.push(BasisVector { v, norm2 });
        }
    }
    Ok(OrthoDecomposition { w, g, err, order, degenerate, yty })
}

/// [`orthogonalize_with_order`] with columns labeled `0..columns.len()`.
pub fn orthogonalize(columns: &[&[f64]], y: &[f64]) -> Result<OrthoDecomposition> {
    let order = (0..columns.len()).collect();
    orthogonalize_with_order(columns, y, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_column_equal_to_y_has_unit_err() {
        let y = vec![1.0, -2.0, 3.0, 0.5];
        let d = orthogonalize(&[&y], &y).unwrap();
        assert!((d.err()[0] - 1.0).abs() < 1e-14);
        assert!((d.j() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn column_orthogonal_to_y_has_zero_err() {
        let y = vec![1.0, 1.0, 0.0, 0.0];
        let x = vec![0.0, 0.0, 2.0, -1.0];
        let d = orthogonalize(&[&x], &y).unwrap();
        assert_eq!(d.err()[0], 0.0);
    }

    #[test]
    fn duplicate_column_is_degenerate_with_zero_err() {
        let y = vec![1.0, 2.0, 3.0];
        let x = vec![1.0, 0.5, -0.5];
        let d = orthogonalize(&[&x, &x], &y).unwrap();
        assert_eq!(d.degenerate(), &[false, true]);
        assert_eq!(d.err()[1], 0.0);
        assert_eq!(d.degenerate_count(), 1);
    }

    #[test]
    fn zero_output_is_rejected() {
        let y = vec![0.0; 3];
        let x = vec![1.0, 2.0, 3.0];
        assert!(matches!(orthogonalize(&[&x], &y), Err(Error::DegenerateOutput)));
    }

    #[test]
    fn pairwise_orthogonality_on_random_columns() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let rows = rng.random_range(5..120);
            let cols = rng.random_range(2..20.min(rows));
            let data: Vec<Vec<f64>> = (0..cols)
                .map(|_| (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let y: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
            let refs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
            let d = orthogonalize(&refs, &y).unwrap();
            for i in 0..cols {
                for j in 0..i {
                    if d.degenerate()[i] || d.degenerate()[j] {
                        continue;
                    }
                    let ni = dot(&d.w()[i], &d.w()[i]).sqrt();
                    let nj = dot(&d.w()[j], &d.w()[j]).sqrt();
                    let ip = dot(&d.w()[i], &d.w()[j]).abs();
                    assert!(ip <= 1e-8 * ni * nj, "orthogonality violated: {ip}");
                }
            }
            let total: f64 = d.j();
            assert!((0.0..=1.0 + 1e-10).contains(&total));
        }
    }
}
