//! Small dense-matrix helpers shared by the solver.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};

/// Frobenius norm, unsquared.
pub fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Elementwise positive part `max(x, 0)`.
pub fn positive_part(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| v.max(0.0))
}

/// Elementwise negative part `max(-x, 0)`.
pub fn negative_part(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| (-v).max(0.0))
}

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// `max_dim * sigma_max * eps` are treated as zero, so rank-deficient
/// inputs are handled.
pub fn pseudo_inverse(a: &Array2<f64>) -> Array2<f64> {
    let (rows, cols) = a.dim();
    let na = DMatrix::from_row_iterator(rows, cols, a.iter().copied());
    let svd = na.svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = sigma_max * rows.max(cols) as f64 * f64::EPSILON;
    let pinv = svd
        .pseudo_inverse(tol)
        .expect("pseudo_inverse: non-negative tolerance");
    let mut out = Array2::zeros((cols, rows));
    for r in 0..cols {
        for c in 0..rows {
            out[[r, c]] = pinv[(r, c)];
        }
    }
    out
}
