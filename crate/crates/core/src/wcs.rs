//! Weighted (generalized) cosine similarity `xᵗSy / √(xᵗSx · yᵗSy)` and the
//! positive-definiteness check that decides whether it is a proper inner
//! product similarity.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::ComputeError;
use crate::model::{same_catalog, DenseProfileVector, SimilarityMatrix, MATRIX_TOLERANCE};
use crate::numeric;

/// Default relative tolerance for [`psd_check`].
pub const DEFAULT_PSD_TOLERANCE: f64 = 1e-10;

/// Warning attached to weighted-cosine results computed with a matrix that is
/// not positive definite.
pub const NON_PD_WARNING: &str = "non-PD matrix: values are not a valid inner-product similarity";

pub fn weighted_cosine(
    s: &SimilarityMatrix,
    x: &DenseProfileVector,
    y: &DenseProfileVector,
) -> Result<f64, ComputeError> {
    if !same_catalog(s.catalog(), x.catalog()) || !same_catalog(s.catalog(), y.catalog()) {
        return Err(ComputeError::CatalogMismatch);
    }
    let sy = s.mul_vec(y.values());
    let sx = s.mul_vec(x.values());
    let xy = numeric::dot(x.values(), &sy);
    let yy = numeric::dot(y.values(), &sy);
    let xx = numeric::dot(x.values(), &sx);
    if xx.is_nan() || xx <= 0.0 {
        return Err(ComputeError::DegenerateNorm(xx));
    }
    if yy.is_nan() || yy <= 0.0 {
        return Err(ComputeError::DegenerateNorm(yy));
    }
    Ok(xy / (xx * yy).sqrt())
}

/// `1 − weighted_cosine`.
pub fn weighted_cosine_dissimilarity(
    s: &SimilarityMatrix,
    x: &DenseProfileVector,
    y: &DenseProfileVector,
) -> Result<f64, ComputeError> {
    weighted_cosine(s, x, y).map(|v| 1.0 - v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdReport {
    pub n: usize,
    pub is_symmetric: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub is_positive_definite: bool,
    pub is_positive_semidefinite: bool,
    pub tolerance: f64,
}

/// Eigen-decomposes `(S + Sᵗ)/2` and classifies it.
///
/// With `scale = max(1, |λ_max|)`, the matrix is PSD when
/// `λ_min ≥ −tol·scale` and PD when `λ_min > tol·scale`.
pub fn psd_check(s: &SimilarityMatrix, tol: f64) -> Result<PsdReport, ComputeError> {
    let n = s.n();
    for i in 0..n {
        for j in 0..n {
            if !s.get(i, j).is_finite() {
                return Err(ComputeError::NonFinite { row: i, col: j });
            }
        }
    }
    let is_symmetric =
        (0..n).all(|i| (0..i).all(|j| (s.get(i, j) - s.get(j, i)).abs() <= MATRIX_TOLERANCE));
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (s.get(i, j) + s.get(j, i)));
    let eigen = SymmetricEigen::new(sym);
    let min = eigen
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let max = eigen
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let margin = tol * max.abs().max(1.0);
    Ok(PsdReport {
        n,
        is_symmetric,
        min_eigenvalue: min,
        max_eigenvalue: max,
        is_positive_definite: min > margin,
        is_positive_semidefinite: min >= -margin,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CategoryCatalog;
    use crate::sapv::tests::{random_similarity, worked_example_matrix};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn catalog(n: usize) -> Arc<CategoryCatalog> {
        Arc::new(CategoryCatalog::new((0..n).map(|i| format!("C{i}"))).unwrap())
    }

    fn vector(cat: &Arc<CategoryCatalog>, v: &[f64]) -> DenseProfileVector {
        DenseProfileVector::new(cat.clone(), v.to_vec()).unwrap()
    }

    fn plain_cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    // Direct double sum Σ_i Σ_j x_i s_ij y_j.
    fn bilinear(s: &SimilarityMatrix, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                acc += xi * s.get(i, j) * yj;
            }
        }
        acc
    }

    #[test]
    fn self_similarity_is_one() {
        let s = worked_example_matrix();
        let x = vector(s.catalog(), &[4.0, 1.0, 0.0, 0.0]);
        assert!((weighted_cosine(&s, &x, &x).unwrap() - 1.0).abs() <= 1e-12);
        assert!(weighted_cosine_dissimilarity(&s, &x, &x).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn identity_reduces_to_plain_cosine() {
        let cat = catalog(2);
        let s = SimilarityMatrix::identity(cat.clone());
        let got =
            weighted_cosine(&s, &vector(&cat, &[1.0, 0.0]), &vector(&cat, &[1.0, 1.0])).unwrap();
        let oracle = plain_cosine(&[1.0, 0.0], &[1.0, 1.0]);
        assert!((got - oracle).abs() <= 1e-12);
        assert!((got - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-12);

        let wcd = weighted_cosine_dissimilarity(
            &s,
            &vector(&cat, &[1.0, 0.0]),
            &vector(&cat, &[0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(wcd, 1.0);
    }

    #[test]
    fn worked_example_pair() {
        let s = worked_example_matrix();
        let x = [4.0, 1.0, 0.0, 0.0];
        let y = [0.0, 0.0, 0.0, 1.0];
        let xy = bilinear(&s, &x, &y);
        let xx = bilinear(&s, &x, &x);
        let yy = bilinear(&s, &y, &y);
        assert!((xy - 3.3).abs() < 1e-12);
        assert!((xx - 17.8).abs() < 1e-12);
        assert!((yy - 1.0).abs() < 1e-12);
        let oracle = xy / (xx * yy).sqrt();
        assert!((oracle - 0.7821).abs() < 1e-4);

        let got = weighted_cosine(&s, &vector(s.catalog(), &x), &vector(s.catalog(), &y)).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        let wcd =
            weighted_cosine_dissimilarity(&s, &vector(s.catalog(), &x), &vector(s.catalog(), &y))
                .unwrap();
        assert!((wcd - (1.0 - oracle)).abs() < 1e-12);
        assert!((wcd - 0.2178).abs() < 1e-4);
    }

    #[test]
    fn degenerate_norm_with_zero_diagonal() {
        let cat = catalog(2);
        let s = SimilarityMatrix::new_unchecked(cat.clone(), vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let err = weighted_cosine(&s, &vector(&cat, &[1.0, 0.0]), &vector(&cat, &[1.0, 1.0]))
            .unwrap_err();
        assert_eq!(err, ComputeError::DegenerateNorm(0.0));
    }

    #[test]
    fn catalog_mismatch() {
        let s = worked_example_matrix();
        let other = catalog(4);
        let x = vector(&other, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            weighted_cosine(&s, &x, &x).unwrap_err(),
            ComputeError::CatalogMismatch
        );
    }

    #[test]
    fn psd_identity() {
        let r = psd_check(
            &SimilarityMatrix::identity(catalog(5)),
            DEFAULT_PSD_TOLERANCE,
        )
        .unwrap();
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);
        assert!(r.is_positive_definite && r.is_positive_semidefinite && r.is_symmetric);
    }

    #[test]
    fn psd_indefinite_two_by_two() {
        let s = SimilarityMatrix::new_unchecked(catalog(2), vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let r = psd_check(&s, DEFAULT_PSD_TOLERANCE).unwrap();
        // roots of λ² − 2λ − 3
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-9);
        assert!((r.max_eigenvalue - 3.0).abs() < 1e-9);
        assert!(!r.is_positive_definite && !r.is_positive_semidefinite);
    }

    #[test]
    fn psd_worked_example() {
        let r = psd_check(&worked_example_matrix(), DEFAULT_PSD_TOLERANCE).unwrap();
        assert!(r.is_positive_definite);
        assert!(r.min_eigenvalue > 0.0);
    }

    #[test]
    fn psd_singular_boundary() {
        // all-ones: eigenvalues {3, 0, 0}
        let s = SimilarityMatrix::new(catalog(3), vec![1.0; 9]).unwrap();
        let r = psd_check(&s, DEFAULT_PSD_TOLERANCE).unwrap();
        assert!(r.is_positive_semidefinite);
        assert!(!r.is_positive_definite);
    }

    #[test]
    fn psd_non_finite() {
        let s = SimilarityMatrix::new_unchecked(catalog(2), vec![1.0, f64::NAN, 0.0, 1.0]).unwrap();
        assert_eq!(
            psd_check(&s, DEFAULT_PSD_TOLERANCE).unwrap_err(),
            ComputeError::NonFinite { row: 0, col: 1 }
        );
    }

    #[test]
    fn psd_asymmetric_flagged() {
        let s = SimilarityMatrix::new_unchecked(catalog(2), vec![1.0, 0.2, 0.4, 1.0]).unwrap();
        let r = psd_check(&s, DEFAULT_PSD_TOLERANCE).unwrap();
        assert!(!r.is_symmetric);
        assert!((r.min_eigenvalue - 0.7).abs() < 1e-12);
    }

    fn pair_instance() -> impl Strategy<Value = (SimilarityMatrix, Vec<f64>, Vec<f64>)> {
        (2usize..12).prop_flat_map(|n| {
            (
                random_similarity(n),
                prop::collection::vec(0.0f64..20.0, n),
                prop::collection::vec(0.0f64..20.0, n),
            )
                .prop_map(|(s, mut x, mut y)| {
                    x[0] += 0.1;
                    if let Some(last) = y.last_mut() {
                        *last += 0.1;
                    }
                    (s, x, y)
                })
        })
    }

    proptest! {
        #[test]
        fn symmetric_in_arguments((s, x, y) in pair_instance()) {
            let (x, y) = (vector(s.catalog(), &x), vector(s.catalog(), &y));
            let a = weighted_cosine(&s, &x, &y).unwrap();
            let b = weighted_cosine(&s, &y, &x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn bilinear_scale_invariance((s, x, y) in pair_instance(), a in 1e-3f64..1e4, b in 1e-3f64..1e4) {
            let (x, y) = (vector(s.catalog(), &x), vector(s.catalog(), &y));
            let base = weighted_cosine(&s, &x, &y).unwrap();
            let scaled = weighted_cosine(&s, &x.scaled(a).unwrap(), &y.scaled(b).unwrap()).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-12);
        }

        #[test]
        fn bounded_for_psd_matrices((s, x, y) in pair_instance()) {
            prop_assume!(psd_check(&s, DEFAULT_PSD_TOLERANCE).unwrap().is_positive_semidefinite);
            let v = weighted_cosine(&s, &vector(s.catalog(), &x), &vector(s.catalog(), &y)).unwrap();
            prop_assert!(v.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn identity_matches_plain_cosine(x in prop::collection::vec(0.0f64..10.0, 6), y in prop::collection::vec(0.0f64..10.0, 6)) {
            let mut x = x; x[0] += 0.1;
            let mut y = y; y[5] += 0.1;
            let cat = catalog(6);
            let s = SimilarityMatrix::identity(cat.clone());
            let got = weighted_cosine(&s, &vector(&cat, &x), &vector(&cat, &y)).unwrap();
            prop_assert!((got - plain_cosine(&x, &y)).abs() <= 1e-12);
        }

        #[test]
        fn similarity_plus_dissimilarity_is_one((s, x, y) in pair_instance()) {
            let (x, y) = (vector(s.catalog(), &x), vector(s.catalog(), &y));
            let wcs = weighted_cosine(&s, &x, &y).unwrap();
            let wcd = weighted_cosine_dissimilarity(&s, &x, &y).unwrap();
            prop_assert_eq!(wcs + wcd, 1.0);
        }

        #[test]
        fn pd_implies_psd(s in (2usize..10).prop_flat_map(random_similarity)) {
            let r = psd_check(&s, DEFAULT_PSD_TOLERANCE).unwrap();
            prop_assert!(!r.is_positive_definite || r.is_positive_semidefinite);
        }
    }
}
