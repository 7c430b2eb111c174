//! Barycenters: the weighted mean of base-map coordinates and the general
//! weighted barycenter of a set of vectors.

use serde::Serialize;

use crate::error::ComputeError;
use crate::model::{same_catalog, BaseMap, DenseProfileVector};
use crate::numeric::{self, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point2D {
    pub c1: f64,
    pub c2: f64,
}

impl Point2D {
    pub fn new(c1: f64, c2: f64) -> Self {
        Self { c1, c2 }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.c1, self.c2]
    }
}

/// Barycenter of a profile on the base map: `C_k = Σ_j m_j L_{j,k} / T`.
///
/// Categories with zero publications are allowed and simply carry no weight.
pub fn barycenter_2d(m: &DenseProfileVector, map: &BaseMap) -> Result<Point2D, ComputeError> {
    if !same_catalog(m.catalog(), map.catalog()) {
        return Err(ComputeError::CatalogMismatch);
    }
    let total = m.total();
    if total <= 0.0 {
        return Err(ComputeError::ZeroTotal);
    }
    let mut c1 = CompensatedSum::new();
    let mut c2 = CompensatedSum::new();
    for (&mass, coord) in m.values().iter().zip(map.coords()) {
        c1.add(mass * coord[0]);
        c2.add(mass * coord[1]);
    }
    Ok(Point2D::new(c1.value() / total, c2.value() / total))
}

/// Weighted barycenter `(1/T) Σ_n w_n X_n` of `points` with positive `weights`.
///
/// With unit weights this is the plain mean of the points.
pub fn generalized_barycenter<P: AsRef<[f64]>>(
    weights: &[f64],
    points: &[P],
) -> Result<Vec<f64>, ComputeError> {
    if weights.len() != points.len() {
        return Err(ComputeError::LengthMismatch {
            left: weights.len(),
            right: points.len(),
        });
    }
    let Some(first) = points.first() else {
        return Err(ComputeError::EmptyInput);
    };
    let dim = first.as_ref().len();
    for (index, &w) in weights.iter().enumerate() {
        if !(w > 0.0 && w.is_finite()) {
            return Err(ComputeError::NonPositiveWeight { index, value: w });
        }
    }
    if let Some(bad) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(ComputeError::LengthMismatch {
            left: dim,
            right: bad.as_ref().len(),
        });
    }
    let total = numeric::sum(weights.iter().copied());
    Ok((0..dim)
        .map(|k| numeric::sum(weights.iter().zip(points).map(|(w, p)| w * p.as_ref()[k])) / total)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CategoryCatalog;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn fixture(coords: Vec<[f64; 2]>) -> (Arc<CategoryCatalog>, BaseMap) {
        let cat =
            Arc::new(CategoryCatalog::new((0..coords.len()).map(|i| format!("C{i}"))).unwrap());
        let map = BaseMap::new(cat.clone(), coords).unwrap();
        (cat, map)
    }

    fn vector(cat: &Arc<CategoryCatalog>, v: &[f64]) -> DenseProfileVector {
        DenseProfileVector::new(cat.clone(), v.to_vec()).unwrap()
    }

    // Plain weighted mean, written without the compensated helpers.
    fn weighted_mean_oracle(m: &[f64], coords: &[[f64; 2]]) -> [f64; 2] {
        let t: f64 = m.iter().sum();
        let mut out = [0.0; 2];
        for (w, c) in m.iter().zip(coords) {
            out[0] += w * c[0];
            out[1] += w * c[1];
        }
        [out[0] / t, out[1] / t]
    }

    #[test]
    fn all_mass_in_one_category() {
        let (cat, map) = fixture(vec![[0.3, -1.0], [2.5, 7.25], [9.0, 9.0]]);
        let p = barycenter_2d(&vector(&cat, &[0.0, 5.0, 0.0]), &map).unwrap();
        assert_eq!(p, Point2D::new(2.5, 7.25));
    }

    #[test]
    fn rectangle_vertices() {
        let (cat, map) = fixture(vec![[0.0, 0.0], [0.0, 1.0], [2.0, 1.0], [2.0, 0.0]]);
        let p = barycenter_2d(&vector(&cat, &[1.0, 1.0, 1.0, 1.0]), &map).unwrap();
        assert_eq!(p, Point2D::new(1.0, 0.5));
    }

    #[test]
    fn four_one_profile_matches_oracle() {
        let coords = vec![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]];
        let (cat, map) = fixture(coords.clone());
        let m = [4.0, 1.0, 0.0, 0.0];
        let oracle = weighted_mean_oracle(&m, &coords);
        assert!((oracle[0] - 0.8).abs() < 1e-15 && (oracle[1] - 0.2).abs() < 1e-15);
        let p = barycenter_2d(&vector(&cat, &m), &map).unwrap();
        assert!((p.c1 - oracle[0]).abs() < 1e-15);
        assert!((p.c2 - oracle[1]).abs() < 1e-15);
    }

    #[test]
    fn catalog_mismatch() {
        let (_, map) = fixture(vec![[0.0, 0.0], [1.0, 1.0]]);
        let other = Arc::new(CategoryCatalog::new(["X", "Y"]).unwrap());
        assert_eq!(
            barycenter_2d(&vector(&other, &[1.0, 1.0]), &map).unwrap_err(),
            ComputeError::CatalogMismatch
        );
    }

    #[test]
    fn generalized_examples() {
        let rect = [[0.0, 0.0], [0.0, 1.0], [2.0, 1.0], [2.0, 0.0]];
        assert_eq!(
            generalized_barycenter(&[1.0; 4], &rect).unwrap(),
            vec![1.0, 0.5]
        );
        assert_eq!(
            generalized_barycenter(&[1.0], &[[3.5, -2.0, 7.0]]).unwrap(),
            vec![3.5, -2.0, 7.0]
        );
        assert_eq!(
            generalized_barycenter(&[3.0, 1.0], &[[0.0, 0.0], [4.0, 0.0]]).unwrap(),
            vec![1.0, 0.0]
        );
    }

    #[test]
    fn generalized_errors() {
        assert!(matches!(
            generalized_barycenter(&[1.0], &[[0.0], [1.0]]),
            Err(ComputeError::LengthMismatch { .. })
        ));
        assert_eq!(
            generalized_barycenter::<[f64; 1]>(&[], &[]).unwrap_err(),
            ComputeError::EmptyInput
        );
        assert_eq!(
            generalized_barycenter(&[1.0, 0.0], &[[0.0], [1.0]]).unwrap_err(),
            ComputeError::NonPositiveWeight {
                index: 1,
                value: 0.0
            }
        );
        assert!(matches!(
            generalized_barycenter(&[1.0, 1.0], &[vec![0.0], vec![1.0, 2.0]]),
            Err(ComputeError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<[f64; 2]>)> {
        (2usize..12).prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..100.0, n),
                prop::collection::vec(
                    (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| [a, b]),
                    n,
                ),
            )
        })
    }

    proptest! {
        #[test]
        fn scale_invariant((mut m, coords) in instance(), c in 1e-3f64..1e6) {
            m[0] += 1.0;
            let (cat, map) = fixture(coords);
            let v = vector(&cat, &m);
            let a = barycenter_2d(&v, &map).unwrap();
            let b = barycenter_2d(&v.scaled(c).unwrap(), &map).unwrap();
            let scale = a.c1.abs().max(a.c2.abs()).max(1.0);
            prop_assert!((a.c1 - b.c1).abs() <= 1e-12 * scale);
            prop_assert!((a.c2 - b.c2).abs() <= 1e-12 * scale);
        }

        #[test]
        fn convex_hull_bounds((mut m, coords) in instance()) {
            m[0] += 1.0;
            let (cat, map) = fixture(coords.clone());
            let p = barycenter_2d(&vector(&cat, &m), &map).unwrap();
            for k in 0..2 {
                let support = m.iter().zip(&coords).filter(|(w, _)| **w > 0.0).map(|(_, c)| c[k]);
                let lo = support.clone().fold(f64::INFINITY, f64::min);
                let hi = support.fold(f64::NEG_INFINITY, f64::max);
                let v = p.to_array()[k];
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }

        #[test]
        fn agrees_with_generalized((mut m, coords) in instance()) {
            m[0] += 1.0;
            let (cat, map) = fixture(coords.clone());
            let p = barycenter_2d(&vector(&cat, &m), &map).unwrap();
            let (w, pts): (Vec<f64>, Vec<[f64; 2]>) = m.iter().zip(&coords)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, c)| (*w, *c))
                .unzip();
            let g = generalized_barycenter(&w, &pts).unwrap();
            prop_assert!((p.c1 - g[0]).abs() <= 1e-12 * (1.0 + g[0].abs()));
            prop_assert!((p.c2 - g[1]).abs() <= 1e-12 * (1.0 + g[1].abs()));
        }

        #[test]
        fn translation_equivariant((mut m, coords) in instance(), dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
            m[0] += 1.0;
            let (cat, map) = fixture(coords.clone());
            let shifted = BaseMap::new(cat.clone(), coords.iter().map(|c| [c[0] + dx, c[1] + dy]).collect()).unwrap();
            let v = vector(&cat, &m);
            let a = barycenter_2d(&v, &map).unwrap();
            let b = barycenter_2d(&v, &shifted).unwrap();
            prop_assert!((b.c1 - (a.c1 + dx)).abs() <= 1e-12 * 100.0);
            prop_assert!((b.c2 - (a.c2 + dy)).abs() <= 1e-12 * 100.0);
        }
    }
}
