//! Similarity-adapted publication vectors (SAPV).
//!
//! The publication column `M` is mapped through the category similarity
//! matrix, `S·M`, and the result is normalized by its own L1 norm. Normalizing
//! after the product makes the vector independent of the unit's size, so
//! distances between two units do not depend on how much either of them
//! publishes.
//!
//! [`sapv_legacy`] keeps the older variant that divides `S·M` by the total
//! publication count `T` instead. Its output does not sum to one, which makes
//! distances between units of different breadth incomparable; it is retained
//! only so the two can be compared.

use std::sync::Arc;

use serde::Serialize;

use crate::error::ComputeError;
use crate::model::{same_catalog, CategoryCatalog, DenseProfileVector, SimilarityMatrix};
use crate::numeric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Raw `S·M`.
    Unnormalized,
    /// `S·M / T`, the pre-correction variant.
    LegacyByT,
    /// `S·M / ‖S·M‖₁`.
    L1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SapvVector {
    catalog: Arc<CategoryCatalog>,
    values: Vec<f64>,
    normalization: Normalization,
    divisor: f64,
}

impl SapvVector {
    pub fn catalog(&self) -> &Arc<CategoryCatalog> {
        &self.catalog
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// The number `S·M` was divided by: 1, `T` or `‖S·M‖₁`.
    pub fn divisor(&self) -> f64 {
        self.divisor
    }

    pub fn l1_norm(&self) -> f64 {
        numeric::sum(self.values.iter().map(|v| v.abs()))
    }
}

fn product(s: &SimilarityMatrix, m: &DenseProfileVector) -> Result<Vec<f64>, ComputeError> {
    if !same_catalog(s.catalog(), m.catalog()) {
        return Err(ComputeError::CatalogMismatch);
    }
    if m.total() <= 0.0 {
        return Err(ComputeError::ZeroTotal);
    }
    Ok(s.mul_vec(m.values()))
}

/// `S·M`: entry k is `Σ_j s_{kj} m_j`.
pub fn similarity_adapted(
    s: &SimilarityMatrix,
    m: &DenseProfileVector,
) -> Result<SapvVector, ComputeError> {
    Ok(SapvVector {
        catalog: m.catalog().clone(),
        values: product(s, m)?,
        normalization: Normalization::Unnormalized,
        divisor: 1.0,
    })
}

/// Scale-invariant SAPV: `S·M` divided by the sum of its entries.
pub fn sapv_l1(s: &SimilarityMatrix, m: &DenseProfileVector) -> Result<SapvVector, ComputeError> {
    let raw = product(s, m)?;
    // S and M are entrywise nonnegative, so the plain sum is the L1 norm.
    assert!(
        raw.iter().all(|&v| v >= 0.0),
        "S·M has a negative entry; similarity matrix is not nonnegative"
    );
    let norm = numeric::sum(raw.iter().copied());
    assert!(norm > 0.0, "‖S·M‖₁ is zero despite a unit diagonal");
    Ok(SapvVector {
        catalog: m.catalog().clone(),
        values: raw.iter().map(|v| v / norm).collect(),
        normalization: Normalization::L1,
        divisor: norm,
    })
}

/// **Deprecated**: the pre-correction variant `S·M / T`.
///
/// The result does not have unit norm. Use [`sapv_l1`] for distances; this
/// exists only to compare against the corrected vectors.
pub fn sapv_legacy(
    s: &SimilarityMatrix,
    m: &DenseProfileVector,
) -> Result<SapvVector, ComputeError> {
    let raw = product(s, m)?;
    let total = m.total();
    Ok(SapvVector {
        catalog: m.catalog().clone(),
        values: raw.iter().map(|v| v / total).collect(),
        normalization: Normalization::LegacyByT,
        divisor: total,
    })
}
