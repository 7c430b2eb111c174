//! Domain types shared by every method: the category catalog, publication
//! profiles, the category similarity matrix and the 2D base map.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric;

/// Tolerance used for the similarity-matrix invariants (symmetry, range, diagonal).
pub const MATRIX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("catalog has no categories")]
    EmptyCatalog,
    #[error("empty category label at index {0}")]
    EmptyLabel(usize),
    #[error("duplicate category label {0:?}")]
    DuplicateLabel(String),
    #[error("count for {category:?} must be finite and nonnegative, got {value}")]
    InvalidCount { category: String, value: f64 },
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("no counts left after dropping unknown categories")]
    AllCountsDropped,
    #[error("profile {0:?} has no positive count")]
    EmptyProfile(String),
    #[error("cannot aggregate an empty list of profiles")]
    EmptyList,
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("similarity {value} at ({row}, {col}) outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("diagonal entry {index} is {value}, expected 1")]
    DiagonalNotUnit { index: usize, value: f64 },
}

/// Ordered list of category labels; the index space of every vector and matrix.
#[derive(Debug, Clone)]
pub struct CategoryCatalog {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl CategoryCatalog {
    pub fn new<I, S>(labels: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(ModelError::EmptyCatalog);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(ModelError::EmptyLabel(i));
            }
            if index.insert(label.clone(), i).is_some() {
                return Err(ModelError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

impl PartialEq for CategoryCatalog {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Eq for CategoryCatalog {}

/// True when both handles describe the same index space.
pub fn same_catalog(a: &Arc<CategoryCatalog>, b: &Arc<CategoryCatalog>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    ResearchGroup,
    PanelMember,
    AggregatePanel,
    AggregateGroups,
}

impl EntityKind {
    pub fn is_aggregate(self) -> bool {
        matches!(
            self,
            EntityKind::AggregatePanel | EntityKind::AggregateGroups
        )
    }

    /// Research groups and the all-groups aggregate.
    pub fn is_group_side(self) -> bool {
        matches!(
            self,
            EntityKind::ResearchGroup | EntityKind::AggregateGroups
        )
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntityKind::ResearchGroup => "group",
            EntityKind::PanelMember => "panel_member",
            EntityKind::AggregatePanel => "aggregate_panel",
            EntityKind::AggregateGroups => "aggregate_groups",
        };
        f.write_str(s)
    }
}

/// Publication counts per category for one entity.
///
/// Counts are nonnegative reals so that fractional counting can reuse the
/// pipeline. Repeated categories passed to [`PublicationProfile::new`]
/// accumulate.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicationProfile {
    entity_id: String,
    kind: EntityKind,
    counts: BTreeMap<String, f64>,
}

impl PublicationProfile {
    pub fn new<I, S>(
        entity_id: impl Into<String>,
        kind: EntityKind,
        counts: I,
    ) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map: BTreeMap<String, f64> = BTreeMap::new();
        for (category, value) in counts {
            let category = category.into();
            if !value.is_finite() || value < 0.0 {
                return Err(ModelError::InvalidCount { category, value });
            }
            *map.entry(category).or_insert(0.0) += value;
        }
        Ok(Self {
            entity_id: entity_id.into(),
            kind,
            counts: map,
        })
    }

    pub fn entity_id(&self) -> &str {
        &self.entity_id
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn counts(&self) -> &BTreeMap<String, f64> {
        &self.counts
    }

    pub fn count(&self, category: &str) -> f64 {
        self.counts.get(category).copied().unwrap_or(0.0)
    }

    /// Total publication count T.
    pub fn total(&self) -> f64 {
        numeric::sum(self.counts.values().copied())
    }

    pub fn has_positive_count(&self) -> bool {
        self.counts.values().any(|&c| c > 0.0)
    }
}

/// Symmetric category similarity matrix with unit diagonal, stored row-major.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    catalog: Arc<CategoryCatalog>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Builds a matrix, enforcing symmetry, range `[0, 1]` and unit diagonal
    /// within [`MATRIX_TOLERANCE`].
    pub fn new(catalog: Arc<CategoryCatalog>, values: Vec<f64>) -> Result<Self, ModelError> {
        let m = Self::new_unchecked(catalog, values)?;
        let n = m.n();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if !v.is_finite() {
                    return Err(ModelError::NonFinite { row: i, col: j });
                }
                if !(0.0..=1.0 + MATRIX_TOLERANCE).contains(&v) {
                    return Err(ModelError::OutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                if (v - m.get(j, i)).abs() > MATRIX_TOLERANCE {
                    return Err(ModelError::Asymmetric { row: i, col: j });
                }
            }
            let d = m.get(i, i);
            if (d - 1.0).abs() > MATRIX_TOLERANCE {
                return Err(ModelError::DiagonalNotUnit { index: i, value: d });
            }
        }
        Ok(m)
    }

    /// Builds a matrix checking only its dimensions. Intended for diagnostics
    /// on raw matrices (for example feeding a known non-PSD matrix to
    /// [`crate::wcs::psd_check`]).
    pub fn new_unchecked(
        catalog: Arc<CategoryCatalog>,
        values: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let n = catalog.len();
        if values.len() != n * n {
            return Err(ModelError::DimensionMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Ok(Self { catalog, values })
    }

    pub fn identity(catalog: Arc<CategoryCatalog>) -> Self {
        let n = catalog.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        Self { catalog, values }
    }

    pub fn catalog(&self) -> &Arc<CategoryCatalog> {
        &self.catalog
    }

    pub fn n(&self) -> usize {
        self.catalog.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.n();
        &self.values[row * n..(row + 1) * n]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `S·v`, each row reduced with compensated summation.
    pub(crate) fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|k| numeric::dot(self.row(k), v))
            .collect()
    }
}

/// Base-map coordinates `(L_{j,1}, L_{j,2})`, one pair per category.
#[derive(Debug, Clone)]
pub struct BaseMap {
    catalog: Arc<CategoryCatalog>,
    coords: Vec<[f64; 2]>,
}

impl BaseMap {
    pub fn new(catalog: Arc<CategoryCatalog>, coords: Vec<[f64; 2]>) -> Result<Self, ModelError> {
        if coords.len() != catalog.len() {
            return Err(ModelError::DimensionMismatch {
                expected: catalog.len(),
                got: coords.len(),
            });
        }
        for (row, c) in coords.iter().enumerate() {
            for (col, v) in c.iter().enumerate() {
                if !v.is_finite() {
                    return Err(ModelError::NonFinite { row, col });
                }
            }
        }
        Ok(Self { catalog, coords })
    }

    pub fn catalog(&self) -> &Arc<CategoryCatalog> {
        &self.catalog
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }
}

/// A profile laid out densely over a catalog: the publication column M.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseProfileVector {
    catalog: Arc<CategoryCatalog>,
    values: Vec<f64>,
}

impl DenseProfileVector {
    pub fn new(catalog: Arc<CategoryCatalog>, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != catalog.len() {
            return Err(ModelError::DimensionMismatch {
                expected: catalog.len(),
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidCount {
                    category: catalog.labels()[i].clone(),
                    value: v,
                });
            }
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(ModelError::EmptyProfile(String::new()));
        }
        Ok(Self { catalog, values })
    }

    pub fn catalog(&self) -> &Arc<CategoryCatalog> {
        &self.catalog
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total T, equal to the L1 norm since all entries are nonnegative.
    pub fn total(&self) -> f64 {
        numeric::sum(self.values.iter().copied())
    }

    /// Multiplies every count by `factor`, which must be positive and finite.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(
            self.catalog.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentPolicy {
    /// Categories missing from the catalog are an error.
    #[default]
    Strict,
    /// Categories missing from the catalog are dropped and reported.
    DropUnknown,
}

/// A category discarded under [`AlignmentPolicy::DropUnknown`].
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedCategory {
    pub category: String,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub vector: DenseProfileVector,
    pub dropped: Vec<DroppedCategory>,
}

/// Places a sparse profile onto the catalog's index space.
pub fn align_profile(
    profile: &PublicationProfile,
    catalog: &Arc<CategoryCatalog>,
    policy: AlignmentPolicy,
) -> Result<Alignment, ModelError> {
    if !profile.has_positive_count() {
        return Err(ModelError::EmptyProfile(profile.entity_id.clone()));
    }
    let mut values = vec![0.0; catalog.len()];
    let mut dropped = Vec::new();
    for (category, &count) in &profile.counts {
        match catalog.index_of(category) {
            Some(i) => values[i] += count,
            None => match policy {
                AlignmentPolicy::Strict => {
                    return Err(ModelError::UnknownCategory(category.clone()))
                }
                AlignmentPolicy::DropUnknown => dropped.push(DroppedCategory {
                    category: category.clone(),
                    count,
                }),
            },
        }
    }
    if !values.iter().any(|&v| v > 0.0) {
        return Err(ModelError::AllCountsDropped);
    }
    let vector = DenseProfileVector::new(catalog.clone(), values)?;
    Ok(Alignment { vector, dropped })
}

/// Category-wise sum of raw counts.
pub fn aggregate_profiles(
    profiles: &[PublicationProfile],
    id: impl Into<String>,
    kind: EntityKind,
) -> Result<PublicationProfile, ModelError> {
    if profiles.is_empty() {
        return Err(ModelError::EmptyList);
    }
    let mut sums: BTreeMap<&str, numeric::CompensatedSum> = BTreeMap::new();
    for p in profiles {
        for (category, &count) in &p.counts {
            sums.entry(category.as_str()).or_default().add(count);
        }
    }
    PublicationProfile::new(
        id,
        kind,
        sums.into_iter().map(|(c, s)| (c.to_string(), s.value())),
    )
}
