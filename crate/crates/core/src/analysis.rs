//! Evaluation protocol: distance tables per method, per-group rankings of
//! panel members, 3/2/1 scoring against the designated main assessors and
//! Pearson/Spearman agreement between methods.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::barycenter::barycenter_2d;
use crate::error::ComputeError;
use crate::ingest::AssignmentTable;
use crate::model::{BaseMap, DenseProfileVector, EntityKind, SimilarityMatrix};
use crate::numeric::{self, CompensatedSum};
use crate::sapv::{sapv_l1, sapv_legacy};
use crate::wcs::{psd_check, weighted_cosine_dissimilarity, NON_PD_WARNING};

/// Minimum number of pairs a correlation is computed over.
pub const MIN_CORRELATION_PAIRS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("barycenter method needs a base map")]
    MissingBaseMap,
    #[error("method {0} needs a similarity matrix")]
    MissingSimilarity(Method),
    #[error("entity {id}: {source}")]
    Entity { id: String, source: ComputeError },
    #[error("pair ({row}, {col}): {source}")]
    Pair {
        row: String,
        col: String,
        source: ComputeError,
    },
    #[error(transparent)]
    Compute(#[from] ComputeError),
    #[error("no value for pair ({group}, {member})")]
    MissingPair { group: String, member: String },
    #[error("unknown group {0}")]
    UnknownGroup(String),
    #[error("UnknownAssessor: {assessor} (assigned to {group}) is not a panel member")]
    UnknownAssessor { group: String, assessor: String },
    #[error("zero variance")]
    ZeroVariance,
    #[error("non-finite value in correlation input")]
    NonFinite,
    #[error(
        "TooFewPairs: {found} pairs, at least {} needed",
        MIN_CORRELATION_PAIRS
    )]
    TooFewPairs { found: usize },
    #[error("results do not cover the same group-member pairs")]
    PairSetMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    Barycenter2D,
    SapvL1,
    /// Pre-correction SAPV; kept for comparison only.
    SapvLegacy,
    Wcd,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Barycenter2D,
        Method::SapvL1,
        Method::SapvLegacy,
        Method::Wcd,
    ];

    /// Short name used on the command line and in output file names.
    pub fn name(self) -> &'static str {
        match self {
            Method::Barycenter2D => "barycenter",
            Method::SapvL1 => "sapv",
            Method::SapvLegacy => "sapv-legacy",
            Method::Wcd => "wcd",
        }
    }

    pub fn semantics(self) -> Semantics {
        match self {
            Method::Wcd => Semantics::Dissimilarity,
            _ => Semantics::Distance,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown method `{s}` (expected barycenter, sapv, sapv-legacy or wcd)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    Distance,
    Dissimilarity,
}

/// An aligned entity ready for comparison.
#[derive(Debug, Clone)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
    pub vector: DenseProfileVector,
}

/// Inputs a method may need besides the entities.
#[derive(Debug, Clone, Copy)]
pub struct Artifacts<'a> {
    pub base_map: Option<&'a BaseMap>,
    pub similarity: Option<&'a SimilarityMatrix>,
    pub psd_tolerance: f64,
}

/// Values of one method for every (row entity, column entity) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    method: Method,
    entries: BTreeMap<(String, String), f64>,
    kinds: BTreeMap<String, EntityKind>,
    warning: Option<String>,
}

impl MethodResult {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            entries: BTreeMap::new(),
            kinds: BTreeMap::new(),
            warning: None,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn semantics(&self) -> Semantics {
        self.method.semantics()
    }

    /// Set when every value in the table is suspect, e.g. WCD under a matrix
    /// that is not positive definite.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn set_warning(&mut self, warning: impl Into<String>) {
        self.warning = Some(warning.into());
    }

    pub fn insert(&mut self, row: (&str, EntityKind), col: (&str, EntityKind), value: f64) {
        self.kinds.insert(row.0.to_string(), row.1);
        self.kinds.insert(col.0.to_string(), col.1);
        self.entries
            .insert((row.0.to_string(), col.0.to_string()), value);
    }

    /// Value for the pair in either order.
    pub fn value(&self, a: &str, b: &str) -> Option<f64> {
        self.entries
            .get(&(a.to_string(), b.to_string()))
            .or_else(|| self.entries.get(&(b.to_string(), a.to_string())))
            .copied()
    }

    pub fn kind(&self, id: &str) -> Option<EntityKind> {
        self.kinds.get(id).copied()
    }

    /// All entries ordered by (row, column).
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.entries
            .iter()
            .map(|((r, c), v)| (r.as_str(), c.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries between individual entities only (aggregates removed).
    fn individual_pairs(&self) -> BTreeMap<(&str, &str), f64> {
        self.entries()
            .filter(|(r, c, _)| {
                let individual = |id: &str| self.kind(id).is_some_and(|k| !k.is_aggregate());
                individual(r) && individual(c)
            })
            .map(|(r, c, v)| ((r, c), v))
            .collect()
    }
}

/// `sqrt(Σ (a_i − b_i)²)`.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(numeric::sum(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y))).sqrt())
}

fn representation(
    method: Method,
    artifacts: &Artifacts<'_>,
    entity: &Entity,
) -> Result<Vec<f64>, AnalysisError> {
    let wrap = |source| AnalysisError::Entity {
        id: entity.id.clone(),
        source,
    };
    match method {
        Method::Barycenter2D => {
            let map = artifacts.base_map.ok_or(AnalysisError::MissingBaseMap)?;
            Ok(barycenter_2d(&entity.vector, map)
                .map_err(wrap)?
                .to_array()
                .to_vec())
        }
        Method::SapvL1 | Method::SapvLegacy => {
            let s = artifacts
                .similarity
                .ok_or(AnalysisError::MissingSimilarity(method))?;
            let v = if method == Method::SapvL1 {
                sapv_l1(s, &entity.vector)
            } else {
                sapv_legacy(s, &entity.vector)
            };
            Ok(v.map_err(wrap)?.values().to_vec())
        }
        Method::Wcd => Ok(entity.vector.values().to_vec()),
    }
}

/// Values of `method` for every `rows × cols` pair.
///
/// Barycenter and SAPV values are Euclidean distances between the entities'
/// representations; WCD is `1 − weighted_cosine` on the raw counts. WCD
/// results get a warning when the similarity matrix is not positive definite.
pub fn distance_table(
    method: Method,
    artifacts: &Artifacts<'_>,
    rows: &[Entity],
    cols: &[Entity],
) -> Result<MethodResult, AnalysisError> {
    let mut result = MethodResult::new(method);
    if method == Method::Wcd {
        let s = artifacts
            .similarity
            .ok_or(AnalysisError::MissingSimilarity(method))?;
        let report = psd_check(s, artifacts.psd_tolerance)?;
        if !report.is_positive_definite {
            result.set_warning(NON_PD_WARNING);
        }
        for r in rows {
            for c in cols {
                let v =
                    weighted_cosine_dissimilarity(s, &r.vector, &c.vector).map_err(|source| {
                        AnalysisError::Pair {
                            row: r.id.clone(),
                            col: c.id.clone(),
                            source,
                        }
                    })?;
                result.insert((&r.id, r.kind), (&c.id, c.kind), v);
            }
        }
        return Ok(result);
    }

    let row_reps = rows
        .iter()
        .map(|e| representation(method, artifacts, e))
        .collect::<Result<Vec<_>, _>>()?;
    let col_reps = cols
        .iter()
        .map(|e| representation(method, artifacts, e))
        .collect::<Result<Vec<_>, _>>()?;
    for (r, rv) in rows.iter().zip(&row_reps) {
        for (c, cv) in cols.iter().zip(&col_reps) {
            let d = euclidean_distance(rv, cv)?;
            result.insert((&r.id, r.kind), (&c.id, c.kind), d);
        }
    }
    Ok(result)
}

/// Compares `(value, id)` pairs: ascending value, ties by id.
fn by_value_then_id(a: (f64, &str), b: (f64, &str)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

/// For every individual group, the individual member with the smallest value
/// (ties broken by member id). Aggregates neither receive nor provide minima.
pub fn group_minima(result: &MethodResult) -> BTreeSet<(String, String)> {
    let mut best: BTreeMap<&str, (f64, &str)> = BTreeMap::new();
    for ((group, member), value) in result.individual_pairs() {
        let candidate = (value, member);
        best.entry(group)
            .and_modify(|b| {
                if by_value_then_id(candidate, *b).is_lt() {
                    *b = candidate;
                }
            })
            .or_insert(candidate);
    }
    best.into_iter()
        .map(|(g, (_, m))| (g.to_string(), m.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedMember {
    pub member: String,
    pub value: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRanking {
    pub group: String,
    pub ranked: Vec<RankedMember>,
}

/// Top-k closest panel members per group, for one method.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingTable {
    pub method: Method,
    /// Every panel member that was ranked, not only the top k.
    pub members: Vec<String>,
    pub groups: Vec<GroupRanking>,
}

impl RankingTable {
    pub fn group(&self, group: &str) -> Option<&GroupRanking> {
        self.groups.iter().find(|g| g.group == group)
    }

    /// 1-based rank of `member` for `group`, if within the retained top k.
    pub fn rank_of(&self, group: &str, member: &str) -> Option<usize> {
        self.group(group)?
            .ranked
            .iter()
            .find(|r| r.member == member)
            .map(|r| r.rank)
    }
}

pub fn rank_members(
    result: &MethodResult,
    groups: &[&str],
    members: &[&str],
    k: usize,
) -> Result<RankingTable, AnalysisError> {
    let mut out = Vec::with_capacity(groups.len());
    for &group in groups {
        let mut values = members
            .iter()
            .map(|&member| {
                result
                    .value(group, member)
                    .map(|v| (v, member))
                    .ok_or_else(|| AnalysisError::MissingPair {
                        group: group.to_string(),
                        member: member.to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        values.sort_by(|a, b| by_value_then_id(*a, *b));
        let ranked = values
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(i, (value, member))| RankedMember {
                member: member.to_string(),
                value,
                rank: i + 1,
            })
            .collect();
        out.push(GroupRanking {
            group: group.to_string(),
            ranked,
        });
    }
    Ok(RankingTable {
        method: result.method(),
        members: members.iter().map(|m| m.to_string()).collect(),
        groups: out,
    })
}

/// Points for a main assessor found at `rank`: 3, 2, 1 for the top three.
pub fn rank_points(rank: Option<usize>) -> u32 {
    match rank {
        Some(1) => 3,
        Some(2) => 2,
        Some(3) => 1,
        _ => 0,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupScore {
    pub group: String,
    pub assessor: String,
    pub rank: Option<usize>,
    pub points: u32,
}

/// Scores of one method under one resolution of the assignments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScoreCard {
    pub method: Method,
    /// Assessor chosen for each contested group; empty when nothing is contested.
    pub choices: Vec<(String, String)>,
    pub groups: Vec<GroupScore>,
    pub total: u32,
}

/// Scores the rankings against the main assessors.
///
/// A group listed with several assessors is contested; one card is returned
/// per combination of choices, in the order the assignments list them.
pub fn assessor_score(
    rankings: &RankingTable,
    assignments: &AssignmentTable,
) -> Result<Vec<ScoreCard>, AnalysisError> {
    let by_group = assignments.by_group();
    for (group, assessors) in &by_group {
        if rankings.group(group).is_none() {
            return Err(AnalysisError::UnknownGroup(group.to_string()));
        }
        if let Some(a) = assessors
            .iter()
            .find(|a| !rankings.members.iter().any(|m| m == *a))
        {
            return Err(AnalysisError::UnknownAssessor {
                group: group.to_string(),
                assessor: a.to_string(),
            });
        }
    }

    // Cartesian product of assessor choices, first group varying slowest.
    let mut variants: Vec<Vec<(&str, &str)>> = vec![Vec::new()];
    for (group, assessors) in &by_group {
        variants = variants
            .into_iter()
            .flat_map(|prefix| {
                assessors.iter().map(move |a| {
                    let mut v = prefix.clone();
                    v.push((*group, *a));
                    v
                })
            })
            .collect();
    }

    Ok(variants
        .into_iter()
        .map(|choice| {
            let groups: Vec<GroupScore> = choice
                .iter()
                .map(|&(group, assessor)| {
                    let rank = rankings.rank_of(group, assessor);
                    GroupScore {
                        group: group.to_string(),
                        assessor: assessor.to_string(),
                        rank,
                        points: rank_points(rank),
                    }
                })
                .collect();
            let contested = by_group
                .iter()
                .filter(|(_, a)| a.len() > 1)
                .map(|(g, _)| *g)
                .collect::<BTreeSet<_>>();
            ScoreCard {
                method: rankings.method,
                choices: choice
                    .iter()
                    .filter(|(g, _)| contested.contains(g))
                    .map(|(g, a)| (g.to_string(), a.to_string()))
                    .collect(),
                total: groups.iter().map(|g| g.points).sum(),
                groups,
            }
        })
        .collect())
}

fn check_pairable(x: &[f64], y: &[f64]) -> Result<(), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    Ok(())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check_pairable(x, y)?;
    let n = x.len() as f64;
    let mx = numeric::sum(x.iter().copied()) / n;
    let my = numeric::sum(y.iter().copied()) / n;
    let (mut sxy, mut sxx, mut syy) = (
        CompensatedSum::new(),
        CompensatedSum::new(),
        CompensatedSum::new(),
    );
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let (sxx, syy) = (sxx.value(), syy.value());
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok((sxy.value() / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mid;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    check_pairable(x, y)?;
    pearson(&midranks(x), &midranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub pairs: usize,
    pub pearson: f64,
    pub spearman: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodPairCorrelation {
    pub method_a: String,
    pub method_b: String,
    pub full: Correlation,
    /// Over pairs that touch none of the excluded entities.
    pub filtered: Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub excluded: Vec<String>,
    pub pairs: Vec<MethodPairCorrelation>,
}

impl CorrelationReport {
    /// Correlations between two methods, in either order.
    pub fn get(&self, a: &str, b: &str) -> Option<&MethodPairCorrelation> {
        self.pairs
            .iter()
            .find(|p| (p.method_a == a && p.method_b == b) || (p.method_a == b && p.method_b == a))
    }
}

fn correlate(a: &[f64], b: &[f64]) -> Result<Correlation, AnalysisError> {
    if a.len() < MIN_CORRELATION_PAIRS {
        return Err(AnalysisError::TooFewPairs { found: a.len() });
    }
    Ok(Correlation {
        pairs: a.len(),
        pearson: pearson(a, b)?,
        spearman: spearman(a, b)?,
    })
}

/// Aligned values of two results over their common individual pair set.
type PairedRow<'r> = ((&'r str, &'r str), f64, f64);

fn paired_values<'r>(
    a: &'r MethodResult,
    b: &'r MethodResult,
) -> Result<Vec<PairedRow<'r>>, AnalysisError> {
    let pa = a.individual_pairs();
    let pb = b.individual_pairs();
    if pa.len() != pb.len() || pa.keys().ne(pb.keys()) {
        return Err(AnalysisError::PairSetMismatch);
    }
    Ok(pa
        .into_iter()
        .zip(pb.values())
        .map(|((key, va), &vb)| (key, va, vb))
        .collect())
}

/// Pearson and Spearman between every two results, over the individual
/// group-member pairs, once on all pairs and once without pairs touching an
/// excluded entity.
pub fn correlation_report(
    results: &[MethodResult],
    exclude: &[String],
) -> Result<CorrelationReport, AnalysisError> {
    let excluded: BTreeSet<&str> = exclude.iter().map(String::as_str).collect();
    let mut pairs = Vec::new();
    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            let rows = paired_values(a, b)?;
            let (full_a, full_b): (Vec<f64>, Vec<f64>) =
                rows.iter().map(|&(_, x, y)| (x, y)).unzip();
            let (kept_a, kept_b): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|((r, c), _, _)| !excluded.contains(r) && !excluded.contains(c))
                .map(|&(_, x, y)| (x, y))
                .unzip();
            pairs.push(MethodPairCorrelation {
                method_a: a.method().name().to_string(),
                method_b: b.method().name().to_string(),
                full: correlate(&full_a, &full_b)?,
                filtered: correlate(&kept_a, &kept_b)?,
            });
        }
    }
    Ok(CorrelationReport {
        excluded: excluded.into_iter().map(String::from).collect(),
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub group: String,
    pub member: String,
    pub value_a: f64,
    pub value_b: f64,
    pub excluded: bool,
}

/// One row per individual group-member pair, ordered by (group, member).
pub fn scatter_data(
    a: &MethodResult,
    b: &MethodResult,
    exclude: &[String],
) -> Result<Vec<ScatterRow>, AnalysisError> {
    Ok(paired_values(a, b)?
        .into_iter()
        .map(|((group, member), value_a, value_b)| ScatterRow {
            excluded: exclude.iter().any(|e| e == group || e == member),
            group: group.to_string(),
            member: member.to_string(),
            value_a,
            value_b,
        })
        .collect())
}
