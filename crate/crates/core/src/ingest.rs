//! Readers for the Pajek base-map network and the CSV inputs.
//!
//! The network file provides the category labels (vertex labels), the 2D
//! base-map coordinates (vertex x/y) and the category similarities (link
//! weights). Accepted grammar:
//!
//! ```text
//! *Vertices N
//! 1 "label" x y [z]
//! ...
//! *Edges            (or *Arcs)
//! i j w
//! ```
//!
//! Keywords are case-insensitive, blank lines and `%` comments are skipped, a
//! leading `*Network` line is ignored and any other `*Section` (partitions,
//! vectors, ...) is skipped with a warning.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{
    BaseMap, CategoryCatalog, EntityKind, ModelError, PublicationProfile, SimilarityMatrix,
    MATRIX_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("VertexCountMismatch: header declares {declared} vertices, found {found}")]
    VertexCountMismatch { declared: usize, found: usize },
    #[error("line {line}: DanglingLinkEndpoint: vertex {endpoint} outside 1..={n}")]
    DanglingLinkEndpoint {
        line: usize,
        endpoint: i64,
        n: usize,
    },
    #[error("line {line}: unparsable line: {reason}")]
    UnparsableLine { line: usize, reason: String },
    #[error("duplicate category label {0:?}")]
    DuplicateLabel(String),
    #[error("conflicting weights for link {i}-{j}: {first} vs {second}")]
    ConflictingLinkWeights {
        i: usize,
        j: usize,
        first: f64,
        second: f64,
    },
    #[error("weight {weight} of link {i}-{j} outside [0, 1]")]
    WeightOutOfRange { i: usize, j: usize, weight: f64 },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },
    #[error("line {line}: negative count {value}")]
    NegativeCount { line: u64, value: f64 },
    #[error("line {line}: entity {entity:?} listed with conflicting kinds")]
    InconsistentKind { line: u64, entity: String },
    #[error("line {line}: unparsable row: {reason}")]
    UnparsableRow { line: u64, reason: String },
    #[error("line {line}: duplicate assignment ({group}, {assessor})")]
    DuplicatePair {
        line: u64,
        group: String,
        assessor: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkKind {
    #[default]
    Edges,
    Arcs,
}

impl LinkKind {
    fn keyword(self) -> &'static str {
        match self {
            LinkKind::Edges => "*Edges",
            LinkKind::Arcs => "*Arcs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PajekVertex {
    pub id: usize,
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PajekLink {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PajekDocument {
    pub vertices: Vec<PajekVertex>,
    pub links: Vec<PajekLink>,
    pub link_kind: LinkKind,
}

enum Section {
    Preamble,
    Vertices,
    Links,
    Skipped,
}

fn parse_real(token: &str, line: usize) -> Result<f64, IngestError> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::UnparsableLine {
            line,
            reason: format!("`{token}` is not a finite decimal number"),
        }),
    }
}

fn parse_vertex(text: &str, line: usize, expected_id: usize) -> Result<PajekVertex, IngestError> {
    let unparsable = |reason: String| IngestError::UnparsableLine { line, reason };
    let text = text.trim();
    let (id_token, rest) = text
        .split_once(char::is_whitespace)
        .ok_or_else(|| unparsable("vertex line needs an id, a label and coordinates".into()))?;
    let id: usize = id_token
        .parse()
        .map_err(|_| unparsable(format!("bad vertex id `{id_token}`")))?;
    if id != expected_id {
        return Err(unparsable(format!(
            "expected vertex id {expected_id}, found {id}"
        )));
    }
    let rest = rest.trim_start();
    let (label, rest) = if let Some(quoted) = rest.strip_prefix('"') {
        let end = quoted
            .find('"')
            .ok_or_else(|| unparsable("unterminated quoted label".into()))?;
        (&quoted[..end], &quoted[end + 1..])
    } else {
        rest.split_once(char::is_whitespace).unwrap_or((rest, ""))
    };
    let numbers: Vec<&str> = rest.split_whitespace().collect();
    if !(2..=3).contains(&numbers.len()) {
        return Err(unparsable(format!(
            "expected `x y [z]` after the label, found {} fields",
            numbers.len()
        )));
    }
    Ok(PajekVertex {
        id,
        label: label.to_string(),
        x: parse_real(numbers[0], line)?,
        y: parse_real(numbers[1], line)?,
        z: numbers.get(2).map(|t| parse_real(t, line)).transpose()?,
    })
}

fn parse_link(text: &str, line: usize, n: usize) -> Result<PajekLink, IngestError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(IngestError::UnparsableLine {
            line,
            reason: format!("expected `i j w`, found {} fields", fields.len()),
        });
    }
    let mut endpoints = [0usize; 2];
    for (slot, token) in endpoints.iter_mut().zip(&fields[..2]) {
        let v: i64 = token.parse().map_err(|_| IngestError::UnparsableLine {
            line,
            reason: format!("bad vertex reference `{token}`"),
        })?;
        if v < 1 || v as u64 > n as u64 {
            return Err(IngestError::DanglingLinkEndpoint {
                line,
                endpoint: v,
                n,
            });
        }
        *slot = v as usize;
    }
    Ok(PajekLink {
        source: endpoints[0],
        target: endpoints[1],
        weight: parse_real(fields[2], line)?,
    })
}

/// Parses a Pajek network, discarding warnings about skipped sections.
pub fn parse_pajek(text: &str) -> Result<PajekDocument, IngestError> {
    parse_pajek_with_warnings(text).map(|(doc, _)| doc)
}

/// Parses a Pajek network and returns warnings for skipped sections.
pub fn parse_pajek_with_warnings(text: &str) -> Result<(PajekDocument, Vec<String>), IngestError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut doc = PajekDocument::default();
    let mut warnings = Vec::new();
    let mut declared: Option<usize> = None;
    let mut link_kind: Option<LinkKind> = None;
    let mut section = Section::Preamble;

    let close_vertices = |doc: &PajekDocument, declared: Option<usize>| match declared {
        Some(d) if d != doc.vertices.len() => Err(IngestError::VertexCountMismatch {
            declared: d,
            found: doc.vertices.len(),
        }),
        _ => Ok(()),
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with('*') {
            let mut parts = trimmed.split_whitespace();
            let keyword = parts.next().unwrap_or_default().to_ascii_lowercase();
            let args: Vec<&str> = parts.collect();
            let header_err = |reason: String| IngestError::MalformedHeader { line, reason };
            if matches!(section, Section::Vertices) {
                close_vertices(&doc, declared)?;
            }
            match keyword.as_str() {
                "*network" => {
                    if declared.is_some() {
                        return Err(header_err("*Network after the vertex section".into()));
                    }
                    section = Section::Preamble;
                }
                "*vertices" => {
                    if declared.is_some() {
                        return Err(header_err("second *Vertices section".into()));
                    }
                    if args.len() != 1 {
                        return Err(header_err("expected `*Vertices N`".into()));
                    }
                    let n: usize = args[0]
                        .parse()
                        .map_err(|_| header_err(format!("bad vertex count `{}`", args[0])))?;
                    declared = Some(n);
                    section = Section::Vertices;
                }
                "*edges" | "*arcs" => {
                    if declared.is_none() {
                        return Err(header_err(format!("{keyword} before *Vertices")));
                    }
                    if !args.is_empty() {
                        return Err(header_err(format!("unexpected arguments after {keyword}")));
                    }
                    let kind = if keyword == "*edges" {
                        LinkKind::Edges
                    } else {
                        LinkKind::Arcs
                    };
                    if link_kind.is_some_and(|k| k != kind) {
                        return Err(header_err("both *Edges and *Arcs sections present".into()));
                    }
                    link_kind = Some(kind);
                    section = Section::Links;
                }
                _ => {
                    warnings.push(format!(
                        "line {line}: skipping unsupported section {trimmed}"
                    ));
                    section = Section::Skipped;
                }
            }
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(IngestError::MalformedHeader {
                    line,
                    reason: "data before *Vertices".into(),
                })
            }
            Section::Vertices => {
                let expected = doc.vertices.len() + 1;
                if declared.is_some_and(|d| expected > d) {
                    return Err(IngestError::VertexCountMismatch {
                        declared: declared.unwrap_or_default(),
                        found: expected,
                    });
                }
                doc.vertices.push(parse_vertex(trimmed, line, expected)?);
            }
            Section::Links => {
                let n = doc.vertices.len();
                doc.links.push(parse_link(trimmed, line, n)?);
            }
            Section::Skipped => {}
        }
    }
    if matches!(section, Section::Vertices) {
        close_vertices(&doc, declared)?;
    }
    if declared.is_none() {
        return Err(IngestError::MalformedHeader {
            line: 0,
            reason: "missing *Vertices section".into(),
        });
    }
    doc.link_kind = link_kind.unwrap_or_default();
    Ok((doc, warnings))
}

/// Canonical text form; [`parse_pajek`] reads it back to an equal document.
pub fn serialize_pajek(doc: &PajekDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "*Vertices {}", doc.vertices.len());
    for v in &doc.vertices {
        let _ = write!(out, "{} \"{}\" {} {}", v.id, v.label, v.x, v.y);
        if let Some(z) = v.z {
            let _ = write!(out, " {z}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "{}", doc.link_kind.keyword());
    for l in &doc.links {
        let _ = writeln!(out, "{} {} {}", l.source, l.target, l.weight);
    }
    out
}

/// Catalog, base map and similarity matrix derived from one network file.
#[derive(Debug, Clone)]
pub struct MapModel {
    pub catalog: Arc<CategoryCatalog>,
    pub base_map: BaseMap,
    pub similarity: SimilarityMatrix,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelOptions {
    /// Reject weights outside `[0, 1]`. Disabling this admits raw matrices
    /// for diagnostics only.
    pub check_weight_range: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            check_weight_range: true,
        }
    }
}

/// Builds the model types: unit diagonal, symmetric link weights, zero for
/// absent pairs. Self-loops are ignored.
pub fn to_model(doc: &PajekDocument) -> Result<MapModel, IngestError> {
    to_model_with(doc, ModelOptions::default())
}

pub fn to_model_with(doc: &PajekDocument, options: ModelOptions) -> Result<MapModel, IngestError> {
    let labels: Vec<&str> = doc.vertices.iter().map(|v| v.label.as_str()).collect();
    let catalog = match CategoryCatalog::new(labels) {
        Ok(c) => Arc::new(c),
        Err(ModelError::DuplicateLabel(l)) => return Err(IngestError::DuplicateLabel(l)),
        Err(e) => return Err(e.into()),
    };
    let n = catalog.len();
    let base_map = BaseMap::new(
        catalog.clone(),
        doc.vertices.iter().map(|v| [v.x, v.y]).collect(),
    )?;

    let mut values = vec![0.0; n * n];
    let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
    for link in &doc.links {
        let (i, j) = (link.source, link.target);
        let w = link.weight;
        if options.check_weight_range && !(0.0..=1.0 + MATRIX_TOLERANCE).contains(&w) {
            return Err(IngestError::WeightOutOfRange { i, j, weight: w });
        }
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        if let Some(&first) = seen.get(&key) {
            if (first - w).abs() > MATRIX_TOLERANCE {
                return Err(IngestError::ConflictingLinkWeights {
                    i: key.0,
                    j: key.1,
                    first,
                    second: w,
                });
            }
            continue;
        }
        seen.insert(key, w);
        let (a, b) = (i - 1, j - 1);
        values[a * n + b] = w;
        values[b * n + a] = w;
    }
    for i in 0..n {
        values[i * n + i] = 1.0;
    }
    let similarity = if options.check_weight_range {
        SimilarityMatrix::new(catalog.clone(), values)?
    } else {
        SimilarityMatrix::new_unchecked(catalog.clone(), values)?
    };
    Ok(MapModel {
        catalog,
        base_map,
        similarity,
    })
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<(), IngestError> {
    let bad = |found: String| IngestError::BadHeader {
        expected: expected.join(","),
        found,
    };
    let header = reader.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(bad(header.iter().collect::<Vec<_>>().join(",")));
    }
    Ok(())
}

fn row_line(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

/// Reads `entity,kind,category,count` rows into one profile per entity, in
/// order of first appearance. Repeated (entity, category) rows accumulate.
pub fn parse_profiles_csv(text: &str) -> Result<Vec<PublicationProfile>, IngestError> {
    let mut reader = csv_reader(text);
    check_header(&mut reader, &["entity", "kind", "category", "count"])?;

    let mut order: Vec<String> = Vec::new();
    let mut entities: HashMap<String, (EntityKind, Vec<(String, f64)>)> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::UnparsableRow {
            line: row_line(&e),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let unparsable = |reason: String| IngestError::UnparsableRow { line, reason };
        let (entity, kind, category, count) = (&record[0], &record[1], &record[2], &record[3]);
        if entity.is_empty() || category.is_empty() {
            return Err(unparsable("empty entity or category".into()));
        }
        let kind = match kind {
            "group" => EntityKind::ResearchGroup,
            "panel_member" => EntityKind::PanelMember,
            other => return Err(unparsable(format!("unknown kind `{other}`"))),
        };
        let value: f64 = match count.parse() {
            Ok(v) if f64::is_finite(v) => v,
            _ => return Err(unparsable(format!("bad count `{count}`"))),
        };
        if value < 0.0 {
            return Err(IngestError::NegativeCount { line, value });
        }
        match entities.get_mut(entity) {
            Some((existing, counts)) => {
                if *existing != kind {
                    return Err(IngestError::InconsistentKind {
                        line,
                        entity: entity.to_string(),
                    });
                }
                counts.push((category.to_string(), value));
            }
            None => {
                order.push(entity.to_string());
                entities.insert(
                    entity.to_string(),
                    (kind, vec![(category.to_string(), value)]),
                );
            }
        }
    }
    order
        .into_iter()
        .map(|id| {
            let (kind, counts) = entities
                .remove(&id)
                .unwrap_or((EntityKind::ResearchGroup, Vec::new()));
            Ok(PublicationProfile::new(id, kind, counts)?)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub group: String,
    pub main_assessor: String,
}

/// Group → main assessor rows in file order. A group may appear more than
/// once when its assignment is contested.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssignmentTable {
    pub rows: Vec<Assignment>,
}

impl AssignmentTable {
    pub fn new(rows: Vec<Assignment>) -> Self {
        Self { rows }
    }

    /// Distinct groups in first-appearance order with their candidate assessors.
    pub fn by_group(&self) -> Vec<(&str, Vec<&str>)> {
        let mut out: Vec<(&str, Vec<&str>)> = Vec::new();
        for row in &self.rows {
            match out.iter_mut().find(|(g, _)| *g == row.group) {
                Some((_, assessors)) => assessors.push(&row.main_assessor),
                None => out.push((&row.group, vec![&row.main_assessor])),
            }
        }
        out
    }
}

pub fn parse_assignments_csv(text: &str) -> Result<AssignmentTable, IngestError> {
    let mut reader = csv_reader(text);
    check_header(&mut reader, &["group", "main_assessor"])?;
    let mut rows: Vec<Assignment> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::UnparsableRow {
            line: row_line(&e),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let (group, assessor) = (&record[0], &record[1]);
        if group.is_empty() || assessor.is_empty() {
            return Err(IngestError::UnparsableRow {
                line,
                reason: "empty group or assessor".into(),
            });
        }
        if rows
            .iter()
            .any(|r| r.group == group && r.main_assessor == assessor)
        {
            return Err(IngestError::DuplicatePair {
                line,
                group: group.to_string(),
                assessor: assessor.to_string(),
            });
        }
        rows.push(Assignment {
            group: group.to_string(),
            main_assessor: assessor.to_string(),
        });
    }
    Ok(AssignmentTable { rows })
}
