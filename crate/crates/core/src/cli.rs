//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input or parse error, 3 similarity matrix not
//! positive definite (`check` only), 4 computation error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    self, assessor_score, correlation_report, distance_table, group_minima, rank_members,
    scatter_data, AnalysisError, Artifacts, Correlation, Entity, Method, MethodResult, ScoreCard,
};
use crate::ingest::{
    self, parse_assignments_csv, parse_pajek_with_warnings, parse_profiles_csv, to_model_with,
    MapModel, ModelOptions,
};
use crate::model::{aggregate_profiles, align_profile, AlignmentPolicy, EntityKind};
use crate::wcs::{psd_check, DEFAULT_PSD_TOLERANCE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_PD: i32 = 3;
pub const EXIT_COMPUTE: i32 = 4;

const SCHEMA_VERSION: &str = "1";
const TOP_K: usize = 3;
const GROUPS_AGGREGATE: &str = "Groups";
const PANEL_AGGREGATE: &str = "Panel";

#[derive(Debug, Parser)]
#[command(
    name = "cogdist",
    version,
    about = "Cognitive distances between research groups and panel members"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a map file and report whether its similarity matrix is positive definite.
    Check(CheckArgs),
    /// Write `<method>_distances.csv` for every selected method.
    Distances(RunArgs),
    /// Write top-3 panel members per group and, with assignments, assessor scores.
    Rank(RunArgs),
    /// Write Pearson/Spearman agreement and scatter data between methods.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Pajek map file (vertices with coordinates, edges with similarities).
    #[arg(long)]
    map: PathBuf,
    /// Eigenvalue tolerance, relative to the largest eigenvalue magnitude.
    #[arg(long)]
    psd_tol: Option<f64>,
    /// Accept link weights outside [0, 1] (diagnostics only).
    #[arg(long, hide = true)]
    allow_out_of_range: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AlignmentArg {
    /// Unknown categories are an error.
    Strict,
    /// Unknown categories are dropped with a warning.
    Drop,
}

impl From<AlignmentArg> for AlignmentPolicy {
    fn from(a: AlignmentArg) -> Self {
        match a {
            AlignmentArg::Strict => AlignmentPolicy::Strict,
            AlignmentArg::Drop => AlignmentPolicy::DropUnknown,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML file supplying any of the options below; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pajek map file (vertices with coordinates, edges with similarities).
    #[arg(long)]
    map: Option<PathBuf>,
    /// CSV with columns entity,kind,category,count.
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// CSV with columns group,main_assessor.
    #[arg(long)]
    assignments: Option<PathBuf>,
    /// Comma-separated: barycenter, sapv, wcd, sapv-legacy (deprecated, for comparison only).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Comma-separated entity ids left out of the filtered correlations.
    #[arg(long, value_delimiter = ',')]
    exclude: Option<Vec<String>>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    alignment: Option<AlignmentArg>,
    /// Eigenvalue tolerance for the positive-definiteness check behind WCD.
    #[arg(long)]
    psd_tol: Option<f64>,
    /// Add the pooled "Groups" and "Panel" entities to distance tables.
    #[arg(long)]
    aggregates: bool,
}

/// Config file contents. Relative paths resolve against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    map: Option<PathBuf>,
    profiles: Option<PathBuf>,
    assignments: Option<PathBuf>,
    methods: Option<Vec<String>>,
    exclude: Option<Vec<String>>,
    out: Option<PathBuf>,
    alignment: Option<AlignmentArg>,
    psd_tol: Option<f64>,
    aggregates: Option<bool>,
}

/// Fully resolved options for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub map_path: PathBuf,
    pub profiles_path: PathBuf,
    pub assignments_path: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub exclude: Vec<String>,
    pub output_dir: PathBuf,
    pub alignment: AlignmentPolicy,
    pub psd_tolerance: f64,
    pub aggregates: bool,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn compute(err: AnalysisError) -> Self {
        Self {
            code: EXIT_COMPUTE,
            message: err.to_string(),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check(args) => cmd_check(&args, out, err),
        Command::Distances(args) => resolve(args).and_then(|c| cmd_distances(&c, err)),
        Command::Rank(args) => resolve(args).and_then(|c| cmd_rank(&c, err)),
        Command::Compare(args) => resolve(args).and_then(|c| cmd_compare(&c, err)),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn resolve(args: RunArgs) -> Outcome<RunConfig> {
    let (file, base) = match &args.config {
        Some(path) => {
            let text = read(path)?;
            let file: FileConfig = toml::from_str(&text)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (file, base)
        }
        None => (FileConfig::default(), PathBuf::new()),
    };
    let from_file = |p: Option<PathBuf>| p.map(|p| base.join(p));

    let map_path = args
        .map
        .or_else(|| from_file(file.map))
        .ok_or_else(|| Failure::input("--map is required"))?;
    let profiles_path = args
        .profiles
        .or_else(|| from_file(file.profiles))
        .ok_or_else(|| Failure::input("--profiles is required"))?;
    let methods = match (args.methods, file.methods) {
        (Some(m), _) => m,
        (None, Some(names)) => names
            .iter()
            .map(|n| n.parse().map_err(Failure::input))
            .collect::<Outcome<_>>()?,
        (None, None) => vec![Method::Barycenter2D, Method::SapvL1, Method::Wcd],
    };
    if methods.is_empty() {
        return Err(Failure::input("at least one method must be selected"));
    }
    let psd_tolerance = args
        .psd_tol
        .or(file.psd_tol)
        .unwrap_or(DEFAULT_PSD_TOLERANCE);
    if !(psd_tolerance >= 0.0 && psd_tolerance.is_finite()) {
        return Err(Failure::input(format!("invalid --psd-tol {psd_tolerance}")));
    }
    Ok(RunConfig {
        map_path,
        profiles_path,
        assignments_path: args.assignments.or_else(|| from_file(file.assignments)),
        methods,
        exclude: args.exclude.or(file.exclude).unwrap_or_default(),
        output_dir: args
            .out
            .or_else(|| from_file(file.out))
            .unwrap_or_else(|| PathBuf::from(".")),
        alignment: args
            .alignment
            .or(file.alignment)
            .map(AlignmentPolicy::from)
            .unwrap_or_default(),
        psd_tolerance,
        aggregates: args.aggregates || file.aggregates.unwrap_or(false),
    })
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_map(path: &Path, options: ModelOptions, err: &mut dyn Write) -> Outcome<MapModel> {
    let text = read(path)?;
    let fail = |e: ingest::IngestError| Failure::input(format!("{}: {e}", path.display()));
    let (doc, warnings) = parse_pajek_with_warnings(&text).map_err(fail)?;
    for w in warnings {
        let _ = writeln!(err, "warning: {}: {w}", path.display());
    }
    to_model_with(&doc, options).map_err(fail)
}

fn cmd_check(args: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome<i32> {
    let options = ModelOptions {
        check_weight_range: !args.allow_out_of_range,
    };
    let model = load_map(&args.map, options, err)?;
    let tol = args.psd_tol.unwrap_or(DEFAULT_PSD_TOLERANCE);
    let report = psd_check(&model.similarity, tol).map_err(|e| Failure::input(e.to_string()))?;
    let _ = write!(
        out,
        "N: {}\nsymmetric: {}\nmin eigenvalue: {}\nmax eigenvalue: {}\nPD: {}\nPSD: {}\n",
        report.n,
        report.is_symmetric,
        report.min_eigenvalue,
        report.max_eigenvalue,
        report.is_positive_definite,
        report.is_positive_semidefinite,
    );
    if report.is_positive_definite {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(err, "warning: {}", crate::wcs::NON_PD_WARNING);
        Ok(EXIT_NOT_PD)
    }
}

/// Everything loaded and aligned for a run.
struct Prepared {
    model: MapModel,
    groups: Vec<Entity>,
    members: Vec<Entity>,
    group_aggregate: Option<Entity>,
    panel_aggregate: Option<Entity>,
}

impl Prepared {
    fn artifacts(&self, psd_tolerance: f64) -> Artifacts<'_> {
        Artifacts {
            base_map: Some(&self.model.base_map),
            similarity: Some(&self.model.similarity),
            psd_tolerance,
        }
    }

    fn group_ids(&self) -> Vec<&str> {
        self.groups.iter().map(|e| e.id.as_str()).collect()
    }

    fn member_ids(&self) -> Vec<&str> {
        self.members.iter().map(|e| e.id.as_str()).collect()
    }

    fn contains(&self, id: &str) -> bool {
        self.groups
            .iter()
            .chain(&self.members)
            .chain(&self.group_aggregate)
            .chain(&self.panel_aggregate)
            .any(|e| e.id == id)
    }
}

fn prepare(config: &RunConfig, err: &mut dyn Write) -> Outcome<Prepared> {
    let model = load_map(&config.map_path, ModelOptions::default(), err)?;
    let path = &config.profiles_path;
    let profiles = parse_profiles_csv(&read(path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;

    let align = |p: &crate::model::PublicationProfile, err: &mut dyn Write| -> Outcome<Entity> {
        let a = align_profile(p, &model.catalog, config.alignment)
            .map_err(|e| Failure::input(format!("entity {}: {e}", p.entity_id())))?;
        for d in &a.dropped {
            let _ = writeln!(
                err,
                "warning: entity {}: dropped unknown category {} ({} publications)",
                p.entity_id(),
                d.category,
                d.count
            );
        }
        Ok(Entity {
            id: p.entity_id().to_string(),
            kind: p.kind(),
            vector: a.vector,
        })
    };

    let mut groups = Vec::new();
    let mut members = Vec::new();
    for p in &profiles {
        let e = align(p, err)?;
        match p.kind() {
            EntityKind::PanelMember => members.push(e),
            _ => groups.push(e),
        }
    }
    if groups.is_empty() || members.is_empty() {
        return Err(Failure::input(
            "profiles must contain at least one group and one panel member",
        ));
    }

    let (mut group_aggregate, mut panel_aggregate) = (None, None);
    if config.aggregates {
        for reserved in [GROUPS_AGGREGATE, PANEL_AGGREGATE] {
            if profiles.iter().any(|p| p.entity_id() == reserved) {
                return Err(Failure::input(format!(
                    "entity id `{reserved}` is reserved when aggregates are enabled"
                )));
            }
        }
        let pool = |kind: EntityKind, id: &str, into: EntityKind, err: &mut dyn Write| {
            let selected: Vec<_> = profiles
                .iter()
                .filter(|p| p.kind() == kind)
                .cloned()
                .collect();
            let pooled = aggregate_profiles(&selected, id, into)
                .map_err(|e| Failure::input(format!("{id}: {e}")))?;
            align(&pooled, err)
        };
        group_aggregate = Some(pool(
            EntityKind::ResearchGroup,
            GROUPS_AGGREGATE,
            EntityKind::AggregateGroups,
            err,
        )?);
        panel_aggregate = Some(pool(
            EntityKind::PanelMember,
            PANEL_AGGREGATE,
            EntityKind::AggregatePanel,
            err,
        )?);
    }

    let prepared = Prepared {
        model,
        groups,
        members,
        group_aggregate,
        panel_aggregate,
    };
    if let Some(unknown) = config.exclude.iter().find(|id| !prepared.contains(id)) {
        return Err(Failure::input(format!(
            "--exclude: unknown entity `{unknown}`"
        )));
    }
    Ok(prepared)
}

fn compute(
    method: Method,
    prepared: &Prepared,
    config: &RunConfig,
    err: &mut dyn Write,
) -> Outcome<MethodResult> {
    let rows: Vec<Entity> = prepared
        .groups
        .iter()
        .chain(&prepared.group_aggregate)
        .cloned()
        .collect();
    let cols: Vec<Entity> = prepared
        .members
        .iter()
        .chain(&prepared.panel_aggregate)
        .cloned()
        .collect();
    let result = distance_table(
        method,
        &prepared.artifacts(config.psd_tolerance),
        &rows,
        &cols,
    )
    .map_err(|e| Failure {
        code: EXIT_COMPUTE,
        message: format!("{method}: {e}"),
    })?;
    if let Some(w) = result.warning() {
        let _ = writeln!(err, "warning: {method}: {w}");
    }
    Ok(result)
}

/// Distinct methods in first-mention order.
fn distinct(methods: &[Method]) -> Vec<Method> {
    let mut seen = Vec::new();
    for &m in methods {
        if !seen.contains(&m) {
            seen.push(m);
        }
    }
    seen
}

/// Six significant digits in plain decimal notation.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0.000000".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let exponent: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let decimals = (5 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Outcome<()> {
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(dir.join(name), contents))
        .map_err(|e| Failure::input(format!("{}: {e}", dir.join(name).display())))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_distances(config: &RunConfig, err: &mut dyn Write) -> Outcome<i32> {
    let prepared = prepare(config, err)?;
    for method in distinct(&config.methods) {
        let result = compute(method, &prepared, config, err)?;
        let minima = group_minima(&result);
        let mut text = String::from("group,member,value,is_group_min\n");
        for (group, member, value) in result.entries() {
            let is_min = minima.contains(&(group.to_string(), member.to_string()));
            let _ = writeln!(
                text,
                "{},{},{},{}",
                csv_field(group),
                csv_field(member),
                format_value(value),
                is_min
            );
        }
        write_output(
            &config.output_dir,
            &format!("{}_distances.csv", method.name()),
            &text,
        )?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ScoresJson {
    schema_version: &'static str,
    methods: Vec<MethodScoresJson>,
}

#[derive(Serialize)]
struct MethodScoresJson {
    method: &'static str,
    variants: Vec<VariantJson>,
}

#[derive(Serialize)]
struct ChoiceJson {
    group: String,
    assessor: String,
}

#[derive(Serialize)]
struct VariantJson {
    choices: Vec<ChoiceJson>,
    total: u32,
    groups: Vec<analysis::GroupScore>,
}

impl From<ScoreCard> for VariantJson {
    fn from(card: ScoreCard) -> Self {
        Self {
            choices: card
                .choices
                .into_iter()
                .map(|(group, assessor)| ChoiceJson { group, assessor })
                .collect(),
            total: card.total,
            groups: card.groups,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn cmd_rank(config: &RunConfig, err: &mut dyn Write) -> Outcome<i32> {
    let prepared = prepare(config, err)?;
    let assignments = match &config.assignments_path {
        Some(path) => Some(
            parse_assignments_csv(&read(path)?)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut groups = prepared.group_ids();
    groups.sort_unstable();
    let members = prepared.member_ids();

    let mut csv = String::from("method,group,rank,member,value\n");
    let mut scores = Vec::new();
    for method in distinct(&config.methods) {
        let result = compute(method, &prepared, config, err)?;
        let table = rank_members(&result, &groups, &members, TOP_K).map_err(Failure::compute)?;
        for g in &table.groups {
            for r in &g.ranked {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    method.name(),
                    csv_field(&g.group),
                    r.rank,
                    csv_field(&r.member),
                    format_value(r.value)
                );
            }
        }
        if let Some(a) = &assignments {
            let cards = assessor_score(&table, a).map_err(Failure::compute)?;
            scores.push(MethodScoresJson {
                method: method.name(),
                variants: cards.into_iter().map(VariantJson::from).collect(),
            });
        }
    }
    write_output(&config.output_dir, "rankings.csv", &csv)?;
    if assignments.is_some() {
        let json = ScoresJson {
            schema_version: SCHEMA_VERSION,
            methods: scores,
        };
        write_output(&config.output_dir, "scores.json", &to_json(&json))?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CorrelationsJson {
    schema_version: &'static str,
    excluded: Vec<String>,
    pairs: Vec<PairJson>,
}

#[derive(Serialize)]
struct PairJson {
    method_a: String,
    method_b: String,
    full: Correlation,
    filtered: Correlation,
}

fn cmd_compare(config: &RunConfig, err: &mut dyn Write) -> Outcome<i32> {
    if config.methods.len() < 2 {
        return Err(Failure::input(
            "compare needs at least two methods (repeat one to compare it with itself)",
        ));
    }
    let prepared = prepare(config, err)?;
    let mut cache: Vec<(Method, MethodResult)> = Vec::new();
    for method in distinct(&config.methods) {
        cache.push((method, compute(method, &prepared, config, err)?));
    }
    let results: Vec<MethodResult> = config
        .methods
        .iter()
        .map(|m| {
            cache
                .iter()
                .find(|(c, _)| c == m)
                .map(|(_, r)| r.clone())
                .expect("every selected method was computed")
        })
        .collect();

    let report = correlation_report(&results, &config.exclude).map_err(Failure::compute)?;
    let json = CorrelationsJson {
        schema_version: SCHEMA_VERSION,
        excluded: report.excluded.clone(),
        pairs: report
            .pairs
            .iter()
            .map(|p| PairJson {
                method_a: p.method_a.clone(),
                method_b: p.method_b.clone(),
                full: p.full,
                filtered: p.filtered,
            })
            .collect(),
    };
    write_output(&config.output_dir, "correlations.json", &to_json(&json))?;

    for (i, a) in results.iter().enumerate() {
        for b in &results[i + 1..] {
            let rows = scatter_data(a, b, &config.exclude).map_err(Failure::compute)?;
            let mut text = String::from("group,member,value_a,value_b,excluded\n");
            for r in rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    csv_field(&r.group),
                    csv_field(&r.member),
                    format_value(r.value_a),
                    format_value(r.value_b),
                    r.excluded
                );
            }
            let name = format!("scatter_{}_{}.csv", a.method().name(), b.method().name());
            write_output(&config.output_dir, &name, &text)?;
        }
    }
    Ok(EXIT_OK)
}
