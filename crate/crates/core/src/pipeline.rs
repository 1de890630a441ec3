//! End-to-end pipeline: ingest, graph, metrics, clusters, layout, folding
//! and export, driven by a TOML config.
//!
//! ```toml
//! [input]
//! manifest = "data/manifest.jsonl"
//! vectors = "data/vectors.simvec"
//!
//! [output]
//! dir = "out"
//!
//! scope = "both"          # all | per-country | both
//!
//! [knn]
//! # k = 6                 # default floor(ln N) per comparison set
//! # max_distance = 4.5
//!
//! [louvain]
//! seed = 42
//! ```
//!
//! Every artifact is written through a temporary file and renamed into
//! place, and the output directory is held by a lock file for the duration
//! of a run.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::communities::{louvain, top_clusters, ClusterSummary, CommunityError, Partition, Weighting};
use crate::export::{
    render_svg, round_sig9, write_graphml, write_json_graph, write_positions, ExportError, GraphDocument,
    ImageAnnotations, SvgStyle,
};
use crate::fold::{fold_accounts, fold_countries, FoldError};
use crate::ingest::{load_dataset, DatasetHandle, IngestError};
use crate::layout::{run_layout, Fa2Params, LayoutError, DEFAULT_THETA};
use crate::netmetrics::{metrics_report, MetricsError, NetworkMetrics};
use crate::simnet::{build_image_graph, k_for, GraphError, KnnParams, SimilarityGraph, Topology};

pub const RUN_MANIFEST: &str = "run-manifest.json";
const LOCK_FILE: &str = ".simnet.lock";

/// Published per-country image counts and metrics of the PhoMemes 2022
/// image set: `(country, images, clustering coefficient, fragmentation)`.
pub const REFERENCE_TABLE: [(&str, usize, f64, f64); 4] = [
    ("china", 598, 0.140, 0.108),
    ("iran", 890, 0.110, 0.107),
    ("russia", 1106, 0.113, 0.000),
    ("venezuela", 1207, 0.112, 0.149),
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("output directory {0} is locked by another run")]
    Locked(PathBuf),
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Community(#[from] CommunityError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Export(#[from] ExportError),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Locked(_) => 2,
            PipelineError::Layout(LayoutError::NumericalBlowup { .. }) => 4,
            PipelineError::Layout(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    All,
    PerCountry,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputConfig {
    pub manifest: PathBuf,
    pub vectors: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: Option<usize>,
    pub max_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LouvainConfig {
    pub seed: u64,
    pub weighted: bool,
    pub top: usize,
    pub reps: usize,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            seed: 42,
            weighted: true,
            top: 6,
            reps: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    #[serde(flatten)]
    pub fa2: Fa2Params,
    /// Graphs with more nodes than this use Barnes-Hut repulsion unless
    /// `barnes_hut` is set explicitly.
    pub barnes_hut_above: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            fa2: Fa2Params::default(),
            barnes_hut_above: 2000,
        }
    }
}

impl LayoutConfig {
    pub fn params_for(&self, n: usize) -> Fa2Params {
        let mut p = self.fa2.clone();
        if p.barnes_hut.is_none() && n > self.barnes_hut_above {
            p.barnes_hut = Some(DEFAULT_THETA);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub graphml: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            graphml: true,
            json: true,
            svg: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub knn: KnnConfig,
    #[serde(default)]
    pub louvain: LouvainConfig,
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub export: ExportConfig,
}

impl PipelineConfig {
    pub fn new(manifest: impl Into<PathBuf>, vectors: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input: InputConfig {
                manifest: manifest.into(),
                vectors: vectors.into(),
            },
            output: OutputConfig { dir: out.into() },
            scope: Scope::default(),
            knn: KnnConfig::default(),
            louvain: LouvainConfig::default(),
            layout: LayoutConfig::default(),
            export: ExportConfig::default(),
        }
    }

    /// Checks parameter ranges and that the inputs exist.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let config = |m: String| Err(PipelineError::Config(m));
        for (what, p) in [("manifest", &self.input.manifest), ("vectors", &self.input.vectors)] {
            if !p.is_file() {
                return config(format!("{what} file {} does not exist", p.display()));
            }
        }
        if self.knn.k == Some(0) {
            return config("knn.k must be at least 1".into());
        }
        if self.knn.max_distance.is_some_and(|d| !(d >= 0.0 && d.is_finite())) {
            return config("knn.max_distance must be a non-negative number".into());
        }
        if self.louvain.top == 0 {
            return config("louvain.top must be at least 1".into());
        }
        self.layout
            .fa2
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    fn weighting(&self) -> Weighting {
        if self.louvain.weighted {
            Weighting::Weighted
        } else {
            Weighting::Unweighted
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies `a.b.c=value` overrides to a parsed config table. Values are
/// read as TOML literals, falling back to plain strings.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<(), PipelineError> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("override {ov:?} is not key=value")))?;
        let path: Vec<&str> = key.trim().split('.').collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(PipelineError::Config(format!("bad override key {key:?}")));
        }
        let mut cursor = &mut *table;
        for part in &path[..path.len() - 1] {
            let entry = cursor
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cursor = entry
                .as_table_mut()
                .ok_or_else(|| PipelineError::Config(format!("{key:?}: {part} is not a table")))?;
        }
        cursor.insert(path[path.len() - 1].to_string(), parse_override_value(raw.trim()));
    }
    Ok(())
}

/// Parses config text. Relative input/output paths resolve against `base`.
pub fn parse_config(text: &str, overrides: &[String], base: &Path) -> Result<PipelineConfig, PipelineError> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
    apply_overrides(&mut table, overrides)?;
    let mut config: PipelineConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))?;
    for p in [
        &mut config.input.manifest,
        &mut config.input.vectors,
        &mut config.output.dir,
    ] {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<PipelineConfig, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, overrides, base)
}

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PipelineError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| PipelineError::io(path, e))?;
    tmp.persist(path).map_err(|e| PipelineError::io(path, e.error))?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::Locked(dir.to_path_buf())),
            Err(e) => Err(PipelineError::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Network metrics with floats rounded for serialization.
pub fn rounded_metrics(m: &NetworkMetrics) -> NetworkMetrics {
    NetworkMetrics {
        clustering_coefficient: round_sig9(m.clustering_coefficient),
        fragmentation: round_sig9(m.fragmentation),
        ..m.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub community: usize,
    pub size: usize,
    /// Modularity of the whole partition, repeated on every entry.
    pub modularity: Option<f64>,
    pub representatives: Vec<String>,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersReport {
    pub seed: u64,
    pub weighting: Weighting,
    pub n_communities: usize,
    pub modularity: Option<f64>,
    pub clusters: Vec<ClusterEntry>,
}

impl ClustersReport {
    pub fn new(
        seed: u64,
        weighting: Weighting,
        partition: &Partition,
        modularity: Option<f64>,
        summaries: Vec<ClusterSummary>,
    ) -> Self {
        let modularity = modularity.map(round_sig9);
        ClustersReport {
            seed,
            weighting,
            n_communities: partition.n_communities,
            modularity,
            clusters: summaries
                .into_iter()
                .map(|s| ClusterEntry {
                    community: s.community,
                    size: s.size,
                    modularity,
                    representatives: s.representatives,
                    members: s.members,
                })
                .collect(),
        }
    }
}

/// Louvain partition, or all-singletons with no modularity when the graph
/// has no edges.
pub fn partition_or_singletons(
    graph: &SimilarityGraph,
    seed: u64,
    weighting: Weighting,
) -> Result<(Partition, Option<f64>), PipelineError> {
    match louvain(graph, seed, weighting) {
        Ok(p) => {
            let q = p.modularity;
            Ok((p, Some(q)))
        }
        Err(CommunityError::EmptyGraph) => {
            let n = graph.node_count();
            Ok((
                Partition {
                    assignment: (0..n).collect(),
                    modularity: 0.0,
                    n_communities: n,
                    level_modularity: Vec::new(),
                },
                None,
            ))
        }
        Err(e) => Err(e.into()),
    }
}

/// One row of the per-scope summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeRow {
    pub scope: String,
    pub images: usize,
    pub k: usize,
    pub clustering_coefficient: f64,
    pub fragmentation: f64,
    pub n_edges: usize,
    pub n_isolates: usize,
    pub n_communities: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub images: usize,
    pub clustering_coefficient: f64,
    pub fragmentation: f64,
}

/// Whether the dataset's country counts equal the reference table exactly.
pub fn matches_reference_counts(dataset: &DatasetHandle) -> bool {
    dataset.per_country_counts.len() == REFERENCE_TABLE.len()
        && REFERENCE_TABLE
            .iter()
            .all(|(c, n, _, _)| dataset.per_country_counts.get(*c) == Some(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub rows: Vec<ScopeRow>,
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

struct Writer<'a> {
    root: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, rel: impl AsRef<Path>, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
        let path = self.root.join(rel);
        write_atomic(&path, bytes.as_ref())?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.put(rel, text)
    }
}

fn position_map(doc: &GraphDocument, positions: &[[f64; 2]]) -> HashMap<String, [f64; 2]> {
    doc.nodes
        .iter()
        .zip(positions)
        .map(|(n, p)| (n.id.clone(), *p))
        .collect()
}

fn write_graph_files(
    out: &mut Writer<'_>,
    export: &ExportConfig,
    stem: &str,
    doc: &GraphDocument,
) -> Result<(), PipelineError> {
    if export.graphml {
        out.put(format!("{stem}.graphml"), write_graphml(doc))?;
    }
    if export.json {
        out.put(format!("{stem}.json"), write_json_graph(doc))?;
    }
    Ok(())
}

fn scope_graph(dataset: &DatasetHandle, knn: &KnnConfig) -> Result<(SimilarityGraph, usize), PipelineError> {
    let n = dataset.len();
    let k = match knn.k {
        Some(k) if n >= 2 => k.min(n - 1),
        _ => k_for(n)?,
    };
    let params = KnnParams {
        k,
        max_distance: knn.max_distance,
    };
    Ok((build_image_graph(&dataset.matrix, &params)?, k))
}

fn run_scope(
    config: &PipelineConfig,
    label: &str,
    dataset: &DatasetHandle,
    out: &mut Writer<'_>,
    notes: &mut Vec<String>,
) -> Result<ScopeRow, PipelineError> {
    let (graph, k) = scope_graph(dataset, &config.knn)?;
    let metrics = metrics_report(&graph);
    out.json(&format!("{label}/metrics.json"), &rounded_metrics(&metrics))?;

    let weighting = config.weighting();
    let (partition, q) = partition_or_singletons(&graph, config.louvain.seed, weighting)?;
    let summaries = top_clusters(
        &graph,
        &partition,
        &dataset.records,
        config.louvain.top,
        config.louvain.reps,
    );
    out.json(
        &format!("{label}/clusters.json"),
        &ClustersReport::new(config.louvain.seed, weighting, &partition, q, summaries),
    )?;

    let positions = run_layout(&graph, &config.layout.params_for(graph.node_count()))?;
    let ids: Vec<&str> = dataset.records.iter().map(|r| r.image_id.as_str()).collect();
    out.put(format!("{label}/positions.csv"), write_positions(ids, &positions))?;

    let doc = GraphDocument::from_image_graph(
        &graph,
        &dataset.records,
        ImageAnnotations {
            community: Some(&partition.assignment),
            positions: Some(&positions),
        },
    );
    write_graph_files(out, &config.export, &format!("{label}/graph"), &doc)?;
    if config.export.svg {
        out.put(
            format!("{label}/graph.svg"),
            render_svg(&doc, &position_map(&doc, &positions), &SvgStyle::default())?,
        )?;
    }

    match fold_accounts(&graph, &dataset.records) {
        Ok(accounts) => {
            let doc = GraphDocument::from_account_graph(&accounts);
            write_graph_files(out, &config.export, &format!("{label}/accounts"), &doc)?;
            if config.export.svg {
                let pos = run_layout(&accounts, &config.layout.params_for(accounts.node_count()))?;
                let style = SvgStyle {
                    size_attr: Some("image_count".into()),
                    color_attr: None,
                    ..SvgStyle::default()
                };
                out.put(
                    format!("{label}/accounts.svg"),
                    render_svg(&doc, &position_map(&doc, &pos), &style)?,
                )?;
            }
        }
        Err(FoldError::NoAttributedImages) => {
            notes.push(format!("{label}: no account ids, account network skipped"));
        }
        Err(e) => return Err(e.into()),
    }

    if label == "all" {
        let countries = fold_countries(&graph, &dataset.records)?;
        let doc = GraphDocument::from_country_graph(&countries);
        write_graph_files(out, &config.export, "all/countries", &doc)?;
        if config.export.svg {
            let pos = run_layout(&countries, &config.layout.params_for(countries.node_count()))?;
            let map = position_map(&doc, &pos);
            for (file, attr) in [("countries.svg", "total_images"), ("countries_authors.svg", "unique_authors")] {
                let style = SvgStyle {
                    size_attr: Some(attr.into()),
                    color_attr: None,
                    ..SvgStyle::default()
                };
                out.put(format!("all/{file}"), render_svg(&doc, &map, &style)?)?;
            }
        }
    }

    Ok(ScopeRow {
        scope: label.to_string(),
        images: metrics.n_nodes,
        k,
        clustering_coefficient: round_sig9(metrics.clustering_coefficient),
        fragmentation: round_sig9(metrics.fragmentation),
        n_edges: metrics.n_edges,
        n_isolates: metrics.n_isolates,
        n_communities: partition.n_communities,
        reference: None,
    })
}

fn table_csv(rows: &[ScopeRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["scope", "images", "clustering_coefficient", "fragmentation"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.scope.clone(),
            r.images.to_string(),
            crate::export::format_float(r.clustering_coefficient),
            crate::export::format_float(r.fragmentation),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn relative(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

/// Runs the configured pipeline and writes all artifacts.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    config.validate()?;
    let dataset = load_dataset(&config.input.manifest, &config.input.vectors)?;
    let root = config.output.dir.as_path();
    fs::create_dir_all(root).map_err(|e| PipelineError::io(root, e))?;
    let _lock = DirLock::acquire(root)?;

    let mut out = Writer {
        root,
        written: Vec::new(),
    };
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    if matches!(config.scope, Scope::All | Scope::Both) {
        rows.push(run_scope(config, "all", &dataset, &mut out, &mut notes)?);
    }
    if matches!(config.scope, Scope::PerCountry | Scope::Both) {
        for country in &dataset.countries {
            let subset = dataset.restrict(&dataset.rows_of_country(country));
            if subset.len() < 2 {
                notes.push(format!("{country}: fewer than 2 images, skipped"));
                continue;
            }
            rows.push(run_scope(config, country, &subset, &mut out, &mut notes)?);
        }
    }
    if matches_reference_counts(&dataset) {
        for row in &mut rows {
            if let Some((_, n, cc, frag)) = REFERENCE_TABLE.iter().find(|r| r.0 == row.scope) {
                row.reference = Some(ReferenceRow {
                    images: *n,
                    clustering_coefficient: *cc,
                    fragmentation: *frag,
                });
            }
        }
    }
    out.json("table.json", &rows)?;
    out.put("table.csv", table_csv(&rows))?;

    let inputs = vec![
        FileDigest {
            path: config.input.manifest.to_string_lossy().into_owned(),
            sha256: sha256_file(&config.input.manifest)?,
        },
        FileDigest {
            path: config.input.vectors.to_string_lossy().into_owned(),
            sha256: sha256_file(&config.input.vectors)?,
        },
    ];
    let mut outputs = Vec::new();
    for p in &out.written {
        outputs.push(FileDigest {
            path: relative(root, p),
            sha256: sha256_file(p)?,
        });
    }
    outputs.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        inputs,
        outputs,
    };
    out.json(RUN_MANIFEST, &manifest)?;
    Ok(RunSummary {
        rows,
        outputs: out.written,
        notes,
    })
}

/// Re-checks input and output checksums recorded by a previous run.
pub fn verify_run(output_dir: &Path) -> Result<(), PipelineError> {
    let path = output_dir.join(RUN_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| PipelineError::Verify(format!("{}: {e}", path.display())))?;
    let mut problems = Vec::new();
    for input in &manifest.inputs {
        match sha256_file(Path::new(&input.path)) {
            Ok(sum) if sum == input.sha256 => {}
            Ok(_) => problems.push(format!("input {} changed", input.path)),
            Err(_) => problems.push(format!("input {} is missing", input.path)),
        }
    }
    for output in &manifest.outputs {
        match sha256_file(&output_dir.join(&output.path)) {
            Ok(sum) if sum == output.sha256 => {}
            Ok(_) => problems.push(format!("output {} changed", output.path)),
            Err(_) => problems.push(format!("output {} is missing", output.path)),
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::Verify(problems.join("; ")))
    }
}

/// Summary of one dataset for `ingest validate`.
pub fn country_counts(dataset: &DatasetHandle) -> BTreeMap<String, usize> {
    dataset.per_country_counts.clone()
}
