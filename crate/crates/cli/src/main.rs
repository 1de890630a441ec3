use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use simnet_core::communities::{top_clusters, Weighting};
use simnet_core::export::{
    parse_graphml, parse_json_graph, parse_positions, render_svg, write_graphml, write_json_graph,
    write_positions, GraphDocument, ImageAnnotations, SvgStyle,
};
use simnet_core::fold::{fold_accounts, fold_countries};
use simnet_core::ingest::{load_dataset, write_manifest, write_vectors, DatasetHandle};
use simnet_core::layout::{run_layout, Fa2Params, DEFAULT_THETA};
use simnet_core::netmetrics::metrics_report;
use simnet_core::pipeline::{
    load_config, partition_or_singletons, rounded_metrics, run_pipeline, verify_run, write_atomic,
    ClustersReport, PipelineError,
};
use simnet_core::simnet::{build_image_graph, k_for, KnnParams, SimilarityGraph, Topology};
use simnet_core::synth::{generate, FixtureSpec};

type Result<T> = std::result::Result<T, PipelineError>;

const CONFIG_HELP: &str = "\
Config file (TOML); relative paths resolve against the config's directory:

  scope = \"both\"                  all | per-country | both
  [input]   manifest, vectors      required
  [output]  dir                    required
  [knn]     k                      default floor(ln N) per comparison set
            max_distance           default none
  [louvain] seed = 42, weighted = true, top = 6, reps = 8
  [layout]  iterations = 500, scaling = 2.0, gravity = 1.0,
            jitter_tolerance = 1.0, linlog = false, seed = 7,
            barnes_hut (theta, default unset), until_stable (default unset),
            barnes_hut_above = 2000
  [export]  graphml = true, json = true, svg = true

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
SIMNET_THREADS caps worker threads.";

#[derive(Parser)]
#[command(name = "simnet", version, about = "k-NN image similarity network analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect manifest and vector inputs.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Build similarity graphs.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Clustering coefficient, fragmentation and component statistics.
    Metrics(MetricsArgs),
    /// Louvain communities and representative images.
    Clusters(ClustersArgs),
    /// ForceAtlas2 node positions.
    Layout(LayoutArgs),
    /// Project an image graph onto accounts or countries.
    Fold(FoldArgs),
    /// Draw a graph with given positions as SVG.
    Render(RenderArgs),
    /// Run the full pipeline from a config file.
    #[command(after_long_help = CONFIG_HELP)]
    Run(RunArgs),
    /// Write a synthetic dataset with planted near-duplicate groups.
    Synth(SynthArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    vectors: PathBuf,
}

#[derive(Subcommand)]
enum IngestCommand {
    /// Check that the inputs load and agree; print per-country counts.
    Validate(InputArgs),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Build the k-NN similarity graph.
    Build(BuildArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Restrict to one country; k is then derived from that country's size.
    #[arg(long)]
    country: Option<String>,
    /// Neighbors per image; default floor(ln N).
    #[arg(long)]
    k: Option<usize>,
    /// Drop edges longer than this distance.
    #[arg(long)]
    max_distance: Option<f64>,
    /// Output file; `.json` writes the JSON edge list, anything else GraphML.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphArg {
    /// Graph file (`.graphml` or `.json`).
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClustersArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of largest clusters to report.
    #[arg(long, default_value_t = 6)]
    top: usize,
    /// Representatives per cluster.
    #[arg(long, default_value_t = 8)]
    reps: usize,
    /// Treat every edge as weight 1.
    #[arg(long)]
    unweighted: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the graph with a `community` node attribute.
    #[arg(long)]
    annotated: Option<PathBuf>,
}

#[derive(Args)]
struct LayoutArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    scaling: f64,
    #[arg(long, default_value_t = 1.0)]
    gravity: f64,
    #[arg(long, default_value_t = 1.0)]
    jitter_tolerance: f64,
    #[arg(long)]
    linlog: bool,
    /// Use Barnes-Hut repulsion, optionally with a custom opening angle.
    #[arg(long, num_args = 0..=1, default_missing_value = "1.2")]
    barnes_hut: Option<f64>,
    /// Stop once no node moves farther than this in one iteration.
    #[arg(long)]
    until_stable: Option<f64>,
    /// Positions CSV (image_id,x,y).
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FoldKind {
    Accounts,
    Countries,
}

#[derive(Args)]
struct FoldArgs {
    #[arg(value_enum)]
    kind: FoldKind,
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Positions CSV; defaults to the graph's `x`/`y` node attributes.
    #[arg(long)]
    positions: Option<PathBuf>,
    /// Numeric node attribute that scales node radius.
    #[arg(long)]
    size_attr: Option<String>,
    /// Integer node attribute that picks node color.
    #[arg(long, default_value = "community")]
    color_attr: String,
    #[arg(long, default_value_t = 1000.0)]
    width: f64,
    #[arg(long, default_value_t = 1000.0)]
    height: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Override a config value, e.g. `--set louvain.seed=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Check checksums of an existing run instead of running.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 2022)]
    seed: u64,
    #[arg(long, default_value_t = 250)]
    images_per_country: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SIMNET_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| PipelineError::Config(format!("SIMNET_THREADS={raw:?} is not a number")))?;
    // Another initialization can only come from this same call.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

fn load_graph(path: &Path) -> Result<GraphDocument> {
    let text = read_text(path)?;
    let doc = if path.extension().is_some_and(|e| e == "json") {
        parse_json_graph(&text)?
    } else {
        parse_graphml(&text)?
    };
    Ok(doc)
}

fn save_graph(path: &Path, doc: &GraphDocument) -> Result<()> {
    let text = if path.extension().is_some_and(|e| e == "json") {
        write_json_graph(doc)
    } else {
        write_graphml(doc)
    };
    write_atomic(path, text.as_bytes())
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

fn image_graph(dataset: &DatasetHandle, k: Option<usize>, max_distance: Option<f64>) -> Result<SimilarityGraph> {
    let n = dataset.len();
    let k = match k {
        Some(k) => k,
        None => k_for(n)?,
    };
    Ok(build_image_graph(&dataset.matrix, &KnnParams { k, max_distance })?)
}

fn ingest(cmd: IngestCommand) -> Result<()> {
    let IngestCommand::Validate(input) = cmd;
    let dataset = load_dataset(&input.manifest, &input.vectors)?;
    let attributed = dataset.records.iter().filter(|r| r.account_id.is_some()).count();
    emit_json(
        None,
        &json!({
            "images": dataset.len(),
            "dim": dataset.matrix.dim(),
            "attributed_images": attributed,
            "countries": dataset.per_country_counts,
        }),
    )
}

fn graph(cmd: GraphCommand) -> Result<()> {
    let GraphCommand::Build(args) = cmd;
    let mut dataset = load_dataset(&args.input.manifest, &args.input.vectors)?;
    if let Some(country) = &args.country {
        let country = country.trim().to_lowercase();
        if !dataset.countries.contains(&country) {
            return Err(PipelineError::Config(format!("unknown country {country:?}")));
        }
        dataset = dataset.restrict(&dataset.rows_of_country(&country));
    }
    let g = image_graph(&dataset, args.k, args.max_distance)?;
    let doc = GraphDocument::from_image_graph(&g, &dataset.records, ImageAnnotations::default());
    save_graph(&args.out, &doc)?;
    eprintln!("{} nodes, {} edges -> {}", g.node_count(), g.edge_count(), args.out.display());
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let g = load_graph(&args.graph.graph)?.to_similarity_graph()?;
    emit_json(args.out.as_deref(), &to_value(&rounded_metrics(&metrics_report(&g))))
}

fn clusters(args: ClustersArgs) -> Result<()> {
    let doc = load_graph(&args.graph.graph)?;
    let g = doc.to_similarity_graph()?;
    let weighting = if args.unweighted {
        Weighting::Unweighted
    } else {
        Weighting::Weighted
    };
    let (partition, q) = partition_or_singletons(&g, args.seed, weighting)?;
    let records = doc.image_records();
    let summaries = top_clusters(&g, &partition, &records, args.top, args.reps);
    let report = ClustersReport::new(args.seed, weighting, &partition, q, summaries);
    if let Some(path) = &args.annotated {
        let mut annotated = doc.clone();
        for (node, c) in annotated.nodes.iter_mut().zip(&partition.assignment) {
            node.attrs.insert("community".into(), (*c).into());
        }
        save_graph(path, &annotated)?;
    }
    emit_json(args.out.as_deref(), &to_value(&report))
}

fn layout(args: LayoutArgs) -> Result<()> {
    let doc = load_graph(&args.graph.graph)?;
    let g = doc.to_similarity_graph()?;
    let params = Fa2Params {
        scaling: args.scaling,
        gravity: args.gravity,
        iterations: args.iterations,
        jitter_tolerance: args.jitter_tolerance,
        linlog: args.linlog,
        prevent_overlap: false,
        seed: args.seed,
        barnes_hut: args.barnes_hut,
        until_stable: args.until_stable,
    };
    params
        .validate()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let positions = run_layout(&g, &params)?;
    write_atomic(&args.out, write_positions(doc.node_ids(), &positions).as_bytes())
}

fn fold(args: FoldArgs) -> Result<()> {
    let doc = load_graph(&args.graph.graph)?;
    let g = doc.to_similarity_graph()?;
    let records = doc.image_records();
    let folded = match args.kind {
        FoldKind::Accounts => GraphDocument::from_account_graph(&fold_accounts(&g, &records)?),
        FoldKind::Countries => GraphDocument::from_country_graph(&fold_countries(&g, &records)?),
    };
    save_graph(&args.out, &folded)
}

fn render(args: RenderArgs) -> Result<()> {
    let doc = load_graph(&args.graph.graph)?;
    let positions: HashMap<String, [f64; 2]> = match &args.positions {
        Some(p) => parse_positions(&read_text(p)?)?.into_iter().collect(),
        None => match (doc.numeric_attr("x"), doc.numeric_attr("y")) {
            (Some(xs), Some(ys)) => doc
                .node_ids()
                .zip(xs.into_iter().zip(ys))
                .map(|(id, (x, y))| (id.to_string(), [x, y]))
                .collect(),
            _ => {
                let g = doc.to_similarity_graph()?;
                let params = Fa2Params {
                    barnes_hut: (g.node_count() > 2000).then_some(DEFAULT_THETA),
                    ..Fa2Params::default()
                };
                doc.node_ids()
                    .map(String::from)
                    .zip(run_layout(&g, &params)?)
                    .collect()
            }
        },
    };
    let style = SvgStyle {
        width: args.width,
        height: args.height,
        size_attr: args.size_attr,
        color_attr: Some(args.color_attr),
        ..SvgStyle::default()
    };
    write_atomic(&args.out, render_svg(&doc, &positions, &style)?.as_bytes())
}

fn run(args: RunArgs) -> Result<()> {
    let config = load_config(&args.config, &args.overrides)?;
    if args.verify {
        verify_run(&config.output.dir)?;
        eprintln!("{}: all checksums match", config.output.dir.display());
        return Ok(());
    }
    let summary = run_pipeline(&config)?;
    for note in &summary.notes {
        eprintln!("note: {note}");
    }
    println!("scope\timages\tclustering_coefficient\tfragmentation");
    for row in &summary.rows {
        println!(
            "{}\t{}\t{:.3}\t{:.3}",
            row.scope, row.images, row.clustering_coefficient, row.fragmentation
        );
    }
    eprintln!("{} files written to {}", summary.outputs.len() + 1, config.output.dir.display());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = FixtureSpec {
        seed: args.seed,
        images_per_country: args.images_per_country,
        dim: args.dim,
        ..FixtureSpec::default()
    };
    let planted = spec.groups_per_country * spec.group_size + spec.cross_groups * spec.cross_members_per_country;
    if args.images_per_country < planted || args.dim == 0 {
        return Err(PipelineError::Config(format!(
            "need at least {planted} images per country and a positive dimension"
        )));
    }
    let fixture = generate(&spec);
    fs::create_dir_all(&args.out).map_err(|e| PipelineError::io(&args.out, e))?;
    write_manifest(&fixture.dataset.records, args.out.join("manifest.jsonl"))?;
    write_vectors(&fixture.dataset.matrix, args.out.join("vectors.simvec"))?;
    let groups: Vec<Vec<&str>> = fixture
        .groups
        .iter()
        .map(|g| g.iter().map(|&r| fixture.dataset.records[r].image_id.as_str()).collect())
        .collect();
    emit_json(Some(&args.out.join("groups.json")), &json!(groups))?;
    eprintln!("{} images written to {}", fixture.dataset.len(), args.out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Ingest(c) => ingest(c),
        Command::Graph(c) => graph(c),
        Command::Metrics(a) => metrics(a),
        Command::Clusters(a) => clusters(a),
        Command::Layout(a) => layout(a),
        Command::Fold(a) => fold(a),
        Command::Render(a) => render(a),
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
