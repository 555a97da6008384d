use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qitecut::config::FileConfig;
use qitecut::graph::{enumerate_connected, Graph, GraphError};
use qitecut::metrics::{steps_to_ratio_93, CutReference, MetricsReport};
use qitecut::oracle::{
    brute_force_maxcut, cut_size, greedy_multistart, round_mask_string, CutOracleResult,
    OracleError, BRUTE_FORCE_CAP,
};
use qitecut::qite::{itd_pair_search, run, ItdMode, ItdSchedule, QiteConfig, TauMode};
use qitecut::sweep::{run_sweep, EnsembleSource, SweepItd, SweepSpec};

/// Exit status for malformed input (bad graph records, bad flags, empty
/// ensembles).
const EXIT_BAD_INPUT: u8 = 2;
/// Exit status for requests beyond a hard size cap.
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "qitecut", version, about = "MaxCut via imaginary-time evolution of product states")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML file with run parameters; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve a single graph and print the trajectory and metrics as JSON.
    Run {
        #[command(flatten)]
        source: SourceArgs,
        /// Step budget.
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        qite: QiteArgs,
    },
    /// Run an ensemble and write CSV, summary JSON, and SVG histograms.
    Sweep {
        /// Enumerate all connected graphs on N <= 6 vertices.
        #[arg(long, value_name = "N", conflicts_with_all = ["graphs", "er_ensemble"])]
        enumerate: Option<usize>,
        /// Read a graph6 file, one record per line.
        #[arg(long, value_name = "FILE", conflicts_with = "er_ensemble")]
        graphs: Option<PathBuf>,
        /// Random ensemble: N,COUNT (probability drawn from --p-range).
        #[arg(long = "er", value_name = "N,COUNT")]
        er_ensemble: Option<String>,
        /// Edge-probability range for --er.
        #[arg(long, value_name = "LO,HI", default_value = "0.09,0.99")]
        p_range: String,
        /// Reject disconnected graphs when generating with --er.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        connected: bool,
        /// Steps to report, ascending; the last one is the run budget.
        #[arg(long, value_name = "S1,S2,...", default_value = "1,4,10")]
        steps: String,
        /// Pair-excision mode: off, exhaustive, or random:K.
        #[arg(long, default_value = "off")]
        itd: String,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Draw the 0.878 classical reference line in ratio histograms.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        gw_line: bool,
        #[command(flatten)]
        qite: QiteArgs,
    },
    /// Exhaustive MaxCut data for one graph as JSON.
    Oracle {
        #[command(flatten)]
        source: SourceArgs,
        /// Vertex cap for the exhaustive search.
        #[arg(long, default_value_t = BRUTE_FORCE_CAP)]
        cap: usize,
    },
    /// Greedy baseline cut for one graph as JSON.
    Greedy {
        #[command(flatten)]
        source: SourceArgs,
        /// Number of seeded random vertex orders to try.
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print all connected graphs on N <= 6 vertices as graph6 records.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search excision pairs for one graph and print the per-pair table.
    ItdSearch {
        #[command(flatten)]
        source: SourceArgs,
        /// exhaustive or random:K.
        #[arg(long, default_value = "exhaustive")]
        itd: String,
        /// Step budget.
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        qite: QiteArgs,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// A graph6 record, e.g. "C~".
    #[arg(long)]
    g6: Option<String>,
    /// A seeded random graph: N,P,SEED.
    #[arg(long, value_name = "N,P,SEED")]
    er: Option<String>,
}

#[derive(Args)]
struct QiteArgs {
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    tau_points: Option<usize>,
    #[arg(long)]
    variance_tol: Option<f64>,
    /// Fixed imaginary-time parameter; disables the per-step search.
    #[arg(long)]
    fixed_tau: Option<f64>,
    /// Excision ramp, e.g. "1.0,0.5".
    #[arg(long)]
    ramp: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Measurement shots for the sampled-cut metric (0 disables).
    #[arg(long, default_value_t = 128)]
    shots: usize,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let file_cfg = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_BAD_INPUT, &e.to_string()),
        },
        None => FileConfig::default(),
    };
    match dispatch(cli.cmd, &file_cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.code, &e.message),
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn bad_input(message: impl Into<String>) -> Self {
        Self { code: EXIT_BAD_INPUT, message: message.into() }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        let code = match e {
            GraphError::TooManyVertices(_) | GraphError::EnumerationUnsupported(_) => EXIT_CAP,
            _ => EXIT_BAD_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        Self { code: EXIT_CAP, message: e.to_string() }
    }
}

impl From<qitecut::qite::QiteError> for CliError {
    fn from(e: qitecut::qite::QiteError) -> Self {
        Self::bad_input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::bad_input(e.to_string())
    }
}

fn fail(code: u8, message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn dispatch(cmd: Cmd, file_cfg: &FileConfig) -> Result<(), CliError> {
    match cmd {
        Cmd::Run { source, steps, qite } => cmd_run(&source, steps, &qite, file_cfg),
        Cmd::Sweep {
            enumerate,
            graphs,
            er_ensemble,
            p_range,
            connected,
            steps,
            itd,
            out,
            gw_line,
            qite,
        } => cmd_sweep(
            enumerate, graphs, er_ensemble, &p_range, connected, &steps, &itd, out, gw_line,
            &qite, file_cfg,
        ),
        Cmd::Oracle { source, cap } => cmd_oracle(&source, cap),
        Cmd::Greedy { source, starts, seed } => cmd_greedy(&source, starts, seed),
        Cmd::Enumerate { n, out } => cmd_enumerate(n, out),
        Cmd::ItdSearch { source, itd, steps, qite } => {
            cmd_itd_search(&source, &itd, steps, &qite, file_cfg)
        }
    }
}

fn parse_source(source: &SourceArgs) -> Result<(Graph, String), CliError> {
    if let Some(g6) = &source.g6 {
        let g = Graph::parse_graph6(g6.as_bytes())?;
        return Ok((g, g6.clone()));
    }
    let spec = source.er.as_ref().expect("clap enforces one source");
    let parts: Vec<&str> = spec.split(',').collect();
    let [n, p, seed] = parts.as_slice() else {
        return Err(CliError::bad_input(format!("--er expects N,P,SEED (got {spec:?})")));
    };
    let n: usize = n.trim().parse().map_err(|_| CliError::bad_input("bad N in --er"))?;
    let p: f64 = p.trim().parse().map_err(|_| CliError::bad_input("bad P in --er"))?;
    let seed: u64 = seed.trim().parse().map_err(|_| CliError::bad_input("bad SEED in --er"))?;
    let g = Graph::erdos_renyi(n, p, seed)?;
    Ok((g, format!("er-{n}-{p}-{seed}")))
}

fn build_config(
    steps: Option<usize>,
    qite: &QiteArgs,
    file_cfg: &FileConfig,
) -> Result<QiteConfig, CliError> {
    let mut cfg = QiteConfig::default();
    file_cfg.apply(&mut cfg);
    if let Some(s) = steps {
        cfg.max_steps = s;
    }
    if let Some(v) = qite.tau_max {
        cfg.tau_max = v;
    }
    if let Some(v) = qite.tau_points {
        cfg.tau_points = v;
    }
    if let Some(v) = qite.variance_tol {
        cfg.variance_tol = v;
    }
    if let Some(t) = qite.fixed_tau {
        cfg.tau_mode = TauMode::Fixed(t);
    }
    if let Some(ramp) = &qite.ramp {
        let ramp = parse_f64_list(ramp).map_err(CliError::bad_input)?;
        let excised = cfg.itd.as_ref().map(|s| s.excised_edges.clone()).unwrap_or_default();
        cfg.itd = Some(ItdSchedule::new(excised, ramp));
    }
    Ok(cfg)
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number {x:?}")))
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| format!("bad integer {x:?}")))
        .collect()
}

fn parse_itd(s: &str, seed: u64) -> Result<Option<ItdMode>, CliError> {
    match s {
        "off" => Ok(None),
        "exhaustive" => Ok(Some(ItdMode::Exhaustive)),
        other => {
            let Some(k) = other.strip_prefix("random:") else {
                return Err(CliError::bad_input(format!(
                    "--itd must be off, exhaustive, or random:K (got {other:?})"
                )));
            };
            let k: usize =
                k.parse().map_err(|_| CliError::bad_input("bad K in --itd random:K"))?;
            Ok(Some(ItdMode::Random { k, seed }))
        }
    }
}

/// The cut reference used for ratios, plus whether it is exact.
fn reference_for(
    g: &Graph,
    result: &qitecut::qite::RunResult,
    shots: usize,
    seed: u64,
) -> Result<(Option<CutOracleResult>, u64), CliError> {
    if g.n() <= BRUTE_FORCE_CAP {
        let oracle = brute_force_maxcut(g, BRUTE_FORCE_CAP)?;
        let c = oracle.c_max;
        Ok((Some(oracle), c))
    } else {
        let (greedy_best, _) = greedy_multistart(g, 200, seed);
        let rounded = cut_size(g, qitecut::metrics::round_state(&result.final_state));
        let sampled = qitecut::metrics::sample_state(&result.final_state, shots, seed)
            .into_iter()
            .map(|m| cut_size(g, m))
            .max()
            .unwrap_or(0);
        Ok((None, greedy_best.max(rounded).max(sampled)))
    }
}

#[derive(Serialize)]
struct GraphDesc {
    id: String,
    n: usize,
    edges: Vec<(usize, usize)>,
}

fn cmd_run(
    source: &SourceArgs,
    steps: Option<usize>,
    qite: &QiteArgs,
    file_cfg: &FileConfig,
) -> Result<(), CliError> {
    let (g, id) = parse_source(source)?;
    let cfg = build_config(steps, qite, file_cfg)?;
    let result = run(&g, &cfg)?;
    let (oracle, c_max) = reference_for(&g, &result, qite.shots, qite.seed)?;
    let reference = match &oracle {
        Some(o) => CutReference::Exact(o),
        None => CutReference::BestKnown(c_max),
    };
    let metrics = MetricsReport::compute(
        &result.final_state,
        &g,
        &reference,
        qite.shots,
        qite.seed,
        steps_to_ratio_93(&result, &g, c_max),
    );
    #[derive(Serialize)]
    struct Output {
        graph: GraphDesc,
        config: QiteConfig,
        result: qitecut::qite::RunResult,
        metrics: MetricsReport,
    }
    let out = Output {
        graph: GraphDesc { id, n: g.n(), edges: g.edges().to_vec() },
        config: cfg,
        result,
        metrics,
    };
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| CliError::bad_input(e.to_string()))?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    enumerate: Option<usize>,
    graphs: Option<PathBuf>,
    er_ensemble: Option<String>,
    p_range: &str,
    connected: bool,
    steps: &str,
    itd: &str,
    out: PathBuf,
    gw_line: bool,
    qite: &QiteArgs,
    file_cfg: &FileConfig,
) -> Result<(), CliError> {
    let source = if let Some(n) = enumerate {
        EnsembleSource::Enumerate { n }
    } else if let Some(path) = graphs {
        EnsembleSource::File(path)
    } else if let Some(spec) = er_ensemble {
        let parts = parse_usize_list(&spec).map_err(CliError::bad_input)?;
        let [n, count] = parts.as_slice() else {
            return Err(CliError::bad_input("--er expects N,COUNT"));
        };
        let range = parse_f64_list(p_range).map_err(CliError::bad_input)?;
        let [lo, hi] = range.as_slice() else {
            return Err(CliError::bad_input("--p-range expects LO,HI"));
        };
        EnsembleSource::ErdosRenyi { n: *n, count: *count, p_range: (*lo, *hi), connected }
    } else {
        return Err(CliError::bad_input(
            "sweep needs a source: --enumerate N, --graphs FILE, or --er N,COUNT",
        ));
    };
    let steps = parse_usize_list(steps).map_err(CliError::bad_input)?;
    let itd = match parse_itd(itd, qite.seed)? {
        None => SweepItd::Off,
        Some(ItdMode::Exhaustive) => SweepItd::Exhaustive,
        Some(ItdMode::Random { k, .. }) => SweepItd::Random { k },
    };
    let spec = SweepSpec {
        source,
        steps,
        itd,
        out_dir: out,
        qite: build_config(None, qite, file_cfg)?,
        seed: qite.seed,
        shots: qite.shots,
        gw_line,
    };
    let summary = run_sweep(&spec).map_err(|e| match e {
        qitecut::sweep::SweepError::EmptySource | qitecut::sweep::SweepError::BadSteps => {
            CliError::bad_input(e.to_string())
        }
        qitecut::sweep::SweepError::Graph(g) => g.into(),
        other => CliError::bad_input(other.to_string()),
    })?;
    if summary.failures > 0 {
        return Err(CliError { code: 1, message: format!("{} graphs failed", summary.failures) });
    }
    eprintln!(
        "swept {} graphs; results in {}",
        summary.graphs,
        spec.out_dir.display()
    );
    Ok(())
}

fn cmd_oracle(source: &SourceArgs, cap: usize) -> Result<(), CliError> {
    let (g, id) = parse_source(source)?;
    let oracle = brute_force_maxcut(&g, cap)?;
    #[derive(Serialize)]
    struct Output {
        graph_id: String,
        n: usize,
        edges: usize,
        c_max: u64,
        e0: f64,
        ground_states: Vec<String>,
        ground_count: u64,
        truncated: bool,
        spectrum: Vec<u64>,
    }
    let out = Output {
        graph_id: id,
        n: g.n(),
        edges: g.edge_count(),
        c_max: oracle.c_max,
        e0: oracle.e0,
        ground_states: oracle
            .ground_states
            .iter()
            .map(|&m| round_mask_string(m, g.n()))
            .collect(),
        ground_count: oracle.ground_count,
        truncated: oracle.truncated,
        spectrum: oracle.spectrum,
    };
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| CliError::bad_input(e.to_string()))?);
    Ok(())
}

fn cmd_greedy(source: &SourceArgs, starts: usize, seed: u64) -> Result<(), CliError> {
    let (g, id) = parse_source(source)?;
    let (cut, mask) = greedy_multistart(&g, starts, seed);
    #[derive(Serialize)]
    struct Output {
        graph_id: String,
        n: usize,
        edges: usize,
        cut: u64,
        assignment: String,
        starts: usize,
        seed: u64,
    }
    let out = Output {
        graph_id: id,
        n: g.n(),
        edges: g.edge_count(),
        cut,
        assignment: round_mask_string(mask, g.n()),
        starts,
        seed,
    };
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| CliError::bad_input(e.to_string()))?);
    Ok(())
}

fn cmd_enumerate(n: usize, out: Option<PathBuf>) -> Result<(), CliError> {
    let ens = enumerate_connected(n)?;
    let mut text = String::new();
    for g in &ens.graphs {
        text.push_str(&g.to_graph6()?);
        text.push('\n');
    }
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_itd_search(
    source: &SourceArgs,
    itd: &str,
    steps: Option<usize>,
    qite: &QiteArgs,
    file_cfg: &FileConfig,
) -> Result<(), CliError> {
    let (g, id) = parse_source(source)?;
    let cfg = build_config(steps, qite, file_cfg)?;
    let Some(mode) = parse_itd(itd, qite.seed)? else {
        return Err(CliError::bad_input("itd-search needs --itd exhaustive or random:K"));
    };
    // Success means reaching the optimal manifold when the oracle fits.
    let oracle = (g.n() <= BRUTE_FORCE_CAP)
        .then(|| brute_force_maxcut(&g, BRUTE_FORCE_CAP))
        .transpose()?;
    let search = match &oracle {
        Some(o) => {
            let c_max = o.c_max;
            let graph = g.clone();
            let pred = move |r: &qitecut::qite::RunResult| {
                cut_size(&graph, qitecut::metrics::round_state(&r.final_state)) == c_max
            };
            itd_pair_search(&g, &cfg, mode, Some(&pred))?
        }
        None => itd_pair_search(&g, &cfg, mode, None)?,
    };
    let c_max = oracle.as_ref().map(|o| o.c_max);
    #[derive(Serialize)]
    struct Output {
        graph_id: String,
        n: usize,
        edges: usize,
        c_max: Option<u64>,
        pair: Option<(usize, usize)>,
        final_energy: f64,
        rounded_cut: u64,
        successful_pairs: usize,
        pairs_tried: usize,
        table: Vec<qitecut::qite::PairOutcome>,
    }
    let out = Output {
        graph_id: id,
        n: g.n(),
        edges: g.edge_count(),
        c_max,
        pair: search.pair,
        final_energy: search.result.final_energy(&g),
        rounded_cut: cut_size(&g, qitecut::metrics::round_state(&search.result.final_state)),
        successful_pairs: search.table.iter().filter(|o| o.success).count(),
        pairs_tried: search.table.len(),
        table: search.table,
    };
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| CliError::bad_input(e.to_string()))?);
    Ok(())
}
