//! Ensemble experiment harness: runs the evolution over a graph ensemble,
//! scores every requested step against exact or best-known cuts, and emits
//! CSV rows, a JSON summary, and SVG histograms.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    enumerate_connected, erdos_renyi_ensemble, read_graph6_file, Graph, GraphEnsemble, GraphError,
    Provenance,
};
use crate::metrics::{
    expected_cut, p_ground, round_state, sample_state, GROUND_CLASSIFICATION_THRESHOLD,
};
use crate::oracle::{
    brute_force_maxcut, cut_size, greedy_multistart, ground_overlap_streaming, CutOracleResult,
    BRUTE_FORCE_CAP,
};
use crate::plot::histogram_svg;
use crate::qite::{itd_pair_search, run, ItdMode, QiteConfig, QiteError, RunResult};

/// Reference line drawn in ratio histograms: the worst-case guarantee of the
/// best known polynomial-time classical algorithm.
pub const CLASSICAL_REFERENCE_RATIO: f64 = 0.878;

/// Starts used when substituting a best-known cut for graphs beyond the
/// exhaustive-oracle cap.
pub const BEST_KNOWN_GREEDY_STARTS: usize = 200;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("ensemble is empty")]
    EmptySource,
    #[error("steps list must be nonempty, ascending, and start at 1 or later")]
    BadSteps,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cannot read graphs: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Qite(#[from] QiteError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Where a sweep's graphs come from.
#[derive(Debug, Clone)]
pub enum EnsembleSource {
    Enumerate { n: usize },
    File(PathBuf),
    ErdosRenyi { n: usize, count: usize, p_range: (f64, f64), connected: bool },
}

impl EnsembleSource {
    fn describe(&self, seed: u64) -> String {
        match self {
            EnsembleSource::Enumerate { n } => format!("enumerate-{n}"),
            EnsembleSource::File(p) => format!("file:{}", p.display()),
            EnsembleSource::ErdosRenyi { n, count, p_range, connected } => format!(
                "er-n{n}-p{}:{}-count{count}-seed{seed}{}",
                p_range.0,
                p_range.1,
                if *connected { "-connected" } else { "" }
            ),
        }
    }
}

/// Pair-excision policy during a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepItd {
    Off,
    Exhaustive,
    Random { k: usize },
}

impl std::fmt::Display for SweepItd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepItd::Off => write!(f, "off"),
            SweepItd::Exhaustive => write!(f, "exhaustive"),
            SweepItd::Random { k } => write!(f, "random:{k}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub source: EnsembleSource,
    /// Steps at which metrics are reported; the last entry is the run budget.
    pub steps: Vec<usize>,
    pub itd: SweepItd,
    pub out_dir: PathBuf,
    pub qite: QiteConfig,
    pub seed: u64,
    pub shots: usize,
    pub gw_line: bool,
}

/// One CSV row: a graph scored at one step.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub graph_id: String,
    pub n: usize,
    pub edges: usize,
    pub step: usize,
    pub energy: f64,
    pub ratio_expected: f64,
    pub ratio_rounded: f64,
    pub p_ground: Option<f64>,
    pub tau: f64,
    pub terminated_by: String,
    pub itd_pair: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepSummary {
    pub step: usize,
    pub mean_ratio_expected: f64,
    pub mean_ratio_rounded: f64,
    /// Mean over graphs with exact ground states only.
    pub mean_p_ground: Option<f64>,
    /// Graphs whose overlap clears [`GROUND_CLASSIFICATION_THRESHOLD`].
    pub p_ground_over_half: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub source: String,
    pub graphs: usize,
    pub steps: Vec<usize>,
    pub itd: String,
    pub seed: u64,
    pub shots: usize,
    pub config: QiteConfig,
    /// Graphs scored against an exact optimum (the rest use best-known).
    pub exact_reference_graphs: usize,
    pub per_step: Vec<StepSummary>,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize)]
struct FailureRecord {
    graph_id: String,
    error: String,
}

/// Builds the ensemble and its graph ids for a source.
pub fn load_ensemble(
    source: &EnsembleSource,
    seed: u64,
) -> Result<(GraphEnsemble, Vec<String>), SweepError> {
    let ens = match source {
        EnsembleSource::Enumerate { n } => enumerate_connected(*n)?,
        EnsembleSource::File(path) => read_graph6_file(path)?,
        EnsembleSource::ErdosRenyi { n, count, p_range, connected } => {
            erdos_renyi_ensemble(*n, *count, *p_range, seed, *connected)?
        }
    };
    let ids = match &ens.provenance {
        Provenance::ErdosRenyi { n, p_range, seed, .. } => (0..ens.len())
            .map(|i| format!("er-{n}-{}:{}-{seed}-{i}", p_range.0, p_range.1))
            .collect(),
        _ => ens
            .graphs
            .iter()
            .map(|g| g.to_graph6().map_err(SweepError::from))
            .collect::<Result<Vec<_>, _>>()?,
    };
    Ok((ens, ids))
}

struct GraphOutcome {
    rows: Vec<SweepRow>,
}

/// Runs one graph through the sweep protocol: evolve, optionally search
/// excision pairs, then score each requested step.
fn process_graph(
    g: &Graph,
    id: &str,
    spec: &SweepSpec,
    cfg: &QiteConfig,
) -> Result<GraphOutcome, SweepError> {
    let oracle: Option<CutOracleResult> = if g.n() <= BRUTE_FORCE_CAP {
        Some(brute_force_maxcut(g, BRUTE_FORCE_CAP).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string())
        })?)
    } else {
        None
    };

    // Evolve: plain run, then the sanctioned pair-excision escape when asked.
    let mode = match spec.itd {
        SweepItd::Off => None,
        SweepItd::Exhaustive => Some(ItdMode::Exhaustive),
        SweepItd::Random { k } => Some(ItdMode::Random { k, seed: spec.seed }),
    };
    let (chosen, pair, candidates): (RunResult, Option<(usize, usize)>, Vec<u64>) =
        match (mode, &oracle) {
            (None, _) => (run(g, cfg)?, None, Vec::new()),
            (Some(mode), Some(oracle)) => {
                let grounds = oracle.ground_states.clone();
                let truncated = oracle.truncated;
                let c_max = oracle.c_max;
                let graph = g.clone();
                let pred = move |r: &RunResult| {
                    let overlap = if truncated {
                        ground_overlap_streaming(&r.final_state, &graph, c_max).unwrap_or(0.0)
                    } else {
                        p_ground(&r.final_state, &grounds).unwrap_or(0.0)
                    };
                    overlap > GROUND_CLASSIFICATION_THRESHOLD
                };
                let search = itd_pair_search(g, cfg, mode, Some(&pred))?;
                let cuts = search.table.iter().map(|o| o.rounded_cut).collect();
                (search.result, search.pair, cuts)
            }
            (Some(mode), None) => {
                let search = itd_pair_search(g, cfg, mode, None)?;
                let cuts = search.table.iter().map(|o| o.rounded_cut).collect();
                (search.result, search.pair, cuts)
            }
        };

    // Reference cut: exact when the oracle ran, best-known otherwise.
    let c_max = match &oracle {
        Some(o) => o.c_max,
        None => {
            let (greedy_best, _) = greedy_multistart(g, BEST_KNOWN_GREEDY_STARTS, spec.seed);
            let rounded = cut_size(g, round_state(&chosen.final_state));
            let sampled = sample_state(&chosen.final_state, spec.shots, spec.seed)
                .into_iter()
                .map(|m| cut_size(g, m))
                .max()
                .unwrap_or(0);
            greedy_best
                .max(rounded)
                .max(sampled)
                .max(candidates.into_iter().max().unwrap_or(0))
        }
    };
    let denom = if c_max == 0 { 1.0 } else { c_max as f64 };

    let pair_label = pair.map(|(a, b)| format!("{a}-{b}")).unwrap_or_default();
    let mut rows = Vec::with_capacity(spec.steps.len());
    for &s in &spec.steps {
        let state = chosen.state_at_step(g, s);
        let energy = chosen.energy_at_step(g, s);
        let tau = if s == 0 || chosen.trajectory.is_empty() {
            0.0
        } else {
            chosen.trajectory[s.min(chosen.trajectory.len()) - 1].tau
        };
        let pg = oracle.as_ref().map(|o| {
            if o.truncated {
                ground_overlap_streaming(&state, g, o.c_max).unwrap_or(f64::NAN)
            } else {
                p_ground(&state, &o.ground_states).unwrap_or(f64::NAN)
            }
        });
        rows.push(SweepRow {
            graph_id: id.to_string(),
            n: g.n(),
            edges: g.edge_count(),
            step: s,
            energy,
            ratio_expected: expected_cut(&state, g) / denom,
            ratio_rounded: cut_size(g, round_state(&state)) as f64 / denom,
            p_ground: pg,
            tau,
            terminated_by: chosen.terminated_by.to_string(),
            itd_pair: pair_label.clone(),
        });
    }
    Ok(GraphOutcome { rows })
}

/// Runs the sweep and writes `results.csv`, `summary.json`, and per-step SVG
/// histograms into the output directory. Failed graphs are skipped and
/// recorded in `failures.json`; their rows are absent.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepSummary, SweepError> {
    if spec.steps.is_empty()
        || spec.steps[0] == 0
        || spec.steps.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(SweepError::BadSteps);
    }
    let (ens, ids) = load_ensemble(&spec.source, spec.seed)?;
    if ens.is_empty() {
        return Err(SweepError::EmptySource);
    }
    let mut cfg = spec.qite.clone();
    cfg.max_steps = *spec.steps.last().unwrap();

    let outcomes: Vec<Result<GraphOutcome, SweepError>> = ens
        .graphs
        .par_iter()
        .zip(ids.par_iter())
        .map(|(g, id)| process_graph(g, id, spec, &cfg))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (outcome, id) in outcomes.into_iter().zip(&ids) {
        match outcome {
            Ok(o) => rows.extend(o.rows),
            Err(e) => failures.push(FailureRecord { graph_id: id.clone(), error: e.to_string() }),
        }
    }

    std::fs::create_dir_all(&spec.out_dir)?;
    let mut writer = csv::Writer::from_path(spec.out_dir.join("results.csv"))?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;

    let mut per_step = Vec::new();
    for &s in &spec.steps {
        let step_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.step == s).collect();
        let count = step_rows.len().max(1) as f64;
        let pg_rows: Vec<f64> = step_rows.iter().filter_map(|r| r.p_ground).collect();
        per_step.push(StepSummary {
            step: s,
            mean_ratio_expected: step_rows.iter().map(|r| r.ratio_expected).sum::<f64>() / count,
            mean_ratio_rounded: step_rows.iter().map(|r| r.ratio_rounded).sum::<f64>() / count,
            mean_p_ground: if pg_rows.is_empty() {
                None
            } else {
                Some(pg_rows.iter().sum::<f64>() / pg_rows.len() as f64)
            },
            p_ground_over_half: if pg_rows.is_empty() {
                None
            } else {
                Some(pg_rows.iter().filter(|&&p| p > GROUND_CLASSIFICATION_THRESHOLD).count())
            },
        });

        let ratios: Vec<f64> = step_rows.iter().map(|r| r.ratio_expected.min(1.0)).collect();
        let svg = histogram_svg(
            &ratios,
            &format!("cut ratio after {s} steps"),
            "C / C_max",
            spec.gw_line.then_some(CLASSICAL_REFERENCE_RATIO),
        );
        std::fs::write(spec.out_dir.join(format!("hist_ratio_s{s}.svg")), svg)?;
        if !pg_rows.is_empty() {
            let svg = histogram_svg(
                &pg_rows,
                &format!("ground-state overlap after {s} steps"),
                "P_ground",
                None,
            );
            std::fs::write(spec.out_dir.join(format!("hist_pground_s{s}.svg")), svg)?;
        }
    }

    let exact_reference_graphs = ens.graphs.iter().filter(|g| g.n() <= BRUTE_FORCE_CAP).count();
    let summary = SweepSummary {
        source: spec.source.describe(spec.seed),
        graphs: ens.len(),
        steps: spec.steps.clone(),
        itd: spec.itd.to_string(),
        seed: spec.seed,
        shots: spec.shots,
        config: cfg,
        exact_reference_graphs,
        per_step,
        failures: failures.len(),
    };
    let mut f = std::fs::File::create(spec.out_dir.join("summary.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&summary)?)?;
    if !failures.is_empty() {
        let mut f = std::fs::File::create(spec.out_dir.join("failures.json"))?;
        writeln!(f, "{}", serde_json::to_string_pretty(&failures)?)?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_for(dir: &std::path::Path) -> SweepSpec {
        SweepSpec {
            source: EnsembleSource::Enumerate { n: 4 },
            steps: vec![1, 4],
            itd: SweepItd::Off,
            out_dir: dir.to_path_buf(),
            qite: QiteConfig::default(),
            seed: 3,
            shots: 32,
            gw_line: true,
        }
    }

    #[test]
    fn sweep_writes_deterministic_outputs() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let summary_a = run_sweep(&spec_for(dir_a.path())).unwrap();
        let summary_b = run_sweep(&spec_for(dir_b.path())).unwrap();
        assert_eq!(summary_a.graphs, 6);
        assert_eq!(summary_a.failures, 0);
        for name in ["results.csv", "summary.json", "hist_ratio_s1.svg"] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical sweeps");
        }
        let csv = std::fs::read_to_string(dir_a.path().join("results.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 6 * 2, "header plus graphs x steps");
        assert!(csv.lines().next().unwrap().starts_with("graph_id,n,edges,step,energy"));
        // Deleting the SVGs changes nothing else: they are write-only outputs.
        assert!(dir_a.path().join("hist_pground_s4.svg").exists());
    }

    #[test]
    fn sweep_rejects_bad_steps_and_empty_source() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = spec_for(dir.path());
        spec.steps = vec![4, 1];
        assert!(matches!(run_sweep(&spec), Err(SweepError::BadSteps)));
        let mut spec = spec_for(dir.path());
        let empty = dir.path().join("empty.g6");
        std::fs::write(&empty, "").unwrap();
        spec.source = EnsembleSource::File(empty);
        assert!(matches!(run_sweep(&spec), Err(SweepError::EmptySource)));
    }

    #[test]
    fn itd_sweep_lifts_ground_overlap() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = spec_for(dir.path());
        spec.source = EnsembleSource::Enumerate { n: 5 };
        spec.steps = vec![1, 4, 10];
        spec.itd = SweepItd::Exhaustive;
        let summary = run_sweep(&spec).unwrap();
        assert_eq!(summary.graphs, 21);
        let last = summary.per_step.last().unwrap();
        assert_eq!(last.p_ground_over_half, Some(21), "excision rescues every 5-vertex graph");
    }
}
