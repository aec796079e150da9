use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sliced_igw::analysis::{
    classical_mds_2d, cluster_distances, pairwise_distances, MeasureInput, OptimizerKind, PairSummary,
    PairwiseMethod,
};
use sliced_igw::error::Error as LibError;
use sliced_igw::experiments::{validate_mc, validate_rate, ErrorRow, GaussianPair, McEstimator};
use sliced_igw::io::{
    read_distance_matrix, read_table, read_truth, read_values, write_distance_matrix, write_error_rows,
    write_mds, write_trace,
};
use sliced_igw::measures::EmpiricalMeasure;
use sliced_igw::rng;
use sliced_igw::slicing::{DirectionSet, SliceObjective};
use sliced_igw::stiefel::{
    run_cd_subgradient, run_riemannian_subgradient, ConvergedReason, Init, OptimizerConfig,
};
use sliced_igw::univariate::{igw_1d, Orientation};
use thiserror::Error;

use crate::{Command, CovarianceArg, InitArg, MethodArg, OptimizerArg, OptimizerArgs, PairArgs};

const SCHEMA: &str = "sliced-igw/1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] LibError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot serialize output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for usage errors, 3 for bad input data, 4 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Json(_) => 3,
            CliError::Lib(e) => lib_exit_code(e),
        }
    }
}

fn lib_exit_code(e: &LibError) -> u8 {
    match e {
        LibError::PairFailed { source, .. } => lib_exit_code(source),
        LibError::InvalidArgument(_) => 2,
        LibError::NonFinite
        | LibError::RankDeficient { .. }
        | LibError::InfeasibleInit { .. }
        | LibError::InfeasiblePoint { .. }
        | LibError::DegenerateAffinity { .. }
        | LibError::ZeroMatrix => 4,
        _ => 3,
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn powers_of_two(from: u32, to: u32) -> Vec<usize> {
    (from..=to).map(|r| 1usize << r).collect()
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Igw1d { a, b, out } => igw1d(&a, &b, out.as_deref()),
        Command::Sliced {
            a,
            b,
            m,
            seed,
            opt,
            label_column,
            trace,
            out,
        } => sliced(&a, &b, m, seed, &opt, label_column, trace.as_deref(), out.as_deref()),
        Command::ValidateMc {
            m_grid,
            reps,
            seed,
            pair,
            fixed_aligner,
            opt,
            out,
        } => validate_mc_cmd(&m_grid, reps, seed, &pair, fixed_aligner, &opt, out.as_deref()),
        Command::ValidateRate {
            n_grid,
            m,
            reps,
            seed,
            pair,
            opt,
            out,
        } => validate_rate_cmd(&n_grid, m, reps, seed, &pair, &opt, out.as_deref()),
        Command::Pairwise {
            files,
            method,
            m,
            seed,
            opt,
            label_column,
            out,
        } => pairwise(&files, method, m, seed, &opt, label_column, &out),
        Command::Cluster {
            distances,
            k,
            seed,
            truth,
            out,
        } => cluster(&distances, k, seed, truth.as_deref(), &out),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    match out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_err(path))
        }
        None => io::stdout().write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn optimizer_config(opt: &OptimizerArgs) -> Result<(OptimizerKind, OptimizerConfig)> {
    let (kind, mut cfg) = match opt.optimizer {
        OptimizerArg::Cd => (OptimizerKind::Dissolving, OptimizerConfig::dissolving()),
        OptimizerArg::Riemannian => (OptimizerKind::Riemannian, OptimizerConfig::riemannian()),
    };
    cfg = cfg.with_init(match opt.init {
        InitArg::Identity => Init::PaddedIdentity,
        InitArg::Gaussian => Init::GaussianAlignment,
    });
    if let Some(beta) = opt.beta {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(CliError::Usage(format!("--beta must be positive, got {beta}")));
        }
        cfg.beta = beta;
    }
    if let Some(n) = opt.max_iters {
        cfg = cfg.with_max_iters(n);
    }
    Ok((kind, cfg))
}

fn load_measure(path: &Path, label_column: Option<usize>) -> Result<EmpiricalMeasure> {
    let table = read_table(path, label_column)?;
    Ok(EmpiricalMeasure::uniform(table.values)?)
}

#[derive(Serialize)]
struct Igw1dReport {
    schema: &'static str,
    igw: f64,
    igw_squared: f64,
    chosen_orientation: Orientation,
    m2_mu: f64,
    m2_nu: f64,
}

fn igw1d(a: &Path, b: &Path, out: Option<&Path>) -> Result<()> {
    let r = igw_1d(&read_values(a)?, &read_values(b)?);
    emit_json(
        &Igw1dReport {
            schema: SCHEMA,
            igw: r.igw(),
            igw_squared: r.igw_squared,
            chosen_orientation: r.chosen,
            m2_mu: r.m2_mu,
            m2_nu: r.m2_nu,
        },
        out,
    )
}

#[derive(Serialize)]
struct TraceSummary {
    optimizer: &'static str,
    iterations: usize,
    converged_reason: ConvergedReason,
    final_objective: f64,
    final_h: Option<f64>,
    final_feasibility_residual: f64,
}

#[derive(Serialize)]
struct SlicedReport {
    schema: &'static str,
    estimate: f64,
    estimate_squared: f64,
    m: usize,
    seed: u64,
    n_a: usize,
    n_b: usize,
    d_a: usize,
    d_b: usize,
    swapped: bool,
    duplicate_projections: usize,
    trace: TraceSummary,
    wall_time: f64,
}

#[allow(clippy::too_many_arguments)]
fn sliced(
    a: &Path,
    b: &Path,
    m: usize,
    seed: u64,
    opt: &OptimizerArgs,
    label_column: Option<usize>,
    trace_out: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let start = Instant::now();
    let (kind, cfg) = optimizer_config(opt)?;
    let xa = load_measure(a, label_column)?;
    let xb = load_measure(b, label_column)?;
    let (n_a, n_b, d_a, d_b) = (xa.len(), xb.len(), xa.dim(), xb.dim());
    let swapped = d_a > d_b;
    let (mu, nu) = if swapped {
        log::info!("first file has dimension {d_a} > {d_b}; using the second as the source");
        (xb, xa)
    } else {
        (xa, xb)
    };
    let dirs = DirectionSet::sample_from(&mut rng::seeded(seed), nu.dim(), m, seed)?;
    let obj = SliceObjective::empirical(mu, nu, dirs)?;
    let trace = match kind {
        OptimizerKind::Dissolving => run_cd_subgradient(&obj, &cfg)?,
        OptimizerKind::Riemannian => run_riemannian_subgradient(&obj, &cfg)?,
    };
    let duplicates = obj.duplicate_projections(trace.final_point.matrix())?;
    if duplicates > 0 {
        log::info!("{duplicates} tied projected values at the final aligner; the coupling there is not unique");
    }
    if let Some(path) = trace_out {
        write_trace(create(path)?, &trace.iterates)?;
    }
    let report = SlicedReport {
        schema: SCHEMA,
        estimate: trace.distance(),
        estimate_squared: trace.final_objective,
        m,
        seed,
        n_a,
        n_b,
        d_a,
        d_b,
        swapped,
        duplicate_projections: duplicates,
        trace: TraceSummary {
            optimizer: optimizer_name(kind),
            iterations: trace.iterates.len(),
            converged_reason: trace.converged_reason,
            final_objective: trace.final_objective,
            final_h: trace.final_h,
            final_feasibility_residual: trace.final_point.feasibility_residual(),
        },
        wall_time: start.elapsed().as_secs_f64(),
    };
    emit_json(&report, out)
}

fn optimizer_name(kind: OptimizerKind) -> &'static str {
    match kind {
        OptimizerKind::Dissolving => "cd",
        OptimizerKind::Riemannian => "riemannian",
    }
}

fn gaussian_pair(args: &PairArgs, seed: u64) -> Result<GaussianPair> {
    match args.covariance {
        CovarianceArg::Fixed => Ok(GaussianPair::fixed()),
        CovarianceArg::Random => {
            if args.dx == 0 || args.dx > args.dy {
                return Err(CliError::Usage(format!(
                    "need 1 <= --dx <= --dy, got {} and {}",
                    args.dx, args.dy
                )));
            }
            // Grid streams never reach u64::MAX.
            Ok(GaussianPair::random(&mut rng::stream(seed, u64::MAX), args.dx, args.dy))
        }
    }
}

/// Writes the rows to `out` as CSV and the full report next to it as JSON,
/// or prints the report to stdout when no path is given.
fn emit_table<T: Serialize>(report: &T, rows: &[ErrorRow], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            write_error_rows(create(path)?, rows)?;
            emit_json(report, Some(&path.with_extension("json")))
        }
        None => emit_json(report, None),
    }
}

#[derive(Serialize)]
struct McReport<'a> {
    schema: &'static str,
    seed: u64,
    reps: usize,
    estimator: &'static str,
    target: f64,
    slope: f64,
    rows: &'a [ErrorRow],
}

fn validate_mc_cmd(
    m_grid: &[usize],
    reps: usize,
    seed: u64,
    pair: &PairArgs,
    fixed_aligner: bool,
    opt: &OptimizerArgs,
    out: Option<&Path>,
) -> Result<()> {
    let (mu, nu) = gaussian_pair(pair, seed)?.measures()?;
    let (kind, config) = optimizer_config(opt)?;
    let estimator = if fixed_aligner {
        McEstimator::FixedAligner
    } else {
        McEstimator::Optimized { optimizer: kind, config }
    };
    let result = validate_mc(&mu, &nu, m_grid, reps, seed, &estimator)?;
    log::info!("log-log slope of the median error: {:.4}", result.slope);
    let report = McReport {
        schema: SCHEMA,
        seed,
        reps,
        estimator: if fixed_aligner { "fixed-aligner" } else { optimizer_name(kind) },
        target: result.target,
        slope: result.slope,
        rows: &result.rows,
    };
    emit_table(&report, &result.rows, out)
}

#[derive(Serialize)]
struct RateReport<'a> {
    schema: &'static str,
    seed: u64,
    reps: usize,
    m: usize,
    optimizer: &'static str,
    target: f64,
    c1: f64,
    c2: f64,
    r_squared: f64,
    max_residual: f64,
    /// `max_residual` over the spread of median errors.
    residual_fraction: f64,
    rows: &'a [ErrorRow],
}

fn validate_rate_cmd(
    n_grid: &[usize],
    m: usize,
    reps: usize,
    seed: u64,
    pair: &PairArgs,
    opt: &OptimizerArgs,
    out: Option<&Path>,
) -> Result<()> {
    let pair = gaussian_pair(pair, seed)?;
    let (kind, config) = optimizer_config(opt)?;
    let result = validate_rate(&pair, n_grid, m, reps, seed, kind, &config)?;
    let (lo, hi) = result
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.median), hi.max(r.median)));
    let report = RateReport {
        schema: SCHEMA,
        seed,
        reps,
        m,
        optimizer: optimizer_name(kind),
        target: result.target,
        c1: result.c1,
        c2: result.c2,
        r_squared: result.r_squared,
        max_residual: result.max_residual,
        residual_fraction: result.max_residual / (hi - lo),
        rows: &result.rows,
    };
    emit_table(&report, &result.rows, out)
}

fn file_labels(files: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> = files
        .iter()
        .map(|p| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        })
        .collect();
    stems
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if stems.iter().filter(|t| *t == s).count() > 1 {
                format!("{s}#{i}")
            } else {
                s.clone()
            }
        })
        .collect()
}

#[derive(Serialize)]
struct PairwiseReport<'a> {
    schema: &'static str,
    method: &'static str,
    m: Option<usize>,
    seed: Option<u64>,
    labels: &'a [String],
    dims: Vec<usize>,
    points: Vec<usize>,
    pairs: &'a [PairSummary],
}

#[allow(clippy::too_many_arguments)]
fn pairwise(
    files: &[PathBuf],
    method: MethodArg,
    m: usize,
    seed: Option<u64>,
    opt: &OptimizerArgs,
    label_column: Option<usize>,
    out: &Path,
) -> Result<()> {
    let measures = files
        .iter()
        .map(|f| load_measure(f, label_column))
        .collect::<Result<Vec<_>>>()?;
    let dims = measures.iter().map(|x| x.dim()).collect();
    let points = measures.iter().map(|x| x.len()).collect();
    let (method, seed) = match method {
        MethodArg::Sliced => {
            let seed = seed.ok_or_else(|| CliError::Usage("the sliced method needs --seed".into()))?;
            let (optimizer, config) = optimizer_config(opt)?;
            (PairwiseMethod::SlicedIgw { m, optimizer, config }, Some(seed))
        }
        MethodArg::GaussianSliced => (PairwiseMethod::GaussianSlicedIgw, None),
        MethodArg::GaussianIgw => (PairwiseMethod::GaussianIgw, None),
    };
    let inputs: Vec<MeasureInput> = measures.into_iter().map(MeasureInput::Empirical).collect();
    let labels = file_labels(files);
    let result = pairwise_distances(&inputs, labels, &method, seed.unwrap_or(0))?;
    write_distance_matrix(create(out)?, &result.matrix)?;
    let report = PairwiseReport {
        schema: SCHEMA,
        method: method.name(),
        m: matches!(method, PairwiseMethod::SlicedIgw { .. }).then_some(m),
        seed,
        labels: result.matrix.labels(),
        dims,
        points,
        pairs: &result.pairs,
    };
    emit_json(&report, Some(&out.with_extension("json")))
}

#[derive(Serialize)]
struct MdsSummary {
    eigenvalues: [f64; 2],
    negative_mass_fraction: f64,
    warning: Option<String>,
}

#[derive(Serialize)]
struct ClusterReport<'a> {
    schema: &'static str,
    metric: &'a str,
    k: usize,
    seed: u64,
    labels: &'a [String],
    assignments: &'a [usize],
    ari: Option<f64>,
    purity: Option<f64>,
    mds: MdsSummary,
}

fn cluster(distances: &Path, k: usize, seed: u64, truth: Option<&Path>, out: &Path) -> Result<()> {
    let d = read_distance_matrix(distances)?;
    let truth = truth.map(|p| read_truth(p, d.labels())).transpose()?;
    let result = cluster_distances(&d, k, seed, truth.as_deref())?;
    let mds = classical_mds_2d(&d)?;
    if let Some(w) = &mds.warning {
        log::warn!("{w}");
    }
    write_mds(create(&out.with_extension("mds.csv"))?, d.labels(), &mds)?;
    let report = ClusterReport {
        schema: SCHEMA,
        metric: d.metric_name(),
        k,
        seed,
        labels: d.labels(),
        assignments: &result.assignments,
        ari: result.ari,
        purity: result.purity,
        mds: MdsSummary {
            eigenvalues: mds.eigenvalues,
            negative_mass_fraction: mds.negative_mass_fraction,
            warning: mds.warning.clone(),
        },
    };
    emit_json(&report, Some(out))
}
