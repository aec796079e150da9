//! Validation runs against the Gaussian closed forms, and synthetic data
//! for the clustering pipeline.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::analysis::{OptimizerKind, PairwiseMethod};
use crate::error::{Error, Result};
use crate::gaussian::sliced_igw_gaussian;
use crate::linalg::Matrix;
use crate::measures::{EmpiricalMeasure, GaussianMeasure};
use crate::rng::{self, random_stiefel, standard_normal_matrix};
use crate::slicing::{DirectionSet, SliceObjective};
use crate::stiefel::{run_cd_subgradient, run_riemannian_subgradient, Init, OptimizerConfig};

/// Fixed 5×5 factor `S_μ` (entries in `[0, 1]`); `Σ_μ = S_μᵀ S_μ`.
pub fn fixed_factor_mu() -> Matrix {
    Matrix::from_rows(&[
        vec![0.3236, 0.2191, 0.6560, 0.5031, 0.8479],
        vec![0.9789, 0.9872, 0.9049, 0.8046, 0.1269],
        vec![0.0338, 0.0987, 0.1037, 0.5406, 0.2284],
        vec![0.5851, 0.4209, 0.8828, 0.3423, 0.2496],
        vec![0.7108, 0.2808, 0.6270, 0.4175, 0.8096],
    ])
    .expect("constant factor")
}

/// Fixed 10×10 factor `S_ν`; `Σ_ν = S_νᵀ S_ν`.
pub fn fixed_factor_nu() -> Matrix {
    Matrix::from_rows(&[
        vec![0.9161, 0.2135, 0.7142, 0.8724, 0.2980, 0.6841, 0.4130, 0.5256, 0.2159, 0.3184],
        vec![0.7531, 0.5333, 0.7351, 0.6972, 0.1939, 0.8199, 0.8531, 0.6292, 0.6706, 0.8047],
        vec![0.9606, 0.8050, 0.5413, 0.1567, 0.3258, 0.7775, 0.0108, 0.0359, 0.5499, 0.3627],
        vec![0.6861, 0.3847, 0.6097, 0.7144, 0.2869, 0.7862, 0.0350, 0.9600, 0.5924, 0.4226],
        vec![0.9395, 0.2172, 0.7135, 0.4205, 0.5785, 0.1037, 0.5993, 0.9797, 0.8764, 0.0343],
        vec![0.9353, 0.6064, 0.1920, 0.2301, 0.8376, 0.5580, 0.3768, 0.5624, 0.8435, 0.3506],
        vec![0.7907, 0.2041, 0.4826, 0.1531, 0.5318, 0.4466, 0.8603, 0.7347, 0.2604, 0.3680],
        vec![0.2773, 0.0817, 0.3731, 0.1265, 0.8599, 0.5523, 0.4136, 0.7552, 0.1519, 0.4664],
        vec![0.4340, 0.9845, 0.7846, 0.2799, 0.7939, 0.6587, 0.5673, 0.2789, 0.7801, 0.0522],
        vec![0.2094, 0.5340, 0.9646, 0.4347, 0.9174, 0.6073, 0.9301, 0.0570, 0.4485, 0.8742],
    ])
    .expect("constant factor")
}

/// Square factor with i.i.d. `Uniform[0, 1]` entries.
pub fn random_factor<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Matrix {
    Matrix::from_fn(d, d, |_, _| rng.random::<f64>())
}

/// `n` draws of `Sᵀz`, `z ~ 𝒩(0, I)`, i.e. samples of `𝒩(0, SᵀS)`.
pub fn sample_from_factor<R: Rng + ?Sized>(rng: &mut R, factor: &Matrix, n: usize) -> Result<EmpiricalMeasure> {
    let z = standard_normal_matrix(rng, n, factor.rows());
    EmpiricalMeasure::uniform(z.try_matmul(factor)?)
}

/// A pair of Gaussians given through their factors.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    pub factor_mu: Matrix,
    pub factor_nu: Matrix,
}

impl GaussianPair {
    pub fn fixed() -> Self {
        Self {
            factor_mu: fixed_factor_mu(),
            factor_nu: fixed_factor_nu(),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, d_x: usize, d_y: usize) -> Self {
        Self {
            factor_mu: random_factor(rng, d_x),
            factor_nu: random_factor(rng, d_y),
        }
    }

    pub fn measures(&self) -> Result<(GaussianMeasure, GaussianMeasure)> {
        Ok((
            GaussianMeasure::from_factor(&self.factor_mu)?,
            GaussianMeasure::from_factor(&self.factor_nu)?,
        ))
    }
}

/// How the Monte-Carlo estimate is formed from a direction set.
#[derive(Debug, Clone, PartialEq)]
pub enum McEstimator {
    /// Objective at the population optimizer `Δ*`.
    FixedAligner,
    /// Minimized objective, started from `Δ*`.
    Optimized {
        optimizer: OptimizerKind,
        config: OptimizerConfig,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRow {
    /// Grid value (`m` or `n`).
    pub size: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl ErrorRow {
    fn from_errors(size: usize, errors: &[f64]) -> Self {
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let k = sorted.len();
        let median = if k % 2 == 1 {
            sorted[k / 2]
        } else {
            0.5 * (sorted[k / 2 - 1] + sorted[k / 2])
        };
        Self {
            size,
            mean: errors.iter().sum::<f64>() / k as f64,
            median,
            min: sorted[0],
            max: sorted[k - 1],
        }
    }
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewItems { needed: 1, got: x.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("regressor is constant".into()));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok((a, b, r2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McValidation {
    /// Closed-form sliced IGW², the target.
    pub target: f64,
    pub rows: Vec<ErrorRow>,
    /// Slope of `log median error` against `log m`.
    pub slope: f64,
}

fn grid_stream(grid_index: usize, rep: usize) -> u64 {
    ((grid_index as u64) << 32) | rep as u64
}

fn optimized_value(obj: &SliceObjective, optimizer: OptimizerKind, config: &OptimizerConfig) -> Result<f64> {
    let trace = match optimizer {
        OptimizerKind::Dissolving => run_cd_subgradient(obj, config)?,
        OptimizerKind::Riemannian => run_riemannian_subgradient(obj, config)?,
    };
    Ok(trace.final_objective)
}

/// Absolute error of the Monte-Carlo sliced IGW² against the closed form,
/// for each `m` in `m_grid` over `reps` direction sets. Repetition `r` at
/// grid position `g` uses RNG stream `(g << 32) | r` of `seed`.
pub fn validate_mc(
    mu: &GaussianMeasure,
    nu: &GaussianMeasure,
    m_grid: &[usize],
    reps: usize,
    seed: u64,
    estimator: &McEstimator,
) -> Result<McValidation> {
    if m_grid.is_empty() || reps == 0 {
        return Err(Error::InvalidArgument("empty grid or zero repetitions".into()));
    }
    let star = sliced_igw_gaussian(mu, nu)?;
    let mut rows = Vec::with_capacity(m_grid.len());
    for (g, &m) in m_grid.iter().enumerate() {
        let mut errors = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut rng = rng::stream(seed, grid_stream(g, r));
            let dirs = DirectionSet::sample_from(&mut rng, nu.dim(), m, seed)?;
            let obj = SliceObjective::gaussian(mu.clone(), nu.clone(), dirs)?;
            let value = match estimator {
                McEstimator::FixedAligner => obj.value(&star.delta_star)?,
                McEstimator::Optimized { optimizer, config } => {
                    let cfg = config.clone().with_init(Init::Given(star.delta_star.clone()));
                    optimized_value(&obj, *optimizer, &cfg)?
                }
            };
            errors.push((value - star.sliced_igw_squared).abs());
        }
        rows.push(ErrorRow::from_errors(m, &errors));
    }
    let slope = if rows.len() >= 2 {
        let lx: Vec<f64> = rows.iter().map(|r| (r.size as f64).ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|r| r.median.max(f64::MIN_POSITIVE).ln()).collect();
        linear_fit(&lx, &ly)?.1
    } else {
        f64::NAN
    };
    Ok(McValidation {
        target: star.sliced_igw_squared,
        rows,
        slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateValidation {
    /// Closed-form sliced IGW (not squared), the target.
    pub target: f64,
    pub rows: Vec<ErrorRow>,
    /// Fit of median error ≈ `c1 + c2·√(log n / n)`.
    pub c1: f64,
    pub c2: f64,
    pub r_squared: f64,
    /// Largest absolute fit residual.
    pub max_residual: f64,
}

/// Absolute error of the fully empirical estimate (samples of size `n`, `m`
/// directions, optimized aligner) against the closed-form sliced IGW.
/// Repetition `r` at grid position `g` uses RNG stream `(g << 32) | r`.
pub fn validate_rate(
    pair: &GaussianPair,
    n_grid: &[usize],
    m: usize,
    reps: usize,
    seed: u64,
    optimizer: OptimizerKind,
    config: &OptimizerConfig,
) -> Result<RateValidation> {
    if n_grid.is_empty() || reps == 0 {
        return Err(Error::InvalidArgument("empty grid or zero repetitions".into()));
    }
    if let Some(&n) = n_grid.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidArgument(format!("sample size {n} is below 2")));
    }
    let (mu, nu) = pair.measures()?;
    let target = sliced_igw_gaussian(&mu, &nu)?.sliced_igw_squared.sqrt();
    let mut rows = Vec::with_capacity(n_grid.len());
    for (g, &n) in n_grid.iter().enumerate() {
        let mut errors = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut rng = rng::stream(seed, grid_stream(g, r));
            let x = sample_from_factor(&mut rng, &pair.factor_mu, n)?;
            let y = sample_from_factor(&mut rng, &pair.factor_nu, n)?;
            let dirs = DirectionSet::sample_from(&mut rng, nu.dim(), m, seed)?;
            let obj = SliceObjective::empirical(x, y, dirs)?;
            let value = optimized_value(&obj, optimizer, config)?;
            errors.push((value.max(0.0).sqrt() - target).abs());
        }
        rows.push(ErrorRow::from_errors(n, &errors));
    }
    let x: Vec<f64> = rows
        .iter()
        .map(|r| {
            let n = r.size as f64;
            (n.ln() / n).sqrt()
        })
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let (c1, c2, r_squared) = if rows.len() >= 2 {
        linear_fit(&x, &y)?
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let max_residual = x
        .iter()
        .zip(&y)
        .map(|(u, v)| (v - c1 - c2 * u).abs())
        .fold(0.0, f64::max);
    Ok(RateValidation {
        target,
        rows,
        c1,
        c2,
        r_squared,
        max_residual,
    })
}

/// Synthetic "users": each is a point cloud drawn from one of a few latent
/// prototypes, embedded isometrically into its own ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUsersConfig {
    pub users_per_cluster: usize,
    pub points_per_user: usize,
    /// Ambient dimensions, assigned round-robin over users; each at least 5.
    pub dims: Vec<usize>,
    /// Standard deviation of isotropic noise added after embedding.
    pub noise: f64,
}

impl Default for SyntheticUsersConfig {
    fn default() -> Self {
        Self {
            users_per_cluster: 8,
            points_per_user: 120,
            dims: vec![5, 8],
            noise: 0.05,
        }
    }
}

pub const LATENT_DIM: usize = 5;
pub const PROTOTYPES: usize = 3;

/// Draws one latent point from prototype `c`: an anisotropic Gaussian, a
/// symmetric two-component mixture, or a three-component planar mixture.
fn prototype_point<R: Rng + ?Sized>(rng: &mut R, c: usize) -> [f64; LATENT_DIM] {
    let mut z = [0.0; LATENT_DIM];
    for v in z.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    match c {
        0 => {
            let scales = [1.8, 1.0, 0.7, 0.45, 0.3];
            for (v, s) in z.iter_mut().zip(scales) {
                *v *= s;
            }
        }
        1 => {
            let sign = if rng.random::<bool>() { 2.0 } else { -2.0 };
            for v in z.iter_mut() {
                *v *= 0.4;
            }
            z[0] += sign;
        }
        _ => {
            let k = rng.random_range(0..3) as f64;
            let angle = 2.0 * std::f64::consts::PI * k / 3.0;
            for v in z.iter_mut() {
                *v *= 0.35;
            }
            z[0] += 2.2 * angle.cos();
            z[1] += 2.2 * angle.sin();
        }
    }
    z
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUsers {
    pub measures: Vec<EmpiricalMeasure>,
    pub truth: Vec<usize>,
    pub labels: Vec<String>,
}

/// Users `c·users_per_cluster .. (c+1)·users_per_cluster` belong to
/// prototype `c`. User `u` draws from RNG stream `u` of `seed`; its points
/// are centered before returning.
pub fn synthetic_users(cfg: &SyntheticUsersConfig, seed: u64) -> Result<SyntheticUsers> {
    if cfg.dims.is_empty() || cfg.dims.iter().any(|&d| d < LATENT_DIM) {
        return Err(Error::InvalidArgument(format!(
            "ambient dimensions must be at least {LATENT_DIM}"
        )));
    }
    if cfg.points_per_user == 0 || cfg.users_per_cluster == 0 {
        return Err(Error::InvalidArgument("need at least one user and one point".into()));
    }
    let total = PROTOTYPES * cfg.users_per_cluster;
    let mut measures = Vec::with_capacity(total);
    let mut truth = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for u in 0..total {
        let c = u / cfg.users_per_cluster;
        let d = cfg.dims[u % cfg.dims.len()];
        let mut rng = rng::stream(seed, u as u64);
        let embed = random_stiefel(&mut rng, d, LATENT_DIM)?;
        let mut points = Matrix::zeros(cfg.points_per_user, d);
        for i in 0..cfg.points_per_user {
            let z = prototype_point(&mut rng, c);
            let x = embed.mat_vec(&z);
            for (j, v) in x.iter().enumerate() {
                let e: f64 = StandardNormal.sample(&mut rng);
                points[(i, j)] = v + cfg.noise * e;
            }
        }
        measures.push(EmpiricalMeasure::uniform(points)?.center());
        truth.push(c);
        labels.push(format!("user{u:02}_d{d}"));
    }
    Ok(SyntheticUsers {
        measures,
        truth,
        labels,
    })
}

/// Pairwise method used for synthetic clustering runs: the Riemannian
/// method from the Gaussian alignment with `m` directions and at most
/// `max_iters` iterations.
pub fn clustering_method(m: usize, max_iters: usize) -> PairwiseMethod {
    PairwiseMethod::SlicedIgw {
        m,
        optimizer: OptimizerKind::Riemannian,
        config: OptimizerConfig::riemannian().with_max_iters(max_iters),
    }
}
