//! Distance matrices over collections of measures and what is built on
//! them: self-tuning spectral clustering, partition scores, classical MDS,
//! and linear CKA as a baseline for comparing paired embeddings.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{igw_gaussian, sliced_igw_gaussian};
use crate::linalg::{sym_eigen, Matrix, SYMMETRY_TOL};
use crate::measures::{EmpiricalMeasure, GaussianMeasure};
use crate::rng;
use crate::slicing::{Backend, DirectionSet, SliceObjective};
use crate::stiefel::{
    run_cd_subgradient, run_riemannian_subgradient, ConvergedReason, OptimizerConfig,
};

/// Floor on the self-tuning bandwidth.
pub const SIGMA_FLOOR: f64 = 1e-12;
/// Degrees at or below this make the normalized affinity undefined.
pub const DEGREE_TOL: f64 = 1e-15;
pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITERS: usize = 100;
/// Share of spectrum mass dropped by MDS above which a warning is attached.
pub const MDS_WARN_FRACTION: f64 = 0.01;

/// Symmetric, nonnegative, zero-diagonal matrix of distances between
/// labelled items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Matrix,
    metric_name: String,
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, values: Matrix, metric_name: impl Into<String>) -> Result<Self> {
        let n = values.rows();
        if !values.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "distance matrix is {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if labels.len() != n {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: n,
            });
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry {i} is {}, expected 0",
                    values[(i, i)]
                )));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if v < 0.0 {
                    return Err(Error::InvalidArgument(format!("entry ({i}, {j}) is negative: {v}")));
                }
                if (v - values[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::NonSymmetric {
                        asymmetry: (v - values[(j, i)]).abs(),
                        tolerance: SYMMETRY_TOL,
                    });
                }
            }
        }
        Ok(Self {
            labels,
            values,
            metric_name: metric_name.into(),
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One item of a pairwise comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureInput {
    Empirical(EmpiricalMeasure),
    Gaussian(GaussianMeasure),
}

impl MeasureInput {
    pub fn dim(&self) -> usize {
        match self {
            MeasureInput::Empirical(m) => m.dim(),
            MeasureInput::Gaussian(g) => g.dim(),
        }
    }

    /// The Gaussian with the same covariance (centered for empirical inputs).
    pub fn gaussian_approximation(&self) -> GaussianMeasure {
        match self {
            MeasureInput::Empirical(m) => m.empirical_covariance(),
            MeasureInput::Gaussian(g) => g.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Dissolving,
    Riemannian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairwiseMethod {
    /// Optimized sliced IGW with `m` directions per pair.
    SlicedIgw {
        m: usize,
        optimizer: OptimizerKind,
        config: OptimizerConfig,
    },
    /// Closed-form sliced IGW between Gaussian approximations.
    GaussianSlicedIgw,
    /// Closed-form IGW between Gaussian approximations.
    GaussianIgw,
}

impl PairwiseMethod {
    /// Sliced IGW with the Riemannian method from the Gaussian alignment.
    pub fn sliced(m: usize) -> Self {
        PairwiseMethod::SlicedIgw {
            m,
            optimizer: OptimizerKind::Riemannian,
            config: OptimizerConfig::riemannian(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PairwiseMethod::SlicedIgw { .. } => "sliced_igw",
            PairwiseMethod::GaussianSlicedIgw => "gaussian_sliced_igw",
            PairwiseMethod::GaussianIgw => "gaussian_igw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSummary {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    /// `true` when `right` played the role of the lower-dimensional `μ`.
    pub swapped: bool,
    pub iterations: Option<usize>,
    pub converged_reason: Option<ConvergedReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult {
    pub matrix: DistanceMatrix,
    pub pairs: Vec<PairSummary>,
}

fn pair_distance(
    a: &MeasureInput,
    b: &MeasureInput,
    method: &PairwiseMethod,
    seed: u64,
    stream: u64,
) -> Result<(f64, Option<(usize, ConvergedReason)>)> {
    match method {
        PairwiseMethod::GaussianIgw => {
            Ok((igw_gaussian(&a.gaussian_approximation(), &b.gaussian_approximation())?, None))
        }
        PairwiseMethod::GaussianSlicedIgw => {
            let v = sliced_igw_gaussian(&a.gaussian_approximation(), &b.gaussian_approximation())?;
            Ok((v.sliced_igw_squared.max(0.0).sqrt(), None))
        }
        PairwiseMethod::SlicedIgw { m, optimizer, config } => {
            let backend = match (a, b) {
                (MeasureInput::Empirical(x), MeasureInput::Empirical(y)) => Backend::Empirical {
                    mu: x.clone(),
                    nu: y.clone(),
                },
                (MeasureInput::Gaussian(x), MeasureInput::Gaussian(y)) => Backend::Gaussian {
                    mu: x.clone(),
                    nu: y.clone(),
                },
                _ => return Err(Error::MixedBackends),
            };
            let dirs = DirectionSet::sample_from(&mut rng::stream(seed, stream), b.dim(), *m, seed)?;
            let obj = SliceObjective::new(backend, dirs)?;
            let trace = match optimizer {
                OptimizerKind::Dissolving => run_cd_subgradient(&obj, config)?,
                OptimizerKind::Riemannian => run_riemannian_subgradient(&obj, config)?,
            };
            Ok((trace.distance(), Some((trace.iterates.len(), trace.converged_reason))))
        }
    }
}

/// Distances between every unordered pair, each computed once. The
/// lower-dimensional measure of a pair is the source `μ`; pair `(i, j)`
/// draws its directions from RNG stream `i·n + j` of `seed`.
pub fn pairwise_distances(
    measures: &[MeasureInput],
    labels: Vec<String>,
    method: &PairwiseMethod,
    seed: u64,
) -> Result<PairwiseResult> {
    let n = measures.len();
    if n < 2 {
        return Err(Error::TooFewItems { needed: 1, got: n });
    }
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: n,
        });
    }
    let mut values = Matrix::zeros(n, n);
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let swapped = measures[j].dim() < measures[i].dim();
            let (a, b) = if swapped {
                (&measures[j], &measures[i])
            } else {
                (&measures[i], &measures[j])
            };
            let (distance, run) = pair_distance(a, b, method, seed, (i * n + j) as u64).map_err(|e| {
                Error::PairFailed {
                    left: i,
                    right: j,
                    source: Box::new(e),
                }
            })?;
            values[(i, j)] = distance;
            values[(j, i)] = distance;
            pairs.push(PairSummary {
                left: i,
                right: j,
                distance,
                swapped,
                iterations: run.map(|r| r.0),
                converged_reason: run.map(|r| r.1),
            });
        }
    }
    Ok(PairwiseResult {
        matrix: DistanceMatrix::new(labels, values, method.name())?,
        pairs,
    })
}

/// Gaussian kernel with per-item bandwidths: `K_ij = exp(−D_ij²/(σ_iσ_j))`,
/// where `σ_i` is the distance from `i` to its `neighbor_index`-th nearest
/// other item.
pub fn self_tuning_affinity(d: &DistanceMatrix, neighbor_index: usize) -> Result<Matrix> {
    let n = d.len();
    if neighbor_index == 0 {
        return Err(Error::InvalidArgument("neighbor index starts at 1".into()));
    }
    if n <= neighbor_index {
        return Err(Error::TooFewItems {
            needed: neighbor_index,
            got: n,
        });
    }
    let v = d.values();
    let sigma: Vec<f64> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| v[(i, j)]).collect();
            row.sort_by(f64::total_cmp);
            row[neighbor_index - 1].max(SIGMA_FLOOR)
        })
        .collect();
    Ok(Matrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            (-v[(i, j)] * v[(i, j)] / (sigma[i] * sigma[j])).exp()
        }
    }))
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    while centers.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| nearest(p, &centers).1).collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 && target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
    }
    centers
}

/// Lloyd's algorithm from k-means++ seeds, best of `KMEANS_RESTARTS` by
/// inertia. Returns `(assignments, inertia)`.
fn kmeans<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> (Vec<usize>, f64) {
    let dim = points[0].len();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let mut centers = kmeans_plus_plus(points, k, rng);
        let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        for _ in 0..KMEANS_MAX_ITERS {
            let mut sums = vec![vec![0.0; dim]; k];
            let mut counts = vec![0usize; k];
            for (p, &a) in points.iter().zip(&assign) {
                counts[a] += 1;
                for (s, x) in sums[a].iter_mut().zip(p) {
                    *s += x;
                }
            }
            for c in 0..k {
                if counts[c] > 0 {
                    centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                }
            }
            let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
            if next == assign {
                break;
            }
            assign = next;
        }
        let inertia: f64 = points
            .iter()
            .zip(&assign)
            .map(|(p, &a)| squared_distance(p, &centers[a]))
            .sum();
        if best.as_ref().is_none_or(|b| inertia < b.1) {
            best = Some((assign, inertia));
        }
    }
    best.expect("at least one restart")
}

/// Relabels clusters in order of first appearance.
fn canonical_labels(assign: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    assign
        .iter()
        .map(|a| {
            let next = map.len();
            *map.entry(*a).or_insert(next)
        })
        .collect()
}

/// Normalized spectral clustering: embed items with the `k` leading
/// eigenvectors of `D^{-1/2} K D^{-1/2}` (the `k` smallest of the symmetric
/// normalized Laplacian), normalize rows, then run k-means. Cluster labels
/// are numbered in order of first appearance.
pub fn spectral_cluster(affinity: &Matrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = affinity.rows();
    if !affinity.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "affinity is {}x{}",
            affinity.rows(),
            affinity.cols()
        )));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 clusters, got {k}")));
    }
    if n < k {
        return Err(Error::TooFewItems { needed: k - 1, got: n });
    }
    if affinity.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("affinity has negative entries".into()));
    }
    let degrees: Vec<f64> = affinity.row_iter().map(|r| r.iter().sum()).collect();
    if let Some(row) = degrees.iter().position(|&d| d <= DEGREE_TOL) {
        return Err(Error::DegenerateAffinity { row });
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let normalized = Matrix::from_fn(n, n, |i, j| inv_sqrt[i] * affinity[(i, j)] * inv_sqrt[j]);
    let eig = sym_eigen(&normalized)?;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row: Vec<f64> = (0..k).map(|c| eig.vectors[(i, c)]).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|v| v / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let (assign, _) = kmeans(&points, k, &mut rng::seeded(seed));
    Ok(canonical_labels(&assign))
}

fn contingency(a: &[usize], b: &[usize]) -> Result<BTreeMap<(usize, usize), usize>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut table = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0usize) += 1;
    }
    Ok(table)
}

fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Pair-counting adjusted Rand index. Returns 1 when both partitions are
/// trivial in the same way (the chance-corrected ratio is 0/0).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    let table = contingency(a, b)?;
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    let mut index = 0.0;
    for (&(x, y), &c) in &table {
        *rows.entry(x).or_insert(0) += c;
        *cols.entry(y).or_insert(0) += c;
        index += pairs(c);
    }
    let sum_a: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(a.len());
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Fraction of items carrying the majority truth label of their predicted
/// cluster.
pub fn purity(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(predicted, truth)?;
    if predicted.is_empty() {
        return Err(Error::TooFewItems { needed: 0, got: 0 });
    }
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for (&(p, _), &c) in &table {
        let e = best.entry(p).or_insert(0);
        *e = (*e).max(c);
    }
    Ok(best.values().sum::<usize>() as f64 / predicted.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    pub k: usize,
    pub ari: Option<f64>,
    pub purity: Option<f64>,
}

/// Self-tuning affinity (third neighbour), spectral clustering, and scores
/// against `truth` when given.
pub fn cluster_distances(d: &DistanceMatrix, k: usize, seed: u64, truth: Option<&[usize]>) -> Result<ClusteringResult> {
    let affinity = self_tuning_affinity(d, 3)?;
    let assignments = spectral_cluster(&affinity, k, seed)?;
    let (ari, pur) = match truth {
        Some(t) => (
            Some(adjusted_rand_index(&assignments, t)?),
            Some(purity(&assignments, t)?),
        ),
        None => (None, None),
    };
    Ok(ClusteringResult {
        assignments,
        k,
        ari,
        purity: pur,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdsEmbedding {
    /// `n × 2` coordinates.
    pub coordinates: Matrix,
    pub eigenvalues: [f64; 2],
    /// Share of the absolute spectrum carried by negative eigenvalues.
    pub negative_mass_fraction: f64,
    pub warning: Option<String>,
}

/// Classical (Torgerson) MDS into the plane.
pub fn classical_mds_2d(d: &DistanceMatrix) -> Result<MdsEmbedding> {
    let n = d.len();
    if n < 3 {
        return Err(Error::TooFewItems { needed: 2, got: n });
    }
    let v = d.values();
    let sq = Matrix::from_fn(n, n, |i, j| v[(i, j)] * v[(i, j)]);
    let row_means: Vec<f64> = sq.row_iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = Matrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = sym_eigen(&b.sym_part())?;
    let negative: f64 = eig.values.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    let total: f64 = eig.values.iter().map(|l| l.abs()).sum();
    let negative_mass_fraction = if total > 0.0 { negative / total } else { 0.0 };
    let mut coordinates = Matrix::zeros(n, 2);
    for c in 0..2 {
        let scale = eig.values[c].max(0.0).sqrt();
        let col = eig.vectors.col(c);
        let cutoff = 1e-12 * col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sign = match col.iter().find(|x| x.abs() > cutoff) {
            Some(x) if *x < 0.0 => -1.0,
            _ => 1.0,
        };
        for (i, x) in col.iter().enumerate() {
            coordinates[(i, c)] = sign * scale * x;
        }
    }
    let warning = (negative_mass_fraction > MDS_WARN_FRACTION).then(|| {
        format!(
            "distances are not Euclidean: {:.1}% of the spectrum mass is negative and was dropped",
            100.0 * negative_mass_fraction
        )
    });
    Ok(MdsEmbedding {
        coordinates,
        eigenvalues: [eig.values[0], eig.values[1]],
        negative_mass_fraction,
        warning,
    })
}

fn center_columns(m: &Matrix) -> Matrix {
    let (n, p) = m.shape();
    let means: Vec<f64> = (0..p).map(|j| m.col(j).iter().sum::<f64>() / n as f64).collect();
    Matrix::from_fn(n, p, |i, j| m[(i, j)] - means[j])
}

/// `1 − ‖YᵀX‖²_F / (‖XᵀX‖_F ‖YᵀY‖_F)` after centering the columns of both
/// embeddings; rows of `x` and `y` describe the same items.
pub fn cka_distance(x: &Matrix, y: &Matrix) -> Result<f64> {
    if x.rows() != y.rows() {
        return Err(Error::RowMismatch {
            left: x.rows(),
            right: y.rows(),
        });
    }
    let (xc, yc) = (center_columns(x), center_columns(y));
    let cross = yc.transpose().try_matmul(&xc)?.frobenius_norm();
    let nx = xc.gram().frobenius_norm();
    let ny = yc.gram().frobenius_norm();
    if nx < 1e-15 || ny < 1e-15 {
        return Err(Error::ZeroMatrix);
    }
    Ok((1.0 - cross * cross / (nx * ny)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_stiefel, seeded, standard_normal_matrix};
    use proptest::prelude::*;

    fn dm(rows: &[Vec<f64>]) -> DistanceMatrix {
        let labels = (0..rows.len()).map(|i| format!("m{i}")).collect();
        DistanceMatrix::new(labels, Matrix::from_rows(rows).unwrap(), "test").unwrap()
    }

    fn line(xs: &[f64]) -> DistanceMatrix {
        let n = xs.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (xs[i] - xs[j]).abs()).collect()).collect();
        dm(&rows)
    }

    fn from_points(p: &Matrix) -> DistanceMatrix {
        let n = p.rows();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| squared_distance(p.row(i), p.row(j)).sqrt()).collect())
            .collect();
        dm(&rows)
    }

    fn uniform_1d(v: &[f64]) -> MeasureInput {
        let rows: Vec<Vec<f64>> = v.iter().map(|x| vec![*x]).collect();
        MeasureInput::Empirical(EmpiricalMeasure::uniform(Matrix::from_rows(&rows).unwrap()).unwrap())
    }

    #[test]
    fn distance_matrix_validation() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let asym = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        assert!(DistanceMatrix::new(labels.clone(), asym, "x").is_err());
        let diag = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(DistanceMatrix::new(labels.clone(), diag, "x").is_err());
        let neg = Matrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(DistanceMatrix::new(labels, neg, "x").is_err());
    }

    #[test]
    fn pairwise_one_dimensional_example() {
        let ms = vec![uniform_1d(&[-1.0, 1.0]), uniform_1d(&[-2.0, 2.0]), uniform_1d(&[-3.0, 3.0])];
        let labels = vec!["a".into(), "b".into(), "c".into()];
        let out = pairwise_distances(&ms, labels, &PairwiseMethod::sliced(16), 1).unwrap();
        let v = out.matrix.values();
        assert!((v[(0, 1)] - 3.0).abs() < 1e-12);
        assert!((v[(0, 2)] - 8.0).abs() < 1e-12);
        assert!((v[(1, 2)] - 5.0).abs() < 1e-12);
        assert_eq!(out.pairs.len(), 3);
    }

    #[test]
    fn pairwise_duplicates_and_dimension_order() {
        let mut r = seeded(2);
        let a = EmpiricalMeasure::uniform(standard_normal_matrix(&mut r, 20, 3)).unwrap();
        let b = EmpiricalMeasure::uniform(standard_normal_matrix(&mut r, 25, 2)).unwrap();
        let ms = vec![
            MeasureInput::Empirical(a.clone()),
            MeasureInput::Empirical(a),
            MeasureInput::Empirical(b),
        ];
        let labels = vec!["a".into(), "a2".into(), "b".into()];
        let out = pairwise_distances(&ms, labels, &PairwiseMethod::sliced(30), 4).unwrap();
        assert!(out.matrix.values()[(0, 1)] < 1e-6);
        assert!(out.pairs[1].swapped && out.pairs[2].swapped && !out.pairs[0].swapped);
        let again = pairwise_distances(&ms, out.matrix.labels().to_vec(), &PairwiseMethod::sliced(30), 4).unwrap();
        assert_eq!(again.matrix, out.matrix);
    }

    #[test]
    fn pairwise_gaussian_methods_delegate() {
        let ga = GaussianMeasure::new(Matrix::identity(2)).unwrap();
        let gb = GaussianMeasure::new(Matrix::from_diagonal(&[4.0, 1.0])).unwrap();
        let ms = vec![MeasureInput::Gaussian(ga.clone()), MeasureInput::Gaussian(gb.clone())];
        let out = pairwise_distances(&ms, vec!["a".into(), "b".into()], &PairwiseMethod::GaussianIgw, 0).unwrap();
        assert_eq!(out.matrix.values()[(0, 1)], igw_gaussian(&ga, &gb).unwrap());
        let out = pairwise_distances(&ms, vec!["a".into(), "b".into()], &PairwiseMethod::GaussianSlicedIgw, 0).unwrap();
        let exact = sliced_igw_gaussian(&ga, &gb).unwrap().sliced_igw_squared.sqrt();
        assert_eq!(out.matrix.values()[(0, 1)], exact);
    }

    #[test]
    fn pairwise_failures_name_the_pair() {
        let ms = vec![
            uniform_1d(&[1.0, 2.0]),
            MeasureInput::Gaussian(GaussianMeasure::new(Matrix::identity(1)).unwrap()),
        ];
        let err = pairwise_distances(&ms, vec!["a".into(), "b".into()], &PairwiseMethod::sliced(4), 0).unwrap_err();
        assert!(matches!(err, Error::PairFailed { left: 0, right: 1, .. }));
    }

    #[test]
    fn affinity_of_zero_distances_is_all_ones() {
        let d = dm(&vec![vec![0.0; 5]; 5]);
        let k = self_tuning_affinity(&d, 3).unwrap();
        assert!(k.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn affinity_on_a_line() {
        // third-nearest distances: 10 (from 0), 9 (from 1), 8 (from 2), 10 (from 10)
        let d = line(&[0.0, 1.0, 2.0, 10.0]);
        let k = self_tuning_affinity(&d, 3).unwrap();
        assert!((k[(0, 1)] - (-1.0f64 / 90.0).exp()).abs() < 1e-15);
        assert!((k[(2, 3)] - (-64.0f64 / 80.0).exp()).abs() < 1e-15);
        for i in 0..4 {
            assert_eq!(k[(i, i)], 1.0);
        }
        assert_eq!(
            self_tuning_affinity(&line(&[0.0, 1.0, 2.0]), 3).unwrap_err(),
            Error::TooFewItems { needed: 3, got: 3 }
        );
    }

    #[test]
    fn spectral_recovers_disconnected_blocks() {
        let n = 6;
        let k = Matrix::from_fn(n, n, |i, j| if (i < 3) == (j < 3) { 1.0 } else { 0.0 });
        let a = spectral_cluster(&k, 2, 1).unwrap();
        assert_eq!(a, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn spectral_with_one_cluster_per_item() {
        let d = line(&[0.0, 1.0, 3.0, 7.0, 15.0]);
        let k = self_tuning_affinity(&d, 3).unwrap();
        let a = spectral_cluster(&k, 5, 3).unwrap();
        assert_eq!(a, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn spectral_separates_blobs() {
        let mut r = seeded(5);
        let centers = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]];
        let mut rows = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..10 {
                let noise = standard_normal_matrix(&mut r, 1, 2);
                rows.push(vec![center[0] + noise[(0, 0)], center[1] + noise[(0, 1)]]);
                truth.push(c);
            }
        }
        let d = from_points(&Matrix::from_rows(&rows).unwrap());
        let out = cluster_distances(&d, 3, 7, Some(&truth)).unwrap();
        assert_eq!(out.ari, Some(1.0));
        assert_eq!(out.purity, Some(1.0));
        assert_eq!(spectral_cluster(&self_tuning_affinity(&d, 3).unwrap(), 3, 7).unwrap(), out.assignments);
    }

    #[test]
    fn spectral_errors() {
        let mut k = Matrix::identity(3);
        k[(1, 1)] = 0.0;
        assert_eq!(spectral_cluster(&k, 2, 0).unwrap_err(), Error::DegenerateAffinity { row: 1 });
        assert!(spectral_cluster(&Matrix::identity(3), 1, 0).is_err());
    }

    #[test]
    fn ari_examples() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 2], &[5, 5, 3, 4]).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&[0; 6], &[0, 1, 2, 3, 4, 5]).unwrap(), 0.0);
        // contingency [[1,1],[0,2]]: index 1, row pairs 2, column pairs 3,
        // expected 2·3/6 = 1, so the index equals chance
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.0);
        assert!(matches!(adjusted_rand_index(&[0, 1], &[0]), Err(Error::LengthMismatch { .. })));
    }

    /// Rand-style index by direct enumeration of all item pairs.
    fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let (mut both, mut only_a, mut only_b, mut total) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                let sa = a[i] == a[j];
                let sb = b[i] == b[j];
                total += 1.0;
                if sa && sb {
                    both += 1.0;
                }
                if sa {
                    only_a += 1.0;
                }
                if sb {
                    only_b += 1.0;
                }
            }
        }
        let expected = only_a * only_b / total;
        let max = 0.5 * (only_a + only_b);
        if max == expected {
            1.0
        } else {
            (both - expected) / (max - expected)
        }
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(purity(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert_eq!(purity(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
        assert!(purity(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn mds_examples() {
        let tri = dm(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        let out = classical_mds_2d(&tri).unwrap();
        let back = from_points(&out.coordinates);
        assert!((back.values() - tri.values()).max_abs() < 1e-8);
        assert!(out.warning.is_none());

        let col = classical_mds_2d(&line(&[0.0, 1.0, 2.0])).unwrap();
        for i in 0..3 {
            assert!(col.coordinates[(i, 1)].abs() < 1e-7);
        }
        let first_nonzero = (0..3).map(|i| col.coordinates[(i, 0)]).find(|x| x.abs() > 1e-9).unwrap();
        assert!(first_nonzero > 0.0);
        assert!(classical_mds_2d(&line(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn mds_reconstructs_planar_configurations() {
        let mut r = seeded(8);
        let pts = standard_normal_matrix(&mut r, 9, 2);
        let d = from_points(&pts);
        let out = classical_mds_2d(&d).unwrap();
        let back = from_points(&out.coordinates);
        for i in 0..9 {
            for j in 0..9 {
                let (a, b) = (d.values()[(i, j)], back.values()[(i, j)]);
                assert!((a - b).abs() <= 1e-6 * a.max(1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn mds_warns_on_non_euclidean_input() {
        // violates the triangle inequality badly
        let d = dm(&[
            vec![0.0, 1.0, 1.0, 10.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 1.0],
            vec![10.0, 1.0, 1.0, 0.0],
        ]);
        assert!(classical_mds_2d(&d).unwrap().warning.is_some());
    }

    #[test]
    fn cka_examples() {
        let mut r = seeded(9);
        let x = standard_normal_matrix(&mut r, 12, 3);
        assert!(cka_distance(&x, &x).unwrap() < 1e-12);
        let o = random_stiefel(&mut r, 3, 3).unwrap();
        assert!(cka_distance(&x, &(&x * &o)).unwrap() < 1e-12);

        // columns supported on disjoint halves with zero column means
        let n = 8;
        let x = Matrix::from_fn(n, 2, |i, j| if i < 4 && i % 2 == j { 1.0 } else if i < 4 { -1.0 } else { 0.0 });
        let y = Matrix::from_fn(n, 1, |i, _| if i >= 4 { if i % 2 == 0 { 1.0 } else { -1.0 } } else { 0.0 });
        assert!((cka_distance(&x, &y).unwrap() - 1.0).abs() < 1e-15);

        assert_eq!(cka_distance(&x, &Matrix::zeros(3, 1)).unwrap_err(), Error::RowMismatch { left: 8, right: 3 });
        assert_eq!(cka_distance(&x, &Matrix::zeros(8, 1)).unwrap_err(), Error::ZeroMatrix);
    }

    fn partition(n: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..4, n)
    }

    proptest! {
        #[test]
        fn ari_matches_pair_enumeration((a, b) in (2usize..15).prop_flat_map(|n| (partition(n), partition(n)))) {
            let fast = adjusted_rand_index(&a, &b).unwrap();
            prop_assert!((fast - ari_by_pairs(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn ari_is_symmetric_and_label_invariant((a, b) in (2usize..15).prop_flat_map(|n| (partition(n), partition(n)))) {
            let base = adjusted_rand_index(&a, &b).unwrap();
            prop_assert!((base - adjusted_rand_index(&b, &a).unwrap()).abs() < 1e-12);
            let ra: Vec<usize> = a.iter().map(|x| (x + 1) % 4 + 10).collect();
            let rb: Vec<usize> = b.iter().map(|x| 3 - x).collect();
            prop_assert!((base - adjusted_rand_index(&ra, &rb).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn purity_is_label_invariant_and_monotone_under_refinement((a, t) in (1usize..15).prop_flat_map(|n| (partition(n), partition(n)))) {
            let base = purity(&a, &t).unwrap();
            let relabeled: Vec<usize> = a.iter().map(|x| 7 - x).collect();
            prop_assert_eq!(base, purity(&relabeled, &t).unwrap());
            let refined: Vec<usize> = a.iter().enumerate().map(|(i, x)| 2 * x + i % 2).collect();
            prop_assert!(purity(&refined, &t).unwrap() >= base);
            prop_assert!((0.0..=1.0).contains(&base));
        }

        #[test]
        fn affinity_is_scale_free(seed in any::<u64>(), c in 0.01f64..100.0) {
            let pts = standard_normal_matrix(&mut seeded(seed), 7, 2);
            let d = from_points(&pts);
            let scaled = DistanceMatrix::new(d.labels().to_vec(), d.values().scaled(c), "scaled").unwrap();
            let (k1, k2) = (self_tuning_affinity(&d, 3).unwrap(), self_tuning_affinity(&scaled, 3).unwrap());
            prop_assert!((&k1 - &k2).max_abs() < 1e-12);
        }

        #[test]
        fn cka_lies_in_unit_interval(seed in any::<u64>(), p in 1usize..4, q in 1usize..4) {
            let mut r = seeded(seed);
            let x = standard_normal_matrix(&mut r, 10, p);
            let y = standard_normal_matrix(&mut r, 10, q);
            let v = cka_distance(&x, &y).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn spectral_is_deterministic(seed in any::<u64>()) {
            let pts = standard_normal_matrix(&mut seeded(seed), 12, 2);
            let k = self_tuning_affinity(&from_points(&pts), 3).unwrap();
            prop_assert_eq!(spectral_cluster(&k, 3, seed).unwrap(), spectral_cluster(&k, 3, seed).unwrap());
        }
    }
}
