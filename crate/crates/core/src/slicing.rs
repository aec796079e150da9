//! Random slicing: directions on the sphere, per-slice IGW costs and the
//! Monte-Carlo objective
//!
//! ```text
//! F(Δ) = (1/m) Σ_k IGW((θ_kᵀΔ)#μ, θ_kᵀ#ν)²
//! ```
//!
//! over a fixed set of directions `θ_1..θ_m ∈ 𝕊^{d_y−1}`. `F` is defined for
//! every `Δ ∈ ℝ^{d_y×d_x}`, not only on the Stiefel manifold.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::measures::{EmpiricalMeasure, GaussianMeasure};
use crate::rng;
use crate::univariate::{
    combine, correlation_sorted, igw_1d, sweep_coupling, Orientation, SortedSample,
};

/// Tolerance on `‖θ‖ = 1` for each stored direction.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// `m` unit vectors in `ℝ^{d}`, one per row, and the seed that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionSet {
    directions: Matrix,
    seed: u64,
}

impl DirectionSet {
    pub fn new(directions: Matrix, seed: u64) -> Result<Self> {
        if directions.cols() == 0 {
            return Err(Error::ZeroDimension);
        }
        if directions.rows() == 0 {
            return Err(Error::InvalidArgument("direction set is empty".into()));
        }
        for (k, row) in directions.row_iter().enumerate() {
            let n = norm(row);
            if (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "direction {k} has norm {n}, expected 1"
                )));
            }
        }
        Ok(Self { directions, seed })
    }

    /// Draws `m` directions from `rng`; `seed` is recorded as provenance.
    pub fn sample_from<R: Rng + ?Sized>(rng: &mut R, d: usize, m: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        if m == 0 {
            return Err(Error::InvalidArgument("need at least one direction".into()));
        }
        let mut data = Vec::with_capacity(m * d);
        let mut buf = vec![0.0; d];
        for _ in 0..m {
            loop {
                for b in buf.iter_mut() {
                    *b = StandardNormal.sample(rng);
                }
                let n = norm(&buf);
                if n > 0.0 && n.is_finite() {
                    data.extend(buf.iter().map(|v| v / n));
                    break;
                }
            }
        }
        Ok(Self {
            directions: Matrix::new(m, d, data)?,
            seed,
        })
    }

    pub fn directions(&self) -> &Matrix {
        &self.directions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.directions.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.directions.cols()
    }

    pub fn direction(&self, k: usize) -> &[f64] {
        self.directions.row(k)
    }

    /// Applies `θ ↦ Qθ` to every direction. `Q` must be orthogonal.
    pub fn rotated(&self, q: &Matrix) -> Result<Self> {
        let rotated = self.directions.try_matmul(&q.transpose())?;
        Self::new(rotated, self.seed)
    }

    /// Rows reordered so that row `k` of the result is row `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: perm.len(),
                right: self.len(),
            });
        }
        let d = self.dim();
        let m = Matrix::from_fn(self.len(), d, |i, j| self.directions[(perm[i], j)]);
        Self::new(m, self.seed)
    }
}

/// i.i.d. uniform directions on `𝕊^{d−1}`: normalized standard Gaussian
/// vectors, deterministic in `seed`.
pub fn sample_directions(d: usize, m: usize, seed: u64) -> Result<DirectionSet> {
    DirectionSet::sample_from(&mut rng::seeded(seed), d, m, seed)
}

/// The two measures being compared. Both sides always share a backend.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Empirical {
        mu: EmpiricalMeasure,
        nu: EmpiricalMeasure,
    },
    Gaussian {
        mu: GaussianMeasure,
        nu: GaussianMeasure,
    },
}

impl Backend {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Backend::Empirical { mu, nu } => (mu.dim(), nu.dim()),
            Backend::Gaussian { mu, nu } => (mu.dim(), nu.dim()),
        }
    }

    pub fn second_moments(&self) -> (f64, f64) {
        match self {
            Backend::Empirical { mu, nu } => (mu.second_moment(), nu.second_moment()),
            Backend::Gaussian { mu, nu } => (mu.second_moment(), nu.second_moment()),
        }
    }
}

#[derive(Debug, Clone)]
enum NuCache {
    /// Projections of ν onto each direction, sorted.
    Empirical(Vec<SortedSample>),
    Gaussian,
}

/// `F` over a fixed direction set. Per-direction quantities that do not
/// depend on `Δ` (the projected ν side) are computed once at construction.
#[derive(Debug, Clone)]
pub struct SliceObjective {
    backend: Backend,
    directions: DirectionSet,
    nu_moments: Vec<f64>,
    nu_cache: NuCache,
}

impl SliceObjective {
    pub fn empirical(mu: EmpiricalMeasure, nu: EmpiricalMeasure, directions: DirectionSet) -> Result<Self> {
        Self::new(Backend::Empirical { mu, nu }, directions)
    }

    pub fn gaussian(mu: GaussianMeasure, nu: GaussianMeasure, directions: DirectionSet) -> Result<Self> {
        Self::new(Backend::Gaussian { mu, nu }, directions)
    }

    pub fn new(backend: Backend, directions: DirectionSet) -> Result<Self> {
        let (d_x, d_y) = backend.dims();
        if d_x > d_y {
            return Err(Error::DimensionOrder { d_x, d_y });
        }
        if directions.dim() != d_y {
            return Err(Error::DimensionMismatch(format!(
                "directions live in dimension {}, target measure in {d_y}",
                directions.dim()
            )));
        }
        let m = directions.len();
        let mut nu_moments = Vec::with_capacity(m);
        let nu_cache = match &backend {
            Backend::Empirical { nu, .. } => {
                let mut sorted = Vec::with_capacity(m);
                for k in 0..m {
                    let proj = nu.project(directions.direction(k), None)?;
                    nu_moments.push(proj.second_moment());
                    sorted.push(SortedSample::from_parts(
                        proj.values(),
                        proj.weights(),
                        nu.has_uniform_weights(),
                    ));
                }
                NuCache::Empirical(sorted)
            }
            Backend::Gaussian { nu, .. } => {
                for k in 0..m {
                    nu_moments.push(nu.projected_variance(directions.direction(k), None)?);
                }
                NuCache::Gaussian
            }
        };
        Ok(Self {
            backend,
            directions,
            nu_moments,
            nu_cache,
        })
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn directions(&self) -> &DirectionSet {
        &self.directions
    }

    pub fn d_x(&self) -> usize {
        self.backend.dims().0
    }

    pub fn d_y(&self) -> usize {
        self.backend.dims().1
    }

    /// `(M₂(μ), M₂(ν))`.
    pub fn second_moments(&self) -> (f64, f64) {
        self.backend.second_moments()
    }

    fn check_delta(&self, delta: &Matrix) -> Result<()> {
        let (d_x, d_y) = self.backend.dims();
        if delta.shape() != (d_y, d_x) {
            return Err(Error::DimensionMismatch(format!(
                "aligner is {}x{}, expected {d_y}x{d_x}",
                delta.rows(),
                delta.cols()
            )));
        }
        if !delta.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// `IGW((θᵀΔ)#μ, θᵀ#ν)²` for an arbitrary unit vector `θ`.
    pub fn slice_cost(&self, delta: &Matrix, theta: &[f64]) -> Result<f64> {
        self.check_delta(delta)?;
        match &self.backend {
            Backend::Empirical { mu, nu } => {
                let x = mu.project(theta, Some(delta))?;
                let y = nu.project(theta, None)?;
                Ok(igw_1d(&x, &y).igw_squared)
            }
            Backend::Gaussian { mu, nu } => {
                let a = mu.projected_variance(theta, Some(delta))?;
                let b = nu.projected_variance(theta, None)?;
                Ok((a - b) * (a - b))
            }
        }
    }

    /// Cost of the `k`-th stored slice; adds `scale ·` its (sub)gradient into
    /// `grad` when given.
    fn slice_term(&self, k: usize, delta: &Matrix, grad: Option<(&mut Matrix, f64)>) -> f64 {
        let theta = self.directions.direction(k);
        let b = self.nu_moments[k];
        let u = delta.t_mat_vec(theta);
        match (&self.backend, &self.nu_cache) {
            (Backend::Empirical { mu, .. }, NuCache::Empirical(sorted)) => {
                let y = &sorted[k];
                let xs = mu.points().mat_vec(&u);
                let a: f64 = xs.iter().zip(mu.weights()).map(|(x, w)| w * x * x).sum();
                let correlations = |x: &SortedSample| {
                    (
                        correlation_sorted(x, y, Orientation::Monotone),
                        correlation_sorted(x, y, Orientation::Antitone),
                    )
                };
                let Some((g, scale)) = grad else {
                    // value only: the sorting permutation is not needed
                    let x = if mu.has_uniform_weights() {
                        SortedSample::uniform_unordered(xs)
                    } else {
                        SortedSample::from_parts(&xs, mu.weights(), false)
                    };
                    let (mono, anti) = correlations(&x);
                    return combine(a, b, mono, anti).0;
                };
                let x = SortedSample::from_parts(&xs, mu.weights(), mu.has_uniform_weights());
                let (mono, anti) = correlations(&x);
                let (cost, chosen) = combine(a, b, mono, anti);
                {
                    let c = match chosen {
                        Orientation::Monotone => mono,
                        Orientation::Antitone => anti,
                    };
                    // per-point coefficients of 4a·R_μu − 4c·C_πθ as Xᵀ·coef
                    let mut coef: Vec<f64> = xs
                        .iter()
                        .zip(mu.weights())
                        .map(|(x, w)| 4.0 * a * w * x)
                        .collect();
                    sweep_coupling(x.weights(), y.weights(), chosen, |p, q, mass| {
                        coef[x.order[p]] -= 4.0 * c * mass * y.values[q];
                    });
                    let s = mu.points().t_mat_vec(&coef);
                    g.add_outer(scale, theta, &s);
                }
                cost
            }
            (Backend::Gaussian { mu, .. }, NuCache::Gaussian) => {
                let s = mu.covariance().mat_vec(&u);
                let a = dot(&u, &s);
                if let Some((g, scale)) = grad {
                    g.add_outer(scale * 4.0 * (a - b), theta, &s);
                }
                (a - b) * (a - b)
            }
            _ => unreachable!("cache always matches the backend"),
        }
    }

    /// Per-slice costs `g_Δ(θ_k)` in direction order.
    pub fn slice_costs(&self, delta: &Matrix) -> Result<Vec<f64>> {
        self.check_delta(delta)?;
        Ok((0..self.directions.len())
            .map(|k| self.slice_term(k, delta, None))
            .collect())
    }

    /// `F(Δ)`, the mean of the per-slice costs.
    pub fn value(&self, delta: &Matrix) -> Result<f64> {
        self.check_delta(delta)?;
        let m = self.directions.len();
        let total: f64 = (0..m).map(|k| self.slice_term(k, delta, None)).sum();
        Ok(total / m as f64)
    }

    /// `F(Δ)` and one element of its Clarke subdifferential. For empirical
    /// measures each slice contributes the gradient of the coupling chosen
    /// by the univariate solver; for Gaussians the objective is smooth.
    pub fn value_and_subgradient(&self, delta: &Matrix) -> Result<(f64, Matrix)> {
        self.check_delta(delta)?;
        let m = self.directions.len();
        let scale = 1.0 / m as f64;
        let mut grad = Matrix::zeros(delta.rows(), delta.cols());
        let mut total = 0.0;
        for k in 0..m {
            total += self.slice_term(k, delta, Some((&mut grad, scale)));
        }
        Ok((total / m as f64, grad))
    }

    /// Number of tied values among the projected samples of both measures,
    /// summed over all directions. Ties make the univariate coupling
    /// non-unique, so subgradients there are one of several valid choices.
    pub fn duplicate_projections(&self, delta: &Matrix) -> Result<usize> {
        self.check_delta(delta)?;
        let Backend::Empirical { mu, .. } = &self.backend else {
            return Ok(0);
        };
        let NuCache::Empirical(sorted) = &self.nu_cache else {
            return Ok(0);
        };
        let mut count = 0;
        for (k, y) in sorted.iter().enumerate() {
            count += y.values.windows(2).filter(|w| w[0] == w[1]).count();
            count += mu.project(self.directions.direction(k), Some(delta))?.duplicate_count();
        }
        Ok(count)
    }
}

/// Monte-Carlo estimate of the sliced cost at `delta`.
pub fn mc_estimate(obj: &SliceObjective, delta: &Matrix) -> Result<f64> {
    obj.value(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_stiefel, seeded, standard_normal_matrix};
    use proptest::prelude::*;

    fn empirical(rows: &[Vec<f64>]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn random_empirical(seed: u64, n: usize, d: usize) -> EmpiricalMeasure {
        let mut r = seeded(seed);
        EmpiricalMeasure::uniform(standard_normal_matrix(&mut r, n, d)).unwrap()
    }

    fn random_weighted(seed: u64, n: usize, d: usize) -> EmpiricalMeasure {
        let mut r = seeded(seed);
        let pts = standard_normal_matrix(&mut r, n, d);
        let raw: Vec<f64> = (0..n).map(|_| rand::Rng::random::<f64>(&mut r) + 0.1).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let head: f64 = w[..n - 1].iter().sum();
        w[n - 1] = 1.0 - head;
        EmpiricalMeasure::new(pts, w).unwrap()
    }

    #[test]
    fn one_dimensional_directions_are_signs() {
        let d = sample_directions(1, 50, 3).unwrap();
        for k in 0..d.len() {
            assert_eq!(d.direction(k)[0].abs(), 1.0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        assert_eq!(sample_directions(4, 20, 11).unwrap(), sample_directions(4, 20, 11).unwrap());
        assert_ne!(sample_directions(4, 20, 11).unwrap(), sample_directions(4, 20, 12).unwrap());
    }

    #[test]
    fn sampling_errors() {
        assert_eq!(sample_directions(0, 5, 1), Err(Error::ZeroDimension));
        assert!(sample_directions(3, 0, 1).is_err());
    }

    #[test]
    fn directions_are_centered_on_the_sphere() {
        let m = 100_000;
        let d = sample_directions(3, m, 5).unwrap();
        let bound = 3.0 * (1.0 / 3f64.sqrt()) / (m as f64).sqrt();
        for j in 0..3 {
            let mean: f64 = (0..m).map(|k| d.direction(k)[j]).sum::<f64>() / m as f64;
            assert!(mean.abs() < bound, "coordinate {j}: {mean}");
        }
        for k in 0..m {
            assert!((norm(d.direction(k)) - 1.0).abs() <= UNIT_NORM_TOL);
        }
    }

    #[test]
    fn gaussian_slice_example() {
        let mu = GaussianMeasure::new(Matrix::from_rows(&[vec![2.0]]).unwrap()).unwrap();
        let nu = GaussianMeasure::new(Matrix::from_diagonal(&[3.0, 1.0])).unwrap();
        let dirs = DirectionSet::new(Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(), 0).unwrap();
        let obj = SliceObjective::gaussian(mu, nu, dirs).unwrap();
        let delta = Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(obj.slice_cost(&delta, &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(mc_estimate(&obj, &delta).unwrap(), 1.0);
        // a = b along e₂: both projected variances equal 1 after rotating μ there
        let delta2 = Matrix::from_rows(&[vec![0.0], vec![0.5f64.sqrt()]]).unwrap();
        assert!(obj.slice_cost(&delta2, &[0.0, 1.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn identical_measures_have_zero_cost() {
        let mu = random_empirical(1, 30, 3);
        let dirs = sample_directions(3, 40, 2).unwrap();
        let obj = SliceObjective::empirical(mu.clone(), mu, dirs.clone()).unwrap();
        let id = Matrix::identity(3);
        for k in 0..dirs.len() {
            assert!(obj.slice_cost(&id, dirs.direction(k)).unwrap().abs() < 1e-12);
        }
        assert!(mc_estimate(&obj, &id).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_direction_estimate_is_the_slice_cost() {
        let (mu, nu) = (random_empirical(3, 20, 2), random_empirical(4, 25, 3));
        let dirs = sample_directions(3, 1, 9).unwrap();
        let obj = SliceObjective::empirical(mu, nu, dirs.clone()).unwrap();
        let delta = random_stiefel(&mut seeded(5), 3, 2).unwrap();
        assert_eq!(
            mc_estimate(&obj, &delta).unwrap(),
            obj.slice_cost(&delta, dirs.direction(0)).unwrap()
        );
    }

    #[test]
    fn cached_slices_match_direct_univariate_solves() {
        for (mu, nu) in [
            (random_empirical(6, 17, 2), random_empirical(7, 23, 4)),
            (random_weighted(8, 9, 3), random_weighted(9, 14, 3)),
        ] {
            let d_y = nu.dim();
            let dirs = sample_directions(d_y, 30, 1).unwrap();
            let delta = standard_normal_matrix(&mut seeded(2), d_y, mu.dim());
            let obj = SliceObjective::empirical(mu, nu, dirs.clone()).unwrap();
            let costs = obj.slice_costs(&delta).unwrap();
            for (k, c) in costs.iter().enumerate() {
                assert_eq!(*c, obj.slice_cost(&delta, dirs.direction(k)).unwrap());
            }
            let (v, _) = obj.value_and_subgradient(&delta).unwrap();
            assert_eq!(v, obj.value(&delta).unwrap());
        }
    }

    #[test]
    fn isotropic_gaussians_give_unit_cost_on_every_slice() {
        let d = 4;
        let mu = GaussianMeasure::new(Matrix::identity(d)).unwrap();
        let nu = GaussianMeasure::new(Matrix::identity(d).scaled(2.0)).unwrap();
        let obj = SliceObjective::gaussian(mu, nu, sample_directions(d, 2000, 3).unwrap()).unwrap();
        let delta = random_stiefel(&mut seeded(4), d, d).unwrap();
        assert!((mc_estimate(&obj, &delta).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_aligner_leaves_only_the_target_moment() {
        let (mu, nu) = (random_empirical(10, 12, 2), random_empirical(11, 15, 3));
        let dirs = sample_directions(3, 25, 4).unwrap();
        let r_nu = nu.second_moment_matrix();
        let expected: f64 = (0..dirs.len())
            .map(|k| {
                let t = dirs.direction(k);
                dot(t, &r_nu.mat_vec(t)).powi(2)
            })
            .sum::<f64>()
            / dirs.len() as f64;
        let obj = SliceObjective::empirical(mu, nu, dirs).unwrap();
        let got = obj.value(&Matrix::zeros(3, 2)).unwrap();
        assert!((got - expected).abs() < 1e-12 * (1.0 + expected));
    }

    #[test]
    fn scalar_subgradient() {
        // d_x = d_y = 1, θ = 1: F(Δ) = (R_μΔ²)² + R_ν² − 2(CΔ)²
        let mu = empirical(&[vec![-1.0], vec![0.5], vec![2.0]]);
        let nu = empirical(&[vec![1.0], vec![-3.0], vec![0.25]]);
        let r_mu = mu.second_moment();
        let x = mu.project(&[1.0], None).unwrap();
        let y = nu.project(&[1.0], None).unwrap();
        let c = igw_1d(&x, &y).chosen_correlation();
        let dirs = DirectionSet::new(Matrix::from_rows(&[vec![1.0]]).unwrap(), 0).unwrap();
        let obj = SliceObjective::empirical(mu, nu, dirs).unwrap();
        for delta in [0.7, 1.3, -0.4] {
            let (_, g) = obj
                .value_and_subgradient(&Matrix::from_rows(&[vec![delta]]).unwrap())
                .unwrap();
            let expected = 4.0 * r_mu * r_mu * delta.powi(3) - 4.0 * c * c * delta;
            assert!((g[(0, 0)] - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn point_mass_at_origin_has_zero_subgradient() {
        let mu = empirical(&[vec![0.0, 0.0]]);
        let nu = random_empirical(12, 10, 3);
        let obj = SliceObjective::empirical(mu, nu, sample_directions(3, 10, 1).unwrap()).unwrap();
        let delta = random_stiefel(&mut seeded(1), 3, 2).unwrap();
        let (_, g) = obj.value_and_subgradient(&delta).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn gaussian_gradient_matches_finite_differences() {
        let mut r = seeded(21);
        let mu = GaussianMeasure::from_factor(&standard_normal_matrix(&mut r, 3, 3)).unwrap();
        let nu = GaussianMeasure::from_factor(&standard_normal_matrix(&mut r, 5, 5)).unwrap();
        let obj = SliceObjective::gaussian(mu, nu, sample_directions(5, 50, 2).unwrap()).unwrap();
        let delta = standard_normal_matrix(&mut r, 5, 3);
        let (_, g) = obj.value_and_subgradient(&delta).unwrap();
        let h = 1e-6 * (1.0 + delta.frobenius_norm());
        for i in 0..5 {
            for j in 0..3 {
                let mut p = delta.clone();
                p[(i, j)] += h;
                let mut q = delta.clone();
                q[(i, j)] -= h;
                let fd = (obj.value(&p).unwrap() - obj.value(&q).unwrap()) / (2.0 * h);
                assert!((fd - g[(i, j)]).abs() <= 1e-5 * (1.0 + g.frobenius_norm()));
            }
        }
    }

    #[test]
    fn construction_errors() {
        let mu = random_empirical(1, 5, 3);
        let nu = random_empirical(2, 5, 2);
        assert_eq!(
            SliceObjective::empirical(mu.clone(), nu, sample_directions(2, 3, 0).unwrap()).unwrap_err(),
            Error::DimensionOrder { d_x: 3, d_y: 2 }
        );
        let nu = random_empirical(2, 5, 4);
        assert!(matches!(
            SliceObjective::empirical(mu.clone(), nu.clone(), sample_directions(3, 3, 0).unwrap()),
            Err(Error::DimensionMismatch(_))
        ));
        let obj = SliceObjective::empirical(mu, nu, sample_directions(4, 3, 0).unwrap()).unwrap();
        assert!(matches!(obj.value(&Matrix::zeros(3, 4)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn duplicate_projections_are_counted() {
        let mu = empirical(&[vec![1.0], vec![1.0], vec![2.0]]);
        let nu = empirical(&[vec![0.0], vec![3.0]]);
        let dirs = DirectionSet::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(), 0).unwrap();
        let obj = SliceObjective::empirical(mu, nu, dirs).unwrap();
        assert_eq!(obj.duplicate_projections(&Matrix::identity(1)).unwrap(), 2);
    }

    fn instance() -> impl Strategy<Value = (u64, usize, usize, usize)> {
        (any::<u64>(), 1usize..=3, 0usize..=2, 2usize..=12)
            .prop_map(|(seed, d_x, extra, n)| (seed, d_x, d_x + extra, n))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn estimate_ignores_direction_order((seed, d_x, d_y, n) in instance()) {
            let mu = random_empirical(seed, n, d_x);
            let nu = random_empirical(seed.wrapping_add(1), n + 1, d_y);
            let dirs = sample_directions(d_y, 20, seed).unwrap();
            let perm: Vec<usize> = (0..20).rev().collect();
            let delta = random_stiefel(&mut seeded(seed), d_y, d_x).unwrap();
            let a = SliceObjective::empirical(mu.clone(), nu.clone(), dirs.clone()).unwrap().value(&delta).unwrap();
            let b = SliceObjective::empirical(mu, nu, dirs.permuted(&perm).unwrap()).unwrap().value(&delta).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn slices_are_bounded_by_second_moments((seed, d_x, d_y, n) in instance()) {
            let mu = random_weighted(seed, n, d_x);
            let nu = random_empirical(seed.wrapping_add(7), n, d_y);
            let bound = mu.second_moment().powi(2) + nu.second_moment().powi(2);
            let obj = SliceObjective::empirical(mu, nu, sample_directions(d_y, 15, seed).unwrap()).unwrap();
            let delta = random_stiefel(&mut seeded(seed ^ 3), d_y, d_x).unwrap();
            for c in obj.slice_costs(&delta).unwrap() {
                prop_assert!(c <= bound + 1e-12);
            }
        }

        #[test]
        fn estimate_is_lipschitz_on_the_manifold((seed, d_x, d_y, n) in instance()) {
            let mu = random_empirical(seed, n, d_x);
            let nu = random_empirical(seed.wrapping_add(2), n + 3, d_y);
            let (m_mu, m_nu) = (mu.second_moment(), nu.second_moment());
            let obj = SliceObjective::empirical(mu, nu, sample_directions(d_y, 15, seed).unwrap()).unwrap();
            let mut r = seeded(seed ^ 5);
            let d1 = random_stiefel(&mut r, d_y, d_x).unwrap();
            let d2 = random_stiefel(&mut r, d_y, d_x).unwrap();
            let lip = 4.0 * m_mu * m_mu + 4.0 * m_mu * m_nu;
            let gap = (obj.value(&d1).unwrap() - obj.value(&d2).unwrap()).abs();
            prop_assert!(gap <= lip * (&d1 - &d2).frobenius_norm() + 1e-9);
        }
    }
}
