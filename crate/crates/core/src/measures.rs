//! Finitely supported and centered-Gaussian measures, plus the univariate
//! samples obtained by projecting them onto a direction.

use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eigen, Matrix};

/// Absolute tolerance on `Σ w_i = 1`; widened to the `n·ε` summation bound
/// for large supports.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Relative tolerance for symmetry and negative eigenvalues of a covariance.
pub const COVARIANCE_TOL: f64 = 1e-9;

fn validate_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {n} support points",
            weights.len()
        )));
    }
    if n == 0 {
        return Err(Error::EmptyMeasure);
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    let tol = WEIGHT_SUM_TOL.max(4.0 * n as f64 * f64::EPSILON);
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn is_uniform(weights: &[f64]) -> bool {
    let first = weights[0];
    weights.iter().all(|&w| w == first)
}

/// A finitely supported probability measure on `ℝ^d`: one support point per
/// row of `points`, with matching `weights`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Matrix,
    weights: Vec<f64>,
    uniform: bool,
}

impl EmpiricalMeasure {
    pub fn new(points: Matrix, weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights, points.rows())?;
        if points.cols() == 0 {
            return Err(Error::ZeroDimension);
        }
        if !points.is_finite() {
            return Err(Error::NonFinite);
        }
        let uniform = is_uniform(&weights);
        Ok(Self {
            points,
            weights,
            uniform,
        })
    }

    /// Uniform weights `1/n` on the rows of `points`.
    pub fn uniform(points: Matrix) -> Result<Self> {
        let n = points.rows();
        if n == 0 {
            return Err(Error::EmptyMeasure);
        }
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn has_uniform_weights(&self) -> bool {
        self.uniform
    }

    /// `M₂(μ) = Σ w_i ‖x_i‖²`.
    pub fn second_moment(&self) -> f64 {
        self.points
            .row_iter()
            .zip(&self.weights)
            .map(|(x, w)| w * dot(x, x))
            .sum()
    }

    /// `R_μ = Σ w_i x_i x_iᵀ`.
    pub fn second_moment_matrix(&self) -> Matrix {
        let d = self.dim();
        let mut r = Matrix::zeros(d, d);
        for (x, &w) in self.points.row_iter().zip(&self.weights) {
            r.add_outer(w, x, x);
        }
        r
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for (x, &w) in self.points.row_iter().zip(&self.weights) {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += w * v;
            }
        }
        mean
    }

    /// Pushforward by `θᵀ` (no aligner; `θ ∈ ℝ^d`) or by `θᵀΔ` (aligner `Δ`
    /// of shape `d_y × d`, `θ ∈ ℝ^{d_y}`).
    pub fn project(&self, direction: &[f64], aligner: Option<&Matrix>) -> Result<UnivariateSample> {
        let u = match aligner {
            Some(delta) => {
                if delta.rows() != direction.len() || delta.cols() != self.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "aligner is {}x{}, direction has length {}, measure dimension {}",
                        delta.rows(),
                        delta.cols(),
                        direction.len(),
                        self.dim()
                    )));
                }
                delta.t_mat_vec(direction)
            }
            None => {
                if direction.len() != self.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "direction has length {}, measure dimension {}",
                        direction.len(),
                        self.dim()
                    )));
                }
                direction.to_vec()
            }
        };
        Ok(UnivariateSample {
            values: self.points.mat_vec(&u),
            weights: self.weights.clone(),
        })
    }

    /// Same weights, mean subtracted from every point.
    pub fn center(&self) -> EmpiricalMeasure {
        let mean = self.mean();
        let points = Matrix::from_fn(self.len(), self.dim(), |i, j| self.points[(i, j)] - mean[j]);
        EmpiricalMeasure {
            points,
            weights: self.weights.clone(),
            uniform: self.uniform,
        }
    }

    /// Weighted covariance (population normalization), as a centered Gaussian.
    pub fn empirical_covariance(&self) -> GaussianMeasure {
        let cov = self.center().second_moment_matrix().sym_part();
        GaussianMeasure { covariance: cov }
    }

    /// Pushforward by the linear map `x ↦ A x` (`A` is `d' × d`).
    pub fn map_linear(&self, a: &Matrix) -> Result<EmpiricalMeasure> {
        if a.cols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "map with {} columns applied to dimension {}",
                a.cols(),
                self.dim()
            )));
        }
        let points = &self.points * &a.transpose();
        EmpiricalMeasure::new(points, self.weights.clone())
    }
}

/// Centered Gaussian `𝒩(0, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    covariance: Matrix,
}

impl GaussianMeasure {
    pub fn new(covariance: Matrix) -> Result<Self> {
        if !covariance.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{}",
                covariance.rows(),
                covariance.cols()
            )));
        }
        if covariance.rows() == 0 {
            return Err(Error::ZeroDimension);
        }
        let scale = covariance.frobenius_norm();
        let asym = covariance.asymmetry();
        if asym > COVARIANCE_TOL * scale {
            return Err(Error::NonSymmetric {
                asymmetry: asym,
                tolerance: COVARIANCE_TOL * scale,
            });
        }
        let eig = sym_eigen(&covariance)?;
        let smallest = eig.values.last().copied().unwrap_or(0.0);
        if smallest < -COVARIANCE_TOL * scale {
            return Err(Error::NotPsd {
                eigenvalue: smallest,
            });
        }
        Ok(Self {
            covariance: covariance.sym_part(),
        })
    }

    /// `Σ = Sᵀ S`, the construction used for random test covariances.
    pub fn from_factor(factor: &Matrix) -> Result<Self> {
        Self::new(factor.gram())
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.covariance.rows()
    }

    /// `M₂ = tr Σ`.
    pub fn second_moment(&self) -> f64 {
        self.covariance.trace()
    }

    /// Variance of the projection `θᵀ Δ X` (or `θᵀ X` without aligner).
    pub fn projected_variance(&self, direction: &[f64], aligner: Option<&Matrix>) -> Result<f64> {
        let u = match aligner {
            Some(delta) => {
                if delta.rows() != direction.len() || delta.cols() != self.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "aligner is {}x{}, direction has length {}, covariance dimension {}",
                        delta.rows(),
                        delta.cols(),
                        direction.len(),
                        self.dim()
                    )));
                }
                delta.t_mat_vec(direction)
            }
            None => {
                if direction.len() != self.dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "direction has length {}, covariance dimension {}",
                        direction.len(),
                        self.dim()
                    )));
                }
                direction.to_vec()
            }
        };
        Ok(dot(&u, &self.covariance.mat_vec(&u)))
    }
}

/// A weighted sample on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateSample {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl UnivariateSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights, values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values, weights })
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::EmptyMeasure);
        }
        Self::new(values, vec![1.0 / n as f64; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_uniform_weights(&self) -> bool {
        is_uniform(&self.weights)
    }

    pub fn second_moment(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(x, w)| w * x * x).sum()
    }

    /// Pushforward by `x ↦ −x`.
    pub fn reflect(&self) -> UnivariateSample {
        UnivariateSample {
            values: self.values.iter().map(|v| -v).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn scale(&self, c: f64) -> UnivariateSample {
        UnivariateSample {
            values: self.values.iter().map(|v| c * v).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Number of adjacent equal values after sorting.
    pub fn duplicate_count(&self) -> usize {
        let mut sorted = self.values.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.windows(2).filter(|w| w[0] == w[1]).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform(rows: &[Vec<f64>]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(uniform(&[vec![0.0]]).second_moment(), 0.0);
        assert_eq!(uniform(&[vec![-1.0], vec![1.0]]).second_moment(), 1.0);
        // direct summation oracle
        let m = uniform(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let oracle = 0.5 * (1.0 + 0.0) + 0.5 * (0.0 + 4.0);
        assert!(close(m.second_moment(), oracle, 1e-15));
        assert!(close(m.second_moment(), 2.5, 1e-15));
    }

    #[test]
    fn second_moment_matrix_examples() {
        let zero = uniform(&[vec![0.0, 0.0]]).second_moment_matrix();
        assert_eq!(zero, Matrix::zeros(2, 2));
        let axis = uniform(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).second_moment_matrix();
        assert_eq!(axis, Matrix::from_diagonal(&[1.0, 0.0]));
        let r = uniform(&[vec![1.0, 1.0], vec![1.0, -1.0]]).second_moment_matrix();
        assert!((&r - &Matrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let m = uniform(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let p = m.project(&[1.0, 0.0], None).unwrap();
        assert_eq!(p.values(), &[1.0, 3.0]);
        assert_eq!(p.weights(), m.weights());

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = uniform(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p = m.project(&[s, s], None).unwrap();
        assert!(p.values().iter().all(|v| (v - s).abs() < 1e-15));
    }

    #[test]
    fn padded_aligner_projects_onto_leading_coordinates() {
        let m = uniform(&[vec![1.0, -2.0], vec![0.5, 3.0], vec![-1.0, 0.25]]);
        let theta = [0.6, 0.0, 0.8];
        let delta = Matrix::padded_identity(3, 2);
        let aligned = m.project(&theta, Some(&delta)).unwrap();
        let direct = m.project(&[0.6, 0.0], None).unwrap();
        assert_eq!(aligned, direct);
    }

    #[test]
    fn projection_dimension_mismatch() {
        let m = uniform(&[vec![1.0, 2.0]]);
        assert!(matches!(m.project(&[1.0], None), Err(Error::DimensionMismatch(_))));
        let delta = Matrix::padded_identity(3, 1);
        assert!(matches!(
            m.project(&[1.0, 0.0, 0.0], Some(&delta)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn centering_examples() {
        let m = uniform(&[vec![-1.0], vec![1.0]]);
        assert_eq!(m.center(), m);
        assert_eq!(
            uniform(&[vec![0.0], vec![2.0]]).center(),
            uniform(&[vec![-1.0], vec![1.0]])
        );
        assert_eq!(
            uniform(&[vec![1.0, 1.0], vec![3.0, 5.0]]).center(),
            uniform(&[vec![-1.0, -2.0], vec![1.0, 2.0]])
        );
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(
            uniform(&[vec![3.0, 4.0]]).empirical_covariance().covariance(),
            &Matrix::zeros(2, 2)
        );
        assert_eq!(
            uniform(&[vec![-1.0], vec![1.0]]).empirical_covariance().covariance(),
            &Matrix::identity(1)
        );
        let sq = uniform(&[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![2.0, 2.0]]);
        assert!((sq.empirical_covariance().covariance() - &Matrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn invalid_measures_are_rejected() {
        let pts = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(
            EmpiricalMeasure::new(pts.clone(), vec![0.5, 0.6]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            EmpiricalMeasure::new(pts.clone(), vec![1.5, -0.5]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            EmpiricalMeasure::new(pts, vec![1.0]),
            Err(Error::InvalidWeights(_))
        ));
        assert_eq!(
            EmpiricalMeasure::uniform(Matrix::zeros(0, 2)),
            Err(Error::EmptyMeasure)
        );
        assert_eq!(UnivariateSample::uniform(vec![]), Err(Error::EmptyMeasure));
        assert!(matches!(
            GaussianMeasure::new(Matrix::from_diagonal(&[1.0, -1.0])),
            Err(Error::NotPsd { .. })
        ));
        assert!(matches!(
            GaussianMeasure::new(Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap()),
            Err(Error::NonSymmetric { .. })
        ));
    }

    fn measure_strategy() -> impl Strategy<Value = EmpiricalMeasure> {
        (1usize..5, 1usize..8).prop_flat_map(|(d, n)| {
            (
                proptest::collection::vec(-5.0f64..5.0, d * n),
                proptest::collection::vec(0.01f64..1.0, n),
            )
                .prop_map(move |(pts, w)| {
                    let total: f64 = w.iter().sum();
                    let mut w: Vec<f64> = w.iter().map(|x| x / total).collect();
                    let rest: f64 = w[1..].iter().sum();
                    w[0] = 1.0 - rest;
                    EmpiricalMeasure::new(Matrix::new(n, d, pts).unwrap(), w).unwrap()
                })
        })
    }

    fn unit_vector(raw: &[f64]) -> Vec<f64> {
        let n = crate::linalg::norm(raw);
        if n < 1e-6 {
            let mut e = vec![0.0; raw.len()];
            e[0] = 1.0;
            e
        } else {
            raw.iter().map(|v| v / n).collect()
        }
    }

    proptest! {
        #[test]
        fn trace_of_second_moment_matrix(m in measure_strategy()) {
            let tr = m.second_moment_matrix().trace();
            prop_assert!(close(tr, m.second_moment(), 1e-12));
        }

        #[test]
        fn projected_moment_matches_quadratic_form(
            m in measure_strategy(),
            raw in proptest::collection::vec(-1.0f64..1.0, 4),
            c in -3.0f64..3.0,
        ) {
            let theta = unit_vector(&raw[..m.dim()]);
            let proj = m.project(&theta, None).unwrap();
            let r = m.second_moment_matrix();
            let quad = dot(&theta, &r.mat_vec(&theta));
            prop_assert!(close(proj.second_moment(), quad, 1e-10));

            // linear in the points
            let scaled = m.map_linear(&Matrix::identity(m.dim()).scaled(c)).unwrap();
            let sp = scaled.project(&theta, None).unwrap();
            for (a, b) in sp.values().iter().zip(proj.values()) {
                prop_assert!(close(*a, c * b, 1e-12));
            }
        }

        #[test]
        fn centered_mean_vanishes(m in measure_strategy()) {
            let c = m.center();
            prop_assert!(c.mean().iter().all(|v| v.abs() <= 1e-12));
            let cov = m.empirical_covariance();
            prop_assert!((cov.covariance() - &c.second_moment_matrix()).max_abs() <= 1e-12);
        }
    }
}
