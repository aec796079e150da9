//! Minimizing the sliced objective `F` over the Stiefel manifold
//! `St(d_x, d_y) = {Δ ∈ ℝ^{d_y×d_x} : ΔᵀΔ = I}`.
//!
//! Two methods are provided:
//!
//! * a subgradient method on the constraint-dissolving function
//!   `H(Δ) = F(A(Δ)) + (β/4)‖ΔᵀΔ − I‖²_F` with
//!   `A(Δ) = Δ(15I − 10ΔᵀΔ + 3(ΔᵀΔ)²)/8`, which runs in the ambient space;
//! * a Riemannian subgradient method with Armijo backtracking and the QR
//!   retraction, which keeps every iterate exactly feasible.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::sliced_igw_gaussian;
use crate::linalg::{qr_positive, Matrix};
use crate::measures::GaussianMeasure;
use crate::slicing::{Backend, SliceObjective};

/// Largest feasibility residual allowed at the start of the dissolving method.
pub const CD_INIT_RESIDUAL: f64 = 1.0 / 6.0;
/// Feasibility required of points handed to the Riemannian method.
pub const MANIFOLD_TOL: f64 = 1e-10;

/// A `d_y × d_x` matrix together with `‖ΔᵀΔ − I‖_F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StiefelPoint {
    matrix: Matrix,
    feasibility_residual: f64,
}

impl StiefelPoint {
    pub fn new(matrix: Matrix) -> Self {
        let feasibility_residual = matrix.stiefel_residual();
        Self {
            matrix,
            feasibility_residual,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn feasibility_residual(&self) -> f64 {
        self.feasibility_residual
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `η_k = min(1/(2β), c/k)`.
    Theoretical { c: f64 },
    /// `η_k = min(0.01 / max(‖G_k‖_F, 1), 5000/(k+1))`.
    Practical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `[I; 0]`.
    PaddedIdentity,
    /// The optimal aligner between Gaussians sharing the second-moment
    /// matrices of the two measures.
    GaussianAlignment,
    Given(Matrix),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub beta: f64,
    pub step_rule: StepRule,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub backtrack_max: usize,
    pub backtrack_alpha: f64,
    pub init: Init,
}

impl OptimizerConfig {
    /// Defaults for the dissolving subgradient method: `β = 100`, practical
    /// steps, 2500 iterations.
    pub fn dissolving() -> Self {
        Self {
            beta: 100.0,
            step_rule: StepRule::Practical,
            max_iters: 2500,
            grad_tol: 5e-6,
            backtrack_max: 12,
            backtrack_alpha: 1e-4,
            init: Init::GaussianAlignment,
        }
    }

    /// Defaults for the Riemannian method: 500 iterations, gradient
    /// tolerance `5e-6`, at most 12 halvings per line search.
    pub fn riemannian() -> Self {
        Self {
            max_iters: 500,
            ..Self::dissolving()
        }
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {}", self.beta)));
        }
        if let StepRule::Theoretical { c } = self.step_rule {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidArgument(format!("step constant must be positive, got {c}")));
            }
        }
        if !(self.backtrack_alpha > 0.0 && self.backtrack_alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "backtracking parameter must lie in (0, 1), got {}",
                self.backtrack_alpha
            )));
        }
        Ok(())
    }

    /// Step size at iteration `k ≥ 1` given the current subgradient norm.
    pub fn step_size(&self, k: usize, grad_norm: f64) -> f64 {
        match self.step_rule {
            StepRule::Theoretical { c } => (0.5 / self.beta).min(c / k as f64),
            StepRule::Practical => (0.01 / grad_norm.max(1.0)).min(5000.0 / (k as f64 + 1.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergedReason {
    MaxIters,
    GradTol,
    BacktrackExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub feasibility_residual: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerTrace {
    pub iterates: Vec<IterationRecord>,
    /// Reported aligner; always on the manifold.
    pub final_point: StiefelPoint,
    pub converged_reason: ConvergedReason,
    /// `F` at `final_point`.
    pub final_objective: f64,
    /// `H` at the last ambient iterate (dissolving method only).
    pub final_h: Option<f64>,
}

impl OptimizerTrace {
    /// Square root of the final objective, the reported distance.
    pub fn distance(&self) -> f64 {
        self.final_objective.max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalConstants {
    pub alpha: f64,
    pub l1: f64,
    pub beta_min: f64,
}

/// Constants of the feasibility guarantee for the dissolving method, in
/// terms of `M₂(μ)` and `M₂(ν)`:
/// `α = 4M₂(μ)√(217/216)(M₂(ν) + (217/216)M₂(μ))`,
/// `L₁ = 4√2·M₂(μ)(M₂(ν) + 2M₂(μ))`, `β_min = max(162α, 2L₁)`.
pub fn theoretical_constants(m2_mu: f64, m2_nu: f64) -> TheoreticalConstants {
    let r: f64 = 217.0 / 216.0;
    let alpha = 4.0 * m2_mu * r.sqrt() * (m2_nu + r * m2_mu);
    let l1 = 4.0 * m2_mu * 2f64.sqrt() * (m2_nu + 2.0 * m2_mu);
    TheoreticalConstants {
        alpha,
        l1,
        beta_min: (162.0 * alpha).max(2.0 * l1),
    }
}

pub fn objective_f(obj: &SliceObjective, delta: &Matrix) -> Result<f64> {
    obj.value(delta)
}

pub fn subgrad_f(obj: &SliceObjective, delta: &Matrix) -> Result<Matrix> {
    Ok(obj.value_and_subgradient(delta)?.1)
}

/// `(15I − 10P + 3P²)/8` with `P = ΔᵀΔ`.
fn dissolve_factor(p: &Matrix) -> Matrix {
    let n = p.rows();
    let p2 = p * p;
    Matrix::from_fn(n, n, |i, j| {
        let id = if i == j { 15.0 } else { 0.0 };
        (id - 10.0 * p[(i, j)] + 3.0 * p2[(i, j)]) / 8.0
    })
}

/// `A(Δ) = Δ(15I − 10ΔᵀΔ + 3(ΔᵀΔ)²)/8`.
pub fn dissolve_map(delta: &Matrix) -> Matrix {
    delta * &dissolve_factor(&delta.gram())
}

/// Directional derivative `DA_Δ(Ξ)`. The map `Ξ ↦ DA_Δ(Ξ)` is self-adjoint,
/// so the same routine transports subgradients of `F` back through `A`.
pub fn dissolve_jacobian_apply(delta: &Matrix, xi: &Matrix) -> Result<Matrix> {
    if delta.shape() != xi.shape() {
        return Err(Error::DimensionMismatch(format!(
            "direction is {}x{}, point is {}x{}",
            xi.rows(),
            xi.cols(),
            delta.rows(),
            delta.cols()
        )));
    }
    let p = delta.gram();
    let mut out = xi * &dissolve_factor(&p);
    let phi = delta.transpose().try_matmul(xi)?.sym_part();
    out -= &(delta * &phi);
    let q = &p - &Matrix::identity(p.rows());
    let inner = (&phi * &q).sym_part();
    out += &(delta * &inner).scaled(1.5);
    Ok(out)
}

/// `βΔ(ΔᵀΔ − I)`.
fn penalty_gradient(delta: &Matrix, beta: f64) -> Matrix {
    let p = delta.gram();
    let q = &p - &Matrix::identity(p.rows());
    (delta * &q).scaled(beta)
}

/// `H(Δ) = F(A(Δ)) + (β/4)‖ΔᵀΔ − I‖²_F`.
pub fn h_value(obj: &SliceObjective, delta: &Matrix, beta: f64) -> Result<f64> {
    let r = delta.stiefel_residual();
    Ok(obj.value(&dissolve_map(delta))? + 0.25 * beta * r * r)
}

/// `DA_Δ(∂F(A(Δ))) + βΔ(ΔᵀΔ − I)`.
pub fn subgrad_h(obj: &SliceObjective, delta: &Matrix, beta: f64) -> Result<Matrix> {
    Ok(h_value_and_subgradient(obj, delta, beta)?.2)
}

/// `(F(A(Δ)), H(Δ), ∂H(Δ))` from one pass over the slices.
fn h_value_and_subgradient(obj: &SliceObjective, delta: &Matrix, beta: f64) -> Result<(f64, f64, Matrix)> {
    let a = dissolve_map(delta);
    let (f, s) = obj.value_and_subgradient(&a)?;
    let mut g = dissolve_jacobian_apply(delta, &s)?;
    g += &penalty_gradient(delta, beta);
    let r = delta.stiefel_residual();
    Ok((f, f + 0.25 * beta * r * r, g))
}

/// Tangent projection `S − Δ·sym(ΔᵀS)` at a feasible `Δ`.
pub fn riemannian_grad(delta: &Matrix, s: &Matrix) -> Result<Matrix> {
    let residual = delta.stiefel_residual();
    if residual > MANIFOLD_TOL {
        return Err(Error::InfeasiblePoint { residual });
    }
    if delta.shape() != s.shape() {
        return Err(Error::DimensionMismatch(format!(
            "subgradient is {}x{}, point is {}x{}",
            s.rows(),
            s.cols(),
            delta.rows(),
            delta.cols()
        )));
    }
    let phi = delta.transpose().try_matmul(s)?.sym_part();
    Ok(s - &(delta * &phi))
}

/// Starting aligner for `init`.
pub fn initial_point(obj: &SliceObjective, init: &Init) -> Result<Matrix> {
    let (d_x, d_y) = (obj.d_x(), obj.d_y());
    match init {
        Init::PaddedIdentity => Ok(Matrix::padded_identity(d_y, d_x)),
        Init::Given(m) => {
            if m.shape() != (d_y, d_x) {
                return Err(Error::DimensionMismatch(format!(
                    "initial aligner is {}x{}, expected {d_y}x{d_x}",
                    m.rows(),
                    m.cols()
                )));
            }
            Ok(m.clone())
        }
        Init::GaussianAlignment => {
            let (mu, nu) = match obj.backend() {
                Backend::Gaussian { mu, nu } => (mu.clone(), nu.clone()),
                Backend::Empirical { mu, nu } => (
                    GaussianMeasure::new(mu.second_moment_matrix())?,
                    GaussianMeasure::new(nu.second_moment_matrix())?,
                ),
            };
            Ok(sliced_igw_gaussian(&mu, &nu)?.delta_star)
        }
    }
}

fn is_degenerate(obj: &SliceObjective) -> bool {
    obj.second_moments().0 == 0.0
}

fn retract(m: &Matrix) -> Result<Matrix> {
    Ok(qr_positive(m)?.0)
}

/// Subgradient method on `H`: `Δ_{k+1} = Δ_k − η_k G_k` with
/// `G_k ∈ ∂H(Δ_k)`, run for exactly `max_iters` steps. Records hold
/// `F(A(Δ_k))`, the residual of `Δ_k` and `‖G_k‖_F` for `k = 1..=max_iters+1`.
/// The reported point is the Q factor of the last iterate.
pub fn run_cd_subgradient(obj: &SliceObjective, cfg: &OptimizerConfig) -> Result<OptimizerTrace> {
    cfg.validate()?;
    let mut delta = initial_point(obj, &cfg.init)?;
    let residual = delta.stiefel_residual();
    if residual.is_nan() || residual > CD_INIT_RESIDUAL {
        return Err(Error::InfeasibleInit {
            residual,
            limit: CD_INIT_RESIDUAL,
        });
    }
    if is_degenerate(obj) {
        let f = obj.value(&delta)?;
        return Ok(OptimizerTrace {
            iterates: vec![IterationRecord {
                iteration: 1,
                objective: f,
                feasibility_residual: residual,
                grad_norm: 0.0,
            }],
            final_objective: obj.value(&retract(&delta)?)?,
            final_h: Some(h_value(obj, &delta, cfg.beta)?),
            final_point: StiefelPoint::new(retract(&delta)?),
            converged_reason: ConvergedReason::GradTol,
        });
    }

    let mut iterates = Vec::with_capacity(cfg.max_iters + 1);
    let mut final_h = 0.0;
    for k in 1..=cfg.max_iters + 1 {
        let (f, h, g) = h_value_and_subgradient(obj, &delta, cfg.beta)?;
        let grad_norm = g.frobenius_norm();
        iterates.push(IterationRecord {
            iteration: k,
            objective: f,
            feasibility_residual: delta.stiefel_residual(),
            grad_norm,
        });
        final_h = h;
        if k > cfg.max_iters {
            break;
        }
        let eta = cfg.step_size(k, grad_norm);
        delta -= &g.scaled(eta);
        if !delta.is_finite() {
            return Err(Error::NonFinite);
        }
    }
    let q = retract(&delta)?;
    Ok(OptimizerTrace {
        iterates,
        final_objective: obj.value(&q)?,
        final_point: StiefelPoint::new(q),
        converged_reason: ConvergedReason::MaxIters,
        final_h: Some(final_h),
    })
}

/// Riemannian subgradient method with QR retraction. Each step starts at
/// `η = 1` and halves until the Armijo condition
/// `F(R(Δ − ηG)) ≤ F(Δ) − α·η‖G‖²` holds or `backtrack_max` halvings fail.
pub fn run_riemannian_subgradient(obj: &SliceObjective, cfg: &OptimizerConfig) -> Result<OptimizerTrace> {
    cfg.validate()?;
    let mut delta = initial_point(obj, &cfg.init)?;
    let residual = delta.stiefel_residual();
    if residual.is_nan() || residual > MANIFOLD_TOL {
        return Err(Error::InfeasibleInit {
            residual,
            limit: MANIFOLD_TOL,
        });
    }
    let mut iterates = Vec::with_capacity(cfg.max_iters);
    let mut reason = ConvergedReason::MaxIters;
    let mut f = obj.value(&delta)?;
    for k in 1..=cfg.max_iters {
        let (_, s) = obj.value_and_subgradient(&delta)?;
        let g = if is_degenerate(obj) {
            Matrix::zeros(delta.rows(), delta.cols())
        } else {
            riemannian_grad(&delta, &s)?
        };
        let grad_norm = g.frobenius_norm();
        iterates.push(IterationRecord {
            iteration: k,
            objective: f,
            feasibility_residual: delta.stiefel_residual(),
            grad_norm,
        });
        if grad_norm < cfg.grad_tol {
            reason = ConvergedReason::GradTol;
            break;
        }
        let mut eta = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.backtrack_max {
            let trial = retract(&(&delta - &g.scaled(eta)))?;
            let ft = obj.value(&trial)?;
            if ft <= f - cfg.backtrack_alpha * eta * grad_norm * grad_norm {
                accepted = Some((trial, ft));
                break;
            }
            eta *= 0.5;
        }
        match accepted {
            Some((trial, ft)) => {
                delta = trial;
                f = ft;
            }
            None => {
                reason = ConvergedReason::BacktrackExhausted;
                break;
            }
        }
    }
    Ok(OptimizerTrace {
        iterates,
        final_point: StiefelPoint::new(delta),
        converged_reason: reason,
        final_objective: f,
        final_h: None,
    })
}
