//! Closed forms for centered Gaussians.
//!
//! With spectra `λ_1 ≥ … ≥ λ_d` (the shorter one zero-padded):
//!
//! ```text
//! sliced IGW² = ((tr Σ_μ − tr Σ_ν)² + 2 Σ_i (λ_i(Σ_μ) − λ_i(Σ_ν))²) / (d_y (d_y + 2))
//! IGW²        = Σ_i (λ_i(Σ_μ) − λ_i(Σ_ν))²
//! ```
//!
//! The sliced optimum is attained at `Δ* = V J Uᵀ`, where `U`, `V` are the
//! eigenbases of `Σ_μ`, `Σ_ν` and `J = [I; 0]`.

use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eigen, Matrix, SymmetricEigen};
use crate::measures::GaussianMeasure;

/// Negative eigenvalues down to `−CLAMP_TOL·‖Σ‖_F` are treated as roundoff.
pub const CLAMP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianAlignment {
    pub delta_star: Matrix,
    pub sliced_igw_squared: f64,
}

/// Eigendecomposition with descending, clamped-nonnegative eigenvalues.
fn spectrum(g: &GaussianMeasure) -> Result<SymmetricEigen> {
    let cov = g.covariance();
    let mut eig = sym_eigen(cov)?;
    let floor = -CLAMP_TOL * cov.frobenius_norm();
    for v in eig.values.iter_mut() {
        if *v < floor {
            return Err(Error::NotPsd { eigenvalue: *v });
        }
        *v = v.max(0.0);
    }
    Ok(eig)
}

fn padded_squared_gap(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let d = a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0);
            d * d
        })
        .sum()
}

pub fn sliced_igw_gaussian(mu: &GaussianMeasure, nu: &GaussianMeasure) -> Result<GaussianAlignment> {
    let (d_x, d_y) = (mu.dim(), nu.dim());
    if d_x > d_y {
        return Err(Error::DimensionOrder { d_x, d_y });
    }
    let em = spectrum(mu)?;
    let en = spectrum(nu)?;
    let tr_gap = mu.second_moment() - nu.second_moment();
    let gap = padded_squared_gap(&em.values, &en.values);
    let sliced_igw_squared = (tr_gap * tr_gap + 2.0 * gap) / (d_y * (d_y + 2)) as f64;
    let vj = Matrix::from_fn(d_y, d_x, |i, j| en.vectors[(i, j)]);
    let delta_star = &vj * &em.vectors.transpose();
    Ok(GaussianAlignment {
        delta_star,
        sliced_igw_squared,
    })
}

/// Unsliced IGW between centered Gaussians (not squared).
pub fn igw_gaussian(mu: &GaussianMeasure, nu: &GaussianMeasure) -> Result<f64> {
    let em = spectrum(mu)?;
    let en = spectrum(nu)?;
    Ok(padded_squared_gap(&em.values, &en.values).sqrt())
}

/// `(a − b)²` with `a = θᵀΔΣ_μΔᵀθ`, `b = θᵀΣ_νθ`.
pub fn projected_igw_gaussian(
    mu: &GaussianMeasure,
    nu: &GaussianMeasure,
    delta: &Matrix,
    theta: &[f64],
) -> Result<f64> {
    let a = mu.projected_variance(theta, Some(delta))?;
    let b = nu.projected_variance(theta, None)?;
    Ok((a - b) * (a - b))
}

/// Exact expectation over uniform `θ` of the projected cost at any `Δ`:
/// `((tr C)² + 2‖C‖_F²) / (d_y(d_y+2))` with `C = ΔΣ_μΔᵀ − Σ_ν`.
pub fn population_sliced_cost(mu: &GaussianMeasure, nu: &GaussianMeasure, delta: &Matrix) -> Result<f64> {
    let (d_x, d_y) = (mu.dim(), nu.dim());
    if delta.shape() != (d_y, d_x) {
        return Err(Error::DimensionMismatch(format!(
            "aligner is {}x{}, expected {d_y}x{d_x}",
            delta.rows(),
            delta.cols()
        )));
    }
    let c = &(&(delta * mu.covariance()) * &delta.transpose()) - nu.covariance();
    let tr = c.trace();
    Ok((tr * tr + 2.0 * dot(c.as_slice(), c.as_slice())) / (d_y * (d_y + 2)) as f64)
}
