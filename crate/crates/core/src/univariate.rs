//! Closed-form inner-product GW and 2-Wasserstein distances on the line.
//!
//! Both reduce to quantile couplings. IGW picks the better of the monotone
//! coupling (quantiles paired in the same order) and the antitone coupling
//! (one side reversed):
//!
//! ```text
//! IGW(μ,ν)² = M₂(μ)² + M₂(ν)² − 2·max{ (∫xy dπ_mono)², (∫xy dπ_anti)² }
//! ```
//!
//! Weighted and unequal-size inputs go through a northwest-corner sweep over
//! the two sorted weight sequences; equal-size uniform inputs reduce to
//! index-to-index pairing of the sorted values.

use serde::Serialize;

use crate::measures::UnivariateSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Monotone,
    Antitone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnivariateIgw {
    pub igw_squared: f64,
    pub correlation_monotone: f64,
    pub correlation_antitone: f64,
    pub chosen: Orientation,
    pub m2_mu: f64,
    pub m2_nu: f64,
}

impl UnivariateIgw {
    pub fn igw(&self) -> f64 {
        self.igw_squared.sqrt()
    }

    /// Correlation of the selected coupling.
    pub fn chosen_correlation(&self) -> f64 {
        match self.chosen {
            Orientation::Monotone => self.correlation_monotone,
            Orientation::Antitone => self.correlation_antitone,
        }
    }
}

/// Weights of one side, listed in ascending order of the values.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SortedWeights<'a> {
    Uniform(usize),
    Sorted(&'a [f64]),
}

impl SortedWeights<'_> {
    fn len(&self) -> usize {
        match self {
            SortedWeights::Uniform(n) => *n,
            SortedWeights::Sorted(w) => w.len(),
        }
    }

    fn get(&self, k: usize) -> f64 {
        match self {
            SortedWeights::Uniform(n) => 1.0 / *n as f64,
            SortedWeights::Sorted(w) => w[k],
        }
    }
}

/// Walks the quantile coupling between two sides given in ascending order,
/// calling `visit(px, py, mass)` with ascending-order positions. With
/// `Antitone` the x side is traversed from its largest value down.
pub(crate) fn sweep_coupling(
    x: SortedWeights<'_>,
    y: SortedWeights<'_>,
    orientation: Orientation,
    mut visit: impl FnMut(usize, usize, f64),
) {
    let nx = x.len();
    let ny = y.len();
    if nx == 0 || ny == 0 {
        return;
    }
    let xpos = |k: usize| match orientation {
        Orientation::Monotone => k,
        Orientation::Antitone => nx - 1 - k,
    };
    if let (SortedWeights::Uniform(a), SortedWeights::Uniform(b)) = (x, y) {
        if a == b {
            let mass = 1.0 / a as f64;
            for k in 0..a {
                visit(xpos(k), k, mass);
            }
            return;
        }
    }

    // cumulative breakpoints of the two quantile functions
    let (mut i, mut j) = (0usize, 0usize);
    let mut cx = x.get(xpos(0));
    let mut cy = y.get(0);
    let mut cur = 0.0;
    loop {
        let next = cx.min(cy);
        let mass = next - cur;
        if mass > 0.0 {
            visit(xpos(i), j, mass);
        }
        cur = next;
        let advance_x = cx <= next;
        let advance_y = cy <= next;
        if advance_x {
            i += 1;
            if i == nx {
                break;
            }
            cx += x.get(xpos(i));
        }
        if advance_y {
            j += 1;
            if j == ny {
                break;
            }
            cy += y.get(j);
        }
    }
}

/// Integer key ordered like `f64::total_cmp`. The map is an involution.
fn sort_key(v: f64) -> i64 {
    let b = v.to_bits() as i64;
    b ^ (((b >> 63) as u64) >> 1) as i64
}

fn from_key(k: i64) -> f64 {
    f64::from_bits((k ^ (((k >> 63) as u64) >> 1) as i64) as u64)
}

/// Ascending order of `values` with ties kept in index order, and the
/// values in that order.
fn ascending_order(values: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut keyed: Vec<(i64, usize)> = values.iter().map(|&v| sort_key(v)).zip(0..).collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(k, i)| (i, from_key(k))).unzip()
}

/// A univariate sample rearranged in ascending order. `order[p]` is the
/// original index of the `p`-th smallest value.
#[derive(Debug, Clone)]
pub(crate) struct SortedSample {
    pub(crate) order: Vec<usize>,
    pub(crate) values: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl SortedSample {
    fn new(s: &UnivariateSample) -> Self {
        Self::from_parts(s.values(), s.weights(), s.has_uniform_weights())
    }

    pub(crate) fn from_parts(values: &[f64], weights: &[f64], uniform: bool) -> Self {
        let (order, sorted) = ascending_order(values);
        let weights = if uniform {
            None
        } else {
            Some(order.iter().map(|&k| weights[k]).collect())
        };
        Self {
            order,
            values: sorted,
            weights,
        }
    }

    /// Uniform weights, values sorted in place; `order` is left empty, so
    /// the result serves correlations but not coupling plans.
    pub(crate) fn uniform_unordered(values: Vec<f64>) -> Self {
        let mut keys: Vec<i64> = values.into_iter().map(sort_key).collect();
        keys.sort_unstable();
        let values = keys.into_iter().map(from_key).collect();
        Self {
            order: Vec::new(),
            values,
            weights: None,
        }
    }

    pub(crate) fn weights(&self) -> SortedWeights<'_> {
        match &self.weights {
            None => SortedWeights::Uniform(self.values.len()),
            Some(w) => SortedWeights::Sorted(w),
        }
    }
}

pub(crate) fn correlation_sorted(x: &SortedSample, y: &SortedSample, orientation: Orientation) -> f64 {
    let mut total = 0.0;
    sweep_coupling(x.weights(), y.weights(), orientation, |p, q, mass| {
        total += mass * x.values[p] * y.values[q];
    });
    total
}

/// `∫ xy dπ` under the monotone or antitone quantile coupling.
pub fn quantile_coupling_correlation(
    mu: &UnivariateSample,
    nu: &UnivariateSample,
    orientation: Orientation,
) -> f64 {
    correlation_sorted(&SortedSample::new(mu), &SortedSample::new(nu), orientation)
}

/// The coupling itself as `(index into mu, index into nu, mass)` triples.
pub fn quantile_coupling(
    mu: &UnivariateSample,
    nu: &UnivariateSample,
    orientation: Orientation,
) -> Vec<(usize, usize, f64)> {
    let x = SortedSample::new(mu);
    let y = SortedSample::new(nu);
    let mut plan = Vec::with_capacity(mu.len() + nu.len());
    sweep_coupling(x.weights(), y.weights(), orientation, |p, q, mass| {
        plan.push((x.order[p], y.order[q], mass));
    });
    plan
}

/// Relative size, against `M₂(μ)² + M₂(ν)²`, under which an IGW² value is
/// indistinguishable from zero.
pub const CANCELLATION_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Combines the two candidate correlations into the IGW value. Ties in
/// absolute value select the monotone coupling.
pub(crate) fn combine(m2_mu: f64, m2_nu: f64, mono: f64, anti: f64) -> (f64, Orientation) {
    let (best, chosen) = if mono.abs() >= anti.abs() {
        (mono, Orientation::Monotone)
    } else {
        (anti, Orientation::Antitone)
    };
    let scale = m2_mu * m2_mu + m2_nu * m2_nu;
    let raw = scale - 2.0 * best * best;
    debug_assert!(
        raw >= -1e-9 * scale.max(f64::MIN_POSITIVE),
        "cancellation larger than roundoff: {raw}"
    );
    // Below this the difference is roundoff from the cancellation itself.
    let value = if raw <= CANCELLATION_FLOOR * scale { 0.0 } else { raw };
    (value, chosen)
}

pub fn igw_1d(mu: &UnivariateSample, nu: &UnivariateSample) -> UnivariateIgw {
    let x = SortedSample::new(mu);
    let y = SortedSample::new(nu);
    let correlation_monotone = correlation_sorted(&x, &y, Orientation::Monotone);
    let correlation_antitone = correlation_sorted(&x, &y, Orientation::Antitone);
    let m2_mu = mu.second_moment();
    let m2_nu = nu.second_moment();
    let (igw_squared, chosen) = combine(m2_mu, m2_nu, correlation_monotone, correlation_antitone);
    UnivariateIgw {
        igw_squared,
        correlation_monotone,
        correlation_antitone,
        chosen,
        m2_mu,
        m2_nu,
    }
}

/// Squared 2-Wasserstein distance via the monotone quantile coupling.
pub fn w2_squared_1d(mu: &UnivariateSample, nu: &UnivariateSample) -> f64 {
    let x = SortedSample::new(mu);
    let y = SortedSample::new(nu);
    let mut total = 0.0;
    sweep_coupling(x.weights(), y.weights(), Orientation::Monotone, |p, q, mass| {
        let d = x.values[p] - y.values[q];
        total += mass * d * d;
    });
    total
}
