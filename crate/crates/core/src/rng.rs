//! Seeded random streams.
//!
//! Every randomized routine takes an explicit `u64` seed. Independent work
//! items (repetitions, matrix pairs) draw from child streams of the same
//! ChaCha8 key: `stream(seed, k)` is the generator seeded by `seed` with its
//! stream id set to `k`, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{qr_positive, Matrix};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Matrix of i.i.d. standard normal entries, filled row by row.
pub fn standard_normal_matrix<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed point of the Stiefel manifold: the Q factor of a
/// Gaussian `rows × cols` matrix.
pub fn random_stiefel<R: rand::Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Result<Matrix> {
    Ok(qr_positive(&standard_normal_matrix(rng, rows, cols))?.0)
}
