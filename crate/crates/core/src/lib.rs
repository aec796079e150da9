pub mod analysis;
pub mod error;
pub mod experiments;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod rng;
pub mod slicing;
pub mod stiefel;
pub mod univariate;
