//! Truncated Fourier fields on the 2-torus.
//!
//! Functions are represented by their Fourier coefficients on the symmetric
//! box `{-n_max..n_max}²` with the convention `u(x) = Σ_j û_j e^{i j·x}`,
//! `û_j = (2π)^{-2} ∫ u e^{-i j·x} dx`. The collocation grid has
//! `(2·n_max+1)²` points so the box is exactly symmetric and real fields
//! have exact conjugate symmetry.

mod field;
mod io;
mod truncation;

pub use field::{DiffKind, GridField, ZcsState};
pub use io::{read_snapshot, snapshot_bytes, write_snapshot};
pub use truncation::{Fft2, Grid, Truncation};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("truncation mismatch: n_max {0} vs {1}")]
    TruncationMismatch(usize, usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad snapshot header: {0}")]
    BadHeader(String),
}
