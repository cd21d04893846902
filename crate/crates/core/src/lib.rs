//! Compactly supported N-band wavelet filter banks.
//!
//! A bank of `N` finite filters is the same object as a polynomial loop
//! `A: T -> U_N(C)`; this crate moves between the two representations,
//! builds the loop from elementary projection factors ("spin vectors"),
//! realizes the bank as a system of isometries satisfying the Cuntz
//! relations, runs the cascade algorithm for the scaling function and
//! wavelets, and performs exact periodic subband transforms.
//!
//! Modules:
//!
//! - [`filters`]: tap sequences, QMF checks, symbols, presets.
//! - [`loops`]: polyphase loops, unitarity, spin synthesis and factorization.
//! - [`cuntz`]: periodized isometries, subband ladder, reducibility detectors.
//! - [`cascade`]: scaling function and wavelets on N-adic grids.
//! - [`transform`]: multi-level analysis/synthesis with Parseval accounting.
//! - [`io`]: JSON and CSV file formats.

pub mod cascade;
pub mod cuntz;
pub mod error;
pub mod filters;
pub mod io;
pub mod linalg;
pub mod loops;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Tolerance for identities that hold exactly in exact arithmetic.
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for identities checked by sampling the unit circle.
pub const SAMPLED_TOL: f64 = 1e-8;
