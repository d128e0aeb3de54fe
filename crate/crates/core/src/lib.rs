//! Two-stage uplink beamforming for large antenna arrays.
//!
//! The beam domain of an `N`-antenna uniform linear array is split into `S`
//! contiguous sectors of `D = N / S` DFT beams. For every user the projection
//! of its optimal MMSE receive vector onto each sector is approximated by a
//! deterministic equivalent that depends only on the channel correlation
//! matrices. Sectors whose projection exceeds a fraction `delta` of the
//! per-user maximum form the outer beamformer, and a reduced-dimension MMSE
//! inner receiver is computed on top of it.
//!
//! Modules:
//! - [`channel_model`]: one-ring correlation matrices and correlated Rayleigh draws
//! - [`sectorization`]: unitary DFT beams and their partition into sectors
//! - [`exact_receivers`]: full-dimension MMSE / matched filter, SINR and the exact projections
//! - [`det_equiv`]: fixed-point deterministic equivalents of the projections
//! - [`tsb`]: sector selection, outer beamformers and inner receivers
//! - [`harness`]: seeded Monte Carlo studies, configuration and result emission

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel_model;
pub mod det_equiv;
mod error;
pub mod exact_receivers;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod sectorization;
pub mod tsb;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
