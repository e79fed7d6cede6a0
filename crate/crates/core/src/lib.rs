//! Randomized algorithms for the discrete empirical interpolation method
//! (DEIM).
//!
//! * [`matcore`] – dense kernels (SVD, QR variants, canonical angles).
//! * [`rangefinder`] – randomized construction of the interpolation basis.
//! * [`pointsel`] – deterministic and randomized point selection.
//! * [`deimcore`] – the DEIM projector and every error bound and constant
//!   used to judge it.

pub mod deimcore;
pub mod error;
pub mod matcore;
pub mod pointsel;
pub mod rangefinder;

pub use error::{Error, Result};
pub use matcore::DenseMatrix;
