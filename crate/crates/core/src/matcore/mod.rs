//! Dense linear-algebra kernels: thin SVD, Householder QR (plain, pivoted,
//! strong rank-revealing), spectral norms, pseudoinverse application and
//! canonical angles.
//!
//! Everything here is a pure function of its inputs.

mod angles;
mod dense;
mod qr;
mod srrqr;
mod svd;

pub use angles::{canonical_angles, CanonicalAngles};
pub use dense::DenseMatrix;
pub use qr::{pivoted_qr, thin_qr, PivotedQr};
pub use srrqr::{srrqr, SrrqrFactors, DEFAULT_ETA};
pub use svd::{pinv_apply, spectral_norm, thin_svd, PinvApplied, ThinSvd, DEFAULT_RANK_TOL};

pub(crate) use svd::pinv_apply_with;
