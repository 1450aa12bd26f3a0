//! Dense factorizations: SVD, pivoted QR, interpolative decomposition,
//! leverage scores and spectral norms.

pub mod id;
pub mod leverage;
pub mod norms;
pub mod pivoted_qr;
pub mod svd;

pub use id::{bound_id, interpolative_decomposition, IdFactorization};
pub use leverage::{coherence, leverage_scores, row_leverage_scores, LeverageScores};
pub use norms::{power_iteration_norm, spectral_norm, LinearOperator, PowerIteration};
pub use pivoted_qr::{pivoted_qr, PivotedQr};
pub use svd::{epsilon_rank, singular_values, svd, SvdFactors};
