//! Numerical primitives shared by every pricing route: the normal
//! distribution, covariance factorization, root bracketing, quadrature,
//! seeded random streams and Monte Carlo summaries.

mod linalg;
mod normal;
mod quad;
mod rng;
mod root;
mod stats;

pub use linalg::{factor_covariance, CovarianceSpec, LowerFactor};
pub use normal::{lognormal_mean, norm_cdf, norm_pdf, phi, INV_SQRT_2PI};
pub use quad::{adaptive_simpson, gauss_hermite, gaussian_expectation, GaussHermite};
pub use rng::{monte_carlo, NormalStream, DEFAULT_SEED};
pub use root::{bracket_scan, find_root};
pub use stats::McEstimate;
