//! Numerical engines for sublinear-expectation calculus over a variance
//! band, with a verification harness for the change-of-measure identity of
//! the driving process, including the degenerate-band perturbation limit.
//!
//! Two independent engines evaluate the same upper expectations:
//!
//! * [`pde`]: a monotone explicit finite-difference solver for the nonlinear
//!   heat equation `du/dt = G(d^2u/dx^2)`, with a backward recursion for
//!   cylinder functionals of up to three time points;
//! * [`tree`]: exact backward induction over adapted volatility controls on
//!   a finite Rademacher tree, which doubles as the brute-force oracle.
//!
//! [`stochastic`] supplies the exponential-martingale path functionals,
//! [`girsanov`] the identity checks and the epsilon-perturbation pipeline,
//! and [`acceptance`] the bundled pass/fail verification suite.
//!
//! Everything is generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases below fix `f64`, which is what the
//! CLI and the verification suite use.

pub mod acceptance;
pub mod error;
pub mod girsanov;
pub mod oracle;
pub mod pde;
pub mod phi;
pub mod scalar;
pub mod stochastic;
pub mod tree;
pub mod uncertainty;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Band64 = uncertainty::VolatilityBand<f64>;
pub type Generator64 = uncertainty::Generator<f64>;
pub type Functional64 = phi::Functional<f64>;
pub type PdeGrid64 = pde::PdeGrid<f64>;
pub type TreeSpec64 = tree::TreeSpec<f64>;
pub type SimpleProcess64 = stochastic::SimpleProcess<f64>;
pub type IntegrandSpec64 = stochastic::IntegrandSpec<f64>;
pub type GirsanovReport64 = girsanov::GirsanovReport<f64>;
