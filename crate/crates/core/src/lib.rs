//! Robust partial quadratic eigenvalue assignment for second-order structural models.
//!
//! Given a structure `M x'' + C x' + K x = B u`, the crate computes state
//! feedback `u = F x' + G x` or derivative feedback `u = F x' + G x''` that
//! moves a handful of selected eigenvalues of `λ²M + λC + K` to chosen targets
//! while leaving every other eigenpair untouched. The gains come from a free
//! parameter matrix Γ, which is then tuned to minimise spectrum-sensitivity
//! costs using closed-form gradients.
//!
//! Module map:
//!
//! * [`model`]: problem data, validation, bundled examples, Matrix Market I/O.
//! * [`qep`]: quadratic eigensolver, partial spectrum selection, closed loops, κ₂.
//! * [`sylvester`]: dense Sylvester solver `A X − X B = R`.
//! * [`assign`]: Γ-parametrised no-spillover gain families.
//! * [`sensitivity`]: sensitivities of the eigenvalue sum and product.
//! * [`robustopt`]: cost functions, analytic gradients, BFGS driver.
//! * [`metrics`]: perturbation deviation, gain-norm ratio, κ₂ reduction.
//! * [`sim`]: forced time-domain response via RK4.

pub mod assign;
pub mod error;
pub mod linalg;
pub mod matching;
pub mod metrics;
pub mod model;
pub mod qep;
pub mod robustopt;
pub mod sensitivity;
pub mod sim;
pub mod sylvester;

pub use error::{Error, Result};
pub use model::{FeedbackGains, FeedbackKind, SecondOrderSystem};

pub use nalgebra::{DMatrix, DVector};
pub use nalgebra::Complex;

/// Double-precision complex scalar used for eigenvalues.
pub type C64 = Complex<f64>;
