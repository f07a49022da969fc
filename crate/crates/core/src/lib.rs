//! Parallel proximal solvers for total-variation regularized least squares.
//!
//! The anisotropic TV penalty `λ‖Dx‖₁` is rewritten as an average of `K = 2D`
//! penalties, each a weighted ℓ₁ norm on the detail coefficients of one
//! shifted orthonormal Haar transform. Each of those has a closed-form
//! proximal (soft-thresholding in the transform domain), so a proximal
//! gradient iteration needs no inner solver:
//!
//! ```text
//! z  = x − γ Hᵀ(Hx − y)
//! x' = (1/K) Σ_k W_kᵀ T(W_k z; √2·K·γ·λ)
//! ```
//!
//! The crate provides the frame ([`frame`]), the proximal operators
//! ([`prox`]), the plain, accelerated and reference solvers with convergence
//! diagnostics ([`solvers`]), and the Shepp-Logan reconstruction experiment
//! ([`experiment`]).
//!
//! The `parallel` feature (on by default) evaluates the `K` proximals and the
//! rows of dense mat-vecs on the rayon pool. Reductions always run in a fixed
//! order, so serial and parallel runs agree bit for bit.

pub mod checks;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod frame;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod operators;
pub mod prox;
pub mod rng;
pub mod solvers;
mod vecops;

pub use error::{Result, TvError};
pub use exec::Execution;
pub use frame::{FrameCoefficients, ShiftedHaarFrame};
pub use grid::SignalGrid;
pub use operators::{DenseOperator, IdentityOperator, LinearOperator};
pub use rng::SeededRng;
