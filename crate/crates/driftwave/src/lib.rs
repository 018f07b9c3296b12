//! Numerical toolkit for constant-coefficient Schrödinger operators with a
//! real drift, `∂_t u = i tr(Q ∇²u) + ⟨Bx, ∇u⟩ + F`: structural invariants of
//! the pair (Q, B), the propagator group U(t) on periodic lattices, and
//! desk-scale verification of the dispersive and space-time estimates the
//! invariants predict.
//!
//! The library is organised around the objects it computes:
//!
//! - [`linalg`]: dense kernels (matrix exponential, rank, spectra);
//! - [`gramian`]: the controllability Gramian Q(t) and the volume function
//!   V(t) = det Q(t);
//! - [`structure`]: canonical block ranks and the local homogeneous
//!   dimension D;
//! - [`regimes`]: classification into the volume-bound regimes and the
//!   admissible exponent pairs;
//! - [`grid`] / [`spectral`] / [`propagator`]: lattice fields, mapped
//!   Fourier transforms, and the group U(t);
//! - [`verification`]: pass/fail suites packaging the estimates;
//! - [`gallery`]: named fixtures with known ground truth;
//! - [`cli`]: the command-line front end over all of the above.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod cli;
pub mod gallery;
pub mod gramian;
pub mod grid;
pub mod linalg;
pub mod propagator;
pub mod quadrature;
pub mod regimes;
pub mod spectral;
pub mod structure;
pub mod verification;

pub use gramian::{gramian_at, volume, GramianMethod, GramianSample, OperatorSpec};
pub use grid::{GridSpec, WaveField};
pub use propagator::{propagate, PropagationMethod};
pub use regimes::{admissible_pair, classify, strichartz_pair, RegimeReport};
pub use structure::{analyze_structure, StructureReport};
