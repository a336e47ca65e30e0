//! Joint time-vertex fractional Fourier transforms with trainable orders.
//!
//! A time-varying graph signal is an `N x T` complex matrix: one column per
//! time step, one row per vertex. This crate builds fractional powers of the
//! graph Fourier transform and of the DFT, combines them into a joint
//! transform `F^beta (x) F_G^alpha` acting on column-stacked signals, and
//! learns the order pair `(alpha, beta)` (and optionally a diagonal spectral
//! filter) by gradient descent. On top of that sit Wiener-optimal filtering
//! in the fractional domain, synthetic denoising experiments, a grid-search
//! baseline, and runtime benchmarks.
//!
//! Module map:
//!
//! * [`numkit`] - dense complex linear algebra kernels with deterministic
//!   ordering and failure gates,
//! * [`graphs`] - graph construction, shift operators, and the graph Fourier
//!   factorization,
//! * [`fracops`] - fractional powers of a transform via its matrix logarithm,
//! * [`joint`] - the joint transform, its application, and order derivatives,
//! * [`signals`] - synthetic band-limited signals, structured noise, CSV I/O,
//! * [`filtering`] - diagonal spectral filters and the Wiener solve,
//! * [`learn`] - Adam, analytic gradients, transform and denoiser training,
//! * [`bench`] - grid-search baseline and runtime measurement.

// Linked for its cblas symbols; ndarray's matrix products route through them.
extern crate blas_src;

pub mod bench;
pub mod filtering;
pub mod fracops;
pub mod graphs;
pub mod joint;
pub mod learn;
pub mod numkit;
pub mod signals;
