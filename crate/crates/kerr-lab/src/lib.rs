//! Numerical laboratory for wave-equation machinery on Kerr and Schwarzschild
//! backgrounds at desk scale.
//!
//! The crate is organized around six pieces:
//!
//! - [`geometry`] -- exact metric components in Boyer-Lindquist and
//!   horizon-regular charts, the tortoise coordinate, and slowly decaying
//!   metric perturbation families.
//! - [`geodesic`] -- the Hamiltonian null flow, the trapped sphere
//!   `r = r_a(Phi/tau)`, and instability diagnostics.
//! - [`microlocal`] -- symbol algebra near the photon sphere: the tau
//!   factorization of the principal symbol, Poisson brackets, the
//!   sum-of-squares certification, and trapped-set vanishing checks.
//! - [`multiplier`] -- a concrete Schwarzschild Morawetz multiplier
//!   `(X, q, m)` with a numerical positivity audit.
//! - [`solver`] -- 1+1 mode wave evolution with energy, local-energy,
//!   Morawetz-identity, tail, and Gronwall diagnostics.
//! - [`runner`] -- config-driven experiment orchestration behind the `lab`
//!   CLI.

pub mod error;
pub mod fit;
pub mod geodesic;
pub mod geometry;
pub mod linalg;
pub mod microlocal;
pub mod multiplier;
pub mod profiles;
pub mod rng;
pub mod runner;
pub mod solver;

pub use error::LabError;
pub use geometry::KerrParams;
