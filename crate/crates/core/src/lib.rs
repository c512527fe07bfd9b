//! Numerical laboratory for the homogenization of Laplacians on perforated
//! domains.
//!
//! The crate builds domains with periodic lattices of shrinking circular holes,
//! discretizes the Dirichlet, Neumann and Robin problems with P1 finite
//! elements, and compares them against the homogenized operator
//! `-Δ + 1 + μ` carrying the capacity ("strange") term `μ`.
//!
//! Layout:
//! - [`geometry`]: hole lattices, radius rules, strange-term constants.
//! - [`mesh`]: structured and perforated triangulations, radial grids.
//! - [`assembly`]: sparse P1 operators and the identification maps.
//! - [`solvers`]: sparse factorization, Krylov solvers, eigen windows,
//!   operator norms and semigroup propagation.
//! - [`lab`]: correctors, capacities, resolvent sweeps and decay checks.
//! - [`spectral`]: Hausdorff distances of spectra, numerical ranges, sectors.

pub mod assembly;
pub mod complex;
pub mod error;
pub mod geometry;
pub mod lab;
pub mod mesh;
pub mod quadrature;
pub mod solvers;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
