//! Numerical toolkit for 1D fractional semilinear ground-state problems:
//! dense fractional-Laplacian discretization, Newton ground-state solvers on
//! the interval and the (truncated) line, weighted linearized spectra in
//! parity sectors, Picone-identity audits, Caffarelli-Silvestre extensions
//! with nodal-domain analysis, and continuation in the nonlinearity exponent.

pub mod continuation;
pub mod error;
pub mod extension;
pub mod grid;
pub mod groundstate;
pub mod nodal;
pub mod op;
pub mod picone;
pub mod special;
pub mod spectrum;

pub use error::{FracError, Result};
pub use extension::ExtensionField;
pub use grid::{DomainKind, Grid1D, GridFunction, Parity};
pub use groundstate::{GroundState, SolveOptions};
pub use op::{FracOp, Sector, SectorSystem};
pub use spectrum::SpectrumResult;
