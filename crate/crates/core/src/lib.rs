//! Closed characteristics on convex hypersurfaces in R^2n: symplectic normal
//! forms, Maslov-type index iteration, Krein stability and the numerical
//! checks that go with them.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! search and the command line live in the `pinchcheck` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod angle;
pub mod classify;
pub mod error;
pub mod flow;
pub mod galerkin;
pub mod index;
pub mod linalg;
pub mod ode;
pub mod orbit;
pub mod path;
pub mod spectral;
pub mod surface;
pub mod symplectic;

pub use angle::UnitAngle;
pub use error::{Error, Result};
pub use linalg::{CMat, Mat};
pub use path::SymplecticPath;
pub use symplectic::{NormalForm, SymplecticMatrix};
