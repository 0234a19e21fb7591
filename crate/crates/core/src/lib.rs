//! Simulation and statistics for the square-root spiral point set, its
//! rotated and stretched family, and the limiting random point process built
//! from affine lattices over the congruence subgroup Γ₂,₀(4).
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: affine maps of the plane, test regions and affine-lattice
//!   enumeration.
//! * [`sequences`]: fractional-part sequences, circular gaps and lattice
//!   direction statistics.
//! * [`spiral`]: the spiral set, its rotated/stretched images and the point
//!   matching against approximating affine lattices.
//! * [`haar`]: sampling random affine lattices and realizations of the limit
//!   process.
//! * [`stats`]: histograms, empirical distributions and distances.
//! * [`experiments`]: seeded Monte Carlo experiments and their reports.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod haar;
pub mod rng;
pub mod sequences;
pub mod spiral;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{AffineMap, Mat2, Region, Vec2};
