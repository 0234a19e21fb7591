//! Plane geometry: the affine group ASL(2,ℝ) acting on row vectors, bounded
//! test regions, and enumeration of affine-lattice points inside a region.

mod affine;
mod enumerate;
mod region;

pub use affine::{AffineMap, Mat2, Vec2, DET_TOL};
pub use enumerate::{enumerate_affine_lattice, enumerate_affine_lattice_scan, LatticeHit};
pub use region::{BBox, HalfPlane, Region};
