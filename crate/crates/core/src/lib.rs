#![cfg_attr(not(feature = "std"), no_std)]
//! Levi–Kähler quotients of products of odd spheres.
//!
//! Conventions: the affine chart 𝒜 ≅ ℝ^m, with h ≅ ℝ^{m+1} the space of affine
//! functions on it, constant term first.

extern crate alloc;

pub mod affine;
pub mod calabi;
pub mod cube;
pub mod curvature;
pub mod error;
pub mod fixtures;
pub mod levi;
pub mod polytope;
pub mod potential;
pub mod quad;
pub mod sampling;
pub mod scalar;
pub mod sphere_lab;

pub use affine::AffineFunction;
pub use error::{Error, Result};
pub use polytope::{FaceLattice, FacetSet, Grouping, LabelledPolytope};
