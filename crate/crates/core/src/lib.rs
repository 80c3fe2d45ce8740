//! N-ary boolean operations on closed polyhedral meshes.
//!
//! Output vertices are found directly by classifying candidate points (input
//! vertices, edge/facet crossings and facet triple points) against a boolean
//! function of all inputs at once; a KD exploration prunes regions whose
//! classification is already decided. Facets are rebuilt by chaining small
//! per-vertex loop fragments.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod boolfn;
pub mod bruteforce;
pub mod classify;
pub mod jitter;
pub mod kdtree;
pub mod math;
pub mod mesh;
pub mod pipeline;
pub mod predicates;
pub mod reconstruct;
pub mod scene;
pub mod shapes;
pub mod stats;

pub use boolfn::{BoolFn, CsgTree, IndicatorVector, Trit};
pub use math::{Aabb, Plane, Vec3};
pub use mesh::{Mesh, RawMesh};
pub use scene::{FacetRef, Scene};
