//! Output facets from classified vertices: looplets, loop chaining, tesselation.

pub mod facets;
pub mod looplets;
pub mod tesselate;

pub use facets::{canonical_loop, csg_facets, OutputFacet};
pub use looplets::{vertex_looplets, DirKey, Looplet};
pub use tesselate::{tesselate_facet, Tesselation};
