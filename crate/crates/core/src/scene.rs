//! A set of input meshes with global facet and edge references.

use alloc::vec::Vec;

use crate::math::{Aabb, Plane, Vec3};
use crate::mesh::Mesh;

/// Facet `facet` of input mesh `mesh`. Ordered by mesh first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FacetRef {
    pub mesh: u32,
    pub facet: u32,
}

impl FacetRef {
    pub fn new(mesh: usize, facet: u32) -> Self {
        FacetRef { mesh: mesh as u32, facet }
    }
}

/// An input edge: vertex indices ascending, `facets[0]` holds the directed edge
/// `vertices[0] -> vertices[1]` (so it lies on the left of that direction).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeRef {
    pub mesh: u32,
    pub vertices: [u32; 2],
    pub facets: [u32; 2],
}

impl EdgeRef {
    pub fn facet_refs(&self) -> [FacetRef; 2] {
        [
            FacetRef { mesh: self.mesh, facet: self.facets[0] },
            FacetRef { mesh: self.mesh, facet: self.facets[1] },
        ]
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub meshes: Vec<Mesh>,
    /// Absolute tolerance for on-plane and on-edge decisions.
    pub eps: f64,
}

impl Scene {
    pub fn new(meshes: Vec<Mesh>) -> Scene {
        let b = meshes.iter().fold(Aabb::EMPTY, |b, m| b.merge(&m.bounding_box()));
        let eps = 1e-12 * b.diagonal().max(f64::MIN_POSITIVE);
        Scene { meshes, eps }
    }

    pub fn len(&self) -> usize {
        self.meshes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meshes.is_empty()
    }

    pub fn bounding_box(&self) -> Aabb {
        self.meshes.iter().fold(Aabb::EMPTY, |b, m| b.merge(&m.bounding_box()))
    }

    pub fn facet_count(&self) -> usize {
        self.meshes.iter().map(|m| m.facet_count()).sum()
    }

    #[inline]
    pub fn mesh(&self, f: FacetRef) -> &Mesh {
        &self.meshes[f.mesh as usize]
    }

    #[inline]
    pub fn plane(&self, f: FacetRef) -> &Plane {
        self.meshes[f.mesh as usize].plane(f.facet)
    }

    #[inline]
    pub fn loop_of(&self, f: FacetRef) -> &[u32] {
        self.meshes[f.mesh as usize].facet(f.facet)
    }

    pub fn points(&self, f: FacetRef) -> impl Iterator<Item = Vec3> + Clone + '_ {
        self.meshes[f.mesh as usize].facet_points(f.facet)
    }

    pub fn facet_bounds(&self, f: FacetRef) -> &Aabb {
        self.meshes[f.mesh as usize].facet_bounds(f.facet)
    }

    pub fn all_facets(&self) -> impl Iterator<Item = FacetRef> + '_ {
        self.meshes
            .iter()
            .enumerate()
            .flat_map(|(i, m)| (0..m.facet_count() as u32).map(move |f| FacetRef::new(i, f)))
    }

    /// Edge leaving slot `k` of facet `f`.
    pub fn edge(&self, f: FacetRef, k: usize) -> EdgeRef {
        let m = self.mesh(f);
        let lp = m.facet(f.facet);
        let (a, b) = (lp[k], lp[(k + 1) % lp.len()]);
        let g = m.opposite(f.facet, k);
        if a < b {
            EdgeRef { mesh: f.mesh, vertices: [a, b], facets: [f.facet, g] }
        } else {
            EdgeRef { mesh: f.mesh, vertices: [b, a], facets: [g, f.facet] }
        }
    }

    pub fn edge_points(&self, e: &EdgeRef) -> (Vec3, Vec3) {
        let m = &self.meshes[e.mesh as usize];
        (m.vertex(e.vertices[0]), m.vertex(e.vertices[1]))
    }
}
