//! Candidate classification: indicator vectors at points and the final-vertex tests.

use crate::boolfn::{BoolFn, BoolFnError, ClassVec, IndicatorVector, Slot};
use crate::math::Vec3;
use crate::predicates::{shoot_ray_global, shoot_ray_local, Degeneracy, Fragment};
use crate::scene::{EdgeRef, FacetRef, Scene};
use alloc::vec::Vec;

/// What produced a vertex. Also its identity: equal provenance means the same vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    /// An input vertex.
    Vertex { mesh: u32, vertex: u32 },
    /// An input edge crossing a facet of another mesh.
    EdgeFacet { edge: EdgeRef, facet: FacetRef },
    /// Three facets of distinct meshes, sorted.
    Triple([FacetRef; 3]),
}

impl Provenance {
    pub fn order(&self) -> usize {
        match self {
            Provenance::Vertex { .. } => 1,
            Provenance::EdgeFacet { .. } => 2,
            Provenance::Triple(_) => 3,
        }
    }

    /// Meshes whose surface contains the vertex, ascending.
    pub fn meshes(&self) -> ([usize; 3], usize) {
        match self {
            Provenance::Vertex { mesh, .. } => ([*mesh as usize, 0, 0], 1),
            Provenance::EdgeFacet { edge, facet } => {
                let (a, b) = (edge.mesh as usize, facet.mesh as usize);
                ([a.min(b), a.max(b), 0], 2)
            }
            Provenance::Triple(t) => ([t[0].mesh as usize, t[1].mesh as usize, t[2].mesh as usize], 3),
        }
    }
}

/// A vertex of the output surface.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalVertex {
    pub pos: Vec3,
    pub prov: Provenance,
    pub indicator: IndicatorVector,
    pub class: ClassVec,
}

impl FinalVertex {
    pub fn order(&self) -> usize {
        self.prov.order()
    }
}

/// The two bits differ: flipping the owner mesh changes f.
pub fn is_final1(c: ClassVec) -> bool {
    c.get(0) != c.get(1)
}

/// f changes across both surfaces, and not only along one of them.
pub fn is_final2(c: ClassVec) -> bool {
    let b = c.bits;
    (b & 0b0011) != (b >> 2 & 0b0011) && (b & 0b0101) != (b >> 1 & 0b0101)
}

/// Positions of the slice with the given axis bit clear, as a mask on the 8-bit vector.
const SLICE_LOW: [u8; 3] = [0x0f, 0x33, 0x55];
const SLICE_SHIFT: [u32; 3] = [4, 2, 1];

/// All three pairs of opposite 4-bit slices differ.
pub fn is_final3(c: ClassVec) -> bool {
    (0..3).all(|a| {
        let lo = c.bits & SLICE_LOW[a];
        let hi = (c.bits >> SLICE_SHIFT[a]) & SLICE_LOW[a];
        lo != hi
    })
}

pub fn is_final(c: ClassVec) -> bool {
    match c.order {
        1 => is_final1(c),
        2 => is_final2(c),
        3 => is_final3(c),
        _ => false,
    }
}

/// Why a rejected candidate was rejected: uniform (inside or outside) or with an
/// axis along which f does not change.
pub fn rejection_is_explained(c: ClassVec) -> bool {
    let full = ((1u16 << c.len()) - 1) as u8;
    if c.bits == 0 || c.bits == full {
        return true;
    }
    match c.order {
        1 => false,
        2 => (c.bits & 0b0011) == (c.bits >> 2 & 0b0011) || (c.bits & 0b0101) == (c.bits >> 1 & 0b0101),
        3 => (0..3).any(|a| (c.bits & SLICE_LOW[a]) == ((c.bits >> SLICE_SHIFT[a]) & SLICE_LOW[a])),
        _ => false,
    }
}

/// Source of the inside/outside bit of a point with respect to one mesh.
pub trait IndicatorSource {
    fn bit(&self, x: Vec3, mesh: usize) -> Result<bool, Degeneracy>;
}

/// Ray shooting against whole meshes.
pub struct GlobalRays<'a> {
    pub scene: &'a Scene,
}

impl IndicatorSource for GlobalRays<'_> {
    fn bit(&self, x: Vec3, mesh: usize) -> Result<bool, Degeneracy> {
        if self.scene.meshes[mesh].facet_count() == 0 {
            return Ok(false);
        }
        shoot_ray_global(self.scene, mesh, x)
    }
}

/// Inside a KD cell: inherited bits where the cell indicator is defined, local rays
/// against the cell's fragments otherwise.
pub struct CellContext<'a> {
    pub scene: &'a Scene,
    pub indicator: &'a IndicatorVector,
    /// Fragments per mesh (empty for meshes absent from the cell).
    pub fragments: Vec<Vec<&'a Fragment>>,
}

impl IndicatorSource for CellContext<'_> {
    fn bit(&self, x: Vec3, mesh: usize) -> Result<bool, Degeneracy> {
        match self.indicator.get(mesh) {
            Slot::Zero => Ok(false),
            Slot::One => Ok(true),
            _ => {
                let frags = &self.fragments[mesh];
                if frags.is_empty() {
                    shoot_ray_global(self.scene, mesh, x)
                } else {
                    shoot_ray_local(self.scene, x, frags)
                }
            }
        }
    }
}

/// Indicator vector at `x`: `s` on the meshes of the provenance, the source's bit elsewhere.
pub fn point_indicator(
    x: Vec3,
    prov: &Provenance,
    arity: usize,
    src: &dyn IndicatorSource,
) -> Result<IndicatorVector, Degeneracy> {
    let (ms, k) = prov.meshes();
    let mut iv = IndicatorVector::filled(arity, Slot::Zero);
    for i in 0..arity {
        if ms[..k].contains(&i) {
            iv.set(i, Slot::Surface);
        } else if src.bit(x, i)? {
            iv.set(i, Slot::One);
        }
    }
    Ok(iv)
}

/// Flip-probe a candidate and keep it if it is a vertex of the result.
pub fn classify_candidate(
    f: &BoolFn,
    pos: Vec3,
    prov: Provenance,
    indicator: IndicatorVector,
) -> Result<Option<FinalVertex>, BoolFnError> {
    let (ms, k) = prov.meshes();
    let class = f.flip_probe(&indicator, &ms[..k])?;
    if is_final(class) {
        Ok(Some(FinalVertex { pos, prov, indicator, class }))
    } else {
        debug_assert!(rejection_is_explained(class), "unexplained rejection {class:?}");
        Ok(None)
    }
}
