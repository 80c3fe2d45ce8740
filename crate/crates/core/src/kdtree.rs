//! Output-sensitive vertex search by recursive subdivision of the scene box.
//!
//! A cell carries the fragments of input facets cropped to its box and one slot per
//! input: `u` while the input has surface in the cell, otherwise inside or outside.
//! Cells whose ternary value is decided are dropped; cells with a single undecided
//! input only contribute that input's vertices; small cells are searched
//! exhaustively; the rest are split at the middle of their largest side.

use alloc::vec::Vec;

use crate::boolfn::{BoolFn, IndicatorVector, Slot, Trit};
use crate::bruteforce::{search_intersections, search_vertices};
use crate::classify::{classify_candidate, point_indicator, CellContext, FinalVertex};
use crate::math::{Aabb, Vec3};
use crate::predicates::{clip_polygon_axis, shoot_ray_global, Fragment};
use crate::scene::{FacetRef, Scene};
use crate::stats::Counters;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExplorationConfig {
    /// Cells with at most this many fragments become leaves.
    pub fmax: usize,
    /// Cells with fewer fragments are explored without spawning tasks.
    pub seq_threshold: usize,
    pub max_depth: u32,
    /// Split passes above this depth are themselves run in parallel.
    pub par_split_depth: u32,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig { fmax: 20, seq_threshold: 80, max_depth: 64, par_split_depth: 3 }
    }
}

impl ExplorationConfig {
    pub fn is_valid(&self) -> bool {
        self.fmax >= 1 && self.fmax <= self.seq_threshold
    }
}

#[derive(Clone, Debug)]
pub struct KdCell {
    pub bounds: Aabb,
    pub depth: u32,
    /// Zero, One or Undefined per input.
    pub indicator: IndicatorVector,
    pub fragments: Vec<Fragment>,
    /// Bounds of each input's fragments (empty when it has none).
    pub mesh_bounds: Vec<Aabb>,
}

impl KdCell {
    pub fn fragments_of(&self, mesh: usize) -> impl Iterator<Item = &Fragment> + '_ {
        self.fragments.iter().filter(move |f| f.facet.mesh as usize == mesh)
    }
}

/// What to do with a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Prune,
    SingleMesh(usize),
    Leaf,
    Split,
}

/// Fragments sorted to the two sides of a split plane. Built by one or more passes
/// over disjoint runs of the parent's fragments and merged in order.
#[derive(Clone, Debug)]
pub struct SplitAccum {
    pub axis: usize,
    pub value: f64,
    pub left: Vec<Fragment>,
    pub right: Vec<Fragment>,
    pub left_bounds: Vec<Aabb>,
    pub right_bounds: Vec<Aabb>,
    pub splits: u64,
    pub touches: u64,
}

impl SplitAccum {
    pub fn new(arity: usize, axis: usize, value: f64) -> Self {
        SplitAccum {
            axis,
            value,
            left: Vec::new(),
            right: Vec::new(),
            left_bounds: alloc::vec![Aabb::EMPTY; arity],
            right_bounds: alloc::vec![Aabb::EMPTY; arity],
            splits: 0,
            touches: 0,
        }
    }

    fn put(list: &mut Vec<Fragment>, bounds: &mut [Aabb], frag: Fragment) {
        let b = &mut bounds[frag.facet.mesh as usize];
        for p in &frag.poly {
            b.extend(*p);
        }
        list.push(frag);
    }

    pub fn push(&mut self, frag: &Fragment) {
        let (axis, c) = (self.axis, self.value);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &frag.poly {
            lo = lo.min(p[axis]);
            hi = hi.max(p[axis]);
        }
        if hi < c {
            Self::put(&mut self.left, &mut self.left_bounds, frag.clone());
        } else if hi == c {
            self.touches += 1;
            Self::put(&mut self.left, &mut self.left_bounds, frag.clone());
        } else if lo >= c {
            Self::put(&mut self.right, &mut self.right_bounds, frag.clone());
        } else {
            self.splits += 1;
            let (below, above) = clip_polygon_axis(&frag.poly, axis, c);
            if let Some(poly) = below {
                Self::put(&mut self.left, &mut self.left_bounds, Fragment { facet: frag.facet, poly });
            }
            if let Some(poly) = above {
                Self::put(&mut self.right, &mut self.right_bounds, Fragment { facet: frag.facet, poly });
            }
        }
    }

    /// Append a pass over a later run of fragments.
    pub fn merge(&mut self, mut o: SplitAccum) {
        self.left.append(&mut o.left);
        self.right.append(&mut o.right);
        for (a, b) in self.left_bounds.iter_mut().zip(&o.left_bounds) {
            *a = a.merge(b);
        }
        for (a, b) in self.right_bounds.iter_mut().zip(&o.right_bounds) {
            *a = a.merge(b);
        }
        self.splits += o.splits;
        self.touches += o.touches;
    }
}

/// Inside/outside of an input with respect to a neighbouring cell in which it has
/// no surface, read off its fragments on this side of the split plane.
///
/// `sigma` is +1 if the neighbour lies on the high side of the plane. The topmost
/// vertex toward the plane is found; among its incident fragment edges the one
/// reaching farthest per unit depth wins, ties broken by the sine of the angle to
/// the fragment's other edge. The winning facet's normal decides. `None` when an
/// edge is parallel to the plane or the normal is.
pub fn resolve_side_indicator<'a>(
    scene: &Scene,
    fragments: impl Iterator<Item = &'a Fragment> + Clone,
    axis: usize,
    sigma: f64,
) -> Option<bool> {
    let z = |p: Vec3| sigma * p[axis];
    let zmax = fragments.clone().flat_map(|f| f.poly.iter()).map(|p| z(*p)).fold(f64::NEG_INFINITY, f64::max);
    if !zmax.is_finite() {
        return None;
    }
    let down = Vec3::axis(axis) * sigma;
    let mut best: Option<(f64, f64, FacetRef)> = None;
    for frag in fragments {
        let k = frag.poly.len();
        for i in 0..k {
            let v = frag.poly[i];
            if z(v) != zmax {
                continue;
            }
            let vp = v - down;
            let extend = |e: Vec3| {
                let dz = zmax - z(e);
                if dz > 0.0 {
                    Some(v + (e - v) / dz)
                } else {
                    None
                }
            };
            let e0 = extend(frag.poly[(i + k - 1) % k])?;
            let e1 = extend(frag.poly[(i + 1) % k])?;
            for (e, other) in [(e0, e1), (e1, e0)] {
                let d = (e - vp).norm();
                let (a, b) = (vp - e, other - e);
                let s = a.cross(b).norm() / (a.norm() * b.norm());
                let better = match best {
                    None => true,
                    Some((bd, bs, _)) => d > bd || (d == bd && s > bs),
                };
                if better {
                    best = Some((d, s, frag.facet));
                }
            }
        }
    }
    let (_, _, facet) = best?;
    let comp = sigma * scene.plane(facet).normal[axis];
    if comp.abs() <= 1e-12 {
        return None;
    }
    Some(comp < 0.0)
}

/// Sequential and building-block interface to the exploration.
pub struct Explorer<'a> {
    pub scene: &'a Scene,
    pub f: &'a BoolFn,
    pub config: ExplorationConfig,
}

impl<'a> Explorer<'a> {
    pub fn new(scene: &'a Scene, f: &'a BoolFn, config: ExplorationConfig) -> Self {
        Explorer { scene, f, config }
    }

    /// The scene box, grown so every input vertex lies inside `[min, max)`.
    pub fn root(&self) -> KdCell {
        let n = self.scene.len();
        let b = self.scene.bounding_box();
        let bounds = if b.is_empty() { Aabb::new(Vec3::ZERO, Vec3::ZERO) } else { b.inflate(1e-7 * b.diagonal() + 1e-300) };
        let mut indicator = IndicatorVector::filled(n, Slot::Zero);
        let mut fragments = Vec::with_capacity(self.scene.facet_count());
        let mut mesh_bounds = alloc::vec![Aabb::EMPTY; n];
        for (i, m) in self.scene.meshes.iter().enumerate() {
            if m.facet_count() > 0 {
                indicator.set(i, Slot::Undefined);
                mesh_bounds[i] = m.bounding_box();
            }
            for f in 0..m.facet_count() as u32 {
                fragments.push(Fragment { facet: FacetRef::new(i, f), poly: m.facet_points(f).collect() });
            }
        }
        KdCell { bounds, depth: 0, indicator, fragments, mesh_bounds }
    }

    pub fn branch(&self, cell: &KdCell) -> Branch {
        if self.f.eval_cell(&cell.indicator) != Trit::Undefined {
            return Branch::Prune;
        }
        if cell.indicator.count(Slot::Undefined) == 1 {
            if let Some(i) = cell.indicator.positions(Slot::Undefined).next() {
                return Branch::SingleMesh(i);
            }
        }
        if cell.fragments.len() <= self.config.fmax || cell.depth >= self.config.max_depth {
            return Branch::Leaf;
        }
        Branch::Split
    }

    /// Input vertices of the given meshes that lie in the cell, each once.
    fn cell_vertices(&self, cell: &KdCell, only: Option<usize>) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for frag in &cell.fragments {
            let m = frag.facet.mesh;
            if only.is_some_and(|o| o != m as usize) {
                continue;
            }
            let mesh = &self.scene.meshes[m as usize];
            for &v in mesh.facet(frag.facet.facet) {
                if cell.bounds.contains_half_open(mesh.vertex(v)) {
                    out.push((m, v));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn context<'c>(&'c self, cell: &'c KdCell) -> CellContext<'c> {
        let mut fragments: Vec<Vec<&Fragment>> = alloc::vec![Vec::new(); self.scene.len()];
        for frag in &cell.fragments {
            fragments[frag.facet.mesh as usize].push(frag);
        }
        CellContext { scene: self.scene, indicator: &cell.indicator, fragments }
    }

    /// Only one input has surface here: its vertices are the candidates.
    pub fn single_mesh_vertices(&self, cell: &KdCell, mesh: usize, out: &mut Vec<FinalVertex>, counters: &mut Counters) {
        counters.single_mesh_cells += 1;
        let ctx = self.context(cell);
        for (m, v) in self.cell_vertices(cell, Some(mesh)) {
            let pos = self.scene.meshes[m as usize].vertex(v);
            let prov = crate::classify::Provenance::Vertex { mesh: m, vertex: v };
            match point_indicator(pos, &prov, self.f.arity(), &ctx) {
                Ok(iv) => {
                    if let Some(fv) = classify_candidate(self.f, pos, prov, iv).expect("indicator matches provenance") {
                        out.push(fv);
                    }
                }
                Err(_) => counters.undecided += 1,
            }
        }
    }

    /// Exhaustive search restricted to the cell.
    pub fn leaf_vertices(&self, cell: &KdCell, out: &mut Vec<FinalVertex>, counters: &mut Counters) {
        counters.leaves += 1;
        if cell.fragments.len() > self.config.fmax {
            counters.depth_limited += 1;
        }
        let ctx = self.context(cell);
        let vertices = self.cell_vertices(cell, None);
        search_vertices(self.scene, self.f, &vertices, &ctx, out, counters);
        let mut facets: Vec<FacetRef> = cell.fragments.iter().map(|f| f.facet).collect();
        facets.sort_unstable();
        facets.dedup();
        search_intersections(self.scene, self.f, &facets, Some(&cell.bounds), &ctx, out, counters);
    }

    pub fn split_plane(&self, cell: &KdCell) -> (usize, f64) {
        let axis = cell.bounds.largest_axis();
        (axis, 0.5 * (cell.bounds.min[axis] + cell.bounds.max[axis]))
    }

    pub fn split_pass(&self, cell: &KdCell, fragments: &[Fragment]) -> SplitAccum {
        let (axis, c) = self.split_plane(cell);
        let mut acc = SplitAccum::new(self.scene.len(), axis, c);
        for f in fragments {
            acc.push(f);
        }
        acc
    }

    /// Build the two children from a completed split pass.
    pub fn finish_split(&self, cell: &KdCell, acc: SplitAccum, counters: &mut Counters) -> (KdCell, KdCell) {
        counters.splits += acc.splits;
        counters.split_touches += acc.touches;
        let (axis, c) = (acc.axis, acc.value);
        let mut lb = cell.bounds;
        lb.max[axis] = c;
        let mut rb = cell.bounds;
        rb.min[axis] = c;
        let mut li = cell.indicator.clone();
        let mut ri = cell.indicator.clone();
        for i in cell.indicator.positions(Slot::Undefined) {
            let in_left = !acc.left_bounds[i].is_empty();
            let in_right = !acc.right_bounds[i].is_empty();
            if !in_left && in_right {
                li.set(i, self.vanishing_slot(&acc.right, i, axis, -1.0, &lb, counters));
            } else if in_left && !in_right {
                ri.set(i, self.vanishing_slot(&acc.left, i, axis, 1.0, &rb, counters));
            }
        }
        let depth = cell.depth + 1;
        (
            KdCell { bounds: lb, depth, indicator: li, fragments: acc.left, mesh_bounds: acc.left_bounds },
            KdCell { bounds: rb, depth, indicator: ri, fragments: acc.right, mesh_bounds: acc.right_bounds },
        )
    }

    fn vanishing_slot(
        &self,
        sibling: &[Fragment],
        mesh: usize,
        axis: usize,
        sigma: f64,
        child: &Aabb,
        counters: &mut Counters,
    ) -> Slot {
        let frags = sibling.iter().filter(|f| f.facet.mesh as usize == mesh);
        if let Some(b) = resolve_side_indicator(self.scene, frags, axis, sigma) {
            return Slot::from_bool(b);
        }
        counters.orientation_fallbacks += 1;
        match shoot_ray_global(self.scene, mesh, child.center()) {
            Ok(b) => Slot::from_bool(b),
            Err(_) => {
                counters.orientation_failures += 1;
                Slot::Undefined
            }
        }
    }

    pub fn split(&self, cell: KdCell, counters: &mut Counters) -> (KdCell, KdCell) {
        let acc = self.split_pass(&cell, &cell.fragments);
        self.finish_split(&cell, acc, counters)
    }

    /// Handle a cell up to the point of splitting; returns the children if it splits.
    pub fn visit(&self, cell: KdCell, out: &mut Vec<FinalVertex>, counters: &mut Counters) -> Option<(KdCell, KdCell)> {
        counters.cells += 1;
        match self.branch(&cell) {
            Branch::Prune => {
                counters.pruned += 1;
                None
            }
            Branch::SingleMesh(i) => {
                self.single_mesh_vertices(&cell, i, out, counters);
                None
            }
            Branch::Leaf => {
                self.leaf_vertices(&cell, out, counters);
                None
            }
            Branch::Split => Some(self.split(cell, counters)),
        }
    }

    /// Depth-first exploration, low child first.
    pub fn explore(&self, cell: KdCell, out: &mut Vec<FinalVertex>, counters: &mut Counters) {
        if let Some((l, r)) = self.visit(cell, out, counters) {
            self.explore(l, out, counters);
            self.explore(r, out, counters);
        }
    }
}

pub fn kd_vertices(scene: &Scene, f: &BoolFn, config: &ExplorationConfig) -> (Vec<FinalVertex>, Counters) {
    let ex = Explorer::new(scene, f, *config);
    let mut out = Vec::new();
    let mut counters = Counters::default();
    if !scene.is_empty() {
        ex.explore(ex.root(), &mut out, &mut counters);
    }
    (out, counters)
}
