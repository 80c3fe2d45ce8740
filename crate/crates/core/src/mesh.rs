//! Indexed polyhedral meshes: topology pass, validation and measures.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math::{newell_normal, Aabb, Plane, Vec3};

/// Relative planarity tolerance (times the facet diameter).
pub const PLANARITY_TOL: f64 = 1e-9;

/// Vertex and facet arrays exactly as read from a file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawMesh {
    pub vertices: Vec<Vec3>,
    pub facets: Vec<Vec<u32>>,
}

impl RawMesh {
    pub fn new(vertices: Vec<Vec3>, facets: Vec<Vec<u32>>) -> Self {
        RawMesh { vertices, facets }
    }

    pub fn reversed(&self) -> RawMesh {
        let facets = self
            .facets
            .iter()
            .map(|f| f.iter().rev().copied().collect())
            .collect();
        RawMesh { vertices: self.vertices.clone(), facets }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeshError {
    IndexOutOfRange { facet: usize, index: u32 },
    /// A directed edge used twice, or an undirected edge shared by more than two facets.
    NonManifold { a: u32, b: u32 },
    /// A directed edge without its opposite.
    OpenSurface { a: u32, b: u32 },
    DegenerateFacet { facet: usize },
    NonConvexFacet { facet: usize },
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::IndexOutOfRange { facet, index } => {
                write!(f, "facet {facet} references missing vertex {index}")
            }
            MeshError::NonManifold { a, b } => write!(f, "non-manifold edge ({a}, {b})"),
            MeshError::OpenSurface { a, b } => write!(f, "unmatched edge ({a}, {b})"),
            MeshError::DegenerateFacet { facet } => {
                write!(f, "facet {facet} is degenerate or not planar")
            }
            MeshError::NonConvexFacet { facet } => write!(f, "facet {facet} is not convex"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MeshError {}

/// A closed, consistently oriented mesh with convex planar facets.
///
/// Facet loops are stored back to back. Corner `c` of facet `f` is the directed
/// edge `loop_verts[c] -> loop_verts[next(c)]`; `opposite[c]` is the facet on the
/// other side of that edge.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    loop_start: Vec<u32>,
    loop_verts: Vec<u32>,
    opposite: Vec<u32>,
    planes: Vec<Plane>,
    bounds: Vec<Aabb>,
    star_start: Vec<u32>,
    star: Vec<u32>,
    facet_of_corner: Vec<u32>,
}

impl Mesh {
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, v: u32) -> Vec3 {
        self.vertices[v as usize]
    }

    pub fn facet_count(&self) -> usize {
        self.planes.len()
    }

    pub fn facet(&self, f: u32) -> &[u32] {
        let a = self.loop_start[f as usize] as usize;
        let b = self.loop_start[f as usize + 1] as usize;
        &self.loop_verts[a..b]
    }

    pub fn facet_points(&self, f: u32) -> impl Iterator<Item = Vec3> + Clone + '_ {
        self.facet(f).iter().map(|&v| self.vertices[v as usize])
    }

    pub fn plane(&self, f: u32) -> &Plane {
        &self.planes[f as usize]
    }

    pub fn facet_bounds(&self, f: u32) -> &Aabb {
        &self.bounds[f as usize]
    }

    /// Facet across the edge leaving slot `k` of facet `f`.
    pub fn opposite(&self, f: u32, k: usize) -> u32 {
        self.opposite[self.loop_start[f as usize] as usize + k]
    }

    /// `(facet, slot)` pairs for every corner at vertex `v`.
    pub fn vertex_corners(&self, v: u32) -> impl Iterator<Item = (u32, usize)> + '_ {
        let a = self.star_start[v as usize] as usize;
        let b = self.star_start[v as usize + 1] as usize;
        self.star[a..b].iter().map(move |&c| {
            let f = self.facet_of_corner[c as usize];
            (f, c as usize - self.loop_start[f as usize] as usize)
        })
    }

    /// The two facets adjacent to edge `(a, b)`: first the one containing `a -> b`.
    pub fn edge_facets(&self, a: u32, b: u32) -> Option<(u32, u32)> {
        for (f, k) in self.vertex_corners(a) {
            let lp = self.facet(f);
            if lp[(k + 1) % lp.len()] == b {
                return Some((f, self.opposite(f, k)));
            }
        }
        None
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn to_raw(&self) -> RawMesh {
        RawMesh {
            vertices: self.vertices.clone(),
            facets: (0..self.facet_count() as u32).map(|f| self.facet(f).to_vec()).collect(),
        }
    }

    /// Same topology with every vertex mapped through `t`; planes are refitted.
    pub fn map_vertices(&self, t: impl Fn(Vec3) -> Vec3) -> Mesh {
        let mut m = self.clone();
        for v in m.vertices.iter_mut() {
            *v = t(*v);
        }
        for f in 0..m.planes.len() {
            let pts: Vec<Vec3> = m.facet_points(f as u32).collect();
            m.planes[f] = fit_plane(&pts).unwrap_or(m.planes[f]);
            m.bounds[f] = Aabb::from_points(pts.iter());
        }
        m
    }
}

/// Plane through a loop: Newell normal, offset averaged over the vertices.
pub fn fit_plane(pts: &[Vec3]) -> Option<Plane> {
    let normal = newell_normal(pts).normalized()?;
    let offset = pts.iter().map(|p| normal.dot(*p)).sum::<f64>() / pts.len() as f64;
    Some(Plane { normal, offset })
}

fn diameter(pts: &[Vec3]) -> f64 {
    let mut d2: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d2 = d2.max((pts[i] - pts[j]).norm2());
        }
    }
    crate::math::sqrt(d2)
}

fn facet_geometry_error(pts: &[Vec3], facet: usize) -> Result<Plane, MeshError> {
    if pts.len() < 3 {
        return Err(MeshError::DegenerateFacet { facet });
    }
    let diam = diameter(pts);
    let area2 = newell_normal(pts).norm();
    if !(area2 > 1e-14 * diam * diam) {
        return Err(MeshError::DegenerateFacet { facet });
    }
    let plane = fit_plane(pts).ok_or(MeshError::DegenerateFacet { facet })?;
    let tol = PLANARITY_TOL * diam;
    if pts.iter().any(|p| plane.distance(*p).abs() > tol) {
        return Err(MeshError::DegenerateFacet { facet });
    }
    if !is_convex(pts, plane.normal, diam) {
        return Err(MeshError::NonConvexFacet { facet });
    }
    Ok(plane)
}

/// Convexity with a tolerance for collinear corners.
fn is_convex(pts: &[Vec3], n: Vec3, diam: f64) -> bool {
    let k = pts.len();
    let tol = PLANARITY_TOL * diam * diam;
    let mut total_turn = 0.0;
    for i in 0..k {
        let a = pts[(i + k - 1) % k];
        let b = pts[i];
        let c = pts[(i + 1) % k];
        let turn = (b - a).cross(c - b).dot(n);
        if turn < -tol {
            return false;
        }
        total_turn += turn;
    }
    total_turn > 0.0
}

fn edge_key(a: u32, b: u32) -> u64 {
    ((a as u64) << 32) | b as u64
}

/// Build adjacency, planes and vertex stars; rejects anything that is not a closed
/// oriented 2-manifold with planar convex facets.
pub fn topology_pass(raw: &RawMesh) -> Result<Mesh, MeshError> {
    check_indices(raw)?;
    let mut planes = Vec::with_capacity(raw.facets.len());
    for (fi, f) in raw.facets.iter().enumerate() {
        let pts: Vec<Vec3> = f.iter().map(|&v| raw.vertices[v as usize]).collect();
        planes.push(facet_geometry_error(&pts, fi)?);
    }
    connect(raw, planes)
}

/// Like [`topology_pass`], but facet planes come from the caller and facet shape
/// is not checked. For meshes whose facets are known to lie in given planes,
/// where a refit of a very thin facet would be meaningless.
pub fn topology_with_planes(raw: &RawMesh, planes: Vec<Plane>) -> Result<Mesh, MeshError> {
    assert_eq!(planes.len(), raw.facets.len(), "one plane per facet");
    check_indices(raw)?;
    if let Some(fi) = raw.facets.iter().position(|f| f.len() < 3) {
        return Err(MeshError::DegenerateFacet { facet: fi });
    }
    connect(raw, planes)
}

fn check_indices(raw: &RawMesh) -> Result<(), MeshError> {
    let nv = raw.vertices.len() as u32;
    for (fi, f) in raw.facets.iter().enumerate() {
        if let Some(&v) = f.iter().find(|&&v| v >= nv) {
            return Err(MeshError::IndexOutOfRange { facet: fi, index: v });
        }
    }
    Ok(())
}

fn connect(raw: &RawMesh, planes: Vec<Plane>) -> Result<Mesh, MeshError> {
    let nv = raw.vertices.len() as u32;
    let mut loop_start = Vec::with_capacity(raw.facets.len() + 1);
    let mut loop_verts = Vec::new();
    let mut facet_of_corner = Vec::new();
    loop_start.push(0u32);
    for (fi, f) in raw.facets.iter().enumerate() {
        loop_verts.extend_from_slice(f);
        facet_of_corner.extend(core::iter::repeat(fi as u32).take(f.len()));
        loop_start.push(loop_verts.len() as u32);
    }
    let bounds: Vec<Aabb> =
        raw.facets.iter().map(|f| Aabb::from_points(f.iter().map(|&v| &raw.vertices[v as usize]))).collect();

    // Directed edges sorted by key; each must be unique and have its reverse.
    let mut edges: Vec<(u64, u32)> = Vec::with_capacity(loop_verts.len());
    for (fi, f) in raw.facets.iter().enumerate() {
        let k = f.len();
        for i in 0..k {
            let (a, b) = (f[i], f[(i + 1) % k]);
            if a == b {
                return Err(MeshError::DegenerateFacet { facet: fi });
            }
            edges.push((edge_key(a, b), loop_start[fi] + i as u32));
        }
    }
    edges.sort_unstable();
    for w in edges.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(MeshError::NonManifold { a: (w[0].0 >> 32) as u32, b: w[0].0 as u32 });
        }
    }
    let mut opposite = vec![0u32; loop_verts.len()];
    for &(key, corner) in &edges {
        let (a, b) = ((key >> 32) as u32, key as u32);
        match edges.binary_search_by_key(&edge_key(b, a), |e| e.0) {
            Ok(j) => opposite[corner as usize] = facet_of_corner[edges[j].1 as usize],
            Err(_) => return Err(MeshError::OpenSurface { a, b }),
        }
    }

    // Vertex stars by counting sort.
    let mut star_start = vec![0u32; nv as usize + 1];
    for &v in &loop_verts {
        star_start[v as usize + 1] += 1;
    }
    for i in 0..nv as usize {
        star_start[i + 1] += star_start[i];
    }
    let mut fill = star_start.clone();
    let mut star = vec![0u32; loop_verts.len()];
    for (c, &v) in loop_verts.iter().enumerate() {
        star[fill[v as usize] as usize] = c as u32;
        fill[v as usize] += 1;
    }

    Ok(Mesh {
        vertices: raw.vertices.clone(),
        loop_start,
        loop_verts,
        opposite,
        planes,
        bounds,
        star_start,
        star,
        facet_of_corner,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Issue {
    IndexOutOfRange { facet: usize, index: u32 },
    DegenerateFacet { facet: usize },
    NonPlanarFacet { facet: usize },
    NonConvexFacet { facet: usize },
    /// The same directed edge appears in two loops.
    OrientationInconsistent { a: u32, b: u32 },
    /// An undirected edge used by more than two loops.
    NonManifoldEdge { a: u32, b: u32, uses: usize },
    /// An undirected edge used by a single loop.
    BoundaryEdge { a: u32, b: u32 },
    DuplicateVertex { first: u32, second: u32 },
}

/// Violations of the mesh invariants. Self-intersections are not detected.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate(raw: &RawMesh) -> ValidationReport {
    let mut issues = Vec::new();
    let nv = raw.vertices.len() as u32;

    let mut idx: Vec<u32> = (0..nv).collect();
    idx.sort_unstable_by(|&a, &b| {
        raw.vertices[a as usize]
            .bits()
            .cmp(&raw.vertices[b as usize].bits())
            .then(a.cmp(&b))
    });
    for w in idx.windows(2) {
        if raw.vertices[w[0] as usize].bits() == raw.vertices[w[1] as usize].bits() {
            issues.push(Issue::DuplicateVertex { first: w[0], second: w[1] });
        }
    }

    let mut undirected: Vec<(u32, u32, bool)> = Vec::new();
    for (fi, f) in raw.facets.iter().enumerate() {
        if let Some(&bad) = f.iter().find(|&&v| v >= nv) {
            issues.push(Issue::IndexOutOfRange { facet: fi, index: bad });
            continue;
        }
        let pts: Vec<Vec3> = f.iter().map(|&v| raw.vertices[v as usize]).collect();
        match facet_geometry_error(&pts, fi) {
            Ok(_) => {}
            Err(MeshError::NonConvexFacet { .. }) => issues.push(Issue::NonConvexFacet { facet: fi }),
            Err(_) => {
                // Split zero-area from non-planar for the report.
                let diam = diameter(&pts);
                let planar = fit_plane(&pts)
                    .map(|p| pts.iter().all(|q| p.distance(*q).abs() <= PLANARITY_TOL * diam))
                    .unwrap_or(true);
                if pts.len() >= 3 && !planar {
                    issues.push(Issue::NonPlanarFacet { facet: fi });
                } else {
                    issues.push(Issue::DegenerateFacet { facet: fi });
                }
            }
        }
        let k = f.len();
        for i in 0..k {
            let (a, b) = (f[i], f[(i + 1) % k]);
            undirected.push((a.min(b), a.max(b), a < b));
        }
    }
    undirected.sort_unstable();
    let mut i = 0;
    while i < undirected.len() {
        let (a, b, _) = undirected[i];
        let mut j = i;
        let (mut fwd, mut bwd) = (0usize, 0usize);
        while j < undirected.len() && undirected[j].0 == a && undirected[j].1 == b {
            if undirected[j].2 {
                fwd += 1;
            } else {
                bwd += 1;
            }
            j += 1;
        }
        let uses = fwd + bwd;
        if uses > 2 {
            issues.push(Issue::NonManifoldEdge { a, b, uses });
        } else if uses == 1 {
            issues.push(Issue::BoundaryEdge { a, b });
        } else if fwd != 1 {
            issues.push(Issue::OrientationInconsistent { a, b });
        }
        i = j;
    }
    ValidationReport { issues }
}

/// Divergence-theorem volume over fan triangles of every loop.
pub fn loops_signed_volume<'a>(
    vertices: &[Vec3],
    loops: impl IntoIterator<Item = &'a [u32]>,
) -> f64 {
    let mut acc = 0.0;
    for lp in loops {
        if lp.len() < 3 {
            continue;
        }
        let a = vertices[lp[0] as usize];
        for w in lp[1..].windows(2) {
            let b = vertices[w[0] as usize];
            let c = vertices[w[1] as usize];
            acc += a.dot(b.cross(c));
        }
    }
    acc / 6.0
}

pub fn signed_volume(mesh: &Mesh) -> f64 {
    loops_signed_volume(&mesh.vertices, (0..mesh.facet_count() as u32).map(|f| mesh.facet(f)))
}
