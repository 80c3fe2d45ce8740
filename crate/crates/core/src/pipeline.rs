//! End-to-end evaluation of a boolean function of meshes.
//!
//! jitter -> vertices -> looplets -> facets -> tesselation -> exact coordinates.

use alloc::vec::Vec;
use core::fmt;

use crate::boolfn::BoolFn;
use crate::bruteforce::csg_vertices;
use crate::classify::{FinalVertex, Provenance};
use crate::jitter::{apply_jitter, revert_positions, unrotate_positions, JitterConfig, SceneTransform};
use crate::kdtree::{kd_vertices, ExplorationConfig};
use crate::math::Vec3;
use crate::mesh::{loops_signed_volume, Mesh, RawMesh};
use crate::reconstruct::facets::{group_facets, group_ranges, sort_looplets};
use crate::reconstruct::{tesselate_facet, vertex_looplets, Looplet, Tesselation};
use crate::scene::{FacetRef, Scene};
use crate::stats::{Counters, StatsRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VertexSearch {
    #[default]
    Kd,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RevertMode {
    /// Recompute every vertex from its defining primitives on the inputs.
    #[default]
    Exact,
    /// Only undo the rotation; for results fed back as inputs.
    RotationOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PipelineConfig {
    pub jitter: JitterConfig,
    pub exploration: ExplorationConfig,
    pub tesselation: Tesselation,
    pub search: VertexSearch,
    pub revert: RevertMode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    ArityMismatch { function: usize, meshes: usize },
    BadConfig,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::ArityMismatch { function, meshes } => {
                write!(f, "function takes {function} inputs but {meshes} meshes were given")
            }
            EvalError::BadConfig => write!(f, "leaf threshold must be between 1 and the sequential threshold"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

/// The result surface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FinalMesh {
    pub vertices: Vec<Vec3>,
    pub provenance: Vec<Provenance>,
    pub facets: Vec<Vec<u32>>,
    /// Input facet and orientation each output facet lies in.
    pub hosts: Vec<(FacetRef, bool)>,
}

impl FinalMesh {
    pub fn to_raw(&self) -> RawMesh {
        RawMesh::new(self.vertices.clone(), self.facets.clone())
    }

    pub fn signed_volume(&self) -> f64 {
        loops_signed_volume(&self.vertices, self.facets.iter().map(|f| f.as_slice()))
    }

    /// Directed edges whose reverse does not occur equally often.
    pub fn unmatched_edges(&self) -> usize {
        let mut e: Vec<(u32, u32)> = Vec::new();
        for f in &self.facets {
            for k in 0..f.len() {
                e.push((f[k], f[(k + 1) % f.len()]));
            }
        }
        e.sort_unstable();
        let count = |a: u32, b: u32| {
            let lo = e.partition_point(|x| *x < (a, b));
            let hi = e.partition_point(|x| *x <= (a, b));
            hi - lo
        };
        let mut bad = 0;
        let mut i = 0;
        while i < e.len() {
            let (a, b) = e[i];
            let n = count(a, b);
            if count(b, a) != n {
                bad += n;
            }
            i += n;
        }
        bad
    }

    /// `V - E + F` over referenced vertices and undirected edges.
    pub fn euler_characteristic(&self) -> i64 {
        let mut e: Vec<(u32, u32)> = Vec::new();
        let mut v: Vec<u32> = Vec::new();
        for f in &self.facets {
            for k in 0..f.len() {
                let (a, b) = (f[k], f[(k + 1) % f.len()]);
                e.push((a.min(b), a.max(b)));
                v.push(a);
            }
        }
        e.sort_unstable();
        e.dedup();
        v.sort_unstable();
        v.dedup();
        v.len() as i64 - e.len() as i64 + self.facets.len() as i64
    }
}

pub struct Evaluation {
    pub mesh: FinalMesh,
    pub counters: Counters,
    pub stats: StatsRecord,
    pub transform: SceneTransform,
}

#[cfg(feature = "std")]
struct Timer(std::time::Instant);
#[cfg(not(feature = "std"))]
struct Timer;

impl Timer {
    fn start() -> Self {
        #[cfg(feature = "std")]
        return Timer(std::time::Instant::now());
        #[cfg(not(feature = "std"))]
        return Timer;
    }

    fn secs(&self) -> f64 {
        #[cfg(feature = "std")]
        return self.0.elapsed().as_secs_f64();
        #[cfg(not(feature = "std"))]
        return 0.0;
    }
}

pub fn check_inputs(meshes: &[Mesh], f: &BoolFn, cfg: &PipelineConfig) -> Result<(), EvalError> {
    if f.arity() != meshes.len() {
        return Err(EvalError::ArityMismatch { function: f.arity(), meshes: meshes.len() });
    }
    if !cfg.exploration.is_valid() {
        return Err(EvalError::BadConfig);
    }
    Ok(())
}

/// Sort by provenance and drop repeats, counting them.
pub fn dedupe_vertices(mut v: Vec<FinalVertex>, counters: &mut Counters) -> Vec<FinalVertex> {
    v.sort_by_key(|x| x.prov);
    let before = v.len();
    v.dedup_by_key(|x| x.prov);
    counters.duplicate_vertices += (before - v.len()) as u64;
    v
}

pub fn all_looplets(scene: &Scene, vertices: &[FinalVertex]) -> Vec<Looplet> {
    let mut out = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        vertex_looplets(scene, i as u32, v, &mut out);
    }
    out
}

/// Tesselated polygons of one (host, orientation) looplet group.
pub fn group_polygons(
    scene: &Scene,
    positions: &[Vec3],
    group: &[Looplet],
    mode: Tesselation,
    counters: &mut Counters,
) -> Vec<(FacetRef, bool, Vec<u32>)> {
    let mut out = Vec::new();
    for facet in group_facets(scene, positions, group, counters) {
        for poly in tesselate_facet(positions, &facet, mode, counters) {
            out.push((facet.host, facet.positive, poly));
        }
    }
    out
}

/// Drop unreferenced vertices and map coordinates back to the original frame.
pub fn finish_mesh(
    vertices: &[FinalVertex],
    polygons: Vec<(FacetRef, bool, Vec<u32>)>,
    originals: &Scene,
    transform: &SceneTransform,
    revert: RevertMode,
    counters: &mut Counters,
) -> FinalMesh {
    let mut map = alloc::vec![u32::MAX; vertices.len()];
    for (_, _, p) in &polygons {
        for &v in p {
            map[v as usize] = 0;
        }
    }
    let mut mesh = FinalMesh::default();
    for (i, v) in vertices.iter().enumerate() {
        if map[i] == 0 {
            map[i] = mesh.vertices.len() as u32;
            mesh.vertices.push(v.pos);
            mesh.provenance.push(v.prov);
        }
    }
    for (host, positive, p) in polygons {
        mesh.facets.push(p.into_iter().map(|v| map[v as usize]).collect());
        mesh.hosts.push((host, positive));
    }
    match revert {
        RevertMode::Exact => {
            counters.singular += revert_positions(&mut mesh.vertices, &mesh.provenance, transform, originals);
        }
        RevertMode::RotationOnly => unrotate_positions(&mut mesh.vertices, transform),
    }
    mesh
}

/// Facets from final vertices, sequentially.
pub fn build_mesh(
    scene: &Scene,
    originals: &Scene,
    transform: &SceneTransform,
    vertices: &[FinalVertex],
    cfg: &PipelineConfig,
    counters: &mut Counters,
) -> FinalMesh {
    let positions: Vec<Vec3> = vertices.iter().map(|v| v.pos).collect();
    let mut looplets = all_looplets(scene, vertices);
    sort_looplets(&mut looplets);
    let mut polygons = Vec::new();
    for r in group_ranges(&looplets) {
        polygons.extend(group_polygons(scene, &positions, &looplets[r], cfg.tesselation, counters));
    }
    finish_mesh(vertices, polygons, originals, transform, cfg.revert, counters)
}

pub fn make_stats(scene: &Scene, mesh: &FinalMesh, counters: &Counters) -> StatsRecord {
    StatsRecord {
        m: scene.facet_count() as u64,
        s: counters.splits,
        h: mesh.provenance.iter().filter(|p| p.order() >= 2).count() as u64,
        errors: counters.errors(),
        ..Default::default()
    }
}

/// Evaluate with a caller-supplied vertex finder run on the jittered scene.
pub fn evaluate_with(
    meshes: &[Mesh],
    f: &BoolFn,
    cfg: &PipelineConfig,
    find: impl FnOnce(&Scene, &BoolFn) -> (Vec<FinalVertex>, Counters),
) -> Result<Evaluation, EvalError> {
    check_inputs(meshes, f, cfg)?;
    let originals = Scene::new(meshes.to_vec());
    let (jittered, transform) = apply_jitter(meshes, &cfg.jitter);
    let scene = Scene::new(jittered);
    let t = Timer::start();
    let (found, mut counters) = find(&scene, f);
    let vertices = dedupe_vertices(found, &mut counters);
    let t_vertices = t.secs();
    let t = Timer::start();
    let mesh = build_mesh(&scene, &originals, &transform, &vertices, cfg, &mut counters);
    let t_facets = t.secs();
    let mut stats = make_stats(&scene, &mesh, &counters);
    stats.t_vertices_s = t_vertices;
    stats.t_facets_s = t_facets;
    Ok(Evaluation { mesh, counters, stats, transform })
}

pub fn evaluate(meshes: &[Mesh], f: &BoolFn, cfg: &PipelineConfig) -> Result<Evaluation, EvalError> {
    let search = cfg.search;
    let exploration = cfg.exploration;
    evaluate_with(meshes, f, cfg, |scene, f| match search {
        VertexSearch::Kd => kd_vertices(scene, f, &exploration),
        VertexSearch::Brute => csg_vertices(scene, f),
    })
}
