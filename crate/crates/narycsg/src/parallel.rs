//! Multi-threaded exploration and facet build.
//!
//! Results do not depend on the worker count: every task's vertices are merged
//! and sorted by provenance before facets are built, and the facet groups are
//! collected in their sorted order.

use narycsg_core::boolfn::BoolFn;
use narycsg_core::bruteforce::csg_vertices;
use narycsg_core::classify::{FinalVertex, Provenance};
use narycsg_core::jitter::{apply_jitter, SceneTransform};
use narycsg_core::kdtree::{Branch, ExplorationConfig, Explorer, KdCell};
use narycsg_core::math::Vec3;
use narycsg_core::pipeline::{
    check_inputs, dedupe_vertices, finish_mesh, group_polygons, make_stats, EvalError, Evaluation, FinalMesh,
    PipelineConfig, VertexSearch,
};
use narycsg_core::reconstruct::facets::{group_ranges, sort_looplets};
use narycsg_core::reconstruct::vertex_looplets;
use narycsg_core::stats::Counters;
use narycsg_core::{Mesh, Scene};
use rayon::prelude::*;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParallelError {
    #[error("vertex {0:?} was produced by more than one task")]
    DuplicateVertex(Provenance),
    #[error("invalid task budget")]
    BadBudget,
    #[error("could not start worker threads: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskBudget {
    pub workers: usize,
    /// Split passes of cells shallower than this are themselves split across workers.
    pub par_split_depth: u32,
    /// Cells with fewer fragments are explored inside one task.
    pub seq_threshold: usize,
}

impl TaskBudget {
    pub fn new(workers: usize, config: &ExplorationConfig) -> Self {
        TaskBudget { workers, par_split_depth: config.par_split_depth, seq_threshold: config.seq_threshold }
    }

    /// One worker per available core.
    pub fn auto(config: &ExplorationConfig) -> Self {
        let n = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self::new(n, config)
    }

    pub fn is_valid(&self) -> bool {
        self.workers >= 1 && self.seq_threshold >= 1
    }

    fn pool(&self) -> Result<rayon::ThreadPool, ParallelError> {
        if !self.is_valid() {
            return Err(ParallelError::BadBudget);
        }
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.workers).build()?)
    }
}

/// Output of one task.
#[derive(Default)]
pub struct TaskResult {
    pub vertices: Vec<FinalVertex>,
    pub counters: Counters,
}

/// Concatenate task outputs and order them by provenance.
pub fn merge_results(parts: Vec<TaskResult>) -> Result<(Vec<FinalVertex>, Counters), ParallelError> {
    let mut counters = Counters::default();
    let mut vertices = Vec::with_capacity(parts.iter().map(|p| p.vertices.len()).sum());
    for p in parts {
        counters.merge(&p.counters);
        vertices.extend(p.vertices);
    }
    vertices.par_sort_unstable_by_key(|v| v.prov);
    if let Some(w) = vertices.windows(2).find(|w| w[0].prov == w[1].prov) {
        return Err(ParallelError::DuplicateVertex(w[0].prov));
    }
    Ok((vertices, counters))
}

fn split_in_parallel(ex: &Explorer<'_>, cell: KdCell, counters: &mut Counters) -> (KdCell, KdCell) {
    let chunk = (cell.fragments.len() / (4 * rayon::current_num_threads())).max(256);
    let acc = cell
        .fragments
        .par_chunks(chunk)
        .map(|c| ex.split_pass(&cell, c))
        .reduce_with(|mut a, b| {
            a.merge(b);
            a
        })
        .expect("a split cell has fragments");
    ex.finish_split(&cell, acc, counters)
}

fn task(ex: &Explorer<'_>, cell: KdCell, budget: &TaskBudget, out: &mut Vec<TaskResult>) {
    let mut r = TaskResult::default();
    if cell.fragments.len() < budget.seq_threshold || ex.branch(&cell) != Branch::Split {
        ex.explore(cell, &mut r.vertices, &mut r.counters);
        out.push(r);
        return;
    }
    r.counters.cells += 1;
    let (lo, hi) = if cell.depth < budget.par_split_depth {
        split_in_parallel(ex, cell, &mut r.counters)
    } else {
        ex.split(cell, &mut r.counters)
    };
    out.push(r);
    let (a, b) = rayon::join(
        || {
            let mut v = Vec::new();
            task(ex, lo, budget, &mut v);
            v
        },
        || {
            let mut v = Vec::new();
            task(ex, hi, budget, &mut v);
            v
        },
    );
    out.extend(a);
    out.extend(b);
}

/// KD exploration with child cells as stealable tasks.
pub fn explore_parallel(
    scene: &Scene,
    f: &BoolFn,
    config: &ExplorationConfig,
    budget: &TaskBudget,
) -> Result<(Vec<FinalVertex>, Counters), ParallelError> {
    explore_on(&budget.pool()?, scene, f, config, budget)
}

fn explore_on(
    pool: &rayon::ThreadPool,
    scene: &Scene,
    f: &BoolFn,
    config: &ExplorationConfig,
    budget: &TaskBudget,
) -> Result<(Vec<FinalVertex>, Counters), ParallelError> {
    let parts = pool.install(|| {
        let mut parts = Vec::new();
        if !scene.is_empty() {
            let ex = Explorer::new(scene, f, *config);
            task(&ex, ex.root(), budget, &mut parts);
        }
        parts
    });
    merge_results(parts)
}

/// Same result as the sequential facet build.
pub fn build_mesh_parallel(
    scene: &Scene,
    originals: &Scene,
    transform: &SceneTransform,
    vertices: &[FinalVertex],
    cfg: &PipelineConfig,
    counters: &mut Counters,
) -> FinalMesh {
    const CHUNK: usize = 1024;
    let positions: Vec<Vec3> = vertices.iter().map(|v| v.pos).collect();
    let mut looplets: Vec<_> = vertices
        .par_chunks(CHUNK)
        .enumerate()
        .flat_map_iter(|(c, vs)| {
            let mut out = Vec::new();
            for (j, v) in vs.iter().enumerate() {
                vertex_looplets(scene, (c * CHUNK + j) as u32, v, &mut out);
            }
            out
        })
        .collect();
    sort_looplets(&mut looplets);
    let groups: Vec<_> = group_ranges(&looplets)
        .into_par_iter()
        .map(|r| {
            let mut c = Counters::default();
            let polys = group_polygons(scene, &positions, &looplets[r], cfg.tesselation, &mut c);
            (polys, c)
        })
        .collect();
    let mut polygons = Vec::new();
    for (p, c) in groups {
        polygons.extend(p);
        counters.merge(&c);
    }
    finish_mesh(vertices, polygons, originals, transform, cfg.revert, counters)
}

/// The full pipeline on a pool of `budget.workers` threads.
pub fn evaluate_parallel(
    meshes: &[Mesh],
    f: &BoolFn,
    cfg: &PipelineConfig,
    budget: &TaskBudget,
) -> Result<Evaluation, ParallelError> {
    check_inputs(meshes, f, cfg)?;
    let pool = budget.pool()?;
    let originals = Scene::new(meshes.to_vec());
    let (jittered, transform) = apply_jitter(meshes, &cfg.jitter);
    let scene = Scene::new(jittered);

    let t = Instant::now();
    let (vertices, mut counters) = match cfg.search {
        VertexSearch::Kd => explore_on(&pool, &scene, f, &cfg.exploration, budget)?,
        VertexSearch::Brute => {
            let (found, mut c) = csg_vertices(&scene, f);
            (dedupe_vertices(found, &mut c), c)
        }
    };
    let t_vertices = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mesh =
        pool.install(|| build_mesh_parallel(&scene, &originals, &transform, &vertices, cfg, &mut counters));
    let t_facets = t.elapsed().as_secs_f64();

    let mut stats = make_stats(&scene, &mesh, &counters);
    stats.t_vertices_s = t_vertices;
    stats.t_facets_s = t_facets;
    Ok(Evaluation { mesh, counters, stats, transform })
}

#[cfg(test)]
mod tests {
    use super::*;
    use narycsg_core::boolfn::{ClassVec, Slot};
    use narycsg_core::IndicatorVector;

    fn fv(mesh: u32, vertex: u32) -> FinalVertex {
        FinalVertex {
            pos: Vec3::ZERO,
            prov: Provenance::Vertex { mesh, vertex },
            indicator: IndicatorVector::filled(2, Slot::Zero),
            class: ClassVec::from_values(&[true, false]),
        }
    }

    #[test]
    fn merge_concatenates_and_sorts() {
        let a = TaskResult { vertices: vec![fv(0, 3), fv(0, 1)], counters: Counters { splits: 2, ..Default::default() } };
        let b = TaskResult { vertices: vec![fv(1, 0)], counters: Counters { splits: 1, ..Default::default() } };
        let (v, c) = merge_results(vec![b, a]).unwrap();
        let keys: Vec<_> = v.iter().map(|x| x.prov).collect();
        assert_eq!(
            keys,
            [
                Provenance::Vertex { mesh: 0, vertex: 1 },
                Provenance::Vertex { mesh: 0, vertex: 3 },
                Provenance::Vertex { mesh: 1, vertex: 0 }
            ]
        );
        assert_eq!(c.splits, 3);
    }

    #[test]
    fn merge_rejects_duplicates() {
        let a = TaskResult { vertices: vec![fv(0, 3)], ..Default::default() };
        let b = TaskResult { vertices: vec![fv(0, 3)], ..Default::default() };
        assert!(matches!(merge_results(vec![a, b]), Err(ParallelError::DuplicateVertex(_))));
    }

    #[test]
    fn zero_workers_is_rejected() {
        let b = TaskBudget { workers: 0, par_split_depth: 3, seq_threshold: 80 };
        assert!(matches!(b.pool(), Err(ParallelError::BadBudget)));
    }
}
