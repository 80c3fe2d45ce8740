//! Evaluating a CSG tree in groups of inputs.
//!
//! The tree is walked bottom-up. Whenever a subtree refers to at least `G`
//! meshes it is evaluated as one call and its result replaces it as a leaf.
//! `G = 2` gives classic binary evaluation; [`ALL_AT_ONCE`] gives a single call.
//!
//! Intermediate results keep their jitter translation, so surfaces that
//! coincided in the inputs stay apart by a thin sliver instead of becoming
//! coplanar again. Every output facet still lies in one input plane; after the
//! last call each vertex is put back onto the input planes of its facets.

use narycsg_core::boolfn::from_csg_tree;
use narycsg_core::jitter::JitterConfig;
use narycsg_core::math::three_plane_point;
use narycsg_core::mesh::{topology_with_planes, MeshError};
use narycsg_core::pipeline::{Evaluation, FinalMesh, PipelineConfig, RevertMode};
use narycsg_core::reconstruct::Tesselation;
use narycsg_core::stats::Counters;
use narycsg_core::{CsgTree, Mesh, Plane, Vec3};
use thiserror::Error;

use crate::parallel::{evaluate_parallel, ParallelError, TaskBudget};

pub const ALL_AT_ONCE: usize = usize::MAX;

/// Jitter seeds tried per intermediate result before giving up.
pub const INTERMEDIATE_ATTEMPTS: usize = 3;

/// Smallest `|det|` of three unit normals, or `|n1 × n2|` of two, treated as independent.
const INDEPENDENT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GroupedError {
    #[error("grouping factor must be at least 2")]
    BadGrouping,
    #[error("tree refers to input {index} but only {count} meshes were given")]
    MissingInput { index: usize, count: usize },
    #[error("intermediate result is not a valid input: {0}")]
    Intermediate(MeshError),
    #[error(transparent)]
    Eval(#[from] ParallelError),
}

pub struct GroupedResult {
    pub mesh: FinalMesh,
    /// Summed over every call.
    pub counters: Counters,
    pub invocations: usize,
    /// Intermediate results rejected as inputs and recomputed.
    pub retries: usize,
    /// The final call, before vertices are moved back onto the input planes.
    pub last: Evaluation,
}

#[derive(Clone, Copy, PartialEq)]
enum Source {
    Input(usize),
    Result(usize),
}

/// A subtree over local leaf indices into `sources`.
struct Partial {
    tree: CsgTree,
    sources: Vec<Source>,
}

/// An intermediate result and, per facet, the input plane it lies in.
struct Intermediate {
    mesh: Mesh,
    origin: Vec<Plane>,
}

struct Run<'a> {
    inputs: &'a [Mesh],
    results: Vec<Intermediate>,
    g: usize,
    cfg: PipelineConfig,
    budget: TaskBudget,
    counters: Counters,
    invocations: usize,
    retries: usize,
}

fn remap(t: &CsgTree, m: &[usize]) -> CsgTree {
    let b = |x: &CsgTree| Box::new(remap(x, m));
    match t {
        CsgTree::Leaf(i) => CsgTree::Leaf(m[*i]),
        CsgTree::Union(l, r) => CsgTree::Union(b(l), b(r)),
        CsgTree::Inter(l, r) => CsgTree::Inter(b(l), b(r)),
        CsgTree::Diff(l, r) => CsgTree::Diff(b(l), b(r)),
        CsgTree::Xor(l, r) => CsgTree::Xor(b(l), b(r)),
    }
}

fn oriented(p: Plane, positive: bool) -> Plane {
    if positive {
        p
    } else {
        Plane { normal: -p.normal, offset: -p.offset }
    }
}

impl Run<'_> {
    fn mesh(&self, s: Source) -> Mesh {
        match s {
            Source::Input(i) => self.inputs[i].clone(),
            Source::Result(i) => self.results[i].mesh.clone(),
        }
    }

    fn origin(&self, s: Source, facet: u32) -> Plane {
        match s {
            Source::Input(i) => *self.inputs[i].plane(facet),
            Source::Result(i) => self.results[i].origin[facet as usize],
        }
    }

    /// Input plane of every output facet of a call over `sources`.
    fn origins(&self, mesh: &FinalMesh, sources: &[Source]) -> Vec<Plane> {
        mesh.hosts.iter().map(|&(h, positive)| oriented(self.origin(sources[h.mesh as usize], h.facet), positive)).collect()
    }

    fn call(&mut self, p: &Partial, cfg: &PipelineConfig) -> Result<(Evaluation, Vec<Mesh>), GroupedError> {
        let meshes: Vec<Mesh> = p.sources.iter().map(|&s| self.mesh(s)).collect();
        let e = evaluate_parallel(&meshes, &from_csg_tree(&p.tree), cfg, &self.budget)?;
        self.counters.merge(&e.counters);
        self.invocations += 1;
        Ok((e, meshes))
    }

    fn intermediate_config(&self) -> PipelineConfig {
        let j = self.cfg.jitter;
        let jitter =
            if j == JitterConfig::none() { j } else { JitterConfig { seed: j.seed.wrapping_add(self.invocations as u64 + 1), ..j } };
        PipelineConfig { jitter, tesselation: Tesselation::Convex, revert: RevertMode::RotationOnly, ..self.cfg }
    }

    fn collect(&mut self, t: &CsgTree, root: bool) -> Result<Partial, GroupedError> {
        let (l, r, op): (_, _, fn(Box<CsgTree>, Box<CsgTree>) -> CsgTree) = match t {
            CsgTree::Leaf(i) => {
                if *i >= self.inputs.len() {
                    return Err(GroupedError::MissingInput { index: *i, count: self.inputs.len() });
                }
                return Ok(Partial { tree: CsgTree::Leaf(0), sources: vec![Source::Input(*i)] });
            }
            CsgTree::Union(l, r) => (l, r, CsgTree::Union),
            CsgTree::Inter(l, r) => (l, r, CsgTree::Inter),
            CsgTree::Diff(l, r) => (l, r, CsgTree::Diff),
            CsgTree::Xor(l, r) => (l, r, CsgTree::Xor),
        };
        let a = self.collect(l, false)?;
        let b = self.collect(r, false)?;
        let mut sources = a.sources;
        let mut map = Vec::with_capacity(b.sources.len());
        for s in b.sources {
            match sources.iter().position(|&x| x == s) {
                Some(k) => map.push(k),
                None => {
                    map.push(sources.len());
                    sources.push(s);
                }
            }
        }
        let p = Partial { tree: op(Box::new(a.tree), Box::new(remap(&b.tree, &map))), sources };
        if root || p.sources.len() < self.g {
            return Ok(p);
        }
        let mut attempt = 0;
        let result = loop {
            let cfg = self.intermediate_config();
            let (e, meshes) = self.call(&p, &cfg)?;
            match as_input(&e.mesh, &meshes) {
                Ok(mesh) => break Intermediate { origin: self.origins(&e.mesh, &p.sources), mesh },
                Err(err) if attempt + 1 >= INTERMEDIATE_ATTEMPTS || cfg.jitter == JitterConfig::none() => {
                    return Err(GroupedError::Intermediate(err))
                }
                Err(_) => {
                    attempt += 1;
                    self.retries += 1;
                }
            }
        };
        self.results.push(result);
        Ok(Partial { tree: CsgTree::Leaf(0), sources: vec![Source::Result(self.results.len() - 1)] })
    }
}

/// A result as the input of a later call. Every facet keeps the normal of the
/// facet it lies in; thin slivers would not survive a refit.
fn as_input(mesh: &FinalMesh, inputs: &[Mesh]) -> Result<Mesh, MeshError> {
    let planes = mesh
        .facets
        .iter()
        .zip(&mesh.hosts)
        .map(|(f, &(host, positive))| {
            let normal = oriented(*inputs[host.mesh as usize].plane(host.facet), positive).normal;
            let offset = f.iter().map(|&v| normal.dot(mesh.vertices[v as usize])).sum::<f64>() / f.len() as f64;
            Plane { normal, offset }
        })
        .collect();
    topology_with_planes(&mesh.to_raw(), planes)
}

/// Closest point to `x` on the given planes: their common point when three are
/// independent, otherwise the projection onto their line or plane.
fn snap(x: Vec3, planes: &[Plane]) -> Vec3 {
    let mut best: Option<(f64, [usize; 3])> = None;
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            for k in j + 1..planes.len() {
                let d = planes[i].normal.dot(planes[j].normal.cross(planes[k].normal)).abs();
                if best.map_or(true, |(b, _)| d > b) {
                    best = Some((d, [i, j, k]));
                }
            }
        }
    }
    if let Some((d, [i, j, k])) = best {
        if d > INDEPENDENT {
            if let Some(p) = three_plane_point([&planes[i], &planes[j], &planes[k]], 0.0) {
                return p;
            }
        }
    }
    let mut pair: Option<(f64, usize, usize)> = None;
    for i in 0..planes.len() {
        for j in i + 1..planes.len() {
            let d = planes[i].normal.cross(planes[j].normal).norm();
            if pair.map_or(true, |(b, _, _)| d > b) {
                pair = Some((d, i, j));
            }
        }
    }
    match pair {
        Some((d, i, j)) if d > INDEPENDENT => {
            // Minimum-norm correction onto the line of the two planes.
            let (a, b) = (planes[i], planes[j]);
            let (ra, rb) = (a.offset - a.normal.dot(x), b.offset - b.normal.dot(x));
            let c = a.normal.dot(b.normal);
            let det = 1.0 - c * c;
            let (la, lb) = ((ra - c * rb) / det, (rb - c * ra) / det);
            x + a.normal * la + b.normal * lb
        }
        _ => match planes.first() {
            Some(p) => x + p.normal * (p.offset - p.normal.dot(x)),
            None => x,
        },
    }
}

/// Move every vertex onto the input planes of the facets around it.
fn snap_vertices(mesh: &mut FinalMesh, origin: &[Plane]) {
    let mut around: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertices.len()];
    for (fi, f) in mesh.facets.iter().enumerate() {
        for &v in f {
            around[v as usize].push(fi);
        }
    }
    for (v, facets) in around.iter().enumerate() {
        let mut planes: Vec<Plane> = Vec::new();
        for &fi in facets {
            let p = origin[fi];
            // Opposite orientations of one plane count once.
            let same = |q: &Plane| {
                (q.normal.bits() == p.normal.bits() && q.offset.to_bits() == p.offset.to_bits())
                    || ((-q.normal).bits() == p.normal.bits() && (-q.offset).to_bits() == p.offset.to_bits())
            };
            if !planes.iter().any(same) {
                planes.push(p);
            }
        }
        mesh.vertices[v] = snap(mesh.vertices[v], &planes);
    }
}

/// Evaluate `tree` over `inputs`, calling the pipeline once per group of at
/// least `g` meshes and once more for whatever remains at the root.
pub fn run_grouped(
    tree: &CsgTree,
    inputs: &[Mesh],
    g: usize,
    cfg: &PipelineConfig,
    budget: &TaskBudget,
) -> Result<GroupedResult, GroupedError> {
    if g < 2 {
        return Err(GroupedError::BadGrouping);
    }
    let mut run = Run {
        inputs,
        results: Vec::new(),
        g,
        cfg: *cfg,
        budget: *budget,
        counters: Counters::default(),
        invocations: 0,
        retries: 0,
    };
    let p = run.collect(tree, true)?;
    let (last, _) = run.call(&p, cfg)?;
    let mut mesh = last.mesh.clone();
    // Without intermediates the last call already reverted exactly.
    if !run.results.is_empty() && cfg.revert == RevertMode::Exact {
        let origin = run.origins(&mesh, &p.sources);
        snap_vertices(&mut mesh, &origin);
    }
    Ok(GroupedResult { mesh, counters: run.counters, invocations: run.invocations, retries: run.retries, last })
}
