//! Synthetic torus scenes and the scaling benchmark.

use narycsg_core::boolfn::{BoolFn, Expr};
use narycsg_core::math::{sphere_point, Mat3};
use narycsg_core::mesh::MeshError;
use narycsg_core::pipeline::PipelineConfig;
use narycsg_core::{shapes, RawMesh, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::parallel::{evaluate_parallel, ParallelError, TaskBudget};
use crate::topology_all;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneKind {
    /// Random tori in a box; evaluated as the union of the first half minus
    /// the union of the second half.
    RandomTori,
    /// Narrow tori along random great circles of one sphere; evaluated as min-2.
    ConcentricTori,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub count: usize,
    /// Segments around the main circle; the tube gets half as many.
    pub resolution: usize,
    pub seed: u64,
}

impl SceneSpec {
    pub fn t1(resolution: usize, seed: u64) -> Self {
        SceneSpec { kind: SceneKind::RandomTori, count: 50, resolution, seed }
    }

    pub fn t2(resolution: usize, seed: u64) -> Self {
        SceneSpec { kind: SceneKind::ConcentricTori, count: 50, resolution, seed }
    }

    pub fn facet_count(&self) -> usize {
        self.count * self.resolution * (self.resolution / 2).max(3)
    }

    pub fn generate(&self) -> Vec<RawMesh> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (nu, nv) = (self.resolution.max(3), (self.resolution / 2).max(3));
        (0..self.count)
            .map(|_| {
                let axis = sphere_point(rng.gen(), rng.gen());
                let rot = Mat3::rotation(axis, rng.gen_range(0.0..std::f64::consts::PI));
                let (torus, center) = match self.kind {
                    SceneKind::RandomTori => {
                        let c = Vec3::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
                        (shapes::torus(rng.gen_range(0.8..1.2), rng.gen_range(0.15..0.3), nu, nv), c)
                    }
                    SceneKind::ConcentricTori => {
                        (shapes::torus(rng.gen_range(0.97..1.03), rng.gen_range(0.03..0.05), nu, nv), Vec3::ZERO)
                    }
                };
                shapes::transform(&torus, |p| rot.apply(p) + center)
            })
            .collect()
    }

    pub fn function(&self) -> BoolFn {
        let n = self.count;
        match self.kind {
            SceneKind::RandomTori => difference_of_unions(n),
            SceneKind::ConcentricTori => BoolFn::min_k(2, n).expect("at least two tori"),
        }
    }
}

/// `union(P0..P[n/2-1]) - union(P[n/2]..P[n-1])`.
pub fn difference_of_unions(n: usize) -> BoolFn {
    let half = n / 2;
    let or = |r: std::ops::Range<usize>| Expr::Or(r.map(Expr::Input).collect());
    BoolFn::new(n, Expr::And(vec![or(0..half), Expr::Not(Box::new(or(half..n)))])).expect("valid expression")
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("scene has no meshes")]
    EmptyScene,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Eval(#[from] ParallelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub m: u64,
    pub s: u64,
    pub h: u64,
    pub output_vertices: usize,
    pub t_vertices_s: f64,
    pub t_total_s: f64,
    pub errors: u64,
}

impl BenchRow {
    pub fn scaling(&self) -> Option<f64> {
        (self.h > 0).then(|| (self.m + self.s) as f64 * (self.h as f64).log2())
    }
}

pub fn bench_scene(spec: &SceneSpec, cfg: &PipelineConfig, budget: &TaskBudget) -> Result<BenchRow, BenchError> {
    if spec.count == 0 {
        return Err(BenchError::EmptyScene);
    }
    let (meshes, t_topology) = topology_all(&spec.generate())?;
    let e = evaluate_parallel(&meshes, &spec.function(), cfg, budget)?;
    Ok(BenchRow {
        m: e.stats.m,
        s: e.stats.s,
        h: e.stats.h,
        output_vertices: e.mesh.vertices.len(),
        t_vertices_s: e.stats.t_vertices_s,
        t_total_s: t_topology + e.stats.t_vertices_s + e.stats.t_facets_s,
        errors: e.stats.errors,
    })
}

/// One row per scene, in order.
pub fn bench_scaling(specs: &[SceneSpec], cfg: &PipelineConfig, budget: &TaskBudget) -> Result<Vec<BenchRow>, BenchError> {
    specs.iter().map(|s| bench_scene(s, cfg, budget)).collect()
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy * sxy / (sxx * syy)
}
