//! Random rigid perturbation of the inputs, and recovery of exact output coordinates.
//!
//! One rotation is shared by all meshes and applied first; each mesh then gets its
//! own small translation. After the boolean, every output vertex is recomputed from
//! its provenance on the original meshes.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::classify::Provenance;
use crate::math::{sphere_point, three_plane_point, unit_f64, Aabb, Mat3, Vec3};
use crate::mesh::Mesh;
use crate::scene::Scene;

/// Default translation magnitude relative to the scene diagonal.
pub const DEFAULT_RELATIVE_TRANSLATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Magnitude {
    /// In scene units.
    Absolute(f64),
    /// Times the bounding-box diagonal of all inputs.
    Relative(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JitterConfig {
    /// Largest rotation angle in radians; the angle is drawn uniformly in `[-a, a]`.
    pub rotation: f64,
    pub translation: Magnitude,
    pub seed: u64,
}

impl JitterConfig {
    pub fn none() -> Self {
        JitterConfig { rotation: 0.0, translation: Magnitude::Absolute(0.0), seed: 0 }
    }

    /// Full rotation and the default translation.
    pub fn new(seed: u64) -> Self {
        JitterConfig {
            rotation: core::f64::consts::PI,
            translation: Magnitude::Relative(DEFAULT_RELATIVE_TRANSLATION),
            seed,
        }
    }

    pub fn rotation_only(max_angle: f64, seed: u64) -> Self {
        JitterConfig { rotation: max_angle, translation: Magnitude::Absolute(0.0), seed }
    }

    pub fn translation_only(m: Magnitude, seed: u64) -> Self {
        JitterConfig { rotation: 0.0, translation: m, seed }
    }

    /// Full rotation plus translations of up to `translation` scene units.
    pub fn both(translation: f64, seed: u64) -> Self {
        JitterConfig { rotation: core::f64::consts::PI, translation: Magnitude::Absolute(translation), seed }
    }
}

impl Default for JitterConfig {
    fn default() -> Self {
        JitterConfig::new(0)
    }
}

/// The transform applied to the inputs: `p -> rotation * p + translations[mesh]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneTransform {
    pub rotation: Mat3,
    pub translations: Vec<Vec3>,
    pub seed: u64,
}

impl SceneTransform {
    pub fn identity(n: usize) -> Self {
        SceneTransform { rotation: Mat3::IDENTITY, translations: alloc::vec![Vec3::ZERO; n], seed: 0 }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Mat3::IDENTITY && self.translations.iter().all(|t| *t == Vec3::ZERO)
    }

    pub fn apply(&self, mesh: usize, p: Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translations[mesh]
    }
}

fn next_unit(rng: &mut ChaCha8Rng) -> f64 {
    unit_f64(rng.next_u64())
}

pub fn apply_jitter(meshes: &[Mesh], config: &JitterConfig) -> (Vec<Mesh>, SceneTransform) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rotation = if config.rotation > 0.0 {
        let axis = sphere_point(next_unit(&mut rng), next_unit(&mut rng));
        let angle = config.rotation * (2.0 * next_unit(&mut rng) - 1.0);
        Mat3::rotation(axis, angle)
    } else {
        Mat3::IDENTITY
    };
    let mag = match config.translation {
        Magnitude::Absolute(a) => a,
        Magnitude::Relative(r) => {
            let b = meshes.iter().fold(Aabb::EMPTY, |b, m| b.merge(&m.bounding_box()));
            r * b.diagonal()
        }
    };
    let translations: Vec<Vec3> = meshes
        .iter()
        .map(|_| {
            if mag > 0.0 {
                let mut c = || mag * (2.0 * next_unit(&mut rng) - 1.0);
                Vec3::new(c(), c(), c())
            } else {
                Vec3::ZERO
            }
        })
        .collect();
    let t = SceneTransform { rotation, translations, seed: config.seed };
    if t.is_identity() {
        return (meshes.to_vec(), t);
    }
    let out = meshes
        .iter()
        .enumerate()
        .map(|(i, m)| m.map_vertices(|p| t.apply(i, p)))
        .collect();
    (out, t)
}

/// Exact position of a vertex on the original meshes; `None` if its system is singular.
pub fn exact_position(prov: &Provenance, originals: &Scene) -> Option<Vec3> {
    match prov {
        Provenance::Vertex { mesh, vertex } => Some(originals.meshes[*mesh as usize].vertex(*vertex)),
        Provenance::EdgeFacet { edge, facet } => {
            let (p, q) = originals.edge_points(edge);
            let plane = originals.plane(*facet);
            let (dp, dq) = (plane.distance(p), plane.distance(q));
            let denom = dp - dq;
            if !(denom.abs() > 1e-12 * (q - p).norm()) {
                return None;
            }
            Some(p + (q - p) * (dp / denom))
        }
        Provenance::Triple(t) => {
            three_plane_point([originals.plane(t[0]), originals.plane(t[1]), originals.plane(t[2])], 1e-12)
        }
    }
}

/// Map jittered coordinates back approximately: undo the rotation and the mean
/// translation of the meshes involved.
pub fn approximate_original(pos: Vec3, prov: &Provenance, t: &SceneTransform) -> Vec3 {
    let (ms, k) = prov.meshes();
    let mut shift = Vec3::ZERO;
    for &m in &ms[..k] {
        shift += t.translations[m];
    }
    t.rotation.transpose().apply(pos - shift / k as f64)
}

/// Recompute every position from its provenance on the originals; returns the
/// number of singular vertices, which keep their back-mapped jittered position.
pub fn revert_positions(positions: &mut [Vec3], provs: &[Provenance], t: &SceneTransform, originals: &Scene) -> u64 {
    if t.is_identity() {
        return 0;
    }
    let mut singular = 0;
    for (p, prov) in positions.iter_mut().zip(provs) {
        match exact_position(prov, originals) {
            Some(x) => *p = x,
            None => {
                singular += 1;
                *p = approximate_original(*p, prov, t);
            }
        }
    }
    singular
}

/// Undo only the shared rotation; translations stay. Used for intermediate results
/// that are fed back as inputs.
pub fn unrotate_positions(positions: &mut [Vec3], t: &SceneTransform) {
    if t.rotation == Mat3::IDENTITY {
        return;
    }
    let inv = t.rotation.transpose();
    for p in positions.iter_mut() {
        *p = inv.apply(*p);
    }
}
