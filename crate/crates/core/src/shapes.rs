//! Closed primitive meshes with outward orientation.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::math::{sin_cos, Vec3};
use crate::mesh::RawMesh;

/// Axis-aligned box as 6 quads. Vertex `i` sits at corner `(i & 1, i >> 1 & 1, i >> 2 & 1)`.
pub fn cuboid(min: Vec3, max: Vec3) -> RawMesh {
    let vertices = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { min.x } else { max.x },
                if i & 2 == 0 { min.y } else { max.y },
                if i & 4 == 0 { min.z } else { max.z },
            )
        })
        .collect();
    let facets = vec![
        vec![0, 2, 3, 1],
        vec![4, 5, 7, 6],
        vec![0, 1, 5, 4],
        vec![2, 6, 7, 3],
        vec![0, 4, 6, 2],
        vec![1, 3, 7, 5],
    ];
    RawMesh { vertices, facets }
}

pub fn unit_cube() -> RawMesh {
    cuboid(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0))
}

pub fn tetrahedron() -> RawMesh {
    RawMesh {
        vertices: vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ],
        facets: vec![vec![0, 2, 1], vec![0, 1, 3], vec![0, 3, 2], vec![1, 2, 3]],
    }
}

/// Unit sphere from a subdivided icosahedron: `20 * 4^level` triangles.
pub fn icosphere(level: u32) -> RawMesh {
    let t = (1.0 + crate::math::sqrt(5.0)) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized().unwrap())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut midpoint = |a: u32, b: u32, vs: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let p = ((vs[a as usize] + vs[b as usize]) * 0.5).normalized().unwrap();
                vs.push(p);
                vs.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    RawMesh { vertices, facets: faces.iter().map(|f| f.to_vec()).collect() }
}

/// Torus around the z axis with planar quad facets: `nu * nv` facets.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> RawMesh {
    let mut vertices = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let (su, cu) = sin_cos(2.0 * core::f64::consts::PI * i as f64 / nu as f64);
        for j in 0..nv {
            let (sv, cv) = sin_cos(2.0 * core::f64::consts::PI * j as f64 / nv as f64);
            let rr = major + minor * cv;
            vertices.push(Vec3::new(rr * cu, rr * su, minor * sv));
        }
    }
    let id = |i: usize, j: usize| ((i % nu) * nv + (j % nv)) as u32;
    let mut facets = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            facets.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    RawMesh { vertices, facets }
}

/// Apply an affine map to every vertex; a negative determinant also flips the loops.
pub fn transform(raw: &RawMesh, f: impl Fn(Vec3) -> Vec3) -> RawMesh {
    RawMesh { vertices: raw.vertices.iter().map(|&p| f(p)).collect(), facets: raw.facets.clone() }
}

pub fn translate(raw: &RawMesh, t: Vec3) -> RawMesh {
    transform(raw, |p| p + t)
}
