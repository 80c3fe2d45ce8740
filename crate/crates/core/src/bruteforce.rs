//! Exhaustive vertex search over vertices, facet pairs and facet triples.
//!
//! The same routine serves as the KD leaf search, restricted to the facets
//! present in the cell and to points inside the cell.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::boolfn::BoolFn;
use crate::classify::{classify_candidate, point_indicator, FinalVertex, GlobalRays, IndicatorSource, Provenance};
use crate::math::{Aabb, Vec3};
use crate::predicates::{intersect2facets, intersect_segment_facet};
use crate::scene::{FacetRef, Scene};
use crate::stats::Counters;

fn accept(bounds: Option<&Aabb>, p: Vec3) -> bool {
    bounds.map_or(true, |b| b.contains_half_open(p))
}

fn try_candidate(
    f: &BoolFn,
    src: &dyn IndicatorSource,
    pos: Vec3,
    prov: Provenance,
    out: &mut Vec<FinalVertex>,
    counters: &mut Counters,
) {
    match point_indicator(pos, &prov, f.arity(), src) {
        Ok(iv) => {
            if let Some(v) = classify_candidate(f, pos, prov, iv).expect("indicator matches provenance") {
                out.push(v);
            }
        }
        Err(_) => counters.undecided += 1,
    }
}

/// Order-1 candidates: each listed input vertex once.
pub fn search_vertices(
    scene: &Scene,
    f: &BoolFn,
    vertices: &[(u32, u32)],
    src: &dyn IndicatorSource,
    out: &mut Vec<FinalVertex>,
    counters: &mut Counters,
) {
    for &(mesh, vertex) in vertices {
        let pos = scene.meshes[mesh as usize].vertex(vertex);
        try_candidate(f, src, pos, Provenance::Vertex { mesh, vertex }, out, counters);
    }
}

/// Order-2 and order-3 candidates from the sorted facet list.
pub fn search_intersections(
    scene: &Scene,
    f: &BoolFn,
    facets: &[FacetRef],
    bounds: Option<&Aabb>,
    src: &dyn IndicatorSource,
    out: &mut Vec<FinalVertex>,
    counters: &mut Counters,
) {
    let mut seen: BTreeSet<Provenance> = BTreeSet::new();
    for (ia, &a) in facets.iter().enumerate() {
        let ba = scene.facet_bounds(a).inflate(scene.eps);
        for (ib, &b) in facets.iter().enumerate().skip(ia + 1) {
            if b.mesh == a.mesh || !ba.overlaps(scene.facet_bounds(b)) {
                continue;
            }
            counters.pair_tests += 1;
            let seg = match intersect2facets(scene, a, b) {
                Ok(Some(s)) => s,
                Ok(None) => continue,
                Err(_) => {
                    counters.degeneracies += 1;
                    continue;
                }
            };
            counters.intersecting_pairs += 1;
            for end in &seg.ends {
                if !accept(bounds, end.point) {
                    continue;
                }
                let prov = Provenance::EdgeFacet { edge: end.edge, facet: end.crossed };
                if seen.insert(prov) {
                    try_candidate(f, src, end.point, prov, out, counters);
                }
            }
            let (p, q) = (seg.ends[0].point, seg.ends[1].point);
            let mut sb = Aabb::new(p, p);
            sb.extend(q);
            let sb = sb.inflate(scene.eps);
            for &c in &facets[ib + 1..] {
                if c.mesh == a.mesh || c.mesh == b.mesh || !sb.overlaps(scene.facet_bounds(c)) {
                    continue;
                }
                counters.triple_tests += 1;
                match intersect_segment_facet(scene, p, q, c) {
                    Ok(Some(x)) => {
                        if accept(bounds, x) {
                            let mut t = [a, b, c];
                            t.sort();
                            try_candidate(f, src, x, Provenance::Triple(t), out, counters);
                        }
                    }
                    Ok(None) => {}
                    Err(_) => counters.degeneracies += 1,
                }
            }
        }
    }
}

/// All vertices of the result, by exhaustive search with global ray shooting.
pub fn csg_vertices(scene: &Scene, f: &BoolFn) -> (Vec<FinalVertex>, Counters) {
    let mut out = Vec::new();
    let mut counters = Counters::default();
    let src = GlobalRays { scene };
    let vertices: Vec<(u32, u32)> = scene
        .meshes
        .iter()
        .enumerate()
        .flat_map(|(i, m)| (0..m.vertices().len() as u32).map(move |v| (i as u32, v)))
        .collect();
    search_vertices(scene, f, &vertices, &src, &mut out, &mut counters);
    let facets: Vec<FacetRef> = scene.all_facets().collect();
    search_intersections(scene, f, &facets, None, &src, &mut out, &mut counters);
    (out, counters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jitter::{apply_jitter, JitterConfig};
    use crate::mesh::topology_pass;
    use crate::shapes;

    fn scene_of(raws: &[crate::mesh::RawMesh]) -> Scene {
        Scene::new(raws.iter().map(|r| topology_pass(r).unwrap()).collect())
    }

    #[test]
    fn identity_keeps_cube_vertices() {
        let s = scene_of(&[shapes::unit_cube()]);
        let (v, c) = csg_vertices(&s, &BoolFn::input(0, 1));
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|x| x.order() == 1));
        assert_eq!(c.errors(), 0);
    }

    #[test]
    fn no_triples_without_intersecting_pairs() {
        let a = shapes::unit_cube();
        let b = shapes::translate(&a, Vec3::new(3.0, 0.0, 0.0));
        let c = shapes::translate(&a, Vec3::new(0.0, 3.0, 0.0));
        let s = scene_of(&[a, b, c]);
        let (_, cnt) = csg_vertices(&s, &BoolFn::union(3));
        assert_eq!(cnt.intersecting_pairs, 0);
        assert_eq!(cnt.triple_tests, 0);
    }

    /// Vertices of the intersection of half-spaces, by brute-force plane triples.
    fn clip_oracle_vertex_count(planes: &[crate::math::Plane]) -> usize {
        let mut pts: Vec<Vec3> = Vec::new();
        for i in 0..planes.len() {
            for j in i + 1..planes.len() {
                for k in j + 1..planes.len() {
                    if let Some(x) = crate::math::three_plane_point([&planes[i], &planes[j], &planes[k]], 1e-9) {
                        if planes.iter().all(|p| p.distance(x) <= 1e-9) && !pts.iter().any(|q| (*q - x).norm() < 1e-7) {
                            pts.push(x);
                        }
                    }
                }
            }
        }
        pts.len()
    }

    #[test]
    fn two_cube_intersection_matches_clipping_oracle() {
        let a = shapes::unit_cube();
        let b = shapes::translate(&a, Vec3::new(0.5, 0.5, 0.5));
        let meshes: Vec<_> = [a, b].iter().map(|r| topology_pass(r).unwrap()).collect();
        let (jm, _) = apply_jitter(&meshes, &JitterConfig::rotation_only(0.7, 17));
        let s = Scene::new(jm.clone());
        let (v, c) = csg_vertices(&s, &BoolFn::intersection(2));
        assert_eq!(c.errors(), 0);
        let mut planes = Vec::new();
        for m in &jm {
            for f in 0..m.facet_count() as u32 {
                planes.push(*m.plane(f));
            }
        }
        assert_eq!(v.len(), clip_oracle_vertex_count(&planes));
        assert_eq!(v.iter().filter(|x| x.order() == 2).count(), 6);
    }

    #[test]
    fn min2_equals_expanded_tree() {
        let a = shapes::unit_cube();
        let b = shapes::translate(&a, Vec3::new(0.4, 0.3, 0.2));
        let c = shapes::translate(&a, Vec3::new(-0.3, 0.45, 0.35));
        let meshes: Vec<_> = [a, b, c].iter().map(|r| topology_pass(r).unwrap()).collect();
        let (jm, _) = apply_jitter(&meshes, &JitterConfig::both(1e-3, 9));
        let s = Scene::new(jm);
        let (mut v1, _) = csg_vertices(&s, &BoolFn::min_k(2, 3).unwrap());
        let g = crate::boolfn::from_csg_tree(&crate::boolfn::expand_min2_binary(3));
        let (mut v2, _) = csg_vertices(&s, &g);
        v1.sort_by_key(|v| v.prov);
        v2.sort_by_key(|v| v.prov);
        assert_eq!(v1, v2);
        assert!(v1.iter().any(|v| v.order() == 3));
    }

    #[test]
    fn facet_order_does_not_matter() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let a = shapes::icosphere(1);
        let b = shapes::translate(&shapes::unit_cube(), Vec3::new(0.1, -0.3, 0.2));
        let c = shapes::translate(&shapes::icosphere(1), Vec3::new(0.4, 0.3, -0.2));
        let meshes: Vec<_> = [a, b, c].iter().map(|r| topology_pass(r).unwrap()).collect();
        let (jm, _) = apply_jitter(&meshes, &JitterConfig::both(1e-4, 4));
        let s = Scene::new(jm);
        let f = BoolFn::min_k(2, 3).unwrap();
        let (mut ref_v, _) = csg_vertices(&s, &f);
        ref_v.sort_by_key(|v| v.prov);
        assert!(ref_v.iter().any(|v| v.order() == 3));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3 {
            let mut facets: Vec<FacetRef> = s.all_facets().collect();
            facets.shuffle(&mut rng);
            let mut verts: Vec<(u32, u32)> = (0..3u32)
                .flat_map(|i| (0..s.meshes[i as usize].vertices().len() as u32).map(move |v| (i, v)))
                .collect();
            verts.shuffle(&mut rng);
            let mut out = Vec::new();
            let mut cnt = Counters::default();
            let src = GlobalRays { scene: &s };
            search_vertices(&s, &f, &verts, &src, &mut out, &mut cnt);
            search_intersections(&s, &f, &facets, None, &src, &mut out, &mut cnt);
            out.sort_by_key(|v| v.prov);
            assert_eq!(out.len(), ref_v.len());
            for (x, y) in out.iter().zip(&ref_v) {
                assert_eq!((x.prov, x.class), (y.prov, y.class));
                assert!((x.pos - y.pos).max_abs() < 1e-12);
            }
        }
    }

}
