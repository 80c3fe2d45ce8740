//! Whole-pipeline checks against volumes computed from box coordinates.

use narycsg_core::boolfn::{from_csg_tree, BoolFn};
use narycsg_core::jitter::JitterConfig;
use narycsg_core::mesh::topology_pass;
use narycsg_core::pipeline::{evaluate, PipelineConfig, VertexSearch};
use narycsg_core::reconstruct::Tesselation;
use narycsg_core::{shapes, CsgTree, Mesh, Vec3};
use proptest::prelude::*;

fn boxes(spec: &[([f64; 3], [f64; 3])]) -> Vec<Mesh> {
    spec.iter().map(|(a, b)| topology_pass(&shapes::cuboid(Vec3::from(*a), Vec3::from(*b))).unwrap()).collect()
}

fn overlap(a: &([f64; 3], [f64; 3]), b: &([f64; 3], [f64; 3])) -> f64 {
    (0..3).map(|k| (a.1[k].min(b.1[k]) - a.0[k].max(b.0[k])).max(0.0)).product()
}

fn size(a: &([f64; 3], [f64; 3])) -> f64 {
    (0..3).map(|k| a.1[k] - a.0[k]).product()
}

fn arb_box() -> impl Strategy<Value = ([f64; 3], [f64; 3])> {
    (prop::array::uniform3(-1.0..1.0f64), prop::array::uniform3(0.3..1.5f64))
        .prop_map(|(lo, ext)| (lo, [lo[0] + ext[0], lo[1] + ext[1], lo[2] + ext[2]]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn two_box_volumes(a in arb_box(), b in arb_box(), seed in 0u64..1000) {
        let m = boxes(&[a, b]);
        let cfg = PipelineConfig { jitter: JitterConfig::new(seed), ..Default::default() };
        let (va, vb, vi) = (size(&a), size(&b), overlap(&a, &b));
        for (f, want) in [
            (BoolFn::union(2), va + vb - vi),
            (BoolFn::intersection(2), vi),
            (BoolFn::difference(2), va - vi),
            (BoolFn::xor(2), va + vb - 2.0 * vi),
        ] {
            let e = evaluate(&m, &f, &cfg).unwrap();
            prop_assert_eq!(e.counters.errors(), 0);
            prop_assert_eq!(e.mesh.unmatched_edges(), 0);
            prop_assert!((e.mesh.signed_volume() - want).abs() <= 1e-9 * (va + vb));
        }
    }
}

#[test]
fn every_tesselation_gives_the_same_solid() {
    let m = boxes(&[([0.0; 3], [1.0; 3]), ([0.3, 0.2, -0.5], [0.7, 0.6, 1.5])]);
    // A tunnel through the cube: the end faces get a hole.
    let f = BoolFn::difference(2);
    let mut volumes = Vec::new();
    for t in [Tesselation::None, Tesselation::Convex, Tesselation::Triangles] {
        let cfg = PipelineConfig { tesselation: t, jitter: JitterConfig::new(2), ..Default::default() };
        let e = evaluate(&m, &f, &cfg).unwrap();
        assert_eq!(e.counters.errors(), 0, "{t:?}");
        assert_eq!(e.mesh.unmatched_edges(), 0, "{t:?}");
        if t == Tesselation::Triangles {
            assert!(e.mesh.facets.iter().all(|f| f.len() == 3));
        }
        volumes.push(e.mesh.signed_volume());
    }
    for v in volumes {
        assert!((v - (1.0 - 0.16)).abs() < 1e-12, "{v}");
    }
}

#[test]
fn tunnel_has_genus_one() {
    let m = boxes(&[([0.0; 3], [1.0; 3]), ([0.3, 0.2, -0.5], [0.7, 0.6, 1.5])]);
    let cfg = PipelineConfig { jitter: JitterConfig::new(5), ..Default::default() };
    let e = evaluate(&m, &BoolFn::difference(2), &cfg).unwrap();
    assert_eq!(e.mesh.euler_characteristic(), 0);
}

#[test]
fn search_strategies_agree_on_a_sphere_stack() {
    let raws: Vec<_> = (0..4)
        .map(|i| shapes::translate(&shapes::icosphere(2), Vec3::new(0.45 * i as f64, 0.1 * i as f64, 0.0)))
        .collect();
    let m: Vec<Mesh> = raws.iter().map(|r| topology_pass(r).unwrap()).collect();
    let f = BoolFn::min_k(2, 4).unwrap();
    let kd = evaluate(&m, &f, &PipelineConfig::default()).unwrap();
    let brute = evaluate(&m, &f, &PipelineConfig { search: VertexSearch::Brute, ..Default::default() }).unwrap();
    assert_eq!(kd.mesh, brute.mesh);
    assert_eq!(kd.counters.errors(), 0);
}

#[test]
fn nested_tree_matches_flat_expression() {
    // (P0 | P1) - P2 written two ways.
    let m = boxes(&[([0.0; 3], [1.0; 3]), ([0.5, 0.1, 0.2], [1.4, 0.9, 0.8]), ([0.2, -0.3, 0.4], [1.1, 0.5, 1.3])]);
    let tree = CsgTree::Diff(Box::new(CsgTree::Union(Box::new(CsgTree::Leaf(0)), Box::new(CsgTree::Leaf(1)))), Box::new(CsgTree::Leaf(2)));
    let table: Vec<bool> = (0..8).map(|i| (i & 1 == 1 || i & 2 == 2) && i & 4 == 0).collect();
    let cfg = PipelineConfig::default();
    let a = evaluate(&m, &from_csg_tree(&tree), &cfg).unwrap();
    let b = evaluate(&m, &BoolFn::from_truth_table(3, &table), &cfg).unwrap();
    assert_eq!(a.mesh, b.mesh);
}

#[test]
fn empty_result_is_an_empty_mesh() {
    let m = boxes(&[([0.0; 3], [1.0; 3]), ([2.0; 3], [3.0; 3])]);
    let e = evaluate(&m, &BoolFn::intersection(2), &PipelineConfig::default()).unwrap();
    assert!(e.mesh.facets.is_empty());
    assert_eq!(e.mesh.signed_volume(), 0.0);
}
