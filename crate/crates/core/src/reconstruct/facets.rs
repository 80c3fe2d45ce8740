//! Chaining looplets into output facet loops.

use alloc::vec::Vec;
use core::cmp::Ordering;

use super::looplets::Looplet;
use crate::math::{polygon_area, Vec3};
use crate::scene::{FacetRef, Scene};
use crate::stats::Counters;

/// One polygon of the result lying in an input facet plane.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFacet {
    pub host: FacetRef,
    pub positive: bool,
    /// Outer loop first, then holes. Vertex indices.
    pub loops: Vec<Vec<u32>>,
    /// Host normal, negated for reversed facets.
    pub normal: Vec3,
}

/// Order looplets by host, orientation and incoming direction.
pub fn sort_looplets(l: &mut [Looplet]) {
    l.sort_by(|a, b| {
        (a.host, !a.positive, a.incoming, a.vertex)
            .cmp(&(b.host, !b.positive, b.incoming, b.vertex))
            .then_with(|| a.outgoing.cmp(&b.outgoing))
    });
}

/// Ranges of sorted looplets sharing host and orientation.
pub fn group_ranges(l: &[Looplet]) -> Vec<core::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut s = 0;
    for i in 1..=l.len() {
        if i == l.len() || l[i].host != l[s].host || l[i].positive != l[s].positive {
            if i > s {
                out.push(s..i);
            }
            s = i;
        }
    }
    out
}

/// Closed loops of one (host, orientation) group; chains that do not close are
/// dropped and counted.
pub fn chain_loops(positions: &[Vec3], group: &[Looplet], counters: &mut Counters) -> Vec<Vec<u32>> {
    let n = group.len();
    let mut used = alloc::vec![false; n];
    let mut loops = Vec::new();
    for seed in 0..n {
        if used[seed] {
            continue;
        }
        used[seed] = true;
        let mut verts = alloc::vec![group[seed].vertex];
        let mut cur = seed;
        let closed = loop {
            let key = group[cur].outgoing;
            let from = positions[group[cur].vertex as usize];
            let dir = group[cur].out_vec;
            let lo = group.partition_point(|l| l.incoming < key);
            let hi = group.partition_point(|l| l.incoming <= key);
            let mut best: Option<(f64, usize)> = None;
            for c in lo..hi {
                if used[c] && c != seed {
                    continue;
                }
                let t = (positions[group[c].vertex as usize] - from).dot(dir);
                if !(t > 0.0) {
                    continue;
                }
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, c));
                }
            }
            match best {
                None => break false,
                Some((_, c)) if c == seed => break true,
                Some((_, c)) => {
                    used[c] = true;
                    verts.push(group[c].vertex);
                    cur = c;
                    if verts.len() > n {
                        break false;
                    }
                }
            }
        };
        if closed {
            loops.push(verts);
        } else {
            counters.incomplete_loops += 1;
        }
    }
    loops
}

/// Drop the coordinate along the dominant normal axis, keeping counterclockwise
/// order about `n`.
pub fn projector(n: Vec3) -> impl Fn(Vec3) -> [f64; 2] {
    let a = [n.x.abs(), n.y.abs(), n.z.abs()];
    let k = if a[0] >= a[1] && a[0] >= a[2] {
        0
    } else if a[1] >= a[2] {
        1
    } else {
        2
    };
    let (mut u, mut v) = ((k + 1) % 3, (k + 2) % 3);
    if n[k] < 0.0 {
        core::mem::swap(&mut u, &mut v);
    }
    move |p: Vec3| [p[u], p[v]]
}

pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let k = poly.len();
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Sort loops into outer boundaries (counterclockwise about `normal`) and the
/// holes they contain.
pub fn nest_loops(positions: &[Vec3], loops: Vec<Vec<u32>>, normal: Vec3, counters: &mut Counters) -> Vec<Vec<Vec<u32>>> {
    let pts = |l: &[u32]| -> Vec<Vec3> { l.iter().map(|&v| positions[v as usize]).collect() };
    let proj = projector(normal);
    let mut outers: Vec<(f64, Vec<Vec<u32>>, Vec<[f64; 2]>)> = Vec::new();
    let mut holes = Vec::new();
    for l in loops {
        let a = polygon_area(&pts(&l), normal);
        if a > 0.0 {
            let p2 = l.iter().map(|&v| proj(positions[v as usize])).collect();
            outers.push((a, alloc::vec![l], p2));
        } else {
            holes.push(l);
        }
    }
    for h in holes {
        let p = positions[h[0] as usize];
        let q = positions[h[1 % h.len()] as usize];
        let probe = proj((p + q) * 0.5);
        let host = outers
            .iter()
            .enumerate()
            .filter(|(_, o)| point_in_polygon(probe, &o.2))
            .min_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap_or(Ordering::Equal))
            .map(|(i, _)| i);
        match host {
            Some(i) => outers[i].1.push(h),
            None => counters.incomplete_loops += 1,
        }
    }
    outers.into_iter().map(|o| o.1).collect()
}

/// Output facets from all looplets.
pub fn csg_facets(scene: &Scene, positions: &[Vec3], mut looplets: Vec<Looplet>, counters: &mut Counters) -> Vec<OutputFacet> {
    sort_looplets(&mut looplets);
    let mut out = Vec::new();
    for r in group_ranges(&looplets) {
        out.extend(group_facets(scene, positions, &looplets[r], counters));
    }
    out
}

/// Facets of one (host, orientation) group of sorted looplets.
pub fn group_facets(scene: &Scene, positions: &[Vec3], group: &[Looplet], counters: &mut Counters) -> Vec<OutputFacet> {
    let host = group[0].host;
    let positive = group[0].positive;
    let n = scene.plane(host).normal;
    let normal = if positive { n } else { -n };
    let loops = chain_loops(positions, group, counters);
    nest_loops(positions, loops, normal, counters)
        .into_iter()
        .map(|loops| OutputFacet { host, positive, loops, normal })
        .collect()
}

/// Rotate a loop to start at its smallest vertex.
pub fn canonical_loop(l: &[u32]) -> Vec<u32> {
    let k = l.iter().enumerate().min_by_key(|(_, v)| **v).map(|(i, _)| i).unwrap_or(0);
    l[k..].iter().chain(&l[..k]).copied().collect()
}
