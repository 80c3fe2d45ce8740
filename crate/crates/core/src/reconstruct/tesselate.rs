//! Splitting output facets into triangles or convex polygons.
//!
//! Holes are first bridged into the outer loop, the resulting simple polygon is
//! ear-clipped, and in convex mode triangles are merged back across diagonals as
//! long as the union stays convex. Every boundary vertex is kept, including
//! vertices where the boundary runs straight, so neighbouring facets still share
//! their edges.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::facets::{projector, OutputFacet};
use crate::math::{atan2, Vec3};
use crate::stats::Counters;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Tesselation {
    /// Loops as chained; holes are bridged into the outer loop.
    None,
    #[default]
    Convex,
    Triangles,
}

#[inline]
fn cross(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Signed distance of `c` from the line `a -> b`, positive on the left.
#[inline]
fn left_of(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let d = crate::math::sqrt((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]));
    if d > 0.0 {
        cross(a, b, c) / d
    } else {
        0.0
    }
}

/// How far `b` bulges outward from the chord `a c`; positive at a convex corner.
#[inline]
fn bulge(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    -left_of(a, c, b)
}

/// A polygon in the plane: 2D points and the output vertex of each.
struct Flat {
    pts: Vec<[f64; 2]>,
    ids: Vec<u32>,
    /// Distance below which a point counts as on a line.
    tol: f64,
}

impl Flat {
    fn add(&mut self, p: [f64; 2], id: u32) -> usize {
        self.pts.push(p);
        self.ids.push(id);
        self.pts.len() - 1
    }
}

/// Join each hole to the outer ring by a two-way cut from its rightmost vertex to
/// a visible ring vertex.
fn bridge_holes(flat: &mut Flat, mut ring: Vec<usize>, holes: Vec<Vec<usize>>) -> Option<Vec<usize>> {
    let mut holes: Vec<(usize, Vec<usize>)> = holes
        .into_iter()
        .map(|h| {
            let (k, _) = h
                .iter()
                .enumerate()
                .max_by(|a, b| flat.pts[*a.1][0].total_cmp(&flat.pts[*b.1][0]))
                .expect("non-empty hole");
            (k, h)
        })
        .collect();
    holes.sort_by(|a, b| flat.pts[b.1[b.0]][0].total_cmp(&flat.pts[a.1[a.0]][0]));
    for (k, hole) in holes {
        let m = flat.pts[hole[k]];
        // Nearest ring edge hit by the ray from m toward +x.
        let mut best: Option<(f64, usize)> = None;
        let n = ring.len();
        for i in 0..n {
            let a = flat.pts[ring[i]];
            let b = flat.pts[ring[(i + 1) % n]];
            if (a[1] > m[1]) == (b[1] > m[1]) {
                continue;
            }
            let x = a[0] + (m[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if x >= m[0] && best.map_or(true, |(bx, _)| x < bx) {
                best = Some((x, i));
            }
        }
        let (x, i) = best?;
        let a = ring[i];
        let b = ring[(i + 1) % n];
        let mut pick = if flat.pts[a][0] > flat.pts[b][0] { i } else { (i + 1) % n };
        // A reflex ring vertex inside the triangle (m, hit, pick) would block the
        // cut; take the one making the smallest angle with the ray instead.
        let hit = [x, m[1]];
        let p = flat.pts[ring[pick]];
        let tri_ccw = cross(m, hit, p) > 0.0;
        let mut best_angle = f64::INFINITY;
        for j in 0..n {
            let q = flat.pts[ring[j]];
            if j == pick || q == p {
                continue;
            }
            let prev = flat.pts[ring[(j + n - 1) % n]];
            let next = flat.pts[ring[(j + 1) % n]];
            if cross(prev, q, next) > 0.0 {
                continue;
            }
            let (s1, s2, s3) = (cross(m, hit, q), cross(hit, p, q), cross(p, m, q));
            let inside = if tri_ccw {
                s1 >= 0.0 && s2 >= 0.0 && s3 >= 0.0
            } else {
                s1 <= 0.0 && s2 <= 0.0 && s3 <= 0.0
            };
            if inside {
                let d = [q[0] - m[0], q[1] - m[1]];
                let ang = atan2(d[1].abs(), d[0]);
                if ang < best_angle {
                    best_angle = ang;
                    pick = j;
                }
            }
        }
        let ring_v = ring[pick];
        let mut spliced = Vec::with_capacity(ring.len() + hole.len() + 2);
        spliced.extend_from_slice(&ring[..=pick]);
        for t in 0..hole.len() {
            spliced.push(hole[(k + t) % hole.len()]);
        }
        let m_dup = flat.add(m, flat.ids[hole[k]]);
        spliced.push(m_dup);
        let r_dup = flat.add(flat.pts[ring_v], flat.ids[ring_v]);
        spliced.push(r_dup);
        spliced.extend_from_slice(&ring[pick + 1..]);
        ring = spliced;
    }
    Some(ring)
}

/// Ear clipping of a counterclockwise ring. Vertices where the ring is straight or
/// reflex are never clipped and block ears whose triangle touches them.
fn ear_clip(flat: &Flat, ring: &[usize]) -> Option<Vec<[usize; 3]>> {
    let n = ring.len();
    if n < 3 {
        return None;
    }
    let tol = flat.tol;
    let p = |i: usize| flat.pts[ring[i]];
    let mut prev: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
    let mut next: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let mut alive = alloc::vec![true; n];
    let convex = |i: usize, prev: &[usize], next: &[usize]| bulge(p(prev[i]), p(i), p(next[i])) > tol;
    let mut is_convex: Vec<bool> = (0..n).map(|i| convex(i, &prev, &next)).collect();
    let mut out = Vec::with_capacity(n - 2);
    let mut count = n;
    let mut i = 0;
    let mut stall = 0;
    while count > 3 {
        let (a, c) = (prev[i], next[i]);
        let mut ear = is_convex[i];
        if ear {
            let (pa, pb, pc) = (p(a), p(i), p(c));
            let mut j = next[c];
            while j != a {
                if !is_convex[j] {
                    let q = p(j);
                    if q != pa && q != pb && q != pc && left_of(pa, pb, q) >= -tol && left_of(pb, pc, q) >= -tol && left_of(pc, pa, q) >= -tol {
                        ear = false;
                        break;
                    }
                }
                j = next[j];
            }
        }
        if ear {
            out.push([ring[a], ring[i], ring[c]]);
            alive[i] = false;
            next[a] = c;
            prev[c] = a;
            count -= 1;
            is_convex[a] = convex(a, &prev, &next);
            is_convex[c] = convex(c, &prev, &next);
            i = a;
            stall = 0;
        } else {
            i = next[i];
            stall += 1;
            if stall > count {
                return None;
            }
        }
    }
    let a = prev[i];
    let c = next[i];
    debug_assert!(alive[a] && alive[c]);
    let last = [ring[a], ring[i], ring[c]];
    if bulge(flat.pts[last[0]], flat.pts[last[1]], flat.pts[last[2]]) > tol {
        out.push(last);
        return Some(out);
    }
    // Straight vertices left to the end: the remainder is flat. Split the
    // triangle across its long edge at the middle point instead.
    let mid = (0..3).find(|&k| {
        let (u, m, v) = (flat.pts[last[(k + 2) % 3]], flat.pts[last[k]], flat.pts[last[(k + 1) % 3]]);
        (m[0] - u[0]) * (v[0] - m[0]) + (m[1] - u[1]) * (v[1] - m[1]) >= 0.0
    })?;
    let (u, m, v) = (last[(mid + 2) % 3], last[mid], last[(mid + 1) % 3]);
    // The long edge runs v -> u in the remainder, so u -> v in its neighbor.
    let t = out.iter().position(|t| (0..3).any(|e| t[e] == u && t[(e + 1) % 3] == v))?;
    let e = (0..3).find(|&e| out[t][e] == u && out[t][(e + 1) % 3] == v)?;
    let x = out[t][(e + 2) % 3];
    out[t] = [u, m, x];
    out.push([m, v, x]);
    Some(out)
}

/// Merge triangles across shared diagonals while the union stays convex.
fn merge_convex(flat: &Flat, tris: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut polys: Vec<Option<Vec<usize>>> = tris.iter().map(|t| Some(t.to_vec())).collect();
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (k, t) in tris.iter().enumerate() {
        for e in 0..3 {
            owner.insert((t[e], t[(e + 1) % 3]), k);
        }
    }
    let diagonals: Vec<(usize, usize)> = owner.keys().filter(|(a, b)| a < b && owner.contains_key(&(*b, *a))).copied().collect();
    let tol = flat.tol;
    let ok = |ring: &[usize], at: usize| {
        let n = ring.len();
        let i = ring.iter().position(|&x| x == at).expect("vertex in ring");
        bulge(flat.pts[ring[(i + n - 1) % n]], flat.pts[ring[i]], flat.pts[ring[(i + 1) % n]]) >= -tol
    };
    for (a, b) in diagonals {
        let (Some(&pi), Some(&qi)) = (owner.get(&(a, b)), owner.get(&(b, a))) else { continue };
        if pi == qi {
            continue;
        }
        let (p, q) = (polys[pi].as_ref().expect("live"), polys[qi].as_ref().expect("live"));
        // p holds a -> b, q holds b -> a. Walk p from b round to a, then q from a
        // round to b, dropping the shared ends of q.
        let rot = |r: &Vec<usize>, start: usize| -> Vec<usize> {
            let k = r.iter().position(|&x| x == start).expect("vertex in ring");
            r[k..].iter().chain(&r[..k]).copied().collect()
        };
        let pr = rot(p, b);
        let qr = rot(q, a);
        let mut merged = pr.clone();
        merged.extend_from_slice(&qr[1..qr.len() - 1]);
        if !(ok(&merged, a) && ok(&merged, b)) {
            continue;
        }
        let q_edges: Vec<(usize, usize)> = (0..qr.len()).map(|k| (qr[k], qr[(k + 1) % qr.len()])).collect();
        for e in q_edges {
            owner.insert(e, pi);
        }
        owner.remove(&(a, b));
        owner.remove(&(b, a));
        polys[pi] = Some(merged);
        polys[qi] = None;
    }
    polys.into_iter().flatten().collect()
}

/// Polygons covering one output facet, as vertex index lists.
pub fn tesselate_facet(positions: &[Vec3], facet: &OutputFacet, mode: Tesselation, counters: &mut Counters) -> Vec<Vec<u32>> {
    let outer = &facet.loops[0];
    if facet.loops.len() == 1 && (mode == Tesselation::None || (mode == Tesselation::Convex && outer.len() == 3)) {
        return alloc::vec![outer.clone()];
    }
    let proj = projector(facet.normal);
    let mut flat = Flat { pts: Vec::new(), ids: Vec::new(), tol: 0.0 };
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut rings: Vec<Vec<usize>> = Vec::new();
    for l in &facet.loops {
        let ring = l
            .iter()
            .map(|&v| {
                let q = proj(positions[v as usize]);
                for k in 0..2 {
                    lo[k] = lo[k].min(q[k]);
                    hi[k] = hi[k].max(q[k]);
                }
                flat.add(q, v)
            })
            .collect();
        rings.push(ring);
    }
    let size = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    flat.tol = 1e-12 * size;
    let outer_ring = rings.remove(0);
    if mode == Tesselation::Convex && rings.is_empty() {
        let n = outer_ring.len();
        let convex = (0..n).all(|i| bulge(flat.pts[outer_ring[(i + n - 1) % n]], flat.pts[outer_ring[i]], flat.pts[outer_ring[(i + 1) % n]]) >= -flat.tol);
        if convex {
            return alloc::vec![outer.clone()];
        }
    }
    let Some(ring) = bridge_holes(&mut flat, outer_ring, rings) else {
        counters.tesselation_failures += 1;
        return alloc::vec![outer.clone()];
    };
    if mode == Tesselation::None {
        return alloc::vec![ring.iter().map(|&i| flat.ids[i]).collect()];
    }
    let Some(tris) = ear_clip(&flat, &ring) else {
        counters.tesselation_failures += 1;
        return alloc::vec![ring.iter().map(|&i| flat.ids[i]).collect()];
    };
    let pieces: Vec<Vec<usize>> = match mode {
        Tesselation::Convex => merge_convex(&flat, &tris),
        _ => tris.iter().map(|t| t.to_vec()).collect(),
    };
    pieces.into_iter().map(|p| p.into_iter().map(|i| flat.ids[i]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::polygon_area;
    use crate::scene::FacetRef;

    fn facet(loops: Vec<Vec<u32>>) -> OutputFacet {
        OutputFacet { host: FacetRef::new(0, 0), positive: true, loops, normal: Vec3::axis(2) }
    }

    fn area(pos: &[Vec3], polys: &[Vec<u32>]) -> f64 {
        polys.iter().map(|p| polygon_area(&p.iter().map(|&v| pos[v as usize]).collect::<Vec<_>>(), Vec3::axis(2))).sum()
    }

    fn pts(xy: &[(f64, f64)]) -> Vec<Vec3> {
        xy.iter().map(|&(x, y)| Vec3::new(x, y, 0.0)).collect()
    }

    #[test]
    fn quad_to_two_triangles() {
        let p = pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0)]);
        let mut c = Counters::default();
        let t = tesselate_facet(&p, &facet(alloc::vec![alloc::vec![0, 1, 2, 3]]), Tesselation::Triangles, &mut c);
        assert_eq!(t.len(), 2);
        assert!((area(&p, &t) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn square_with_hole() {
        let p = pts(&[(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0), (1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (2.0, 1.0)]);
        let f = facet(alloc::vec![alloc::vec![0, 1, 2, 3], alloc::vec![4, 5, 6, 7]]);
        let mut c = Counters::default();
        let t = tesselate_facet(&p, &f, Tesselation::Triangles, &mut c);
        assert!(t.len() >= 8);
        assert!(t.iter().all(|x| x.len() == 3));
        // Shoelace: 16 - 1.
        assert!((area(&p, &t) - 15.0).abs() < 1e-9 * 15.0);
        let cv = tesselate_facet(&p, &f, Tesselation::Convex, &mut c);
        assert!((area(&p, &cv) - 15.0).abs() < 1e-9 * 15.0);
        assert!(cv.len() < t.len());
        assert_eq!(c.tesselation_failures, 0);
    }

    #[test]
    fn none_mode_passes_loops() {
        let p = pts(&[(0.0, 0.0), (2.0, 0.0), (3.0, 1.0), (1.0, 0.5), (0.0, 1.0)]);
        let mut c = Counters::default();
        let f = facet(alloc::vec![alloc::vec![0, 1, 2, 3, 4]]);
        assert_eq!(tesselate_facet(&p, &f, Tesselation::None, &mut c), f.loops);
    }

    #[test]
    fn no_flat_triangles_with_straight_runs() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (1.5, 1.0)]);
        let mut c = Counters::default();
        let t = tesselate_facet(&p, &facet(alloc::vec![alloc::vec![0, 1, 2, 3, 4]]), Tesselation::Triangles, &mut c);
        assert_eq!(t.len(), 3);
        for tri in &t {
            assert!(area(&p, core::slice::from_ref(tri)) > 0.1, "{tri:?}");
        }
        assert!((area(&p, &t) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn straight_vertices_are_kept() {
        // Triangle with a vertex in the middle of its base.
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 1.0)]);
        let mut c = Counters::default();
        let t = tesselate_facet(&p, &facet(alloc::vec![alloc::vec![0, 1, 2, 3]]), Tesselation::Triangles, &mut c);
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|x| x.contains(&1)));
        assert!((area(&p, &t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonconvex_convex_mode() {
        // An L shape: two convex pieces at least, area conserved.
        let p = pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]);
        let mut c = Counters::default();
        let t = tesselate_facet(&p, &facet(alloc::vec![alloc::vec![0, 1, 2, 3, 4, 5]]), Tesselation::Convex, &mut c);
        assert!(t.len() >= 2 && t.len() <= 3);
        assert!((area(&p, &t) - 3.0).abs() < 1e-12);
    }
}
