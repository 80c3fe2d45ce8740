//! Facet intersections, ray shooting and polygon clipping.
//!
//! Every construction orders its inputs canonically (edges by vertex index,
//! segments by coordinates) so the same primitive yields bit-identical points no
//! matter which facet or cell asks for it.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::math::{splitmix64, sphere_point, unit_f64, Plane, Vec3};
use crate::scene::{EdgeRef, FacetRef, Scene};

/// Ray retries after a grazing hit.
pub const RAY_RETRIES: u32 = 8;
/// Cross-product norm below which two unit normals count as parallel.
const PARALLEL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    /// Two facets in the same plane, or a segment lying in a plane.
    Coplanar,
    /// A vertex or segment end on another facet.
    OnPlane,
    /// A constructed point on a polygon boundary.
    OnEdge,
    /// An odd number of crossings between two convex facets.
    Inconsistent,
    /// The nearest ray hit is tangent to its facet.
    Grazing,
    /// Every ray attempt grazed an edge.
    IndicatorUndecided,
}

/// A cropped piece of an input facet, lying in its plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Fragment {
    pub facet: FacetRef,
    pub poly: Vec<Vec3>,
}

/// One end of a facet/facet intersection segment: where `edge` crosses `crossed`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentEnd {
    pub point: Vec3,
    pub edge: EdgeRef,
    pub crossed: FacetRef,
}

/// Intersection of two facets, ends ordered along `normal(a) × normal(b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub facets: [FacetRef; 2],
    pub ends: [SegmentEnd; 2],
}

/// Point where the segment `p q` crosses `plane`, computed from the endpoint with
/// the smaller key so that `(p, q)` and `(q, p)` agree bit for bit.
#[inline]
fn crossing(p: Vec3, dp: f64, q: Vec3, dq: f64) -> Vec3 {
    p + (q - p) * (dp / (dp - dq))
}

#[inline]
fn side(d: f64) -> bool {
    d > 0.0
}

/// Strict point-in-convex-polygon test in the polygon's plane.
///
/// `Ok(false)` as soon as the point is clearly outside one edge; `Err(OnEdge)` if it
/// is within `eps` of the boundary and not clearly outside.
pub fn inside_convex(pts: impl Iterator<Item = Vec3> + Clone, n: Vec3, c: Vec3, eps: f64) -> Result<bool, Degeneracy> {
    let first = match pts.clone().next() {
        Some(p) => p,
        None => return Ok(false),
    };
    let mut near = false;
    let mut it = pts.peekable();
    while let Some(u) = it.next() {
        let w = *it.peek().unwrap_or(&first);
        let e = w - u;
        let s = e.cross(c - u).dot(n);
        let tol = eps * e.norm();
        if s < -tol {
            return Ok(false);
        }
        if s <= tol {
            near = true;
        }
    }
    if near {
        Err(Degeneracy::OnEdge)
    } else {
        Ok(true)
    }
}

pub fn inside_facet(scene: &Scene, f: FacetRef, c: Vec3) -> Result<bool, Degeneracy> {
    inside_convex(scene.points(f), scene.plane(f).normal, c, scene.eps)
}

/// Is `c` inside or within `eps` of facet `f`?
fn touches_facet(scene: &Scene, f: FacetRef, c: Vec3) -> bool {
    !matches!(inside_facet(scene, f, c), Ok(false))
}

/// Edges of `x` crossing the plane of `y` strictly, at points inside `y`.
fn edge_crossings(scene: &Scene, x: FacetRef, y: FacetRef, out: &mut Vec<SegmentEnd>) -> Result<(), Degeneracy> {
    let plane = scene.plane(y);
    let m = scene.mesh(x);
    let lp = m.facet(x.facet);
    let k = lp.len();
    for i in 0..k {
        let (a, b) = (lp[i], lp[(i + 1) % k]);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (p, q) = (m.vertex(lo), m.vertex(hi));
        let (dp, dq) = (plane.distance(p), plane.distance(q));
        if dp.abs() <= scene.eps && touches_facet(scene, y, p) {
            return Err(Degeneracy::OnPlane);
        }
        if side(dp) == side(dq) {
            continue;
        }
        let point = crossing(p, dp, q, dq);
        if inside_facet(scene, y, point)? {
            out.push(SegmentEnd { point, edge: scene.edge(x, i), crossed: y });
        }
    }
    Ok(())
}

/// Intersection of two convex facets from different meshes.
pub fn intersect2facets(scene: &Scene, a: FacetRef, b: FacetRef) -> Result<Option<Segment>, Degeneracy> {
    if !scene.facet_bounds(a).inflate(scene.eps).overlaps(scene.facet_bounds(b)) {
        return Ok(None);
    }
    let (pa, pb) = (scene.plane(a), scene.plane(b));
    let dir = pa.normal.cross(pb.normal);
    if dir.norm() <= PARALLEL_TOL {
        let p0 = scene.points(a).next().expect("facet has vertices");
        if pb.distance(p0).abs() <= scene.eps {
            return Err(Degeneracy::Coplanar);
        }
        return Ok(None);
    }
    let mut ends = Vec::with_capacity(2);
    edge_crossings(scene, a, b, &mut ends)?;
    edge_crossings(scene, b, a, &mut ends)?;
    match ends.len() {
        0 => Ok(None),
        2 => {
            let (mut e0, mut e1) = (ends[0], ends[1]);
            if e0.point.dot(dir) > e1.point.dot(dir) {
                core::mem::swap(&mut e0, &mut e1);
            }
            Ok(Some(Segment { facets: [a, b], ends: [e0, e1] }))
        }
        _ => Err(Degeneracy::Inconsistent),
    }
}

/// Where the segment `p q` crosses facet `c`, if it does so strictly inside.
pub fn intersect_segment_facet(scene: &Scene, p: Vec3, q: Vec3, c: FacetRef) -> Result<Option<Vec3>, Degeneracy> {
    let plane = scene.plane(c);
    let (mut p, mut q) = (p, q);
    if q.lex_cmp(&p) == Ordering::Less {
        core::mem::swap(&mut p, &mut q);
    }
    let (dp, dq) = (plane.distance(p), plane.distance(q));
    let (on_p, on_q) = (dp.abs() <= scene.eps, dq.abs() <= scene.eps);
    if on_p && on_q {
        return Err(Degeneracy::Coplanar);
    }
    if (on_p && touches_facet(scene, c, p)) || (on_q && touches_facet(scene, c, q)) {
        return Err(Degeneracy::OnPlane);
    }
    if side(dp) == side(dq) {
        return Ok(None);
    }
    let x = crossing(p, dp, q, dq);
    if inside_facet(scene, c, x)? {
        Ok(Some(x))
    } else {
        Ok(None)
    }
}

/// Reproducible pseudo-random direction for a point and attempt number.
pub fn ray_direction(x: Vec3, attempt: u32) -> Vec3 {
    let [a, b, c] = x.bits();
    let h = splitmix64(a ^ splitmix64(b ^ splitmix64(c ^ (attempt as u64).wrapping_mul(0x2545_f491_4f6c_dd1d))));
    let h2 = splitmix64(h);
    sphere_point(unit_f64(h), unit_f64(h2))
}

/// Inside test by signed crossing count along a random ray.
pub fn shoot_ray_global(scene: &Scene, mesh: usize, x: Vec3) -> Result<bool, Degeneracy> {
    let m = &scene.meshes[mesh];
    'attempt: for attempt in 0..=RAY_RETRIES {
        let dir = ray_direction(x, attempt);
        let mut winding = 0i32;
        for f in 0..m.facet_count() as u32 {
            let pl = m.plane(f);
            let denom = pl.normal.dot(dir);
            let dist = pl.distance(x);
            if denom.abs() < 1e-12 {
                if dist.abs() <= scene.eps {
                    continue 'attempt;
                }
                continue;
            }
            let t = -dist / denom;
            if t <= 0.0 {
                continue;
            }
            let h = x + dir * t;
            if !m.facet_bounds(f).inflate(scene.eps).overlaps(&crate::math::Aabb::new(h, h)) {
                continue;
            }
            match inside_convex(m.facet_points(f), pl.normal, h, scene.eps) {
                Ok(true) => winding += if denom > 0.0 { 1 } else { -1 },
                Ok(false) => {}
                Err(_) => continue 'attempt,
            }
        }
        return Ok(winding > 0);
    }
    Err(Degeneracy::IndicatorUndecided)
}

pub fn centroid(poly: &[Vec3]) -> Vec3 {
    let mut c = Vec3::ZERO;
    for p in poly {
        c += *p;
    }
    c / poly.len() as f64
}

/// Inside test against the fragments of one mesh inside a cell: aim at the
/// centroid of the first fragment and read the side from the nearest hit.
pub fn shoot_ray_local(scene: &Scene, x: Vec3, fragments: &[&Fragment]) -> Result<bool, Degeneracy> {
    let target = centroid(&fragments[0].poly);
    let dir = target - x;
    let mut best: Option<(f64, f64)> = None;
    for frag in fragments {
        let pl = scene.plane(frag.facet);
        let denom = pl.normal.dot(dir);
        if denom == 0.0 {
            continue;
        }
        let t = -pl.distance(x) / denom;
        if !(t > 0.0) || best.is_some_and(|(bt, _)| t >= bt) {
            continue;
        }
        let h = x + dir * t;
        let hit = match inside_convex(frag.poly.iter().copied(), pl.normal, h, scene.eps) {
            Ok(v) => v,
            Err(_) => true,
        };
        if hit {
            best = Some((t, denom));
        }
    }
    match best {
        Some((_, denom)) => {
            if denom.abs() <= 1e-12 * dir.norm() {
                Err(Degeneracy::Grazing)
            } else {
                Ok(denom > 0.0)
            }
        }
        None => Err(Degeneracy::Grazing),
    }
}

fn push_distinct(v: &mut Vec<Vec3>, p: Vec3) {
    if v.last() != Some(&p) {
        v.push(p);
    }
}

fn finish_piece(mut v: Vec<Vec3>, strict: bool) -> Option<Vec<Vec3>> {
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    if strict && v.len() >= 3 {
        Some(v)
    } else {
        None
    }
}

/// Split a convex polygon by a plane into the parts below (`distance < 0`) and
/// above. Vertices on the plane go to both parts; an empty side is `None`.
pub fn clip_polygon_to_halfspace(poly: &[Vec3], plane: &Plane) -> (Option<Vec<Vec3>>, Option<Vec<Vec3>>) {
    let d: Vec<f64> = poly.iter().map(|p| plane.distance(*p)).collect();
    split_polygon(poly, &d, |p, dp, q, dq| {
        let (p, dp, q, dq) = if q.lex_cmp(&p) == Ordering::Less { (q, dq, p, dp) } else { (p, dp, q, dq) };
        crossing(p, dp, q, dq)
    })
}

/// Axis-aligned split at `x[axis] = value`; cut points get the exact split coordinate.
pub fn clip_polygon_axis(poly: &[Vec3], axis: usize, value: f64) -> (Option<Vec<Vec3>>, Option<Vec<Vec3>>) {
    let d: Vec<f64> = poly.iter().map(|p| p[axis] - value).collect();
    split_polygon(poly, &d, |p, _, q, _| {
        let (p, q) = if q.lex_cmp(&p) == Ordering::Less { (q, p) } else { (p, q) };
        let t = (value - p[axis]) / (q[axis] - p[axis]);
        let mut x = p + (q - p) * t;
        x[axis] = value;
        x
    })
}

fn split_polygon(
    poly: &[Vec3],
    d: &[f64],
    cut: impl Fn(Vec3, f64, Vec3, f64) -> Vec3,
) -> (Option<Vec<Vec3>>, Option<Vec<Vec3>>) {
    let any_below = d.iter().any(|&x| x < 0.0);
    let any_above = d.iter().any(|&x| x > 0.0);
    if !any_below {
        return (None, if any_above || !poly.is_empty() { Some(poly.to_vec()) } else { None });
    }
    if !any_above {
        return (Some(poly.to_vec()), None);
    }
    let k = poly.len();
    let mut below = Vec::with_capacity(k + 1);
    let mut above = Vec::with_capacity(k + 1);
    for i in 0..k {
        let (c, n) = (poly[i], poly[(i + 1) % k]);
        let (dc, dn) = (d[i], d[(i + 1) % k]);
        if dc <= 0.0 {
            push_distinct(&mut below, c);
        }
        if dc >= 0.0 {
            push_distinct(&mut above, c);
        }
        if (dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0) {
            let x = cut(c, dc, n, dn);
            push_distinct(&mut below, x);
            push_distinct(&mut above, x);
        }
    }
    (finish_piece(below, true), finish_piece(above, true))
}
