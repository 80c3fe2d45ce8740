//! Loop fragments at each output vertex.
//!
//! Around a vertex, each host facet plane is cut into angular sectors by rays
//! (facet edges and intersection lines with the other facets at the vertex). A
//! sector belongs to the output surface when f differs on its two sides, with the
//! host normal kept if the inside of the result is below it and flipped otherwise.
//! Each maximal run of consecutive output sectors gives one looplet: it enters
//! along one bounding ray and leaves along the other.

use alloc::vec::Vec;

use crate::classify::{FinalVertex, Provenance};
use crate::math::Vec3;
use crate::scene::{FacetRef, Scene};

/// Direction along the line shared by facets `a` and `b`: `n_a × n_b` for facets
/// of different inputs, the direction that keeps `a` on its left for an input edge.
/// Swapping the facets reverses it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirKey {
    pub a: FacetRef,
    pub b: FacetRef,
}

impl DirKey {
    pub fn new(a: FacetRef, b: FacetRef) -> Self {
        DirKey { a, b }
    }

    pub fn reversed(self) -> Self {
        DirKey { a: self.b, b: self.a }
    }
}

/// `(incoming, vertex, outgoing | host±)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Looplet {
    pub vertex: u32,
    pub host: FacetRef,
    pub positive: bool,
    pub incoming: DirKey,
    pub outgoing: DirKey,
    /// Unit vector of the outgoing direction, used to find the next vertex.
    pub out_vec: Vec3,
}

/// A looplet in a reference configuration: host role, orientation and the indices
/// of the rays it enters along (reversed) and leaves along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Code(pub u8);

impl Code {
    pub const fn new(host: u8, negative: bool, in_ray: u8, out_ray: u8) -> Code {
        Code(host << 5 | (negative as u8) << 4 | in_ray << 2 | out_ray)
    }

    pub fn host(self) -> usize {
        (self.0 >> 5) as usize
    }

    pub fn negative(self) -> bool {
        self.0 >> 4 & 1 == 1
    }

    pub fn in_ray(self) -> usize {
        (self.0 >> 2 & 3) as usize
    }

    pub fn out_ray(self) -> usize {
        (self.0 & 3) as usize
    }
}

pub const MAX_LOOPLETS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeList {
    len: u8,
    codes: [Code; MAX_LOOPLETS],
}

impl CodeList {
    pub const EMPTY: CodeList = CodeList { len: 0, codes: [Code(0); MAX_LOOPLETS] };

    const fn push(&mut self, c: Code) {
        self.codes[self.len as usize] = c;
        self.len += 1;
    }

    pub fn as_slice(&self) -> &[Code] {
        &self.codes[..self.len as usize]
    }
}

/// Looplets of one orientation around a host: `included[k]` says whether the
/// sector between ray `k` and ray `k + 1` (mod `n`) is output. Nothing is emitted
/// when every sector is included.
const fn push_runs(list: &mut CodeList, host: u8, negative: bool, included: &[bool; 4], n: usize) {
    let mut start = n;
    let mut k = 0;
    while k < n {
        if !included[k] {
            start = k;
            break;
        }
        k += 1;
    }
    if start == n {
        return;
    }
    let mut step = 1;
    while step <= n {
        let i = (start + step) % n;
        if included[i] && !included[(i + n - 1) % n] {
            let mut e = i;
            while included[(e + 1) % n] {
                e = (e + 1) % n;
            }
            let after = ((e + 1) % n) as u8;
            let code = if negative {
                Code::new(host, true, i as u8, after)
            } else {
                Code::new(host, false, after, i as u8)
            };
            list.push(code);
        }
        step += 1;
    }
}

/// Both orientations for a host whose sectors have the given (outside, inside)
/// values of f with respect to the host's own input.
const fn push_host(list: &mut CodeList, host: u8, sides: &[(bool, bool); 4], valid: &[bool; 4], n: usize) {
    let mut pos = [false; 4];
    let mut neg = [false; 4];
    let mut k = 0;
    while k < n {
        if valid[k] {
            pos[k] = !sides[k].0 && sides[k].1;
            neg[k] = sides[k].0 && !sides[k].1;
        }
        k += 1;
    }
    push_runs(list, host, false, &pos, n);
    push_runs(list, host, true, &neg, n);
}

const fn bit(c: u8, p: u32) -> bool {
    c >> p & 1 == 1
}

/// Order two, reference configuration. Roles: 0 = F1 and 2 = F3, the facets at
/// the crossing edge (F1 holds the edge in the direction it crosses F2 from
/// inside to outside), 1 = F2, the crossed facet. Class bit index is `x_A*2 + x_B`
/// with A the edge's input and B the crossed facet's.
///
/// Rays: F1 `[d13, d12, d31]`, F2 `[d23, d12]`, F3 `[d31, d23, d13]`, each
/// counterclockwise about its host normal.
const fn order2_entry(c: u8) -> CodeList {
    const fn b2(c: u8, xa: u32, xb: u32) -> bool {
        bit(c, xa << 1 | xb)
    }
    let mut list = CodeList::EMPTY;
    let on_facet = [true, true, false, false];
    // F1: sector 0 lies above F2, sector 1 below, sector 2 is off the facet.
    let s1 = [(b2(c, 0, 0), b2(c, 1, 0)), (b2(c, 0, 1), b2(c, 1, 1)), (false, false), (false, false)];
    push_host(&mut list, 0, &s1, &on_facet, 3);
    // F2: sector 0 inside A, sector 1 outside.
    let s2 = [(b2(c, 1, 0), b2(c, 1, 1)), (b2(c, 0, 0), b2(c, 0, 1)), (false, false), (false, false)];
    push_host(&mut list, 1, &s2, &on_facet, 2);
    // F3: sector 0 below F2, sector 1 above.
    let s3 = [(b2(c, 0, 1), b2(c, 1, 1)), (b2(c, 0, 0), b2(c, 1, 0)), (false, false), (false, false)];
    push_host(&mut list, 2, &s3, &on_facet, 3);
    list
}

/// Order three, facets with a right-handed normal triple. Class bit index is
/// `x_0*4 + x_1*2 + x_2`. For host `h` with `p = h+1`, `q = h+2` (mod 3) the rays
/// are `[d_qh, d_hp, d_hq, d_ph]` and the sectors between them have
/// `(x_p, x_q) = (0,0), (1,0), (1,1), (0,1)`.
const fn order3_entry(c: u8) -> CodeList {
    let mut list = CodeList::EMPTY;
    let quads = [(0u32, 0u32), (1, 0), (1, 1), (0, 1)];
    let mut h = 0;
    while h < 3 {
        let p = (h + 1) % 3;
        let q = (h + 2) % 3;
        let mut sides = [(false, false); 4];
        let mut k = 0;
        while k < 4 {
            let (xp, xq) = quads[k];
            let base = xp << (2 - p) | xq << (2 - q);
            sides[k] = (bit(c, base), bit(c, base | 1 << (2 - h)));
            k += 1;
        }
        push_host(&mut list, h as u8, &sides, &[true; 4], 4);
        h += 1;
    }
    list
}

const fn build_order2() -> [CodeList; 16] {
    let mut t = [CodeList::EMPTY; 16];
    let mut c = 0;
    while c < 16 {
        t[c] = order2_entry(c as u8);
        c += 1;
    }
    t
}

const fn build_order3() -> [CodeList; 256] {
    let mut t = [CodeList::EMPTY; 256];
    let mut c = 0;
    while c < 256 {
        t[c] = order3_entry(c as u8);
        c += 1;
    }
    t
}

pub static ORDER2_TABLE: [CodeList; 16] = build_order2();
pub static ORDER3_TABLE: [CodeList; 256] = build_order3();

#[derive(Clone, Copy, Debug)]
struct Ray {
    key: DirKey,
    vec: Vec3,
}

fn unit(v: Vec3) -> Vec3 {
    v.normalized().unwrap_or(Vec3::ZERO)
}

fn line_ray(scene: &Scene, a: FacetRef, b: FacetRef) -> Ray {
    Ray { key: DirKey::new(a, b), vec: unit(scene.plane(a).normal.cross(scene.plane(b).normal)) }
}

fn reversed(r: Ray) -> Ray {
    Ray { key: r.key.reversed(), vec: -r.vec }
}

fn decode(vertex: u32, hosts: &[(FacetRef, &[Ray])], codes: &[Code], out: &mut Vec<Looplet>) {
    for &c in codes {
        let (host, rays) = hosts[c.host()];
        let r_in = rays[c.in_ray()];
        let r_out = rays[c.out_ray()];
        out.push(Looplet {
            vertex,
            host,
            positive: !c.negative(),
            incoming: r_in.key.reversed(),
            outgoing: r_out.key,
            out_vec: r_out.vec,
        });
    }
}

/// Class bits re-indexed so that input `roles[k]` supplies bit `k` (most
/// significant first).
fn role_bits(v: &FinalVertex, roles: &[usize]) -> u8 {
    let (ms, k) = v.prov.meshes();
    let ms = &ms[..k];
    let mut out = 0u8;
    for r in 0..(1usize << k) {
        let mut p = 0;
        for (j, m) in ms.iter().enumerate() {
            let role = roles.iter().position(|x| x == m).expect("role mesh");
            let x = r >> (k - 1 - role) & 1;
            p |= x << (k - 1 - j);
        }
        out |= (v.class.get(p) as u8) << r;
    }
    out
}

/// Append the looplets of output vertex `index`.
pub fn vertex_looplets(scene: &Scene, index: u32, v: &FinalVertex, out: &mut Vec<Looplet>) {
    match v.prov {
        Provenance::Vertex { mesh, vertex } => {
            let m = &scene.meshes[mesh as usize];
            let x = m.vertex(vertex);
            let (lo, hi) = (v.class.get(0), v.class.get(1));
            let mut codes = CodeList::EMPTY;
            push_host(&mut codes, 0, &[(lo, hi), (false, false), (false, false), (false, false)], &[true, false, false, false], 2);
            for (f, k) in m.vertex_corners(vertex) {
                let lp = m.facet(f);
                let n = lp.len();
                let prev = (k + n - 1) % n;
                let host = FacetRef { mesh, facet: f };
                let b_in = FacetRef { mesh, facet: m.opposite(f, prev) };
                let b_out = FacetRef { mesh, facet: m.opposite(f, k) };
                let rays = [
                    Ray { key: DirKey::new(host, b_out), vec: unit(m.vertex(lp[(k + 1) % n]) - x) },
                    Ray { key: DirKey::new(b_in, host), vec: unit(m.vertex(lp[prev]) - x) },
                ];
                decode(index, &[(host, &rays)], codes.as_slice(), out);
            }
        }
        Provenance::EdgeFacet { edge, facet: f2 } => {
            let (p, q) = scene.edge_points(&edge);
            let [mut f1, mut f3] = edge.facet_refs();
            let mut d = q - p;
            if d.dot(scene.plane(f2).normal) < 0.0 {
                core::mem::swap(&mut f1, &mut f3);
                d = -d;
            }
            let d13 = Ray { key: DirKey::new(f1, f3), vec: unit(d) };
            let d12 = line_ray(scene, f1, f2);
            let d23 = line_ray(scene, f2, f3);
            let h1 = [d13, d12, reversed(d13)];
            let h2 = [d23, d12];
            let h3 = [reversed(d13), d23, d13];
            let roles = [edge.mesh as usize, f2.mesh as usize];
            let codes = &ORDER2_TABLE[role_bits(v, &roles) as usize];
            decode(index, &[(f1, &h1), (f2, &h2), (f3, &h3)], codes.as_slice(), out);
        }
        Provenance::Triple(t) => {
            let n = [scene.plane(t[0]).normal, scene.plane(t[1]).normal, scene.plane(t[2]).normal];
            let r = if n[0].dot(n[1].cross(n[2])) > 0.0 { [0, 1, 2] } else { [1, 0, 2] };
            let f = [t[r[0]], t[r[1]], t[r[2]]];
            let rays: Vec<[Ray; 4]> = (0..3)
                .map(|h| {
                    let (p, q) = (f[(h + 1) % 3], f[(h + 2) % 3]);
                    let hq = line_ray(scene, f[h], q);
                    let hp = line_ray(scene, f[h], p);
                    [reversed(hq), hp, hq, reversed(hp)]
                })
                .collect();
            let roles = [f[0].mesh as usize, f[1].mesh as usize, f[2].mesh as usize];
            let codes = &ORDER3_TABLE[role_bits(v, &roles) as usize];
            decode(index, &[(f[0], &rays[0]), (f[1], &rays[1]), (f[2], &rays[2])], codes.as_slice(), out);
        }
    }
}
