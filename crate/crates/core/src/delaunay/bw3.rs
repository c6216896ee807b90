//! Incremental Bowyer-Watson tetrahedralization with ghost tetrahedra.

use std::collections::HashMap;

use robust::{insphere, orient3d, Coord3D};

use super::INF;

/// Face opposite vertex `i`, ordered so that vertex `i` lies on its positive
/// side (in the `orient3d > 0` sense).
pub(super) const FACE: [[usize; 3]; 4] = [[1, 3, 2], [0, 2, 3], [0, 3, 1], [0, 1, 2]];

#[inline]
fn c(p: [f64; 3]) -> Coord3D<f64> {
    Coord3D { x: p[0], y: p[1], z: p[2] }
}

pub(super) struct Bw3<'a> {
    pts: &'a [[f64; 3]],
    v: Vec<[u32; 4]>,
    n: Vec<[u32; 4]>,
    dead: Vec<bool>,
    free: Vec<u32>,
    mark: Vec<u64>,
    stamp: u64,
    last: u32,
    walk_state: u32,
    /// A point off the plane of the initial simplex's base, for coplanar tests.
    apex: [f64; 3],
}

impl<'a> Bw3<'a> {
    /// Starts from four non-coplanar points.
    pub(super) fn new(pts: &'a [[f64; 3]], s: [u32; 4]) -> Self {
        let [mut a, mut b, cc, d] = s;
        if orient3d(c(pts[a as usize]), c(pts[b as usize]), c(pts[cc as usize]), c(pts[d as usize])) < 0.0 {
            std::mem::swap(&mut a, &mut b);
        }
        let real = [a, b, cc, d];
        let mut v = vec![real];
        for f in FACE {
            // Reversed face: the outside lies on the positive side.
            v.push([real[f[0]], real[f[2]], real[f[1]], INF]);
        }
        let mut me = Bw3 {
            pts,
            n: vec![[INF; 4]; 5],
            dead: vec![false; 5],
            free: Vec::new(),
            mark: vec![0; 5],
            stamp: 0,
            last: 0,
            walk_state: 0x2545_f491,
            apex: pts[d as usize],
            v,
        };
        for t in 0..5 {
            for i in 0..4 {
                let mut fi = me.face_sorted(t as u32, i);
                fi.sort_unstable();
                for u in 0..5 {
                    if u == t {
                        continue;
                    }
                    for j in 0..4 {
                        let mut fj = me.face_sorted(u as u32, j);
                        fj.sort_unstable();
                        if fi == fj {
                            me.n[t][i] = u as u32;
                        }
                    }
                }
            }
        }
        me
    }

    #[inline]
    fn face_sorted(&self, t: u32, i: usize) -> [u32; 3] {
        let tv = self.v[t as usize];
        FACE[i].map(|k| tv[k])
    }

    #[inline]
    fn pt(&self, i: u32) -> Coord3D<f64> {
        c(self.pts[i as usize])
    }

    #[inline]
    fn inf_pos(&self, t: u32) -> Option<usize> {
        self.v[t as usize].iter().position(|&x| x == INF)
    }

    fn in_conflict(&self, t: u32, q: u32) -> bool {
        let tv = self.v[t as usize];
        let qp = self.pt(q);
        match self.inf_pos(t) {
            None => insphere(self.pt(tv[0]), self.pt(tv[1]), self.pt(tv[2]), self.pt(tv[3]), qp) > 0.0,
            Some(k) => {
                let f = FACE[k].map(|i| tv[i]);
                let (a, b, cc) = (self.pt(f[0]), self.pt(f[1]), self.pt(f[2]));
                let o = orient3d(a, b, cc, qp);
                if o != 0.0 {
                    return o > 0.0;
                }
                // Coplanar with the hull face: conflict when strictly inside
                // its circumcircle, tested against any point off the plane.
                let mut apex = c(self.apex);
                let mut s = orient3d(a, b, cc, apex);
                if s == 0.0 {
                    let off = self.off_plane_point(&f);
                    apex = c(off);
                    s = orient3d(a, b, cc, apex);
                }
                let r = insphere(a, b, cc, apex, qp);
                if s > 0.0 {
                    r > 0.0
                } else {
                    r < 0.0
                }
            }
        }
    }

    fn off_plane_point(&self, f: &[u32; 3]) -> [f64; 3] {
        let (a, b, cc) = (self.pts[f[0] as usize], self.pts[f[1] as usize], self.pts[f[2] as usize]);
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let w = [cc[0] - a[0], cc[1] - a[1], cc[2] - a[2]];
        let nrm = [u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0]];
        [a[0] + nrm[0], a[1] + nrm[1], a[2] + nrm[2]]
    }

    fn next_rand(&mut self) -> u32 {
        self.walk_state ^= self.walk_state << 13;
        self.walk_state ^= self.walk_state >> 17;
        self.walk_state ^= self.walk_state << 5;
        self.walk_state
    }

    fn locate(&mut self, q: u32) -> u32 {
        let mut t = self.last;
        if self.dead[t as usize] {
            t = (0..self.v.len() as u32).find(|&i| !self.dead[i as usize]).expect("live tetrahedron");
        }
        if let Some(k) = self.inf_pos(t) {
            t = self.n[t as usize][k];
        }
        let qp = self.pt(q);
        let mut steps = 0usize;
        loop {
            let start = (self.next_rand() % 4) as usize;
            let tv = self.v[t as usize];
            let mut moved = false;
            for e in 0..4 {
                let i = (start + e) % 4;
                let f = FACE[i].map(|k| tv[k]);
                if orient3d(self.pt(f[0]), self.pt(f[1]), self.pt(f[2]), qp) < 0.0 {
                    t = self.n[t as usize][i];
                    moved = true;
                    break;
                }
            }
            if !moved || self.inf_pos(t).is_some() {
                return t;
            }
            steps += 1;
            if steps > 4 * self.v.len() + 16 {
                return (0..self.v.len() as u32)
                    .find(|&u| !self.dead[u as usize] && self.in_conflict(u, q))
                    .expect("some tetrahedron conflicts with a new point");
            }
        }
    }

    fn alloc(&mut self, v: [u32; 4]) -> u32 {
        if let Some(t) = self.free.pop() {
            self.v[t as usize] = v;
            self.n[t as usize] = [INF; 4];
            self.dead[t as usize] = false;
            self.mark[t as usize] = 0;
            t
        } else {
            self.v.push(v);
            self.n.push([INF; 4]);
            self.dead.push(false);
            self.mark.push(0);
            (self.v.len() - 1) as u32
        }
    }

    pub(super) fn insert(&mut self, q: u32) {
        let start = self.locate(q);
        self.stamp += 1;
        let in_cav = self.stamp * 2;
        let outside = self.stamp * 2 + 1;
        let mut cavity = vec![start];
        self.mark[start as usize] = in_cav;
        let mut i = 0;
        while i < cavity.len() {
            let t = cavity[i];
            i += 1;
            for k in 0..4 {
                let u = self.n[t as usize][k];
                let m = self.mark[u as usize];
                if m == in_cav || m == outside {
                    continue;
                }
                if self.in_conflict(u, q) {
                    self.mark[u as usize] = in_cav;
                    cavity.push(u);
                } else {
                    self.mark[u as usize] = outside;
                }
            }
        }

        let qp = self.pt(q);
        let boundary = loop {
            let mut boundary = Vec::new();
            let mut grow = Vec::new();
            for &t in &cavity {
                for k in 0..4 {
                    let u = self.n[t as usize][k];
                    if self.mark[u as usize] == in_cav {
                        continue;
                    }
                    let f = self.face_sorted(t, k);
                    if !f.contains(&INF) && orient3d(self.pt(f[0]), self.pt(f[1]), self.pt(f[2]), qp) <= 0.0 {
                        grow.push(u);
                    } else {
                        boundary.push((t, k));
                    }
                }
            }
            if grow.is_empty() {
                break boundary;
            }
            for u in grow {
                if self.mark[u as usize] != in_cav {
                    self.mark[u as usize] = in_cav;
                    cavity.push(u);
                }
            }
        };

        let mut by_edge: HashMap<(u32, u32), (u32, usize)> = HashMap::with_capacity(boundary.len() * 2);
        let mut created = Vec::with_capacity(boundary.len());
        for &(t, k) in &boundary {
            let f = self.face_sorted(t, k);
            let o = self.n[t as usize][k];
            let nt = self.alloc([f[0], f[1], f[2], q]);
            self.n[nt as usize][3] = o;
            if let Some(j) = self.n[o as usize].iter().position(|&w| w == t) {
                self.n[o as usize][j] = nt;
            }
            // Face opposite f[i] contains the edge of the other two base vertices.
            for i in 0..3 {
                let (x, y) = (f[(i + 1) % 3], f[(i + 2) % 3]);
                let key = (x.min(y), x.max(y));
                if let Some((other, oi)) = by_edge.remove(&key) {
                    self.n[nt as usize][i] = other;
                    self.n[other as usize][oi] = nt;
                } else {
                    by_edge.insert(key, (nt, i));
                }
            }
            created.push(nt);
        }
        debug_assert!(by_edge.is_empty());
        for &t in &cavity {
            self.dead[t as usize] = true;
            self.free.push(t);
        }
        self.last = created.iter().copied().find(|&t| self.inf_pos(t).is_none()).unwrap_or(created[0]);
    }

    pub(super) fn tets(&self) -> Vec<[u32; 4]> {
        (0..self.v.len())
            .filter(|&t| !self.dead[t] && !self.v[t].contains(&INF))
            .map(|t| self.v[t])
            .collect()
    }
}
