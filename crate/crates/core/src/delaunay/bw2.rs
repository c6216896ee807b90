//! Incremental Bowyer-Watson triangulation in the plane with ghost triangles.

use std::collections::HashMap;

use robust::{incircle, orient2d, Coord};

use super::INF;

#[inline]
fn c(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

pub(super) struct Bw2<'a> {
    pts: &'a [[f64; 2]],
    v: Vec<[u32; 3]>,
    n: Vec<[u32; 3]>,
    dead: Vec<bool>,
    free: Vec<u32>,
    mark: Vec<u64>,
    stamp: u64,
    last: u32,
    walk_state: u32,
}

impl<'a> Bw2<'a> {
    /// Starts from the non-collinear triple `(a, b, c)`.
    pub(super) fn new(pts: &'a [[f64; 2]], a: u32, b: u32, cc: u32) -> Self {
        let (b, cc) = if orient2d(c(pts[a as usize]), c(pts[b as usize]), c(pts[cc as usize])) > 0.0 { (b, cc) } else { (cc, b) };
        let mut s = Bw2 {
            pts,
            v: vec![[a, b, cc], [cc, b, INF], [a, cc, INF], [b, a, INF]],
            n: vec![[INF; 3]; 4],
            dead: vec![false; 4],
            free: Vec::new(),
            mark: vec![0; 4],
            stamp: 0,
            last: 0,
            walk_state: 0x9e37_79b9,
        };
        // Link the five shared edges by brute force.
        for t in 0..4 {
            for i in 0..3 {
                let (x, y) = (s.v[t][(i + 1) % 3], s.v[t][(i + 2) % 3]);
                for u in 0..4 {
                    if u == t {
                        continue;
                    }
                    for j in 0..3 {
                        let (p, q) = (s.v[u][(j + 1) % 3], s.v[u][(j + 2) % 3]);
                        if p == y && q == x {
                            s.n[t][i] = u as u32;
                        }
                    }
                }
            }
        }
        s
    }

    #[inline]
    fn pt(&self, i: u32) -> Coord<f64> {
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
            None => incircle(self.pt(tv[0]), self.pt(tv[1]), self.pt(tv[2]), qp) > 0.0,
            Some(k) => {
                let (a, b) = (tv[(k + 1) % 3], tv[(k + 2) % 3]);
                let o = orient2d(self.pt(a), self.pt(b), qp);
                if o != 0.0 {
                    return o > 0.0;
                }
                // On the hull line: conflict only strictly inside the edge.
                let (pa, pb, pq) = (self.pts[a as usize], self.pts[b as usize], self.pts[q as usize]);
                let d1 = (pq[0] - pa[0]) * (pb[0] - pa[0]) + (pq[1] - pa[1]) * (pb[1] - pa[1]);
                let d2 = (pq[0] - pb[0]) * (pa[0] - pb[0]) + (pq[1] - pb[1]) * (pa[1] - pb[1]);
                d1 > 0.0 && d2 > 0.0
            }
        }
    }

    fn next_rand(&mut self) -> u32 {
        self.walk_state ^= self.walk_state << 13;
        self.walk_state ^= self.walk_state >> 17;
        self.walk_state ^= self.walk_state << 5;
        self.walk_state
    }

    /// A triangle in conflict with `q`: a real triangle containing it or a
    /// ghost whose hull edge sees it.
    fn locate(&mut self, q: u32) -> u32 {
        let mut t = self.last;
        if self.dead[t as usize] {
            t = (0..self.v.len() as u32).find(|&i| !self.dead[i as usize]).expect("live triangle");
        }
        if let Some(k) = self.inf_pos(t) {
            t = self.n[t as usize][k];
        }
        let qp = self.pt(q);
        let mut steps = 0usize;
        loop {
            let start = (self.next_rand() % 3) as usize;
            let tv = self.v[t as usize];
            let mut moved = false;
            for e in 0..3 {
                let i = (start + e) % 3;
                let (x, y) = (tv[(i + 1) % 3], tv[(i + 2) % 3]);
                if orient2d(self.pt(x), self.pt(y), qp) < 0.0 {
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
                // Walk failed to settle; fall back to a scan.
                return (0..self.v.len() as u32)
                    .find(|&u| !self.dead[u as usize] && self.in_conflict(u, q))
                    .expect("some triangle conflicts with a new point");
            }
        }
    }

    fn alloc(&mut self, v: [u32; 3]) -> u32 {
        if let Some(t) = self.free.pop() {
            self.v[t as usize] = v;
            self.n[t as usize] = [INF; 3];
            self.dead[t as usize] = false;
            self.mark[t as usize] = 0;
            t
        } else {
            self.v.push(v);
            self.n.push([INF; 3]);
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
            for k in 0..3 {
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

        // Grow the cavity until every boundary edge sees `q` strictly.
        let qp = self.pt(q);
        let boundary = loop {
            let mut boundary = Vec::new();
            let mut grow = Vec::new();
            for &t in &cavity {
                for k in 0..3 {
                    let u = self.n[t as usize][k];
                    if self.mark[u as usize] == in_cav {
                        continue;
                    }
                    let tv = self.v[t as usize];
                    let (x, y) = (tv[(k + 1) % 3], tv[(k + 2) % 3]);
                    if x != INF && y != INF && orient2d(self.pt(x), self.pt(y), qp) <= 0.0 {
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

        let mut by_start: HashMap<u32, u32> = HashMap::with_capacity(boundary.len());
        let mut created = Vec::with_capacity(boundary.len());
        for &(t, k) in &boundary {
            let tv = self.v[t as usize];
            let (x, y) = (tv[(k + 1) % 3], tv[(k + 2) % 3]);
            let o = self.n[t as usize][k];
            let nt = self.alloc([x, y, q]);
            self.n[nt as usize][2] = o;
            if let Some(j) = self.n[o as usize].iter().position(|&w| w == t) {
                self.n[o as usize][j] = nt;
            }
            by_start.insert(x, nt);
            created.push(nt);
        }
        for &nt in &created {
            let y = self.v[nt as usize][1];
            // Opposite x: edge (y, q), shared with the triangle starting at y.
            let a = by_start[&y];
            self.n[nt as usize][0] = a;
            self.n[a as usize][1] = nt;
        }
        for &t in &cavity {
            self.dead[t as usize] = true;
            self.free.push(t);
        }
        self.last = created.iter().copied().find(|&t| self.inf_pos(t).is_none()).unwrap_or(created[0]);
    }

    pub(super) fn triangles(&self) -> Vec<[u32; 3]> {
        (0..self.v.len())
            .filter(|&t| !self.dead[t] && !self.v[t].contains(&INF))
            .map(|t| self.v[t])
            .collect()
    }
}
