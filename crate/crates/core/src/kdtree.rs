//! Static kd-tree over points for nearest-neighbour and ball queries.

use crate::geometry::Coords;
use crate::Real;

const LEAF: usize = 8;

#[derive(Clone, Debug)]
pub struct KdTree<T, P> {
    points: Vec<P>,
    /// Permutation of point indices; each node owns a contiguous range.
    order: Vec<u32>,
    nodes: Vec<Node<T>>,
}

#[derive(Clone, Debug)]
struct Node<T> {
    start: u32,
    end: u32,
    axis: u8,
    split: T,
    /// Children indices, `u32::MAX` for leaves.
    left: u32,
    right: u32,
}

impl<T: Real, P: Coords<T>> KdTree<T, P> {
    pub fn new(points: Vec<P>) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build(&points, &mut order, 0, points.len(), &mut nodes);
        }
        KdTree { points, order, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    /// Index and distance of the point closest to `q`.
    pub fn nearest(&self, q: &P) -> Option<(usize, T)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, T::infinity());
        self.nearest_in(0, q, &mut best);
        Some((best.0, best.1.sqrt()))
    }

    fn nearest_in(&self, node: usize, q: &P, best: &mut (usize, T)) {
        let n = &self.nodes[node];
        if n.left == u32::MAX {
            for &i in &self.order[n.start as usize..n.end as usize] {
                let d = self.points[i as usize].dist2(q);
                if d < best.1 || (d == best.1 && (i as usize) < best.0) {
                    *best = (i as usize, d);
                }
            }
            return;
        }
        let diff = q.coord(n.axis as usize) - n.split;
        let (near, far) = if diff <= T::zero() { (n.left, n.right) } else { (n.right, n.left) };
        self.nearest_in(near as usize, q, best);
        if diff * diff <= best.1 {
            self.nearest_in(far as usize, q, best);
        }
    }

    /// Calls `f(index, dist2)` for every point with `|p - q| <= radius`.
    pub fn within(&self, q: &P, radius: T, mut f: impl FnMut(usize, T)) {
        if !self.points.is_empty() {
            self.within_in(0, q, radius * radius, &mut f);
        }
    }

    fn within_in(&self, node: usize, q: &P, r2: T, f: &mut impl FnMut(usize, T)) {
        let n = &self.nodes[node];
        if n.left == u32::MAX {
            for &i in &self.order[n.start as usize..n.end as usize] {
                let d = self.points[i as usize].dist2(q);
                if d <= r2 {
                    f(i as usize, d);
                }
            }
            return;
        }
        let diff = q.coord(n.axis as usize) - n.split;
        if diff <= T::zero() || diff * diff <= r2 {
            self.within_in(n.left as usize, q, r2, f);
        }
        if diff >= T::zero() || diff * diff <= r2 {
            self.within_in(n.right as usize, q, r2, f);
        }
    }
}

fn build<T: Real, P: Coords<T>>(points: &[P], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node<T>>) -> u32 {
    let id = nodes.len();
    nodes.push(Node {
        start: start as u32,
        end: end as u32,
        axis: 0,
        split: T::zero(),
        left: u32::MAX,
        right: u32::MAX,
    });
    if end - start <= LEAF {
        return id as u32;
    }
    // Split the widest extent at the median.
    let slice = &mut order[start..end];
    let axis = (0..P::DIM)
        .max_by(|&a, &b| {
            let ext = |ax: usize| {
                let (lo, hi) = slice.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &i| {
                    let c = points[i as usize].coord(ax);
                    (lo.min(c), hi.max(c))
                });
                hi - lo
            };
            ext(a).partial_cmp(&ext(b)).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize]
            .coord(axis)
            .partial_cmp(&points[b as usize].coord(axis))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let split = points[slice[mid] as usize].coord(axis);
    let left = build(points, order, start, start + mid, nodes);
    let right = build(points, order, start + mid, end, nodes);
    let node = &mut nodes[id];
    node.axis = axis as u8;
    node.split = split;
    node.left = left;
    node.right = right;
    id as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pt = || Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let pts: Vec<Point3<f64>> = (0..500).map(|_| pt()).collect();
        let tree = KdTree::new(pts.clone());
        for _ in 0..300 {
            let q = pt() * 3.0;
            let (i, d) = tree.nearest(&q).unwrap();
            let (bi, bd) = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (i, p.dist(&q)))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            assert_eq!((i, d), (bi, bd));

            let mut got = Vec::new();
            tree.within(&q, 0.8, |i, _| got.push(i));
            got.sort();
            let want: Vec<_> = (0..pts.len()).filter(|&i| pts[i].dist(&q) <= 0.8).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn empty_tree() {
        let tree: KdTree<f64, Point3<f64>> = KdTree::new(vec![]);
        assert!(tree.nearest(&Point3::default()).is_none());
    }
}
