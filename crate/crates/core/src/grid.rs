//! Uniform background grid: point occupancy, blocked cells and neighbour
//! enumeration for the sampler.
//!
//! Fine cells have diameter exactly `h/2`. Neighbour scans walk the fine
//! cells nearest-first. Occupancy is additionally kept on a short chain of
//! aligned coarser levels (each doubling the cell size); these serve only
//! radii wider than `FLAT_CELLS` fine cells, which occur in 3D far from the
//! network.

use fixedbitset::FixedBitSet;

use crate::geometry::{Aabb, Coords};
use crate::{Error, Real, Result};

const EMPTY: u32 = u32::MAX;

/// Radii up to this many fine cells are scanned on the fine grid.
const FLAT_CELLS: f64 = 16.0;

/// Beyond that, a scan uses the finest coarse level whose cells are at
/// least `radius / SCAN_CELLS` wide.
const SCAN_CELLS: f64 = 3.0;

/// Relative slack in the blocked-cell inequality so exact equality counts.
const BLOCK_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Level {
    shift: u32,
    dims: [usize; 3],
    head: Vec<u32>,
    next: Vec<u32>,
    /// Offsets sorted by the squared integer gap between the two cells.
    offsets: Vec<([i32; 3], i64)>,
    /// Every offset with a gap up to this is in `offsets`.
    complete: i64,
}

#[derive(Clone, Debug)]
pub struct OccupancyGrid<T, P> {
    origin: P,
    cell: T,
    inv_cell: T,
    dims: [usize; 3],
    levels: Vec<Level>,
    blocked: FixedBitSet,
    domain: FixedBitSet,
    count: usize,
}

impl<T: Real, P: Coords<T>> OccupancyGrid<T, P> {
    /// Grid over `bounds` inflated by one cell, cell diameter `h/2`.
    /// `max_radius` is the largest neighbour query radius expected and only
    /// sizes the coarse levels.
    pub fn build(bounds: &Aabb<P>, h: T, max_radius: T) -> Result<Self> {
        if !(h.is_finite() && h > T::zero()) {
            return Err(Error::InvalidParameter(format!("grid spacing needs H > 0, got {h}")));
        }
        if !(bounds.min.is_finite() && bounds.max.is_finite()) || (0..P::DIM).any(|i| bounds.max.coord(i) < bounds.min.coord(i)) {
            return Err(Error::InvalidParameter("grid bounds must be finite and ordered".into()));
        }
        let d = T::lit(P::DIM as f64);
        let cell = h / (T::lit(2.0) * d.sqrt());
        let origin = P::from_fn(|i| bounds.min.coord(i) - cell);
        let mut dims = [1usize; 3];
        let mut total: usize = 1;
        for (i, dim) in dims.iter_mut().enumerate().take(P::DIM) {
            let ext = (bounds.max.coord(i) - bounds.min.coord(i)) / cell;
            let n = ext.ceil().as_f64() as usize + 2;
            *dim = n.max(3);
            total = total
                .checked_mul(*dim)
                .filter(|&t| t < u32::MAX as usize)
                .ok_or_else(|| Error::InvalidParameter("grid too large".into()))?;
        }

        let mut levels = Vec::new();
        let q = T::lit(SCAN_CELLS);
        let mut shift = 0u32;
        let fine_reach = (max_radius / cell).min(T::lit(FLAT_CELLS)).ceil().as_f64().max(0.0) as i32 + 1;
        loop {
            let ldims = std::array::from_fn(|i| if i < P::DIM { ((dims[i] - 1) >> shift) + 1 } else { 1 });
            let ncell: usize = ldims.iter().product();
            let reach = if shift == 0 { fine_reach.max(SCAN_CELLS as i32 + 1) } else { SCAN_CELLS as i32 + 1 };
            levels.push(Level {
                shift,
                dims: ldims,
                head: vec![EMPTY; ncell],
                next: Vec::new(),
                offsets: scan_offsets(P::DIM, reach),
                complete: (reach as i64 - 1).pow(2),
            });
            let lcell = cell * T::lit((1u64 << shift) as f64);
            if lcell * q >= max_radius || ldims[..P::DIM].iter().all(|&n| n <= 2) || shift >= 20 {
                break;
            }
            shift += 1;
        }

        Ok(OccupancyGrid {
            origin,
            cell,
            inv_cell: T::one() / cell,
            dims,
            levels,
            blocked: FixedBitSet::with_capacity(total),
            domain: FixedBitSet::with_capacity(total),
            count: 0,
        })
    }

    pub fn cell_size(&self) -> T {
        self.cell
    }

    pub fn origin(&self) -> P {
        self.origin
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of inserted points.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Integer cell coordinates of `x` (floor convention), `None` outside.
    #[inline]
    pub fn cell_coords(&self, x: &P) -> Option<[usize; 3]> {
        let mut c = [0usize; 3];
        for (i, ci) in c.iter_mut().enumerate().take(P::DIM) {
            let t = ((x.coord(i) - self.origin.coord(i)) * self.inv_cell).floor();
            if !(t >= T::zero()) {
                return None;
            }
            let t = t.as_f64() as usize;
            if t >= self.dims[i] {
                return None;
            }
            *ci = t;
        }
        Some(c)
    }

    #[inline]
    pub fn linear(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    pub fn unlinear(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let r = idx / self.dims[0];
        [x, r % self.dims[1], r / self.dims[1]]
    }

    /// Linear index of the cell containing `x`.
    pub fn cell_of(&self, x: &P) -> Result<usize> {
        self.cell_coords(x)
            .map(|c| self.linear(c))
            .ok_or_else(|| Error::OutsideGrid(format!("{x:?}")))
    }

    /// Closed box of a cell.
    pub fn cell_box(&self, idx: usize) -> Aabb<P> {
        let c = self.unlinear(idx);
        let min = P::from_fn(|i| self.origin.coord(i) + T::lit(c[i] as f64) * self.cell);
        let max = P::from_fn(|i| min.coord(i) + self.cell);
        Aabb { min, max }
    }

    /// Records point `id` at `x`. Ids index the caller's point arrays.
    pub fn insert(&mut self, id: u32, x: &P) -> Result<()> {
        let c = self.cell_coords(x).ok_or_else(|| Error::OutsideGrid(format!("{x:?}")))?;
        let id_us = id as usize;
        for lv in &mut self.levels {
            if lv.next.len() <= id_us {
                lv.next.resize(id_us + 1, EMPTY);
            }
            let cc: [usize; 3] = std::array::from_fn(|i| c[i] >> lv.shift);
            let li = cc[0] + lv.dims[0] * (cc[1] + lv.dims[1] * cc[2]);
            lv.next[id_us] = lv.head[li];
            lv.head[li] = id;
        }
        self.count += 1;
        Ok(())
    }

    /// Whether any point lies in the fine cell `idx`.
    pub fn is_occupied(&self, idx: usize) -> bool {
        self.levels[0].head[idx] != EMPTY
    }

    /// Points stored in fine cell `idx`.
    pub fn points_in(&self, idx: usize) -> impl Iterator<Item = u32> + '_ {
        let lv = &self.levels[0];
        let mut cur = lv.head[idx];
        std::iter::from_fn(move || {
            (cur != EMPTY).then(|| {
                let id = cur;
                cur = lv.next[id as usize];
                id
            })
        })
    }

    /// Occupied fine cells whose closed box lies within `radius` of the
    /// closed box of the cell containing `x`.
    pub fn neighbors_plus(&self, x: &P, radius: T) -> Vec<usize> {
        let Some(c) = self.cell_coords(x) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let m = (radius * self.inv_cell).floor().as_f64() as i64 + 1;
        let r2 = radius * radius;
        self.for_box(c, m, |g, gap2| {
            if T::lit(gap2 as f64) * self.cell * self.cell <= r2 && self.is_occupied(g) {
                out.push(g);
            }
        });
        out.sort_unstable();
        out
    }

    /// Visits every stored point that may lie within `radius` of `x`, nearest
    /// cells first. A superset of the points in [`Self::neighbors_plus`]
    /// cells is visited. Stops as soon as `f` returns `false`; the return
    /// value tells whether the scan ran to completion.
    #[inline]
    pub fn scan_near(&self, x: &P, radius: T, mut f: impl FnMut(u32) -> bool) -> bool {
        let Some(c) = self.cell_coords(x) else {
            return true;
        };
        let q = T::lit(SCAN_CELLS);
        let li = if radius <= self.cell * T::lit(FLAT_CELLS) {
            0
        } else {
            self.levels
                .iter()
                .position(|lv| self.cell * T::lit((1u64 << lv.shift) as f64) * q >= radius)
                .unwrap_or(self.levels.len() - 1)
        };
        let lv = &self.levels[li];
        let lcell = self.cell * T::lit((1u64 << lv.shift) as f64);
        let cc: [i64; 3] = std::array::from_fn(|i| (c[i] >> lv.shift) as i64);
        let r2 = radius * radius / (lcell * lcell);
        let visit = |off: &[i32; 3], f: &mut dyn FnMut(u32) -> bool| -> bool {
            let mut li = 0usize;
            let mut stride = 1usize;
            for i in 0..P::DIM {
                let v = cc[i] + off[i] as i64;
                if v < 0 || v >= lv.dims[i] as i64 {
                    return true;
                }
                li += v as usize * stride;
                stride *= lv.dims[i];
            }
            let mut cur = lv.head[li];
            while cur != EMPTY {
                if !f(cur) {
                    return false;
                }
                cur = lv.next[cur as usize];
            }
            true
        };
        if T::lit(lv.complete as f64) >= r2 {
            for (off, gap2) in &lv.offsets {
                if T::lit(*gap2 as f64) > r2 {
                    break;
                }
                if !visit(off, &mut f) {
                    return false;
                }
            }
            true
        } else {
            // Radius beyond the coarsest level's precomputed stencil.
            let m = (radius / lcell).floor().as_f64() as i64 + 1;
            let mut done = true;
            for_each_offset(P::DIM, m, |off, gap2| {
                if done && T::lit(gap2 as f64) <= r2 && !visit(off, &mut f) {
                    done = false;
                }
            });
            done
        }
    }

    /// Flags every fine cell `g` with `diam(g ∪ C(x)) <= rho / (1 + a)`.
    pub fn mark_blocked(&mut self, x: &P, rho: T, a: T) {
        let Some(c) = self.cell_coords(x) else {
            return;
        };
        let t = rho / ((T::one() + a) * self.cell);
        let t2 = t * t * T::lit(1.0 + BLOCK_SLACK);
        // diam^2 / cell^2 = sum (|d_i| + 1)^2, so |d_i| <= t - 1.
        let m = t.floor().as_f64() as i64 - 1;
        if m < 0 {
            return;
        }
        let dims = self.dims;
        let base = [c[0] as i64, c[1] as i64, c[2] as i64];
        let dim = P::DIM;
        let blocked = &mut self.blocked;
        for_each_offset_raw(dim, m, |off| {
            let s: i64 = (0..dim).map(|i| (off[i].unsigned_abs() as i64 + 1).pow(2)).sum();
            if T::lit(s as f64) > t2 {
                return;
            }
            let mut li = 0usize;
            let mut stride = 1usize;
            for i in 0..dim {
                let v = base[i] + off[i] as i64;
                if v < 0 || v >= dims[i] as i64 {
                    return;
                }
                li += v as usize * stride;
                stride *= dims[i];
            }
            blocked.insert(li);
        });
    }

    #[inline]
    pub fn is_blocked_cell(&self, idx: usize) -> bool {
        self.blocked.contains(idx)
    }

    /// Whether the cell containing `x` is blocked; `false` outside the grid.
    #[inline]
    pub fn is_blocked(&self, x: &P) -> bool {
        self.cell_coords(x).is_some_and(|c| self.blocked.contains(self.linear(c)))
    }

    /// Flags the cells for which `inside(cell_box)` holds as domain cells.
    pub fn mark_domain(&mut self, mut inside: impl FnMut(&Aabb<P>) -> bool) {
        for idx in 0..self.num_cells() {
            if inside(&self.cell_box(idx)) {
                self.domain.insert(idx);
            }
        }
    }

    pub fn is_domain_cell(&self, idx: usize) -> bool {
        self.domain.contains(idx)
    }

    pub fn domain_cells(&self) -> usize {
        self.domain.count_ones(..)
    }

    pub fn blocked_cells(&self) -> usize {
        self.blocked.count_ones(..)
    }

    /// Domain cells that are not blocked, in increasing index order.
    pub fn unblocked_cells(&self) -> Vec<usize> {
        let mut free = self.domain.clone();
        free.difference_with(&self.blocked);
        free.ones().collect()
    }

    /// Visits the fine cells of the integer box `c ± m` with their squared
    /// integer gap to `c`.
    fn for_box(&self, c: [usize; 3], m: i64, mut f: impl FnMut(usize, i64)) {
        for_each_offset(P::DIM, m, |off, gap2| {
            let mut li = 0usize;
            let mut stride = 1usize;
            for i in 0..P::DIM {
                let v = c[i] as i64 + off[i] as i64;
                if v < 0 || v >= self.dims[i] as i64 {
                    return;
                }
                li += v as usize * stride;
                stride *= self.dims[i];
            }
            f(li, gap2);
        });
    }
}

/// Squared integer gap between two cells `off` apart: the minimum distance
/// between their closed boxes in cell units, squared.
fn gap2(off: &[i32; 3]) -> i64 {
    off.iter().map(|&d| ((d.unsigned_abs() as i64 - 1).max(0)).pow(2)).sum()
}

fn for_each_offset_raw(dim: usize, m: i64, mut f: impl FnMut(&[i32; 3])) {
    let m = m as i32;
    let r = |i: usize| if i < dim { -m..=m } else { 0..=0 };
    for z in r(2) {
        for y in r(1) {
            for x in r(0) {
                f(&[x, y, z]);
            }
        }
    }
}

fn for_each_offset(dim: usize, m: i64, mut f: impl FnMut(&[i32; 3], i64)) {
    for_each_offset_raw(dim, m, |off| f(off, gap2(off)));
}

fn scan_offsets(dim: usize, m: i32) -> Vec<([i32; 3], i64)> {
    let mut v = Vec::new();
    for_each_offset(dim, m as i64, |off, g| v.push((*off, g)));
    // Stable sort keeps the traversal deterministic within equal gaps.
    v.sort_by_key(|&(off, g)| (g, off.iter().map(|d| d.abs()).sum::<i32>()));
    v
}
