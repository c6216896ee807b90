//! Dimension-generic Poisson-disk sampling loop with blocked-cell rejection.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Aabb, Coords, Point2, Point3};
use crate::grid::OccupancyGrid;
use crate::sizing::SizingField;
use crate::{Error, Real, Result};

/// Provenance of a sample point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeTag {
    Interior,
    Boundary,
    Intersection,
    /// Network node seen from the volume mesh.
    Fracture,
}

impl NodeTag {
    pub fn code(self) -> u8 {
        match self {
            NodeTag::Interior => 0,
            NodeTag::Boundary => 1,
            NodeTag::Intersection => 2,
            NodeTag::Fracture => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => NodeTag::Interior,
            1 => NodeTag::Boundary,
            2 => NodeTag::Intersection,
            3 => NodeTag::Fracture,
            _ => return None,
        })
    }
}

/// Accepted points in acceptance order with their radii and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet<T, P> {
    pub points: Vec<P>,
    pub rho: Vec<T>,
    pub tags: Vec<NodeTag>,
    pub global_ids: Vec<Option<u64>>,
}

impl<T, P> Default for SampleSet<T, P> {
    fn default() -> Self {
        SampleSet { points: Vec::new(), rho: Vec::new(), tags: Vec::new(), global_ids: Vec::new() }
    }
}

impl<T: Real, P: Coords<T>> SampleSet<T, P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: P, rho: T, tag: NodeTag, id: Option<u64>) {
        self.points.push(p);
        self.rho.push(rho);
        self.tags.push(tag);
        self.global_ids.push(id);
    }

    pub fn count_tag(&self, tag: NodeTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    /// Candidates drawn per batch around the current point.
    pub k: usize,
    pub resample_sweeps: usize,
    pub rng_seed: u64,
    /// Reject candidates in blocked cells without distance checks. Disabling
    /// it gives the plain cell-list baseline with identical output.
    pub direct_rejection: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { k: 30, resample_sweeps: 1, rng_seed: 0, direct_rejection: true }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Counters and phase timings of one sampling run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleStats {
    pub seeds: usize,
    pub candidates: u64,
    pub outside: u64,
    pub blocked: u64,
    pub inadmissible: u64,
    pub conflicts: u64,
    pub accepted: u64,
    pub sweep_added: Vec<usize>,
    pub sampling_time: Duration,
    pub resampling_time: Duration,
}

/// Region being sampled.
pub trait Region<T: Real, P: Coords<T>>: Sync {
    fn bounds(&self) -> Aabb<P>;

    /// Whether a candidate lies in the region.
    fn contains(&self, p: &P) -> bool;

    /// Extra acceptance rule evaluated once the radius is known.
    fn admissible(&self, _p: &P, _rho: T) -> bool {
        true
    }

    /// Whether a grid cell takes part in resampling sweeps.
    fn cell_in_domain(&self, cell: &Aabb<P>) -> bool;
}

/// Random candidate generation for a point type.
pub trait SamplePoint<T: Real>: Coords<T> {
    /// Uniform in the ball shell `r_in <= |p - center| < r_out` (area or volume measure).
    fn shell(center: &Self, r_in: T, r_out: T, rng: &mut ChaCha8Rng) -> Self;

    /// Uniform in a box.
    fn uniform_in(b: &Aabb<Self>, rng: &mut ChaCha8Rng) -> Self;
}

#[inline]
fn unit<T: Real>(rng: &mut ChaCha8Rng) -> T {
    T::lit(rng.gen::<f64>())
}

/// Keeps a radius drawn from `[r_in, r_out)` strictly below `r_out`.
#[inline]
fn below<T: Real>(r: T, r_in: T, r_out: T) -> T {
    if r >= r_out {
        r_in.max(r_out - r_out * T::epsilon())
    } else {
        r.max(r_in)
    }
}

impl<T: Real> SamplePoint<T> for Point2<T> {
    fn shell(c: &Self, r_in: T, r_out: T, rng: &mut ChaCha8Rng) -> Self {
        let u: T = unit(rng);
        let phi: T = unit::<T>(rng) * T::TAU();
        let r = below((r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt(), r_in, r_out);
        Point2::new(c.x + r * phi.cos(), c.y + r * phi.sin())
    }

    fn uniform_in(b: &Aabb<Self>, rng: &mut ChaCha8Rng) -> Self {
        let u: T = unit(rng);
        let v: T = unit(rng);
        Point2::new(b.min.x + u * (b.max.x - b.min.x), b.min.y + v * (b.max.y - b.min.y))
    }
}

impl<T: Real> SamplePoint<T> for Point3<T> {
    fn shell(c: &Self, r_in: T, r_out: T, rng: &mut ChaCha8Rng) -> Self {
        let u: T = unit(rng);
        let z: T = T::one() - T::lit(2.0) * unit::<T>(rng);
        let phi: T = unit::<T>(rng) * T::TAU();
        let (i3, o3) = (r_in * r_in * r_in, r_out * r_out * r_out);
        let r = below((i3 + u * (o3 - i3)).cbrt(), r_in, r_out);
        let s = (T::one() - z * z).max(T::zero()).sqrt();
        Point3::new(c.x + r * s * phi.cos(), c.y + r * s * phi.sin(), c.z + r * z)
    }

    fn uniform_in(b: &Aabb<Self>, rng: &mut ChaCha8Rng) -> Self {
        let u: T = unit(rng);
        let v: T = unit(rng);
        let w: T = unit(rng);
        Point3::new(
            b.min.x + u * (b.max.x - b.min.x),
            b.min.y + v * (b.max.y - b.min.y),
            b.min.z + w * (b.max.z - b.min.z),
        )
    }
}

/// Inner and outer candidate radii around a point of radius `rho`.
#[inline]
pub fn shell_radii<T: Real>(rho: T, a: T) -> (T, T) {
    (rho / (T::one() + a), T::lit(2.0) * rho / (T::one() - a))
}

/// The sampling state: accepted points, the occupancy grid and the visit
/// cursor of the main loop.
pub struct Engine<'a, T: Real, P: SamplePoint<T>, S, D> {
    sizing: &'a S,
    region: &'a D,
    grid: OccupancyGrid<T, P>,
    set: SampleSet<T, P>,
    cursor: usize,
    rng: ChaCha8Rng,
    cfg: SamplerConfig,
    a: T,
    stats: SampleStats,
    /// Whether the blocked set reflects every accepted point.
    blocked_current: bool,
}

impl<'a, T, P, S, D> Engine<'a, T, P, S, D>
where
    T: Real,
    P: SamplePoint<T>,
    S: SizingField<T, P>,
    D: Region<T, P>,
{
    /// `h` sets the grid resolution (cell diameter `h/2`).
    pub fn new(sizing: &'a S, region: &'a D, h: T, cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        let a = sizing.lipschitz();
        if !(a >= T::zero() && a < T::one()) {
            return Err(Error::InvalidParameter(format!("slope must lie in [0, 1), got {a}")));
        }
        if sizing.min_rho() * T::lit(2.0) < h * (T::one() - T::lit(1e-12)) {
            return Err(Error::InvalidParameter("sizing radius below H/2".into()));
        }
        let mut grid = OccupancyGrid::build(&region.bounds(), h, sizing.max_rho())?;
        grid.mark_domain(|b| region.cell_in_domain(b));
        Ok(Engine {
            sizing,
            region,
            grid,
            set: SampleSet::default(),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            cfg,
            a,
            stats: SampleStats::default(),
            blocked_current: true,
        })
    }

    pub fn samples(&self) -> &SampleSet<T, P> {
        &self.set
    }

    pub fn grid(&self) -> &OccupancyGrid<T, P> {
        &self.grid
    }

    pub fn stats(&self) -> &SampleStats {
        &self.stats
    }

    /// Adds a seed point without any acceptance test, using the field's radius.
    pub fn add_seed(&mut self, p: P, tag: NodeTag, id: Option<u64>) -> Result<()> {
        let rho = self.sizing.rho(&p);
        self.add_seed_with_rho(p, rho, tag, id)
    }

    /// Adds a seed point with an explicit radius.
    pub fn add_seed_with_rho(&mut self, p: P, rho: T, tag: NodeTag, id: Option<u64>) -> Result<()> {
        let idx = u32::try_from(self.set.len()).map_err(|_| Error::Internal("too many points".into()))?;
        self.grid.insert(idx, &p)?;
        self.grid.mark_blocked(&p, rho, self.a);
        self.set.push(p, rho, tag, id);
        self.stats.seeds += 1;
        Ok(())
    }

    /// Runs the main loop and the configured resampling sweeps.
    pub fn run(&mut self) {
        self.main_loop();
        for _ in 0..self.cfg.resample_sweeps {
            let added = self.resample_sweep();
            self.stats.sweep_added.push(added);
            self.main_loop();
        }
    }

    /// Visits accepted points from the cursor on, drawing batches of `k`
    /// candidates around each and advancing once a whole batch is rejected.
    pub fn main_loop(&mut self) {
        let start = Instant::now();
        let direct = self.cfg.direct_rejection;
        if !direct {
            self.blocked_current = false;
        }
        while self.cursor < self.set.len() {
            self.expand_point(self.cursor, direct);
            self.cursor += 1;
        }
        self.stats.sampling_time += start.elapsed();
    }

    /// Draws batches around point `i` until one is fully rejected. Returns
    /// the number of points added.
    pub fn expand(&mut self, i: usize) -> usize {
        let start = Instant::now();
        let direct = self.cfg.direct_rejection;
        let before = self.set.len();
        self.expand_point(i, direct);
        self.stats.sampling_time += start.elapsed();
        self.set.len() - before
    }

    /// Moves the visit cursor past every current point.
    pub fn skip_visited(&mut self) {
        self.cursor = self.set.len();
    }

    fn expand_point(&mut self, i: usize, direct: bool) {
        let center = self.set.points[i];
        let (r_in, r_out) = shell_radii(self.set.rho[i], self.a);
        loop {
            let mut any = false;
            for _ in 0..self.cfg.k {
                let p = P::shell(&center, r_in, r_out, &mut self.rng);
                if let Some(rho) = self.test(&p, direct) {
                    self.accept(p, rho, direct);
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
    }

    /// One uniform candidate per unblocked domain cell; returns the number
    /// of points added. The cursor is left untouched.
    pub fn resample_sweep(&mut self) -> usize {
        let start = Instant::now();
        if !self.blocked_current {
            for i in 0..self.set.len() {
                self.grid.mark_blocked(&self.set.points[i], self.set.rho[i], self.a);
            }
            self.blocked_current = true;
        }
        let before = self.set.len();
        for idx in self.grid.unblocked_cells() {
            // Points accepted earlier in this sweep may have blocked it.
            if self.grid.is_blocked_cell(idx) {
                continue;
            }
            let b = self.grid.cell_box(idx);
            let p = P::uniform_in(&b, &mut self.rng);
            if let Some(rho) = self.test(&p, true) {
                self.accept(p, rho, true);
            }
        }
        self.stats.resampling_time += start.elapsed();
        self.set.len() - before
    }

    /// Returns the candidate's radius if it is accepted.
    #[inline]
    fn test(&mut self, p: &P, direct: bool) -> Option<T> {
        self.stats.candidates += 1;
        if !self.region.contains(p) {
            self.stats.outside += 1;
            return None;
        }
        let Some(c) = self.grid.cell_coords(p) else {
            self.stats.outside += 1;
            return None;
        };
        if direct && self.grid.is_blocked_cell(self.grid.linear(c)) {
            self.stats.blocked += 1;
            return None;
        }
        let rho = self.sizing.rho(p);
        if !self.region.admissible(p, rho) {
            self.stats.inadmissible += 1;
            return None;
        }
        let points = &self.set.points;
        let radii = &self.set.rho;
        let free = self.grid.scan_near(p, rho, |j| {
            let j = j as usize;
            let r = rho.min(radii[j]);
            points[j].dist2(p) >= r * r
        });
        if free {
            Some(rho)
        } else {
            self.stats.conflicts += 1;
            None
        }
    }

    fn accept(&mut self, p: P, rho: T, mark: bool) {
        let idx = self.set.len() as u32;
        // `test` already located the cell, so insertion cannot fail.
        self.grid.insert(idx, &p).expect("accepted point inside grid");
        if mark {
            self.grid.mark_blocked(&p, rho, self.a);
        }
        self.set.push(p, rho, NodeTag::Interior, None);
        self.stats.accepted += 1;
    }

    pub fn into_parts(self) -> (SampleSet<T, P>, SampleStats) {
        (self.set, self.stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point_in_polygon;
    use crate::sizing::ConstantSizing;

    struct Square;

    impl Region<f64, Point2<f64>> for Square {
        fn bounds(&self) -> Aabb<Point2<f64>> {
            Aabb { min: Point2::new(0.0, 0.0), max: Point2::new(1.0, 1.0) }
        }
        fn contains(&self, p: &Point2<f64>) -> bool {
            p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0
        }
        fn cell_in_domain(&self, b: &Aabb<Point2<f64>>) -> bool {
            let sq = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)];
            let c = Point2::new((b.min.x + b.max.x) / 2.0, (b.min.y + b.max.y) / 2.0);
            point_in_polygon(&c, &sq)
        }
    }

    fn run(cfg: SamplerConfig, rho: f64) -> (SampleSet<f64, Point2<f64>>, SampleStats) {
        let s = ConstantSizing(rho);
        let mut e = Engine::new(&s, &Square, 0.1, cfg).unwrap();
        e.add_seed(Point2::new(0.5, 0.5), NodeTag::Boundary, None).unwrap();
        e.run();
        e.into_parts()
    }

    #[test]
    fn empty_disk_and_determinism() {
        let cfg = SamplerConfig { k: 10, resample_sweeps: 1, rng_seed: 7, direct_rejection: true };
        let (a, st) = run(cfg, 0.05);
        let (b, _) = run(cfg, 0.05);
        assert_eq!(a, b);
        assert!(a.len() > 200);
        assert_eq!(st.sweep_added.len(), 1);
        for i in 0..a.len() {
            for j in 0..i {
                assert!(a.points[i].dist(&a.points[j]) >= 0.05);
            }
        }
    }

    #[test]
    fn baseline_matches_direct() {
        for seed in 0..3 {
            let cfg = SamplerConfig { k: 8, resample_sweeps: 2, rng_seed: seed, direct_rejection: true };
            let (a, sa) = run(cfg, 0.06);
            let (b, sb) = run(SamplerConfig { direct_rejection: false, ..cfg }, 0.06);
            assert_eq!(a, b);
            assert_eq!(sa.candidates, sb.candidates);
            assert!(sa.blocked > 0 && sb.blocked == 0);
        }
    }

    #[test]
    fn shell_radii_values() {
        let (i, o) = shell_radii(0.05f64, 0.1);
        assert!((i - 0.045454545).abs() < 1e-8 && (o - 0.111111111).abs() < 1e-8);
        assert_eq!(shell_radii(0.3, 0.0), (0.3, 0.6));
    }

    #[test]
    fn zero_k_rejected() {
        let cfg = SamplerConfig { k: 0, ..Default::default() };
        assert!(Engine::new(&ConstantSizing(0.05), &Square, 0.1, cfg).is_err());
    }
}
