//! Volume sampling of a box around a meshed fracture network, followed by
//! the tetrahedralize / remove slivers / resample loop.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::delaunay::conform3;
use crate::dfn_io::Dfn;
use crate::engine::{shell_radii, Engine, NodeTag, Region, SamplePoint, SampleSet, SampleStats, SamplerConfig};
use crate::geometry::{dist_point_polygon3, triangle_circumball3, Aabb, Coords, LocalFrame, Point2, Point3, Polygon};
use crate::kdtree::KdTree;
use crate::mesh::{TetMesh, TriMesh3};
use crate::network::DfnMesh;
use crate::quality::{classify_sliver, SliverPolicy};
use crate::sampler2d::PolygonRegion;
use crate::seeding::march;
use crate::sizing::{FeatureSet3, Sizing3, SizingField, SizingParams};
use crate::{Error, Real, Result};

/// Cube corners as bit patterns: bit 0 = x max, bit 1 = y max, bit 2 = z max.
const EDGES: [[usize; 2]; 12] = [
    [0, 1], [2, 3], [4, 5], [6, 7],
    [0, 2], [1, 3], [4, 6], [5, 7],
    [0, 4], [1, 5], [2, 6], [3, 7],
];

/// Faces as corner loops, and the edges bounding each.
const FACES: [[usize; 4]; 6] = [
    [0, 2, 6, 4], [1, 3, 7, 5],
    [0, 1, 5, 4], [2, 3, 7, 6],
    [0, 1, 3, 2], [4, 5, 7, 6],
];

/// The box to fill, the fracture polygons and their merged surface mesh.
#[derive(Clone, Debug)]
pub struct VolumeDomain<T> {
    pub bounds: Aabb<Point3<T>>,
    pub fractures: Vec<Polygon<T>>,
    pub network: TriMesh3<T>,
    /// Sizing radius of every network node.
    pub network_rho: Vec<T>,
}

impl<T: Real> VolumeDomain<T> {
    pub fn new(bounds: Aabb<Point3<T>>, fractures: Vec<Polygon<T>>, network: TriMesh3<T>, network_rho: Vec<T>) -> Result<Self> {
        for k in 0..3 {
            if !(bounds.max.coord(k) > bounds.min.coord(k)) {
                return Err(Error::InvalidParameter("volume box has an empty extent".into()));
            }
        }
        if network_rho.len() != network.nodes.len() {
            return Err(Error::InvalidParameter("one radius per network node required".into()));
        }
        let inside = |p: &Point3<T>| (0..3).all(|k| p.coord(k) > bounds.min.coord(k) && p.coord(k) < bounds.max.coord(k));
        if let Some((i, _)) = fractures.iter().enumerate().find(|(_, f)| !f.vertices.iter().all(inside)) {
            return Err(Error::InvalidParameter(format!("fracture {i} is not strictly inside the volume box")));
        }
        if !network.nodes.iter().all(inside) {
            return Err(Error::InvalidParameter("network node outside the volume box".into()));
        }
        Ok(VolumeDomain { bounds, fractures, network, network_rho })
    }

    /// The declared box of `dfn` around its meshed network.
    pub fn from_network(dfn: &Dfn<T>, mesh: &DfnMesh<T>) -> Result<Self> {
        let bounds = dfn.domain.ok_or_else(|| Error::InvalidParameter("the network declares no domain box".into()))?;
        Self::new(bounds, dfn.fractures.clone(), mesh.merged.clone(), mesh.rho.clone())
    }

    /// A box without fractures.
    pub fn empty(bounds: Aabb<Point3<T>>) -> Result<Self> {
        Self::new(bounds, Vec::new(), TriMesh3::default(), Vec::new())
    }

    pub fn corner(&self, bits: usize) -> Point3<T> {
        let pick = |k: usize| if bits >> k & 1 == 1 { self.bounds.max.coord(k) } else { self.bounds.min.coord(k) };
        Point3::new(pick(0), pick(1), pick(2))
    }

    /// The six faces as planar polygons.
    pub fn faces(&self) -> Vec<Polygon<T>> {
        FACES
            .iter()
            .map(|f| Polygon::new(f.iter().map(|&c| self.corner(c)).collect()).expect("box faces are valid polygons"))
            .collect()
    }

    /// Sizing field measured from the network samples.
    pub fn sizing(&self, params: &SizingParams<T>) -> Sizing3<T> {
        Sizing3 { params: *params, features: FeatureSet3::new(self.network.nodes.clone(), self.network_rho.clone()) }
    }
}

/// The 3D field restricted to one face, seen in the face's frame.
struct FaceSizing<'a, T> {
    frame: &'a LocalFrame<T>,
    sizing: &'a Sizing3<T>,
}

impl<T: Real> SizingField<T, Point2<T>> for FaceSizing<'_, T> {
    fn rho(&self, x: &Point2<T>) -> T {
        self.sizing.rho(&self.frame.to_3d(x))
    }

    fn lipschitz(&self) -> T {
        self.sizing.lipschitz()
    }

    fn min_rho(&self) -> T {
        self.sizing.min_rho()
    }

    fn max_rho(&self) -> T {
        self.sizing.max_rho()
    }
}

/// Network nodes first, in network order, then box corners, edge points and
/// face samples. Box seeds that would violate the empty-disk rule against a
/// network node are left out.
pub fn seed_volume<T: Real>(domain: &VolumeDomain<T>, params: &SizingParams<T>, cfg: &SamplerConfig) -> Result<SampleSet<T, Point3<T>>> {
    params.validate()?;
    let sizing = domain.sizing(params);
    let mut set = SampleSet::default();
    for (i, p) in domain.network.nodes.iter().enumerate() {
        let tag = match domain.network.tags[i] {
            NodeTag::Intersection => NodeTag::Intersection,
            _ => NodeTag::Fracture,
        };
        set.push(*p, domain.network_rho[i], tag, domain.network.global_ids[i]);
    }

    let mut next_id = domain.network.global_ids.iter().flatten().max().map_or(0, |g| g + 1);
    let mut id = || {
        next_id += 1;
        next_id - 1
    };
    let rho_of = |p: &Point3<T>| sizing.rho(p);
    let corners: Vec<(Point3<T>, u64)> = (0..8).map(|c| (domain.corner(c), id())).collect();
    // Interior points of each edge, shared by the two faces meeting there.
    let mut edge_pts: Vec<Vec<(Point3<T>, u64)>> = Vec::with_capacity(12);
    for [a, b] in EDGES {
        let pts = march(&[corners[a].0, corners[b].0], &rho_of, params.a)?;
        edge_pts.push(pts[1..pts.len() - 1].iter().map(|&p| (p, id())).collect());
    }

    let mut boundary: Vec<(Point3<T>, Option<u64>)> = Vec::new();
    boundary.extend(corners.iter().map(|&(p, g)| (p, Some(g))));
    for e in &edge_pts {
        boundary.extend(e.iter().map(|&(p, g)| (p, Some(g))));
    }
    let faces = domain.faces();
    for (fi, (face, loop_)) in faces.iter().zip(FACES).enumerate() {
        let frame = &face.frame;
        let fs = FaceSizing { frame, sizing: &sizing };
        let region = PolygonRegion::new(face.local().to_vec());
        let mut fcfg = *cfg;
        fcfg.rng_seed = cfg.rng_seed ^ (0xface_0000 + fi as u64);
        let mut engine = Engine::new(&fs, &region, params.h, fcfg)?;
        let mut n_seed = 0;
        for (ei, [a, b]) in EDGES.iter().enumerate() {
            if loop_.contains(a) && loop_.contains(b) {
                for (p, _) in &edge_pts[ei] {
                    engine.add_seed(frame.to_2d(p), NodeTag::Boundary, None)?;
                    n_seed += 1;
                }
            }
        }
        for &c in &loop_ {
            engine.add_seed(frame.to_2d(&corners[c].0), NodeTag::Boundary, None)?;
            n_seed += 1;
        }
        engine.run();
        let (s, _) = engine.into_parts();
        boundary.extend(s.points[n_seed..].iter().map(|p| (frame.to_3d(p), None)));
    }

    let tree = KdTree::new(domain.network.nodes.clone());
    let reach = domain.network_rho.iter().copied().fold(T::zero(), T::max);
    for (p, g) in boundary {
        let rho = sizing.rho(&p);
        let mut clash = false;
        tree.within(&p, reach.min(rho), |j, d2| {
            let r = rho.min(domain.network_rho[j]);
            if d2 < r * r {
                clash = true;
            }
        });
        if !clash {
            set.push(p, rho, NodeTag::Boundary, g);
        }
    }
    Ok(set)
}

/// Uniform candidate in the spherical shell `[rho/(1+a), 2 rho/(1-a))`.
pub fn shell_candidate<T: Real>(center: &Point3<T>, rho: T, a: T, rng: &mut ChaCha8Rng) -> Point3<T> {
    let (r_in, r_out) = shell_radii(rho, a);
    Point3::shell(center, r_in, r_out, rng)
}

/// Open box with the stand-off rule: accepted points keep half their radius
/// away from the box faces and from every fracture, and stay out of the
/// smallest circumscribed ball of every network triangle.
pub struct VolumeRegion<'a, T> {
    bounds: Aabb<Point3<T>>,
    fractures: &'a [Polygon<T>],
    fracture_boxes: Vec<Aabb<Point3<T>>>,
    balls: KdTree<T, Point3<T>>,
    ball_r: Vec<T>,
    ball_r_max: T,
}

impl<'a, T: Real> VolumeRegion<'a, T> {
    pub fn new(domain: &'a VolumeDomain<T>) -> Self {
        let mut centers = Vec::new();
        let mut ball_r = Vec::new();
        for t in &domain.network.cells {
            let [a, b, c] = t.map(|i| domain.network.nodes[i as usize]);
            if let Ok((center, r)) = triangle_circumball3(a, b, c) {
                centers.push(center);
                ball_r.push(r);
            }
        }
        VolumeRegion {
            bounds: domain.bounds,
            fractures: &domain.fractures,
            fracture_boxes: domain
                .fractures
                .iter()
                .map(|f| Aabb::from_points(&f.vertices).expect("fracture has vertices"))
                .collect(),
            ball_r_max: ball_r.iter().copied().fold(T::zero(), T::max),
            balls: KdTree::new(centers),
            ball_r,
        }
    }

    /// Distance from an inside point to the box boundary.
    pub fn to_faces(&self, p: &Point3<T>) -> T {
        (0..3)
            .map(|k| (p.coord(k) - self.bounds.min.coord(k)).min(self.bounds.max.coord(k) - p.coord(k)))
            .fold(T::infinity(), T::min)
    }

    /// Distance to the nearest fracture, `+inf` without fractures.
    pub fn to_fractures(&self, p: &Point3<T>) -> T {
        self.fractures.iter().map(|f| dist_point_polygon3(p, f)).fold(T::infinity(), T::min)
    }
}

impl<T: Real> Region<T, Point3<T>> for VolumeRegion<'_, T> {
    fn bounds(&self) -> Aabb<Point3<T>> {
        self.bounds
    }

    fn contains(&self, p: &Point3<T>) -> bool {
        (0..3).all(|k| p.coord(k) > self.bounds.min.coord(k) && p.coord(k) < self.bounds.max.coord(k))
    }

    fn admissible(&self, p: &Point3<T>, rho: T) -> bool {
        let half = rho * T::lit(0.5);
        if self.to_faces(p) < half {
            return false;
        }
        for (f, b) in self.fractures.iter().zip(&self.fracture_boxes) {
            if b.inflate(half).contains(p) && dist_point_polygon3(p, f) < half {
                return false;
            }
        }
        let mut inside = false;
        self.balls.within(p, self.ball_r_max, |i, d2| {
            let r = self.ball_r[i];
            if d2 < r * r {
                inside = true;
            }
        });
        !inside
    }

    fn cell_in_domain(&self, _: &Aabb<Point3<T>>) -> bool {
        true
    }
}

/// Seeds plus one pass of the volume sampler. Cell sweeps are not used in
/// the volume: `cfg.resample_sweeps` only affects the face samplings.
pub fn sample_volume<T: Real>(
    domain: &VolumeDomain<T>,
    params: &SizingParams<T>,
    cfg: &SamplerConfig,
) -> Result<(SampleSet<T, Point3<T>>, SampleStats)> {
    let seeds = seed_volume(domain, params, cfg)?;
    resample(domain, params, cfg, &seeds, None)
}

/// Runs the main loop with every point of `seeds` fixed, in order. With
/// `revisit`, only the listed seeds are expanded (plus whatever they add).
fn resample<T: Real>(
    domain: &VolumeDomain<T>,
    params: &SizingParams<T>,
    cfg: &SamplerConfig,
    seeds: &SampleSet<T, Point3<T>>,
    revisit: Option<&[u32]>,
) -> Result<(SampleSet<T, Point3<T>>, SampleStats)> {
    let sizing = domain.sizing(params);
    let region = VolumeRegion::new(domain);
    let mut engine = Engine::new(&sizing, &region, params.h, *cfg)?;
    for i in 0..seeds.len() {
        engine.add_seed_with_rho(seeds.points[i], seeds.rho[i], seeds.tags[i], seeds.global_ids[i])?;
    }
    if let Some(r) = revisit {
        engine.skip_visited();
        for &i in r {
            engine.expand(i as usize);
        }
    }
    engine.main_loop();
    Ok(engine.into_parts())
}

/// Counts of one triangulate-and-classify pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationRecord {
    pub nodes: usize,
    pub tets: usize,
    pub offenders: usize,
    /// Offending tets with no interior node to remove.
    pub unremovable: usize,
    pub removed: usize,
    /// Interior nodes dropped to restore network triangles.
    pub excavated: usize,
    pub sampling_time: Duration,
    pub triangulation_time: Duration,
}

/// Header of [`iterations_csv`].
pub const ITERATIONS_HEADER: &str = "pass,nodes,tets,offenders,unremovable,removed,excavated,sampling_s,triangulation_s";

/// One row per triangulation of the sliver loop.
pub fn iterations_csv(records: &[IterationRecord]) -> String {
    let mut s = format!("{ITERATIONS_HEADER}\n");
    for (i, r) in records.iter().enumerate() {
        s.push_str(&format!(
            "{i},{},{},{},{},{},{},{},{}\n",
            r.nodes,
            r.tets,
            r.offenders,
            r.unremovable,
            r.removed,
            r.excavated,
            r.sampling_time.as_secs_f64(),
            r.triangulation_time.as_secs_f64()
        ));
    }
    s
}

#[derive(Clone, Debug)]
pub struct VolumeMesh<T> {
    pub samples: SampleSet<T, Point3<T>>,
    pub mesh: TetMesh<T>,
    /// One record per triangulation; the last one describes `mesh`.
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    /// Offending cells of `mesh` when not converged.
    pub offenders: Vec<usize>,
}

impl<T> VolumeMesh<T> {
    /// Number of remove-and-resample passes that were run.
    pub fn passes(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }

    pub fn diagnostic(&self) -> String {
        let last = self.iterations.last().cloned().unwrap_or_default();
        format!(
            "{} offending tetrahedra remain after {} passes ({} without removable nodes)",
            last.offenders,
            self.passes(),
            last.unremovable
        )
    }
}

/// Samples the volume, then repeatedly tetrahedralizes, removes two random
/// interior nodes of every offending tet and resamples with the survivors
/// fixed. Stops when no tet offends or after `policy.max_iterations` passes;
/// in the latter case `converged` is false and `offenders` lists the cells.
pub fn sliver_loop<T: Real>(
    domain: &VolumeDomain<T>,
    params: &SizingParams<T>,
    cfg: &SamplerConfig,
    policy: &SliverPolicy,
) -> Result<VolumeMesh<T>> {
    policy.validate()?;
    let t0 = Instant::now();
    let (mut samples, _) = sample_volume(domain, params, cfg)?;
    let mut sampling_time = t0.elapsed();
    let mut pick_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x511e_7e55);
    let mut iterations = Vec::new();
    let n_net = domain.network.nodes.len();
    for pass in 0.. {
        let t1 = Instant::now();
        let protected: Vec<bool> = samples.tags.iter().map(|&t| t != NodeTag::Interior).collect();
        let conformed = conform3(&samples.points, &protected, &domain.network.cells)?;
        let mut cells = conformed.cells;
        if !conformed.removed.is_empty() {
            let (kept, remap) = compact(&samples, &conformed.removed);
            samples = kept;
            for c in &mut cells {
                *c = c.map(|v| remap[v as usize]);
            }
        }
        debug_assert!(samples.tags[..n_net].iter().all(|&t| t != NodeTag::Interior));
        let offenders: Vec<usize> = (0..cells.len())
            .filter(|&c| classify_sliver(&cells[c].map(|v| samples.points[v as usize]), policy))
            .collect();
        let mut rec = IterationRecord {
            nodes: samples.len(),
            tets: cells.len(),
            offenders: offenders.len(),
            excavated: conformed.removed.len(),
            sampling_time,
            triangulation_time: t1.elapsed(),
            ..Default::default()
        };
        let done = offenders.is_empty() || pass >= policy.max_iterations;
        if done {
            for &c in &offenders {
                if cells[c].iter().all(|&v| samples.tags[v as usize] != NodeTag::Interior) {
                    rec.unremovable += 1;
                }
            }
            iterations.push(rec);
            let mesh = TetMesh {
                nodes: samples.points.clone(),
                tags: samples.tags.clone(),
                global_ids: samples.global_ids.clone(),
                cells,
            };
            return Ok(VolumeMesh { samples, mesh, iterations, converged: offenders.is_empty(), offenders });
        }

        let mut gone = BTreeSet::new();
        for &c in &offenders {
            let mut interior: Vec<u32> =
                cells[c].iter().copied().filter(|&v| samples.tags[v as usize] == NodeTag::Interior).collect();
            if interior.is_empty() {
                rec.unremovable += 1;
                continue;
            }
            interior.shuffle(&mut pick_rng);
            gone.extend(interior.into_iter().take(2));
        }
        rec.removed = gone.len();
        iterations.push(rec);
        let removed: Vec<u32> = gone.into_iter().collect();
        let (survivors, remap) = compact(&samples, &removed);
        // Survivors that lost a Delaunay neighbour border a hole; every other
        // point already ended with a rejected batch and stays finished.
        let mut near = BTreeSet::new();
        for c in &cells {
            if c.iter().any(|&v| remap[v as usize] == u32::MAX) {
                near.extend(c.iter().map(|&v| remap[v as usize]).filter(|&v| v != u32::MAX));
            }
        }
        let near: Vec<u32> = near.into_iter().collect();
        let mut pcfg = *cfg;
        pcfg.rng_seed = cfg.rng_seed.wrapping_add((pass as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let t2 = Instant::now();
        samples = resample(domain, params, &pcfg, &survivors, Some(&near))?.0;
        sampling_time = t2.elapsed();
    }
    unreachable!("the loop returns once the pass limit is reached")
}

/// Drops the sorted indices in `removed`; returns the rest and the old-to-new map.
fn compact<T: Real>(s: &SampleSet<T, Point3<T>>, removed: &[u32]) -> (SampleSet<T, Point3<T>>, Vec<u32>) {
    let mut out = SampleSet::default();
    let mut map = vec![u32::MAX; s.len()];
    let mut r = removed.iter().peekable();
    for i in 0..s.len() {
        if r.peek() == Some(&&(i as u32)) {
            r.next();
            continue;
        }
        map[i] = out.len() as u32;
        out.push(s.points[i], s.rho[i], s.tags[i], s.global_ids[i]);
    }
    (out, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Coords;

    fn unit_box(side: f64) -> Aabb<Point3<f64>> {
        Aabb { min: Point3::new(0.0, 0.0, 0.0), max: Point3::new(side, side, side) }
    }

    /// One square fracture in the middle of a 4-box, meshed as two triangles.
    fn one_square() -> VolumeDomain<f64> {
        let v = vec![
            Point3::new(1.0, 1.0, 2.0),
            Point3::new(3.0, 1.0, 2.0),
            Point3::new(3.0, 3.0, 2.0),
            Point3::new(1.0, 3.0, 2.0),
        ];
        let poly = Polygon::new(v.clone()).unwrap();
        let net = TriMesh3 {
            nodes: v,
            tags: vec![NodeTag::Boundary; 4],
            global_ids: vec![None; 4],
            cells: vec![[0, 1, 2], [0, 2, 3]],
        };
        VolumeDomain::new(unit_box(4.0), vec![poly], net, vec![0.25; 4]).unwrap()
    }

    #[test]
    fn shell_distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = Point3::new(0.0, 0.0, 0.0);
        for _ in 0..10_000 {
            let d = shell_candidate(&c, 0.25, 0.125, &mut rng).norm();
            assert!((0.25 / 1.125..0.25 * 2.0 / 0.875).contains(&d), "{d}");
        }
    }

    #[test]
    fn shell_directions_are_uniform() {
        // Each octant gets 1/8 of the draws; chi-square with 7 dof.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = Point3::new(0.0, 0.0, 0.0);
        let n = 100_000;
        let mut counts = [0usize; 8];
        let mut zsum = 0.0;
        for _ in 0..n {
            let p = shell_candidate(&c, 1.0, 0.1, &mut rng);
            let o = (p.x > 0.0) as usize | ((p.y > 0.0) as usize) << 1 | ((p.z > 0.0) as usize) << 2;
            counts[o] += 1;
            zsum += p.z / p.norm();
        }
        let e = n as f64 / 8.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 24.3, "chi2 {chi2}");
        assert!((zsum / n as f64).abs() < 0.01);
    }

    #[test]
    fn rule_b_rejects_near_fracture() {
        let d = one_square();
        let r = VolumeRegion::new(&d);
        // 0.1 above the square, radius 0.25: closer than 0.125.
        assert!(!r.admissible(&Point3::new(2.0, 2.0, 2.1), 0.25));
        assert!(!r.admissible(&Point3::new(0.1, 2.0, 0.5), 0.25));
        // Far from everything, outside the triangles' balls (radius sqrt 2).
        assert!(r.admissible(&Point3::new(0.5, 0.5, 0.5), 0.25));
    }

    #[test]
    fn empty_box_seeds_share_edges() {
        let d = VolumeDomain::empty(unit_box(2.0)).unwrap();
        let p = SizingParams::with_rho_max(0.2, 0.1, 10.0, 1.0, 0.2).unwrap();
        let s = seed_volume(&d, &p, &SamplerConfig::default()).unwrap();
        assert!(s.rho.iter().all(|&r| r == 0.2));
        assert!(s.tags.iter().all(|&t| t == NodeTag::Boundary));
        // No two seeds coincide: edge points are added once.
        for i in 0..s.len() {
            for j in 0..i {
                assert!(s.points[i].dist(&s.points[j]) >= 0.2 - 1e-9, "{i} {j}");
            }
            let on_face = (0..3).any(|k| s.points[i].coord(k) == 0.0 || s.points[i].coord(k) == 2.0);
            assert!(on_face);
        }
    }

    #[test]
    fn empty_box_empty_disk() {
        let d = VolumeDomain::empty(unit_box(2.0)).unwrap();
        let p = SizingParams::with_rho_max(0.2, 0.1, 10.0, 1.0, 0.2).unwrap();
        let (s, _) = sample_volume(&d, &p, &SamplerConfig { rng_seed: 5, ..Default::default() }).unwrap();
        let seeds = s.tags.iter().filter(|&&t| t != NodeTag::Interior).count();
        assert!(s.len() > seeds + 100);
        for i in 0..s.len() {
            for j in 0..i {
                if s.tags[i] == NodeTag::Interior || s.tags[j] == NodeTag::Interior {
                    let r = s.rho[i].min(s.rho[j]);
                    assert!(s.points[i].dist(&s.points[j]) >= r);
                }
            }
        }
    }

    #[test]
    fn stand_off_and_determinism() {
        let d = one_square();
        let p = SizingParams::new(0.25, 0.125, 4.0, 1.0).unwrap();
        let cfg = SamplerConfig { rng_seed: 3, ..Default::default() };
        let (s, _) = sample_volume(&d, &p, &cfg).unwrap();
        let r = VolumeRegion::new(&d);
        for i in 0..s.len() {
            if s.tags[i] == NodeTag::Interior {
                let half = s.rho[i] / 2.0 - 1e-12;
                assert!(r.to_fractures(&s.points[i]) >= half);
                assert!(r.to_faces(&s.points[i]) >= half);
            }
        }
        let (again, _) = sample_volume(&d, &p, &cfg).unwrap();
        assert_eq!(again.points, s.points);
    }

    #[test]
    fn loop_on_empty_box() {
        let d = VolumeDomain::empty(unit_box(2.0)).unwrap();
        let p = SizingParams::with_rho_max(0.25, 0.1, 10.0, 1.0, 0.25).unwrap();
        let m = sliver_loop(&d, &p, &SamplerConfig::default(), &SliverPolicy::default()).unwrap();
        assert!(m.converged, "{}", m.diagnostic());
        assert_eq!(m.mesh.nodes.len(), m.samples.len());
        assert!(m.mesh.cells.iter().all(|c| !classify_sliver(&c.map(|v| m.mesh.nodes[v as usize]), &SliverPolicy::default())));
        let csv = iterations_csv(&m.iterations);
        assert!(csv.starts_with(ITERATIONS_HEADER));
        assert_eq!(csv.lines().count(), m.iterations.len() + 1);
    }
}
