//! Sampling of a single planar fracture in its local frame.

use rand_chacha::ChaCha8Rng;

use crate::engine::{shell_radii, Engine, NodeTag, Region, SamplePoint, SampleSet, SampleStats, SamplerConfig};
use crate::geometry::{point_in_polygon, Aabb, Coords, Point2};
use crate::seeding::{seed_loop, seed_loop_clear};
use crate::sizing::{Sizing2, SizingField};
use crate::{Real, Result};

/// A seed point in a fracture's local frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Seed2<T> {
    pub p: Point2<T>,
    pub tag: NodeTag,
    pub global_id: Option<u64>,
}

/// Interior of a simple polygon.
#[derive(Clone, Debug)]
pub struct PolygonRegion<T> {
    poly: Vec<Point2<T>>,
    bounds: Aabb<Point2<T>>,
}

impl<T: Real> PolygonRegion<T> {
    pub fn new(poly: Vec<Point2<T>>) -> Self {
        let bounds = Aabb::from_points(&poly).expect("polygon has vertices");
        PolygonRegion { poly, bounds }
    }

    pub fn polygon(&self) -> &[Point2<T>] {
        &self.poly
    }
}

impl<T: Real> Region<T, Point2<T>> for PolygonRegion<T> {
    fn bounds(&self) -> Aabb<Point2<T>> {
        self.bounds
    }

    /// Crossing-number parity; points exactly on an edge may go either way,
    /// but the boundary seeds reject anything that close.
    #[inline]
    fn contains(&self, p: &Point2<T>) -> bool {
        if !self.bounds.contains(p) {
            return false;
        }
        let n = self.poly.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.poly[i], self.poly[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    fn cell_in_domain(&self, c: &Aabb<Point2<T>>) -> bool {
        let half = T::lit(0.5);
        let center = Point2::new((c.min.x + c.max.x) * half, (c.min.y + c.max.y) * half);
        let corners = [c.min, Point2::new(c.max.x, c.min.y), c.max, Point2::new(c.min.x, c.max.y)];
        point_in_polygon(&center, &self.poly) || corners.iter().any(|q| point_in_polygon(q, &self.poly))
    }
}

/// Candidate uniform in the annulus `[rho/(1+a), 2 rho/(1-a))` around `center`.
pub fn annulus_candidate<T: Real>(center: &Point2<T>, rho: T, a: T, rng: &mut ChaCha8Rng) -> Point2<T> {
    let (r_in, r_out) = shell_radii(rho, a);
    Point2::shell(center, r_in, r_out, rng)
}

/// Boundary seeds of a polygon under the fracture's sizing field. `forced`
/// points on the boundary (intersection endpoints) are always included.
pub fn boundary_seeds<T: Real>(poly: &[Point2<T>], sizing: &Sizing2<T>, forced: &[Point2<T>]) -> Result<Vec<Point2<T>>> {
    seed_loop(poly, forced, &|p: &Point2<T>| sizing.rho(p), sizing.lipschitz())
}

/// Seeds of one fracture: the shared intersection samples followed by the
/// boundary samples that do not conflict with them.
pub fn fracture_seeds<T: Real>(
    poly: &[Point2<T>],
    sizing: &Sizing2<T>,
    intersection_points: &[(Point2<T>, u64)],
) -> Result<Vec<Seed2<T>>> {
    Ok(fracture_seeds_with_loop(poly, sizing, intersection_points)?.0)
}

/// Like [`fracture_seeds`], also returning the seed indices met when walking
/// the boundary once, in order. A boundary sample that coincides with an
/// intersection sample is represented by that sample; one dropped for being
/// too close to an intersection sample leaves a gap in the walk.
pub fn fracture_seeds_with_loop<T: Real>(
    poly: &[Point2<T>],
    sizing: &Sizing2<T>,
    intersection_points: &[(Point2<T>, u64)],
) -> Result<(Vec<Seed2<T>>, Vec<usize>)> {
    let scale = Aabb::from_points(poly).map_or(T::one(), |b| b.diagonal());
    let tol = scale * T::lit(1e-9);
    // Intersection samples on the boundary are kept by the boundary walk.
    let forced: Vec<Point2<T>> = intersection_points
        .iter()
        .map(|(p, _)| *p)
        .filter(|p| crate::geometry::dist_point_boundary(p, poly) <= tol)
        .collect();
    let inter_rho: Vec<T> = intersection_points.iter().map(|(p, _)| sizing.rho(p)).collect();
    let clash = |b: &Point2<T>| {
        let rb = sizing.rho(b);
        intersection_points.iter().zip(&inter_rho).any(|((p, _), &rs)| p.dist(b) > tol && p.dist(b) < rb.min(rs))
    };
    let boundary = seed_loop_clear(poly, &forced, &|p: &Point2<T>| sizing.rho(p), sizing.lipschitz(), &|b| !clash(b))?;

    let mut seeds: Vec<Seed2<T>> = intersection_points
        .iter()
        .map(|&(p, id)| Seed2 { p, tag: NodeTag::Intersection, global_id: Some(id) })
        .collect();
    let n_inter = seeds.len();
    let mut walk = Vec::with_capacity(boundary.len());
    for b in boundary {
        if let Some(i) = seeds[..n_inter].iter().position(|s| s.p.dist(&b) <= tol) {
            walk.push(i);
            continue;
        }
        if !clash(&b) {
            walk.push(seeds.len());
            seeds.push(Seed2 { p: b, tag: NodeTag::Boundary, global_id: None });
        }
    }
    Ok((seeds, walk))
}

/// Samples the polygon interior starting from `seeds`.
pub fn sample_fracture<T: Real>(
    poly: &[Point2<T>],
    sizing: &Sizing2<T>,
    cfg: &SamplerConfig,
    seeds: &[Seed2<T>],
) -> Result<(SampleSet<T, Point2<T>>, SampleStats)> {
    sizing.params.validate()?;
    let region = PolygonRegion::new(poly.to_vec());
    let mut engine = Engine::new(sizing, &region, sizing.params.h, *cfg)?;
    for s in seeds {
        engine.add_seed(s.p, s.tag, s.global_id)?;
    }
    engine.run();
    Ok(engine.into_parts())
}

/// Counts of a finished run used to gauge how close to maximal it got.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    pub domain_cells: usize,
    pub unblocked_cells: usize,
}

/// Runs the sampler and also reports the unblocked domain cells at the end.
pub fn sample_fracture_with_coverage<T: Real>(
    poly: &[Point2<T>],
    sizing: &Sizing2<T>,
    cfg: &SamplerConfig,
    seeds: &[Seed2<T>],
) -> Result<(SampleSet<T, Point2<T>>, SampleStats, Coverage)> {
    let region = PolygonRegion::new(poly.to_vec());
    let mut engine = Engine::new(sizing, &region, sizing.params.h, *cfg)?;
    for s in seeds {
        engine.add_seed(s.p, s.tag, s.global_id)?;
    }
    engine.run();
    let cov = Coverage { domain_cells: engine.grid().domain_cells(), unblocked_cells: engine.grid().unblocked_cells().len() };
    let (set, stats) = engine.into_parts();
    Ok((set, stats, cov))
}
