use crate::error::{Error, Result};
use crate::geometry::{Aabb, Coords, Point2, Point3};
use crate::Real;

/// Relative planarity tolerance, scaled by the polygon diameter.
pub const PLANARITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<P> {
    pub a: P,
    pub b: P,
}

impl<P> Segment<P> {
    pub const fn new(a: P, b: P) -> Self {
        Segment { a, b }
    }
}

impl<P: Copy> Segment<P> {
    pub fn length<T: Real>(&self) -> T
    where
        P: Coords<T>,
    {
        self.a.dist(&self.b)
    }

    /// Point at parameter `t` in `[0, 1]`.
    pub fn at<T: Real>(&self, t: T) -> P
    where
        P: Coords<T>,
    {
        self.a + (self.b - self.a) * t
    }
}

/// Orthonormal frame of a plane in 3D.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame<T> {
    pub origin: Point3<T>,
    pub u: Point3<T>,
    pub v: Point3<T>,
    pub normal: Point3<T>,
}

impl<T: Real> LocalFrame<T> {
    /// Frame whose plane best fits the vertices (Newell normal); the first
    /// vertex is the origin and the first non-degenerate edge the `u` axis.
    /// An axis-aligned polygon in `z = c` gets the standard `x`/`y` axes.
    pub fn from_points(vertices: &[Point3<T>]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!("{} vertices, need at least 3", vertices.len())));
        }
        let mut n: Point3<T> = Point3::default();
        for (i, a) in vertices.iter().enumerate() {
            let b = vertices[(i + 1) % vertices.len()];
            n.x = n.x + (a.y - b.y) * (a.z + b.z);
            n.y = n.y + (a.z - b.z) * (a.x + b.x);
            n.z = n.z + (a.x - b.x) * (a.y + b.y);
        }
        let diam = Aabb::from_points(vertices).expect("non-empty").diagonal();
        if !(n.norm() > T::lit(1e-12) * diam * diam) {
            return Err(Error::InvalidPolygon("zero enclosed area".into()));
        }
        let mut normal = n.normalized();
        let axis = |i: usize| Point3::from_fn(|j| if i == j { T::one() } else { T::zero() });
        // Snap exactly axis-aligned planes to the coordinate axes.
        let (u, v) = if normal.x == T::zero() && normal.y == T::zero() {
            normal = axis(2) * normal.z.signum();
            (axis(0), axis(1) * normal.z)
        } else {
            let origin = vertices[0];
            let edge = vertices
                .iter()
                .skip(1)
                .map(|p| *p - origin)
                .find(|e| e.norm() > T::lit(1e-12) * diam)
                .ok_or_else(|| Error::InvalidPolygon("coincident vertices".into()))?;
            let u = (edge - normal * edge.dot(&normal)).normalized();
            (u, normal.cross(u))
        };
        let frame = LocalFrame {
            origin: vertices[0],
            u,
            v,
            normal,
        };
        let tol = T::lit(PLANARITY_TOLERANCE) * diam;
        for (i, p) in vertices.iter().enumerate() {
            let off = frame.height(p).abs();
            if off > tol {
                return Err(Error::NonPlanar {
                    vertex: i,
                    offset: off.as_f64(),
                    tolerance: tol.as_f64(),
                });
            }
        }
        Ok(frame)
    }

    /// Signed distance to the plane.
    #[inline]
    pub fn height(&self, p: &Point3<T>) -> T {
        (*p - self.origin).dot(&self.normal)
    }

    #[inline]
    pub fn to_2d(&self, p: &Point3<T>) -> Point2<T> {
        let d = *p - self.origin;
        Point2::new(d.dot(&self.u), d.dot(&self.v))
    }

    #[inline]
    pub fn to_3d(&self, p: &Point2<T>) -> Point3<T> {
        self.origin + self.u * p.x + self.v * p.y
    }
}

/// Planar simple polygon in 3D together with its local frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon<T> {
    pub vertices: Vec<Point3<T>>,
    pub frame: LocalFrame<T>,
    local: Vec<Point2<T>>,
}

impl<T: Real> Polygon<T> {
    pub fn new(vertices: Vec<Point3<T>>) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite coordinate".into()));
        }
        let frame = LocalFrame::from_points(&vertices)?;
        let local: Vec<_> = vertices.iter().map(|p| frame.to_2d(p)).collect();
        check_simple(&local)?;
        Ok(Polygon { vertices, frame, local })
    }

    /// Vertices in the polygon's own frame.
    pub fn local(&self) -> &[Point2<T>] {
        &self.local
    }

    pub fn diameter(&self) -> T {
        Aabb::from_points(&self.vertices).expect("non-empty").diagonal()
    }

    pub fn area(&self) -> T {
        signed_area(&self.local).abs()
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment<Point3<T>>> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains_local(&self, p: &Point2<T>) -> bool {
        point_in_polygon(p, &self.local)
    }
}

pub fn signed_area<T: Real>(poly: &[Point2<T>]) -> T {
    let n = poly.len();
    let mut s = T::zero();
    for i in 0..n {
        s = s + poly[i].perp_dot(poly[(i + 1) % n]);
    }
    s * T::lit(0.5)
}

fn orient<T: Real>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b - a).perp_dot(c - a)
}

fn segments_intersect<T: Real>(p: Point2<T>, q: Point2<T>, r: Point2<T>, s: Point2<T>) -> bool {
    let (d1, d2) = (orient(p, q, r), orient(p, q, s));
    let (d3, d4) = (orient(r, s, p), orient(r, s, q));
    let zero = T::zero();
    if ((d1 > zero && d2 < zero) || (d1 < zero && d2 > zero)) && ((d3 > zero && d4 < zero) || (d3 < zero && d4 > zero)) {
        return true;
    }
    let on = |a: Point2<T>, b: Point2<T>, c: Point2<T>, d: T| {
        d == zero && c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    on(p, q, r, d1) || on(p, q, s, d2) || on(r, s, p, d3) || on(r, s, q, d4)
}

fn check_simple<T: Real>(poly: &[Point2<T>]) -> Result<()> {
    let n = poly.len();
    for i in 0..n {
        if poly[i] == poly[(i + 1) % n] {
            return Err(Error::InvalidPolygon(format!("repeated vertex {i}")));
        }
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return Err(Error::InvalidPolygon(format!("edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

pub fn dist_point_segment<T: Real, P: Coords<T>>(p: &P, s: &Segment<P>) -> T {
    let d = s.b - s.a;
    let len2 = d.norm2();
    if len2 == T::zero() {
        return p.dist(&s.a);
    }
    let t = ((*p - s.a).dot(&d) / len2).max(T::zero()).min(T::one());
    p.dist(&s.at(t))
}

/// Distance from `p` to the closed polyline loop `poly`.
pub fn dist_point_boundary<T: Real>(p: &Point2<T>, poly: &[Point2<T>]) -> T {
    let n = poly.len();
    (0..n)
        .map(|i| dist_point_segment(p, &Segment::new(poly[i], poly[(i + 1) % n])))
        .fold(T::infinity(), T::min)
}

/// Crossing-number containment test; points on the boundary count as inside.
pub fn point_in_polygon<T: Real>(p: &Point2<T>, poly: &[Point2<T>]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            } else if p.x == x {
                return true;
            }
        }
        j = i;
    }
    if inside {
        return true;
    }
    // Boundary points that the parity test may classify either way.
    let scale = poly.iter().map(|q| q.x.abs().max(q.y.abs())).fold(T::zero(), T::max);
    dist_point_boundary(p, poly) <= T::lit(1e-12) * scale.max(T::one())
}

/// Euclidean distance from a 3D point to a filled planar polygon.
pub fn dist_point_polygon3<T: Real>(p: &Point3<T>, poly: &Polygon<T>) -> T {
    let h = poly.frame.height(p);
    let q = poly.frame.to_2d(p);
    if point_in_polygon(&q, poly.local()) {
        h.abs()
    } else {
        let d = dist_point_boundary(&q, poly.local());
        (h * h + d * d).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_z0() -> Vec<Point3<f64>> {
        vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ]
    }

    #[test]
    fn axis_aligned_frame_is_identity() {
        let poly = Polygon::new(square_z0()).unwrap();
        assert_eq!(poly.frame.to_2d(&Point3::new(1.0, 2.0, 0.0)), Point2::new(1.0, 2.0));
        for v in &poly.vertices {
            assert_eq!(poly.frame.to_3d(&poly.frame.to_2d(v)), *v);
        }
    }

    #[test]
    fn off_plane_vertex_rejected() {
        let mut v = square_z0();
        v.push(Point3::new(0.0, 0.5, 1e-3));
        assert!(matches!(Polygon::new(v), Err(Error::NonPlanar { .. })));
    }

    #[test]
    fn two_vertices_rejected() {
        let v = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        assert!(matches!(Polygon::new(v), Err(Error::InvalidPolygon(_))));
    }

    #[test]
    fn self_intersecting_rejected() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        assert!(Polygon::new(v).is_err());
    }

    #[test]
    fn tilted_frame_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b) = (0.7f64, -1.3f64);
        let lift = |x: f64, y: f64| Point3::new(x, y, 2.0 + a * x + b * y);
        let poly = Polygon::new(vec![lift(0.0, 0.0), lift(3.0, 0.2), lift(2.5, 2.0), lift(-0.5, 1.5)]).unwrap();
        for _ in 0..10_000 {
            let p = lift(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let back = poly.frame.to_3d(&poly.frame.to_2d(&p));
            assert!(back.dist(&p) <= 1e-12 * p.norm().max(1.0), "{p:?} -> {back:?}");
        }
    }

    #[test]
    fn containment_and_distances() {
        let sq: Vec<_> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
            .map(|(x, y)| Point2::new(x, y))
            .to_vec();
        assert!(point_in_polygon(&Point2::new(0.5, 0.5), &sq));
        assert!(point_in_polygon(&Point2::new(1.0, 0.5), &sq));
        assert!(point_in_polygon(&Point2::new(0.0, 0.0), &sq));
        assert!(!point_in_polygon(&Point2::new(1.5, 0.5), &sq));

        let s = Segment::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0));
        assert_eq!(dist_point_segment(&Point2::new(0.0, 2.0), &s), 2.0);
        assert_eq!(dist_point_segment(&Point2::new(2.0, 2.0), &s), 5f64.sqrt());

        let poly = Polygon::new(square_z0()).unwrap();
        assert_eq!(dist_point_polygon3(&Point3::new(0.5, 0.5, -0.3), &poly), 0.3);
        assert!((dist_point_polygon3(&Point3::new(2.0, 0.5, 1.0), &poly) - 2f64.sqrt()).abs() < 1e-15);
    }
}
