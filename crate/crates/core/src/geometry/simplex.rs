//! Circumscribed balls, angles and shape measures of triangles and tetrahedra.
//!
//! Angles are reported in degrees. A simplex is degenerate when its area
//! (volume) falls below `1e-12 * size^d`, `size` being the largest side of its
//! bounding box.

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Coords, Point2, Point3};
use crate::Real;

const DEGENERACY: f64 = 1e-12;

fn bbox_size<T: Real, P: Coords<T>>(pts: &[P]) -> T {
    Aabb::from_points(pts).map_or(T::zero(), |b| b.size())
}

/// Angle between two vectors in radians, accurate for tiny and near-π angles.
#[inline]
pub fn vector_angle<T: Real, P: Coords<T>>(u: P, v: P) -> T {
    let (nu, nv) = (u.norm(), v.norm());
    let a = u * nv;
    let b = v * nu;
    let two = T::lit(2.0);
    two * (a - b).norm().atan2((a + b).norm())
}

/// Triangle area from side lengths (numerically stable Heron form).
pub fn triangle_area<T: Real, P: Coords<T>>(a: P, b: P, c: P) -> T {
    let mut s = [a.dist(&b), b.dist(&c), c.dist(&a)];
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    let [x, y, z] = s;
    let prod = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
    T::lit(0.25) * prod.max(T::zero()).sqrt()
}

fn check_triangle<T: Real, P: Coords<T>>(a: P, b: P, c: P) -> Result<T> {
    let area = triangle_area(a, b, c);
    let size = bbox_size(&[a, b, c]);
    if !(area > T::lit(DEGENERACY) * size * size) {
        return Err(Error::Degenerate("triangle area below threshold"));
    }
    Ok(area)
}

pub fn tet_volume<T: Real>(p: &[Point3<T>; 4]) -> T {
    let (u, v, w) = (p[1] - p[0], p[2] - p[0], p[3] - p[0]);
    u.dot(&v.cross(w)) / T::lit(6.0)
}

fn check_tet<T: Real>(p: &[Point3<T>; 4]) -> Result<T> {
    let vol = tet_volume(p);
    let size = bbox_size(p);
    if !(vol.abs() > T::lit(DEGENERACY) * size * size * size) {
        return Err(Error::Degenerate("tetrahedron volume below threshold"));
    }
    Ok(vol)
}

pub fn circumcircle2<T: Real>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> Result<(Point2<T>, T)> {
    check_triangle(a, b, c)?;
    let (u, v) = (b - a, c - a);
    let d = T::lit(2.0) * u.perp_dot(v);
    let (uu, vv) = (u.norm2(), v.norm2());
    let off = Point2::new((v.y * uu - u.y * vv) / d, (u.x * vv - v.x * uu) / d);
    Ok((a + off, off.norm()))
}

pub fn circumsphere3<T: Real>(
    a: Point3<T>,
    b: Point3<T>,
    c: Point3<T>,
    d: Point3<T>,
) -> Result<(Point3<T>, T)> {
    check_tet(&[a, b, c, d])?;
    let (u, v, w) = (b - a, c - a, d - a);
    let den = T::lit(2.0) * u.dot(&v.cross(w));
    let off = (v.cross(w) * u.norm2() + w.cross(u) * v.norm2() + u.cross(v) * w.norm2()) * (T::one() / den);
    Ok((a + off, off.norm()))
}

/// Circumcenter and circumradius of a triangle embedded in 3D; the center lies
/// in the triangle's plane, so this is also its smallest circumscribed sphere.
pub fn triangle_circumball3<T: Real>(a: Point3<T>, b: Point3<T>, c: Point3<T>) -> Result<(Point3<T>, T)> {
    check_triangle(a, b, c)?;
    let (u, v) = (b - a, c - a);
    let n = u.cross(v);
    let off = (v * u.norm2() - u * v.norm2()).cross(n) * (T::one() / (T::lit(2.0) * n.norm2()));
    Ok((a + off, off.norm()))
}

/// The three interior angles in degrees, at `a`, `b` and `c` respectively.
pub fn triangle_angles_all<T: Real, P: Coords<T>>(a: P, b: P, c: P) -> Result<[T; 3]> {
    check_triangle(a, b, c)?;
    Ok([
        vector_angle(b - a, c - a).to_degrees(),
        vector_angle(a - b, c - b).to_degrees(),
        vector_angle(a - c, b - c).to_degrees(),
    ])
}

/// `(min_angle, max_angle)` in degrees.
pub fn triangle_angles<T: Real, P: Coords<T>>(a: P, b: P, c: P) -> Result<(T, T)> {
    let ang = triangle_angles_all(a, b, c)?;
    let lo = ang.iter().copied().fold(T::infinity(), T::min);
    let hi = ang.iter().copied().fold(T::neg_infinity(), T::max);
    Ok((lo, hi))
}

/// Vertex pairs of the six tetrahedron edges, in the order used by
/// [`dihedral_angles`].
pub const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Six dihedral angles in degrees, one per edge of [`TET_EDGES`].
pub fn dihedral_angles<T: Real>(p: &[Point3<T>; 4]) -> Result<[T; 6]> {
    check_tet(p)?;
    // Outward normal of the face opposite vertex i.
    let normal = |i: usize| {
        let f: Vec<usize> = (0..4).filter(|&j| j != i).collect();
        let n = (p[f[1]] - p[f[0]]).cross(p[f[2]] - p[f[0]]);
        if n.dot(&(p[i] - p[f[0]])) > T::zero() {
            -n
        } else {
            n
        }
    };
    let normals = [normal(0), normal(1), normal(2), normal(3)];
    let pi = T::PI();
    let mut out = [T::zero(); 6];
    for (e, &(i, j)) in TET_EDGES.iter().enumerate() {
        let (k, l) = match (0..4).filter(|&m| m != i && m != j).collect::<Vec<_>>()[..] {
            [k, l] => (k, l),
            _ => unreachable!(),
        };
        out[e] = (pi - vector_angle(normals[k], normals[l])).to_degrees();
    }
    Ok(out)
}

/// `2 * inradius / circumradius`; 1 for the equilateral triangle.
pub fn aspect_ratio_tri<T: Real, P: Coords<T>>(a: P, b: P, c: P) -> Result<T> {
    let area = check_triangle(a, b, c)?;
    let (la, lb, lc) = (b.dist(&c), c.dist(&a), a.dist(&b));
    let s = (la + lb + lc) * T::lit(0.5);
    let r_in = area / s;
    let r_circ = la * lb * lc / (T::lit(4.0) * area);
    Ok((T::lit(2.0) * r_in / r_circ).min(T::one()))
}

/// `3 * inradius / circumradius`; 1 for the regular tetrahedron.
pub fn aspect_ratio_tet<T: Real>(p: &[Point3<T>; 4]) -> Result<T> {
    let vol = check_tet(p)?.abs();
    let faces = triangle_area(p[1], p[2], p[3])
        + triangle_area(p[0], p[2], p[3])
        + triangle_area(p[0], p[1], p[3])
        + triangle_area(p[0], p[1], p[2]);
    let r_in = T::lit(3.0) * vol / faces;
    let (_, r_circ) = circumsphere3(p[0], p[1], p[2], p[3])?;
    Ok((T::lit(3.0) * r_in / r_circ).min(T::one()))
}
