//! Delaunay triangulations in 2D and 3D, conforming excavation, and merging
//! of per-fracture meshes.
//!
//! Both triangulators are incremental Bowyer-Watson with ghost simplices on
//! the hull and exact orientation / in-sphere predicates. Points are inserted
//! along a space-filling curve; exact (or near) duplicates are reported and
//! skipped rather than inserted.

mod bw2;
mod bw3;

use std::collections::HashMap;

use robust::{orient2d, orient3d, Coord, Coord3D};

use crate::geometry::{triangle_circumball3, Aabb, Coords, Point2, Point3};
use crate::kdtree::KdTree;
use crate::mesh::TriMesh3;
use crate::{Error, Real, Result};

pub(crate) const INF: u32 = u32::MAX;

/// Relative tolerance below which two points count as the same node.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Cells indexing the caller's points, plus skipped duplicates as
/// `(duplicate, kept)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Triangulation<const N: usize> {
    pub cells: Vec<[u32; N]>,
    pub duplicates: Vec<(u32, u32)>,
}

fn to_f64<T: Real, P: Coords<T>, const D: usize>(pts: &[P]) -> Result<Vec<[f64; D]>> {
    pts.iter()
        .map(|p| {
            if !p.is_finite() {
                return Err(Error::InvalidParameter("non-finite point".into()));
            }
            Ok(std::array::from_fn(|k| p.coord(k).as_f64()))
        })
        .collect()
}

/// Index of each point's duplicate representative, scanning in input order.
fn dedup<P: Coords<f64>>(pts: &[P]) -> (Vec<u32>, Vec<(u32, u32)>) {
    let bb = Aabb::from_points(pts);
    let tol = DUPLICATE_TOLERANCE * bb.map(|b| b.diagonal()).unwrap_or(0.0);
    let tree = KdTree::new(pts.to_vec());
    let mut kept = Vec::with_capacity(pts.len());
    let mut is_dup = vec![false; pts.len()];
    let mut dups = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let mut rep: Option<usize> = None;
        tree.within(p, tol, |j, _| {
            if j < i && !is_dup[j] && rep.is_none_or(|r| j < r) {
                rep = Some(j);
            }
        });
        match rep {
            Some(j) => {
                is_dup[i] = true;
                dups.push((i as u32, j as u32));
            }
            None => kept.push(i as u32),
        }
    }
    (kept, dups)
}

/// Hilbert index of `(x, y)` in a `2^16` grid.
fn hilbert2(mut x: u32, mut y: u32) -> u64 {
    let n: u32 = 1 << 16;
    let mut d: u64 = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += u64::from(s) * u64::from(s) * u64::from((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

fn spread3(v: u32) -> u64 {
    let mut x = u64::from(v) & 0x1f_ffff;
    x = (x | x << 32) & 0x1f_0000_0000_ffff;
    x = (x | x << 16) & 0x1f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

fn quantize(v: f64, lo: f64, ext: f64, bits: u32) -> u32 {
    let max = ((1u64 << bits) - 1) as f64;
    if ext > 0.0 {
        (((v - lo) / ext) * max).clamp(0.0, max) as u32
    } else {
        0
    }
}

fn curve_order<const D: usize>(pts: &[[f64; D]], ids: &mut [u32]) {
    let mut lo = [f64::INFINITY; D];
    let mut hi = [f64::NEG_INFINITY; D];
    for &i in ids.iter() {
        for k in 0..D {
            lo[k] = lo[k].min(pts[i as usize][k]);
            hi[k] = hi[k].max(pts[i as usize][k]);
        }
    }
    let key = |i: u32| -> u64 {
        let p = pts[i as usize];
        if D == 2 {
            hilbert2(quantize(p[0], lo[0], hi[0] - lo[0], 16), quantize(p[1], lo[1], hi[1] - lo[1], 16))
        } else {
            spread3(quantize(p[0], lo[0], hi[0] - lo[0], 21))
                | spread3(quantize(p[1], lo[1], hi[1] - lo[1], 21)) << 1
                | spread3(quantize(p[2], lo[2], hi[2] - lo[2], 21)) << 2
        }
    };
    ids.sort_by_cached_key(|&i| (key(i), i));
}

/// Delaunay triangulation of planar points. Triangles are counter-clockwise.
pub fn delaunay2<T: Real>(points: &[Point2<T>]) -> Result<Triangulation<3>> {
    let raw: Vec<[f64; 2]> = to_f64::<T, _, 2>(points)?;
    let as_pts: Vec<Point2<f64>> = raw.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let (mut order, duplicates) = dedup(&as_pts);
    if order.len() < 3 {
        return Err(Error::Degenerate("fewer than three distinct points"));
    }
    curve_order(&raw, &mut order);
    let cr = |i: u32| Coord { x: raw[i as usize][0], y: raw[i as usize][1] };
    let (a, b) = (order[0], order[1]);
    let c_pos = order[2..]
        .iter()
        .position(|&c| orient2d(cr(a), cr(b), cr(c)) != 0.0)
        .ok_or(Error::Degenerate("all points are collinear"))?
        + 2;
    let c = order[c_pos];
    let mut tri = bw2::Bw2::new(&raw, a, b, c);
    for (k, &q) in order.iter().enumerate() {
        if k >= 2 && k != c_pos {
            tri.insert(q);
        }
    }
    Ok(Triangulation { cells: tri.triangles(), duplicates })
}

fn collinear3(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> bool {
    let o = |i: usize, j: usize| orient2d(Coord { x: a[i], y: a[j] }, Coord { x: b[i], y: b[j] }, Coord { x: c[i], y: c[j] });
    o(0, 1) == 0.0 && o(1, 2) == 0.0 && o(0, 2) == 0.0
}

/// Delaunay tetrahedralization. Tetrahedra are positively oriented
/// (`orient3d(v0, v1, v2, v3) > 0` in the robust-predicate convention).
pub fn delaunay3<T: Real>(points: &[Point3<T>]) -> Result<Triangulation<4>> {
    let raw: Vec<[f64; 3]> = to_f64::<T, _, 3>(points)?;
    let as_pts: Vec<Point3<f64>> = raw.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect();
    let (mut order, duplicates) = dedup(&as_pts);
    if order.len() < 4 {
        return Err(Error::Degenerate("fewer than four distinct points"));
    }
    curve_order(&raw, &mut order);
    let p = |i: u32| raw[i as usize];
    let cc = |i: u32| Coord3D { x: raw[i as usize][0], y: raw[i as usize][1], z: raw[i as usize][2] };
    let (a, b) = (order[0], order[1]);
    let c_pos = order[2..]
        .iter()
        .position(|&c| !collinear3(p(a), p(b), p(c)))
        .ok_or(Error::Degenerate("all points are collinear"))?
        + 2;
    let c = order[c_pos];
    let d_pos = order[2..]
        .iter()
        .position(|&d| orient3d(cc(a), cc(b), cc(c), cc(d)) != 0.0)
        .ok_or(Error::Degenerate("all points are coplanar"))?
        + 2;
    let d = order[d_pos];
    let mut tet = bw3::Bw3::new(&raw, [a, b, c, d]);
    for (k, &q) in order.iter().enumerate() {
        if k >= 2 && k != c_pos && k != d_pos {
            tet.insert(q);
        }
    }
    Ok(Triangulation { cells: tet.tets(), duplicates })
}

/// Outcome of excavation followed by triangulation. Indices refer to the
/// caller's point array.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Conformed<const N: usize> {
    pub removed: Vec<u32>,
    pub cells: Vec<[u32; N]>,
    pub duplicates: Vec<(u32, u32)>,
}

fn remove_inside<T: Real, P: Coords<T>>(
    points: &[P],
    protected: &[bool],
    balls: impl Iterator<Item = (P, T, Vec<u32>)>,
) -> Result<Vec<bool>> {
    let tree = KdTree::new(points.to_vec());
    let mut gone = vec![false; points.len()];
    for (center, r, own) in balls {
        let lim = r - T::lit(1e-12) * r;
        let mut bad = None;
        tree.within(&center, r, |j, d2| {
            if d2 < lim * lim && !own.contains(&(j as u32)) {
                if protected[j] {
                    bad = Some(j);
                } else {
                    gone[j] = true;
                }
            }
        });
        if let Some(j) = bad {
            return Err(Error::Consistency(format!(
                "protected node {j} lies strictly inside the circumball of protected simplex {own:?}"
            )));
        }
    }
    Ok(gone)
}

fn survivors(gone: &[bool]) -> (Vec<u32>, Vec<u32>) {
    let mut keep = Vec::new();
    let mut removed = Vec::new();
    for (i, &g) in gone.iter().enumerate() {
        if g { removed.push(i as u32) } else { keep.push(i as u32) }
    }
    (keep, removed)
}

/// Removes every unprotected node strictly inside the diametral circle of a
/// protected segment, then triangulates the rest. Endpoints of the segments
/// are protected implicitly.
pub fn conform2<T: Real>(points: &[Point2<T>], segments: &[[u32; 2]]) -> Result<Conformed<3>> {
    let mut protected = vec![false; points.len()];
    for s in segments {
        for &v in s {
            *protected
                .get_mut(v as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("segment endpoint {v} out of range")))? = true;
        }
    }
    let balls = segments.iter().map(|&[a, b]| {
        let (pa, pb) = (points[a as usize], points[b as usize]);
        ((pa + pb) * T::lit(0.5), pa.dist(&pb) * T::lit(0.5), vec![a, b])
    });
    let gone = remove_inside(points, &protected, balls)?;
    let (keep, removed) = survivors(&gone);
    let sub: Vec<Point2<T>> = keep.iter().map(|&i| points[i as usize]).collect();
    let t = delaunay2(&sub)?;
    Ok(Conformed {
        removed,
        cells: t.cells.iter().map(|c| c.map(|i| keep[i as usize])).collect(),
        duplicates: t.duplicates.iter().map(|&(d, k)| (keep[d as usize], keep[k as usize])).collect(),
    })
}

/// Removes unprotected nodes strictly inside the circumball of any protected
/// triangle, then tetrahedralizes the rest.
pub fn conform3<T: Real>(points: &[Point3<T>], protected: &[bool], triangles: &[[u32; 3]]) -> Result<Conformed<4>> {
    if protected.len() != points.len() {
        return Err(Error::InvalidParameter("protection mask length mismatch".into()));
    }
    let gone = remove_inside(points, protected, excavation_balls(points, triangles))?;
    let (keep, removed) = survivors(&gone);
    let sub: Vec<Point3<T>> = keep.iter().map(|&i| points[i as usize]).collect();
    let t = delaunay3(&sub)?;
    Ok(Conformed {
        removed,
        cells: t.cells.iter().map(|c| c.map(|i| keep[i as usize])).collect(),
        duplicates: t.duplicates.iter().map(|&(d, k)| (keep[d as usize], keep[k as usize])).collect(),
    })
}

fn excavation_balls<'a, T: Real>(
    points: &'a [Point3<T>],
    triangles: &'a [[u32; 3]],
) -> impl Iterator<Item = (Point3<T>, T, Vec<u32>)> + 'a {
    triangles.iter().filter_map(move |t| {
        let [a, b, c] = t.map(|i| points[i as usize]);
        triangle_circumball3(a, b, c).ok().map(|(center, r)| (center, r, t.to_vec()))
    })
}

/// Glues per-fracture surface meshes into one, unifying nodes that carry the
/// same global id. Nodes without an id are kept distinct.
pub fn merge_fracture_meshes<T: Real>(parts: &[TriMesh3<T>]) -> Result<TriMesh3<T>> {
    let mut out = TriMesh3::<T>::default();
    let all: Vec<Point3<T>> = parts.iter().flat_map(|m| m.nodes.iter().copied()).collect();
    let size = Aabb::from_points(&all).map(|b| b.diagonal()).unwrap_or(T::zero());
    let tol = T::lit(1e-9) * size;
    let mut by_gid: HashMap<u64, u32> = HashMap::new();
    for m in parts {
        if m.tags.len() != m.nodes.len() || m.global_ids.len() != m.nodes.len() {
            return Err(Error::InvalidParameter("mesh attribute lengths differ".into()));
        }
        let mut map = Vec::with_capacity(m.nodes.len());
        for (i, p) in m.nodes.iter().enumerate() {
            let gid = m.global_ids[i];
            if let Some(g) = gid {
                if let Some(&j) = by_gid.get(&g) {
                    let d = out.nodes[j as usize].dist(p);
                    if d > tol {
                        return Err(Error::Consistency(format!(
                            "node with global id {g} appears at positions {:.3e} apart",
                            d.as_f64()
                        )));
                    }
                    map.push(j);
                    continue;
                }
            }
            let j = out.nodes.len() as u32;
            out.nodes.push(*p);
            out.tags.push(m.tags[i]);
            out.global_ids.push(gid);
            if let Some(g) = gid {
                by_gid.insert(g, j);
            }
            map.push(j);
        }
        out.cells.extend(m.cells.iter().map(|c| c.map(|i| map[i as usize])));
    }
    Ok(out)
}
