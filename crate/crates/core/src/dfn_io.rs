//! Fracture networks: text format, intersection traces, deterministic test
//! networks, and mesh files (native text and legacy VTK).
//!
//! Network grammar, one record per line, `#` starts a comment:
//!
//! ```text
//! domain xmin ymin zmin xmax ymax zmax
//! fracture <id> <n>          # followed by n lines "x y z"; ids are 0, 1, 2, ...
//! intersection <i> <j> x1 y1 z1 x2 y2 z2
//! ```
//!
//! When no `intersection` record is present the traces are computed.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::NodeTag;
use crate::geometry::{
    dist_point_polygon3, dist_point_segment, point_in_polygon, Aabb, Coords, Point2, Point3, Polygon, Segment,
};
use crate::mesh::Mesh;
use crate::{Error, Real, Result};

/// Trace shared by fractures `i < j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Intersection<T> {
    pub i: usize,
    pub j: usize,
    pub segment: Segment<Point3<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dfn<T> {
    pub fractures: Vec<Polygon<T>>,
    pub intersections: Vec<Intersection<T>>,
    pub domain: Option<Aabb<Point3<T>>>,
}

impl<T: Real> Dfn<T> {
    /// Network with traces computed from the polygons.
    pub fn new(fractures: Vec<Polygon<T>>, domain: Option<Aabb<Point3<T>>>) -> Result<Self> {
        let intersections = compute_intersections(&fractures)?;
        let dfn = Dfn { fractures, intersections, domain };
        dfn.check_domain()?;
        Ok(dfn)
    }

    fn check_domain(&self) -> Result<()> {
        if let Some(d) = &self.domain {
            let tol = T::lit(1e-9) * self.size();
            let grown = d.inflate(tol);
            for (k, f) in self.fractures.iter().enumerate() {
                if f.vertices.iter().any(|p| !grown.contains(p)) {
                    return Err(Error::InvalidParameter(format!("fracture {k} leaves the domain box")));
                }
            }
        }
        Ok(())
    }

    /// Length scale used for relative tolerances: the domain diagonal, or the
    /// diagonal of all fracture vertices.
    pub fn size(&self) -> T {
        if let Some(d) = &self.domain {
            return d.diagonal();
        }
        let all: Vec<Point3<T>> = self.fractures.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        Aabb::from_points(&all).map(|b| b.diagonal()).unwrap_or(T::zero())
    }

    /// Traces touching fracture `k`, with the other fracture's index.
    pub fn traces_of(&self, k: usize) -> impl Iterator<Item = (usize, &Intersection<T>)> + '_ {
        self.intersections.iter().enumerate().filter(move |(_, s)| s.i == k || s.j == k)
    }
}

fn cross2<T: Real>(a: Point2<T>, b: Point2<T>) -> T {
    a.perp_dot(b)
}

/// Parameter intervals where the line `q0 + t e` (in the polygon's frame) is
/// inside the closed polygon.
fn clip_line<T: Real>(poly: &Polygon<T>, q0: Point2<T>, e: Point2<T>) -> Vec<(T, T)> {
    let loc = poly.local();
    let n = loc.len();
    let mut ts: Vec<T> = Vec::new();
    let eps = T::lit(1e-12);
    for i in 0..n {
        let (a, b) = (loc[i], loc[(i + 1) % n]);
        let ab = b - a;
        let den = cross2(e, ab);
        if den.abs() <= eps * ab.norm() * e.norm() {
            continue;
        }
        let t = cross2(a - q0, ab) / den;
        let s = cross2(a - q0, e) / den;
        if s >= -eps && s <= T::one() + eps {
            ts.push(t);
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ts.dedup_by(|a, b| (*a - *b).abs() <= eps * (a.abs() + b.abs() + T::one()));
    let mut out: Vec<(T, T)> = Vec::new();
    for w in ts.windows(2) {
        let mid = (w[0] + w[1]) * T::lit(0.5);
        if point_in_polygon(&(q0 + e * mid), loc) {
            match out.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

fn polygons_overlap_2d<T: Real>(a: &Polygon<T>, b: &Polygon<T>) -> bool {
    let bl: Vec<Point2<T>> = b.vertices.iter().map(|p| a.frame.to_2d(p)).collect();
    if a.local().iter().any(|p| point_in_polygon(p, &bl)) || bl.iter().any(|p| point_in_polygon(p, a.local())) {
        return true;
    }
    let (na, nb) = (a.local().len(), bl.len());
    for i in 0..na {
        for j in 0..nb {
            let s = Segment::new(a.local()[i], a.local()[(i + 1) % na]);
            let t = Segment::new(bl[j], bl[(j + 1) % nb]);
            if segment_distance2(&s, &t) == T::zero() {
                return true;
            }
        }
    }
    false
}

/// Distance between two planar segments (zero when they cross).
pub fn segment_distance2<T: Real>(s: &Segment<Point2<T>>, t: &Segment<Point2<T>>) -> T {
    let o = |a: Point2<T>, b: Point2<T>, c: Point2<T>| cross2(b - a, c - a);
    let (d1, d2, d3, d4) = (o(s.a, s.b, t.a), o(s.a, s.b, t.b), o(t.a, t.b, s.a), o(t.a, t.b, s.b));
    let z = T::zero();
    if ((d1 > z && d2 < z) || (d1 < z && d2 > z)) && ((d3 > z && d4 < z) || (d3 < z && d4 > z)) {
        return z;
    }
    dist_point_segment(&s.a, t)
        .min(dist_point_segment(&s.b, t))
        .min(dist_point_segment(&t.a, s))
        .min(dist_point_segment(&t.b, s))
}

/// Traces between every pair of fractures. Pieces shorter than `1e-9` of the
/// network size are dropped.
pub fn compute_intersections<T: Real>(fractures: &[Polygon<T>]) -> Result<Vec<Intersection<T>>> {
    let all: Vec<Point3<T>> = fractures.iter().flat_map(|f| f.vertices.iter().copied()).collect();
    let size = Aabb::from_points(&all).map(|b| b.diagonal()).unwrap_or(T::zero());
    let tol = T::lit(1e-9) * size;
    let boxes: Vec<Aabb<Point3<T>>> =
        fractures.iter().map(|f| Aabb::from_points(&f.vertices).expect("non-empty").inflate(tol)).collect();
    let mut out = Vec::new();
    for i in 0..fractures.len() {
        for j in i + 1..fractures.len() {
            let (bi, bj) = (&boxes[i], &boxes[j]);
            if (0..3).any(|k| bi.max.coord(k) < bj.min.coord(k) || bj.max.coord(k) < bi.min.coord(k)) {
                continue;
            }
            let (fi, fj) = (&fractures[i], &fractures[j]);
            let (n1, n2) = (fi.frame.normal, fj.frame.normal);
            let d = n1.cross(n2);
            if d.norm() <= T::lit(1e-12) {
                let coplanar = fj.vertices.iter().all(|p| fi.frame.height(p).abs() <= tol);
                if coplanar && polygons_overlap_2d(fi, fj) {
                    return Err(Error::Unsupported(format!("fractures {i} and {j} are coplanar and overlap")));
                }
                continue;
            }
            let (h1, h2) = (n1.dot(&fi.frame.origin), n2.dot(&fj.frame.origin));
            let p0 = (n2.cross(d) * h1 + d.cross(n1) * h2) * (T::one() / d.norm2());
            let dir = d.normalized();
            let on = |f: &Polygon<T>| {
                let q0 = f.frame.to_2d(&p0);
                let e = Point2::new(dir.dot(&f.frame.u), dir.dot(&f.frame.v));
                clip_line(f, q0, e)
            };
            let (ii, jj) = (on(fi), on(fj));
            for &(a0, a1) in &ii {
                for &(b0, b1) in &jj {
                    let (lo, hi) = (a0.max(b0), a1.min(b1));
                    if hi - lo > tol {
                        out.push(Intersection { i, j, segment: Segment::new(p0 + dir * lo, p0 + dir * hi) });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Canonical text form; [`parse_dfn`] reads it back exactly.
pub fn serialize_dfn<T: Real>(dfn: &Dfn<T>) -> String {
    let mut s = String::new();
    let p3 = |p: &Point3<T>| format!("{} {} {}", fmt_f(p.x.as_f64()), fmt_f(p.y.as_f64()), fmt_f(p.z.as_f64()));
    if let Some(d) = &dfn.domain {
        let _ = writeln!(s, "domain {} {}", p3(&d.min), p3(&d.max));
    }
    for (k, f) in dfn.fractures.iter().enumerate() {
        let _ = writeln!(s, "fracture {k} {}", f.vertices.len());
        for v in &f.vertices {
            let _ = writeln!(s, "{}", p3(v));
        }
    }
    for x in &dfn.intersections {
        let _ = writeln!(s, "intersection {} {} {} {}", x.i, x.j, p3(&x.segment.a), p3(&x.segment.b));
    }
    s
}

fn parse_floats<T: Real>(toks: &[&str], line: usize) -> Result<Vec<T>> {
    toks.iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(T::lit)
                .ok_or_else(|| Error::parse(line, format!("expected a finite number, found `{t}`")))
        })
        .collect()
}

fn parse_index(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| Error::parse(line, format!("expected an index, found `{tok}`")))
}

/// Parses the network format described in the module docs.
pub fn parse_dfn<T: Real>(text: &str) -> Result<Dfn<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()));
    let mut fractures = Vec::new();
    let mut intersections = Vec::new();
    let mut domain = None;
    while let Some((ln, l)) = lines.next() {
        if l.is_empty() {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks[0] {
            "domain" => {
                if toks.len() != 7 {
                    return Err(Error::parse(ln, "domain needs six numbers"));
                }
                let v = parse_floats::<T>(&toks[1..], ln)?;
                let (min, max) = (Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5]));
                if (0..3).any(|k| min.coord(k) >= max.coord(k)) {
                    return Err(Error::parse(ln, "domain minimum must be below maximum"));
                }
                domain = Some(Aabb { min, max });
            }
            "fracture" => {
                if toks.len() != 3 {
                    return Err(Error::parse(ln, "expected `fracture <id> <n>`"));
                }
                let id = parse_index(toks[1], ln)?;
                if id != fractures.len() {
                    return Err(Error::parse(ln, format!("fracture ids must be consecutive from 0; expected {}", fractures.len())));
                }
                let n = parse_index(toks[2], ln)?;
                let mut verts = Vec::with_capacity(n);
                while verts.len() < n {
                    let (vl, l) = lines.next().ok_or_else(|| Error::parse(ln, "unexpected end of input in fracture"))?;
                    if l.is_empty() {
                        continue;
                    }
                    let t: Vec<&str> = l.split_whitespace().collect();
                    if t.len() != 3 {
                        return Err(Error::parse(vl, "vertex needs three coordinates"));
                    }
                    let v = parse_floats::<T>(&t, vl)?;
                    verts.push(Point3::new(v[0], v[1], v[2]));
                }
                if n < 3 {
                    return Err(Error::InvalidPolygon(format!("fracture {id} has {n} vertices; at least 3 are needed")));
                }
                fractures.push(Polygon::new(verts)?);
            }
            "intersection" => {
                if toks.len() != 9 {
                    return Err(Error::parse(ln, "expected `intersection <i> <j>` and six numbers"));
                }
                let (i, j) = (parse_index(toks[1], ln)?, parse_index(toks[2], ln)?);
                if i >= j {
                    return Err(Error::parse(ln, "intersection indices must satisfy i < j"));
                }
                let v = parse_floats::<T>(&toks[3..], ln)?;
                intersections.push((
                    ln,
                    Intersection {
                        i,
                        j,
                        segment: Segment::new(Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5])),
                    },
                ));
            }
            other => return Err(Error::parse(ln, format!("unknown record `{other}`"))),
        }
    }
    if intersections.is_empty() {
        return Dfn::new(fractures, domain);
    }
    let dfn = Dfn { fractures, intersections: intersections.iter().map(|(_, x)| x.clone()).collect(), domain };
    let tol = T::lit(1e-9) * dfn.size();
    for (ln, x) in &intersections {
        for &k in &[x.i, x.j] {
            let f = dfn.fractures.get(k).ok_or_else(|| Error::parse(*ln, format!("unknown fracture {k}")))?;
            if f.frame.height(&x.segment.a).abs() > tol || f.frame.height(&x.segment.b).abs() > tol {
                return Err(Error::parse(*ln, format!("intersection does not lie in the plane of fracture {k}")));
            }
        }
    }
    dfn.check_domain()?;
    Ok(dfn)
}

pub fn read_dfn<T: Real>(path: &Path) -> Result<Dfn<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dfn(&text)
}

pub fn write_dfn<T: Real>(dfn: &Dfn<T>, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_dfn(dfn)).map_err(|e| Error::io(path, e))
}

/// Geometric separation checks that keep every trace resolvable at a mesh
/// size well below `delta`: traces in one fracture stay `delta` apart, trace
/// ends avoid polygon vertices, traces meet the boundary at no less than 30
/// degrees and otherwise keep `delta / 2` from it, and fractures that do not
/// intersect stay `delta` apart.
pub fn check_separation<T: Real>(dfn: &Dfn<T>, delta: T) -> Result<()> {
    let size = dfn.size();
    let on_tol = T::lit(1e-9) * size;
    let bad = |k: usize, msg: String| Err(Error::MinimumFeature(format!("fracture {k}: {msg}")));
    for (k, f) in dfn.fractures.iter().enumerate() {
        let loc = f.local();
        let n = loc.len();
        let traces: Vec<Segment<Point2<T>>> = dfn
            .traces_of(k)
            .map(|(_, x)| Segment::new(f.frame.to_2d(&x.segment.a), f.frame.to_2d(&x.segment.b)))
            .collect();
        for (a, s) in traces.iter().enumerate() {
            if s.length::<T>() < delta {
                return bad(k, format!("trace {a} shorter than {}", delta.as_f64()));
            }
            for t in &traces[a + 1..] {
                if segment_distance2(s, t) < delta {
                    return bad(k, "two traces come too close".into());
                }
            }
            let dir = (s.b - s.a) * (T::one() / s.length::<T>());
            let mut core = *s;
            for (end, inward) in [(s.a, dir), (s.b, -dir)] {
                if loc.iter().any(|v| v.dist(&end) < delta) {
                    return bad(k, "trace ends next to a polygon vertex".into());
                }
                let hit = (0..n).find(|&i| dist_point_segment(&end, &Segment::new(loc[i], loc[(i + 1) % n])) <= on_tol);
                if let Some(i) = hit {
                    let e = loc[(i + 1) % n] - loc[i];
                    let sin = (cross2(e, inward) / e.norm()).abs();
                    if sin < T::lit(0.5) {
                        return bad(k, "trace meets the boundary at less than 30 degrees".into());
                    }
                    // Exclude the neighbourhood of the contact from the clearance test.
                    if end == s.a {
                        core.a = s.a + inward * delta;
                    } else {
                        core.b = s.b + inward * delta;
                    }
                }
            }
            let clearance = (0..n)
                .map(|i| segment_distance2(&core, &Segment::new(loc[i], loc[(i + 1) % n])))
                .fold(T::infinity(), T::min);
            if clearance < delta * T::lit(0.5) {
                return bad(k, "trace runs too close to the boundary".into());
            }
        }
    }
    for i in 0..dfn.fractures.len() {
        for j in i + 1..dfn.fractures.len() {
            if dfn.intersections.iter().any(|x| x.i == i && x.j == j) {
                continue;
            }
            let gap = polygon_gap(&dfn.fractures[i], &dfn.fractures[j]).min(polygon_gap(&dfn.fractures[j], &dfn.fractures[i]));
            if gap < delta {
                return Err(Error::MinimumFeature(format!("fractures {i} and {j} are {:.3e} apart", gap.as_f64())));
            }
        }
    }
    Ok(())
}

/// Distance from the sampled boundary of `a` to the filled polygon `b`.
fn polygon_gap<T: Real>(a: &Polygon<T>, b: &Polygon<T>) -> T {
    let mut m = T::infinity();
    for e in a.edges() {
        for s in 0..=32 {
            let p = e.at(T::lit(s as f64 / 32.0));
            m = m.min(dist_point_polygon3(&p, b));
        }
    }
    m
}

fn regular_polygon(center: Point3<f64>, u: Point3<f64>, v: Point3<f64>, r: f64, n: usize) -> Vec<Point3<f64>> {
    (0..n)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            center + u * (r * a.cos()) + v * (r * a.sin())
        })
        .collect()
}

fn axis(k: usize) -> Point3<f64> {
    Point3::from_fn(|j| if j == k { 1.0 } else { 0.0 })
}

/// Axis-aligned square with normal along axis `k`.
fn square(center: Point3<f64>, k: usize, side: f64) -> Vec<Point3<f64>> {
    let (u, v) = (axis((k + 1) % 3), axis((k + 2) % 3));
    let h = side / 2.0;
    vec![center - u * h - v * h, center + u * h - v * h, center + u * h + v * h, center - u * h + v * h]
}

/// Deterministic test networks:
///
/// * `four-discs`: four 32-gon discs forming a small connected network;
/// * `seven-rects`: seven axis-aligned squares of side 4 in the box `[0, 10]^3`;
/// * `exp-25` or `exp-25(<seed>)`: 25 randomly oriented 16-gon discs with
///   radii `1 + Exp(0.3)` (capped at 4) in the box `[0, 20]^3`.
pub fn generate_test_dfn(name: &str) -> Result<Dfn<f64>> {
    let name = name.trim();
    match name {
        "four-discs" => {
            let polys = vec![
                regular_polygon(Point3::new(0.0, 0.0, 0.0), axis(0), axis(1), 1.0, 32),
                // Offsets put every trace end near the middle of a polygon edge.
                regular_polygon(Point3::new(0.2, 0.0, 0.377), axis(1), axis(2), 0.8, 32),
                regular_polygon(Point3::new(-0.5, 0.0, -0.2032), axis(1), axis(2), 0.7, 32),
                regular_polygon(Point3::new(0.58, 0.0, 0.754), axis(0), axis(1), 0.6, 32),
            ];
            let fr = polys.into_iter().map(Polygon::new).collect::<Result<Vec<_>>>()?;
            let domain = Aabb { min: Point3::new(-1.5, -1.5, -1.5), max: Point3::new(1.5, 1.5, 1.5) };
            Dfn::new(fr, Some(domain))
        }
        "seven-rects" => {
            let domain = Aabb { min: Point3::new(0.0, 0.0, 0.0), max: Point3::new(10.0, 10.0, 10.0) };
            random_network(7, 0x7ec7, &domain, 0.6, |rng| {
                let k = rng.gen_range(0..3);
                let c = Point3::from_fn(|_| 0.5 * rng.gen_range(6..=14) as f64);
                Polygon::new(square(c, k, 4.0))
            })
        }
        _ => {
            let seed = if name == "exp-25" {
                0
            } else if let Some(s) = name.strip_prefix("exp-25(").and_then(|s| s.strip_suffix(')')) {
                s.trim().parse::<u64>().map_err(|_| Error::InvalidParameter(format!("bad seed in `{name}`")))?
            } else {
                return Err(Error::InvalidParameter(format!("unknown test network `{name}`")));
            };
            let domain = Aabb { min: Point3::new(0.0, 0.0, 0.0), max: Point3::new(20.0, 20.0, 20.0) };
            random_network(25, seed, &domain, 0.3, |rng| {
                let u: f64 = rng.gen();
                let r = (1.0 - (1.0 - u).ln() / 0.3).min(4.0);
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).sqrt();
                let nrm = Point3::new(s * phi.cos(), s * phi.sin(), z);
                let helper = if nrm.x.abs() < 0.9 { axis(0) } else { axis(1) };
                let u = nrm.cross(helper).normalized();
                let v = nrm.cross(u);
                let m = 1.0 + r;
                let c = Point3::from_fn(|_| rng.gen_range(m..20.0 - m));
                Polygon::new(regular_polygon(c, u, v, r, 16))
            })
        }
    }
}

/// Adds proposals one at a time, keeping those that leave the network well
/// separated and connected to what is already there.
fn random_network(
    count: usize,
    seed: u64,
    domain: &Aabb<Point3<f64>>,
    delta: f64,
    mut propose: impl FnMut(&mut ChaCha8Rng) -> Result<Polygon<f64>>,
) -> Result<Dfn<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fr: Vec<Polygon<f64>> = Vec::new();
    let mut dfn = Dfn::new(Vec::new(), Some(*domain))?;
    for _ in 0..200_000 {
        if fr.len() == count {
            return Ok(dfn);
        }
        let Ok(p) = propose(&mut rng) else { continue };
        let mut trial = fr.clone();
        trial.push(p.clone());
        let Ok(cand) = Dfn::new(trial, Some(*domain)) else { continue };
        let k = fr.len();
        let touches = cand.intersections.iter().any(|x| x.j == k);
        if (k > 0 && !touches) || check_separation(&cand, delta).is_err() {
            continue;
        }
        fr.push(p);
        dfn = cand;
    }
    Err(Error::Internal(format!("could not place {count} separated fractures (placed {})", fr.len())))
}

fn tag_of(code: &str, line: usize) -> Result<NodeTag> {
    code.parse::<u8>()
        .ok()
        .and_then(NodeTag::from_code)
        .ok_or_else(|| Error::parse(line, format!("bad node tag `{code}`")))
}

/// Native mesh text:
///
/// ```text
/// nmaps-mesh <N>               # vertices per cell
/// nodes <n>
/// x y z tag gid                # gid is `-` when absent
/// cells <m>
/// v0 ... v{N-1}
/// ```
pub fn serialize_mesh<T: Real, const N: usize>(mesh: &Mesh<Point3<T>, N>) -> String {
    let mut s = format!("nmaps-mesh {N}\nnodes {}\n", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let gid = mesh.global_ids[i].map_or("-".to_string(), |g| g.to_string());
        let _ = writeln!(
            s,
            "{} {} {} {} {gid}",
            fmt_f(p.x.as_f64()),
            fmt_f(p.y.as_f64()),
            fmt_f(p.z.as_f64()),
            mesh.tags[i].code()
        );
    }
    let _ = writeln!(s, "cells {}", mesh.cells.len());
    for c in &mesh.cells {
        let row: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn parse_mesh<T: Real, const N: usize>(text: &str) -> Result<Mesh<Point3<T>, N>> {
    let mut it = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| it.next().ok_or_else(|| Error::parse(0, format!("unexpected end of mesh, expected {what}")));
    let header = |l: &str, key: &str, ln: usize| -> Result<usize> {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 2 || t[0] != key {
            return Err(Error::parse(ln, format!("expected `{key} <count>`")));
        }
        parse_index(t[1], ln)
    };
    let (ln, l) = next("header")?;
    if header(l, "nmaps-mesh", ln)? != N {
        return Err(Error::parse(ln, format!("mesh does not have {N} vertices per cell")));
    }
    let (ln, l) = next("node count")?;
    let n = header(l, "nodes", ln)?;
    let mut mesh = Mesh::default();
    for _ in 0..n {
        let (ln, l) = next("node")?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != 5 {
            return Err(Error::parse(ln, "node needs `x y z tag gid`"));
        }
        let v = parse_floats::<T>(&t[..3], ln)?;
        mesh.nodes.push(Point3::new(v[0], v[1], v[2]));
        mesh.tags.push(tag_of(t[3], ln)?);
        mesh.global_ids.push(if t[4] == "-" {
            None
        } else {
            Some(t[4].parse::<u64>().map_err(|_| Error::parse(ln, "bad global id"))?)
        });
    }
    let (ln, l) = next("cell count")?;
    let m = header(l, "cells", ln)?;
    for _ in 0..m {
        let (ln, l) = next("cell")?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() != N {
            return Err(Error::parse(ln, format!("cell needs {N} indices")));
        }
        let mut c = [0u32; N];
        for (k, tok) in t.iter().enumerate() {
            let v = parse_index(tok, ln)?;
            if v >= n {
                return Err(Error::parse(ln, format!("node index {v} out of range")));
            }
            c[k] = v as u32;
        }
        mesh.cells.push(c);
    }
    if let Some((ln, _)) = it.next() {
        return Err(Error::parse(ln, "trailing content after cells"));
    }
    Ok(mesh)
}

pub fn write_mesh<T: Real, const N: usize>(mesh: &Mesh<Point3<T>, N>, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_mesh(mesh)).map_err(|e| Error::io(path, e))
}

pub fn read_mesh<T: Real, const N: usize>(path: &Path) -> Result<Mesh<Point3<T>, N>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text)
}

/// Legacy ASCII VTK unstructured grid with per-cell `max_edge_length` and
/// per-node `tag` arrays.
pub fn vtk_string<T: Real, const N: usize>(mesh: &Mesh<Point3<T>, N>) -> Result<String> {
    let cell_type = match N {
        3 => 5,
        4 => 10,
        _ => return Err(Error::Unsupported(format!("no VTK cell type for {N}-vertex cells"))),
    };
    let mut s = String::from("# vtk DataFile Version 3.0\nnmaps mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} {}", fmt_f(p.x.as_f64()), fmt_f(p.y.as_f64()), fmt_f(p.z.as_f64()));
    }
    let _ = writeln!(s, "CELLS {} {}", mesh.cells.len(), mesh.cells.len() * (N + 1));
    for c in &mesh.cells {
        let row: Vec<String> = c.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{N} {}", row.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.cells.len());
    for _ in &mesh.cells {
        let _ = writeln!(s, "{cell_type}");
    }
    let _ = writeln!(s, "CELL_DATA {}\nSCALARS max_edge_length double 1\nLOOKUP_TABLE default", mesh.cells.len());
    for c in 0..mesh.cells.len() {
        let _ = writeln!(s, "{}", fmt_f(mesh.max_edge_length::<T>(c).as_f64()));
    }
    let _ = writeln!(s, "POINT_DATA {}\nSCALARS tag int 1\nLOOKUP_TABLE default", mesh.nodes.len());
    for t in &mesh.tags {
        let _ = writeln!(s, "{}", t.code());
    }
    Ok(s)
}

pub fn write_vtk<T: Real, const N: usize>(mesh: &Mesh<Point3<T>, N>, path: &Path) -> Result<()> {
    let s = vtk_string(mesh)?;
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crossing_squares() -> String {
        "# two unit squares through each other's centres\n\
         fracture 0 4\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n\
         fracture 1 4\n0.5 0.5 -0.5\n0.5 0.5 0.5\n0.5 -0.5 0.5\n0.5 -0.5 -0.5\n"
            .to_string()
    }

    #[test]
    fn parse_and_intersect() {
        let d: Dfn<f64> = parse_dfn(&crossing_squares()).unwrap();
        assert_eq!(d.fractures.len(), 2);
        assert_eq!(d.intersections.len(), 1);
        let s = &d.intersections[0].segment;
        let (lo, hi) = if s.a.y < s.b.y { (s.a, s.b) } else { (s.b, s.a) };
        assert!(lo.dist(&Point3::new(0.5, 0.0, 0.0)) < 1e-12);
        assert!(hi.dist(&Point3::new(0.5, 0.5, 0.0)) < 1e-12);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_dfn::<f64>("").unwrap().fractures.is_empty());
        assert!(matches!(parse_dfn::<f64>("fracture 0 2\n0 0 0\n1 0 0\n"), Err(Error::InvalidPolygon(_))));
        match parse_dfn::<f64>("fracture 0 3\n0 0 0\n1 x 0\n0 1 0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_dfn::<f64>("bogus 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_dfn::<f64>("fracture 0 4\n0 0 0\n1 0 0\n1 1 0.5\n0 1 0\n"),
            Err(Error::NonPlanar { .. })
        ));
    }

    #[test]
    fn canonical_round_trip() {
        for name in ["four-discs", "seven-rects", "exp-25(3)"] {
            let d = generate_test_dfn(name).unwrap();
            let text = serialize_dfn(&d);
            let back: Dfn<f64> = parse_dfn(&text).unwrap();
            assert_eq!(back, d, "{name}");
            assert_eq!(serialize_dfn(&back), text);
        }
    }

    #[test]
    fn parallel_and_coplanar() {
        let a = Polygon::new(square(Point3::new(0.0, 0.0, 0.0), 2, 1.0)).unwrap();
        let b = Polygon::new(square(Point3::new(0.0, 0.0, 0.3), 2, 1.0)).unwrap();
        assert!(compute_intersections(&[a.clone(), b]).unwrap().is_empty());
        let c = Polygon::new(square(Point3::new(0.5, 0.0, 0.0), 2, 1.0)).unwrap();
        assert!(matches!(compute_intersections(&[a, c]), Err(Error::Unsupported(_))));
    }

    /// Membership oracle: dense points along the plane-plane line that lie in
    /// both closed polygons.
    #[test]
    fn random_pairs_match_rasterized_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        for _ in 0..60 {
            let mk = |rng: &mut ChaCha8Rng| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..6.28);
                let s = (1.0 - z * z).sqrt();
                let n = Point3::new(s * phi.cos(), s * phi.sin(), z);
                let u = n.cross(if n.x.abs() < 0.9 { axis(0) } else { axis(1) }).normalized();
                let v = n.cross(u);
                let c = Point3::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
                Polygon::new(regular_polygon(c, u, v, rng.gen_range(0.5..1.0), rng.gen_range(3..9))).unwrap()
            };
            let (a, b) = (mk(&mut rng), mk(&mut rng));
            let xs = compute_intersections(&[a.clone(), b.clone()]).unwrap();
            let d = a.frame.normal.cross(b.frame.normal).normalized();
            let (h1, h2) = (a.frame.normal.dot(&a.frame.origin), b.frame.normal.dot(&b.frame.origin));
            let nn = a.frame.normal.cross(b.frame.normal);
            let p0 = (b.frame.normal.cross(nn) * h1 + nn.cross(a.frame.normal) * h2) * (1.0 / nn.norm2());
            let inside = |p: &Point3<f64>| {
                point_in_polygon(&a.frame.to_2d(p), a.local()) && point_in_polygon(&b.frame.to_2d(p), b.local())
            };
            let mut raster = 0.0;
            let step = 1e-3;
            let mut t = -4.0;
            while t < 4.0 {
                if inside(&(p0 + d * t)) {
                    raster += step;
                }
                t += step;
            }
            let total: f64 = xs.iter().map(|x| x.segment.length::<f64>()).sum();
            assert!((total - raster).abs() < 5e-3, "{total} vs {raster}");
            for x in &xs {
                for p in [x.segment.a, x.segment.b] {
                    assert!(a.frame.height(&p).abs() < 1e-9 && b.frame.height(&p).abs() < 1e-9);
                }
                assert!(inside(&x.segment.at(0.5)));
            }
            checked += xs.len();
        }
        assert!(checked > 10);
    }

    #[test]
    fn fixtures() {
        let f = generate_test_dfn("four-discs").unwrap();
        assert_eq!(f.fractures.len(), 4);
        assert!(f.fractures.iter().all(|p| p.vertices.len() == 32));
        assert_eq!(f.intersections.len(), 3);
        check_separation(&f, 0.05).unwrap();
        let s = generate_test_dfn("seven-rects").unwrap();
        assert_eq!(s.fractures.len(), 7);
        assert!(s.intersections.len() >= 6);
        assert_eq!(generate_test_dfn("exp-25").unwrap().fractures.len(), 25);
        assert_eq!(generate_test_dfn("exp-25(0)").unwrap(), generate_test_dfn("exp-25").unwrap());
        assert!(generate_test_dfn("nope").is_err());
    }

    #[test]
    fn mesh_round_trip_and_vtk() {
        let m = Mesh::<Point3<f64>, 4> {
            nodes: vec![
                Point3::new(0.1, 0.2, 0.3),
                Point3::new(1.0 / 3.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, std::f64::consts::PI),
            ],
            tags: vec![NodeTag::Interior, NodeTag::Boundary, NodeTag::Intersection, NodeTag::Fracture],
            global_ids: vec![None, Some(7), Some(u64::MAX - 1), None],
            cells: vec![[0, 1, 2, 3]],
        };
        let back: Mesh<Point3<f64>, 4> = parse_mesh(&serialize_mesh(&m)).unwrap();
        assert_eq!(back, m);
        assert!(parse_mesh::<f64, 3>(&serialize_mesh(&m)).is_err());
        let v = vtk_string(&m).unwrap();
        assert!(v.contains("CELL_TYPES 1\n10\n"));
        assert!(v.contains("SCALARS max_edge_length double 1"));
        assert!(v.contains("POINT_DATA 4\nSCALARS tag int 1\nLOOKUP_TABLE default\n0\n1\n2\n3\n"));

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.mesh");
        write_mesh(&m, &p).unwrap();
        assert_eq!(read_mesh::<f64, 4>(&p).unwrap(), m);
        assert!(matches!(read_mesh::<f64, 4>(&dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
