//! One-dimensional sampling of polylines used as seeds: consecutive points
//! `x, y` are spaced by `s` with `r(x,y) <= s < sqrt(2) r(x,y) / (1 + L)`.

use crate::geometry::{vector_angle, Coords};
use crate::{Error, Real, Result};

/// Preferred step in units of the local radius.
pub const TARGET_STEP: f64 = 1.1;

/// Vertices turning by at least this angle (degrees) are kept as seeds.
pub const CORNER_TURN_DEG: f64 = 20.0;

/// Upper gap bound `sqrt(2) r / (1 + L)`.
#[inline]
pub fn max_gap<T: Real>(r: T, l: T) -> T {
    T::SQRT_2() * r / (T::one() + l)
}

/// Whether every consecutive gap of `pts` satisfies the spacing window.
pub fn gaps_ok<T: Real, P: Coords<T>>(pts: &[P], rho_of: &impl Fn(&P) -> T, l: T) -> bool {
    pts.windows(2).all(|w| {
        let g = w[0].dist(&w[1]);
        let r = rho_of(&w[0]).min(rho_of(&w[1]));
        g >= r && g < max_gap(r, l)
    })
}

/// Arc-length parametrized open polyline.
struct Path<'a, P> {
    v: &'a [P],
    cum: Vec<f64>,
}

impl<'a, P> Path<'a, P> {
    fn new<T: Real>(v: &'a [P]) -> Self
    where
        P: Coords<T>,
    {
        let mut cum = vec![0.0];
        for w in v.windows(2) {
            let last = *cum.last().unwrap();
            cum.push(last + w[0].dist(&w[1]).as_f64());
        }
        Path { v, cum }
    }

    fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn at<T: Real>(&self, t: f64) -> P
    where
        P: Coords<T>,
    {
        let n = self.v.len();
        if t >= self.length() {
            return self.v[n - 1];
        }
        let seg = self.cum.partition_point(|&c| c <= t).clamp(1, n - 1) - 1;
        let len = self.cum[seg + 1] - self.cum[seg];
        let f = if len > 0.0 { (t - self.cum[seg]) / len } else { 0.0 };
        self.v[seg] + (self.v[seg + 1] - self.v[seg]) * T::lit(f)
    }
}

/// Samples an open polyline from its first to its last vertex. Interior
/// vertices are walked through. Both endpoints are included.
pub fn march<T: Real, P: Coords<T>>(vertices: &[P], rho_of: &impl Fn(&P) -> T, l: T) -> Result<Vec<P>> {
    if vertices.len() < 2 {
        return Err(Error::Degenerate("polyline needs two vertices"));
    }
    let path = Path::new(vertices);
    let len = path.length();
    let first = vertices[0];
    let last = vertices[vertices.len() - 1];
    let r_end = rho_of(&first).min(rho_of(&last)).as_f64();
    if !(len > 0.0) {
        return Err(Error::Degenerate("polyline of zero length"));
    }

    // Next arc position whose chord to `t` is `beta` times the smaller of the
    // two radii. Past the end the remaining chord is extrapolated linearly.
    let next = |t: f64, beta: f64| -> f64 {
        let p = path.at::<T>(t);
        let rp = rho_of(&p).as_f64();
        let gap = |u: f64| {
            let q = path.at::<T>(u);
            p.dist(&q).as_f64() - beta * rp.min(rho_of(&q).as_f64())
        };
        // Scan forward to the first crossing, then bisect it.
        let stride = 0.25 * beta * rp;
        let mut lo = t;
        let hi = loop {
            let u = (lo + stride).min(len);
            let g = gap(u);
            if g >= 0.0 {
                break u;
            }
            if u >= len {
                return len - g;
            }
            lo = u;
        };
        let mut hi = hi;
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let walk = |beta: f64, m: usize| -> Vec<f64> {
        let mut ts = Vec::with_capacity(m + 1);
        let mut t = 0.0f64;
        ts.push(t);
        for _ in 0..m {
            t = if t < len { next(t, beta) } else { t + beta * r_end };
            ts.push(t);
        }
        ts
    };
    let steps_at_target = {
        let mut t = 0.0f64;
        let mut m = 0usize;
        while t < len && m < 10_000_000 {
            t = next(t, TARGET_STEP);
            m += 1;
        }
        m.max(1)
    };
    // Step factor that lands exactly on the end after `m` steps.
    let solve = |m: usize| -> f64 {
        let (mut lo, mut hi) = (1e-3f64, 1e3f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if *walk(mid, m).last().unwrap() < len {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo < 1.0 + 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    };

    let mut tried: Vec<(f64, usize)> = Vec::new();
    let lo_m = steps_at_target.saturating_sub(3).max(1);
    for m in lo_m..=steps_at_target + 3 {
        let beta = solve(m);
        tried.push(((beta - TARGET_STEP).abs(), m));
    }
    tried.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for &(_, m) in &tried {
        let beta = solve(m);
        let ts = walk(beta, m);
        let mut pts: Vec<P> = ts[..m].iter().map(|&t| path.at::<T>(t)).collect();
        pts.push(last);
        if gaps_ok(&pts, rho_of, l) {
            return Ok(pts);
        }
    }
    if len < r_end {
        return Err(Error::MinimumFeature(format!(
            "polyline piece of length {len:.6e} is shorter than the local radius {r_end:.6e}"
        )));
    }
    Err(Error::MinimumFeature(format!(
        "no spacing of a polyline piece of length {len:.6e} satisfies the seed gap bounds"
    )))
}

/// Turning angle at vertex `i` of a closed loop, in degrees.
fn turn_deg<T: Real, P: Coords<T>>(v: &[P], i: usize) -> f64 {
    let n = v.len();
    let a = v[(i + n - 1) % n];
    let b = v[i];
    let c = v[(i + 1) % n];
    vector_angle(b - a, c - b).as_f64().to_degrees()
}

/// Samples a closed polygon boundary. Sharp vertices and `forced` points
/// (which must lie on the boundary) are always included; smooth vertices are
/// walked through. Returns points in boundary order starting at a forced point.
pub fn seed_loop<T: Real, P: Coords<T>>(
    vertices: &[P],
    forced: &[P],
    rho_of: &impl Fn(&P) -> T,
    l: T,
) -> Result<Vec<P>> {
    seed_loop_clear(vertices, forced, rho_of, l, &|_: &P| true)
}

/// Like [`seed_loop`], but a run between two kept points whose march puts a
/// seed where `clear` fails is marched again between the first clear
/// positions found from either end. Points still failing `clear` are left
/// to the caller.
pub fn seed_loop_clear<T: Real, P: Coords<T>>(
    vertices: &[P],
    forced: &[P],
    rho_of: &impl Fn(&P) -> T,
    l: T,
    clear: &impl Fn(&P) -> bool,
) -> Result<Vec<P>> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::Degenerate("loop needs three vertices"));
    }
    let scale = vertices.iter().map(|p| p.dist(&vertices[0])).fold(T::zero(), T::max);
    let tol = scale * T::lit(1e-9);

    // Expanded loop: vertices plus forced points inserted on their edges.
    let mut pts: Vec<(P, bool)> = Vec::new();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        pts.push((a, turn_deg(vertices, i) >= CORNER_TURN_DEG));
        let d = b - a;
        let len2 = d.norm2();
        let mut on: Vec<(T, P)> = forced
            .iter()
            .filter_map(|f| {
                let t = (*f - a).dot(&d) / len2;
                let foot = a + d * t;
                (foot.dist(f) <= tol && t > T::zero() && t < T::one()).then_some((t, *f))
            })
            .collect();
        on.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        for (_, f) in on {
            if pts.last().is_some_and(|(q, _)| q.dist(&f) <= tol) {
                pts.last_mut().unwrap().1 = true;
            } else if b.dist(&f) > tol {
                pts.push((f, true));
            }
        }
    }
    for f in forced {
        if let Some(q) = pts.iter_mut().find(|(q, _)| q.dist(f) <= tol) {
            q.1 = true;
        } else {
            return Err(Error::InvalidParameter(format!("forced seed {f:?} is not on the boundary")));
        }
    }
    if !pts.iter().any(|p| p.1) {
        pts[0].1 = true;
    }
    let start = pts.iter().position(|p| p.1).unwrap();
    pts.rotate_left(start);
    let m = pts.len();

    let mut out: Vec<P> = Vec::new();
    let mut i = 0;
    while i < m {
        let mut run = vec![pts[i].0];
        let mut j = i + 1;
        loop {
            let (p, f) = pts[j % m];
            run.push(p);
            if f {
                break;
            }
            j += 1;
        }
        let mut seg = march(&run, rho_of, l)?;
        if seg[1..seg.len() - 1].iter().any(|p| !clear(p)) {
            if let Some(s) = march_trimmed(&run, rho_of, l, clear)? {
                seg = s;
            }
        }
        out.extend_from_slice(&seg[..seg.len() - 1]);
        i = j;
    }
    Ok(out)
}

/// Marches `run` between the first positions, seen from either end, that
/// keep a radius from that end and satisfy `clear`. Both original end
/// points are kept. `None` when no such position exists.
fn march_trimmed<T: Real, P: Coords<T>>(
    run: &[P],
    rho_of: &impl Fn(&P) -> T,
    l: T,
    clear: &impl Fn(&P) -> bool,
) -> Result<Option<Vec<P>>> {
    let path = Path::new(run);
    let len = path.length();
    let step = run.iter().map(|p| rho_of(p).as_f64()).fold(f64::INFINITY, f64::min) / 64.0;
    if !(step > 0.0) {
        return Ok(None);
    }
    let steps = (len / step).ceil() as usize;
    let first = run[0];
    let last = run[run.len() - 1];
    // First position at least a radius away from the end point that is clear.
    let first_clear = |from_end: bool| {
        let end = if from_end { last } else { first };
        (1..=steps).map(|i| (i as f64 * step).min(len)).find(|&t| {
            let p = path.at::<T>(if from_end { len - t } else { t });
            p.dist(&end) >= rho_of(&p).min(rho_of(&end)) && clear(&p)
        })
    };
    let (Some(ts), Some(te)) = (first_clear(false), first_clear(true)) else {
        return Ok(None);
    };
    let (a, b) = (ts, len - te);
    let mut out = vec![first];
    if b - a >= rho_of(&path.at::<T>(a)).min(rho_of(&path.at::<T>(b))).as_f64() {
        let sub = sub_path(&path, a, b);
        let pts = march(&sub, rho_of, l)?;
        out.extend(pts.into_iter().filter(|p| p.dist(&first) > T::zero() && p.dist(&last) > T::zero()));
    } else if b >= a {
        let mid = path.at::<T>(0.5 * (a + b));
        if clear(&mid) {
            out.push(mid);
        }
    }
    out.push(last);
    Ok(Some(out))
}

/// Vertices of the piece of `path` between arc lengths `a <= b`.
fn sub_path<T: Real, P: Coords<T>>(path: &Path<'_, P>, a: f64, b: f64) -> Vec<P> {
    let mut v = vec![path.at::<T>(a)];
    for (i, &c) in path.cum.iter().enumerate() {
        if c > a && c < b {
            v.push(path.v[i]);
        }
    }
    v.push(path.at::<T>(b));
    v
}
