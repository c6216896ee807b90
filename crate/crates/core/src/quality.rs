//! Element quality: angle and aspect-ratio statistics, histograms, sliver
//! classification and the sampling-quality bounds.

use std::fmt::Write as _;

use crate::geometry::{
    aspect_ratio_tet, aspect_ratio_tri, circumcircle2, dihedral_angles, triangle_angles, Coords, Point2, Point3,
};
use crate::mesh::Mesh;
use crate::{Error, Real, Result};

/// Bin width for angle histograms, degrees.
pub const ANGLE_BIN: f64 = 1.0;
/// Bin width for aspect-ratio histograms.
pub const ASPECT_BIN: f64 = 0.01;

/// Fixed-width histogram; bin `i` covers `[lo + i*width, lo + (i+1)*width)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, width: f64) -> Self {
        let nbins = (((hi - lo) / width).round() as usize).max(1);
        let mut counts = vec![0u64; nbins];
        for &v in values {
            let b = ((v - lo) / width).floor();
            let b = if b.is_finite() { (b.max(0.0) as usize).min(nbins - 1) } else { 0 };
            counts[b] += 1;
        }
        Histogram { lo, width, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bin_lower,count` rows under a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lower,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let lower = self.lo + i as f64 * self.width;
            let _ = writeln!(s, "{},{}", format_bin(lower), c);
        }
        s
    }
}

fn format_bin(x: f64) -> String {
    // Rounded to strip representation noise such as 0.30000000000000004.
    let r = (x * 1e9).round() / 1e9;
    format!("{r}")
}

/// Per-element quality values and their extrema. For triangles the angle
/// fields hold interior angles; for tetrahedra they hold dihedral angles.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QualityReport {
    pub count: usize,
    pub degenerate: usize,
    pub min_angles: Vec<f64>,
    pub max_angles: Vec<f64>,
    pub aspect: Vec<f64>,
    pub min_angle: f64,
    pub max_angle: f64,
    pub min_aspect: f64,
    /// Smallest angle bound compatible with the observed minimum angle, or
    /// `None` for tetrahedral reports.
    pub epsilon_estimate: Option<f64>,
    /// Bound for a perfectly maximal sampling at the given Lipschitz constant.
    pub theoretical_min_angle_deg: Option<f64>,
    /// Alternative reading of the same bound, `asin(1 / (2 (1 + L)))`.
    pub alternative_min_angle_deg: Option<f64>,
}

impl QualityReport {
    fn finish(mut self) -> Self {
        self.count = self.min_angles.len() + self.degenerate;
        self.min_angle = self.min_angles.iter().copied().fold(f64::INFINITY, f64::min);
        self.max_angle = self.max_angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.min_aspect = self.aspect.iter().copied().fold(f64::INFINITY, f64::min);
        self
    }

    /// Attaches the bound comparison for sizing slope `l`.
    pub fn with_bounds(mut self, l: f64) -> Self {
        if self.min_angle.is_finite() {
            self.epsilon_estimate = Some(estimate_epsilon(self.min_angle, l));
        }
        self.theoretical_min_angle_deg = theoretical_min_angle(l, 0.0).ok();
        self.alternative_min_angle_deg = Some((0.5 / (1.0 + l)).asin().to_degrees());
        self
    }

    pub fn fraction_min_at_least(&self, deg: f64) -> f64 {
        frac(&self.min_angles, |a| a >= deg)
    }

    pub fn fraction_max_at_most(&self, deg: f64) -> f64 {
        frac(&self.max_angles, |a| a <= deg)
    }

    pub fn min_angle_histogram(&self) -> Histogram {
        Histogram::new(&self.min_angles, 0.0, 180.0, ANGLE_BIN)
    }

    pub fn max_angle_histogram(&self) -> Histogram {
        Histogram::new(&self.max_angles, 0.0, 180.0, ANGLE_BIN)
    }

    pub fn aspect_histogram(&self) -> Histogram {
        Histogram::new(&self.aspect, 0.0, 1.0, ASPECT_BIN)
    }

    /// `metric,value` rows; absent bounds are left empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        let mut s = String::from("metric,value\n");
        let _ = writeln!(s, "elements,{}", self.count);
        let _ = writeln!(s, "degenerate,{}", self.degenerate);
        let _ = writeln!(s, "min_angle_deg,{}", self.min_angle);
        let _ = writeln!(s, "max_angle_deg,{}", self.max_angle);
        let _ = writeln!(s, "min_aspect,{}", self.min_aspect);
        let _ = writeln!(s, "epsilon_estimate,{}", opt(self.epsilon_estimate));
        let _ = writeln!(s, "theoretical_min_angle_deg,{}", opt(self.theoretical_min_angle_deg));
        let _ = writeln!(s, "alternative_min_angle_deg,{}", opt(self.alternative_min_angle_deg));
        s
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "elements {}  degenerate {}  min angle {:.3}  max angle {:.3}  min aspect {:.4}",
            self.count, self.degenerate, self.min_angle, self.max_angle, self.min_aspect
        );
        if let Some(e) = self.epsilon_estimate {
            let _ = write!(s, "  epsilon {e:.4}");
        }
        if let (Some(a), Some(b)) = (self.theoretical_min_angle_deg, self.alternative_min_angle_deg) {
            let _ = write!(s, "  bound {a:.2} (alt {b:.2})");
        }
        s
    }
}

fn frac(v: &[f64], f: impl Fn(f64) -> bool) -> f64 {
    if v.is_empty() {
        return 1.0;
    }
    v.iter().filter(|&&x| f(x)).count() as f64 / v.len() as f64
}

/// Angles and aspect ratios of every triangle. Degenerate triangles are
/// counted separately and excluded from the value lists.
pub fn report_tri<T: Real, P: Coords<T>>(mesh: &Mesh<P, 3>) -> QualityReport {
    let mut r = QualityReport::default();
    for c in 0..mesh.num_cells() {
        let [a, b, cc] = mesh.cell_points(c);
        match (triangle_angles(a, b, cc), aspect_ratio_tri(a, b, cc)) {
            (Ok((lo, hi)), Ok(ar)) => {
                r.min_angles.push(lo.as_f64());
                r.max_angles.push(hi.as_f64());
                r.aspect.push(ar.as_f64());
            }
            _ => r.degenerate += 1,
        }
    }
    r.finish()
}

/// Dihedral angles and aspect ratios of every tetrahedron.
pub fn report_tet<T: Real>(mesh: &Mesh<Point3<T>, 4>) -> QualityReport {
    let mut r = QualityReport::default();
    for c in 0..mesh.num_cells() {
        let p = mesh.cell_points(c);
        match (dihedral_angles(&p), aspect_ratio_tet(&p)) {
            (Ok(d), Ok(ar)) => {
                r.min_angles.push(d.iter().map(|x| x.as_f64()).fold(f64::INFINITY, f64::min));
                r.max_angles.push(d.iter().map(|x| x.as_f64()).fold(f64::NEG_INFINITY, f64::max));
                r.aspect.push(ar.as_f64());
            }
            _ => r.degenerate += 1,
        }
    }
    r.finish()
}

/// Lower bound on every angle, in degrees, for a sampling whose coverage
/// radius is at most `(1 + eps)` times its inhibition radius.
pub fn theoretical_min_angle(l: f64, eps: f64) -> Result<f64> {
    if !(l >= 0.0 && eps >= 0.0 && l * eps < 1.0) {
        return Err(Error::InvalidParameter(format!("need L >= 0, eps >= 0 and L*eps < 1 (L={l}, eps={eps})")));
    }
    let s = (1.0 - l - eps * l) / (2.0 + 2.0 * eps);
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!("angle bound argument {s} outside (0, 1]")));
    }
    Ok(s.asin().to_degrees())
}

/// Inverse of [`theoretical_min_angle`] in `eps`. Negative values mean the
/// observed angle beats the bound of a perfectly maximal sampling.
pub fn estimate_epsilon(min_angle_deg: f64, l: f64) -> f64 {
    let s = min_angle_deg.to_radians().sin();
    (1.0 - l - 2.0 * s) / (2.0 * s + l)
}

/// Thresholds below or above which a tetrahedron counts as a sliver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliverPolicy {
    pub min_dihedral: f64,
    pub max_dihedral: f64,
    pub min_aspect: f64,
    pub max_iterations: usize,
}

impl Default for SliverPolicy {
    fn default() -> Self {
        SliverPolicy { min_dihedral: 8.0, max_dihedral: 170.0, min_aspect: 0.2, max_iterations: 50 }
    }
}

impl SliverPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.min_dihedral
            && self.min_dihedral < self.max_dihedral
            && self.max_dihedral < 180.0
            && 0.0 < self.min_aspect
            && self.min_aspect < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("inconsistent sliver thresholds {self:?}")))
        }
    }
}

/// Degenerate tetrahedra are slivers.
pub fn classify_sliver<T: Real>(p: &[Point3<T>; 4], policy: &SliverPolicy) -> bool {
    let (Ok(d), Ok(ar)) = (dihedral_angles(p), aspect_ratio_tet(p)) else {
        return true;
    };
    let lo = d.iter().map(|x| x.as_f64()).fold(f64::INFINITY, f64::min);
    let hi = d.iter().map(|x| x.as_f64()).fold(f64::NEG_INFINITY, f64::max);
    lo < policy.min_dihedral || hi > policy.max_dihedral || ar.as_f64() < policy.min_aspect
}

/// Triangles violating `sin(min angle) >= shortest edge / (2 circumradius)`,
/// up to relative tolerance `tol`.
pub fn central_angle_violations<T: Real>(mesh: &Mesh<Point2<T>, 3>, tol: f64) -> Vec<usize> {
    let mut bad = Vec::new();
    for c in 0..mesh.num_cells() {
        let [a, b, cc] = mesh.cell_points(c);
        let (Ok((lo, _)), Ok((_, r))) = (triangle_angles(a, b, cc), circumcircle2(a, b, cc)) else {
            continue;
        };
        let shortest = a.dist(&b).min(b.dist(&cc)).min(cc.dist(&a)).as_f64();
        let lhs = lo.as_f64().to_radians().sin();
        if lhs < shortest / (2.0 * r.as_f64()) * (1.0 - tol) {
            bad.push(c);
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::NodeTag;
    use proptest::prelude::*;

    fn tri_mesh(pts: Vec<Point2<f64>>, cells: Vec<[u32; 3]>) -> Mesh<Point2<f64>, 3> {
        let n = pts.len();
        Mesh { nodes: pts, tags: vec![NodeTag::Interior; n], global_ids: vec![None; n], cells }
    }

    fn regular_tet() -> [Point3<f64>; 4] {
        [
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(1.0, -1.0, -1.0),
            Point3::new(-1.0, 1.0, -1.0),
            Point3::new(-1.0, -1.0, 1.0),
        ]
    }

    #[test]
    fn equilateral_report() {
        let m = tri_mesh(
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, 3f64.sqrt() / 2.0)],
            vec![[0, 1, 2]],
        );
        let r = report_tri(&m);
        assert_eq!(r.count, 1);
        assert!((r.min_angle - 60.0).abs() < 1e-9 && (r.max_angle - 60.0).abs() < 1e-9);
        assert!((r.min_aspect - 1.0).abs() < 1e-12);
        assert_eq!(r.min_angle_histogram().total(), 1);
        assert_eq!(r.aspect_histogram().counts[99], 1);

        let csv = r.clone().with_bounds(0.1).to_csv();
        assert!(csv.starts_with("metric,value\nelements,1\n"));
        assert!(csv.contains("\nepsilon_estimate,-"));
        assert!(r.to_csv().contains("\ntheoretical_min_angle_deg,\n"));
    }

    #[test]
    fn regular_tet_report() {
        let p = regular_tet();
        let m = Mesh { nodes: p.to_vec(), tags: vec![NodeTag::Interior; 4], global_ids: vec![None; 4], cells: vec![[0, 1, 2, 3]] };
        let r = report_tet(&m);
        let ideal = (1.0f64 / 3.0).acos().to_degrees();
        assert!((r.min_angle - ideal).abs() < 1e-9 && (r.max_angle - ideal).abs() < 1e-9);
        assert!((r.min_aspect - 1.0).abs() < 1e-9);
        assert!(!classify_sliver(&p, &SliverPolicy::default()));
    }

    #[test]
    fn bound_values() {
        assert!((theoretical_min_angle(0.1, 0.0).unwrap() - 0.45f64.asin().to_degrees()).abs() < 1e-12);
        assert!((theoretical_min_angle(0.1, 0.0).unwrap() - 26.744).abs() < 1e-3);
        assert!((theoretical_min_angle(0.0, 0.0).unwrap() - 30.0).abs() < 1e-12);
        assert!(theoretical_min_angle(0.5, 1.0).is_err());
        let r = QualityReport::default().with_bounds(0.1);
        assert!((r.alternative_min_angle_deg.unwrap() - 27.036).abs() < 1e-3);
    }

    #[test]
    fn epsilon_values() {
        let e = estimate_epsilon(25.0, 0.1);
        let s = 25f64.to_radians().sin();
        assert!((e - (0.9 - 2.0 * s) / (2.0 * s + 0.1)).abs() < 1e-15);
        assert!((e - 0.058).abs() < 1e-3);
        assert!(estimate_epsilon(0.45f64.asin().to_degrees(), 0.1).abs() < 1e-12);
        assert!(estimate_epsilon(29.0, 0.1) < 0.0);
    }

    #[test]
    fn sliver_cases() {
        let pol = SliverPolicy::default();
        let flat = [
            Point3::new(1.0, 0.0, 0.01),
            Point3::new(0.0, 1.0, -0.01),
            Point3::new(-1.0, 0.0, 0.01),
            Point3::new(0.0, -1.0, -0.01),
        ];
        assert!(classify_sliver(&flat, &pol));
        let coplanar = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(1.0, 1.0, 0.0)];
        assert!(classify_sliver(&coplanar, &pol));
        // Threshold evaluation on prescribed values, independent of geometry.
        let passes = |lo: f64, hi: f64, ar: f64| !(lo < pol.min_dihedral || hi > pol.max_dihedral || ar < pol.min_aspect);
        assert!(passes(9.0, 168.0, 0.25));
    }

    #[test]
    fn histogram_csv() {
        let h = Histogram::new(&[0.005, 0.015, 0.999, 1.0], 0.0, 1.0, ASPECT_BIN);
        assert_eq!(h.counts.len(), 100);
        assert_eq!(h.total(), 4);
        let csv = h.to_csv();
        assert!(csv.starts_with("bin_lower,count\n0,1\n0.01,1\n"));
        assert!(csv.trim_end().ends_with("0.99,2"));
    }

    #[test]
    fn central_angle_bound_holds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        use rand::{Rng, SeedableRng};
        let pts: Vec<Point2<f64>> = (0..300).map(|_| Point2::new(rng.gen(), rng.gen())).collect();
        let t = crate::delaunay::delaunay2(&pts).unwrap();
        let m = tri_mesh(pts, t.cells);
        assert!(central_angle_violations(&m, 1e-12).is_empty());
    }

    proptest! {
        #[test]
        fn epsilon_inverts_bound(l in 0.0f64..0.5, eps in 0.0f64..0.8) {
            let a = theoretical_min_angle(l, eps).unwrap();
            prop_assert!((estimate_epsilon(a, l) - eps).abs() < 1e-9);
            prop_assert!((theoretical_min_angle(l, estimate_epsilon(a, l)).unwrap() - a).abs() < 1e-9);
        }
    }
}
