//! Timing harness: runs the sampler on a fixed workload, records phase times
//! and fits power laws to the results.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::delaunay::delaunay2;
use crate::engine::SamplerConfig;
use crate::geometry::{Point2, Segment};
use crate::sampler2d::{fracture_seeds, sample_fracture};
use crate::sizing::{FeatureSet2, Sizing2, SizingField, SizingParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Direct,
    Baseline,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Direct => "direct-rejection",
            Mode::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "direct" | "direct-rejection" => Ok(Mode::Direct),
            "baseline" => Ok(Mode::Baseline),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Sampling,
    Resampling,
    Triangulation,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Sampling => "sampling",
            Phase::Resampling => "resampling",
            Phase::Triangulation => "triangulation",
        }
    }
}

/// One timed phase of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub label: String,
    pub n_points: usize,
    pub k: usize,
    pub sweeps: usize,
    pub wall_time_s: f64,
    pub mode: Mode,
    pub phase: Phase,
}

pub const CSV_HEADER: &str = "label,n_points,k,sweeps,wall_time_s,mode,phase";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.9},{},{}",
            self.label,
            self.n_points,
            self.k,
            self.sweeps,
            self.wall_time_s,
            self.mode.name(),
            self.phase.name()
        )
    }
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Paper-style field parameters: A = 0.1, R = 40, F = 1.
pub const BENCH_A: f64 = 0.1;
pub const BENCH_R: f64 = 40.0;
pub const BENCH_F: f64 = 1.0;

/// A square fracture of side `side` crossed by three traces, sampled with
/// the variable field at resolution `h`. Point counts are changed through
/// `h` while the geometry stays fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Workload {
    pub side: f64,
    pub h: f64,
}

// Trace end points as fractions of the side.
const TRACES: [[f64; 4]; 3] = [
    [0.15, 0.30, 0.85, 0.38],
    [0.52, 0.08, 0.44, 0.90],
    [0.10, 0.78, 0.62, 0.66],
];

// One point per this many rho^2 at constant radius (measured).
const AREA_PER_POINT: f64 = 1.68;

impl Workload {
    /// Resolution `h` giving roughly `n` points on a square of side `side`.
    pub fn for_points(n: usize, side: f64) -> Self {
        let (mut lo, mut hi) = (side * 1e-7, side);
        for _ in 0..80 {
            let mid = (lo * hi).sqrt();
            if (Workload { side, h: mid }).estimated_points() > n as f64 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Workload { side, h: (lo * hi).sqrt() }
    }

    /// Midpoint-rule integral of the point density over the square.
    pub fn estimated_points(&self) -> f64 {
        let Ok(sizing) = self.sizing() else { return 0.0 };
        const M: usize = 200;
        let d = self.side / M as f64;
        let mut sum = 0.0;
        for i in 0..M {
            for j in 0..M {
                let x = Point2::new((i as f64 + 0.5) * d, (j as f64 + 0.5) * d);
                let r = sizing.rho(&x);
                sum += 1.0 / (AREA_PER_POINT * r * r);
            }
        }
        sum * d * d
    }

    pub fn polygon(&self) -> Vec<Point2<f64>> {
        let s = self.side;
        vec![Point2::new(0.0, 0.0), Point2::new(s, 0.0), Point2::new(s, s), Point2::new(0.0, s)]
    }

    pub fn sizing(&self) -> Result<Sizing2<f64>> {
        let params = SizingParams::new(self.h, BENCH_A, BENCH_R, BENCH_F)?;
        let s = self.side;
        let segments = TRACES
            .iter()
            .map(|t| Segment { a: Point2::new(t[0] * s, t[1] * s), b: Point2::new(t[2] * s, t[3] * s) })
            .collect();
        Ok(Sizing2 { params, features: FeatureSet2::new(segments) })
    }
}

/// Times one run. Returns the sampling, resampling and (optionally)
/// triangulation records and the number of points.
pub fn run_case(label: &str, w: &Workload, cfg: &SamplerConfig, triangulate: bool) -> Result<(Vec<BenchRecord>, usize)> {
    let poly = w.polygon();
    let sizing = w.sizing()?;
    let seeds = fracture_seeds(&poly, &sizing, &[])?;
    let (set, stats) = sample_fracture(&poly, &sizing, cfg, &seeds)?;
    let mode = if cfg.direct_rejection { Mode::Direct } else { Mode::Baseline };
    let rec = |phase, t: f64| BenchRecord {
        label: label.to_string(),
        n_points: set.len(),
        k: cfg.k,
        sweeps: cfg.resample_sweeps,
        wall_time_s: t,
        mode,
        phase,
    };
    let mut out = vec![
        rec(Phase::Sampling, stats.sampling_time.as_secs_f64()),
        rec(Phase::Resampling, stats.resampling_time.as_secs_f64()),
    ];
    if triangulate {
        let t0 = Instant::now();
        delaunay2(&set.points)?;
        out.push(rec(Phase::Triangulation, t0.elapsed().as_secs_f64()));
    }
    Ok((out, set.len()))
}

/// What to run: every combination of point target, k and mode, `reps` times.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchPlan {
    pub n_targets: Vec<usize>,
    pub k_values: Vec<usize>,
    pub modes: Vec<Mode>,
    pub sweeps: usize,
    pub reps: usize,
    pub side: f64,
    pub seed: u64,
    pub triangulate: bool,
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            n_targets: vec![10_000, 100_000],
            k_values: vec![30],
            modes: vec![Mode::Direct],
            sweeps: 0,
            reps: 1,
            side: 10.0,
            seed: 0,
            triangulate: false,
        }
    }
}

impl BenchPlan {
    /// Reads `key = value` lines; lists are comma separated and `#` starts a
    /// comment. Keys: n, k, modes, sweeps, reps, side, seed, triangulate.
    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = BenchPlan::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(no + 1, m);
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let value = value.trim();
            let list = |v: &str| -> Result<Vec<usize>> {
                v.split(',').map(|x| x.trim().parse::<usize>().map_err(|e| err(format!("{x:?}: {e}")))).collect()
            };
            match key.trim() {
                "n" => plan.n_targets = list(value)?,
                "k" => plan.k_values = list(value)?,
                "modes" => plan.modes = value.split(',').map(|m| m.parse().map_err(|e: Error| err(e.to_string()))).collect::<Result<_>>()?,
                "sweeps" => plan.sweeps = value.parse().map_err(|e| err(format!("sweeps: {e}")))?,
                "reps" => plan.reps = value.parse().map_err(|e| err(format!("reps: {e}")))?,
                "side" => plan.side = value.parse().map_err(|e| err(format!("side: {e}")))?,
                "seed" => plan.seed = value.parse().map_err(|e| err(format!("seed: {e}")))?,
                "triangulate" => plan.triangulate = value.parse().map_err(|e| err(format!("triangulate: {e}")))?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_targets.is_empty() || self.k_values.is_empty() || self.modes.is_empty() || self.reps == 0 {
            return Err(Error::InvalidParameter("benchmark plan needs n, k, modes and reps > 0".into()));
        }
        if self.n_targets.contains(&0) || self.k_values.contains(&0) {
            return Err(Error::InvalidParameter("n and k must be positive".into()));
        }
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(Error::InvalidParameter("side must be positive".into()));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Vec<BenchRecord>> {
        self.validate()?;
        let mut out = Vec::new();
        for &n in &self.n_targets {
            let w = Workload::for_points(n, self.side);
            for &k in &self.k_values {
                for &mode in &self.modes {
                    for rep in 0..self.reps {
                        let cfg = SamplerConfig {
                            k,
                            resample_sweeps: self.sweeps,
                            rng_seed: self.seed.wrapping_add(rep as u64),
                            direct_rejection: mode == Mode::Direct,
                        };
                        let label = format!("n{n}-k{k}-{}-r{rep}", mode.name());
                        out.extend(run_case(&label, &w, &cfg, self.triangulate)?.0);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Ordinary least squares fit `log10 y = slope * log10 x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
    pub points: usize,
}

pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<Fit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("a fit needs at least two paired values".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all x values are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if lx.len() > 2 {
        let sse: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Fit { slope, intercept, slope_se, points: lx.len() })
}

/// Slopes of sampling time against point count, one per (k, mode).
pub fn time_vs_n(records: &[BenchRecord]) -> Vec<(usize, Mode, Fit)> {
    let mut out = Vec::new();
    for (k, mode) in groups(records, |r| (r.k, r.mode)) {
        let (x, y): (Vec<f64>, Vec<f64>) = records
            .iter()
            .filter(|r| r.k == k && r.mode == mode && r.phase == Phase::Sampling)
            .map(|r| (r.n_points as f64, r.wall_time_s))
            .unzip();
        if let Ok(f) = fit_loglog(&x, &y) {
            out.push((k, mode, f));
        }
    }
    out
}

/// Slopes of per-point sampling time against k, one per mode.
pub fn per_node_time_vs_k(records: &[BenchRecord]) -> Vec<(Mode, Fit)> {
    let mut out = Vec::new();
    for mode in groups(records, |r| r.mode) {
        let (x, y): (Vec<f64>, Vec<f64>) = records
            .iter()
            .filter(|r| r.mode == mode && r.phase == Phase::Sampling)
            .map(|r| (r.k as f64, r.wall_time_s / r.n_points as f64))
            .unzip();
        if let Ok(f) = fit_loglog(&x, &y) {
            out.push((mode, f));
        }
    }
    out
}

fn groups<K: PartialEq + Copy>(records: &[BenchRecord], key: impl Fn(&BenchRecord) -> K) -> Vec<K> {
    let mut keys = Vec::new();
    for r in records {
        let k = key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys
}

/// Baseline over direct sampling time for every (k, point count) run in
/// both modes. Both modes draw the same sample, so the point counts pair up.
pub fn speedups(records: &[BenchRecord]) -> Vec<(usize, usize, f64)> {
    let total = |k: usize, n: usize, mode: Mode| -> f64 {
        records
            .iter()
            .filter(|r| r.k == k && r.n_points == n && r.mode == mode && r.phase == Phase::Sampling)
            .map(|r| r.wall_time_s)
            .sum()
    };
    let mut out = Vec::new();
    for (k, n) in groups(records, |r| (r.k, r.n_points)) {
        let (d, b) = (total(k, n, Mode::Direct), total(k, n, Mode::Baseline));
        if d > 0.0 && b > 0.0 {
            out.push((k, n, b / d));
        }
    }
    out
}

/// Text summary of the fitted slopes and speedups, as CSV.
pub fn summary_csv(records: &[BenchRecord]) -> String {
    let mut s = String::from("fit,k,mode,slope,slope_se,points\n");
    for (k, mode, f) in time_vs_n(records) {
        s.push_str(&format!("time_vs_n,{k},{},{:.4},{:.4},{}\n", mode.name(), f.slope, f.slope_se, f.points));
    }
    for (mode, f) in per_node_time_vs_k(records) {
        s.push_str(&format!("per_node_time_vs_k,,{},{:.4},{:.4},{}\n", mode.name(), f.slope, f.slope_se, f.points));
    }
    let mut sp = String::from("speedup,k,n_points,baseline_over_direct\n");
    for (k, n, x) in speedups(records) {
        sp.push_str(&format!("speedup,{k},{n},{x:.4}\n"));
    }
    if sp.lines().count() > 1 {
        s.push_str(&sp);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [1.0, 10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.79)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope - 0.79).abs() < 1e-12);
        assert!((f.intercept - 3f64.log10()).abs() < 1e-12);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn standard_error_matches_hand_computation() {
        // In log space x = 0, 1, 2 and y = 0, 1.1, 1.9, so the slope is 0.95.
        let x = [1.0, 10.0, 100.0];
        let y = [1.0, 10f64.powf(1.1), 10f64.powf(1.9)];
        let f = fit_loglog(&x, &y).unwrap();
        assert!((f.slope - 0.95).abs() < 1e-12);
        let b = (0.0 + 1.1 + 1.9) / 3.0 - 0.95;
        let res = [0.0 - b, 1.1 - b - 0.95, 1.9 - b - 1.9];
        let sse: f64 = res.iter().map(|r| r * r).sum();
        let se = (sse / 1.0 / 2.0).sqrt();
        assert!((f.slope_se - se).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_loglog(&[1.0], &[1.0]).is_err());
        assert!(fit_loglog(&[1.0, 2.0], &[0.0, 1.0]).is_err());
        assert!(fit_loglog(&[2.0, 2.0], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn plan_parsing() {
        let p = BenchPlan::parse("# scaling\nn = 1000, 4000\nk=5,10\nmodes = direct, baseline\nreps = 2\nside=5\n").unwrap();
        assert_eq!(p.side, 5.0);
        assert_eq!(p.n_targets, vec![1000, 4000]);
        assert_eq!(p.k_values, vec![5, 10]);
        assert_eq!(p.modes, vec![Mode::Direct, Mode::Baseline]);
        assert_eq!(p.reps, 2);
        assert!(matches!(BenchPlan::parse("n = ten"), Err(Error::Parse { line: 1, .. })));
        assert!(BenchPlan::parse("colour = red").is_err());
        assert!(BenchPlan::parse("k = 0").is_err());
    }

    #[test]
    fn small_run_records() {
        let plan = BenchPlan { n_targets: vec![500], k_values: vec![5], modes: vec![Mode::Direct, Mode::Baseline], triangulate: true, ..Default::default() };
        let recs = plan.run().unwrap();
        assert_eq!(recs.len(), 6);
        // Same seed: both modes yield the same sample.
        assert_eq!(recs[0].n_points, recs[3].n_points);
        assert!(recs.iter().all(|r| r.wall_time_s >= 0.0 && r.n_points > 300 && r.n_points < 800));
        assert_eq!(speedups(&recs).len(), 1);
        assert!(summary_csv(&recs).contains("\nspeedup,5,"));
        let csv = to_csv(&recs);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 7);
    }
}
