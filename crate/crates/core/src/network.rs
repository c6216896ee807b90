//! Meshing a whole fracture network: shared intersection samples, independent
//! per-fracture sampling and triangulation, and the merge into one surface.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::delaunay::{conform2, merge_fracture_meshes};
use crate::dfn_io::Dfn;
use crate::engine::{NodeTag, SampleSet, SampleStats, SamplerConfig};
use crate::geometry::{dist_point_boundary, point_in_polygon, Coords, Point2, Point3, Segment};
use crate::mesh::{TriMesh2, TriMesh3};
use crate::sampler2d::{fracture_seeds_with_loop, sample_fracture};
use crate::seeding::march;
use crate::sizing::{FeatureSet2, Sizing2, SizingParams};
use crate::{Error, Real, Result};

/// Samples of one trace, shared verbatim by both fractures.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSamples<T> {
    pub intersection: usize,
    pub points: Vec<Point3<T>>,
    pub global_ids: Vec<u64>,
}

/// Samples every trace once in 3D with the radius `H/2` that holds on the
/// trace itself. Global ids are consecutive over all traces in order.
pub fn seed_intersections<T: Real>(dfn: &Dfn<T>, params: &SizingParams<T>) -> Result<Vec<TraceSamples<T>>> {
    let rho = params.min_radius();
    let mut next_id = 0u64;
    let mut out = Vec::with_capacity(dfn.intersections.len());
    for (k, x) in dfn.intersections.iter().enumerate() {
        let pts = march(&[x.segment.a, x.segment.b], &|_: &Point3<T>| rho, params.a).map_err(|e| match e {
            Error::MinimumFeature(m) => Error::MinimumFeature(format!("intersection {k} ({}, {}): {m}", x.i, x.j)),
            other => other,
        })?;
        let ids: Vec<u64> = (next_id..next_id + pts.len() as u64).collect();
        next_id += pts.len() as u64;
        out.push(TraceSamples { intersection: k, points: pts, global_ids: ids });
    }
    Ok(out)
}

/// Result for one fracture. Mesh node `i` is sample `node_sample[i]`.
#[derive(Clone, Debug)]
pub struct FractureMesh<T> {
    pub fracture: usize,
    pub samples: SampleSet<T, Point2<T>>,
    pub stats: SampleStats,
    /// Mesh in the fracture's own frame.
    pub local: TriMesh2<T>,
    /// The same mesh placed in space; trace nodes carry their exact shared coordinates.
    pub spatial: TriMesh3<T>,
    pub node_sample: Vec<u32>,
    /// Protected trace sub-segments as local mesh node pairs.
    pub trace_edges: Vec<[u32; 2]>,
    /// Nodes removed by excavation.
    pub excavated: usize,
    /// Triangles dropped because their centroid lies outside the polygon.
    pub outside_dropped: usize,
    pub triangulation_time: Duration,
}

/// Samples and triangulates fracture `k`. The random stream is seeded with
/// `cfg.rng_seed ^ k` so the result does not depend on scheduling.
pub fn mesh_fracture<T: Real>(
    dfn: &Dfn<T>,
    k: usize,
    params: &SizingParams<T>,
    cfg: &SamplerConfig,
    traces: &[TraceSamples<T>],
) -> Result<FractureMesh<T>> {
    let poly = &dfn.fractures[k];
    let frame = &poly.frame;
    let local_poly = poly.local();
    let mut segments = Vec::new();
    let mut inter_pts: Vec<(Point2<T>, u64)> = Vec::new();
    let mut inter_3d: Vec<Point3<T>> = Vec::new();
    let mut runs: Vec<std::ops::Range<usize>> = Vec::new();
    for (idx, x) in dfn.traces_of(k) {
        segments.push(Segment::new(frame.to_2d(&x.segment.a), frame.to_2d(&x.segment.b)));
        let ts = &traces[idx];
        let start = inter_pts.len();
        for (p, &g) in ts.points.iter().zip(&ts.global_ids) {
            inter_pts.push((frame.to_2d(p), g));
            inter_3d.push(*p);
        }
        runs.push(start..inter_pts.len());
    }
    let sizing = Sizing2 { params: *params, features: FeatureSet2::new(segments) };
    let (seeds, walk) = fracture_seeds_with_loop(local_poly, &sizing, &inter_pts)
        .map_err(|e| annotate(e, k))?;
    let mut fcfg = *cfg;
    fcfg.rng_seed = cfg.rng_seed ^ k as u64;
    let (samples, stats) = sample_fracture(local_poly, &sizing, &fcfg, &seeds).map_err(|e| annotate(e, k))?;

    // Intersection seeds come first, so sample index == seed index for them.
    let mut protected: Vec<[u32; 2]> = Vec::new();
    for r in &runs {
        for i in r.start..r.end.saturating_sub(1) {
            protected.push([i as u32, i as u32 + 1]);
        }
    }
    let n_trace = protected.len();
    // A boundary pair is protected only when no other protected node sits in
    // its diametral circle; that happens where a seed was dropped beside a trace.
    let guard: Vec<usize> = (0..inter_pts.len()).chain(walk.iter().copied()).collect();
    for w in 0..walk.len() {
        let (a, b) = (walk[w], walk[(w + 1) % walk.len()]);
        if a == b {
            continue;
        }
        let (pa, pb) = (samples.points[a], samples.points[b]);
        let mid = (pa + pb) * T::lit(0.5);
        let r2 = pa.dist2(&pb) * T::lit(0.25);
        let blocked = guard.iter().any(|&g| g != a && g != b && samples.points[g].dist2(&mid) < r2);
        if !blocked {
            protected.push([a as u32, b as u32]);
        }
    }
    let t0 = Instant::now();
    let conformed = conform2(&samples.points, &protected)?;
    let mut cells = Vec::with_capacity(conformed.cells.len());
    let mut outside_dropped = 0;
    let third = T::lit(1.0 / 3.0);
    let flat_tol = poly.diameter() * T::lit(1e-9);
    for c in conformed.cells {
        let [a, b, cc] = c.map(|i| samples.points[i as usize]);
        let centroid = (a + b + cc) * third;
        // Rounding can leave flat hull triangles along a straight edge; their
        // centroids sit on the boundary.
        if point_in_polygon(&centroid, local_poly) && dist_point_boundary(&centroid, local_poly) > flat_tol {
            cells.push(c);
        } else {
            outside_dropped += 1;
        }
    }
    // Compact to the nodes still in use.
    let mut map = vec![u32::MAX; samples.len()];
    let mut node_sample = Vec::new();
    for c in &cells {
        for &v in c {
            if map[v as usize] == u32::MAX {
                map[v as usize] = node_sample.len() as u32;
                node_sample.push(v);
            }
        }
    }
    // Trace nodes are always kept, even if no triangle uses them.
    for i in 0..inter_pts.len() {
        if map[i] == u32::MAX {
            map[i] = node_sample.len() as u32;
            node_sample.push(i as u32);
        }
    }
    let cells: Vec<[u32; 3]> = cells.iter().map(|c| c.map(|v| map[v as usize])).collect();
    let tags: Vec<NodeTag> = node_sample.iter().map(|&s| samples.tags[s as usize]).collect();
    let gids: Vec<Option<u64>> = node_sample.iter().map(|&s| samples.global_ids[s as usize]).collect();
    let local = TriMesh2 {
        nodes: node_sample.iter().map(|&s| samples.points[s as usize]).collect(),
        tags: tags.clone(),
        global_ids: gids.clone(),
        cells: cells.clone(),
    };
    let spatial = TriMesh3 {
        nodes: node_sample
            .iter()
            .map(|&s| {
                let s = s as usize;
                if s < inter_3d.len() {
                    inter_3d[s]
                } else {
                    frame.to_3d(&samples.points[s])
                }
            })
            .collect(),
        tags,
        global_ids: gids,
        cells,
    };
    let trace_edges = protected[..n_trace].iter().map(|e| e.map(|v| map[v as usize])).collect();
    Ok(FractureMesh {
        fracture: k,
        excavated: conformed.removed.len(),
        samples,
        stats,
        local,
        spatial,
        node_sample,
        trace_edges,
        outside_dropped,
        triangulation_time: t0.elapsed(),
    })
}

fn annotate(e: Error, k: usize) -> Error {
    match e {
        Error::MinimumFeature(m) => Error::MinimumFeature(format!("fracture {k}: {m}")),
        other => other,
    }
}

/// Meshed network.
#[derive(Clone, Debug)]
pub struct DfnMesh<T> {
    pub traces: Vec<TraceSamples<T>>,
    pub fractures: Vec<FractureMesh<T>>,
    pub merged: TriMesh3<T>,
    /// Sizing radius of every merged node.
    pub rho: Vec<T>,
}

impl<T: Real> DfnMesh<T> {
    /// Trace sub-segments of the merged mesh, as sorted node pairs.
    pub fn trace_edges(&self) -> Vec<[u32; 2]> {
        let mut by_gid = std::collections::HashMap::new();
        for (i, g) in self.merged.global_ids.iter().enumerate() {
            if let Some(g) = g {
                by_gid.insert(*g, i as u32);
            }
        }
        let mut out = Vec::new();
        for t in &self.traces {
            for w in t.global_ids.windows(2) {
                let (a, b) = (by_gid[&w[0]], by_gid[&w[1]]);
                out.push([a.min(b), a.max(b)]);
            }
        }
        out
    }

    pub fn sampling_time(&self) -> Duration {
        self.fractures.iter().map(|f| f.stats.sampling_time).sum()
    }

    pub fn resampling_time(&self) -> Duration {
        self.fractures.iter().map(|f| f.stats.resampling_time).sum()
    }

    pub fn triangulation_time(&self) -> Duration {
        self.fractures.iter().map(|f| f.triangulation_time).sum()
    }
}

/// Meshes all fractures on the current rayon pool and merges the results in
/// fracture order.
pub fn mesh_dfn<T: Real>(dfn: &Dfn<T>, params: &SizingParams<T>, cfg: &SamplerConfig) -> Result<DfnMesh<T>> {
    params.validate()?;
    cfg.validate()?;
    let traces = seed_intersections(dfn, params)?;
    let fractures: Vec<FractureMesh<T>> = (0..dfn.fractures.len())
        .into_par_iter()
        .map(|k| mesh_fracture(dfn, k, params, cfg, &traces))
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<TriMesh3<T>> = fractures.iter().map(|f| f.spatial.clone()).collect();
    let merged = merge_fracture_meshes(&parts)?;
    // Merge visits nodes in the same order, so radii line up with first occurrences.
    let mut rho = Vec::with_capacity(merged.nodes.len());
    let mut seen = std::collections::HashSet::new();
    for f in &fractures {
        for (i, &s) in f.node_sample.iter().enumerate() {
            match f.spatial.global_ids[i] {
                Some(g) if !seen.insert(g) => {}
                _ => rho.push(f.samples.rho[s as usize]),
            }
        }
    }
    debug_assert_eq!(rho.len(), merged.nodes.len());
    Ok(DfnMesh { traces, fractures, merged, rho })
}

/// [`mesh_dfn`] on a dedicated pool of `threads` workers.
pub fn mesh_dfn_threads<T: Real>(
    dfn: &Dfn<T>,
    params: &SizingParams<T>,
    cfg: &SamplerConfig,
    threads: usize,
) -> Result<DfnMesh<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| mesh_dfn(dfn, params, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfn_io::{generate_test_dfn, serialize_mesh};
    use crate::quality::report_tri;

    fn params(h: f64) -> SizingParams<f64> {
        SizingParams::new(h, 0.1, 40.0, 1.0).unwrap()
    }

    #[test]
    fn trace_samples_spacing() {
        let dfn = generate_test_dfn("four-discs").unwrap();
        let p = params(0.05);
        let t = seed_intersections(&dfn, &p).unwrap();
        assert_eq!(t.len(), dfn.intersections.len());
        let mut ids: Vec<u64> = t.iter().flat_map(|s| s.global_ids.clone()).collect();
        let n = ids.len();
        ids.dedup();
        assert_eq!(ids.len(), n);
        for s in &t {
            for w in s.points.windows(2) {
                let g = w[0].dist(&w[1]);
                assert!(g >= 0.025 && g < 0.025 * 2f64.sqrt() / 1.1, "{g}");
            }
        }
    }

    #[test]
    fn four_discs_mesh() {
        let dfn = generate_test_dfn("four-discs").unwrap();
        let cfg = SamplerConfig { k: 30, resample_sweeps: 1, rng_seed: 9, direct_rejection: true };
        let m = mesh_dfn(&dfn, &params(0.05), &cfg).unwrap();
        let shared: usize = m.traces.iter().map(|t| t.points.len()).sum();
        let total: usize = m.fractures.iter().map(|f| f.spatial.nodes.len()).sum();
        assert_eq!(m.merged.nodes.len(), total - shared);
        assert_eq!(m.rho.len(), m.merged.nodes.len());
        let edges = m.merged.edge_set();
        for e in m.trace_edges() {
            assert!(edges.contains(&e));
        }
        for f in &m.fractures {
            let r = report_tri(&f.local);
            assert!(r.min_angle > 20.0, "fracture {} min angle {}", f.fracture, r.min_angle);
        }
        let again = mesh_dfn_threads(&dfn, &params(0.05), &cfg, 3).unwrap();
        assert_eq!(serialize_mesh(&again.merged), serialize_mesh(&m.merged));
    }
}
