use nmaps::dfn_io::{generate_test_dfn, read_dfn, read_mesh, write_dfn, write_mesh, write_vtk};
use nmaps::engine::{NodeTag, SamplerConfig};
use nmaps::mesh::TriMesh3;
use nmaps::network::mesh_dfn;
use nmaps::quality::{report_tet, report_tri, SliverPolicy};
use nmaps::sampler3d::{sliver_loop, VolumeDomain};
use nmaps::{Network, Params};

fn cfg(seed: u64) -> SamplerConfig {
    SamplerConfig { k: 30, resample_sweeps: 1, rng_seed: seed, direct_rejection: true }
}

#[test]
fn network_written_and_read_meshes_the_same() {
    let dir = tempfile::tempdir().unwrap();
    let original: Network = generate_test_dfn("four-discs").unwrap();
    let path = dir.path().join("four.dfn");
    write_dfn(&original, &path).unwrap();
    let reread: Network = read_dfn(&path).unwrap();
    let p = Params::new(0.08, 0.1, 40.0, 1.0).unwrap();
    let a = mesh_dfn(&original, &p, &cfg(1)).unwrap();
    let b = mesh_dfn(&reread, &p, &cfg(1)).unwrap();
    assert_eq!(a.merged.nodes.len(), b.merged.nodes.len());
    assert_eq!(a.merged.cells, b.merged.cells);
}

#[test]
fn stored_mesh_keeps_tags_and_ids() {
    let dir = tempfile::tempdir().unwrap();
    let dfn = generate_test_dfn("four-discs").unwrap();
    let m = mesh_dfn(&dfn, &Params::new(0.1, 0.1, 40.0, 1.0).unwrap(), &cfg(2)).unwrap();
    let path = dir.path().join("net.mesh");
    write_mesh(&m.merged, &path).unwrap();
    let back: TriMesh3<f64> = read_mesh(&path).unwrap();
    assert_eq!(back.tags, m.merged.tags);
    assert_eq!(back.global_ids, m.merged.global_ids);
    assert_eq!(back.cells, m.merged.cells);
    write_vtk(&back, &dir.path().join("net.vtk")).unwrap();
    let vtk = std::fs::read_to_string(dir.path().join("net.vtk")).unwrap();
    assert!(vtk.contains(&format!("CELLS {} ", back.cells.len())));
}

#[test]
fn shared_trace_nodes_are_merged_once() {
    let dfn = generate_test_dfn("four-discs").unwrap();
    let m = mesh_dfn(&dfn, &Params::new(0.05, 0.1, 40.0, 1.0).unwrap(), &cfg(3)).unwrap();
    let shared: usize = m.traces.iter().map(|t| t.global_ids.len()).sum();
    let tagged = m.merged.tags.iter().filter(|&&t| t == NodeTag::Intersection).count();
    // Trace endpoints can be shared by two traces, never more nodes than samples.
    assert!(tagged <= shared && tagged > 0);
    let local_sum: usize = m.fractures.iter().map(|f| f.local.nodes.len()).sum();
    assert!(m.merged.nodes.len() < local_sum);
    let q = report_tri(&m.merged).with_bounds(0.1);
    assert_eq!(q.degenerate, 0);
    assert!(q.min_angle > 20.0, "min angle {}", q.min_angle);
}

#[test]
fn small_network_volume_is_sliver_free() {
    let dfn = generate_test_dfn("four-discs").unwrap();
    let p = Params::new(0.15, 0.1, 3.0, 1.0).unwrap();
    let net = mesh_dfn(&dfn, &p, &cfg(4)).unwrap();
    let domain = VolumeDomain::from_network(&dfn, &net).unwrap();
    let policy = SliverPolicy::default();
    let vol = sliver_loop(&domain, &p, &cfg(4), &policy).unwrap();
    assert!(vol.converged, "{}", vol.diagnostic());
    let q = report_tet(&vol.mesh);
    assert!(q.min_angle >= policy.min_dihedral && q.max_angle <= policy.max_dihedral);
    assert!(q.min_aspect >= policy.min_aspect);
    let fracture_nodes = vol.mesh.tags.iter().filter(|&&t| t == NodeTag::Fracture || t == NodeTag::Intersection).count();
    assert!(fracture_nodes >= net.merged.nodes.len());
}
