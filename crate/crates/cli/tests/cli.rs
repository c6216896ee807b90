use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nmaps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmaps")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn slope_of_one_is_rejected_as_invalid() {
    let o = nmaps(&["mesh-dfn", "four-discs", "--A", "1.0", "-o", "/nonexistent"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("A must lie in [0, 1)"));
}

#[test]
fn unknown_input_is_a_file_error() {
    let o = nmaps(&["mesh-dfn", "no-such-network.dfn"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(code(&nmaps(&["mesh-dfn"])), 2);
    assert_eq!(code(&nmaps(&["mesh-dfn", "four-discs", "--k", "0"])), 2);
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = nmaps(&["mesh-dfn", "four-discs", "--H", "0.08", "--seed", "7", "--threads", threads, "-o", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in [
        "network.mesh",
        "network.vtk",
        "network_quality_summary.csv",
        "network_quality_min_angle.csv",
        "network_quality_max_angle.csv",
        "network_quality_aspect.csv",
    ] {
        assert!(read(&a, name) == read(&b, name), "{name} differs");
    }
    let mesh = String::from_utf8(read(&a, "network.mesh")).unwrap();
    assert!(mesh.starts_with("nmaps-mesh 3"));
    let timings = String::from_utf8(read(&a, "network_timings.csv")).unwrap();
    assert!(timings.starts_with("phase,seconds\n"));
}

#[test]
fn empty_network_fills_its_box() {
    let dir = tempfile::tempdir().unwrap();
    let dfn = dir.path().join("box.dfn");
    fs::write(&dfn, "# nothing but a box\ndomain 0 0 0 1 1 1\n").unwrap();
    let out = dir.path().join("out");
    let o = nmaps(&["mesh-volume", dfn.to_str().unwrap(), "--H", "0.3", "--R", "0", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let vol = String::from_utf8(read(&out, "volume.mesh")).unwrap();
    assert!(vol.starts_with("nmaps-mesh 4"));
    let iters = String::from_utf8(read(&out, "volume_iterations.csv")).unwrap();
    assert!(iters.lines().count() >= 2);
    let summary = String::from_utf8(read(&out, "volume_quality_summary.csv")).unwrap();
    let tets: usize = summary.lines().find_map(|l| l.strip_prefix("elements,")).unwrap().parse().unwrap();
    assert!(tets > 6, "only {tets} tets");
}

#[test]
fn volume_needs_a_domain() {
    let dir = tempfile::tempdir().unwrap();
    let dfn = dir.path().join("tri.dfn");
    fs::write(&dfn, "fracture 0 3\n0 0 0\n1 0 0\n0 1 0\n").unwrap();
    let o = nmaps(&["mesh-volume", dfn.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_bench_plan_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("bad.plan");
    fs::write(&plan, "n = lots\n").unwrap();
    let o = nmaps(&["bench", "--plan", plan.to_str().unwrap(), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn small_bench_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmaps(&["bench", "--n", "300,600", "--k", "5", "--modes", "direct,baseline", "-o", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let raw = String::from_utf8(read(dir.path(), "bench.csv")).unwrap();
    // two point counts, two modes, a sampling and a resampling row each
    assert_eq!(raw.lines().count(), 1 + 2 * 2 * 2);
    let summary = String::from_utf8(read(dir.path(), "bench_summary.csv")).unwrap();
    assert!(summary.contains("speedup,5,"));
}

#[test]
fn quality_report_reads_back_a_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&nmaps(&["mesh-dfn", "four-discs", "--H", "0.1", "-o", out])), 0);
    let q = dir.path().join("q");
    let o = nmaps(&["quality", "report", dir.path().join("network.mesh").to_str().unwrap(), "-o", q.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = read(dir.path(), "network_quality_summary.csv");
    assert!(a == read(&q, "quality_summary.csv"));

    let junk = dir.path().join("junk.mesh");
    fs::write(&junk, "hello\n").unwrap();
    assert_eq!(code(&nmaps(&["quality", "report", junk.to_str().unwrap(), "-o", out])), 2);
}

#[test]
fn quality_sweep_tabulates_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let o = nmaps(&[
        "quality", "sweep", "four-discs", "--H", "0.15", "--k-values", "5,20", "--sweep-values", "0,1", "--seeds", "2", "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(read(dir.path(), "quality_sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    let runs = String::from_utf8(read(dir.path(), "quality_sweep_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 9);
}
