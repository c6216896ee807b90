//! `nmaps` command line: mesh a fracture network, fill its box with
//! tetrahedra, run timing benchmarks and report element quality.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use nmaps::bench::{per_node_time_vs_k, speedups, summary_csv, time_vs_n, to_csv, BenchPlan, Mode};
use nmaps::dfn_io::{generate_test_dfn, parse_mesh, read_dfn, serialize_mesh, vtk_string};
use nmaps::engine::SamplerConfig;
use nmaps::mesh::Mesh;
use nmaps::network::mesh_dfn_threads;
use nmaps::quality::{report_tet, report_tri, QualityReport, SliverPolicy};
use nmaps::sampler3d::{iterations_csv, sliver_loop};
use nmaps::{Network, NetworkMesh, Params, Point3d, Volume};

#[derive(Parser, Debug)]
#[command(name = "nmaps", version, about = "Poisson-disk sampling and conforming meshing of fracture networks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sample and triangulate every fracture, merge, and report quality.
    MeshDfn(MeshDfnArgs),
    /// Mesh the network, then fill its box with tetrahedra free of slivers.
    MeshVolume(MeshVolumeArgs),
    /// Time the 2D sampler over point counts, k values and modes.
    Bench(BenchArgs),
    /// Quality of a stored mesh, or a min-angle table over k and sweeps.
    #[command(subcommand)]
    Quality(QualityCmd),
}

#[derive(Args, Debug, Clone, Copy)]
struct SizingArgs {
    /// Smallest spacing; the minimum radius is H/2.
    #[arg(long = "H", default_value_t = 0.1)]
    h: f64,
    /// Slope of the radius away from intersections, in [0, 1).
    #[arg(long = "A", default_value_t = 0.1)]
    a: f64,
    /// Distance, in units of H, over which the radius grows.
    #[arg(long = "R", default_value_t = 40.0)]
    r: f64,
    /// Width, in units of H, of the band of minimum radius.
    #[arg(long = "F", default_value_t = 1.0)]
    f: f64,
}

impl SizingArgs {
    fn params(&self) -> Result<Params, Failure> {
        Ok(Params::new(self.h, self.a, self.r, self.f)?)
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct SamplingArgs {
    /// Candidates drawn per batch around each point.
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Resampling passes over the unblocked cells.
    #[arg(long, default_value_t = 1)]
    sweeps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test every candidate by distance, without the blocked-cell shortcut.
    #[arg(long)]
    baseline: bool,
    /// Workers for the per-fracture stage; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl SamplingArgs {
    fn config(&self) -> Result<SamplerConfig, Failure> {
        let cfg = SamplerConfig { k: self.k, resample_sweeps: self.sweeps, rng_seed: self.seed, direct_rejection: !self.baseline };
        cfg.validate()?;
        Ok(cfg)
    }

    fn threads(&self) -> usize {
        if self.threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.threads
        }
    }
}

#[derive(Args, Debug)]
struct MeshDfnArgs {
    /// A `.dfn` file or a built-in network: four-discs, seven-rects, exp-25, exp-25(<seed>).
    input: String,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    sizing: SizingArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Args, Debug)]
struct MeshVolumeArgs {
    /// A `.dfn` file with a `domain` line, or a built-in network.
    input: String,
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    sizing: SizingArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Remove-and-resample passes before giving up.
    #[arg(long, default_value_t = 50)]
    max_sliver_iters: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Plan file of `key = value` lines; flags are ignored when given.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Target point counts.
    #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 100_000])]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [30usize])]
    k: Vec<usize>,
    /// direct, baseline or both (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [Mode::Direct])]
    modes: Vec<Mode>,
    #[arg(long, default_value_t = 0)]
    sweeps: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Side of the benchmark square; H follows from the point target.
    #[arg(long, default_value_t = 10.0)]
    side: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also time the Delaunay triangulation of each sample.
    #[arg(long)]
    triangulate: bool,
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum QualityCmd {
    /// Angle and aspect statistics of a native mesh file.
    Report {
        mesh: PathBuf,
        /// Sizing slope used for the angle bound.
        #[arg(long = "A", default_value_t = 0.1)]
        a: f64,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Smallest minimum angle of the network mesh for every k and sweep count.
    Sweep {
        input: String,
        #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 20, 40, 80, 160])]
        k_values: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2])]
        sweep_values: Vec<usize>,
        /// Seeds 0..n averaged per cell of the table.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[command(flatten)]
        sizing: SizingArgs,
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
}

/// Exit codes: 2 invalid input, 3 no convergence, 4 file errors, 1 anything else.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure { code: 4, error: anyhow!("{}: {e}", path.display()) }
    }
}

impl From<nmaps::Error> for Failure {
    fn from(e: nmaps::Error) -> Self {
        use nmaps::Error as E;
        let code = match &e {
            E::Io { .. } => 4,
            E::Consistency(_) | E::Internal(_) => 1,
            _ => 2,
        };
        Failure { code, error: e.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::MeshDfn(a) => mesh_dfn_cmd(&a),
        Cmd::MeshVolume(a) => mesh_volume_cmd(&a),
        Cmd::Bench(a) => bench_cmd(&a),
        Cmd::Quality(QualityCmd::Report { mesh, a, out }) => quality_report_cmd(&mesh, a, &out),
        Cmd::Quality(QualityCmd::Sweep { input, k_values, sweep_values, seeds, threads, sizing, out }) => {
            quality_sweep_cmd(&input, &k_values, &sweep_values, seeds, threads, &sizing, &out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_network(input: &str) -> Result<Network, Failure> {
    let path = Path::new(input);
    if path.exists() {
        return Ok(read_dfn(path)?);
    }
    generate_test_dfn(input).map_err(|_| Failure {
        code: 4,
        error: anyhow!("`{input}` is neither a readable file nor a built-in network"),
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure::io(&path, e))
}

fn write_quality(dir: &Path, prefix: &str, q: &QualityReport) -> Result<(), Failure> {
    write(dir, &format!("{prefix}_summary.csv"), &q.to_csv())?;
    write(dir, &format!("{prefix}_min_angle.csv"), &q.min_angle_histogram().to_csv())?;
    write(dir, &format!("{prefix}_max_angle.csv"), &q.max_angle_histogram().to_csv())?;
    write(dir, &format!("{prefix}_aspect.csv"), &q.aspect_histogram().to_csv())
}

fn mesh_network(input: &str, sizing: &SizingArgs, sampling: &SamplingArgs) -> Result<(Network, Params, SamplerConfig, NetworkMesh), Failure> {
    let params = sizing.params()?;
    let cfg = sampling.config()?;
    let dfn = load_network(input)?;
    let mesh = mesh_dfn_threads(&dfn, &params, &cfg, sampling.threads())?;
    Ok((dfn, params, cfg, mesh))
}

fn write_network(out: &Path, mesh: &NetworkMesh, a: f64) -> Result<QualityReport, Failure> {
    write(out, "network.mesh", &serialize_mesh(&mesh.merged))?;
    write(out, "network.vtk", &vtk_string(&mesh.merged)?)?;
    let q = report_tri(&mesh.merged).with_bounds(a);
    write_quality(out, "network_quality", &q)?;
    Ok(q)
}

fn mesh_dfn_cmd(a: &MeshDfnArgs) -> Result<(), Failure> {
    let t = Instant::now();
    let (dfn, _, _, mesh) = mesh_network(&a.input, &a.sizing, &a.sampling)?;
    let wall = t.elapsed().as_secs_f64();
    let q = write_network(&a.out, &mesh, a.sizing.a)?;
    let timings = format!(
        "phase,seconds\nsampling,{}\nresampling,{}\ntriangulation,{}\nwall,{wall}\n",
        mesh.sampling_time().as_secs_f64(),
        mesh.resampling_time().as_secs_f64(),
        mesh.triangulation_time().as_secs_f64()
    );
    write(&a.out, "network_timings.csv", &timings)?;
    println!("fractures {}  traces {}  nodes {}", dfn.fractures.len(), mesh.traces.len(), mesh.merged.nodes.len());
    println!("{}", q.summary());
    Ok(())
}

fn mesh_volume_cmd(a: &MeshVolumeArgs) -> Result<(), Failure> {
    let policy = SliverPolicy { max_iterations: a.max_sliver_iters, ..SliverPolicy::default() };
    policy.validate()?;
    let (dfn, params, cfg, net) = mesh_network(&a.input, &a.sizing, &a.sampling)?;
    write_network(&a.out, &net, a.sizing.a)?;
    let domain = Volume::from_network(&dfn, &net)?;
    let vol = sliver_loop(&domain, &params, &cfg, &policy)?;
    write(&a.out, "volume.mesh", &serialize_mesh(&vol.mesh))?;
    write(&a.out, "volume.vtk", &vtk_string(&vol.mesh)?)?;
    write(&a.out, "volume_iterations.csv", &iterations_csv(&vol.iterations))?;
    let q = report_tet(&vol.mesh);
    write_quality(&a.out, "volume_quality", &q)?;
    println!("network nodes {}  volume nodes {}  tets {}", net.merged.nodes.len(), vol.mesh.nodes.len(), vol.mesh.cells.len());
    for (i, r) in vol.iterations.iter().enumerate() {
        println!("pass {i}: nodes {} offenders {} removed {}", r.nodes, r.offenders, r.removed);
    }
    println!("{}", q.summary());
    if vol.converged {
        Ok(())
    } else {
        Err(Failure { code: 3, error: anyhow!("sliver removal did not converge: {}", vol.diagnostic()) })
    }
}

fn bench_cmd(a: &BenchArgs) -> Result<(), Failure> {
    let plan = match &a.plan {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::io(p, e))?;
            BenchPlan::parse(&text)?
        }
        None => BenchPlan {
            n_targets: a.n.clone(),
            k_values: a.k.clone(),
            modes: a.modes.clone(),
            sweeps: a.sweeps,
            reps: a.reps,
            side: a.side,
            seed: a.seed,
            triangulate: a.triangulate,
        },
    };
    let records = plan.run()?;
    write(&a.out, "bench.csv", &to_csv(&records))?;
    write(&a.out, "bench_summary.csv", &summary_csv(&records))?;
    for (k, mode, f) in time_vs_n(&records) {
        println!("time vs n  k={k:<4} {:<16} slope {:.3} ± {:.3} ({} runs)", mode.name(), f.slope, f.slope_se, f.points);
    }
    for (mode, f) in per_node_time_vs_k(&records) {
        println!("time/node vs k  {:<16} slope {:.3} ± {:.3}", mode.name(), f.slope, f.slope_se);
    }
    for (k, n, x) in speedups(&records) {
        println!("speedup k={k:<4} n={n:<8} {x:.2}x");
    }
    Ok(())
}

fn quality_report_cmd(path: &Path, a: f64, out: &Path) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let q = match text.split_whitespace().nth(1) {
        Some("3") => {
            let m: Mesh<Point3d, 3> = parse_mesh(&text)?;
            report_tri(&m).with_bounds(a)
        }
        Some("4") => {
            let m: Mesh<Point3d, 4> = parse_mesh(&text)?;
            report_tet(&m)
        }
        _ => return Err(Failure { code: 2, error: anyhow!("{}: not a native mesh file", path.display()) }),
    };
    write_quality(out, "quality", &q)?;
    println!("{}", q.summary());
    Ok(())
}

fn quality_sweep_cmd(
    input: &str,
    k_values: &[usize],
    sweep_values: &[usize],
    seeds: u64,
    threads: usize,
    sizing: &SizingArgs,
    out: &Path,
) -> Result<(), Failure> {
    if seeds == 0 {
        return Err(Failure { code: 2, error: anyhow!("--seeds must be positive") });
    }
    let params = sizing.params()?;
    let dfn = load_network(input)?;
    let mut runs = String::from("k,sweeps,seed,nodes,min_angle_deg\n");
    let mut table = String::from("k,sweeps,mean_min_angle_deg,lowest_min_angle_deg,mean_nodes\n");
    for &k in k_values {
        for &sweeps in sweep_values {
            let (mut sum, mut lowest, mut nodes) = (0.0, f64::INFINITY, 0usize);
            for seed in 0..seeds {
                let sampling = SamplingArgs { k, sweeps, seed, baseline: false, threads };
                let cfg = sampling.config()?;
                let mesh = mesh_dfn_threads(&dfn, &params, &cfg, sampling.threads())?;
                let m = report_tri(&mesh.merged).min_angle;
                let _ = writeln!(runs, "{k},{sweeps},{seed},{},{m}", mesh.merged.nodes.len());
                sum += m;
                lowest = lowest.min(m);
                nodes += mesh.merged.nodes.len();
            }
            let mean = sum / seeds as f64;
            let _ = writeln!(table, "{k},{sweeps},{mean},{lowest},{}", nodes as f64 / seeds as f64);
            println!("k {k:<4} sweeps {sweeps}: mean min angle {mean:.3}  lowest {lowest:.3}");
        }
    }
    write(out, "quality_sweep_runs.csv", &runs)?;
    write(out, "quality_sweep.csv", &table)
}
