use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use patchflow::cases::bench::{fusion_benchmark, write_bench_csv};
use patchflow::cases::{run_simulation, RunConfig};
use patchflow::executor::ExecutorConfig;
use patchflow::mesh::Mesh;
use patchflow::numerics::SchemeConfig;
use patchflow::Error;

#[derive(Parser)]
#[command(
    name = "patchflow",
    about = "Patch-based AMR compressible Euler solver"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a case. Flags override keys of the same name in --config.
    Run(RunArgs),
    /// Time fine-grained against fused dispatch.
    BenchFusion(BenchArgs),
    /// Check a mesh dump for validity violations.
    ValidateMesh {
        #[arg(long)]
        replay: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    ny: Option<String>,
    #[arg(long)]
    patch_n: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    characteristic: Option<String>,
    #[arg(long)]
    weno_eps: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    output_every: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    exec_mode: Option<String>,
    #[arg(long)]
    overhead_us: Option<String>,
    #[arg(long)]
    amr: Option<String>,
    #[arg(long)]
    max_level: Option<String>,
    #[arg(long)]
    tag_threshold: Option<String>,
    #[arg(long)]
    density_ratio: Option<String>,
    #[arg(long)]
    mach_c: Option<String>,
    #[arg(long)]
    wavenumber: Option<String>,
    #[arg(long)]
    perturb_amp: Option<String>,
    #[arg(long)]
    shear_thickness: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("case", &self.case),
            ("n", &self.n),
            ("nx", &self.nx),
            ("ny", &self.ny),
            ("patch_n", &self.patch_n),
            ("cfl", &self.cfl),
            ("gamma", &self.gamma),
            ("scheme", &self.scheme),
            ("characteristic", &self.characteristic),
            ("weno_eps", &self.weno_eps),
            ("t_end", &self.t_end),
            ("max_steps", &self.max_steps),
            ("output_every", &self.output_every),
            ("out", &self.out),
            ("format", &self.format),
            ("workers", &self.workers),
            ("exec_mode", &self.exec_mode),
            ("overhead_us", &self.overhead_us),
            ("amr", &self.amr),
            ("max_level", &self.max_level),
            ("tag_threshold", &self.tag_threshold),
            ("density_ratio", &self.density_ratio),
            ("mach_c", &self.mach_c),
            ("wavenumber", &self.wavenumber),
            ("perturb_amp", &self.perturb_amp),
            ("shear_thickness", &self.shear_thickness),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    patch_sizes: Vec<usize>,
    /// Nodes per side of the benchmark grid.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Injected per-dispatch cost in microseconds.
    #[arg(long, default_value_t = 50.0)]
    overhead_us: f64,
    #[arg(long, default_value = "central")]
    scheme: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::SolverBlowup { .. } | Error::PatchState { .. } => 3,
        Error::InvalidMesh(_) => 4,
        _ => 1,
    }
}

fn bench(a: BenchArgs) -> Result<(), Error> {
    let scheme = match a.scheme.as_str() {
        "central" => SchemeConfig::central(),
        "weno" => SchemeConfig::weno(),
        s => return Err(Error::Config(format!("unknown scheme '{s}'"))),
    };
    let base = ExecutorConfig {
        workers: a.workers,
        injected_overhead: Duration::from_secs_f64(a.overhead_us * 1e-6),
        ..Default::default()
    };
    let rows = fusion_benchmark(a.grid, &a.patch_sizes, base, scheme, a.iters)?;
    match a.out {
        Some(p) => {
            let f = std::fs::File::create(&p).map_err(|e| Error::Io {
                path: p.clone(),
                source: e,
            })?;
            write_bench_csv(&rows, f)
        }
        None => write_bench_csv(&rows, std::io::stdout()),
    }
}

fn validate(path: PathBuf) -> Result<(), Error> {
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let mesh = Mesh::from_dump(&text).map_err(|e| Error::Config(e.to_string()))?;
    let v = mesh.validate();
    for x in &v {
        println!("{x}");
    }
    if v.is_empty() {
        println!(
            "mesh valid: {} active patches",
            mesh.active_patches().count()
        );
        Ok(())
    } else {
        Err(Error::InvalidMesh(format!("{} violations", v.len())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => RunConfig::load(a.config.as_deref(), &a.overrides()).and_then(|cfg| {
            let s = run_simulation(cfg)?;
            println!(
                "steps {} time {:.6} snapshots {}",
                s.steps,
                s.time,
                s.snapshots.len()
            );
            Ok(())
        }),
        Cmd::BenchFusion(a) => bench(a),
        Cmd::ValidateMesh { replay } => validate(replay),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
