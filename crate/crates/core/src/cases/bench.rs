//! Fine versus fused dispatch timing across patch sizes.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::Write;
use std::time::Instant;

use crate::cases::config::{Case, RunConfig};
use crate::cases::driver::Simulation;
use crate::error::{Error, Result};
use crate::executor::{ExecMode, ExecutorConfig};
use crate::numerics::SchemeConfig;
use crate::timestep::compute_dt;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub mode: ExecMode,
    pub patch_size: usize,
    pub n_patches: usize,
    pub iters: usize,
    pub wall_s_per_iter: f64,
    pub dispatch_overhead_s: f64,
    pub busy_fraction: f64,
    /// Hash of the final field bits.
    pub checksum: u64,
}

/// Times `iters` implosion steps on a `grid`-squared mesh for each patch
/// size in both modes. Each step uses the same fixed `dt`.
pub fn fusion_benchmark(
    grid: usize,
    patch_sizes: &[usize],
    base: ExecutorConfig,
    scheme: SchemeConfig,
    iters: usize,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &ps in patch_sizes {
        for mode in [ExecMode::Fine, ExecMode::Fused] {
            let mut cfg = RunConfig::for_case(Case::Implosion);
            cfg.nx = grid;
            cfg.ny = grid;
            cfg.patch_n = ps;
            cfg.scheme = scheme;
            cfg.executor = ExecutorConfig { mode, ..base };
            cfg.t_end = f64::INFINITY;
            let mut sim = Simulation::new(cfg)?;
            let dt = compute_dt(&sim.store, &sim.mesh, &sim.gas, 0.45)?;
            let start = Instant::now();
            for _ in 0..iters {
                sim.step_with(dt)?;
            }
            let wall = start.elapsed().as_secs_f64();
            let mut h = DefaultHasher::new();
            for u in sim.store.composite(&sim.mesh, sim.mesh.max_level()) {
                for v in u.to_array() {
                    v.to_bits().hash(&mut h);
                }
            }
            let per = iters.max(1) as f64;
            rows.push(BenchRow {
                mode,
                patch_size: ps,
                n_patches: sim.mesh.leaves().len(),
                iters,
                wall_s_per_iter: wall / per,
                dispatch_overhead_s: sim.report.dispatch_overhead / per,
                busy_fraction: sim.report.busy_fraction(),
                checksum: h.finish(),
            });
        }
    }
    Ok(rows)
}

/// Fused-over-fine wall-time ratio for one patch size.
pub fn speedup(rows: &[BenchRow], patch_size: usize) -> Option<f64> {
    let t = |m| {
        rows.iter()
            .find(|r| r.patch_size == patch_size && r.mode == m)
            .map(|r| r.wall_s_per_iter)
    };
    Some(t(ExecMode::Fine)? / t(ExecMode::Fused)?)
}

pub fn write_bench_csv(rows: &[BenchRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Config(format!("csv output: {e}"));
    w.write_record([
        "mode",
        "patch_size",
        "n_patches",
        "iters",
        "wall_s_per_iter",
        "dispatch_overhead_s",
        "busy_fraction",
    ])
    .map_err(err)?;
    for r in rows {
        let mode = match r.mode {
            ExecMode::Fine => "fine",
            ExecMode::Fused => "fused",
        };
        w.serialize((
            mode,
            r.patch_size,
            r.n_patches,
            r.iters,
            r.wall_s_per_iter,
            r.dispatch_overhead_s,
            r.busy_fraction,
        ))
        .map_err(err)?;
    }
    w.flush()
        .map_err(|e| Error::Config(format!("csv output: {e}")))
}
