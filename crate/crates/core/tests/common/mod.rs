#![allow(dead_code)]

pub mod riemann;

use patchflow::cases::{Case, RunConfig, Simulation};
use patchflow::numerics::SchemeConfig;

/// Max-norm density error of the diagonal entropy wave after `t_end`.
pub fn entropy_wave_error(
    n: usize,
    scheme: SchemeConfig,
    cfl: f64,
    t_end: f64,
) -> (f64, Simulation) {
    let mut cfg = RunConfig::for_case(Case::EntropyWave);
    cfg.nx = n;
    cfg.ny = n;
    cfg.patch_n = 16;
    cfg.cfl = cfl;
    cfg.scheme = scheme;
    cfg.t_end = t_end;
    let mut sim = Simulation::new(cfg).unwrap();
    sim.run().unwrap();
    let t = sim.time;
    let mut err = 0.0f64;
    for p in sim.mesh.leaves() {
        let f = sim.store.field(p);
        for (i, j) in f.interior() {
            let (x, y) = sim.store.node_xy(&sim.mesh, p, i, j);
            let exact = 1.0 + 0.2 * (2.0 * std::f64::consts::PI * (x + y - 2.0 * t)).sin();
            err = err.max((f.get(i, j).mass - exact).abs());
        }
    }
    (err, sim)
}

pub fn order(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}
