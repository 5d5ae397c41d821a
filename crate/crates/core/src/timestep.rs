//! CFL step size and three-stage SSP Runge-Kutta advancement of every leaf
//! patch, with the per-patch work run through the [`Executor`].

use crate::error::{Error, Result};
use crate::executor::{ExecMode, ExecReport, Executor, ExecutorConfig, Footprint, Task};
use crate::fields::{FieldStore, PatchField};
use crate::gas::GasModel;
use crate::mesh::{Mesh, PatchId};
use crate::numerics::flux::{local_prim, Axis};
use crate::numerics::rhs::{
    divergence, edge_fluxes, interpolate, primitives, PatchCtx, PatchScratch,
};
use crate::numerics::SchemeConfig;

/// `dt = cfl / max[(|u| + c)/dx + (|v| + c)/dy]` over all leaf nodes.
pub fn compute_dt(store: &FieldStore, m: &Mesh, g: &GasModel, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0) {
        return Err(Error::Config(format!("cfl must be positive, got {cfl}")));
    }
    let mut rate = 0.0f64;
    for p in m.leaves() {
        let ctx = PatchCtx::new(store, m, p);
        let f = store.field(p);
        for (i, j) in f.interior() {
            let w = local_prim(f.get(i, j).to_array(), g.gamma).map_err(|e| Error::PatchState {
                patch: p,
                i,
                j,
                source: Box::new(e),
            })?;
            let c = (g.gamma * w[3] / w[0]).sqrt();
            rate = rate.max((w[1].abs() + c) / ctx.dx + (w[2].abs() + c) / ctx.dy);
        }
    }
    Ok(cfl / rate)
}

/// Shu-Osher stage combination for stage `s` in `0..3`, where `u0` is the
/// step's starting value, `us` the stage input and `r` its RHS.
#[inline]
pub fn stage_combine(s: usize, u0: f64, us: f64, r: f64, dt: f64) -> f64 {
    match s {
        0 => u0 + dt * r,
        1 => 0.75 * u0 + 0.25 * (us + dt * r),
        _ => 1.0 / 3.0 * u0 + 2.0 / 3.0 * (us + dt * r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Primitives,
    InterpX,
    FluxX,
    DivX,
    InterpY,
    FluxY,
    DivY,
    RkUpdate,
}

/// Kernels applied to each patch in each stage, in order.
pub const PIPELINE: [Kernel; 8] = [
    Kernel::Primitives,
    Kernel::InterpX,
    Kernel::FluxX,
    Kernel::DivX,
    Kernel::InterpY,
    Kernel::FluxY,
    Kernel::DivY,
    Kernel::RkUpdate,
];

const STAGE_REGION: [&str; 3] = ["u0", "u1", "u2"];

/// Intermediate stage solutions.
#[derive(Debug, Clone)]
pub struct RkStageBuffers {
    pub u1: FieldStore,
    pub u2: FieldStore,
}

struct PatchWork<'a> {
    ctx: PatchCtx,
    u: [&'a mut PatchField; 3],
    scratch: &'a mut PatchScratch,
}

struct StageParams<'a> {
    gas: &'a GasModel,
    cfg: &'a SchemeConfig,
    dt: f64,
}

fn run_kernel(t: &Task<Kernel>, w: &mut PatchWork<'_>, sp: &StageParams<'_>) -> Result<()> {
    let s = t.phase;
    let [u0, u1, u2] = &mut w.u;
    let input: &PatchField = match s {
        0 => u0,
        1 => u1,
        _ => u2,
    };
    let sc = &mut *w.scratch;
    match t.kernel {
        Kernel::Primitives => primitives(input, sc, sp.gas, &w.ctx)?,
        Kernel::InterpX => {
            interpolate(Axis::X, input, sc, sp.gas, sp.cfg);
        }
        Kernel::InterpY => {
            interpolate(Axis::Y, input, sc, sp.gas, sp.cfg);
        }
        Kernel::FluxX => edge_fluxes(Axis::X, sc, sp.gas, sp.cfg, &w.ctx)?,
        Kernel::FluxY => edge_fluxes(Axis::Y, sc, sp.gas, sp.cfg, &w.ctx)?,
        Kernel::DivX => divergence(Axis::X, sc, &w.ctx),
        Kernel::DivY => divergence(Axis::Y, sc, &w.ctx),
        Kernel::RkUpdate => {
            let n = u0.n();
            for j in 0..n {
                for i in 0..n {
                    let (ii, jj) = (i as isize, j as isize);
                    let r = sc.rhs(i, j).to_array();
                    let a = u0.get(ii, jj).to_array();
                    let b = match s {
                        0 => a,
                        1 => u1.get(ii, jj).to_array(),
                        _ => u2.get(ii, jj).to_array(),
                    };
                    let v = crate::gas::Conservative::from_array(std::array::from_fn(|c| {
                        stage_combine(s, a[c], b[c], r[c], sp.dt)
                    }));
                    match s {
                        0 => u1.set(ii, jj, v),
                        1 => u2.set(ii, jj, v),
                        _ => u0.set(ii, jj, v),
                    }
                }
            }
        }
    }
    Ok(())
}

fn stage_tasks(
    leaves: &[PatchId],
    stage: usize,
    kernel: Kernel,
) -> impl Iterator<Item = Task<Kernel>> + '_ {
    leaves.iter().map(move |&p| {
        let fp = |region| Footprint { patch: p, region };
        let (reads, writes) = if kernel == Kernel::RkUpdate {
            let out = (stage + 1) % 3;
            (
                vec![fp("scratch"), fp(STAGE_REGION[0]), fp(STAGE_REGION[stage])],
                vec![fp(STAGE_REGION[out])],
            )
        } else {
            (vec![fp(STAGE_REGION[stage])], vec![fp("scratch")])
        };
        Task {
            patch: p,
            kernel,
            phase: stage,
            reads,
            writes,
        }
    })
}

/// Owns the stage buffers, per-patch scratch and executor for repeated steps.
#[derive(Debug)]
pub struct Integrator {
    executor: Executor,
    stages: RkStageBuffers,
    scratch: Vec<Option<PatchScratch>>,
    steps: usize,
}

impl Integrator {
    pub fn new(u0: &FieldStore, exec: ExecutorConfig) -> Result<Self> {
        Ok(Self {
            executor: Executor::new(exec)?,
            stages: RkStageBuffers {
                u1: u0.clone(),
                u2: u0.clone(),
            },
            scratch: Vec::new(),
            steps: 0,
        })
    }

    pub fn executor(&self) -> &Executor {
        &self.executor
    }

    /// Steps taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// One SSP-RK3 step of all leaves with time step `dt`. Ghosts of the
    /// stage input are refreshed before each RHS evaluation.
    pub fn step(
        &mut self,
        u0: &mut FieldStore,
        m: &Mesh,
        g: &GasModel,
        cfg: &SchemeConfig,
        dt: f64,
    ) -> Result<ExecReport> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        self.stages.u1.sync_allocation(m);
        self.stages.u2.sync_allocation(m);
        let leaves = m.leaves();
        self.scratch.resize_with(m.capacity(), || None);
        for (k, s) in self.scratch.iter_mut().enumerate() {
            if s.is_none() && leaves.binary_search(&PatchId(k)).is_ok() {
                *s = Some(PatchScratch::new(u0.patch_n(), u0.ng()));
            }
        }
        let ctxs: Vec<PatchCtx> = leaves.iter().map(|&p| PatchCtx::new(u0, m, p)).collect();
        let sp = StageParams { gas: g, cfg, dt };
        let mut report = ExecReport::default();

        for stage in 0..3 {
            match stage {
                0 => u0.sync_ghosts(m),
                1 => self.stages.u1.sync_ghosts(m),
                _ => self.stages.u2.sync_ghosts(m),
            }
            let mut items: Vec<PatchWork<'_>> = Vec::with_capacity(leaves.len());
            let mut ctx_iter = ctxs.iter();
            let mut leaf_iter = leaves.iter().peekable();
            let zipped = u0
                .slots_mut()
                .iter_mut()
                .zip(self.stages.u1.slots_mut().iter_mut())
                .zip(self.stages.u2.slots_mut().iter_mut())
                .zip(self.scratch.iter_mut())
                .enumerate();
            for (k, (((a, b), c), s)) in zipped {
                if leaf_iter.peek().map(|p| p.0) != Some(k) {
                    continue;
                }
                leaf_iter.next();
                let missing = || Error::InactivePatch(PatchId(k));
                items.push(PatchWork {
                    ctx: *ctx_iter.next().expect("one context per leaf"),
                    u: [
                        a.as_mut().ok_or_else(missing)?,
                        b.as_mut().ok_or_else(missing)?,
                        c.as_mut().ok_or_else(missing)?,
                    ],
                    scratch: s.as_mut().ok_or_else(missing)?,
                });
            }

            let body = |t: &Task<Kernel>, w: &mut PatchWork<'_>| run_kernel(t, w, &sp);
            let patch_of = |w: &PatchWork<'_>| w.ctx.patch;
            let result = match self.executor.config().mode {
                ExecMode::Fine => PIPELINE.iter().try_for_each(|&k| {
                    let tasks: Vec<_> = stage_tasks(&leaves, stage, k).collect();
                    let r = self
                        .executor
                        .run_phase(&tasks, &mut items, patch_of, body)?;
                    report.absorb(&r);
                    Ok(())
                }),
                ExecMode::Fused => {
                    let tasks: Vec<_> = leaves
                        .iter()
                        .flat_map(|p| {
                            PIPELINE
                                .iter()
                                .flat_map(move |&k| stage_tasks(std::slice::from_ref(p), stage, k))
                        })
                        .collect();
                    self.executor
                        .run_phase(&tasks, &mut items, patch_of, body)
                        .map(|r| report.absorb(&r))
                }
            };
            result.map_err(|e| match e {
                Error::PatchState {
                    patch,
                    i,
                    j,
                    source,
                } => Error::SolverBlowup {
                    step: self.steps,
                    stage,
                    patch,
                    i,
                    j,
                    source,
                },
                other => other,
            })?;
        }
        self.steps += 1;
        Ok(report)
    }
}

/// One SSP-RK3 step with a single-worker fused executor.
pub fn ssprk3_step(
    store: &mut FieldStore,
    m: &Mesh,
    g: &GasModel,
    cfg: &SchemeConfig,
    dt: f64,
) -> Result<()> {
    Integrator::new(store, ExecutorConfig::default())?.step(store, m, g, cfg, dt)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Domain;
    use crate::gas::{Conservative, Primitive};
    use std::f64::consts::PI;

    const G: GasModel = GasModel {
        gamma: 1.4,
        gas_constant: 1.0,
    };

    fn uniform(roots: usize, n: usize, w: Primitive) -> (Mesh, FieldStore) {
        let mesh = Mesh::new(roots, roots, 5 * roots * roots, true).unwrap();
        let domain = Domain {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
            roots_nx: roots,
            roots_ny: roots,
            patch_n: n,
        };
        let mut store = FieldStore::new(&mesh, domain).unwrap();
        store.init_with(&mesh, |_, _| G.prim_to_cons(&w));
        (mesh, store)
    }

    #[test]
    fn rest_gas_dt() {
        let (mut mesh, mut store) = uniform(2, 8, Primitive::new(1.0, 0.0, 0.0, 1.0));
        let h = 1.0 / 16.0;
        let dt = compute_dt(&store, &mesh, &G, 0.45).unwrap();
        assert!((dt - 0.45 * h / (2.0 * 1.4f64.sqrt())).abs() < 1e-15);
        for p in mesh.leaves() {
            mesh.refine_patch(p).unwrap();
        }
        store.sync_allocation(&mesh);
        for p in mesh.patches_at_level(0) {
            store.prolong_to_children(&mesh, p).unwrap();
        }
        let dt2 = compute_dt(&store, &mesh, &G, 0.45).unwrap();
        assert!((dt2 - dt / 2.0).abs() < 1e-15);
        assert!(compute_dt(&store, &mesh, &G, 0.0).is_err());
    }

    #[test]
    fn uniform_state_unchanged_bitwise() {
        let (mesh, mut store) = uniform(2, 8, Primitive::new(1.0, 0.3, -0.2, 1.0));
        let before = store.clone();
        for cfg in [SchemeConfig::central(), SchemeConfig::weno()] {
            ssprk3_step(&mut store, &mesh, &G, &cfg, 0.01).unwrap();
            for p in mesh.leaves() {
                for (i, j) in store.field(p).interior() {
                    let (a, b) = (store.field(p).get(i, j), before.field(p).get(i, j));
                    if cfg.mode == crate::numerics::SchemeMode::Central4 {
                        assert_eq!(a, b);
                    } else {
                        assert!((a - b).to_array().iter().all(|d| d.abs() < 1e-14));
                    }
                }
            }
        }
    }

    #[test]
    fn linear_ode_amplification() {
        for z in [-0.3, -1.0, 0.5, -2.2] {
            let (lambda, dt) = (z / 0.1, 0.1);
            let mut u = 1.0;
            let u0 = u;
            let mut us = u0;
            for s in 0..3 {
                us = stage_combine(s, u0, us, lambda * us, dt);
            }
            u *= 1.0 + z + z * z / 2.0 + z * z * z / 6.0;
            assert!((us - u).abs() < 1e-14, "{z}: {us} vs {u}");
        }
    }

    fn wave(mesh: &Mesh, store: &mut FieldStore) {
        store.init_with(mesh, |x, y| {
            G.prim_to_cons(&Primitive::new(
                1.0 + 0.2 * (2.0 * PI * (x + y)).sin(),
                1.0,
                1.0,
                1.0,
            ))
        });
    }

    #[test]
    fn modes_and_workers_bitwise_identical() {
        let (mesh, mut base) = uniform(3, 8, Primitive::new(1.0, 0.0, 0.0, 1.0));
        wave(&mesh, &mut base);
        let mut outs = Vec::new();
        for mode in [ExecMode::Fine, ExecMode::Fused] {
            for workers in [1, 3] {
                let mut s = base.clone();
                let cfg = ExecutorConfig {
                    mode,
                    workers,
                    ..Default::default()
                };
                let mut integ = Integrator::new(&s, cfg).unwrap();
                let mut dispatches = 0;
                for _ in 0..3 {
                    dispatches += integ
                        .step(&mut s, &mesh, &G, &SchemeConfig::weno(), 2e-3)
                        .unwrap()
                        .dispatches;
                }
                let per = if mode == ExecMode::Fine {
                    PIPELINE.len()
                } else {
                    1
                };
                assert_eq!(dispatches, 3 * 3 * 9 * per);
                outs.push(
                    mesh.leaves()
                        .iter()
                        .map(|&p| s.field(p).data().to_vec())
                        .collect::<Vec<_>>(),
                );
            }
        }
        for o in &outs[1..] {
            assert!(o == &outs[0]);
        }
    }

    #[test]
    fn conserves_on_periodic_mesh() {
        let (mesh, mut s) = uniform(2, 8, Primitive::new(1.0, 0.0, 0.0, 1.0));
        s.init_with(&mesh, |x, y| {
            let r = if (x - 0.5).abs() + (y - 0.5).abs() < 0.2 {
                0.125
            } else {
                1.0
            };
            G.prim_to_cons(&Primitive::new(r, 0.1, 0.0, r))
        });
        let total = |s: &FieldStore| {
            let mut t = Conservative::ZERO;
            for p in mesh.leaves() {
                for (i, j) in s.field(p).interior() {
                    t = t + s.field(p).get(i, j);
                }
            }
            t
        };
        let t0 = total(&s);
        let mut integ = Integrator::new(&s, ExecutorConfig::default()).unwrap();
        for _ in 0..10 {
            let dt = compute_dt(&s, &mesh, &G, 0.45).unwrap();
            integ
                .step(&mut s, &mesh, &G, &SchemeConfig::weno(), dt)
                .unwrap();
        }
        let t1 = total(&s);
        for (a, b) in t0.to_array().iter().zip(t1.to_array()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn blowup_names_stage_and_patch() {
        let (mesh, mut s) = uniform(2, 8, Primitive::new(1.0, 0.0, 0.0, 1.0));
        // Strong jump with a huge dt drives stage 1 negative.
        s.init_with(&mesh, |x, _| {
            G.prim_to_cons(&Primitive::new(
                if x < 0.5 { 1.0 } else { 0.01 },
                0.0,
                0.0,
                if x < 0.5 { 1.0 } else { 0.01 },
            ))
        });
        let err = ssprk3_step(&mut s, &mesh, &G, &SchemeConfig::weno(), 1.0).unwrap_err();
        match err {
            Error::SolverBlowup {
                step,
                stage,
                source,
                ..
            } => {
                assert_eq!(step, 0);
                assert!(stage >= 1);
                assert!(source.is_positivity());
            }
            other => panic!("{other:?}"),
        }
    }
}
