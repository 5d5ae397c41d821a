//! Simulation driver: setup, time loop, mesh adaptation and snapshots.

use std::path::PathBuf;

use crate::cases::config::RunConfig;
use crate::cases::init::initial_state;
use crate::cases::output::write_snapshot;
use crate::cases::tagging::tag_patches;
use crate::error::{Error, Result};
use crate::executor::ExecReport;
use crate::fields::{Domain, FieldStore};
use crate::gas::{Conservative, GasModel};
use crate::mesh::{Mesh, PatchId};
use crate::timestep::{compute_dt, Integrator};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub time: f64,
    pub snapshots: Vec<PathBuf>,
    pub report: ExecReport,
}

#[derive(Debug)]
pub struct Simulation {
    pub cfg: RunConfig,
    pub gas: GasModel,
    pub mesh: Mesh,
    pub store: FieldStore,
    integrator: Integrator,
    pub time: f64,
    pub steps: usize,
    pub report: ExecReport,
}

impl Simulation {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let gas = GasModel::new(cfg.gamma, 1.0)?;
        let (rx, ry) = cfg.roots();
        let levels = if cfg.amr.enabled {
            cfg.amr.max_level
        } else {
            0
        };
        let capacity = (0..=levels).map(|l| (rx * ry) << (2 * l)).sum();
        let mut mesh = Mesh::new(rx, ry, capacity, cfg.periodic())?;
        let (x_min, x_max, y_min, y_max) = cfg.domain;
        let domain = Domain {
            x_min,
            x_max,
            y_min,
            y_max,
            roots_nx: rx,
            roots_ny: ry,
            patch_n: cfg.patch_n,
        };
        let mut store = FieldStore::new(&mesh, domain)?;
        let ic = initial_state(&cfg, &gas);
        store.init_with(&mesh, |x, y| gas.prim_to_cons(&ic(x, y)));
        if cfg.amr.enabled {
            for _ in 0..cfg.amr.max_level {
                store.sync_ghosts(&mesh);
                tag_patches(&store, &mut mesh, cfg.amr.tag_threshold, cfg.amr.max_level);
                for p in mesh.active_patches().collect::<Vec<_>>() {
                    mesh.meta_mut(p).coarsen_req = false;
                }
                if mesh.refinement_pass().is_empty() {
                    break;
                }
                store.sync_allocation(&mesh);
                store.init_with(&mesh, |x, y| gas.prim_to_cons(&ic(x, y)));
            }
            check_mesh(&mesh)?;
        }
        store.sync_ghosts(&mesh);
        let integrator = Integrator::new(&store, cfg.executor)?;
        Ok(Self {
            cfg,
            gas,
            mesh,
            store,
            integrator,
            time: 0.0,
            steps: 0,
            report: ExecReport::default(),
        })
    }

    /// Advances one step, never past `t_end`. Returns the step size used.
    pub fn step(&mut self) -> Result<f64> {
        let mut dt = compute_dt(&self.store, &self.mesh, &self.gas, self.cfg.cfl)?;
        if self.time + dt > self.cfg.t_end {
            dt = self.cfg.t_end - self.time;
        }
        self.step_with(dt)?;
        Ok(dt)
    }

    /// Advances one step of size `dt`, then adapts the mesh if enabled.
    pub fn step_with(&mut self, dt: f64) -> Result<()> {
        let r =
            self.integrator
                .step(&mut self.store, &self.mesh, &self.gas, &self.cfg.scheme, dt)?;
        self.report.absorb(&r);
        self.time += dt;
        self.steps += 1;
        if self.cfg.amr.enabled {
            self.adapt()?;
        }
        Ok(())
    }

    pub fn finished(&self) -> bool {
        self.time >= self.cfg.t_end * (1.0 - 1e-12)
            || self.cfg.max_steps.is_some_and(|m| self.steps >= m)
    }

    /// Tag, coarsen, refine, fill new patches, re-validate.
    pub fn adapt(&mut self) -> Result<()> {
        let (mesh, store) = (&mut self.mesh, &mut self.store);
        store.sync_ghosts(mesh);
        tag_patches(
            store,
            mesh,
            self.cfg.amr.tag_threshold,
            self.cfg.amr.max_level,
        );
        mesh.coarsening_pass();
        let outcomes = mesh.refinement_pass();
        store.sync_allocation(mesh);
        let mut refined: Vec<PatchId> = outcomes
            .iter()
            .flat_map(|o| o.refined.iter().copied())
            .collect();
        refined.sort_by_key(|&p| (mesh.meta(p).level, p));
        // Children created at one level are filled before they serve as
        // parents or ghost sources for the next.
        let mut k = 0;
        while k < refined.len() {
            let level = mesh.meta(refined[k]).level;
            store.halo_exchange(mesh, level);
            for p in mesh.patches_at_level(level) {
                store.fill_coarse_fine_ghosts(mesh, p);
                if !mesh.periodic() {
                    store.fill_physical_boundary(mesh, p);
                }
            }
            while k < refined.len() && mesh.meta(refined[k]).level == level {
                store.prolong_to_children(mesh, refined[k])?;
                k += 1;
            }
        }
        check_mesh(mesh)?;
        store.sync_ghosts(mesh);
        Ok(())
    }

    /// Domain integral of the conservative variables over the leaves.
    pub fn totals(&self) -> Conservative {
        let d = self.store.domain();
        let mut t = [0.0f64; 4];
        for p in self.mesh.leaves() {
            let level = self.mesh.meta(p).level;
            let area = d.dx(level) * d.dy(level);
            let f = self.store.field(p);
            for (i, j) in f.interior() {
                for (a, b) in t.iter_mut().zip(f.get(i, j).to_array()) {
                    *a += area * b;
                }
            }
        }
        Conservative::from_array(t)
    }

    fn snapshot(&self) -> Result<Vec<PathBuf>> {
        let Some(dir) = &self.cfg.out_dir else {
            return Ok(Vec::new());
        };
        let prefix = dir.join(format!("snap_{:06}", self.steps));
        let mut files = Vec::new();
        for &f in &self.cfg.formats {
            files.extend(write_snapshot(
                &self.store,
                &self.mesh,
                &self.gas,
                &prefix,
                f,
            )?);
        }
        Ok(files)
    }

    /// Runs to `t_end`, writing snapshots at step 0, every `output_every`
    /// steps and at the end.
    pub fn run(&mut self) -> Result<RunSummary> {
        if let Some(dir) = &self.cfg.out_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut snapshots = self.snapshot()?;
        let mut last_written = self.steps;
        while !self.finished() {
            self.step()?;
            let every = self.cfg.output_every;
            if every > 0 && self.steps % every == 0 {
                snapshots.extend(self.snapshot()?);
                last_written = self.steps;
            }
        }
        if last_written != self.steps {
            snapshots.extend(self.snapshot()?);
        }
        Ok(RunSummary {
            steps: self.steps,
            time: self.time,
            snapshots,
            report: self.report.clone(),
        })
    }
}

fn check_mesh(mesh: &Mesh) -> Result<()> {
    let v = mesh.validate();
    if v.is_empty() {
        Ok(())
    } else {
        let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        Err(Error::InvalidMesh(list.join("; ")))
    }
}

pub fn run_simulation(cfg: RunConfig) -> Result<RunSummary> {
    Simulation::new(cfg)?.run()
}
