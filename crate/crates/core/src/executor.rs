//! Task execution with switchable granularity.
//!
//! A phase is a set of tasks that may run in any order. In [`ExecMode::Fine`]
//! every task is dispatched on its own; in [`ExecMode::Fused`] all tasks of
//! one patch are composed into a single dispatched unit. Per-patch work items
//! are handed out by exclusive reference, so results do not depend on the
//! mode, the worker count or the execution order.

use std::collections::HashMap;
use std::fmt::Debug;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::PatchId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecMode {
    Fine,
    Fused,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutorConfig {
    pub mode: ExecMode,
    pub workers: usize,
    /// Fixed cost charged to every dispatched unit, spent spinning.
    pub injected_overhead: Duration,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self {
            mode: ExecMode::Fused,
            workers: 1,
            injected_overhead: Duration::ZERO,
        }
    }
}

/// A named region of one patch's data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Footprint {
    pub patch: PatchId,
    pub region: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task<K> {
    pub patch: PatchId,
    pub kernel: K,
    pub phase: usize,
    pub reads: Vec<Footprint>,
    pub writes: Vec<Footprint>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecReport {
    /// Wall time of each phase, seconds.
    pub phase_wall: Vec<f64>,
    /// Dispatched units.
    pub dispatches: usize,
    /// Kernel invocations.
    pub tasks: usize,
    /// Time spent inside kernel bodies, summed over workers.
    pub kernel_time: f64,
    /// Worker time not spent in kernels: injected cost, scheduling and idling.
    pub dispatch_overhead: f64,
    /// Wall time times worker count.
    pub worker_time: f64,
}

impl ExecReport {
    pub fn wall(&self) -> f64 {
        self.phase_wall.iter().sum()
    }

    pub fn busy_fraction(&self) -> f64 {
        if self.worker_time > 0.0 {
            (self.kernel_time / self.worker_time).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn overhead_per_dispatch(&self) -> f64 {
        if self.dispatches > 0 {
            self.dispatch_overhead / self.dispatches as f64
        } else {
            0.0
        }
    }

    pub fn absorb(&mut self, other: &ExecReport) {
        self.phase_wall.extend_from_slice(&other.phase_wall);
        self.dispatches += other.dispatches;
        self.tasks += other.tasks;
        self.kernel_time += other.kernel_time;
        self.dispatch_overhead += other.dispatch_overhead;
        self.worker_time += other.worker_time;
    }
}

pub struct Executor {
    cfg: ExecutorConfig,
    pool: Option<rayon::ThreadPool>,
}

impl Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("cfg", &self.cfg).finish()
    }
}

fn spin(d: Duration) {
    if d.is_zero() {
        return;
    }
    let start = Instant::now();
    while start.elapsed() < d {
        std::hint::spin_loop();
    }
}

impl Executor {
    pub fn new(cfg: ExecutorConfig) -> Result<Self> {
        if cfg.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let pool = if cfg.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.workers)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self { cfg, pool })
    }

    pub fn config(&self) -> &ExecutorConfig {
        &self.cfg
    }

    /// Groups tasks into dispatch units: one per task in fine mode, one per
    /// patch (in first-appearance order) in fused mode.
    fn units<'t, K>(&self, tasks: &'t [Task<K>]) -> Vec<Vec<&'t Task<K>>> {
        match self.cfg.mode {
            ExecMode::Fine => tasks.iter().map(|t| vec![t]).collect(),
            ExecMode::Fused => {
                let mut index: HashMap<PatchId, usize> = HashMap::new();
                let mut units: Vec<Vec<&Task<K>>> = Vec::new();
                for t in tasks {
                    let u = *index.entry(t.patch).or_insert_with(|| {
                        units.push(Vec::new());
                        units.len() - 1
                    });
                    units[u].push(t);
                }
                units
            }
        }
    }

    /// Runs one phase. `items` holds the per-patch data, found through
    /// `patch_of`; `body` runs one task against its patch's item.
    pub fn run_phase<K, T, P, F>(
        &self,
        tasks: &[Task<K>],
        items: &mut [T],
        patch_of: P,
        body: F,
    ) -> Result<ExecReport>
    where
        K: Sync,
        T: Send,
        P: Fn(&T) -> PatchId,
        F: Fn(&Task<K>, &mut T) -> Result<()> + Sync,
    {
        let units = self.units(tasks);
        check_conflicts(&units)?;

        let by_patch: HashMap<PatchId, usize> = items
            .iter()
            .enumerate()
            .map(|(k, t)| (patch_of(t), k))
            .collect();
        let mut slots: Vec<Option<&mut T>> = items.iter_mut().map(Some).collect();
        let mut work = Vec::with_capacity(units.len());
        for (u, unit) in units.iter().enumerate() {
            let patch = unit[0].patch;
            let k = *by_patch
                .get(&patch)
                .ok_or_else(|| Error::Config(format!("no work item for patch {patch}")))?;
            let item = slots[k].take().ok_or_else(|| Error::ConflictDetected {
                first: u,
                second: u,
                footprint: format!("work item of patch {patch}"),
            })?;
            work.push((unit, item));
        }

        let overhead = self.cfg.injected_overhead;
        let run = |(unit, item): (&Vec<&Task<K>>, &mut T)| -> (Result<()>, f64) {
            spin(overhead);
            let t0 = Instant::now();
            for t in unit {
                if let Err(e) = body(t, item) {
                    return (Err(e), t0.elapsed().as_secs_f64());
                }
            }
            (Ok(()), t0.elapsed().as_secs_f64())
        };

        let start = Instant::now();
        let results: Vec<(Result<()>, f64)> = match &self.pool {
            None => work.into_iter().map(run).collect(),
            Some(pool) => pool.install(|| work.into_par_iter().with_max_len(1).map(run).collect()),
        };
        let wall = if tasks.is_empty() {
            0.0
        } else {
            start.elapsed().as_secs_f64()
        };

        let kernel_time: f64 = results.iter().map(|r| r.1).sum();
        let worker_time = wall * self.cfg.workers as f64;
        for (r, _) in results {
            r?;
        }
        Ok(ExecReport {
            phase_wall: vec![wall],
            dispatches: units.len(),
            tasks: tasks.len(),
            kernel_time,
            dispatch_overhead: (worker_time - kernel_time).max(0.0),
            worker_time,
        })
    }
}

fn check_conflicts<K>(units: &[Vec<&Task<K>>]) -> Result<()> {
    // footprint -> (first unit touching it, whether anyone wrote it)
    let mut seen: HashMap<Footprint, (usize, bool)> = HashMap::new();
    for (u, unit) in units.iter().enumerate() {
        for t in unit {
            let acc = t
                .reads
                .iter()
                .map(|f| (f, false))
                .chain(t.writes.iter().map(|f| (f, true)));
            for (f, write) in acc {
                match seen.get_mut(f) {
                    None => {
                        seen.insert(*f, (u, write));
                    }
                    Some((first, wrote)) => {
                        if *first != u && (write || *wrote) {
                            return Err(Error::ConflictDetected {
                                first: *first,
                                second: u,
                                footprint: format!("{}:{}", f.patch, f.region),
                            });
                        }
                        *wrote |= write;
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task(p: usize, kernel: usize) -> Task<usize> {
        Task {
            patch: PatchId(p),
            kernel,
            phase: 0,
            reads: vec![Footprint {
                patch: PatchId(p),
                region: "in",
            }],
            writes: vec![Footprint {
                patch: PatchId(p),
                region: "out",
            }],
        }
    }

    fn exec(mode: ExecMode, workers: usize, overhead_us: u64) -> Executor {
        Executor::new(ExecutorConfig {
            mode,
            workers,
            injected_overhead: Duration::from_micros(overhead_us),
        })
        .unwrap()
    }

    /// Each kernel applies a distinct affine map so order within a patch matters.
    fn body(t: &Task<usize>, item: &mut (PatchId, Vec<f64>)) -> Result<()> {
        for v in item.1.iter_mut() {
            *v = *v * 1.000_1 + t.kernel as f64 + 0.1 * t.patch.0 as f64;
        }
        Ok(())
    }

    fn run(mode: ExecMode, workers: usize) -> (Vec<(PatchId, Vec<f64>)>, usize) {
        let e = exec(mode, workers, 0);
        let mut items: Vec<_> = (0..12).map(|p| (PatchId(p), vec![p as f64; 16])).collect();
        let mut dispatches = 0;
        match mode {
            ExecMode::Fine => {
                for k in 0..5 {
                    let tasks: Vec<_> = (0..12).map(|p| task(p, k)).collect();
                    dispatches += e
                        .run_phase(&tasks, &mut items, |t| t.0, body)
                        .unwrap()
                        .dispatches;
                }
            }
            ExecMode::Fused => {
                let tasks: Vec<_> = (0..12)
                    .flat_map(|p| (0..5).map(move |k| task(p, k)))
                    .collect();
                dispatches += e
                    .run_phase(&tasks, &mut items, |t| t.0, body)
                    .unwrap()
                    .dispatches;
            }
        }
        (items, dispatches)
    }

    #[test]
    fn empty_phase() {
        let e = exec(ExecMode::Fine, 1, 0);
        let mut items: Vec<(PatchId, Vec<f64>)> = vec![];
        let r = e.run_phase(&[], &mut items, |t| t.0, body).unwrap();
        assert_eq!((r.dispatches, r.tasks, r.wall()), (0, 0, 0.0));
    }

    #[test]
    fn modes_agree_and_count_dispatches() {
        let (a, da) = run(ExecMode::Fine, 1);
        let (b, db) = run(ExecMode::Fused, 1);
        let (c, _) = run(ExecMode::Fine, 4);
        let (d, _) = run(ExecMode::Fused, 4);
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, d);
        assert_eq!(da, 60);
        assert_eq!(db, 12);
    }

    #[test]
    fn conflicting_writes_detected() {
        let e = exec(ExecMode::Fine, 1, 0);
        let mut items: Vec<_> = (0..2).map(|p| (PatchId(p), vec![0.0])).collect();
        // Two kernels on the same patch in one fine phase both write "out".
        let tasks = vec![task(0, 0), task(0, 1)];
        assert!(matches!(
            e.run_phase(&tasks, &mut items, |t| t.0, body),
            Err(Error::ConflictDetected {
                first: 0,
                second: 1,
                ..
            })
        ));
        // Fused composes them into one unit, which is fine.
        let e = exec(ExecMode::Fused, 1, 0);
        assert!(e.run_phase(&tasks, &mut items, |t| t.0, body).is_ok());
    }

    #[test]
    fn read_read_sharing_allowed() {
        let mut a = task(0, 0);
        a.writes.clear();
        let mut b = task(1, 0);
        b.reads.push(a.reads[0]);
        let e = exec(ExecMode::Fine, 1, 0);
        let mut items: Vec<_> = (0..2).map(|p| (PatchId(p), vec![0.0])).collect();
        assert!(e.run_phase(&[a, b], &mut items, |t| t.0, body).is_ok());
    }

    #[test]
    fn first_error_in_task_order_wins() {
        let e = exec(ExecMode::Fine, 3, 0);
        let mut items: Vec<_> = (0..6).map(|p| (PatchId(p), vec![0.0])).collect();
        let tasks: Vec<_> = (0..6).map(|p| task(p, 0)).collect();
        let r = e.run_phase(
            &tasks,
            &mut items,
            |t| t.0,
            |t, _| {
                if t.patch.0 >= 2 {
                    Err(Error::InvalidMesh(format!("{}", t.patch)))
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(r, Err(Error::InvalidMesh(s)) if s == "2"));
    }

    #[test]
    fn injected_overhead_matches_model() {
        let (n, k) = (24usize, 4usize);
        let o = 400e-6;
        let t = 100e-6;
        let spin_body = |_: &Task<usize>, _: &mut (PatchId, Vec<f64>)| {
            spin(Duration::from_secs_f64(t));
            Ok(())
        };
        let time = |mode| {
            let e = exec(mode, 1, 400);
            let mut items: Vec<_> = (0..n).map(|p| (PatchId(p), vec![])).collect();
            let start = Instant::now();
            let mut rep = ExecReport::default();
            match mode {
                ExecMode::Fine => {
                    for kk in 0..k {
                        let tasks: Vec<_> = (0..n).map(|p| task(p, kk)).collect();
                        rep.absorb(&e.run_phase(&tasks, &mut items, |t| t.0, spin_body).unwrap());
                    }
                }
                ExecMode::Fused => {
                    let tasks: Vec<_> = (0..n)
                        .flat_map(|p| (0..k).map(move |kk| task(p, kk)))
                        .collect();
                    rep.absorb(&e.run_phase(&tasks, &mut items, |t| t.0, spin_body).unwrap());
                }
            }
            (start.elapsed().as_secs_f64(), rep)
        };
        let (fine, rf) = time(ExecMode::Fine);
        let (fused, rz) = time(ExecMode::Fused);
        assert!(fine >= (n * k) as f64 * o);
        let model = ((k as f64) * o + k as f64 * t) / (o + k as f64 * t);
        let measured = fine / fused;
        assert!(
            (measured / model - 1.0).abs() < 0.3,
            "measured {measured} model {model}"
        );
        assert!(rf.busy_fraction() < rz.busy_fraction());
        assert!((0.0..=1.0).contains(&rf.busy_fraction()));
        assert_eq!(rf.dispatches, rz.dispatches * k);
    }
}
