//! Per-patch right-hand side `-dF/dx - dG/dy`, split into kernels that the
//! executor can dispatch one by one or fused.
//!
//! Each axis is swept with 1D lines through the patch. Along a line the edge
//! `e` sits between nodes `e` and `e + 1`; edges `-2..=n` are needed for the
//! divergence at nodes `0..n`.

use crate::error::{Error, Result};
use crate::fields::{FieldStore, PatchField};
use crate::gas::{Conservative, GasModel};
use crate::mesh::{Mesh, PatchId};
use crate::numerics::eigen::EigenSystem;
use crate::numerics::flux::{local_flux, local_prim, local_rusanov, Axis};
use crate::numerics::stencil::{midpoint4, staggered_derivative};
use crate::numerics::weno::{weno5_left, weno5_right, IDEAL};
use crate::numerics::{SchemeConfig, SchemeMode};

/// Patch-specific inputs to the kernels.
#[derive(Debug, Clone, Copy)]
pub struct PatchCtx {
    pub patch: PatchId,
    pub dx: f64,
    pub dy: f64,
}

impl PatchCtx {
    pub fn new(store: &FieldStore, mesh: &Mesh, patch: PatchId) -> Self {
        let level = mesh.meta(patch).level;
        Self {
            patch,
            dx: store.domain().dx(level),
            dy: store.domain().dy(level),
        }
    }
}

/// Working arrays of one patch. Edge arrays are reused by both sweeps.
#[derive(Debug, Clone)]
pub struct PatchScratch {
    n: usize,
    ng: usize,
    /// Primitive `(rho, u, v, p)` at every node, ghosts included.
    prim: Vec<[f64; 4]>,
    /// Rotated-frame edge values: primitives for the central scheme,
    /// left-biased conservative states for WENO.
    edge_l: Vec<[f64; 4]>,
    edge_r: Vec<[f64; 4]>,
    flux: Vec<[f64; 4]>,
    rhs: Vec<[f64; 4]>,
}

impl PatchScratch {
    pub fn new(n: usize, ng: usize) -> Self {
        let w = n + 2 * ng;
        let edges = n * (n + 3);
        Self {
            n,
            ng,
            prim: vec![[0.0; 4]; w * w],
            edge_l: vec![[0.0; 4]; edges],
            edge_r: vec![[0.0; 4]; edges],
            flux: vec![[0.0; 4]; edges],
            rhs: vec![[0.0; 4]; n * n],
        }
    }

    pub fn for_field(f: &PatchField) -> Self {
        Self::new(f.n(), f.ng())
    }

    /// RHS at interior node `(i, j)`.
    #[inline]
    pub fn rhs(&self, i: usize, j: usize) -> Conservative {
        Conservative::from_array(self.rhs[j * self.n + i])
    }

    #[inline]
    fn prim_at(&self, i: isize, j: isize) -> [f64; 4] {
        let w = self.n + 2 * self.ng;
        let ng = self.ng as isize;
        self.prim[(j + ng) as usize * w + (i + ng) as usize]
    }

    #[inline]
    fn edge_index(&self, line: usize, e: isize) -> usize {
        line * (self.n + 3) + (e + 2) as usize
    }
}

#[inline]
fn node(axis: Axis, line: usize, k: isize) -> (isize, isize) {
    match axis {
        Axis::X => (k, line as isize),
        Axis::Y => (line as isize, k),
    }
}

fn at(ctx: &PatchCtx, (i, j): (isize, isize), e: Error) -> Error {
    Error::PatchState {
        patch: ctx.patch,
        i,
        j,
        source: Box::new(e),
    }
}

/// Primitive variables on the cross-shaped region the two sweeps read.
pub fn primitives(
    u: &PatchField,
    s: &mut PatchScratch,
    g: &GasModel,
    ctx: &PatchCtx,
) -> Result<()> {
    let n = s.n as isize;
    let ng = s.ng as isize;
    let w = s.n + 2 * s.ng;
    for j in -ng..n + ng {
        let j_in = (0..n).contains(&j);
        for i in -ng..n + ng {
            if !j_in && !(0..n).contains(&i) {
                continue;
            }
            let c = u.get(i, j).to_array();
            let p = local_prim(c, g.gamma).map_err(|e| at(ctx, (i, j), e))?;
            s.prim[(j + ng) as usize * w + (i + ng) as usize] = p;
        }
    }
    Ok(())
}

/// Edge values along `axis` for every line of the patch.
pub fn interpolate(
    axis: Axis,
    u: &PatchField,
    s: &mut PatchScratch,
    g: &GasModel,
    cfg: &SchemeConfig,
) -> f64 {
    match cfg.mode {
        SchemeMode::Central4 => {
            interp_central(axis, s);
            0.0
        }
        SchemeMode::Weno5Rusanov => interp_weno::<false>(axis, u, s, g, cfg),
    }
}

fn interp_central(axis: Axis, s: &mut PatchScratch) {
    let n = s.n as isize;
    for line in 0..s.n {
        for e in -2..=n {
            let p = |k: isize| {
                let (i, j) = node(axis, line, k);
                axis.to_local(s.prim_at(i, j))
            };
            let (a, b, c, d) = (p(e - 1), p(e), p(e + 1), p(e + 2));
            let v = std::array::from_fn(|m| midpoint4(a[m], b[m], c[m], d[m]));
            let k = s.edge_index(line, e);
            s.edge_l[k] = v;
        }
    }
}

/// WENO edge states. With `TRACK` the return value is the largest deviation
/// of any nonlinear weight from its ideal value.
fn interp_weno<const TRACK: bool>(
    axis: Axis,
    u: &PatchField,
    s: &mut PatchScratch,
    g: &GasModel,
    cfg: &SchemeConfig,
) -> f64 {
    let n = s.n as isize;
    let eps = cfg.weno_epsilon;
    let mut dev = 0.0f64;
    let mut track = |w: [f64; 3]| {
        if TRACK {
            for (a, b) in w.iter().zip(IDEAL) {
                dev = dev.max((a - b).abs());
            }
        }
    };
    for line in 0..s.n {
        for e in -2..=n {
            let cons: [[f64; 4]; 6] = std::array::from_fn(|m| {
                let (i, j) = node(axis, line, e - 2 + m as isize);
                axis.to_local(u.get(i, j).to_array())
            });
            let (ul, ur) = if cfg.characteristic {
                let (i0, j0) = node(axis, line, e);
                let (i1, j1) = node(axis, line, e + 1);
                let a = s.prim_at(i0, j0);
                let b = s.prim_at(i1, j1);
                let avg = axis.to_local(std::array::from_fn(|m| 0.5 * (a[m] + b[m])));
                let es = EigenSystem::local(avg, g.gamma);
                let ch: [[f64; 4]; 6] = std::array::from_fn(|m| es.to_characteristic(cons[m]));
                let mut wl = [0.0; 4];
                let mut wr = [0.0; 4];
                for f in 0..4 {
                    let (l, lw) =
                        weno5_left([ch[0][f], ch[1][f], ch[2][f], ch[3][f], ch[4][f]], eps);
                    let (r, rw) =
                        weno5_right([ch[1][f], ch[2][f], ch[3][f], ch[4][f], ch[5][f]], eps);
                    track(lw);
                    track(rw);
                    wl[f] = l;
                    wr[f] = r;
                }
                (es.to_conservative(wl), es.to_conservative(wr))
            } else {
                let mut ul = [0.0; 4];
                let mut ur = [0.0; 4];
                for f in 0..4 {
                    let c = &cons;
                    let (l, lw) = weno5_left([c[0][f], c[1][f], c[2][f], c[3][f], c[4][f]], eps);
                    let (r, rw) = weno5_right([c[1][f], c[2][f], c[3][f], c[4][f], c[5][f]], eps);
                    track(lw);
                    track(rw);
                    ul[f] = l;
                    ur[f] = r;
                }
                (ul, ur)
            };
            let k = s.edge_index(line, e);
            s.edge_l[k] = ul;
            s.edge_r[k] = ur;
        }
    }
    dev
}

/// One flux per edge along `axis`, kept in the rotated frame.
pub fn edge_fluxes(
    axis: Axis,
    s: &mut PatchScratch,
    g: &GasModel,
    cfg: &SchemeConfig,
    ctx: &PatchCtx,
) -> Result<()> {
    let n = s.n as isize;
    for line in 0..s.n {
        for e in -2..=n {
            let k = s.edge_index(line, e);
            let f = match cfg.mode {
                SchemeMode::Central4 => {
                    let w = s.edge_l[k];
                    if !(w[0] > 0.0) {
                        return Err(at(
                            ctx,
                            node(axis, line, e),
                            Error::NonPositiveDensity(w[0]),
                        ));
                    }
                    if !(w[3] > 0.0) {
                        return Err(at(
                            ctx,
                            node(axis, line, e),
                            Error::NonPositivePressure(w[3]),
                        ));
                    }
                    local_flux(w, g.gamma)
                }
                SchemeMode::Weno5Rusanov => local_rusanov(s.edge_l[k], s.edge_r[k], g.gamma)
                    .map_err(|err| at(ctx, node(axis, line, e), err))?,
            };
            s.flux[k] = f;
        }
    }
    Ok(())
}

/// Staggered divergence along `axis`. The x sweep overwrites the RHS, the y
/// sweep subtracts from it.
pub fn divergence(axis: Axis, s: &mut PatchScratch, ctx: &PatchCtx) {
    let n = s.n;
    let h = match axis {
        Axis::X => ctx.dx,
        Axis::Y => ctx.dy,
    };
    for line in 0..n {
        for k in 0..n {
            let b = s.edge_index(line, k as isize - 2);
            let f = &s.flux[b..b + 4];
            let d: [f64; 4] = std::array::from_fn(|m| {
                staggered_derivative(f[0][m], f[1][m], f[2][m], f[3][m], h)
            });
            let d = axis.to_global(d);
            let (i, j) = match axis {
                Axis::X => (k, line),
                Axis::Y => (line, k),
            };
            let r = &mut s.rhs[j * n + i];
            match axis {
                Axis::X => *r = [-d[0], -d[1], -d[2], -d[3]],
                Axis::Y => {
                    for m in 0..4 {
                        r[m] -= d[m];
                    }
                }
            }
        }
    }
}

/// Runs the whole per-patch pipeline into `s`.
pub fn patch_rhs(
    u: &PatchField,
    s: &mut PatchScratch,
    g: &GasModel,
    cfg: &SchemeConfig,
    ctx: &PatchCtx,
) -> Result<()> {
    primitives(u, s, g, ctx)?;
    for axis in Axis::BOTH {
        interpolate(axis, u, s, g, cfg);
        edge_fluxes(axis, s, g, cfg, ctx)?;
        divergence(axis, s, ctx);
    }
    Ok(())
}

/// RHS at the interior nodes of `p`, row-major. Ghosts must be current.
pub fn compute_rhs(
    store: &FieldStore,
    m: &Mesh,
    g: &GasModel,
    cfg: &SchemeConfig,
    p: PatchId,
) -> Result<Vec<Conservative>> {
    let f = store.field(p);
    let mut s = PatchScratch::for_field(f);
    patch_rhs(f, &mut s, g, cfg, &PatchCtx::new(store, m, p))?;
    Ok(s.rhs.iter().map(|&r| Conservative::from_array(r)).collect())
}

/// Largest deviation of any WENO weight from its ideal value over all leaf
/// edges and both axes. Ghosts must be current.
pub fn weno_weight_deviation(
    store: &FieldStore,
    m: &Mesh,
    g: &GasModel,
    cfg: &SchemeConfig,
) -> Result<f64> {
    let mut dev = 0.0f64;
    for p in m.leaves() {
        let f = store.field(p);
        let mut s = PatchScratch::for_field(f);
        primitives(f, &mut s, g, &PatchCtx::new(store, m, p))?;
        for axis in Axis::BOTH {
            dev = dev.max(interp_weno::<true>(axis, f, &mut s, g, cfg));
        }
    }
    Ok(dev)
}
