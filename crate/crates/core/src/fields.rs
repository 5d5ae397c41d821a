//! Per-patch nodal storage of conservative variables with ghost layers, and
//! the transfers that fill those ghosts: same-level halo exchange,
//! coarse-to-fine interpolation and fine-to-coarse injection.
//!
//! Nodes are collocated. A child patch has half the parent's spacing and its
//! even nodes coincide with parent nodes, so fine node `2k` sits on coarse
//! node `k`.

use crate::error::{Error, Result};
use crate::gas::Conservative;
use crate::mesh::{dir, Mesh, PatchId};

/// Ghost width. The WENO5 edge states at `i ± 3/2`, needed by the
/// fourth-order staggered divergence, reach four nodes past the patch.
pub const NUM_GHOSTS: usize = 4;

/// Cubic Lagrange weights for the midpoint of nodes 1 and 2 in a 4-node stencil.
const MID_WEIGHTS: [f64; 4] = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];

/// Physical extent of the root scaffold and the per-patch resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub roots_nx: usize,
    pub roots_ny: usize,
    /// Interior nodes per patch side.
    pub patch_n: usize,
}

impl Domain {
    pub fn nodes_x(&self, level: u32) -> i64 {
        ((self.roots_nx * self.patch_n) as i64) << level
    }

    pub fn nodes_y(&self, level: u32) -> i64 {
        ((self.roots_ny * self.patch_n) as i64) << level
    }

    pub fn dx(&self, level: u32) -> f64 {
        (self.x_max - self.x_min) / self.nodes_x(level) as f64
    }

    pub fn dy(&self, level: u32) -> f64 {
        (self.y_max - self.y_min) / self.nodes_y(level) as f64
    }

    /// Coordinate of global node `g` at `level`, node `g` sitting at
    /// `x_min + g * dx`. Evaluated about the domain center so that nodes
    /// mirrored through the center get exactly negated offsets.
    pub fn node_x(&self, level: u32, g: i64) -> f64 {
        axis_coord(self.x_min, self.x_max, self.nodes_x(level), g)
    }

    pub fn node_y(&self, level: u32, g: i64) -> f64 {
        axis_coord(self.y_min, self.y_max, self.nodes_y(level), g)
    }
}

fn axis_coord(lo: f64, hi: f64, n: i64, g: i64) -> f64 {
    let half = 0.5 * (hi - lo);
    let center = lo + half;
    center + half * ((2 * g - n) as f64 / n as f64)
}

/// Node array of one patch covering `[-ng, n + ng)` in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchField {
    n: usize,
    ng: usize,
    data: Vec<Conservative>,
}

impl PatchField {
    pub fn new(n: usize, ng: usize) -> Self {
        let w = n + 2 * ng;
        Self {
            n,
            ng,
            data: vec![Conservative::ZERO; w * w],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ng(&self) -> usize {
        self.ng
    }

    /// Row stride of the underlying storage.
    pub fn stride(&self) -> usize {
        self.n + 2 * self.ng
    }

    #[inline]
    pub fn index(&self, i: isize, j: isize) -> usize {
        let ng = self.ng as isize;
        debug_assert!(i >= -ng && j >= -ng && i < self.n as isize + ng && j < self.n as isize + ng);
        (j + ng) as usize * self.stride() + (i + ng) as usize
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize) -> Conservative {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, u: Conservative) {
        let k = self.index(i, j);
        self.data[k] = u;
    }

    pub fn data(&self) -> &[Conservative] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Conservative] {
        &mut self.data
    }

    pub fn fill(&mut self, u: Conservative) {
        self.data.fill(u);
    }

    /// Iterates interior `(i, j)` pairs in row-major order.
    pub fn interior(&self) -> impl Iterator<Item = (isize, isize)> {
        let n = self.n as isize;
        (0..n).flat_map(move |j| (0..n).map(move |i| (i, j)))
    }
}

/// Index range of the ghost block on one side of a patch along one axis.
fn ghost_range(offset: i64, n: usize, ng: usize) -> std::ops::Range<isize> {
    match offset {
        -1 => -(ng as isize)..0,
        0 => 0..n as isize,
        _ => n as isize..(n + ng) as isize,
    }
}

/// One [`PatchField`] slot per patch id, allocated while the patch is active.
#[derive(Debug, Clone)]
pub struct FieldStore {
    slots: Vec<Option<PatchField>>,
    domain: Domain,
    ng: usize,
}

impl FieldStore {
    /// Allocates fields for every active patch of `mesh`.
    pub fn new(mesh: &Mesh, domain: Domain) -> Result<Self> {
        if domain.patch_n < NUM_GHOSTS || domain.patch_n % 2 != 0 {
            return Err(Error::Config(format!(
                "patch size must be even and at least {NUM_GHOSTS}, got {}",
                domain.patch_n
            )));
        }
        if domain.roots_nx != mesh.roots_nx() || domain.roots_ny != mesh.roots_ny() {
            return Err(Error::Config(
                "domain and mesh root scaffolds differ".into(),
            ));
        }
        let mut store = Self {
            slots: vec![None; mesh.capacity()],
            domain,
            ng: NUM_GHOSTS,
        };
        store.sync_allocation(mesh);
        Ok(store)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn patch_n(&self) -> usize {
        self.domain.patch_n
    }

    pub fn ng(&self) -> usize {
        self.ng
    }

    /// Allocates slots for newly active patches and frees slots of removed
    /// ones, keeping "active patch <=> allocated field".
    pub fn sync_allocation(&mut self, mesh: &Mesh) {
        for (i, slot) in self.slots.iter_mut().enumerate() {
            let active = mesh.is_active(PatchId(i));
            match (active, slot.is_some()) {
                (true, false) => *slot = Some(PatchField::new(self.domain.patch_n, self.ng)),
                (false, true) => *slot = None,
                _ => {}
            }
        }
    }

    pub fn get(&self, p: PatchId) -> Option<&PatchField> {
        self.slots.get(p.0).and_then(Option::as_ref)
    }

    pub fn get_mut(&mut self, p: PatchId) -> Option<&mut PatchField> {
        self.slots.get_mut(p.0).and_then(Option::as_mut)
    }

    pub fn field(&self, p: PatchId) -> &PatchField {
        self.get(p)
            .unwrap_or_else(|| panic!("no field for patch {p}"))
    }

    pub fn field_mut(&mut self, p: PatchId) -> &mut PatchField {
        self.get_mut(p)
            .unwrap_or_else(|| panic!("no field for patch {p}"))
    }

    pub(crate) fn slots_mut(&mut self) -> &mut [Option<PatchField>] {
        &mut self.slots
    }

    /// Global node index of local node `(i, j)` of patch `p`.
    pub fn global_index(&self, mesh: &Mesh, p: PatchId, i: isize, j: isize) -> (i64, i64) {
        let o = mesh.meta(p).origin;
        let n = self.domain.patch_n as i64;
        (o.0 * n + i as i64, o.1 * n + j as i64)
    }

    pub fn node_xy(&self, mesh: &Mesh, p: PatchId, i: isize, j: isize) -> (f64, f64) {
        let level = mesh.meta(p).level;
        let (gi, gj) = self.global_index(mesh, p, i, j);
        (self.domain.node_x(level, gi), self.domain.node_y(level, gj))
    }

    /// Sets every interior node of every active patch from a pointwise
    /// initializer `f(x, y)`.
    pub fn init_with(&mut self, mesh: &Mesh, mut f: impl FnMut(f64, f64) -> Conservative) {
        for p in mesh.active_patches() {
            let coords: Vec<_> = self
                .field(p)
                .interior()
                .map(|(i, j)| (i, j, self.node_xy(mesh, p, i, j)))
                .collect();
            let field = self.field_mut(p);
            for (i, j, (x, y)) in coords {
                field.set(i, j, f(x, y));
            }
        }
    }

    /// Fills the 4 side and 4 corner ghost blocks of every patch at `level`
    /// from same-level neighbors. Blocks without a same-level neighbor are
    /// left for [`FieldStore::fill_coarse_fine_ghosts`] or the boundary fill.
    pub fn halo_exchange(&mut self, mesh: &Mesh, level: u32) {
        let n = self.domain.patch_n;
        let ng = self.ng;
        for p in mesh.patches_at_level(level) {
            let mut own = self.slots[p.0].take().expect("active patch has a field");
            for d in 0..8 {
                let Some(q) = mesh.meta(p).nbr[d] else {
                    continue;
                };
                let (dx, dy) = dir::OFFSETS[d];
                let (si, sj) = (dx as isize * n as isize, dy as isize * n as isize);
                for j in ghost_range(dy, n, ng) {
                    for i in ghost_range(dx, n, ng) {
                        let v = if q == p {
                            own.get(i - si, j - sj)
                        } else {
                            self.slots[q.0]
                                .as_ref()
                                .expect("neighbor field")
                                .get(i - si, j - sj)
                        };
                        own.set(i, j, v);
                    }
                }
            }
            self.slots[p.0] = Some(own);
        }
    }

    /// Interpolates the value of fine global node `(gi, gj)` from the parent
    /// patch `parent` (interior plus ghosts), exact for bicubic data.
    fn interp_from_parent(&self, mesh: &Mesh, parent: PatchId, gi: i64, gj: i64) -> Conservative {
        let n = self.domain.patch_n as i64;
        let po = mesh.meta(parent).origin;
        let pf = self.field(parent);
        let ax = gi - 2 * po.0 * n;
        let ay = gj - 2 * po.1 * n;
        let sx = stencil_1d(ax);
        let sy = stencil_1d(ay);
        let mut acc = [0.0; 4];
        for &(kj, wy) in sy.as_slice() {
            let mut row = [0.0; 4];
            for &(ki, wx) in sx.as_slice() {
                let u = pf.get(ki as isize, kj as isize).to_array();
                for c in 0..4 {
                    row[c] += wx * u[c];
                }
            }
            for c in 0..4 {
                acc[c] += wy * row[c];
            }
        }
        Conservative::from_array(acc)
    }

    /// Fills the interiors of `p`'s children from `p` by bicubic
    /// interpolation (injection at coinciding nodes). `p`'s ghosts must be
    /// current.
    pub fn prolong_to_children(&mut self, mesh: &Mesh, p: PatchId) -> Result<()> {
        let kids = mesh.meta(p).children.ok_or(Error::NoChildren(p))?;
        for c in kids {
            let pts: Vec<_> = self
                .field(c)
                .interior()
                .map(|(i, j)| {
                    let (gi, gj) = self.global_index(mesh, c, i, j);
                    (i, j, self.interp_from_parent(mesh, p, gi, gj))
                })
                .collect();
            let f = self.field_mut(c);
            for (i, j, u) in pts {
                f.set(i, j, u);
            }
        }
        Ok(())
    }

    /// Injects coinciding child nodes into the interior of `p`.
    pub fn restrict_to_parent(&mut self, mesh: &Mesh, p: PatchId) -> Result<()> {
        let kids = mesh.meta(p).children.ok_or(Error::NoChildren(p))?;
        let n = self.domain.patch_n as isize;
        let half = n / 2;
        let mut parent = self.slots[p.0].take().expect("active patch has a field");
        for l in 0..n {
            for k in 0..n {
                let (qx, qy) = ((k >= half) as usize, (l >= half) as usize);
                let child = self.field(kids[qx + 2 * qy]);
                parent.set(
                    k,
                    l,
                    child.get(2 * k - qx as isize * n, 2 * l - qy as isize * n),
                );
            }
        }
        self.slots[p.0] = Some(parent);
        Ok(())
    }

    /// Fills the ghost blocks of `p` that face a coarser leaf by
    /// interpolating from `p`'s parent.
    pub fn fill_coarse_fine_ghosts(&mut self, mesh: &Mesh, p: PatchId) {
        let m = mesh.meta(p);
        let Some(parent) = m.parent else {
            return;
        };
        let n = self.domain.patch_n;
        let mut writes = Vec::new();
        for d in 0..8 {
            if m.nbr[d].is_some() || mesh.is_physical_boundary(p, d) {
                continue;
            }
            let (dx, dy) = dir::OFFSETS[d];
            for j in ghost_range(dy, n, self.ng) {
                for i in ghost_range(dx, n, self.ng) {
                    let (gi, gj) = self.global_index(mesh, p, i, j);
                    writes.push((i, j, self.interp_from_parent(mesh, parent, gi, gj)));
                }
            }
        }
        let f = self.field_mut(p);
        for (i, j, u) in writes {
            f.set(i, j, u);
        }
    }

    /// Zero-gradient fill of ghost blocks that lie past a physical boundary.
    pub fn fill_physical_boundary(&mut self, mesh: &Mesh, p: PatchId) {
        let n = self.domain.patch_n as isize;
        let ng = self.ng;
        let mut writes = Vec::new();
        for d in 0..8 {
            if !mesh.is_physical_boundary(p, d) {
                continue;
            }
            let (dx, dy) = dir::OFFSETS[d];
            for j in ghost_range(dy, n as usize, ng) {
                for i in ghost_range(dx, n as usize, ng) {
                    let src = (i.clamp(0, n - 1), j.clamp(0, n - 1));
                    writes.push((i, j, src));
                }
            }
        }
        let f = self.field_mut(p);
        for (i, j, (si, sj)) in writes {
            let v = f.get(si, sj);
            f.set(i, j, v);
        }
    }

    /// Brings every ghost node up to date: restriction finest-first, then per
    /// level (coarsest-first) same-level exchange, coarse-fine fill and
    /// boundary fill.
    pub fn sync_ghosts(&mut self, mesh: &Mesh) {
        let max_level = mesh.max_level();
        for level in (0..max_level).rev() {
            for p in mesh.patches_at_level(level) {
                if mesh.meta(p).has_children() {
                    self.restrict_to_parent(mesh, p)
                        .expect("patch has children");
                }
            }
        }
        self.sync_ghosts_no_restrict(mesh);
    }

    /// Ghost fill without the fine-to-coarse pass; used right after
    /// prolongation, when parents already hold the authoritative data.
    pub fn sync_ghosts_no_restrict(&mut self, mesh: &Mesh) {
        for level in 0..=mesh.max_level() {
            self.halo_exchange(mesh, level);
            for p in mesh.patches_at_level(level) {
                self.fill_coarse_fine_ghosts(mesh, p);
                if !mesh.periodic() {
                    self.fill_physical_boundary(mesh, p);
                }
            }
        }
    }

    /// Uniform array of the solution at `level` resolution, row-major with x
    /// fastest. Nodes covered by a patch at `level` take its value; other
    /// nodes take the value of the coarser node at or below them.
    pub fn composite(&self, mesh: &Mesh, level: u32) -> Vec<Conservative> {
        let nx = self.domain.nodes_x(level) as usize;
        let ny = self.domain.nodes_y(level) as usize;
        let n = self.domain.patch_n as i64;
        let mut out = vec![Conservative::ZERO; nx * ny];
        for lc in 0..=level.min(mesh.max_level()) {
            let scale = 1i64 << (level - lc);
            for p in mesh.patches_at_level(lc) {
                let o = mesh.meta(p).origin;
                let f = self.field(p);
                for (i, j) in f.interior() {
                    let u = f.get(i, j);
                    let (gi, gj) = ((o.0 * n + i as i64) * scale, (o.1 * n + j as i64) * scale);
                    for by in 0..scale {
                        let row = (gj + by) as usize * nx;
                        for bx in 0..scale {
                            out[row + (gi + bx) as usize] = u;
                        }
                    }
                }
            }
        }
        out
    }
}

/// `(node, weight)` pairs for fine offset `a` (in fine-node units from the
/// parent's corner): injection when `a` is even, a centered cubic otherwise.
fn stencil_1d(a: i64) -> Stencil {
    let k = a.div_euclid(2);
    if a.rem_euclid(2) == 0 {
        Stencil {
            pts: [(k, 1.0), (0, 0.0), (0, 0.0), (0, 0.0)],
            len: 1,
        }
    } else {
        Stencil {
            pts: [
                (k - 1, MID_WEIGHTS[0]),
                (k, MID_WEIGHTS[1]),
                (k + 1, MID_WEIGHTS[2]),
                (k + 2, MID_WEIGHTS[3]),
            ],
            len: 4,
        }
    }
}

struct Stencil {
    pts: [(i64, f64); 4],
    len: usize,
}

impl Stencil {
    fn as_slice(&self) -> &[(i64, f64)] {
        &self.pts[..self.len]
    }
}
