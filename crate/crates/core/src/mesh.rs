//! Quadtree patch hierarchy over a Cartesian root scaffold.
//!
//! Every patch has the same number of nodes per side. Root patches (level 0)
//! tile the domain and are never removed. A patch refines into four children
//! that each cover one quadrant at twice the resolution. Two rules keep the
//! hierarchy usable by the stencils:
//!
//! * R1: root patches are permanent.
//! * R2: a patch with children has its whole Moore neighborhood (the 8
//!   surrounding same-level patches) active. Physical-boundary positions of
//!   a non-periodic scaffold are exempt.
//!
//! Refinement follows the recursive procedure: before a leaf is split, every
//! missing Moore neighbor is created by refining the coarser patch that
//! covers it, recursively. Coarsening only removes a layer of leaf children
//! whose removal cannot orphan a finer neighbor.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchId(pub usize);

impl fmt::Display for PatchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Neighbor slots: 0-3 are N, E, S, W; 4-7 are NE, SE, SW, NW.
pub mod dir {
    pub const N: usize = 0;
    pub const E: usize = 1;
    pub const S: usize = 2;
    pub const W: usize = 3;
    pub const NE: usize = 4;
    pub const SE: usize = 5;
    pub const SW: usize = 6;
    pub const NW: usize = 7;

    pub const OFFSETS: [(i64, i64); 8] = [
        (0, 1),
        (1, 0),
        (0, -1),
        (-1, 0),
        (1, 1),
        (1, -1),
        (-1, -1),
        (-1, 1),
    ];

    pub fn opposite(d: usize) -> usize {
        if d < 4 {
            (d + 2) % 4
        } else {
            4 + (d - 2) % 4
        }
    }

    pub fn from_offset(dx: i64, dy: i64) -> Option<usize> {
        OFFSETS.iter().position(|&o| o == (dx, dy))
    }
}

/// Child quadrants are stored in the order SW, SE, NW, NE, so quadrant `q`
/// sits at `(q & 1, q >> 1)` inside the parent.
pub fn quadrant_offset(q: usize) -> (i64, i64) {
    ((q & 1) as i64, (q >> 1) as i64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchMeta {
    pub level: u32,
    pub nbr: [Option<PatchId>; 8],
    pub parent: Option<PatchId>,
    pub children: Option<[PatchId; 4]>,
    pub refine_req: bool,
    pub coarsen_req: bool,
    pub active: bool,
    /// Lower-left corner in units of patches at this patch's level.
    pub origin: (i64, i64),
}

impl PatchMeta {
    fn inactive() -> Self {
        Self {
            level: 0,
            nbr: [None; 8],
            parent: None,
            children: None,
            refine_req: false,
            coarsen_req: false,
            active: false,
            origin: (0, 0),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn has_children(&self) -> bool {
        self.children.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// R1: a root patch is inactive or malformed.
    RootMissing { patch: PatchId },
    /// A neighbor link disagrees with the patch geometry.
    Reciprocity {
        patch: PatchId,
        dir: usize,
        expected: Option<PatchId>,
        found: Option<PatchId>,
    },
    /// Parent/child links are inconsistent.
    Hierarchy { patch: PatchId, msg: String },
    /// R2: a patch with children has an incomplete Moore neighborhood.
    MooreSupport { patch: PatchId, dir: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RootMissing { patch } => write!(f, "R1: root patch {patch} not active"),
            Violation::Reciprocity {
                patch,
                dir,
                expected,
                found,
            } => write!(
                f,
                "neighbor link {patch}.nbr[{dir}] = {} expected {}",
                fmt_id(*found),
                fmt_id(*expected)
            ),
            Violation::Hierarchy { patch, msg } => write!(f, "hierarchy at {patch}: {msg}"),
            Violation::MooreSupport { patch, dir } => {
                write!(
                    f,
                    "R2: patch {patch} has children but nbr[{dir}] is missing"
                )
            }
        }
    }
}

fn fmt_id(id: Option<PatchId>) -> String {
    id.map_or_else(|| "-1".to_string(), |p| p.0.to_string())
}

/// Result of a single refinement request.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefineOutcome {
    /// New patches in allocation order; parents are always refined before
    /// any patch that depends on them.
    pub created: Vec<PatchId>,
    /// Patches that were split, in the order they were split.
    pub refined: Vec<PatchId>,
    /// Deepest recursion level reached (0 = no recursion).
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    meta: Vec<PatchMeta>,
    free_list: Vec<PatchId>,
    roots: Vec<PatchId>,
    roots_nx: usize,
    roots_ny: usize,
    periodic: bool,
}

impl Mesh {
    pub fn new(
        roots_nx: usize,
        roots_ny: usize,
        num_patches_max: usize,
        periodic: bool,
    ) -> Result<Self> {
        if roots_nx == 0 || roots_ny == 0 {
            return Err(Error::Config("root scaffold must be at least 1x1".into()));
        }
        let n_roots = roots_nx * roots_ny;
        if n_roots > num_patches_max {
            return Err(Error::CapacityExceeded {
                needed: n_roots,
                available: num_patches_max,
            });
        }
        let mut meta = vec![PatchMeta::inactive(); num_patches_max];
        let roots: Vec<PatchId> = (0..n_roots).map(PatchId).collect();
        for j in 0..roots_ny {
            for i in 0..roots_nx {
                let m = &mut meta[j * roots_nx + i];
                m.active = true;
                m.origin = (i as i64, j as i64);
            }
        }
        let free_list = (n_roots..num_patches_max).rev().map(PatchId).collect();
        let mut mesh = Self {
            meta,
            free_list,
            roots,
            roots_nx,
            roots_ny,
            periodic,
        };
        for &r in &mesh.roots.clone() {
            for d in 0..8 {
                let nb = mesh.neighbor_position(0, mesh.meta[r.0].origin, d);
                mesh.meta[r.0].nbr[d] =
                    nb.map(|(x, y)| mesh.roots[y as usize * roots_nx + x as usize]);
            }
        }
        Ok(mesh)
    }

    pub fn capacity(&self) -> usize {
        self.meta.len()
    }

    pub fn free_slots(&self) -> usize {
        self.free_list.len()
    }

    pub fn roots_nx(&self) -> usize {
        self.roots_nx
    }

    pub fn roots_ny(&self) -> usize {
        self.roots_ny
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn roots(&self) -> &[PatchId] {
        &self.roots
    }

    pub fn root_at(&self, i: usize, j: usize) -> PatchId {
        self.roots[j * self.roots_nx + i]
    }

    pub fn meta(&self, p: PatchId) -> &PatchMeta {
        &self.meta[p.0]
    }

    /// Mutable metadata access for request flags and test fixtures.
    /// Structural fields should be left to the refinement and coarsening
    /// operations.
    pub fn meta_mut(&mut self, p: PatchId) -> &mut PatchMeta {
        &mut self.meta[p.0]
    }

    pub fn is_active(&self, p: PatchId) -> bool {
        self.meta.get(p.0).is_some_and(|m| m.active)
    }

    fn require_active(&self, p: PatchId) -> Result<&PatchMeta> {
        match self.meta.get(p.0) {
            Some(m) if m.active => Ok(m),
            _ => Err(Error::InactivePatch(p)),
        }
    }

    pub fn neighbor(&self, p: PatchId, d: usize) -> Result<Option<PatchId>> {
        Ok(self.require_active(p)?.nbr[d])
    }

    pub fn active_patches(&self) -> impl Iterator<Item = PatchId> + '_ {
        self.meta
            .iter()
            .enumerate()
            .filter(|(_, m)| m.active)
            .map(|(i, _)| PatchId(i))
    }

    /// Active patches without children, ascending pid.
    pub fn leaves(&self) -> Vec<PatchId> {
        self.active_patches()
            .filter(|&p| self.meta[p.0].is_leaf())
            .collect()
    }

    pub fn max_level(&self) -> u32 {
        self.active_patches()
            .map(|p| self.meta[p.0].level)
            .max()
            .unwrap_or(0)
    }

    pub fn patches_at_level(&self, level: u32) -> Vec<PatchId> {
        self.active_patches()
            .filter(|&p| self.meta[p.0].level == level)
            .collect()
    }

    /// Patch counts per side at `level`.
    pub fn level_extent(&self, level: u32) -> (i64, i64) {
        (
            (self.roots_nx as i64) << level,
            (self.roots_ny as i64) << level,
        )
    }

    /// Position of the same-level neighbor in direction `d`, wrapped on a
    /// periodic scaffold; `None` past a physical boundary.
    fn neighbor_position(&self, level: u32, origin: (i64, i64), d: usize) -> Option<(i64, i64)> {
        let (nx, ny) = self.level_extent(level);
        let (dx, dy) = dir::OFFSETS[d];
        let (x, y) = (origin.0 + dx, origin.1 + dy);
        if self.periodic {
            Some((x.rem_euclid(nx), y.rem_euclid(ny)))
        } else if x < 0 || y < 0 || x >= nx || y >= ny {
            None
        } else {
            Some((x, y))
        }
    }

    pub fn is_physical_boundary(&self, p: PatchId, d: usize) -> bool {
        let m = &self.meta[p.0];
        self.neighbor_position(m.level, m.origin, d).is_none()
    }

    /// Direction, as seen from `p`'s parent, of the parent-level patch that
    /// covers `p`'s neighbor position `d`. `None` means the neighbor is a
    /// sibling.
    fn parent_level_dir(&self, p: PatchId, d: usize) -> Option<usize> {
        let m = &self.meta[p.0];
        let (qx, qy) = (m.origin.0.rem_euclid(2), m.origin.1.rem_euclid(2));
        let (dx, dy) = dir::OFFSETS[d];
        let px = (qx + dx).div_euclid(2);
        let py = (qy + dy).div_euclid(2);
        if px == 0 && py == 0 {
            None
        } else {
            dir::from_offset(px, py)
        }
    }

    /// True when `p` has a neighbor at `d`, or will have one once every patch
    /// in `planned` has been split.
    fn neighbor_available(&self, p: PatchId, d: usize, planned: &[PatchId]) -> bool {
        if self.meta[p.0].nbr[d].is_some() {
            return true;
        }
        let Some(parent) = self.meta[p.0].parent else {
            return false;
        };
        match self.parent_level_dir(p, d) {
            None => true,
            Some(pd) => self.meta[parent.0].nbr[pd].is_some_and(|r| planned.contains(&r)),
        }
    }

    fn plan_refinement(
        &self,
        p: PatchId,
        depth: usize,
        plan: &mut Vec<PatchId>,
        max_depth: &mut usize,
    ) {
        if plan.contains(&p) {
            return;
        }
        *max_depth = (*max_depth).max(depth);
        for d in 0..8 {
            if self.neighbor_available(p, d, plan) || self.is_physical_boundary(p, d) {
                continue;
            }
            // Roots always see their full neighborhood, so a gap implies a
            // parent whose own neighborhood is complete (R2).
            let parent = self.meta[p.0]
                .parent
                .expect("missing neighbor of a root patch");
            let pd = self
                .parent_level_dir(p, d)
                .expect("sibling neighbors always exist");
            let Some(r) = self.meta[parent.0].nbr[pd] else {
                continue;
            };
            self.plan_refinement(r, depth + 1, plan, max_depth);
        }
        plan.push(p);
    }

    /// Splits leaf `p` into four children, first refining whatever coarser
    /// patches are needed to give `p` a complete Moore neighborhood. On
    /// `CapacityExceeded` the mesh is left untouched.
    pub fn refine_patch(&mut self, p: PatchId) -> Result<RefineOutcome> {
        let m = self.require_active(p)?;
        if m.has_children() {
            return Err(Error::NotALeaf(p));
        }
        let mut plan = Vec::new();
        let mut depth = 0;
        self.plan_refinement(p, 0, &mut plan, &mut depth);
        let needed = 4 * plan.len();
        if needed > self.free_list.len() {
            return Err(Error::CapacityExceeded {
                needed,
                available: self.free_list.len(),
            });
        }
        let mut created = Vec::with_capacity(needed);
        for &r in &plan {
            created.extend(self.split(r));
        }
        Ok(RefineOutcome {
            created,
            refined: plan,
            depth,
        })
    }

    fn split(&mut self, p: PatchId) -> [PatchId; 4] {
        let level = self.meta[p.0].level + 1;
        let (ox, oy) = self.meta[p.0].origin;
        let mut kids = [PatchId(0); 4];
        for (q, kid) in kids.iter_mut().enumerate() {
            let id = self.free_list.pop().expect("capacity checked by caller");
            let (qx, qy) = quadrant_offset(q);
            self.meta[id.0] = PatchMeta {
                level,
                nbr: [None; 8],
                parent: Some(p),
                children: None,
                refine_req: false,
                coarsen_req: false,
                active: true,
                origin: (2 * ox + qx, 2 * oy + qy),
            };
            *kid = id;
        }
        self.meta[p.0].children = Some(kids);
        for (q, &c) in kids.iter().enumerate() {
            let (qx, qy) = quadrant_offset(q);
            for d in 0..8 {
                let (dx, dy) = dir::OFFSETS[d];
                let (tx, ty) = (qx + dx, qy + dy);
                let (px, py) = (tx.div_euclid(2), ty.div_euclid(2));
                let target_q = (tx.rem_euclid(2) + 2 * ty.rem_euclid(2)) as usize;
                let nb = if px == 0 && py == 0 {
                    Some(kids[target_q])
                } else {
                    let pd = dir::from_offset(px, py).unwrap();
                    self.meta[p.0].nbr[pd]
                        .and_then(|r| self.meta[r.0].children)
                        .map(|rc| rc[target_q])
                };
                self.meta[c.0].nbr[d] = nb;
                if let Some(q) = nb {
                    self.meta[q.0].nbr[dir::opposite(d)] = Some(c);
                }
            }
        }
        kids
    }

    /// Coarsening admissibility. Roots and leaves never coarsen. A request
    /// is also refused when a child has children of its own, or when a child
    /// belongs to the Moore neighborhood of a same-level patch that has
    /// children (removing it would break R2 one level up).
    pub fn is_coarsening_allowed(&self, p: PatchId) -> Result<bool> {
        let m = self.require_active(p)?;
        if m.level == 0 {
            return Ok(false);
        }
        let Some(kids) = m.children else {
            return Ok(false);
        };
        for &c in &kids {
            let cm = &self.meta[c.0];
            if cm.has_children() {
                return Ok(false);
            }
            let supports_refined = cm
                .nbr
                .iter()
                .flatten()
                .any(|q| !kids.contains(q) && self.meta[q.0].has_children());
            if supports_refined {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Removes the children of `p` unconditionally. Callers check
    /// [`Mesh::is_coarsening_allowed`] first.
    fn delete_children(&mut self, p: PatchId) -> [PatchId; 4] {
        let kids = self.meta[p.0].children.take().expect("patch has children");
        for &c in &kids {
            for d in 0..8 {
                if let Some(q) = self.meta[c.0].nbr[d] {
                    if !kids.contains(&q) && self.meta[q.0].nbr[dir::opposite(d)] == Some(c) {
                        self.meta[q.0].nbr[dir::opposite(d)] = None;
                    }
                }
            }
        }
        for &c in &kids {
            self.meta[c.0] = PatchMeta::inactive();
            self.free_list.push(c);
        }
        kids
    }

    /// Processes coarsening requests in ascending pid order. Every request
    /// flag is cleared whether or not it was honored. Returns the patches
    /// that lost their children.
    pub fn coarsening_pass(&mut self) -> Vec<PatchId> {
        let mut coarsened = Vec::new();
        for i in 0..self.meta.len() {
            let p = PatchId(i);
            if !self.meta[i].active || !self.meta[i].coarsen_req {
                continue;
            }
            self.meta[i].coarsen_req = false;
            if self.is_coarsening_allowed(p).unwrap_or(false) {
                self.delete_children(p);
                coarsened.push(p);
            }
        }
        for m in &mut self.meta {
            m.coarsen_req = false;
        }
        coarsened
    }

    /// Processes refinement requests on leaves in ascending pid order.
    /// Requests that would exceed capacity are dropped; all flags are
    /// cleared.
    pub fn refinement_pass(&mut self) -> Vec<RefineOutcome> {
        let mut outcomes = Vec::new();
        for i in 0..self.meta.len() {
            let p = PatchId(i);
            let m = &self.meta[i];
            if !m.active || !m.refine_req {
                continue;
            }
            self.meta[i].refine_req = false;
            if self.meta[i].has_children() {
                continue;
            }
            if let Ok(out) = self.refine_patch(p) {
                outcomes.push(out);
            }
        }
        for m in &mut self.meta {
            m.refine_req = false;
        }
        outcomes
    }

    /// Lists every structural problem; empty means R1, R2, neighbor
    /// reciprocity and the parent/child links all hold.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut by_pos: HashMap<(u32, i64, i64), PatchId> = HashMap::new();
        for p in self.active_patches() {
            let m = &self.meta[p.0];
            if by_pos
                .insert((m.level, m.origin.0, m.origin.1), p)
                .is_some()
            {
                out.push(Violation::Hierarchy {
                    patch: p,
                    msg: "two active patches share a position".into(),
                });
            }
        }
        for &r in &self.roots {
            let m = &self.meta[r.0];
            if !m.active || m.level != 0 || m.parent.is_some() {
                out.push(Violation::RootMissing { patch: r });
            }
        }
        for p in self.active_patches() {
            let m = &self.meta[p.0];
            self.check_hierarchy(p, m, &mut out);
            for d in 0..8 {
                let expected = self
                    .neighbor_position(m.level, m.origin, d)
                    .and_then(|(x, y)| by_pos.get(&(m.level, x, y)).copied());
                if m.nbr[d] != expected {
                    out.push(Violation::Reciprocity {
                        patch: p,
                        dir: d,
                        expected,
                        found: m.nbr[d],
                    });
                }
                if m.has_children() && expected.is_none() && !self.is_physical_boundary(p, d) {
                    out.push(Violation::MooreSupport { patch: p, dir: d });
                }
            }
        }
        out
    }

    fn check_hierarchy(&self, p: PatchId, m: &PatchMeta, out: &mut Vec<Violation>) {
        let mut bad = |msg: String| out.push(Violation::Hierarchy { patch: p, msg });
        match m.parent {
            None if m.level > 0 => bad("non-root patch without parent".into()),
            None => {}
            Some(par) => {
                let pm = &self.meta[par.0];
                if !pm.active {
                    bad(format!("parent {par} inactive"));
                } else if pm.level + 1 != m.level {
                    bad(format!("parent {par} at level {}", pm.level));
                } else if !pm.children.is_some_and(|k| k.contains(&p)) {
                    bad(format!("parent {par} does not list this patch"));
                }
            }
        }
        if let Some(kids) = m.children {
            for (q, &c) in kids.iter().enumerate() {
                let cm = &self.meta[c.0];
                let (qx, qy) = quadrant_offset(q);
                if !cm.active || cm.parent != Some(p) || cm.level != m.level + 1 {
                    bad(format!("child {c} not linked back"));
                } else if cm.origin != (2 * m.origin.0 + qx, 2 * m.origin.1 + qy) {
                    bad(format!("child {c} at wrong quadrant"));
                }
            }
        }
    }

    /// Plain-text dump: a header line followed by one line per active patch
    /// (`pid level ox oy parent c0..c3 n0..n7`, `-1` for none).
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "mesh {} {} {} {}",
            self.roots_nx,
            self.roots_ny,
            self.capacity(),
            u8::from(self.periodic)
        )
        .unwrap();
        for p in self.active_patches() {
            let m = &self.meta[p.0];
            write!(
                s,
                "{} {} {} {} {}",
                p,
                m.level,
                m.origin.0,
                m.origin.1,
                fmt_id(m.parent)
            )
            .unwrap();
            for c in 0..4 {
                write!(s, " {}", fmt_id(m.children.map(|k| k[c]))).unwrap();
            }
            for n in m.nbr {
                write!(s, " {}", fmt_id(n)).unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Rebuilds a mesh from [`Mesh::dump`] output without validating it.
    pub fn from_dump(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Dump {
            line: 1,
            msg: "empty dump".into(),
        })?;
        let err = |line: usize, msg: &str| Error::Dump {
            line: line + 1,
            msg: msg.to_string(),
        };
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "mesh" {
            return Err(err(hl, "expected `mesh nx ny capacity periodic`"));
        }
        let num = |s: &str, line: usize| s.parse::<i64>().map_err(|_| err(line, "bad integer"));
        let (nx, ny, cap) = (num(h[1], hl)?, num(h[2], hl)?, num(h[3], hl)?);
        if nx < 1 || ny < 1 || cap < nx * ny {
            return Err(err(hl, "bad scaffold dimensions"));
        }
        let mut mesh = Mesh::new(nx as usize, ny as usize, cap as usize, num(h[4], hl)? != 0)?;
        for m in &mut mesh.meta {
            *m = PatchMeta::inactive();
        }
        let id = |v: i64, line: usize| -> Result<Option<PatchId>> {
            match v {
                -1 => Ok(None),
                v if v >= 0 && v < cap => Ok(Some(PatchId(v as usize))),
                _ => Err(err(line, "patch id out of range")),
            }
        };
        for (ln, line) in lines {
            let f: Vec<i64> = line
                .split_whitespace()
                .map(|t| num(t, ln))
                .collect::<Result<_>>()?;
            if f.len() != 17 {
                return Err(err(ln, "expected 17 fields"));
            }
            let pid = id(f[0], ln)?.ok_or_else(|| err(ln, "pid must be >= 0"))?;
            let kids: Vec<Option<PatchId>> =
                f[5..9].iter().map(|&v| id(v, ln)).collect::<Result<_>>()?;
            let children = if kids.iter().all(Option::is_some) {
                Some([
                    kids[0].unwrap(),
                    kids[1].unwrap(),
                    kids[2].unwrap(),
                    kids[3].unwrap(),
                ])
            } else if kids.iter().all(Option::is_none) {
                None
            } else {
                return Err(err(ln, "children must be all present or all -1"));
            };
            let mut nbr = [None; 8];
            for d in 0..8 {
                nbr[d] = id(f[9 + d], ln)?;
            }
            mesh.meta[pid.0] = PatchMeta {
                level: u32::try_from(f[1]).map_err(|_| err(ln, "bad level"))?,
                nbr,
                parent: id(f[4], ln)?,
                children,
                refine_req: false,
                coarsen_req: false,
                active: true,
                origin: (f[2], f[3]),
            };
        }
        mesh.free_list = (0..mesh.meta.len())
            .rev()
            .filter(|&i| !mesh.meta[i].active)
            .map(PatchId)
            .collect();
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn child(m: &Mesh, p: PatchId, q: usize) -> PatchId {
        m.meta(p).children.unwrap()[q]
    }

    #[test]
    fn single_periodic_root_is_its_own_neighbor() {
        let m = Mesh::new(1, 1, 16, true).unwrap();
        let r = m.root_at(0, 0);
        assert!(m.meta(r).nbr.iter().all(|&n| n == Some(r)));
        assert!(m.validate().is_empty());
    }

    #[test]
    fn two_by_two_periodic_wiring() {
        let m = Mesh::new(2, 2, 64, true).unwrap();
        assert_eq!(
            m.neighbor(m.root_at(0, 0), dir::E).unwrap(),
            Some(m.root_at(1, 0))
        );
        assert_eq!(
            m.neighbor(m.root_at(0, 0), dir::W).unwrap(),
            Some(m.root_at(1, 0))
        );
        assert_eq!(
            m.neighbor(m.root_at(0, 0), dir::SW).unwrap(),
            Some(m.root_at(1, 1))
        );
        assert!(m.validate().is_empty());
    }

    #[test]
    fn non_periodic_corner_has_boundaries() {
        let m = Mesh::new(2, 2, 64, false).unwrap();
        let c = m.root_at(0, 0);
        assert_eq!(m.neighbor(c, dir::W).unwrap(), None);
        assert_eq!(m.neighbor(c, dir::S).unwrap(), None);
        assert_eq!(m.neighbor(c, dir::SW).unwrap(), None);
        assert_eq!(m.neighbor(c, dir::NE).unwrap(), Some(m.root_at(1, 1)));
        assert!(m.validate().is_empty());
    }

    #[test]
    fn capacity_checked_at_init() {
        assert!(matches!(
            Mesh::new(4, 4, 15, true),
            Err(Error::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn opposite_directions() {
        for d in 0..8 {
            let (dx, dy) = dir::OFFSETS[d];
            assert_eq!(dir::OFFSETS[dir::opposite(d)], (-dx, -dy));
        }
    }

    #[test]
    fn siblings_neighbor_each_other() {
        let mut m = Mesh::new(2, 2, 64, true).unwrap();
        let a = m.root_at(0, 0);
        let out = m.refine_patch(a).unwrap();
        assert_eq!(out.created.len(), 4);
        let (sw, se, nw, ne) = (
            child(&m, a, 0),
            child(&m, a, 1),
            child(&m, a, 2),
            child(&m, a, 3),
        );
        assert_eq!(m.neighbor(sw, dir::E).unwrap(), Some(se));
        assert_eq!(m.neighbor(sw, dir::N).unwrap(), Some(nw));
        assert_eq!(m.neighbor(sw, dir::NE).unwrap(), Some(ne));
        assert_eq!(m.neighbor(ne, dir::SW).unwrap(), Some(sw));
        // Outside the parent nothing else is refined yet.
        assert_eq!(m.neighbor(sw, dir::W).unwrap(), None);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn level_zero_refinement_needs_no_recursion() {
        let mut m = Mesh::new(4, 4, 256, true).unwrap();
        let out = m.refine_patch(m.root_at(1, 2)).unwrap();
        assert_eq!(out.created.len(), 4);
        assert_eq!(out.depth, 0);
        assert_eq!(m.leaves().len(), 19);
    }

    #[test]
    fn refining_non_leaf_fails() {
        let mut m = Mesh::new(4, 4, 256, true).unwrap();
        let r = m.root_at(0, 0);
        m.refine_patch(r).unwrap();
        assert!(matches!(m.refine_patch(r), Err(Error::NotALeaf(_))));
    }

    #[test]
    fn recursive_refinement_fills_moore_neighborhood() {
        let mut m = Mesh::new(4, 4, 256, true).unwrap();
        let a = m.root_at(1, 1);
        m.refine_patch(a).unwrap();
        // SW child of A touches roots (0,0), (1,0) and (0,1).
        let c = child(&m, a, 0);
        let out = m.refine_patch(c).unwrap();
        assert_eq!(out.depth, 1);
        assert_eq!(out.refined.len(), 4);
        assert_eq!(out.created.len(), 16);
        assert!(m.meta(m.root_at(0, 0)).has_children());
        assert!(m.meta(m.root_at(1, 0)).has_children());
        assert!(m.meta(m.root_at(0, 1)).has_children());
        assert!(m.meta(c).nbr.iter().all(Option::is_some));
        assert!(m.validate().is_empty(), "{:?}", m.validate());
    }

    #[test]
    fn capacity_failure_leaves_mesh_unchanged() {
        let mut m = Mesh::new(4, 4, 16 + 4 + 8, true).unwrap();
        let a = m.root_at(1, 1);
        m.refine_patch(a).unwrap();
        let before = m.dump();
        let c = child(&m, a, 0);
        assert!(matches!(
            m.refine_patch(c),
            Err(Error::CapacityExceeded {
                needed: 16,
                available: 8
            })
        ));
        assert_eq!(m.dump(), before);
    }

    #[test]
    fn root_coarsening_rejected() {
        let mut m = Mesh::new(4, 4, 256, true).unwrap();
        let a = m.root_at(0, 0);
        m.refine_patch(a).unwrap();
        assert!(!m.is_coarsening_allowed(a).unwrap());
        m.meta_mut(a).coarsen_req = true;
        assert!(m.coarsening_pass().is_empty());
        assert!(!m.meta(a).coarsen_req);
        assert!(m.meta(a).has_children());
    }

    #[test]
    fn coarsening_blocked_while_children_support_finer_patches() {
        let mut m = Mesh::new(4, 4, 1024, true).unwrap();
        let a = m.root_at(1, 1);
        m.refine_patch(a).unwrap();
        let sw = child(&m, a, 0);
        let se = child(&m, a, 1);
        m.refine_patch(sw).unwrap();
        m.refine_patch(se).unwrap();
        // Refined siblings with leaf children do not need each other's
        // children.
        assert!(m.is_coarsening_allowed(sw).unwrap());
        // Once a child of se next to sw has children, sw's children are
        // part of its Moore neighborhood.
        let se_sw = child(&m, se, 0);
        m.refine_patch(se_sw).unwrap();
        assert!(!m.is_coarsening_allowed(sw).unwrap());
        assert!(!m.is_coarsening_allowed(se).unwrap());
        m.meta_mut(sw).coarsen_req = true;
        assert!(m.coarsening_pass().is_empty());
        assert!(m.validate().is_empty());
    }

    #[test]
    fn coarsening_allowed_with_leaf_children_and_childless_neighbors() {
        let mut m = Mesh::new(4, 4, 512, true).unwrap();
        let a = m.root_at(1, 1);
        m.refine_patch(a).unwrap();
        let ne = child(&m, a, 3);
        // NE child of A sits against roots (2,1), (2,2), (1,2).
        m.refine_patch(ne).unwrap();
        assert!(m.is_coarsening_allowed(ne).unwrap());
        let leaves_before = m.leaves().len();
        m.meta_mut(ne).coarsen_req = true;
        assert_eq!(m.coarsening_pass(), vec![ne]);
        assert!(m.meta(ne).is_leaf());
        assert_eq!(m.leaves().len() + 3, leaves_before);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn coarsening_rejected_until_grandchildren_removed() {
        let mut m = Mesh::new(4, 4, 1024, true).unwrap();
        let a = m.root_at(1, 1);
        m.refine_patch(a).unwrap();
        let c = child(&m, a, 3);
        m.refine_patch(c).unwrap();
        let g = child(&m, c, 3);
        m.refine_patch(g).unwrap();
        // c's children are not all leaves.
        m.meta_mut(c).coarsen_req = true;
        assert!(m.coarsening_pass().is_empty());
        // Removing the deepest layer first makes c coarsenable next pass.
        m.meta_mut(g).coarsen_req = true;
        assert_eq!(m.coarsening_pass(), vec![g]);
        m.meta_mut(c).coarsen_req = true;
        assert_eq!(m.coarsening_pass(), vec![c]);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn corrupted_link_reports_one_violation() {
        let mut m = Mesh::new(4, 4, 64, true).unwrap();
        let p = m.root_at(0, 0);
        m.meta_mut(p).nbr[dir::E] = Some(m.root_at(2, 2));
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::Reciprocity { dir: dir::E, .. }));
    }

    #[test]
    fn refine_then_coarsen_restores_leaves() {
        let mut m = Mesh::new(4, 4, 256, true).unwrap();
        let a = m.root_at(2, 2);
        m.refine_patch(a).unwrap();
        let c = child(&m, a, 0);
        // The first split pulls in c's missing neighbors; afterwards c can be
        // split and merged without side effects.
        m.refine_patch(c).unwrap();
        m.meta_mut(c).coarsen_req = true;
        assert_eq!(m.coarsening_pass(), vec![c]);
        let before = m.leaves();
        let out = m.refine_patch(c).unwrap();
        assert_eq!(out.refined, vec![c]);
        m.meta_mut(c).coarsen_req = true;
        assert_eq!(m.coarsening_pass(), vec![c]);
        assert_eq!(m.leaves(), before);
    }

    #[test]
    fn dump_round_trip() {
        let mut m = Mesh::new(3, 2, 128, false).unwrap();
        m.refine_patch(m.root_at(1, 1)).unwrap();
        let text = m.dump();
        let back = Mesh::from_dump(&text).unwrap();
        assert_eq!(back.dump(), text);
        assert!(back.validate().is_empty());
        assert_eq!(back.free_slots(), m.free_slots());
    }

    #[test]
    fn dump_rejects_garbage() {
        assert!(Mesh::from_dump("").is_err());
        assert!(Mesh::from_dump("mesh 1 1 4 1\n0 0 0 0 -1 -1 -1 -1 -1 0 0 0 0 0 0 0").is_err());
        assert!(Mesh::from_dump("grid 1 1 4 1\n").is_err());
    }
}
