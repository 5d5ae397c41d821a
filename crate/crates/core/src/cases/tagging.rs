//! Density-gradient refinement indicator.

use crate::fields::FieldStore;
use crate::mesh::{Mesh, PatchId};

/// Largest `|grad rho| * dx` over the interior of `p`, by central
/// differences that read one ghost layer.
pub fn patch_indicator(store: &FieldStore, m: &Mesh, p: PatchId) -> f64 {
    let level = m.meta(p).level;
    let d = store.domain();
    let ratio = d.dx(level) / d.dy(level);
    let f = store.field(p);
    let rho = |i: isize, j: isize| f.get(i, j).mass;
    f.interior()
        .map(|(i, j)| {
            let gx = 0.5 * (rho(i + 1, j) - rho(i - 1, j));
            let gy = 0.5 * (rho(i, j + 1) - rho(i, j - 1)) * ratio;
            gx.hypot(gy)
        })
        .fold(0.0, f64::max)
}

/// Clears all requests, then flags leaves above `threshold` (below
/// `max_level`) for refinement, and parents whose own indicator and whose
/// leaf children's indicators are all below `threshold / 4` for coarsening.
/// Ghosts must be current.
pub fn tag_patches(store: &FieldStore, m: &mut Mesh, threshold: f64, max_level: u32) {
    let patches: Vec<PatchId> = m.active_patches().collect();
    let ind: Vec<(PatchId, f64)> = patches
        .iter()
        .map(|&p| (p, patch_indicator(store, m, p)))
        .collect();
    let lookup = |p: PatchId| {
        ind.iter()
            .find(|(q, _)| *q == p)
            .map_or(f64::INFINITY, |x| x.1)
    };
    let mut flags = Vec::with_capacity(ind.len());
    for &(p, v) in &ind {
        let meta = m.meta(p);
        let refine = meta.is_leaf() && meta.level < max_level && v > threshold;
        let coarsen = match meta.children {
            Some(ch) => {
                ch.iter().all(|&c| m.meta(c).is_leaf())
                    && v < threshold / 4.0
                    && ch.iter().all(|&c| lookup(c) < threshold / 4.0)
            }
            None => false,
        };
        flags.push((p, refine, coarsen));
    }
    for (p, refine, coarsen) in flags {
        let meta = m.meta_mut(p);
        meta.refine_req = refine;
        meta.coarsen_req = coarsen;
    }
}
