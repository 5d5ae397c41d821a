//! Directional Euler fluxes and the Rusanov approximate Riemann flux.
//!
//! Directional work happens in a rotated frame where the state is ordered
//! `(rho, rho u_n, rho u_t, rho e)` with `u_n` the velocity along the sweep
//! axis. The same code then serves both axes, and a transposed field produces
//! a bitwise transposed result.

use crate::error::{Error, Result};
use crate::gas::{Conservative, GasModel, Primitive};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    /// Global-order 4-vector to the rotated frame.
    #[inline]
    pub fn to_local(self, a: [f64; 4]) -> [f64; 4] {
        match self {
            Axis::X => a,
            Axis::Y => [a[0], a[2], a[1], a[3]],
        }
    }

    /// Rotated-frame 4-vector back to global order.
    #[inline]
    pub fn to_global(self, a: [f64; 4]) -> [f64; 4] {
        // The swap is its own inverse.
        self.to_local(a)
    }
}

/// Left and right edge states at one staggered edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeState {
    pub left: Conservative,
    pub right: Conservative,
}

/// Rotated-frame primitive `(rho, u_n, u_t, p)` from rotated conservative
/// variables, with the same positivity checks as [`GasModel::cons_to_prim`].
#[inline]
pub fn local_prim(u: [f64; 4], gamma: f64) -> Result<[f64; 4]> {
    let rho = u[0];
    if !(rho > 0.0) {
        return Err(Error::NonPositiveDensity(rho));
    }
    let un = u[1] / rho;
    let ut = u[2] / rho;
    let e_th = u[3] / rho - 0.5 * (un * un + ut * ut);
    let p = rho * e_th * (gamma - 1.0);
    if !(p > 0.0) {
        return Err(Error::NonPositivePressure(p));
    }
    Ok([rho, un, ut, p])
}

/// Rotated-frame flux of a rotated primitive state.
#[inline]
pub fn local_flux(w: [f64; 4], gamma: f64) -> [f64; 4] {
    let [rho, un, ut, p] = w;
    let e = p / (gamma - 1.0) + 0.5 * rho * (un * un + ut * ut);
    let mass = rho * un;
    [mass, mass * un + p, mass * ut, (e + p) * un]
}

/// Rusanov flux in the rotated frame from rotated conservative edge states.
#[inline]
pub fn local_rusanov(ul: [f64; 4], ur: [f64; 4], gamma: f64) -> Result<[f64; 4]> {
    let wl = local_prim(ul, gamma)?;
    let wr = local_prim(ur, gamma)?;
    let cl = (gamma * wl[3] / wl[0]).sqrt();
    let cr = (gamma * wr[3] / wr[0]).sqrt();
    let s = (cr + wr[1].abs()).max(cl + wl[1].abs());
    let fl = local_flux(wl, gamma);
    let fr = local_flux(wr, gamma);
    Ok(std::array::from_fn(|c| {
        0.5 * (fr[c] + fl[c]) - 0.5 * s * (ur[c] - ul[c])
    }))
}

/// Flux of `w` along `axis`:
/// `(rho u_d, rho u u_d + p delta_xd, rho v u_d + p delta_yd, rho h u_d)`.
pub fn euler_flux(w: &Primitive, g: &GasModel, axis: Axis) -> Conservative {
    let local = axis.to_local([w.rho, w.u, w.v, w.p]);
    Conservative::from_array(axis.to_global(local_flux(local, g.gamma)))
}

/// Rusanov flux across an edge normal to `axis`, with wave speed
/// `S = max(c_R + |u_R|, c_L + |u_L|)`.
pub fn rusanov_flux(edge: &EdgeState, g: &GasModel, axis: Axis) -> Result<Conservative> {
    let ul = axis.to_local(edge.left.to_array());
    let ur = axis.to_local(edge.right.to_array());
    Ok(Conservative::from_array(
        axis.to_global(local_rusanov(ul, ur, g.gamma)?),
    ))
}
