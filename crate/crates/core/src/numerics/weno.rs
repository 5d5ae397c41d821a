//! Fifth-order WENO-JS interpolation of nodal values to the midpoint between
//! two nodes.
//!
//! For the left-biased value at `x_{k+1/2}` the five nodes are `k-2..=k+2`.
//! Each of the three 3-node candidate stencils gives a quadratic midpoint
//! interpolant; the nonlinear weights blend them with Jiang-Shu smoothness
//! indicators so smooth data recovers the 5-node linear interpolant.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bias {
    /// Upwind from the left: nodes `k-2..=k+2`.
    Left,
    /// Upwind from the right: nodes `k-1..=k+3`.
    Right,
}

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Candidate midpoint weights for stencils `{k-2,k-1,k}`, `{k-1,k,k+1}`, `{k,k+1,k+2}`.
pub const CANDIDATES: [[f64; 3]; 3] = [
    [3.0 / 8.0, -10.0 / 8.0, 15.0 / 8.0],
    [-1.0 / 8.0, 6.0 / 8.0, 3.0 / 8.0],
    [3.0 / 8.0, 6.0 / 8.0, -1.0 / 8.0],
];

/// Linear weights that combine the candidates into the 5-node interpolant.
pub const IDEAL: [f64; 3] = [1.0 / 16.0, 10.0 / 16.0, 5.0 / 16.0];

/// Left-biased interpolation returning the value and the nonlinear weights.
#[inline]
pub fn weno5_left(v: [f64; 5], eps: f64) -> (f64, [f64; 3]) {
    let [a, b, c, d, e] = v;
    let q0 = CANDIDATES[0][0] * a + CANDIDATES[0][1] * b + CANDIDATES[0][2] * c;
    let q1 = CANDIDATES[1][0] * b + CANDIDATES[1][1] * c + CANDIDATES[1][2] * d;
    let q2 = CANDIDATES[2][0] * c + CANDIDATES[2][1] * d + CANDIDATES[2][2] * e;

    let s0 = a - 2.0 * b + c;
    let s1 = b - 2.0 * c + d;
    let s2 = c - 2.0 * d + e;
    let t0 = a - 4.0 * b + 3.0 * c;
    let t1 = b - d;
    let t2 = 3.0 * c - 4.0 * d + e;
    let beta0 = 13.0 / 12.0 * s0 * s0 + 0.25 * t0 * t0;
    let beta1 = 13.0 / 12.0 * s1 * s1 + 0.25 * t1 * t1;
    let beta2 = 13.0 / 12.0 * s2 * s2 + 0.25 * t2 * t2;

    let a0 = IDEAL[0] / ((eps + beta0) * (eps + beta0));
    let a1 = IDEAL[1] / ((eps + beta1) * (eps + beta1));
    let a2 = IDEAL[2] / ((eps + beta2) * (eps + beta2));
    let sum = a0 + a1 + a2;
    let w = [a0 / sum, a1 / sum, a2 / sum];
    (w[0] * q0 + w[1] * q1 + w[2] * q2, w)
}

/// Right-biased interpolation: `v` holds nodes `k-1..=k+3` in ascending order.
#[inline]
pub fn weno5_right(v: [f64; 5], eps: f64) -> (f64, [f64; 3]) {
    weno5_left([v[4], v[3], v[2], v[1], v[0]], eps)
}

/// Checked entry point. `values` are the five stencil nodes in ascending
/// order for the chosen bias.
pub fn weno5_interp(values: &[f64], eps: f64, bias: Bias) -> Result<f64> {
    let v: [f64; 5] = values.try_into().map_err(|_| Error::InsufficientStencil {
        needed: 5,
        available: values.len(),
    })?;
    if !v.iter().all(|x| x.is_finite()) || !(eps > 0.0) {
        return Err(Error::NonFiniteInput);
    }
    Ok(match bias {
        Bias::Left => weno5_left(v, eps).0,
        Bias::Right => weno5_right(v, eps).0,
    })
}
