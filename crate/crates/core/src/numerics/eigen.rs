//! Eigen-decomposition of the directional Euler flux Jacobian, used to move
//! between conservative and characteristic variables for WENO interpolation.

use crate::error::{Error, Result};
use crate::gas::{GasModel, Primitive};
use crate::numerics::flux::Axis;

pub type Mat4 = [[f64; 4]; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    /// Rows are left eigenvectors.
    pub left: Mat4,
    /// Columns are right eigenvectors.
    pub right: Mat4,
    /// `(u_n - c, u_n, u_n, u_n + c)`.
    pub lambda: [f64; 4],
}

impl EigenSystem {
    /// Rotated-frame system at the rotated primitive state `(rho, u_n, u_t, p)`.
    #[inline]
    pub fn local(w: [f64; 4], gamma: f64) -> Self {
        let [rho, u, v, p] = w;
        let c2 = gamma * p / rho;
        let c = c2.sqrt();
        let q2 = u * u + v * v;
        let h = c2 / (gamma - 1.0) + 0.5 * q2;
        let b1 = (gamma - 1.0) / c2;
        let b2 = 0.5 * b1 * q2;
        let right = [
            [1.0, 1.0, 0.0, 1.0],
            [u - c, u, 0.0, u + c],
            [v, v, 1.0, v],
            [h - u * c, 0.5 * q2, v, h + u * c],
        ];
        let left = [
            [
                0.5 * (b2 + u / c),
                0.5 * (-b1 * u - 1.0 / c),
                0.5 * (-b1 * v),
                0.5 * b1,
            ],
            [1.0 - b2, b1 * u, b1 * v, -b1],
            [-v, 0.0, 1.0, 0.0],
            [
                0.5 * (b2 - u / c),
                0.5 * (-b1 * u + 1.0 / c),
                0.5 * (-b1 * v),
                0.5 * b1,
            ],
        ];
        Self {
            left,
            right,
            lambda: [u - c, u, u, u + c],
        }
    }

    #[inline]
    pub fn to_characteristic(&self, u: [f64; 4]) -> [f64; 4] {
        mat_vec(&self.left, u)
    }

    /// `Rm w`, summing the acoustic pair and the convected pair separately
    /// so a mirrored state (which swaps the acoustic fields) rounds identically.
    #[inline]
    pub fn to_conservative(&self, w: [f64; 4]) -> [f64; 4] {
        let m = &self.right;
        std::array::from_fn(|r| {
            (m[r][0] * w[0] + m[r][3] * w[3]) + (m[r][1] * w[1] + m[r][2] * w[2])
        })
    }
}

#[inline]
pub fn mat_vec(m: &Mat4, x: [f64; 4]) -> [f64; 4] {
    std::array::from_fn(|r| m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2] + m[r][3] * x[3])
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    std::array::from_fn(|r| std::array::from_fn(|c| (0..4).map(|k| a[r][k] * b[k][c]).sum()))
}

/// Eigen-system of the flux Jacobian along `axis` at the arithmetic mean of
/// the two primitive states, in global variable order.
pub fn eigen_system(
    wl: &Primitive,
    wr: &Primitive,
    g: &GasModel,
    axis: Axis,
) -> Result<EigenSystem> {
    for w in [wl, wr] {
        if !(w.rho > 0.0) {
            return Err(Error::NonPositiveDensity(w.rho));
        }
        if !(w.p > 0.0) {
            return Err(Error::NonPositivePressure(w.p));
        }
    }
    let avg = [
        0.5 * (wl.rho + wr.rho),
        0.5 * (wl.u + wr.u),
        0.5 * (wl.v + wr.v),
        0.5 * (wl.p + wr.p),
    ];
    let local = EigenSystem::local(axis.to_local(avg), g.gamma);
    // Permute rows of R and columns of L back to global order.
    let perm = |i: usize| match axis {
        Axis::X => i,
        Axis::Y => [0, 2, 1, 3][i],
    };
    Ok(EigenSystem {
        right: std::array::from_fn(|r| local.right[perm(r)]),
        left: std::array::from_fn(|r| std::array::from_fn(|c| local.left[r][perm(c)])),
        lambda: local.lambda,
    })
}
