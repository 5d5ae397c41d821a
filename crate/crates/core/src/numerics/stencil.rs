//! Linear staggered stencils: fourth-order midpoint interpolation from nodes
//! to edges, and the fourth-order staggered divergence from edges back to
//! nodes.

use crate::error::{Error, Result};

/// Weights of `phi[i-1], phi[i], phi[i+1], phi[i+2]` for the value at `i + 1/2`.
pub const MIDPOINT: [f64; 4] = [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0];

#[inline]
pub fn midpoint4(a: f64, b: f64, c: f64, d: f64) -> f64 {
    9.0 / 16.0 * (b + c) - 1.0 / 16.0 * (a + d)
}

/// Node derivative from the four surrounding edge values
/// `f[i-3/2], f[i-1/2], f[i+1/2], f[i+3/2]`.
#[inline]
pub fn staggered_derivative(fmm: f64, fm: f64, fp: f64, fpp: f64, dx: f64) -> f64 {
    9.0 / 8.0 * (fp - fm) / dx - 1.0 / 8.0 * (fpp - fmm) / (3.0 * dx)
}

/// Interpolates node values to every edge that has two nodes on each side:
/// output `k` is the value at `k + 3/2` for `k` in `0..len-3`.
pub fn central_interp_to_edges(phi: &[f64]) -> Result<Vec<f64>> {
    if phi.len() < 4 {
        return Err(Error::InsufficientStencil {
            needed: 4,
            available: phi.len(),
        });
    }
    Ok(phi
        .windows(4)
        .map(|w| midpoint4(w[0], w[1], w[2], w[3]))
        .collect())
}

/// Derivative at every node that has two edges on each side: with edge `k`
/// at `k + 1/2`, output `k` is the derivative at node `k + 2`.
pub fn staggered_divergence(f: &[f64], dx: f64) -> Result<Vec<f64>> {
    if f.len() < 4 {
        return Err(Error::InsufficientStencil {
            needed: 4,
            available: f.len(),
        });
    }
    Ok(f.windows(4)
        .map(|w| staggered_derivative(w[0], w[1], w[2], w[3], dx))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_preserved() {
        let e = central_interp_to_edges(&[2.5; 8]).unwrap();
        assert!(e.iter().all(|&v| (v - 2.5).abs() < 1e-15));
        let d = staggered_divergence(&[2.5; 8], 0.1).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_exact() {
        let dx = 0.1;
        let a = 3.0;
        let nodes: Vec<f64> = (0..10).map(|i| a * i as f64 * dx).collect();
        let e = central_interp_to_edges(&nodes).unwrap();
        for (k, v) in e.iter().enumerate() {
            assert!((v - a * (k as f64 + 1.5) * dx).abs() < 1e-14);
        }
        let edges: Vec<f64> = (0..10).map(|k| a * (k as f64 + 0.5) * dx).collect();
        for v in staggered_divergence(&edges, dx).unwrap() {
            assert!((v - a).abs() < 1e-13);
        }
    }

    /// Oracle: Lagrange interpolation through the four nodes evaluated at
    /// the midpoint, written independently of the weight table.
    fn lagrange_mid(xs: [f64; 4], ys: [f64; 4], x: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            let mut l = 1.0;
            for j in 0..4 {
                if i != j {
                    l *= (x - xs[j]) / (xs[i] - xs[j]);
                }
            }
            s += ys[i] * l;
        }
        s
    }

    #[test]
    fn cubic_exact_quartic_error_matches_truncation() {
        let dx = 0.1;
        let x = |i: usize| i as f64 * dx;
        let cubic: Vec<f64> = (0..8).map(|i| x(i).powi(3)).collect();
        for (k, v) in central_interp_to_edges(&cubic).unwrap().iter().enumerate() {
            let xm = (k as f64 + 1.5) * dx;
            assert!((v - xm.powi(3)).abs() < 1e-14);
        }
        let quartic: Vec<f64> = (0..8).map(|i| x(i).powi(4)).collect();
        for (k, v) in central_interp_to_edges(&quartic)
            .unwrap()
            .iter()
            .enumerate()
        {
            let xm = (k as f64 + 1.5) * dx;
            let xs = [x(k), x(k + 1), x(k + 2), x(k + 3)];
            let ys = [quartic[k], quartic[k + 1], quartic[k + 2], quartic[k + 3]];
            assert!((v - lagrange_mid(xs, ys, xm)).abs() < 1e-14);
            // Leading truncation term: f''''/4! * prod(x - x_j) = (9/16) dx^4.
            assert!((xm.powi(4) - v - 9.0 / 16.0 * dx.powi(4)).abs() < 1e-14);
        }
    }

    #[test]
    fn divergence_exact_through_quartic() {
        let dx = 0.05;
        let edges: Vec<f64> = (0..12).map(|k| ((k as f64 + 0.5) * dx).powi(4)).collect();
        for (k, v) in staggered_divergence(&edges, dx).unwrap().iter().enumerate() {
            let xi = (k + 2) as f64 * dx;
            assert!((v - 4.0 * xi.powi(3)).abs() < 1e-11);
        }
    }

    #[test]
    fn divergence_converges_fourth_order() {
        let err = |n: usize| {
            let dx = 1.0 / n as f64;
            let edges: Vec<f64> = (0..n + 4)
                .map(|k| (2.0 * PI * (k as f64 - 1.5) * dx).sin())
                .collect();
            staggered_divergence(&edges, dx)
                .unwrap()
                .iter()
                .enumerate()
                .map(|(i, v)| (v - 2.0 * PI * (2.0 * PI * i as f64 * dx).cos()).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn short_inputs_rejected() {
        assert!(matches!(
            central_interp_to_edges(&[1.0, 2.0, 3.0]),
            Err(Error::InsufficientStencil {
                needed: 4,
                available: 3
            })
        ));
        assert!(staggered_divergence(&[1.0], 1.0).is_err());
    }
}
