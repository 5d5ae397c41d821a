//! Spatial discretization on collocated nodes with fluxes assembled at the
//! staggered edge points.

pub mod eigen;
pub mod flux;
pub mod rhs;
pub mod stencil;
pub mod weno;

pub use eigen::{eigen_system, EigenSystem};
pub use flux::{euler_flux, rusanov_flux, Axis, EdgeState};
pub use rhs::{compute_rhs, weno_weight_deviation, PatchScratch};
pub use stencil::{central_interp_to_edges, staggered_divergence};
pub use weno::{weno5_interp, Bias};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeMode {
    /// Primitives interpolated to edges with the 4-point midpoint stencil,
    /// one physical flux per edge.
    Central4,
    /// Left/right WENO5 edge states joined by the Rusanov flux.
    Weno5Rusanov,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub mode: SchemeMode,
    pub weno_epsilon: f64,
    /// Interpolate characteristic variables rather than conservative components.
    pub characteristic: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self::weno()
    }
}

impl SchemeConfig {
    pub fn central() -> Self {
        Self {
            mode: SchemeMode::Central4,
            weno_epsilon: weno::DEFAULT_EPSILON,
            characteristic: true,
        }
    }

    pub fn weno() -> Self {
        Self {
            mode: SchemeMode::Weno5Rusanov,
            weno_epsilon: weno::DEFAULT_EPSILON,
            characteristic: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weno_epsilon > 0.0) || !self.weno_epsilon.is_finite() {
            return Err(Error::Config(format!(
                "weno_epsilon must be positive, got {}",
                self.weno_epsilon
            )));
        }
        Ok(())
    }
}
