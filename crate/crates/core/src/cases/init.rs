//! Initial conditions.

use std::f64::consts::PI;

use crate::cases::config::{Case, RunConfig, ShearLayerParams};
use crate::fields::FieldStore;
use crate::gas::{GasModel, Primitive};
use crate::mesh::Mesh;

/// Diamond of low density and pressure in gas at rest.
pub fn implosion_state(x: f64, y: f64) -> Primitive {
    if x.abs() + y.abs() < 0.15 {
        Primitive::new(0.125, 0.0, 0.0, 0.140)
    } else {
        Primitive::new(1.0, 0.0, 0.0, 1.0)
    }
}

/// Shear-layer profile on a domain of width `lx` and height `ly`.
#[derive(Debug, Clone, Copy)]
pub struct ShearLayer {
    pub rho1: f64,
    pub rho2: f64,
    /// Stream speed; the band moves at `+U`, the rest at `-U`.
    pub u: f64,
    pub delta: f64,
    pub amp: f64,
    pub k: f64,
    pub lx: f64,
    pub y_interface: f64,
    pub x_min: f64,
}

impl ShearLayer {
    pub fn new(params: &ShearLayerParams, g: &GasModel, domain: (f64, f64, f64, f64)) -> Self {
        let (x0, x1, y0, y1) = domain;
        let rho1 = 1.0;
        let rho2 = rho1 / params.density_ratio;
        let p = 1.0;
        let c1 = (g.gamma * p / rho1).sqrt();
        let c2 = (g.gamma * p / rho2).sqrt();
        let u = 0.5 * params.convective_mach * (c1 + c2);
        Self {
            rho1,
            rho2,
            u,
            delta: params.shear_thickness.unwrap_or((y1 - y0) / 60.0),
            amp: params.perturb_amp * u,
            k: params.wavenumber as f64,
            lx: x1 - x0,
            y_interface: 0.25 * (y1 - y0),
            x_min: x0,
        }
    }

    /// Band indicator: 1 inside `|y| < y_interface`, 0 outside.
    pub fn blend(&self, y: f64) -> f64 {
        let d = self.delta;
        0.5 * (((y + self.y_interface) / d).tanh() - ((y - self.y_interface) / d).tanh())
    }

    pub fn state(&self, x: f64, y: f64) -> Primitive {
        let s = self.blend(y);
        let d2 = self.delta * self.delta;
        let bump = (-(y - self.y_interface).powi(2) / d2).exp()
            + (-(y + self.y_interface).powi(2) / d2).exp();
        let v = self.amp * (2.0 * PI * self.k * (x - self.x_min) / self.lx).sin() * bump;
        Primitive::new(
            self.rho2 + (self.rho1 - self.rho2) * s,
            -self.u + 2.0 * self.u * s,
            v,
            1.0,
        )
    }
}

/// Density wave advected diagonally at unit speed; exact at any time `t`.
pub fn entropy_wave_state(x: f64, y: f64, t: f64) -> Primitive {
    Primitive::new(
        1.0 + 0.2 * (2.0 * PI * (x + y - 2.0 * t)).sin(),
        1.0,
        1.0,
        1.0,
    )
}

/// Sod tube with the diaphragm at the middle of `[x_min, x_max]`.
pub fn sod_state(x: f64, x_mid: f64) -> Primitive {
    if x < x_mid {
        Primitive::new(1.0, 0.0, 0.0, 1.0)
    } else {
        Primitive::new(0.125, 0.0, 0.0, 0.1)
    }
}

/// Pointwise initial state of the configured case.
pub fn initial_state(cfg: &RunConfig, g: &GasModel) -> impl Fn(f64, f64) -> Primitive {
    let shear = ShearLayer::new(&cfg.shear, g, cfg.domain);
    let case = cfg.case;
    let x_mid = 0.5 * (cfg.domain.0 + cfg.domain.1);
    move |x, y| match case {
        Case::Implosion => implosion_state(x, y),
        Case::ShearLayer => shear.state(x, y),
        Case::EntropyWave => entropy_wave_state(x, y, 0.0),
        Case::Sod1d => sod_state(x, x_mid),
    }
}

pub fn init_implosion(store: &mut FieldStore, m: &Mesh, g: &GasModel) {
    store.init_with(m, |x, y| g.prim_to_cons(&implosion_state(x, y)));
}

pub fn init_shear_layer(store: &mut FieldStore, m: &Mesh, g: &GasModel, params: &ShearLayerParams) {
    let d = *store.domain();
    let s = ShearLayer::new(params, g, (d.x_min, d.x_max, d.y_min, d.y_max));
    store.init_with(m, |x, y| g.prim_to_cons(&s.state(x, y)));
}
