//! Calorically perfect gas: conversions between conservative and primitive
//! variables and the derived thermodynamic quantities.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
    /// Specific gas constant. Temperature never enters the flux path, so this
    /// is carried for configuration completeness only.
    pub gas_constant: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            gas_constant: 1.0,
        }
    }
}

impl GasModel {
    pub fn new(gamma: f64, gas_constant: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::Config(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(gas_constant > 0.0) {
            return Err(Error::Config(format!(
                "gas constant must be positive, got {gas_constant}"
            )));
        }
        Ok(Self {
            gamma,
            gas_constant,
        })
    }

    pub fn cons_to_prim(&self, u: &Conservative) -> Result<Primitive> {
        if !(u.mass > 0.0) {
            return Err(Error::NonPositiveDensity(u.mass));
        }
        let rho = u.mass;
        let vx = u.mmtx / rho;
        let vy = u.mmty / rho;
        let e_th = u.enrg / rho - 0.5 * (vx * vx + vy * vy);
        let p = rho * e_th * (self.gamma - 1.0);
        if !(p > 0.0) {
            return Err(Error::NonPositivePressure(p));
        }
        Ok(Primitive {
            rho,
            u: vx,
            v: vy,
            p,
        })
    }

    /// Inverse of [`GasModel::cons_to_prim`]; the caller guarantees a positive state.
    pub fn prim_to_cons(&self, w: &Primitive) -> Conservative {
        debug_assert!(w.rho > 0.0 && w.p > 0.0);
        let kinetic = 0.5 * w.rho * (w.u * w.u + w.v * w.v);
        Conservative {
            mass: w.rho,
            mmtx: w.rho * w.u,
            mmty: w.rho * w.v,
            enrg: w.p / (self.gamma - 1.0) + kinetic,
        }
    }

    pub fn sound_speed(&self, w: &Primitive) -> Result<f64> {
        if !(w.rho > 0.0) {
            return Err(Error::NonPositiveDensity(w.rho));
        }
        if !(w.p > 0.0) {
            return Err(Error::NonPositivePressure(w.p));
        }
        Ok((self.gamma * w.p / w.rho).sqrt())
    }

    /// Specific total enthalpy `h = e + p / rho`.
    pub fn total_enthalpy(&self, w: &Primitive) -> f64 {
        let e = w.p / (w.rho * (self.gamma - 1.0)) + 0.5 * (w.u * w.u + w.v * w.v);
        e + w.p / w.rho
    }
}

/// Conservative variables `(rho, rho u, rho v, rho e)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Conservative {
    pub mass: f64,
    pub mmtx: f64,
    pub mmty: f64,
    pub enrg: f64,
}

impl Conservative {
    pub const ZERO: Conservative = Conservative {
        mass: 0.0,
        mmtx: 0.0,
        mmty: 0.0,
        enrg: 0.0,
    };

    pub const fn new(mass: f64, mmtx: f64, mmty: f64, enrg: f64) -> Self {
        Self {
            mass,
            mmtx,
            mmty,
            enrg,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.mass, self.mmtx, self.mmty, self.enrg]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl Add for Conservative {
    type Output = Conservative;
    fn add(self, o: Conservative) -> Conservative {
        Conservative::new(
            self.mass + o.mass,
            self.mmtx + o.mmtx,
            self.mmty + o.mmty,
            self.enrg + o.enrg,
        )
    }
}

impl Sub for Conservative {
    type Output = Conservative;
    fn sub(self, o: Conservative) -> Conservative {
        Conservative::new(
            self.mass - o.mass,
            self.mmtx - o.mmtx,
            self.mmty - o.mmty,
            self.enrg - o.enrg,
        )
    }
}

impl Mul<Conservative> for f64 {
    type Output = Conservative;
    fn mul(self, u: Conservative) -> Conservative {
        Conservative::new(self * u.mass, self * u.mmtx, self * u.mmty, self * u.enrg)
    }
}

/// Primitive variables `(rho, u, v, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl Primitive {
    pub const fn new(rho: f64, u: f64, v: f64, p: f64) -> Self {
        Self { rho, u, v, p }
    }
}
