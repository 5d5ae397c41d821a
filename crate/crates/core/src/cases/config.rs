//! Run configuration from a flat `key = value` file with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::executor::{ExecMode, ExecutorConfig};
use crate::numerics::{SchemeConfig, SchemeMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    Implosion,
    ShearLayer,
    EntropyWave,
    Sod1d,
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implosion" => Ok(Case::Implosion),
            "shear_layer" | "shear-layer" | "shear" => Ok(Case::ShearLayer),
            "entropy_wave" | "entropy-wave" => Ok(Case::EntropyWave),
            "sod_1d" | "sod-1d" | "sod" => Ok(Case::Sod1d),
            _ => Err(Error::Config(format!("unknown case '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputFormat {
    Vtk,
    Csv,
    Pgm,
    Schlieren,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vtk" => Ok(OutputFormat::Vtk),
            "csv" => Ok(OutputFormat::Csv),
            "pgm" => Ok(OutputFormat::Pgm),
            "schlieren" => Ok(OutputFormat::Schlieren),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearLayerParams {
    /// `rho1 / rho2`, with `rho1 = 1` in the central band.
    pub density_ratio: f64,
    pub convective_mach: f64,
    pub wavenumber: u32,
    /// Perturbation amplitude as a fraction of `U`.
    pub perturb_amp: f64,
    /// Interface thickness; `None` means `L_y / 60`.
    pub shear_thickness: Option<f64>,
}

impl Default for ShearLayerParams {
    fn default() -> Self {
        Self {
            density_ratio: 2.0,
            convective_mach: 0.7,
            wavenumber: 5,
            perturb_amp: 0.05,
            shear_thickness: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmrConfig {
    pub enabled: bool,
    pub max_level: u32,
    pub tag_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: Case,
    /// `(x_min, x_max, y_min, y_max)`.
    pub domain: (f64, f64, f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub patch_n: usize,
    pub cfl: f64,
    pub gamma: f64,
    pub scheme: SchemeConfig,
    pub executor: ExecutorConfig,
    pub t_end: f64,
    pub max_steps: Option<usize>,
    /// Snapshot interval in steps; 0 writes only the first and last state.
    pub output_every: usize,
    pub out_dir: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
    pub amr: AmrConfig,
    pub shear: ShearLayerParams,
}

impl RunConfig {
    /// Defaults for `case`, before any overrides.
    pub fn for_case(case: Case) -> Self {
        let (domain, nx, ny, t_end) = match case {
            Case::Implosion | Case::ShearLayer => ((-0.3, 0.3, -0.3, 0.3), 256, 256, 0.1),
            Case::EntropyWave => ((0.0, 1.0, 0.0, 1.0), 64, 64, 0.1),
            Case::Sod1d => ((0.0, 1.0, 0.0, 0.04), 400, 16, 0.2),
        };
        Self {
            case,
            domain,
            nx,
            ny,
            patch_n: 16,
            cfl: 0.45,
            gamma: 1.4,
            scheme: SchemeConfig::weno(),
            executor: ExecutorConfig::default(),
            t_end,
            max_steps: None,
            output_every: 0,
            out_dir: None,
            formats: vec![OutputFormat::Vtk],
            amr: AmrConfig {
                enabled: false,
                max_level: 2,
                tag_threshold: 0.05,
            },
            shear: ShearLayerParams::default(),
        }
    }

    /// Builds a configuration from key/value pairs. Keys are matched with
    /// `-` and `_` treated alike.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let map: BTreeMap<String, &str> = pairs
            .iter()
            .map(|(k, v)| (normalize(k), v.trim()))
            .collect();
        let case: Case = map.get("case").copied().unwrap_or("implosion").parse()?;
        let mut c = Self::for_case(case);
        let mut domain_touched = false;
        for (key, value) in &map {
            let v = *value;
            match key.as_str() {
                "case" => {}
                "n" => {
                    let n = num(key, v)?;
                    c.nx = n;
                    if case != Case::Sod1d {
                        c.ny = n;
                    }
                }
                "nx" => c.nx = num(key, v)?,
                "ny" => c.ny = num(key, v)?,
                "patch_n" => c.patch_n = num(key, v)?,
                "x_min" => (c.domain.0, domain_touched) = (num(key, v)?, true),
                "x_max" => (c.domain.1, domain_touched) = (num(key, v)?, true),
                "y_min" => (c.domain.2, domain_touched) = (num(key, v)?, true),
                "y_max" => (c.domain.3, domain_touched) = (num(key, v)?, true),
                "cfl" => c.cfl = num(key, v)?,
                "gamma" => c.gamma = num(key, v)?,
                "scheme" => {
                    c.scheme.mode = match v {
                        "weno" | "weno5" | "weno5_rusanov" => SchemeMode::Weno5Rusanov,
                        "central" | "central4" => SchemeMode::Central4,
                        _ => return Err(Error::Config(format!("unknown scheme '{v}'"))),
                    }
                }
                "characteristic" => c.scheme.characteristic = flag(key, v)?,
                "weno_eps" | "weno_epsilon" => c.scheme.weno_epsilon = num(key, v)?,
                "t_end" => c.t_end = num(key, v)?,
                "max_steps" => c.max_steps = Some(num(key, v)?),
                "output_every" => c.output_every = num(key, v)?,
                "out" | "out_dir" => c.out_dir = Some(PathBuf::from(v)),
                "format" | "formats" => {
                    c.formats = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
                "workers" => c.executor.workers = num(key, v)?,
                "exec_mode" => {
                    c.executor.mode = match v {
                        "fine" => ExecMode::Fine,
                        "fused" => ExecMode::Fused,
                        _ => return Err(Error::Config(format!("unknown exec mode '{v}'"))),
                    }
                }
                "overhead_us" => {
                    c.executor.injected_overhead =
                        Duration::from_secs_f64(num::<f64>(key, v)? * 1e-6)
                }
                "amr" => c.amr.enabled = flag(key, v)?,
                "max_level" => c.amr.max_level = num(key, v)?,
                "tag_threshold" => c.amr.tag_threshold = num(key, v)?,
                "density_ratio" => c.shear.density_ratio = num(key, v)?,
                "mach_c" | "convective_mach" => c.shear.convective_mach = num(key, v)?,
                "wavenumber" => c.shear.wavenumber = num(key, v)?,
                "perturb_amp" => c.shear.perturb_amp = num(key, v)?,
                "shear_thickness" => c.shear.shear_thickness = Some(num(key, v)?),
                _ => return Err(Error::Config(format!("unknown key '{key}'"))),
            }
        }
        if case == Case::Sod1d && !domain_touched {
            // Square nodes across the thin strip.
            c.domain.3 = c.domain.2 + (c.domain.1 - c.domain.0) * c.ny as f64 / c.nx as f64;
        }
        c.validate()?;
        Ok(c)
    }

    /// Reads a config file, then applies `overrides` on top.
    pub fn load(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut pairs = match path {
            Some(p) => parse_file(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            pairs.insert(normalize(k), v.clone());
        }
        Self::from_pairs(&pairs)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let (x0, x1, y0, y1) = self.domain;
        if !(x0 < x1 && y0 < y1) {
            return bad(format!("domain bounds out of order: {:?}", self.domain));
        }
        if self.patch_n == 0
            || self.nx % self.patch_n != 0
            || self.ny % self.patch_n != 0
            || self.nx == 0
            || self.ny == 0
        {
            return bad(format!(
                "grid {}x{} is not divisible into {}-node patches",
                self.nx, self.ny, self.patch_n
            ));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end >= 0.0) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.gamma > 1.0) {
            return bad(format!("gamma must exceed 1, got {}", self.gamma));
        }
        if self.executor.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        let s = &self.shear;
        if !(s.density_ratio > 0.0) || !(s.convective_mach > 0.0) || s.wavenumber == 0 {
            return bad("shear layer needs density_ratio > 0, mach_c > 0, wavenumber >= 1".into());
        }
        if !(self.amr.tag_threshold > 0.0) {
            return bad("tag_threshold must be positive".into());
        }
        self.scheme.validate()
    }

    pub fn roots(&self) -> (usize, usize) {
        (self.nx / self.patch_n, self.ny / self.patch_n)
    }

    pub fn periodic(&self) -> bool {
        self.case != Case::Sod1d
    }
}

fn normalize(k: &str) -> String {
    k.trim()
        .trim_start_matches("--")
        .to_ascii_lowercase()
        .replace('-', "_")
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value '{v}' for '{key}'")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean '{v}' for '{key}'"))),
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        out.insert(normalize(k), v.trim().to_string());
    }
    Ok(out)
}
