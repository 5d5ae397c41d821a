//! Snapshot writers and numerical Schlieren.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::cases::config::OutputFormat;
use crate::error::{Error, Result};
use crate::fields::FieldStore;
use crate::gas::{GasModel, Primitive};
use crate::mesh::Mesh;

/// Uniform raster of one scalar, row-major with x fastest and `y` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl Raster {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }
}

/// Composite primitive field at `level` resolution.
fn primitives_at(store: &FieldStore, m: &Mesh, g: &GasModel, level: u32) -> Result<Vec<Primitive>> {
    store
        .composite(m, level)
        .iter()
        .map(|u| g.cons_to_prim(u))
        .collect()
}

pub const SCHLIEREN_K: f64 = 15.0;

/// `s = exp(-k |grad rho| / max |grad rho|)` on the finest-level composite,
/// with second-order central differences.
pub fn schlieren(store: &FieldStore, m: &Mesh, k: f64) -> Raster {
    let level = m.max_level();
    let d = store.domain();
    let (nx, ny) = (d.nodes_x(level) as usize, d.nodes_y(level) as usize);
    let (dx, dy) = (d.dx(level), d.dy(level));
    let rho: Vec<f64> = store.composite(m, level).iter().map(|u| u.mass).collect();
    let periodic = m.periodic();
    // Neighbor indices and their separation in nodes.
    let around = |i: usize, n: usize| -> (usize, usize, f64) {
        if periodic {
            ((i + n - 1) % n, (i + 1) % n, 2.0)
        } else {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            (lo, hi, (hi - lo) as f64)
        }
    };
    let mut grad = vec![0.0; nx * ny];
    for j in 0..ny {
        let (jm, jp, sy) = around(j, ny);
        for i in 0..nx {
            let (im, ip, sx) = around(i, nx);
            let gx = if sx > 0.0 {
                (rho[j * nx + ip] - rho[j * nx + im]) / (sx * dx)
            } else {
                0.0
            };
            let gy = if sy > 0.0 {
                (rho[jp * nx + i] - rho[jm * nx + i]) / (sy * dy)
            } else {
                0.0
            };
            grad[j * nx + i] = gx.hypot(gy);
        }
    }
    let max = grad.iter().copied().fold(0.0, f64::max);
    let values = if max > 0.0 {
        grad.iter().map(|g| (-k * g / max).exp()).collect()
    } else {
        vec![1.0; nx * ny]
    };
    Raster { nx, ny, values }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Legacy ASCII VTK structured points with rho, u, v, p.
pub fn write_vtk(
    store: &FieldStore,
    m: &Mesh,
    g: &GasModel,
    level: u32,
    path: &Path,
) -> Result<()> {
    let d = store.domain();
    let (nx, ny) = (d.nodes_x(level), d.nodes_y(level));
    let w = primitives_at(store, m, g, level)?;
    let io = |e| Error::io(path, e);
    let mut f = create(path)?;
    (|| -> std::io::Result<()> {
        writeln!(f, "# vtk DataFile Version 3.0")?;
        writeln!(f, "patchflow level {level}")?;
        writeln!(f, "ASCII")?;
        writeln!(f, "DATASET STRUCTURED_POINTS")?;
        writeln!(f, "DIMENSIONS {nx} {ny} 1")?;
        writeln!(f, "ORIGIN {} {} 0", d.node_x(level, 0), d.node_y(level, 0))?;
        writeln!(f, "SPACING {} {} 1", d.dx(level), d.dy(level))?;
        writeln!(f, "POINT_DATA {}", nx * ny)?;
        let fields: [(&str, fn(&Primitive) -> f64); 4] = [
            ("rho", |w| w.rho),
            ("u", |w| w.u),
            ("v", |w| w.v),
            ("p", |w| w.p),
        ];
        for (name, get) in fields {
            writeln!(f, "SCALARS {name} double 1")?;
            writeln!(f, "LOOKUP_TABLE default")?;
            for s in &w {
                writeln!(f, "{}", get(s))?;
            }
        }
        f.flush()
    })()
    .map_err(io)
}

/// One row per leaf node: `x,y,rho,u,v,p`.
pub fn write_csv(store: &FieldStore, m: &Mesh, g: &GasModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let to_err = |e: csv::Error| Error::io(path, e.into());
    w.write_record(["x", "y", "rho", "u", "v", "p"])
        .map_err(to_err)?;
    for p in m.leaves() {
        let f = store.field(p);
        for (i, j) in f.interior() {
            let (x, y) = store.node_xy(m, p, i, j);
            let s = g.cons_to_prim(&f.get(i, j))?;
            w.serialize((x, y, s.rho, s.u, s.v, s.p)).map_err(to_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads back a CSV snapshot as `[x, y, rho, u, v, p]` rows.
pub fn read_csv(path: &Path) -> Result<Vec<[f64; 6]>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    r.deserialize()
        .map(|row| row.map_err(|e: csv::Error| Error::io(path, e.into())))
        .collect()
}

/// Binary 8-bit PGM, top row = largest y. Values map linearly from
/// `[min, max]` onto `[0, 255]`; a constant raster is all zeros.
pub fn write_pgm(r: &Raster, path: &Path) -> Result<()> {
    let (lo, hi) = r
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    let mut bytes = Vec::with_capacity(r.nx * r.ny);
    for j in (0..r.ny).rev() {
        for i in 0..r.nx {
            let t = if span > 0.0 {
                (r.get(i, j) - lo) / span
            } else {
                0.0
            };
            bytes.push((t * 255.0).round() as u8);
        }
    }
    let mut f = create(path)?;
    (|| -> std::io::Result<()> {
        write!(f, "P5\n{} {}\n255\n", r.nx, r.ny)?;
        f.write_all(&bytes)?;
        f.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

/// Finest-level density raster.
pub fn density_raster(store: &FieldStore, m: &Mesh) -> Raster {
    let level = m.max_level();
    let d = store.domain();
    Raster {
        nx: d.nodes_x(level) as usize,
        ny: d.nodes_y(level) as usize,
        values: store.composite(m, level).iter().map(|u| u.mass).collect(),
    }
}

/// Writes one snapshot in `format` next to `prefix` and returns the files.
pub fn write_snapshot(
    store: &FieldStore,
    m: &Mesh,
    g: &GasModel,
    prefix: &Path,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    let with = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    let mut out = Vec::new();
    match format {
        OutputFormat::Vtk => {
            let levels = m.max_level();
            for level in 0..=levels {
                let p = if levels == 0 {
                    with(".vtk")
                } else {
                    with(&format!("_L{level}.vtk"))
                };
                write_vtk(store, m, g, level, &p)?;
                out.push(p);
            }
        }
        OutputFormat::Csv => {
            let p = with(".csv");
            write_csv(store, m, g, &p)?;
            out.push(p);
        }
        OutputFormat::Pgm => {
            let p = with("_rho.pgm");
            write_pgm(&density_raster(store, m), &p)?;
            out.push(p);
        }
        OutputFormat::Schlieren => {
            let p = with("_schlieren.pgm");
            write_pgm(&schlieren(store, m, SCHLIEREN_K), &p)?;
            out.push(p);
        }
    }
    Ok(out)
}
