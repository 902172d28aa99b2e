use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DoubleSaddleSystem;
use crate::error::{Error, Result};
use crate::sparse::{read_mtx_file, write_mtx_file, CsrMatrix};

/// `manifest.json` of a system directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// Free-form origin tag, e.g. `random` or `stokes-darcy`.
    #[serde(default)]
    pub source: String,
    /// Generator parameters (grid size, coefficients, ordering, RHS mode).
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default)]
    pub has_rhs: bool,
    #[serde(default)]
    pub has_exact_solution: bool,
}

#[derive(Clone, Debug)]
pub struct SystemBundle {
    pub system: DoubleSaddleSystem,
    pub manifest: Manifest,
    pub rhs: Option<Vec<f64>>,
    pub exact_solution: Option<Vec<f64>>,
}

fn write_vector(v: &[f64], path: &Path) -> Result<()> {
    let trip: Vec<_> = v.iter().enumerate().map(|(i, &x)| (i, 0, x)).collect();
    write_mtx_file(&CsrMatrix::from_triplets(v.len(), 1, &trip)?, path)
}

fn read_vector(path: &Path, len: usize) -> Result<Vec<f64>> {
    let a = read_mtx_file(path)?;
    if a.rows() != len || a.cols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} is {}x{}, expected {len}x1",
            path.display(),
            a.rows(),
            a.cols()
        )));
    }
    Ok((0..len).map(|i| a.get(i, 0)).collect())
}

/// Writes `A.mtx`, `B.mtx`, `C.mtx`, `D.mtx`, `manifest.json` and, when
/// present, `rhs.mtx` and `x_exact.mtx`.
pub fn save_system_dir(bundle: &SystemBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let sys = &bundle.system;
    write_mtx_file(sys.a(), &dir.join("A.mtx"))?;
    write_mtx_file(sys.b(), &dir.join("B.mtx"))?;
    write_mtx_file(sys.c(), &dir.join("C.mtx"))?;
    write_mtx_file(sys.d(), &dir.join("D.mtx"))?;
    let mut manifest = bundle.manifest.clone();
    (manifest.n, manifest.m, manifest.p) = sys.dims();
    manifest.has_rhs = bundle.rhs.is_some();
    manifest.has_exact_solution = bundle.exact_solution.is_some();
    if let Some(rhs) = &bundle.rhs {
        write_vector(rhs, &dir.join("rhs.mtx"))?;
    }
    if let Some(x) = &bundle.exact_solution {
        write_vector(x, &dir.join("x_exact.mtx"))?;
    }
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

pub fn load_system_dir(dir: &Path) -> Result<SystemBundle> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let system = DoubleSaddleSystem::new(
        read_mtx_file(&dir.join("A.mtx"))?,
        read_mtx_file(&dir.join("B.mtx"))?,
        read_mtx_file(&dir.join("C.mtx"))?,
        read_mtx_file(&dir.join("D.mtx"))?,
    )?;
    if system.dims() != (manifest.n, manifest.m, manifest.p) {
        return Err(Error::DimensionMismatch(format!(
            "manifest declares {:?}, blocks give {:?}",
            (manifest.n, manifest.m, manifest.p),
            system.dims()
        )));
    }
    let total = system.total_dim();
    let rhs = if manifest.has_rhs {
        Some(read_vector(&dir.join("rhs.mtx"), total)?)
    } else {
        None
    };
    let exact_solution = if manifest.has_exact_solution {
        Some(read_vector(&dir.join("x_exact.mtx"), total)?)
    } else {
        None
    };
    Ok(SystemBundle {
        system,
        manifest,
        rhs,
        exact_solution,
    })
}
