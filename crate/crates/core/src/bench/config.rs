use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::krylov::{GmresOptions, MinresOptions, Side};
use crate::saddle::{InstanceCase, PreconditionerSpec};
use crate::stokes_darcy::RhsMode;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Validate,
    Eig,
    Solve,
    Table,
    ExportMtx,
}

/// Where the system comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSource {
    /// Seeded random blocks; the seed is the top-level `seed`.
    BuiltinRandom {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_p")]
        p: usize,
        #[serde(default = "default_case")]
        case: InstanceCase,
    },
    StokesDarcy {
        #[serde(default = "default_n1")]
        n1: usize,
        #[serde(default = "one")]
        kappa: f64,
        #[serde(default = "one")]
        nu: f64,
        /// Defaults to `nu`.
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        rhs_mode: RhsMode,
    },
    MtxDirectory { path: PathBuf },
}

fn default_n() -> usize {
    20
}
fn default_m() -> usize {
    10
}
fn default_p() -> usize {
    4
}
fn default_case() -> InstanceCase {
    InstanceCase::Symmetric
}
fn default_n1() -> usize {
    16
}
fn one() -> f64 {
    1.0
}

impl Default for InstanceSource {
    fn default() -> Self {
        InstanceSource::BuiltinRandom {
            n: default_n(),
            m: default_m(),
            p: default_p(),
            case: default_case(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Gmres,
    Minres,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub restart: usize,
    pub tol: f64,
    pub maxit: usize,
    pub side: Side,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GmresOptions::default();
        Self {
            kind: SolverKind::Gmres,
            restart: g.restart,
            tol: g.tol,
            maxit: g.maxit,
            side: g.side,
        }
    }
}

impl SolverConfig {
    pub fn gmres(&self) -> GmresOptions {
        GmresOptions {
            restart: self.restart,
            tol: self.tol,
            maxit: self.maxit,
            side: self.side,
        }
    }

    pub fn minres(&self) -> MinresOptions {
        MinresOptions {
            tol: self.tol,
            maxit: self.maxit,
            ..MinresOptions::default()
        }
    }
}

/// Classification suites run by `validate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Six-value catalogue against its closed form and published values.
    Catalogue,
    /// First-order expansion of the cubic roots around `mu = 1`.
    Perturbation,
    /// Full spectrum of the block diagonal preconditioner, zero `D`.
    Theorem1,
    /// Full spectrum with the BFBt approximation of `S2`.
    Bfbt,
    /// Predicted pair eigenvalues with nonzero `D`.
    DNonzero,
}

/// Choice of `S2^` for the suites that take one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum S2HatChoice {
    #[default]
    Exact,
    /// `factor * S2`.
    Scaled { factor: f64 },
    /// `L (I + scale E) L^T` for `S2 = L L^T` and a seeded SPD `E`.
    Perturbed { scale: f64 },
    /// `S2` with one eigen-direction flipped, for exercising the error path.
    Indefinite,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// Empty selects the suites that apply to the instance.
    pub suites: Vec<Suite>,
    pub s2_hat: S2HatChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableConfig {
    pub n1: Vec<usize>,
    pub kappa: Vec<f64>,
    pub nu: Vec<f64>,
    /// Slip coefficient; `None` sets it to `nu` per cell.
    pub alpha: Option<f64>,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            n1: vec![32, 64],
            kappa: vec![1.0, 1e-2],
            nu: vec![1.0],
            alpha: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Writes measured seconds into CSV tables; off keeps output reproducible.
    pub timings: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub instance: InstanceSource,
    /// `None` picks the practical block lower-triangular preconditioner for
    /// Stokes-Darcy instances and exact blocks otherwise.
    pub preconditioner: Option<PreconditionerSpec>,
    pub solver: SolverConfig,
    pub validate: ValidateConfig,
    pub table: TableConfig,
    pub output: OutputConfig,
    pub seed: u64,
    /// Worker threads for independent runs; 0 uses all cores.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            instance: InstanceSource::default(),
            preconditioner: None,
            solver: SolverConfig::default(),
            validate: ValidateConfig::default(),
            table: TableConfig::default(),
            output: OutputConfig::default(),
            seed: 42,
            jobs: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Applies `key.path = value` overrides on top of an optional JSON file.
    /// Values parse as JSON when possible and as strings otherwise.
    pub fn resolve(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut value = match path {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => serde_json::to_value(Self::default())?,
        };
        for (key, raw) in overrides {
            let v = parse_value(raw);
            // a new instance kind starts from that kind's defaults
            if key == "instance.kind" && value.get("instance").and_then(|i| i.get("kind")) != Some(&v) {
                set_dotted(&mut value, "instance", serde_json::json!({}))?;
            }
            set_dotted(&mut value, key, v)?;
        }
        Ok(serde_json::from_value(value)?)
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `root[a][b]...` for the key `a.b...`, creating objects on the way
/// and replacing `null`.
pub fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("malformed override key '{key}'")));
    }
    let mut cur = root;
    for part in &parts[..parts.len() - 1] {
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        if !cur.is_object() {
            return Err(Error::Parse(format!("override '{key}' descends into a non-object")));
        }
        cur = cur
            .as_object_mut()
            .expect("checked above")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    if cur.is_null() {
        *cur = Value::Object(Default::default());
    }
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| Error::Parse(format!("override '{key}' descends into a non-object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
