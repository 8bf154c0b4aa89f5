//! JSON run configuration with sections `eos`, `grid`, `core`, `rotation`,
//! `solver` and `scan`. Unknown keys are rejected. Parsing fills in every
//! default, so serializing a parsed [`RunConfig`] yields the effective
//! configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eos::EosSpec;
use crate::error::{Error, Result};
use crate::field::{CoreRegion, CylGrid};
use crate::potential::RotationLaw;
use crate::scan::ScanSpec;
use crate::solver::{InitialGuess, ProblemSpec, ScfConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoreShapeSpec {
    Spheroid { a_r: f64, a_z: f64 },
    Profile { z: Vec<f64>, a_r: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreSection {
    pub shape: CoreShapeSpec,
    pub rho_core: f64,
    #[serde(default)]
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RotationSection {
    Constant { omega: f64 },
    Sampled { s: Vec<f64>, omega: Vec<f64> },
}

impl Default for RotationSection {
    fn default() -> Self {
        RotationSection::Constant { omega: 0.0 }
    }
}

fn default_guess() -> InitialGuess {
    InitialGuess::GaussianBlob
}

macro_rules! scf_default {
    ($name:ident, $ty:ty, $field:ident) => {
        fn $name() -> $ty {
            ScfConfig::default().$field
        }
    };
}

scf_default!(default_damping, f64, damping);
scf_default!(default_tol_density, f64, tol_density);
scf_default!(default_tol_residual, f64, tol_residual);
scf_default!(default_max_iter, usize, max_iter);
scf_default!(default_lambda_bracket, (f64, f64), lambda_bracket);
scf_default!(default_mass_tol, f64, mass_tol);
scf_default!(default_runoff_fraction, f64, runoff_fraction);
scf_default!(default_runoff_margin_cells, usize, runoff_margin_cells);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub mass: f64,
    #[serde(default = "default_guess")]
    pub initial_guess: InitialGuess,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_tol_density")]
    pub tol_density: f64,
    #[serde(default = "default_tol_residual")]
    pub tol_residual: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_lambda_bracket")]
    pub lambda_bracket: (f64, f64),
    #[serde(default = "default_mass_tol")]
    pub mass_tol: f64,
    #[serde(default = "default_runoff_fraction")]
    pub runoff_fraction: f64,
    #[serde(default = "default_runoff_margin_cells")]
    pub runoff_margin_cells: usize,
}

fn default_retry() -> Option<f64> {
    Some(1.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub omega_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    /// `null` disables the enlarged-domain retry.
    #[serde(default = "default_retry")]
    pub retry_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub eos: EosSpec,
    pub grid: CylGrid,
    pub core: CoreSection,
    #[serde(default)]
    pub rotation: RotationSection,
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Pretty JSON with every default written out.
    pub fn effective_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn scf_config(&self) -> ScfConfig {
        let s = &self.solver;
        ScfConfig {
            damping: s.damping,
            tol_density: s.tol_density,
            tol_residual: s.tol_residual,
            max_iter: s.max_iter,
            lambda_bracket: s.lambda_bracket,
            mass_tol: s.mass_tol,
            runoff_fraction: s.runoff_fraction,
            runoff_margin_cells: s.runoff_margin_cells,
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let core = match &self.core.shape {
            CoreShapeSpec::Spheroid { a_r, a_z } => {
                CoreRegion::spheroid(*a_r, *a_z, self.core.rho_core)?
            }
            CoreShapeSpec::Profile { z, a_r } => {
                CoreRegion::profile(z.clone(), a_r.clone(), self.core.rho_core)?
            }
        };
        let rotation = match &self.rotation {
            RotationSection::Constant { omega } => RotationLaw::constant(*omega)?,
            RotationSection::Sampled { s, omega } => {
                let law = RotationLaw::Sampled {
                    s: s.clone(),
                    omega: omega.clone(),
                };
                law.validate()?;
                law
            }
        };
        let spec = ProblemSpec {
            eos: self.eos.build()?,
            grid: self.grid,
            core,
            mu: self.core.mu,
            rotation,
            mass: self.solver.mass,
            initial_guess: self.solver.initial_guess.clone(),
        };
        spec.validate()?;
        self.scf_config().validate()?;
        Ok(spec)
    }

    pub fn scan_spec(&self) -> Result<ScanSpec> {
        let scan = self
            .scan
            .as_ref()
            .ok_or_else(|| Error::Config("missing section `scan`".into()))?;
        let spec = ScanSpec {
            base: self.problem()?,
            omega_values: scan.omega_values.clone(),
            mu_values: scan.mu_values.clone(),
            config: self.scf_config(),
            retry_factor: scan.retry_factor,
        };
        spec.validate()?;
        Ok(spec)
    }
}
