//! Sweeps over constant rotation rate `Ω` and core strength `μ`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::CylGrid;
use crate::potential::{AxiKernel, RotationLaw};
use crate::solver::{Outcome, ProblemSpec, ScfConfig, Solver, Verdict};

#[derive(Debug, Clone)]
pub struct ScanSpec {
    /// Template; its rotation law and `μ` are replaced per cell.
    pub base: ProblemSpec,
    pub omega_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    pub config: ScfConfig,
    /// Cells ending in run-off are re-solved once on a domain enlarged by
    /// this factor.
    pub retry_factor: Option<f64>,
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Domain(format!("{name} must not be empty")));
    }
    if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!(
            "{name} must be finite and non-negative"
        )));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        check_axis("omega_values", &self.omega_values)?;
        check_axis("mu_values", &self.mu_values)?;
        self.config.validate()?;
        if let Some(f) = self.retry_factor {
            if !(f > 1.0 && f.is_finite()) {
                return Err(Error::Domain(format!("retry factor {f} must exceed 1")));
            }
        }
        self.base.validate()
    }

    /// The single-solve problem for cell `(Ω, μ)`.
    pub fn cell_spec(&self, omega: f64, mu: f64) -> Result<ProblemSpec> {
        let mut spec = self.base.clone();
        spec.rotation = RotationLaw::constant(omega)?;
        spec.mu = mu;
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
pub struct ScanCell {
    pub omega: f64,
    pub mu: f64,
    /// Whether the cell was re-solved on the enlarged domain.
    pub retried: bool,
    pub outcome: Outcome,
}

impl ScanCell {
    pub fn verdict(&self) -> Verdict {
        self.outcome.verdict
    }
}

#[derive(Debug, Clone)]
pub struct ScanTable {
    pub omega_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    /// Row-major in `Ω`: cell `(a, b)` sits at `a * mu_values.len() + b`.
    pub cells: Vec<ScanCell>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub omega: f64,
    pub mu: f64,
    pub verdict: Verdict,
    pub lambda: f64,
    pub iters: usize,
    pub d_r: f64,
    pub d_z: f64,
    pub energy_total: f64,
    pub retried: bool,
}

impl ScanTable {
    pub fn cell(&self, omega_index: usize, mu_index: usize) -> &ScanCell {
        &self.cells[omega_index * self.mu_values.len() + mu_index]
    }

    pub fn rows(&self) -> Vec<ScanRow> {
        self.cells
            .iter()
            .map(|c| ScanRow {
                omega: c.omega,
                mu: c.mu,
                verdict: c.verdict(),
                lambda: c.outcome.state.lambda,
                iters: c.outcome.state.iter,
                d_r: c.outcome.support.0,
                d_z: c.outcome.support.1,
                energy_total: c.outcome.state.energy.total,
                retried: c.retried,
            })
            .collect()
    }

    /// `omega,mu,verdict,lambda,iters,d_r,d_z` rows in table order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,mu,verdict,lambda,iters,d_r,d_z\n");
        for r in self.rows() {
            out.push_str(&format!(
                "{},{},{},{:.16e},{},{:.16e},{:.16e}\n",
                r.omega,
                r.mu,
                r.verdict.as_str(),
                r.lambda,
                r.iters,
                r.d_r,
                r.d_z
            ));
        }
        out
    }

    /// Verdicts indexed `[Ω][μ]`.
    pub fn verdict_matrix(&self) -> Vec<Vec<Verdict>> {
        (0..self.omega_values.len())
            .map(|a| {
                (0..self.mu_values.len())
                    .map(|b| self.cell(a, b).verdict())
                    .collect()
            })
            .collect()
    }
}

/// Rows where a converged cell is followed by a non-converged one at larger `μ`.
pub fn monotonicity_warnings(
    omega_values: &[f64],
    mu_values: &[f64],
    verdicts: &[Vec<Verdict>],
) -> Vec<String> {
    let mut out = Vec::new();
    for (a, row) in verdicts.iter().enumerate() {
        if let Some(first) = row.iter().position(|v| *v == Verdict::Converged) {
            for (b, v) in row.iter().enumerate().skip(first + 1) {
                if *v != Verdict::Converged {
                    out.push(format!(
                        "omega={}: converged at mu={} but {} at larger mu={}",
                        omega_values[a],
                        mu_values[first],
                        v.as_str(),
                        mu_values[b]
                    ));
                }
            }
        }
    }
    out
}

struct KernelCache {
    kernels: HashMap<[u64; 4], Arc<AxiKernel>>,
}

impl KernelCache {
    fn get(&mut self, grid: CylGrid) -> Result<Arc<AxiKernel>> {
        let key = [
            grid.r_max.to_bits(),
            grid.z_max.to_bits(),
            grid.n_r as u64,
            grid.n_z as u64,
        ];
        if let Some(k) = self.kernels.get(&key) {
            return Ok(k.clone());
        }
        let k = Arc::new(AxiKernel::new(grid)?);
        self.kernels.insert(key, k.clone());
        Ok(k)
    }
}

fn solve_cells(
    spec: &ScanSpec,
    cells: &[(f64, f64)],
    grid: CylGrid,
    kernel: &Arc<AxiKernel>,
) -> Result<Vec<Outcome>> {
    cells
        .par_iter()
        .map(|&(omega, mu)| {
            let mut p = spec.cell_spec(omega, mu)?;
            p.grid = grid;
            Solver::with_kernel(p, kernel.clone())?.solve(&spec.config)
        })
        .collect()
}

/// One solve per `(Ω, μ)` pair on the current rayon pool. Results do not
/// depend on the pool size or on scheduling.
pub fn run_scan(spec: &ScanSpec) -> Result<ScanTable> {
    spec.validate()?;
    let mut cache = KernelCache {
        kernels: HashMap::new(),
    };
    let grid = spec.base.grid;
    let kernel = cache.get(grid)?;
    let pairs: Vec<(f64, f64)> = spec
        .omega_values
        .iter()
        .flat_map(|&o| spec.mu_values.iter().map(move |&m| (o, m)))
        .collect();
    let first = solve_cells(spec, &pairs, grid, &kernel)?;
    let mut cells: Vec<ScanCell> = pairs
        .iter()
        .zip(first)
        .map(|(&(omega, mu), outcome)| ScanCell {
            omega,
            mu,
            retried: false,
            outcome,
        })
        .collect();

    if let Some(f) = spec.retry_factor {
        let redo: Vec<usize> = (0..cells.len())
            .filter(|&n| cells[n].verdict() == Verdict::MassRunoff)
            .collect();
        if !redo.is_empty() {
            let big = grid.scaled(f);
            spec.base.core.validate(&big)?;
            let kernel = cache.get(big)?;
            let redo_pairs: Vec<(f64, f64)> = redo.iter().map(|&n| pairs[n]).collect();
            let again = solve_cells(spec, &redo_pairs, big, &kernel)?;
            for (n, outcome) in redo.into_iter().zip(again) {
                cells[n].outcome = outcome;
                cells[n].retried = true;
            }
        }
    }

    let mut table = ScanTable {
        omega_values: spec.omega_values.clone(),
        mu_values: spec.mu_values.clone(),
        cells,
        warnings: Vec::new(),
    };
    table.warnings = monotonicity_warnings(
        &table.omega_values,
        &table.mu_values,
        &table.verdict_matrix(),
    );
    Ok(table)
}
