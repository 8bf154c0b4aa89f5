//! Newtonian potential `B`, rigid-core potential `Φ_K` and centrifugal
//! potential `J`. Units have `G = 1`; all potentials are positive
//! (`Bρ = −φ`).

mod elliptic;
mod kernel;
mod rotation;

use std::sync::Arc;

use serde::Serialize;

pub use elliptic::{elliptic_k, elliptic_k_complement};
pub use kernel::{newtonian_potential, newtonian_potential_direct, self_cell_weight, AxiKernel};
pub use rotation::{rotation_potential, RotationLaw};

use crate::error::Result;
use crate::field::{CoreRegion, CylGrid};

/// Scalar field sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    grid: CylGrid,
    values: Vec<f64>,
}

impl PotentialField {
    pub fn new(grid: CylGrid, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            grid.len(),
            "potential values must cover the grid"
        );
        PotentialField { grid, values }
    }

    pub fn zeros(grid: CylGrid) -> Self {
        PotentialField::new(grid, vec![0.0; grid.len()])
    }

    pub fn grid(&self) -> &CylGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PotentialField::new(self.grid, self.values.iter().map(|v| v * factor).collect())
    }
}

/// `μ·Bρ_K`: the potential of the core density, evaluated on every cell
/// (core cells included).
pub fn core_potential(kernel: &AxiKernel, core: &CoreRegion, mu: f64) -> Result<PotentialField> {
    let grid = *kernel.grid();
    let rho_k = core.density(&grid);
    let phi = kernel.apply(&rho_k)?;
    Ok(PotentialField::new(grid, phi).scaled(mu))
}

/// Pass/fail summary of the conditions a core potential must meet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorePotentialReport {
    /// `Φ_K > 0` on every cell.
    pub positive: bool,
    /// The largest boundary value is below the interior maximum.
    pub decays: bool,
    /// Non-increasing in `|z|` at each fixed `r` once `|z| > z0`.
    pub monotone_beyond_z0: bool,
}

impl CorePotentialReport {
    pub fn passed(&self) -> bool {
        self.positive && self.decays && self.monotone_beyond_z0
    }
}

const MONOTONE_SLACK: f64 = 1e-12;

pub fn validate_core_potential(phi: &PotentialField, core: &CoreRegion) -> CorePotentialReport {
    let g = *phi.grid();
    let v = phi.values();
    let positive = v.iter().all(|&x| x > 0.0);
    let global = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut boundary = f64::NEG_INFINITY;
    for i in 0..g.n_r {
        for j in 0..g.n_z {
            if i + 1 == g.n_r || j == 0 || j + 1 == g.n_z {
                boundary = boundary.max(v[g.idx(i, j)]);
            }
        }
    }
    let decays = boundary < global;
    let slack = MONOTONE_SLACK * phi.max_abs();
    let z0 = core.z0();
    let mut monotone = true;
    for i in 0..g.n_r {
        for j in 0..g.n_z - 1 {
            let (za, zb) = (g.z(j), g.z(j + 1));
            let (a, b) = (v[g.idx(i, j)], v[g.idx(i, j + 1)]);
            // upper half: moving up increases |z|; lower half: moving down does
            if za > z0 && b > a + slack {
                monotone = false;
            }
            if zb < -z0 && a > b + slack {
                monotone = false;
            }
        }
    }
    CorePotentialReport {
        positive,
        decays,
        monotone_beyond_z0: monotone,
    }
}

/// External potentials felt by the gas: the centrifugal potential `J`, the
/// unscaled core potential `Bρ_K`, the core strength `μ`, and the kernel for
/// the self-gravity term.
#[derive(Debug, Clone)]
pub struct Environment {
    pub kernel: Arc<AxiKernel>,
    pub rotation: PotentialField,
    pub core_potential: PotentialField,
    pub mu: f64,
    pub constant_omega: Option<f64>,
}

impl Environment {
    pub fn new(
        kernel: Arc<AxiKernel>,
        law: &RotationLaw,
        core: &CoreRegion,
        mu: f64,
    ) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(crate::error::Error::Domain(format!(
                "core strength mu={mu} must be non-negative"
            )));
        }
        let grid = *kernel.grid();
        core.validate(&grid)?;
        let rotation = rotation_potential(law, &grid)?;
        let core_potential = core_potential(&kernel, core, 1.0)?;
        Ok(Environment {
            kernel,
            rotation,
            core_potential,
            mu,
            constant_omega: law.constant_omega(),
        })
    }

    pub fn grid(&self) -> &CylGrid {
        self.kernel.grid()
    }

    /// `J + μΦ_K` on every cell.
    pub fn external(&self) -> Vec<f64> {
        self.rotation
            .values()
            .iter()
            .zip(self.core_potential.values())
            .map(|(j, p)| j + self.mu * p)
            .collect()
    }

    /// Same environment with a different core strength.
    pub fn with_mu(&self, mu: f64) -> Self {
        Environment { mu, ..self.clone() }
    }
}
