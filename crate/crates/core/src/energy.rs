//! Variational energy
//!
//! ```text
//! E_μ(ρ) = ∫ A(ρ) − ½ρBρ − ρJ − μρΦ_K
//! ```
//!
//! and the residual of its Euler–Lagrange relation.

use serde::Serialize;

use crate::eos::Eos;
use crate::error::{Error, Result};
use crate::field::{CylGrid, DensityField};
use crate::potential::{AxiKernel, Environment};

/// Density below which a cell counts as outside the support, relative to the
/// field maximum.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

pub fn default_threshold(field: &DensityField) -> f64 {
    SUPPORT_THRESHOLD * field.max()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `∫ A(ρ)`
    pub internal: f64,
    /// `½ ∫ ρBρ`
    pub self_gravity: f64,
    /// `∫ ρJ`
    pub rotation: f64,
    /// `μ ∫ ρΦ_K`
    pub core: f64,
    pub total: f64,
}

impl EnergyReport {
    fn new(internal: f64, self_gravity: f64, rotation: f64, core: f64) -> Self {
        EnergyReport {
            internal,
            self_gravity,
            rotation,
            core,
            total: internal - self_gravity - rotation - core,
        }
    }
}

fn check_grid(field: &DensityField, env: &Environment) -> Result<()> {
    if field.grid() != env.grid() {
        return Err(Error::Usage(
            "density field and environment are on different grids".into(),
        ));
    }
    Ok(())
}

/// Energy of `field`, evaluating `Bρ` with the environment's kernel.
pub fn energy(field: &DensityField, eos: &Eos, env: &Environment) -> Result<EnergyReport> {
    check_grid(field, env)?;
    let b_rho = env.kernel.apply(field.values())?;
    energy_with_potential(field, &b_rho, eos, env)
}

/// Energy of `field` given its precomputed `Bρ`.
pub fn energy_with_potential(
    field: &DensityField,
    b_rho: &[f64],
    eos: &Eos,
    env: &Environment,
) -> Result<EnergyReport> {
    check_grid(field, env)?;
    let g = field.grid();
    let rho = field.values();
    let (j, phi_k) = (env.rotation.values(), env.core_potential.values());
    let (mut internal, mut grav, mut rot, mut core) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..g.n_r {
        let vol = g.cell_volume(i);
        let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
        for jz in 0..g.n_z {
            let n = g.idx(i, jz);
            let s = rho[n];
            if s == 0.0 {
                continue;
            }
            a += eos.internal_energy(s)?;
            b += s * b_rho[n];
            c += s * j[n];
            d += s * phi_k[n];
        }
        internal += a * vol;
        grav += b * vol;
        rot += c * vol;
        core += d * vol;
    }
    Ok(EnergyReport::new(internal, 0.5 * grav, rot, env.mu * core))
}

/// `F(ρ) = ∫ A(ρ) − ½ ρBρ`: the energy without rotation or core.
pub fn free_energy(field: &DensityField, eos: &Eos, kernel: &AxiKernel) -> Result<f64> {
    let g = field.grid();
    let b_rho = kernel.apply(field.values())?;
    let mut total = 0.0;
    for i in 0..g.n_r {
        let mut row = 0.0;
        for jz in 0..g.n_z {
            let s = field.get(i, jz);
            if s > 0.0 {
                row += eos.internal_energy(s)? - 0.5 * s * b_rho[g.idx(i, jz)];
            }
        }
        total += row * g.cell_volume(i);
    }
    Ok(total)
}

/// Signed residual `A′(ρ) − Bρ − J − μΦ_K − λ` on every cell (zero on the
/// core mask).
pub fn el_residual_field(
    field: &DensityField,
    b_rho: &[f64],
    lambda: f64,
    eos: &Eos,
    env: &Environment,
) -> Result<Vec<f64>> {
    check_grid(field, env)?;
    let (j, phi_k) = (env.rotation.values(), env.core_potential.values());
    field
        .values()
        .iter()
        .zip(field.mask().iter())
        .enumerate()
        .map(|(n, (&s, &masked))| {
            if masked {
                return Ok(0.0);
            }
            Ok(eos.enthalpy(s)? - b_rho[n] - j[n] - env.mu * phi_k[n] - lambda)
        })
        .collect()
}

/// Euler–Lagrange residual statistics split by support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualStats {
    pub support_cells: usize,
    /// Max `|residual|` over cells with `ρ > threshold`.
    pub max: Option<f64>,
    /// Mean `|residual|` over the same cells.
    pub mean: Option<f64>,
    /// Most negative residual over exterior cells with `ρ ≤ threshold`; the
    /// variational inequality requires it to be non-negative.
    pub ineq_violation: Option<f64>,
}

pub fn residual_stats(field: &DensityField, residual: &[f64], threshold: f64) -> ResidualStats {
    let (mut count, mut max, mut sum) = (0usize, 0.0f64, 0.0);
    let mut worst: Option<f64> = None;
    for ((&s, &masked), &r) in field.values().iter().zip(field.mask().iter()).zip(residual) {
        if masked {
            continue;
        }
        if s > threshold {
            count += 1;
            max = max.max(r.abs());
            sum += r.abs();
        } else {
            worst = Some(worst.map_or(r, |w| w.min(r)));
        }
    }
    ResidualStats {
        support_cells: count,
        max: (count > 0).then_some(max),
        mean: (count > 0).then(|| sum / count as f64),
        ineq_violation: worst,
    }
}

pub fn euler_lagrange_residual(
    field: &DensityField,
    lambda: f64,
    eos: &Eos,
    env: &Environment,
    threshold: f64,
) -> Result<ResidualStats> {
    if !(threshold >= 0.0) {
        return Err(Error::Domain(
            "support threshold must be non-negative".into(),
        ));
    }
    check_grid(field, env)?;
    let b_rho = env.kernel.apply(field.values())?;
    let res = el_residual_field(field, &b_rho, lambda, eos, env)?;
    Ok(residual_stats(field, &res, threshold))
}

/// Check of `λ ≤ −½Ω²d²` for rigid rotation, `d` the radial support extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierBoundReport {
    pub lambda: f64,
    pub omega: f64,
    pub d: f64,
    /// `−½Ω²d²`
    pub bound: f64,
    /// Three times the largest equality residual.
    pub slack: f64,
    /// `bound + slack − λ`; non-negative when the check passes.
    pub margin: f64,
    pub passed: bool,
}

pub fn multiplier_bound_check(
    lambda: f64,
    d: f64,
    omega: f64,
    el_residual_max: f64,
) -> MultiplierBoundReport {
    let bound = -0.5 * omega * omega * d * d;
    let slack = 3.0 * el_residual_max.abs();
    let margin = bound + slack - lambda;
    MultiplierBoundReport {
        lambda,
        omega,
        d,
        bound,
        slack,
        margin,
        passed: margin >= 0.0,
    }
}

/// Mass-preserving dilation `ρ_t(x) = t⁻³ ρ(x/t)`, resampled by
/// nearest-cell lookup and renormalized to the original mass.
pub fn dilate(field: &DensityField, t: f64) -> Result<DensityField> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Domain(format!("dilation factor {t} must be >= 1")));
    }
    let g: CylGrid = *field.grid();
    let (d_r, d_z) = field.support_extent(0.0);
    if d_r == 0.0 && d_z == 0.0 && field.max() == 0.0 {
        return Err(Error::Degenerate("cannot dilate an empty field".into()));
    }
    let (edge_r, edge_z) = (d_r + 0.5 * g.dr(), d_z + 0.5 * g.dz());
    if t * edge_r > g.r_max || t * edge_z > g.z_max {
        return Err(Error::Range(format!(
            "dilated support ({}, {}) exceeds the grid ({}, {})",
            t * edge_r,
            t * edge_z,
            g.r_max,
            g.z_max
        )));
    }
    let scale = t.powi(-3);
    let values = g.sample(|r, z| match g.locate(r / t, z / t) {
        Some((i, j)) => scale * field.get(i, j),
        None => 0.0,
    });
    field
        .with_values(values)?
        .rescale_to_mass(field.total_mass())
}

/// `F(ρ_t) = ∫ A(ρ_t) − ½ ρ_t Bρ_t` for each dilation factor.
pub fn scaling_energy_curve(
    field: &DensityField,
    eos: &Eos,
    kernel: &AxiKernel,
    t_values: &[f64],
) -> Result<Vec<f64>> {
    t_values
        .iter()
        .map(|&t| free_energy(&dilate(field, t)?, eos, kernel))
        .collect()
}

/// Fixed-key diagnostics record of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub internal: f64,
    pub self_gravity: f64,
    pub rotation: f64,
    pub core: f64,
    pub total: f64,
    pub el_residual_max: Option<f64>,
    pub el_residual_mean: Option<f64>,
    pub ineq_violation: Option<f64>,
    pub lambda: f64,
    pub d_r: f64,
    pub d_z: f64,
    pub multiplier_bound_margin: Option<f64>,
}

impl DiagnosticsReport {
    pub fn new(
        energy: &EnergyReport,
        residual: &ResidualStats,
        lambda: f64,
        extent: (f64, f64),
        bound: Option<&MultiplierBoundReport>,
    ) -> Self {
        DiagnosticsReport {
            internal: energy.internal,
            self_gravity: energy.self_gravity,
            rotation: energy.rotation,
            core: energy.core,
            total: energy.total,
            el_residual_max: residual.max,
            el_residual_mean: residual.mean,
            ineq_violation: residual.ineq_violation,
            lambda,
            d_r: extent.0,
            d_z: extent.1,
            multiplier_bound_margin: bound.map(|b| b.margin),
        }
    }
}
