//! Self-consistent-field iteration for the mass-constrained equilibrium.
//!
//! Each step evaluates the total potential `Φ = Bρ + J + μΦ_K` of the current
//! density, picks the multiplier `λ` for which `ρ̂ = (A′)⁻¹(Φ + λ)` carries the
//! prescribed mass, relaxes `ρ ← (1−α)ρ + αρ̂` and renormalizes. A fixed point
//! satisfies the equilibrium relation on the support and the variational
//! inequality off it.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{
    default_threshold, el_residual_field, energy_with_potential, multiplier_bound_check,
    residual_stats, DiagnosticsReport, EnergyReport, MultiplierBoundReport, ResidualStats,
};
use crate::eos::Eos;
use crate::error::{Error, Result};
use crate::field::{io, CoreRegion, CylGrid, DensityField};
use crate::potential::{AxiKernel, Environment, RotationLaw};

/// Starting density, rescaled to the target mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialGuess {
    /// Gaussian torus centred at `(max(1.5·a_r, 0.2·r_max), 0)`.
    GaussianBlob,
    /// Uniform spherical shell from the core surface to half the grid extent.
    UniformShell,
    /// A field dump (`r,z,rho`) on the same grid.
    FromFile { path: PathBuf },
}

/// Physical problem: EOS, geometry, external potentials and total mass.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub eos: Eos,
    pub grid: CylGrid,
    pub core: CoreRegion,
    pub mu: f64,
    pub rotation: RotationLaw,
    pub mass: f64,
    pub initial_guess: InitialGuess,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.core.validate(&self.grid)?;
        self.rotation.validate()?;
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Domain(format!(
                "total mass {} must be positive",
                self.mass
            )));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::Domain(format!(
                "core strength mu={} must be non-negative",
                self.mu
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScfConfig {
    /// Relaxation weight `α ∈ (0, 1]`.
    pub damping: f64,
    /// Convergence threshold on `‖ρ_new − ρ‖₁ / M`.
    pub tol_density: f64,
    /// Convergence threshold on the residual, as a fraction of `|λ|`.
    pub tol_residual: f64,
    pub max_iter: usize,
    pub lambda_bracket: (f64, f64),
    pub mass_tol: f64,
    pub runoff_fraction: f64,
    pub runoff_margin_cells: usize,
}

impl Default for ScfConfig {
    fn default() -> Self {
        ScfConfig {
            damping: 0.5,
            tol_density: 1e-8,
            tol_residual: 1e-3,
            max_iter: 500,
            lambda_bracket: (-1.0, 0.0),
            mass_tol: 1e-10,
            runoff_fraction: 0.05,
            runoff_margin_cells: 2,
        }
    }
}

/// Lowest damping reached by automatic halving.
pub const MIN_DAMPING: f64 = 0.05;
/// Consecutive update-norm increases that trigger halving.
const DAMPING_PATIENCE: usize = 3;
/// Consecutive run-off flags that end a solve.
const RUNOFF_PATIENCE: usize = 3;
const MAX_BRACKET_DOUBLINGS: usize = 60;

impl ScfConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.tol_density,
            self.tol_residual,
            self.mass_tol,
            self.runoff_fraction,
        ];
        if positive.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Domain("solver tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain(format!(
                "damping {} must lie in (0, 1]",
                self.damping
            )));
        }
        if !(self.runoff_fraction < 1.0) || self.runoff_margin_cells == 0 {
            return Err(Error::Domain(
                "runoff fraction must be < 1 and margin >= 1 cell".into(),
            ));
        }
        let (lo, hi) = self.lambda_bracket;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::Domain(format!(
                "lambda bracket ({lo}, {hi}) must satisfy lo < hi"
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Density `(A′)⁻¹(Φ + λ)` on unmasked cells.
pub fn density_of_lambda(
    phi_tot: &[f64],
    lambda: f64,
    eos: &Eos,
    mask: &[bool],
) -> Result<Vec<f64>> {
    phi_tot
        .iter()
        .zip(mask)
        .map(|(p, &m)| {
            if m {
                Ok(0.0)
            } else {
                eos.enthalpy_inverse(p + lambda)
            }
        })
        .collect()
}

/// Total mass of `(A′)⁻¹(Φ + λ)`; non-decreasing and continuous in `λ`.
pub fn mass_of_lambda(
    phi_tot: &[f64],
    lambda: f64,
    eos: &Eos,
    grid: &CylGrid,
    mask: &[bool],
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..grid.n_r {
        let mut row = 0.0;
        for j in 0..grid.n_z {
            let n = grid.idx(i, j);
            if !mask[n] {
                row += eos.enthalpy_inverse(phi_tot[n] + lambda)?;
            }
        }
        total += row * grid.cell_volume(i);
    }
    Ok(total)
}

/// Multiplier `λ` with `|mass_of_lambda(λ) − M| ≤ mass_tol·M`, by bisection
/// after expanding `bracket` geometrically (at most 60 doublings per side).
pub fn solve_lambda(
    phi_tot: &[f64],
    mass: f64,
    eos: &Eos,
    grid: &CylGrid,
    mask: &[bool],
    bracket: (f64, f64),
    mass_tol: f64,
) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::Domain("target mass must be positive".into()));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Domain("lambda bracket must satisfy lo < hi".into()));
    }
    let mass_at = |l: f64| mass_of_lambda(phi_tot, l, eos, grid, mask);
    let mut width = hi - lo;
    let mut n = 0;
    while mass_at(lo)? > mass {
        hi = lo;
        lo -= width;
        width *= 2.0;
        n += 1;
        if n > MAX_BRACKET_DOUBLINGS {
            return Err(Error::LambdaBracket(
                "no multiplier gives mass below target".into(),
            ));
        }
    }
    let mut n = 0;
    loop {
        let m = match mass_at(hi) {
            Ok(m) => m,
            Err(Error::Range(msg)) => {
                return Err(Error::LambdaBracket(format!("EOS range exhausted: {msg}")));
            }
            Err(e) => return Err(e),
        };
        if m >= mass {
            break;
        }
        lo = hi;
        hi += width;
        width *= 2.0;
        n += 1;
        if n > MAX_BRACKET_DOUBLINGS {
            return Err(Error::LambdaBracket(format!(
                "mass {m} at lambda {hi} still below target {mass} after {MAX_BRACKET_DOUBLINGS} doublings"
            )));
        }
    }
    let tol = mass_tol * mass;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = mass_at(mid)?;
        if (m - mass).abs() <= tol {
            return Ok(mid);
        }
        if m < mass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `(1−α)·old + α·target`, cell by cell.
pub fn blend(old: &[f64], target: &[f64], alpha: f64) -> Vec<f64> {
    old.iter()
        .zip(target)
        .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
        .collect()
}

/// One SCF iterate together with its potential and diagnostics.
#[derive(Debug, Clone)]
pub struct ScfState {
    pub iter: usize,
    pub rho: DensityField,
    /// `Bρ` of `rho`.
    pub b_rho: Vec<f64>,
    pub lambda: f64,
    pub energy: EnergyReport,
    /// `‖ρ − ρ_prev‖₁ / M`; infinite for the initial state.
    pub update_norm: f64,
    pub residual: ResidualStats,
    /// `|∫ρ − M| / M`.
    pub mass_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converged,
    MassRunoff,
    LambdaBracketFail,
    IterationCap,
}

impl Verdict {
    pub fn note(&self) -> &'static str {
        match self {
            Verdict::Converged => "compactly supported equilibrium found",
            Verdict::MassRunoff => {
                "mass accumulates at the outer boundary; consistent with the fast-rotation non-existence regime (finite-grid evidence only)"
            }
            Verdict::LambdaBracketFail => {
                "no multiplier holds the prescribed mass; consistent with the non-existence regime (finite-grid evidence only)"
            }
            Verdict::IterationCap => "iteration budget exhausted before convergence",
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Converged => "Converged",
            Verdict::MassRunoff => "MassRunoff",
            Verdict::LambdaBracketFail => "LambdaBracketFail",
            Verdict::IterationCap => "IterationCap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub lambda: f64,
    pub energy_total: f64,
    pub update_norm: f64,
    pub mass_error: f64,
    pub el_residual_max: Option<f64>,
    pub damping: f64,
    pub runoff: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Verdict,
    pub state: ScfState,
    pub trace: Vec<TraceEntry>,
    pub initial_energy: EnergyReport,
    pub support: (f64, f64),
    /// Outermost midplane zero of `Φ + λ`, interpolated between cells.
    pub surface_radius: Option<f64>,
    pub multiplier_bound: Option<MultiplierBoundReport>,
    /// Support reaches the outermost cell layer.
    pub touches_boundary: bool,
    pub diagnostics: DiagnosticsReport,
}

/// JSON form of an [`Outcome`]; no timestamps or host data, so identical runs
/// serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeRecord {
    pub verdict: Verdict,
    pub note: &'static str,
    pub lambda: f64,
    pub iterations: usize,
    pub mass: f64,
    pub mass_error: f64,
    pub update_norm: f64,
    pub grid: CylGrid,
    pub energy: EnergyReport,
    pub initial_energy: EnergyReport,
    pub residual: ResidualStats,
    pub support: Support,
    pub surface_radius: Option<f64>,
    pub touches_boundary: bool,
    pub multiplier_bound: Option<MultiplierBoundReport>,
    pub diagnostics: DiagnosticsReport,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support {
    pub d_r: f64,
    pub d_z: f64,
}

impl Outcome {
    pub fn record(&self) -> OutcomeRecord {
        let s = &self.state;
        OutcomeRecord {
            verdict: self.verdict,
            note: self.verdict.note(),
            lambda: s.lambda,
            iterations: s.iter,
            mass: s.rho.total_mass(),
            mass_error: s.mass_error,
            update_norm: s.update_norm,
            grid: *s.rho.grid(),
            energy: s.energy,
            initial_energy: self.initial_energy,
            residual: s.residual,
            support: Support {
                d_r: self.support.0,
                d_z: self.support.1,
            },
            surface_radius: self.surface_radius,
            touches_boundary: self.touches_boundary,
            multiplier_bound: self.multiplier_bound,
            diagnostics: self.diagnostics,
            trace: self.trace.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        // non-finite values (the initial update norm) become null
        serde_json::to_string_pretty(&self.record()).expect("outcome record serializes")
    }

    /// `iter,lambda,energy_total,update_norm` rows.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,lambda,energy_total,update_norm\n");
        for t in &self.trace {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                t.iter, t.lambda, t.energy_total, t.update_norm
            ));
        }
        out
    }

    pub fn field_csv(&self) -> String {
        io::csv_string(self.state.rho.grid(), self.state.rho.values(), "rho")
    }

    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }
}

/// A problem with its kernel and external potentials assembled.
#[derive(Debug, Clone)]
pub struct Solver {
    pub spec: ProblemSpec,
    pub env: Environment,
    mask: Arc<[bool]>,
    external: Vec<f64>,
}

impl Solver {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let kernel = Arc::new(AxiKernel::new(spec.grid)?);
        Solver::with_kernel(spec, kernel)
    }

    /// Reuses a kernel built for the same grid.
    pub fn with_kernel(spec: ProblemSpec, kernel: Arc<AxiKernel>) -> Result<Self> {
        spec.validate()?;
        if *kernel.grid() != spec.grid {
            return Err(Error::Usage(
                "kernel grid does not match problem grid".into(),
            ));
        }
        let env = Environment::new(kernel, &spec.rotation, &spec.core, spec.mu)?;
        let mask = spec.core.mask(&spec.grid);
        let external = env.external();
        Ok(Solver {
            spec,
            env,
            mask,
            external,
        })
    }

    pub fn mask(&self) -> &Arc<[bool]> {
        &self.mask
    }

    /// `Bρ + J + μΦ_K`.
    pub fn total_potential(&self, b_rho: &[f64]) -> Vec<f64> {
        b_rho
            .iter()
            .zip(&self.external)
            .map(|(b, e)| b + e)
            .collect()
    }

    pub fn initial_density(&self) -> Result<DensityField> {
        let g = self.spec.grid;
        let (a_r, a_z) = self.spec.core.extent();
        let values = match &self.spec.initial_guess {
            InitialGuess::GaussianBlob => {
                let rc = (1.5 * a_r).max(0.2 * g.r_max);
                let sigma = 0.25 * g.r_max.min(g.z_max);
                g.sample(|r, z| (-((r - rc).powi(2) + z * z) / (2.0 * sigma * sigma)).exp())
            }
            InitialGuess::UniformShell => {
                let inner = a_r.max(a_z);
                let outer = 0.5 * g.r_max.min(g.z_max);
                g.sample(|r, z| {
                    let d = (r * r + z * z).sqrt();
                    if d >= inner && d < outer {
                        1.0
                    } else {
                        0.0
                    }
                })
            }
            InitialGuess::FromFile { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                io::read_csv(std::io::BufReader::new(file), &g)?
            }
        };
        DensityField::new(g, values, self.mask.clone())?.rescale_to_mass(self.spec.mass)
    }

    fn evaluate(
        &self,
        iter: usize,
        rho: DensityField,
        lambda: f64,
        update_norm: f64,
    ) -> Result<ScfState> {
        let b_rho = self.env.kernel.apply(rho.values())?;
        let energy = energy_with_potential(&rho, &b_rho, &self.spec.eos, &self.env)?;
        let res = el_residual_field(&rho, &b_rho, lambda, &self.spec.eos, &self.env)?;
        let residual = residual_stats(&rho, &res, default_threshold(&rho));
        let mass_error = (rho.total_mass() - self.spec.mass).abs() / self.spec.mass;
        Ok(ScfState {
            iter,
            rho,
            b_rho,
            lambda,
            energy,
            update_norm,
            residual,
            mass_error,
        })
    }

    /// Initial iterate with the multiplier matched to its own potential.
    pub fn initial_state(&self, config: &ScfConfig) -> Result<ScfState> {
        let rho = self.initial_density()?;
        let b = self.env.kernel.apply(rho.values())?;
        let phi = self.total_potential(&b);
        let lambda = solve_lambda(
            &phi,
            self.spec.mass,
            &self.spec.eos,
            &self.spec.grid,
            &self.mask,
            config.lambda_bracket,
            config.mass_tol,
        )?;
        self.evaluate(0, rho, lambda, f64::INFINITY)
    }

    /// One damped SCF update with relaxation weight `alpha`.
    pub fn step(&self, state: &ScfState, config: &ScfConfig, alpha: f64) -> Result<ScfState> {
        let spec = &self.spec;
        let phi = self.total_potential(&state.b_rho);
        // bracket around the previous multiplier; expansion handles large moves
        let w = (1e-3 * state.lambda.abs()).max(1e-6);
        let bracket = (state.lambda - w, state.lambda + w);
        let lambda = solve_lambda(
            &phi,
            spec.mass,
            &spec.eos,
            &spec.grid,
            &self.mask,
            bracket,
            config.mass_tol,
        )?;
        let target = density_of_lambda(&phi, lambda, &spec.eos, &self.mask)?;
        let mixed = state
            .rho
            .with_values(blend(state.rho.values(), &target, alpha))?;
        let rho = mixed.rescale_to_mass(spec.mass)?;
        let g = &spec.grid;
        let mut diff = 0.0;
        for i in 0..g.n_r {
            let mut row = 0.0;
            for j in 0..g.n_z {
                let n = g.idx(i, j);
                row += (rho.values()[n] - state.rho.values()[n]).abs();
            }
            diff += row * g.cell_volume(i);
        }
        let next = self.evaluate(state.iter + 1, rho, lambda, diff / spec.mass)?;
        if next.mass_error > config.mass_tol {
            return Err(Error::Numeric(format!(
                "mass constraint violated after iteration {}: relative error {}",
                next.iter, next.mass_error
            )));
        }
        Ok(next)
    }

    fn converged(&self, state: &ScfState, config: &ScfConfig, runoff: bool) -> bool {
        let scale = config.tol_residual * state.lambda.abs();
        let eq_ok = state.residual.max.is_some_and(|m| m <= scale);
        let ineq_ok = state.residual.ineq_violation.is_none_or(|v| v >= -scale);
        !runoff && state.update_norm <= config.tol_density && eq_ok && ineq_ok
    }

    /// Iterates until convergence, run-off, multiplier failure or the
    /// iteration cap.
    pub fn solve(&self, config: &ScfConfig) -> Result<Outcome> {
        config.validate()?;
        let mut state = match self.initial_state(config) {
            Ok(s) => s,
            Err(Error::LambdaBracket(_)) => {
                let rho = self.initial_density()?;
                let s = self.evaluate(0, rho, config.lambda_bracket.1, f64::INFINITY)?;
                let e = s.energy;
                return Ok(self.finish(Verdict::LambdaBracketFail, s, Vec::new(), e));
            }
            Err(e) => return Err(e),
        };
        let initial_energy = state.energy;
        let mut trace = Vec::new();
        let mut alpha = config.damping;
        let (mut rising, mut runoff_run) = (0usize, 0usize);
        let mut last_norm = f64::INFINITY;
        for _ in 0..config.max_iter {
            let next = match self.step(&state, config, alpha) {
                Ok(s) => s,
                Err(Error::LambdaBracket(_)) => {
                    return Ok(self.finish(
                        Verdict::LambdaBracketFail,
                        state,
                        trace,
                        initial_energy,
                    ));
                }
                Err(e) => return Err(e),
            };
            let runoff = next
                .rho
                .contains_boundary_mass(config.runoff_margin_cells, config.runoff_fraction);
            trace.push(TraceEntry {
                iter: next.iter,
                lambda: next.lambda,
                energy_total: next.energy.total,
                update_norm: next.update_norm,
                mass_error: next.mass_error,
                el_residual_max: next.residual.max,
                damping: alpha,
                runoff,
            });
            runoff_run = if runoff { runoff_run + 1 } else { 0 };
            rising = if next.update_norm > last_norm {
                rising + 1
            } else {
                0
            };
            last_norm = next.update_norm;
            if rising >= DAMPING_PATIENCE && alpha > MIN_DAMPING {
                alpha = (0.5 * alpha).max(MIN_DAMPING);
                rising = 0;
            }
            let done = self.converged(&next, config, runoff);
            state = next;
            if runoff_run >= RUNOFF_PATIENCE {
                return Ok(self.finish(Verdict::MassRunoff, state, trace, initial_energy));
            }
            if done {
                return Ok(self.finish(Verdict::Converged, state, trace, initial_energy));
            }
        }
        Ok(self.finish(Verdict::IterationCap, state, trace, initial_energy))
    }

    fn finish(
        &self,
        verdict: Verdict,
        state: ScfState,
        trace: Vec<TraceEntry>,
        initial_energy: EnergyReport,
    ) -> Outcome {
        let g = &self.spec.grid;
        let threshold = default_threshold(&state.rho);
        let support = state.rho.support_extent(threshold);
        let phi = self.total_potential(&state.b_rho);
        let surface_radius = midplane_surface(g, &phi, state.lambda, &self.mask);
        let multiplier_bound = match (verdict, self.env.constant_omega) {
            (Verdict::Converged, Some(omega)) => Some(multiplier_bound_check(
                state.lambda,
                support.0,
                omega,
                state.residual.max.unwrap_or(0.0),
            )),
            _ => None,
        };
        let mut touches_boundary = false;
        for i in 0..g.n_r {
            for j in 0..g.n_z {
                if (i + 1 == g.n_r || j == 0 || j + 1 == g.n_z) && state.rho.get(i, j) > threshold {
                    touches_boundary = true;
                }
            }
        }
        let diagnostics = DiagnosticsReport::new(
            &state.energy,
            &state.residual,
            state.lambda,
            support,
            multiplier_bound.as_ref(),
        );
        Outcome {
            verdict,
            state,
            trace,
            initial_energy,
            support,
            surface_radius,
            multiplier_bound,
            touches_boundary,
            diagnostics,
        }
    }
}

/// Outermost sign change of `Φ + λ` along the midplane, linearly interpolated.
fn midplane_surface(g: &CylGrid, phi: &[f64], lambda: f64, mask: &[bool]) -> Option<f64> {
    let rows: Vec<usize> = if g.n_z.is_multiple_of(2) {
        vec![g.n_z / 2 - 1, g.n_z / 2]
    } else {
        vec![g.n_z / 2]
    };
    let h = |i: usize| {
        let mut s = 0.0;
        for &j in &rows {
            s += phi[g.idx(i, j)] + lambda;
        }
        s / rows.len() as f64
    };
    let exterior = |i: usize| rows.iter().all(|&j| !mask[g.idx(i, j)]);
    (0..g.n_r - 1).rev().find_map(|i| {
        let (a, b) = (h(i), h(i + 1));
        (exterior(i) && exterior(i + 1) && a > 0.0 && b <= 0.0)
            .then(|| g.r(i) + g.dr() * a / (a - b))
    })
}

/// One SCF update from `state`.
pub fn scf_step(state: &ScfState, solver: &Solver, config: &ScfConfig) -> Result<ScfState> {
    solver.step(state, config, config.damping)
}

/// Builds the kernel and runs the SCF iteration for `spec`.
pub fn solve(spec: ProblemSpec, config: &ScfConfig) -> Result<Outcome> {
    Solver::new(spec)?.solve(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lane_emden_spec(n: usize) -> ProblemSpec {
        ProblemSpec {
            eos: Eos::polytrope(1.0, 2.0).unwrap(),
            grid: CylGrid::new(1.6, 1.6, n, n).unwrap(),
            core: CoreRegion::spheroid(1e-4, 1e-4, 0.0).unwrap(),
            mu: 0.0,
            rotation: RotationLaw::constant(0.0).unwrap(),
            mass: 1.0,
            initial_guess: InitialGuess::GaussianBlob,
        }
    }

    #[test]
    fn mass_of_lambda_examples() {
        let g = CylGrid::new(1.0, 1.0, 8, 8).unwrap();
        let eos = Eos::polytrope(1.0, 2.0).unwrap();
        let mask = vec![false; g.len()];
        let phi = g.sample(|r, z| 1.0 / (0.1 + r * r + z * z));
        let top = phi.iter().cloned().fold(0.0, f64::max);
        assert_eq!(
            mass_of_lambda(&phi, -top - 1.0, &eos, &g, &mask).unwrap(),
            0.0
        );
        let mut last = 0.0;
        for l in [-9.0, -5.0, -2.0, -1.0, 0.0, 3.0] {
            let m = mass_of_lambda(&phi, l, &eos, &g, &mask).unwrap();
            assert!(m >= last);
            last = m;
        }
    }

    #[test]
    fn solve_lambda_constant_potential() {
        // ρ̂ = (c+λ)/2 uniform for γ=2, k=1: mass = V·(c+λ)/2
        let g = CylGrid::new(1.0, 1.0, 8, 8).unwrap();
        let eos = Eos::polytrope(1.0, 2.0).unwrap();
        let mask = vec![false; g.len()];
        let c = 0.7;
        let phi = vec![c; g.len()];
        let volume: f64 = (0..g.n_r).map(|i| g.cell_volume(i) * g.n_z as f64).sum();
        let lambda = solve_lambda(&phi, 2.0, &eos, &g, &mask, (-1.0, 0.0), 1e-12).unwrap();
        let expect = 2.0 * 2.0 / volume - c;
        assert!((lambda - expect).abs() < 1e-10, "{lambda} vs {expect}");
        let again = solve_lambda(&phi, 2.0, &eos, &g, &mask, (-1.0, 0.0), 1e-12).unwrap();
        assert_eq!(lambda.to_bits(), again.to_bits());
    }

    #[test]
    fn solve_lambda_bracket_failure() {
        let g = CylGrid::new(1.0, 1.0, 8, 8).unwrap();
        let eos = Eos::polytrope(1.0, 2.0).unwrap();
        let mask = vec![false; g.len()];
        let phi = vec![1.0; g.len()];
        let r = solve_lambda(&phi, 1e300, &eos, &g, &mask, (-1.0, 0.0), 1e-10);
        assert!(matches!(r, Err(Error::LambdaBracket(_))));
        // a table caps the reachable density
        let tab = Eos::tabulated(vec![1e-3, 1.0], vec![1e-6, 1.0]).unwrap();
        let r = solve_lambda(&phi, 1e6, &tab, &g, &mask, (-1.0, 0.0), 1e-10);
        assert!(matches!(r, Err(Error::LambdaBracket(_))));
    }

    #[test]
    fn damping_is_linear() {
        let old = [1.0, 0.0, 4.0];
        let new = [3.0, 2.0, 0.0];
        let half = blend(&old, &new, 0.5);
        let full = blend(&old, &new, 1.0);
        for k in 0..3 {
            assert_eq!(half[k], 0.5 * (old[k] + full[k]));
        }
    }

    #[test]
    fn fixed_point_is_stationary() {
        let solver = Solver::new(lane_emden_spec(32)).unwrap();
        let config = ScfConfig::default();
        let out = solver.solve(&config).unwrap();
        assert_eq!(out.verdict, Verdict::Converged);
        let again = scf_step(&out.state, &solver, &config).unwrap();
        assert!(again.update_norm <= config.tol_density);
    }

    #[test]
    fn update_norm_drops_early() {
        let solver = Solver::new(lane_emden_spec(32)).unwrap();
        let config = ScfConfig {
            max_iter: 10,
            ..ScfConfig::default()
        };
        let out = solver.solve(&config).unwrap();
        assert_eq!(out.trace.len(), 10);
        assert!(out.trace[9].update_norm < out.trace[0].update_norm);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ScfConfig {
            damping: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ScfConfig {
            lambda_bracket: (1.0, 0.0),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ScfConfig {
            tol_density: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        let mut spec = lane_emden_spec(16);
        spec.mass = 0.0;
        assert!(Solver::new(spec).is_err());
    }
}
