//! Consistency checks for the potential operator and the functional
//! inequalities that bound the self-gravity energy.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::scaling_energy_curve;
use crate::eos::Eos;
use crate::error::{Error, Result};
use crate::field::{uniform_ball, CoreRegion, CylGrid, DensityField};
use crate::potential::{core_potential, validate_core_potential, AxiKernel, CorePotentialReport};

/// `∫ρBρ / (‖ρ‖_{4/3}^{4/3} ‖ρ‖₁^{2/3})`.
pub fn energy_ratio(field: &DensityField, b_rho: &[f64]) -> f64 {
    let g = field.grid();
    let (mut w, mut p) = (0.0, 0.0);
    for i in 0..g.n_r {
        let vol = g.cell_volume(i);
        for j in 0..g.n_z {
            let n = g.idx(i, j);
            let s = field.values()[n];
            w += s * b_rho[n] * vol;
            p += s.powf(4.0 / 3.0) * vol;
        }
    }
    w / (p * field.total_mass().powf(2.0 / 3.0))
}

/// `‖Bρ‖_∞ / (M^{2/3} ‖ρ‖_∞^{1/3})`.
pub fn sup_ratio(field: &DensityField, b_rho: &[f64]) -> f64 {
    let sup = b_rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    sup / (field.total_mass().powf(2.0 / 3.0) * field.max().powf(1.0 / 3.0))
}

/// Gaussian bump truncated at three widths, in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump {
    pub r: f64,
    pub z: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// A random density described independently of any grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomDensity {
    pub bumps: Vec<Bump>,
}

impl RandomDensity {
    /// One to four bumps kept inside the inner 70% of `grid`.
    pub fn generate(grid: &CylGrid, rng: &mut ChaCha8Rng) -> Self {
        let n = rng.gen_range(1..=4);
        let scale = grid.r_max.min(grid.z_max);
        let bumps = (0..n)
            .map(|_| {
                let width = rng.gen_range(0.06..0.15) * scale;
                Bump {
                    r: rng.gen_range(0.0..0.7 * grid.r_max - 3.0 * width).max(0.0),
                    z: rng.gen_range(-1.0..1.0) * (0.7 * grid.z_max - 3.0 * width).max(0.0),
                    width,
                    amplitude: rng.gen_range(0.2..1.0),
                }
            })
            .collect();
        RandomDensity { bumps }
    }

    pub fn eval(&self, r: f64, z: f64) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let d2 = ((r - b.r).powi(2) + (z - b.z).powi(2)) / (b.width * b.width);
                if d2 < 9.0 {
                    b.amplitude * (-0.5 * d2).exp()
                } else {
                    0.0
                }
            })
            .sum()
    }

    pub fn sample(&self, grid: &CylGrid) -> Result<DensityField> {
        DensityField::unmasked(*grid, grid.sample(|r, z| self.eval(r, z)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleSide {
    pub grid: CylGrid,
    pub energy_ratio_max: f64,
    pub sup_ratio_max: f64,
    pub all_finite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub samples: usize,
    pub seed: u64,
    pub coarse: EnsembleSide,
    pub fine: EnsembleSide,
    /// Relative change of the maxima under refinement.
    pub energy_ratio_change: f64,
    pub sup_ratio_change: f64,
}

impl EnsembleReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.coarse.all_finite
            && self.fine.all_finite
            && self.energy_ratio_change <= tolerance
            && self.sup_ratio_change <= tolerance
    }
}

fn ensemble_side(grid: &CylGrid, densities: &[RandomDensity]) -> Result<EnsembleSide> {
    let kernel = AxiKernel::new(*grid)?;
    let (mut e_max, mut s_max, mut finite) = (0.0f64, 0.0f64, true);
    for d in densities {
        let field = d.sample(grid)?;
        let b = kernel.apply(field.values())?;
        let (e, s) = (energy_ratio(&field, &b), sup_ratio(&field, &b));
        finite &= e.is_finite() && s.is_finite();
        e_max = e_max.max(e);
        s_max = s_max.max(s);
    }
    Ok(EnsembleSide {
        grid: *grid,
        energy_ratio_max: e_max,
        sup_ratio_max: s_max,
        all_finite: finite,
    })
}

/// Both ratios over `samples` seeded random densities, on `grid` and on its
/// twofold refinement.
pub fn inequality_ensemble(grid: &CylGrid, samples: usize, seed: u64) -> Result<EnsembleReport> {
    if samples == 0 {
        return Err(Error::Domain("ensemble needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let densities: Vec<RandomDensity> = (0..samples)
        .map(|_| RandomDensity::generate(grid, &mut rng))
        .collect();
    let coarse = ensemble_side(grid, &densities)?;
    let fine = ensemble_side(&grid.refined(2), &densities)?;
    let change = |a: f64, b: f64| (b - a).abs() / a.abs();
    Ok(EnsembleReport {
        samples,
        seed,
        coarse,
        fine,
        energy_ratio_change: change(coarse.energy_ratio_max, fine.energy_ratio_max),
        sup_ratio_change: change(coarse.sup_ratio_max, fine.sup_ratio_max),
    })
}

/// Largest `|⟨f, Bg⟩ − ⟨Bf, g⟩| / |⟨f, Bg⟩|` over random pairs, with the
/// volume-weighted inner product.
pub fn operator_asymmetry(kernel: &AxiKernel, pairs: usize, seed: u64) -> Result<f64> {
    let g = *kernel.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = |a: &[f64], b: &[f64]| {
        let mut s = 0.0;
        for i in 0..g.n_r {
            let mut row = 0.0;
            for j in 0..g.n_z {
                let n = g.idx(i, j);
                row += a[n] * b[n];
            }
            s += row * g.cell_volume(i);
        }
        s
    };
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let f = RandomDensity::generate(&g, &mut rng).sample(&g)?;
        let h = RandomDensity::generate(&g, &mut rng).sample(&g)?;
        let bf = kernel.apply(f.values())?;
        let bh = kernel.apply(h.values())?;
        let a = inner(f.values(), &bh);
        let b = inner(&bf, h.values());
        worst = worst.max((a - b).abs() / a.abs());
    }
    Ok(worst)
}

/// Relative deviation of `Bρ` from `M/|x|` on the outermost cell layer for a
/// compact bump centred at the origin.
pub fn far_field_error(kernel: &AxiKernel) -> Result<f64> {
    let g = *kernel.grid();
    let width = 0.05 * g.r_max.min(g.z_max);
    let bump = RandomDensity {
        bumps: vec![Bump {
            r: 0.0,
            z: 0.0,
            width,
            amplitude: 1.0,
        }],
    };
    let field = bump.sample(&g)?;
    let b = kernel.apply(field.values())?;
    let m = field.total_mass();
    let mut worst = 0.0f64;
    for i in 0..g.n_r {
        for j in 0..g.n_z {
            if i + 1 == g.n_r || j == 0 || j + 1 == g.n_z {
                let x = (g.r(i).powi(2) + g.z(j).powi(2)).sqrt();
                let exact = m / x;
                worst = worst.max((b[g.idx(i, j)] - exact).abs() / exact);
            }
        }
    }
    Ok(worst)
}

/// Closed-form potential of a uniform ball: `2πρ₀(a² − |x|²/3)` inside and
/// `M/|x|` outside.
pub fn uniform_ball_potential(a: f64, rho0: f64, r: f64, z: f64) -> f64 {
    let x2 = r * r + z * z;
    if x2 < a * a {
        2.0 * PI * rho0 * (a * a - x2 / 3.0)
    } else {
        4.0 / 3.0 * PI * a.powi(3) * rho0 / x2.sqrt()
    }
}

/// Max relative error of the discrete potential of a uniform ball of radius
/// `fraction · min(r_max, z_max)`.
pub fn uniform_ball_error(kernel: &AxiKernel, fraction: f64) -> Result<f64> {
    let g = *kernel.grid();
    let a = fraction * g.r_max.min(g.z_max);
    let ball = uniform_ball(&g, a, 1.0)?;
    let b = kernel.apply(ball.values())?;
    let mut worst = 0.0f64;
    for i in 0..g.n_r {
        for j in 0..g.n_z {
            let exact = uniform_ball_potential(a, 1.0, g.r(i), g.z(j));
            worst = worst.max((b[g.idx(i, j)] - exact).abs() / exact);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub ensemble: EnsembleReport,
    pub ensemble_passed: bool,
    pub operator_asymmetry: f64,
    pub far_field_error: f64,
    pub uniform_ball_error: f64,
    pub core_potential: CorePotentialReport,
    /// Dilation factors and free energies of a uniform ball.
    pub scaling_t: Vec<f64>,
    pub scaling_energy: Vec<f64>,
}

/// Refinement tolerance for the ensemble maxima.
pub const ENSEMBLE_TOLERANCE: f64 = 0.10;

/// Runs every check on `grid` with the given EOS and core.
pub fn run_check(
    grid: &CylGrid,
    eos: &Eos,
    core: &CoreRegion,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    let ensemble = inequality_ensemble(grid, samples, seed)?;
    let kernel = AxiKernel::new(*grid)?;
    let operator_asymmetry = operator_asymmetry(&kernel, 4, seed)?;
    let far_field_error = far_field_error(&kernel)?;
    let uniform_ball_error = uniform_ball_error(&kernel, 0.2)?;
    let core_report = validate_core_potential(&core_potential(&kernel, core, 1.0)?, core);
    // dilations that do not fit on the grid are skipped
    let a = 0.1 * grid.r_max.min(grid.z_max);
    let ball = uniform_ball(grid, a, 1.0)?;
    let (d_r, d_z) = ball.support_extent(0.0);
    let room = (grid.r_max / (d_r + 0.5 * grid.dr())).min(grid.z_max / (d_z + 0.5 * grid.dz()));
    let scaling_t: Vec<f64> = [2.0, 4.0, 8.0].into_iter().filter(|t| *t <= room).collect();
    let scaling_energy = scaling_energy_curve(&ball, eos, &kernel, &scaling_t)?;
    Ok(CheckReport {
        ensemble_passed: ensemble.passed(ENSEMBLE_TOLERANCE),
        ensemble,
        operator_asymmetry,
        far_field_error,
        uniform_ball_error,
        core_potential: core_report,
        scaling_t,
        scaling_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_are_scale_invariant() {
        let g = CylGrid::new(1.0, 1.0, 32, 32).unwrap();
        let k = AxiKernel::new(g).unwrap();
        let f = uniform_ball(&g, 0.3, 1.0).unwrap();
        let f2 = f
            .with_values(f.values().iter().map(|v| 7.0 * v).collect())
            .unwrap();
        let (b, b2) = (k.apply(f.values()).unwrap(), k.apply(f2.values()).unwrap());
        assert!(
            (energy_ratio(&f, &b) - energy_ratio(&f2, &b2)).abs() < 1e-12 * energy_ratio(&f, &b)
        );
        assert!((sup_ratio(&f, &b) - sup_ratio(&f2, &b2)).abs() < 1e-12 * sup_ratio(&f, &b));
    }

    #[test]
    fn ball_ratios_match_closed_form() {
        // uniform ball: ∫ρBρ = (6/5)M²/a and ‖Bρ‖_∞ = (3/2)M/a
        let g = CylGrid::new(1.0, 1.0, 96, 96).unwrap();
        let k = AxiKernel::new(g).unwrap();
        let a = 0.3;
        let f = uniform_ball(&g, a, 1.0).unwrap();
        let b = k.apply(f.values()).unwrap();
        let m = f.total_mass();
        let p: f64 = (0..g.n_r)
            .map(|i| {
                (0..g.n_z).map(|j| f.get(i, j).powf(4.0 / 3.0)).sum::<f64>() * g.cell_volume(i)
            })
            .sum();
        let e = 1.2 * m * m / a / (p * m.powf(2.0 / 3.0));
        let s = 1.5 * m / a / m.powf(2.0 / 3.0);
        assert!(
            (energy_ratio(&f, &b) - e).abs() / e < 5e-3,
            "{} {e}",
            energy_ratio(&f, &b)
        );
        assert!(
            (sup_ratio(&f, &b) - s).abs() / s < 5e-3,
            "{} {s}",
            sup_ratio(&f, &b)
        );
    }

    #[test]
    fn random_densities_are_seeded() {
        let g = CylGrid::new(1.0, 1.0, 16, 16).unwrap();
        let a = RandomDensity::generate(&g, &mut ChaCha8Rng::seed_from_u64(3));
        let b = RandomDensity::generate(&g, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        for bump in &a.bumps {
            assert!(bump.r + 3.0 * bump.width <= 0.7 + 1e-12);
            assert!(bump.z.abs() + 3.0 * bump.width <= 0.7 + 1e-12);
        }
    }

    #[test]
    fn operator_checks() {
        let g = CylGrid::new(1.0, 1.0, 32, 32).unwrap();
        let k = AxiKernel::new(g).unwrap();
        assert!(operator_asymmetry(&k, 3, 1).unwrap() < 1e-10);
        assert!(far_field_error(&k).unwrap() < 0.02);
        assert!(uniform_ball_error(&k, 0.2).unwrap() < 0.05);
    }
}
