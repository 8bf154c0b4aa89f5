//! Discrete Newtonian potential `Bρ(x) = ∫ ρ(y)/|x−y| dy` for axisymmetric
//! densities on a [`CylGrid`].
//!
//! A ring of radius `r′` at height `z′` carrying density `ρ` over a cell
//! contributes
//!
//! ```text
//! 4 r′ K(m) / √((r+r′)² + (z−z′)²) · ρ Δr Δz,   m = 4 r r′ / ((r+r′)² + (z−z′)²)
//! ```
//!
//! at `(r, z)`. The weight only depends on `(r, r′, |z−z′|)`, and
//! `weight / r′` is symmetric in `(r, r′)`, so the kernel is stored once per
//! unordered radial pair and applied as a convolution along `z`.
//!
//! For a cell acting on its own centre the ring kernel has a logarithmic
//! singularity. There the weight is the exact source-cell integral, obtained
//! by subtracting `−2 ln|x−y|`, integrating the bounded remainder with
//! Gauss–Legendre on the four quadrants around the centre and adding the
//! closed-form rectangle integral of the logarithm.

use std::sync::Arc;

use rayon::prelude::*;
use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};
use crate::field::{CylGrid, DensityField};
use crate::quad::gauss_legendre;

use super::elliptic::elliptic_k_complement;
use super::PotentialField;

const SELF_CELL_ORDER: usize = 24;

/// Ring-to-point weight `4 K(m) / D` without the source radius and cell area.
#[inline]
fn ring_kernel(r: f64, rs: f64, dz: f64) -> f64 {
    let dz2 = dz * dz;
    let d2 = (r - rs) * (r - rs) + dz2;
    let big2 = (r + rs) * (r + rs) + dz2;
    4.0 * elliptic_k_complement(d2 / big2) / big2.sqrt()
}

/// `∫₀ᵃ∫₀ᵇ ln(x² + y²) dy dx`.
fn log_rect(a: f64, b: f64) -> f64 {
    a * b * ((a * a + b * b).ln() - 3.0) + a * a * (b / a).atan() + b * b * (a / b).atan()
}

/// `∫∫_cell 4 r′ K(m)/D dr′ dz′` for the cell centred at `(r, 0)` evaluated
/// at its own centre.
pub fn self_cell_weight(r: f64, dr: f64, dz: f64) -> f64 {
    let (x, w) = gauss_legendre(SELF_CELL_ORDER);
    let (a, b) = (0.5 * dr, 0.5 * dz);
    let mut smooth = 0.0;
    for (r_lo, r_hi) in [(r - a, r), (r, r + a)] {
        let (rc, rh) = (0.5 * (r_lo + r_hi), 0.5 * (r_hi - r_lo));
        for (xi, wi) in x.iter().zip(&w) {
            let rs = rc + rh * xi;
            for (xj, wj) in x.iter().zip(&w) {
                // z′ ∈ [0, b], doubled below for the lower half
                let zs = 0.5 * b * (1.0 + xj);
                let d = ((r - rs).powi(2) + zs * zs).sqrt();
                let f = rs * ring_kernel(r, rs, zs) + 2.0 * d.ln();
                smooth += wi * wj * rh * 0.5 * b * f;
            }
        }
    }
    2.0 * smooth - 2.0 * 2.0 * log_rect(a, b)
}

/// Precomputed ring-kernel spectra for one grid.
pub struct AxiKernel {
    grid: CylGrid,
    fft_len: usize,
    n_freq: usize,
    /// Real spectra of the symmetric weights `w(i,k,·)/r_k`, one per pair
    /// `i ≤ k`, `n_freq` entries each.
    spectra: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for AxiKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AxiKernel")
            .field("grid", &self.grid)
            .finish()
    }
}

impl AxiKernel {
    pub fn new(grid: CylGrid) -> Result<Self> {
        grid.validate()?;
        let (n_r, n_z) = (grid.n_r, grid.n_z);
        let fft_len = 2 * n_z;
        let n_freq = n_z + 1;
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let area = grid.dr() * grid.dz();

        let pairs: Vec<(usize, usize)> = (0..n_r)
            .flat_map(|i| (i..n_r).map(move |k| (i, k)))
            .collect();
        let rows: Vec<Vec<f64>> = pairs
            .par_iter()
            .map_init(
                || (forward.make_input_vec(), forward.make_output_vec()),
                |(buf, spec), &(i, k)| {
                    let (r, rs) = (grid.r(i), grid.r(k));
                    for t in 0..n_z {
                        let w = if i == k && t == 0 {
                            self_cell_weight(r, grid.dr(), grid.dz()) / rs
                        } else {
                            ring_kernel(r, rs, t as f64 * grid.dz()) * area
                        };
                        buf[t] = w;
                        if t > 0 {
                            buf[fft_len - t] = w;
                        }
                    }
                    buf[n_z] = 0.0;
                    forward.process(buf, spec).expect("fft sizes match");
                    spec.iter().map(|c| c.re).collect()
                },
            )
            .collect();
        let mut spectra = Vec::with_capacity(pairs.len() * n_freq);
        for row in rows {
            spectra.extend_from_slice(&row);
        }
        Ok(AxiKernel {
            grid,
            fft_len,
            n_freq,
            spectra,
            forward,
            inverse,
        })
    }

    pub fn grid(&self) -> &CylGrid {
        &self.grid
    }

    #[inline]
    fn pair_spectrum(&self, i: usize, k: usize) -> &[f64] {
        let (a, b) = if i <= k { (i, k) } else { (k, i) };
        let n = self.grid.n_r;
        let p = a * (2 * n - a + 1) / 2 + (b - a);
        &self.spectra[p * self.n_freq..(p + 1) * self.n_freq]
    }

    /// `Bρ` at every cell centre for raw cell values on this kernel's grid.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        let g = &self.grid;
        if values.len() != g.len() {
            return Err(Error::Usage(format!(
                "{} values supplied for a grid of {} cells",
                values.len(),
                g.len()
            )));
        }
        let (n_r, n_z) = (g.n_r, g.n_z);
        let sources: Vec<Option<Vec<Complex64>>> = (0..n_r)
            .map(|k| {
                let col = &values[k * n_z..(k + 1) * n_z];
                if col.iter().all(|v| *v == 0.0) {
                    return None;
                }
                let mut buf = self.forward.make_input_vec();
                let rk = g.r(k);
                for (b, v) in buf.iter_mut().zip(col) {
                    *b = rk * v;
                }
                let mut spec = self.forward.make_output_vec();
                self.forward
                    .process(&mut buf, &mut spec)
                    .expect("fft sizes match");
                Some(spec)
            })
            .collect();
        let scale = 1.0 / self.fft_len as f64;
        let rows: Vec<Vec<f64>> = (0..n_r)
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![Complex64::new(0.0, 0.0); self.n_freq];
                for (k, src) in sources.iter().enumerate() {
                    if let Some(src) = src {
                        let kern = self.pair_spectrum(i, k);
                        for ((a, s), w) in acc.iter_mut().zip(src).zip(kern) {
                            *a += s * *w;
                        }
                    }
                }
                acc[0].im = 0.0;
                acc[self.n_freq - 1].im = 0.0;
                let mut out = self.inverse.make_output_vec();
                self.inverse
                    .process(&mut acc, &mut out)
                    .expect("fft sizes match");
                out.truncate(n_z);
                out.iter_mut().for_each(|v| *v *= scale);
                out
            })
            .collect();
        Ok(rows.concat())
    }
}

/// `Bρ` for `field` (the operator `B` of the equilibrium relation).
pub fn newtonian_potential(kernel: &AxiKernel, field: &DensityField) -> Result<PotentialField> {
    if field.grid() != kernel.grid() {
        return Err(Error::Usage(
            "density field and kernel are on different grids".into(),
        ));
    }
    Ok(PotentialField::new(
        *kernel.grid(),
        kernel.apply(field.values())?,
    ))
}

/// Reference `Bρ` by direct summation over all source cells, evaluating the
/// ring weights on the fly. `O(N²)` elliptic integrals; meant for small grids
/// and cross-checks.
pub fn newtonian_potential_direct(grid: &CylGrid, values: &[f64]) -> Result<Vec<f64>> {
    if values.len() != grid.len() {
        return Err(Error::Usage("value count does not match grid".into()));
    }
    let area = grid.dr() * grid.dz();
    let self_w: Vec<f64> = (0..grid.n_r)
        .map(|i| self_cell_weight(grid.r(i), grid.dr(), grid.dz()))
        .collect();
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.n_r {
        for j in 0..grid.n_z {
            let mut sum = 0.0;
            for k in 0..grid.n_r {
                for l in 0..grid.n_z {
                    let v = values[grid.idx(k, l)];
                    if v == 0.0 {
                        continue;
                    }
                    let w = if i == k && j == l {
                        self_w[i]
                    } else {
                        let dz = grid.z(j) - grid.z(l);
                        grid.r(k) * ring_kernel(grid.r(i), grid.r(k), dz) * area
                    };
                    sum += w * v;
                }
            }
            out[grid.idx(i, j)] = sum;
        }
    }
    Ok(out)
}
