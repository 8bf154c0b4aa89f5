use std::sync::Arc;

use crate::error::{Error, Result};

use super::CylGrid;

/// Non-negative axisymmetric gas density on a [`CylGrid`], forced to zero on
/// the core mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: CylGrid,
    values: Vec<f64>,
    mask: Arc<[bool]>,
}

impl DensityField {
    /// Builds a field, zeroing masked cells. Rejects negative or non-finite
    /// values.
    pub fn new(grid: CylGrid, mut values: Vec<f64>, mask: Arc<[bool]>) -> Result<Self> {
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::Usage(format!(
                "field has {} values and {} mask cells for a grid of {}",
                values.len(),
                mask.len(),
                grid.len()
            )));
        }
        for (v, &m) in values.iter_mut().zip(mask.iter()) {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Domain(format!(
                    "density value {v} is not finite and non-negative"
                )));
            }
            if m {
                *v = 0.0;
            }
        }
        Ok(DensityField { grid, values, mask })
    }

    pub fn zeros(grid: CylGrid, mask: Arc<[bool]>) -> Self {
        DensityField::new(grid, vec![0.0; grid.len()], mask).expect("zero field is valid")
    }

    /// Unmasked field.
    pub fn unmasked(grid: CylGrid, values: Vec<f64>) -> Result<Self> {
        let mask: Arc<[bool]> = vec![false; grid.len()].into();
        DensityField::new(grid, values, mask)
    }

    pub fn grid(&self) -> &CylGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &Arc<[bool]> {
        &self.mask
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Same grid and mask, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        DensityField::new(self.grid, values, self.mask.clone())
    }

    /// `Σ ρ_ij · 2π r_i Δr Δz`.
    pub fn total_mass(&self) -> f64 {
        weighted_sum(&self.grid, &self.values)
    }

    /// Pointwise multiple of `self` with total mass `mass`.
    pub fn rescale_to_mass(&self, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Domain(format!(
                "target mass {mass} must be positive"
            )));
        }
        let current = self.total_mass();
        if !(current > 0.0) {
            return Err(Error::Degenerate(
                "cannot rescale a field of zero mass".into(),
            ));
        }
        let factor = mass / current;
        Ok(DensityField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            mask: self.mask.clone(),
        })
    }

    /// Largest cell-centre `r` and `|z|` among cells with `ρ > threshold`;
    /// `(0, 0)` for empty support.
    pub fn support_extent(&self, threshold: f64) -> (f64, f64) {
        let g = &self.grid;
        let (mut d_r, mut d_z) = (0.0f64, 0.0f64);
        for i in 0..g.n_r {
            for j in 0..g.n_z {
                if self.values[g.idx(i, j)] > threshold {
                    d_r = d_r.max(g.r(i));
                    d_z = d_z.max(g.z(j).abs());
                }
            }
        }
        (d_r, d_z)
    }

    /// Mass held within `margin_cells` of the outer grid boundary (large `r`
    /// or large `|z|`).
    pub fn boundary_mass(&self, margin_cells: usize) -> f64 {
        let g = &self.grid;
        let mut m = 0.0;
        for i in 0..g.n_r {
            let vol = g.cell_volume(i);
            for j in 0..g.n_z {
                let near =
                    i + margin_cells >= g.n_r || j < margin_cells || j + margin_cells >= g.n_z;
                if near {
                    m += self.values[g.idx(i, j)] * vol;
                }
            }
        }
        m
    }

    /// Whether more than `fraction` of the total mass sits within
    /// `margin_cells` of the outer boundary; the numerical signature of
    /// mass run-off.
    pub fn contains_boundary_mass(&self, margin_cells: usize, fraction: f64) -> bool {
        let total = self.total_mass();
        total > 0.0 && self.boundary_mass(margin_cells) > fraction * total
    }
}

/// `Σ v_ij · 2π r_i Δr Δz` in fixed cell order.
pub(crate) fn weighted_sum(grid: &CylGrid, values: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..grid.n_r {
        let row = &values[i * grid.n_z..(i + 1) * grid.n_z];
        total += row.iter().sum::<f64>() * grid.cell_volume(i);
    }
    total
}

/// `∫√(a² − r²) dr`, clamped to `[-a, a]`.
fn half_chord_integral(r: f64, a: f64) -> f64 {
    let r = r.clamp(-a, a);
    0.5 * (r * (a * a - r * r).sqrt() + a * a * (r / a).asin())
}

/// Area of the rectangle `[r0, r1] × [z0, z1]` inside the disc of radius `a`.
pub fn disc_rect_area(r0: f64, r1: f64, z0: f64, z1: f64, a: f64) -> f64 {
    let (lo, hi) = (r0.max(-a), r1.min(a));
    if !(hi > lo) || !(z1 > z0) {
        return 0.0;
    }
    // the overlap length is smooth between the radii where the circle
    // crosses z0 or z1
    let mut cuts = vec![lo, hi];
    for z in [z0, z1] {
        if z.abs() < a {
            let c = (a * a - z * z).sqrt();
            for x in [-c, c] {
                if x > lo && x < hi {
                    cuts.push(x);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let m = 0.5 * (u + v);
        let h = (a * a - m * m).max(0.0).sqrt();
        if h.min(z1) <= (-h).max(z0) {
            continue;
        }
        let chord = half_chord_integral(v, a) - half_chord_integral(u, a);
        let top = if z1 < h { z1 * (v - u) } else { chord };
        let bottom = if z0 > -h { z0 * (v - u) } else { -chord };
        area += top - bottom;
    }
    area
}

/// Ball of radius `a` and density `rho0`; each cell holds `rho0` times the
/// fraction of its meridional area inside the ball.
pub fn uniform_ball(grid: &CylGrid, a: f64, rho0: f64) -> Result<DensityField> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("ball radius {a} must be positive")));
    }
    let (dr, dz) = (grid.dr(), grid.dz());
    let values = grid.sample(|r, z| {
        rho0 * disc_rect_area(r - 0.5 * dr, r + 0.5 * dr, z - 0.5 * dz, z + 0.5 * dz, a) / (dr * dz)
    });
    DensityField::unmasked(*grid, values)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn grid() -> CylGrid {
        CylGrid::new(1.0, 1.0, 10, 20).unwrap()
    }

    fn single(g: CylGrid, i: usize, j: usize, v: f64) -> DensityField {
        let mut vals = vec![0.0; g.len()];
        vals[g.idx(i, j)] = v;
        DensityField::unmasked(g, vals).unwrap()
    }

    #[test]
    fn mass_examples() {
        let g = grid();
        assert_eq!(
            DensityField::unmasked(g, vec![0.0; g.len()])
                .unwrap()
                .total_mass(),
            0.0
        );
        let f = single(g, 5, 7, 3.0);
        let expect = 2.0 * PI * g.r(5) * 3.0 * g.dr() * g.dz();
        assert!((f.total_mass() - expect).abs() < 1e-15);
    }

    #[test]
    fn uniform_ball_mass() {
        let g = CylGrid::new(1.0, 1.0, 256, 256).unwrap();
        let a = 0.2;
        let f = DensityField::unmasked(
            g,
            g.sample(|r, z| if r * r + z * z < a * a { 2.0 } else { 0.0 }),
        )
        .unwrap();
        let exact = 4.0 / 3.0 * PI * a.powi(3) * 2.0;
        assert!((f.total_mass() - exact).abs() / exact < 0.01);
    }

    #[test]
    fn disc_rect_area_cases() {
        let a = 1.0;
        assert!((disc_rect_area(-2.0, 2.0, -2.0, 2.0, a) - PI).abs() < 1e-14);
        assert!((disc_rect_area(0.0, 2.0, 0.0, 2.0, a) - PI / 4.0).abs() < 1e-14);
        assert!((disc_rect_area(0.1, 0.2, 0.1, 0.2, a) - 0.01).abs() < 1e-16);
        assert_eq!(disc_rect_area(1.0, 2.0, -1.0, 1.0, a), 0.0);
        // half-disc cut by a horizontal line: segment area
        let y: f64 = 0.5;
        let segment = (1.0 - y * y).sqrt() * -y + (y).acos();
        let seg = disc_rect_area(-1.0, 1.0, y, 1.0, a);
        assert!((seg - segment).abs() < 1e-14, "{seg} {segment}");
        // brute force on an awkward cell
        let (r0, r1, z0, z1) = (0.55, 0.9, 0.3, 0.7);
        let n = 2000;
        let mut count = 0usize;
        for p in 0..n {
            for q in 0..n {
                let r = r0 + (p as f64 + 0.5) * (r1 - r0) / n as f64;
                let z = z0 + (q as f64 + 0.5) * (z1 - z0) / n as f64;
                count += (r * r + z * z < 1.0) as usize;
            }
        }
        let brute = count as f64 / (n * n) as f64 * (r1 - r0) * (z1 - z0);
        assert!((disc_rect_area(r0, r1, z0, z1, a) - brute).abs() < 1e-5);
    }

    #[test]
    fn ball_mass_converges_at_second_order() {
        let a: f64 = 0.2;
        let exact: f64 = 4.0 / 3.0 * PI * a.powi(3);
        let errors: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&n| {
                let g = CylGrid::new(1.0, 1.0, n, n).unwrap();
                (uniform_ball(&g, a, 1.0).unwrap().total_mass() - exact).abs()
            })
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..=5.0).contains(&ratio), "{errors:?}");
        }
    }

    #[test]
    fn rescale_examples() {
        let g = grid();
        let f = single(g, 2, 3, 1.0);
        let m = f.total_mass();
        assert_eq!(f.rescale_to_mass(m).unwrap(), f);
        let f1 = f.rescale_to_mass(1.0).unwrap();
        let f3 = f1.rescale_to_mass(3.0).unwrap();
        assert!((f3.get(2, 3) / f1.get(2, 3) - 3.0).abs() < 1e-14);
        assert!((f3.total_mass() - 3.0).abs() < 3e-12);
        let z = DensityField::unmasked(g, vec![0.0; g.len()]).unwrap();
        assert!(matches!(z.rescale_to_mass(1.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn support_examples() {
        let g = CylGrid::new(1.0, 1.0, 10, 20).unwrap();
        assert_eq!(
            DensityField::zeros(g, vec![false; g.len()].into()).support_extent(0.0),
            (0.0, 0.0)
        );
        // r_5 = 0.55, z_7 = -0.25
        let f = single(g, 5, 7, 1.0);
        let (d_r, d_z) = f.support_extent(0.5);
        assert!((d_r - 0.55).abs() < 1e-15 && (d_z - 0.25).abs() < 1e-15);
        assert_eq!(f.support_extent(2.0), (0.0, 0.0));
    }

    #[test]
    fn boundary_mass_examples() {
        let g = CylGrid::new(1.0, 1.0, 16, 16).unwrap();
        assert!(!single(g, 0, 8, 1.0).contains_boundary_mass(2, 0.05));
        assert!(single(g, 15, 8, 1.0).contains_boundary_mass(2, 0.05));
        let mut v = vec![0.0; g.len()];
        v[g.idx(0, 8)] = 1.0 / g.cell_volume(0);
        v[g.idx(15, 8)] = 1.0 / g.cell_volume(15);
        let f = DensityField::unmasked(g, v).unwrap();
        assert!((f.boundary_mass(2) / f.total_mass() - 0.5).abs() < 1e-12);
        assert!(!f.contains_boundary_mass(2, 0.6));
    }

    #[test]
    fn masked_cells_are_zeroed() {
        let g = grid();
        let mut mask = vec![false; g.len()];
        mask[g.idx(0, 10)] = true;
        let f = DensityField::new(g, vec![1.0; g.len()], mask.into()).unwrap();
        assert_eq!(f.get(0, 10), 0.0);
        assert_eq!(f.rescale_to_mass(4.0).unwrap().get(0, 10), 0.0);
        assert!(DensityField::unmasked(g, vec![-1.0; g.len()]).is_err());
    }
}
