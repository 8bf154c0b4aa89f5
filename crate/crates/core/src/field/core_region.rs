use std::sync::Arc;

use crate::error::{Error, Result};

use super::CylGrid;

/// Axisymmetric rigid-core geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreShape {
    /// Spheroid `(r/a_r)² + (z/a_z)² < 1` centred at the origin.
    Spheroid { a_r: f64, a_z: f64 },
    /// `r < a_r(z)` with `a_r` interpolated linearly between samples and zero
    /// outside `[z.first, z.last]`.
    Profile { z: Vec<f64>, a_r: Vec<f64> },
}

/// Rigid core `K` with uniform density `ρ_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreRegion {
    pub shape: CoreShape,
    pub rho_core: f64,
}

impl CoreRegion {
    pub fn spheroid(a_r: f64, a_z: f64, rho_core: f64) -> Result<Self> {
        let core = CoreRegion {
            shape: CoreShape::Spheroid { a_r, a_z },
            rho_core,
        };
        core.check_shape()?;
        Ok(core)
    }

    pub fn profile(z: Vec<f64>, a_r: Vec<f64>, rho_core: f64) -> Result<Self> {
        let core = CoreRegion {
            shape: CoreShape::Profile { z, a_r },
            rho_core,
        };
        core.check_shape()?;
        Ok(core)
    }

    fn check_shape(&self) -> Result<()> {
        if !(self.rho_core >= 0.0 && self.rho_core.is_finite()) {
            return Err(Error::Domain(
                "core density must be finite and non-negative".into(),
            ));
        }
        match &self.shape {
            CoreShape::Spheroid { a_r, a_z } => {
                if !(*a_r > 0.0 && *a_z > 0.0 && a_r.is_finite() && a_z.is_finite()) {
                    return Err(Error::Domain("spheroid semi-axes must be positive".into()));
                }
            }
            CoreShape::Profile { z, a_r } => {
                if z.len() != a_r.len() || z.len() < 2 {
                    return Err(Error::Domain(
                        "core profile needs at least two (z, a_r) samples of equal length".into(),
                    ));
                }
                if z.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Domain("core profile z samples must increase".into()));
                }
                if a_r.iter().any(|a| !(*a >= 0.0 && a.is_finite()))
                    || a_r.iter().all(|a| *a == 0.0)
                {
                    return Err(Error::Domain(
                        "core profile radii must be non-negative and not all zero".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks that the core lies strictly inside `grid`.
    pub fn validate(&self, grid: &CylGrid) -> Result<()> {
        self.check_shape()?;
        let (r_ext, z_ext) = self.extent();
        if r_ext >= grid.r_max || z_ext >= grid.z_max {
            return Err(Error::Domain(format!(
                "core extent ({r_ext}, {z_ext}) does not fit strictly inside grid ({}, {})",
                grid.r_max, grid.z_max
            )));
        }
        Ok(())
    }

    /// Largest radial and vertical extent of the core.
    pub fn extent(&self) -> (f64, f64) {
        match &self.shape {
            CoreShape::Spheroid { a_r, a_z } => (*a_r, *a_z),
            CoreShape::Profile { z, a_r } => (
                a_r.iter().cloned().fold(0.0, f64::max),
                z.first().unwrap().abs().max(z.last().unwrap().abs()),
            ),
        }
    }

    /// Height beyond which the core potential must be non-increasing in `|z|`.
    pub fn z0(&self) -> f64 {
        self.extent().1
    }

    pub fn contains(&self, r: f64, z: f64) -> bool {
        match &self.shape {
            CoreShape::Spheroid { a_r, a_z } => (r / a_r).powi(2) + (z / a_z).powi(2) < 1.0,
            CoreShape::Profile { z: zs, a_r } => {
                if z < zs[0] || z > *zs.last().unwrap() {
                    return false;
                }
                let k = zs.partition_point(|&v| v <= z).clamp(1, zs.len() - 1);
                let w = (z - zs[k - 1]) / (zs[k] - zs[k - 1]);
                r < a_r[k - 1] + w * (a_r[k] - a_r[k - 1])
            }
        }
    }

    /// Cells whose centre lies inside the core.
    pub fn mask(&self, grid: &CylGrid) -> Arc<[bool]> {
        let mut m = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r {
            for j in 0..grid.n_z {
                m.push(self.contains(grid.r(i), grid.z(j)));
            }
        }
        m.into()
    }

    /// Core density `ρ_K` sampled on the masked cells, zero elsewhere.
    pub fn density(&self, grid: &CylGrid) -> Vec<f64> {
        self.mask(grid)
            .iter()
            .map(|&m| if m { self.rho_core } else { 0.0 })
            .collect()
    }
}

/// Every outward radial ray from an exterior cell stays exterior: in each
/// z-row the masked cells form a (possibly empty) prefix in `r`.
pub fn no_trapping(grid: &CylGrid, mask: &[bool]) -> bool {
    (0..grid.n_z).all(|j| {
        let mut outside = false;
        (0..grid.n_r).all(|i| {
            let m = mask[grid.idx(i, j)];
            if !m {
                outside = true;
            }
            !(outside && m)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spheroid_mask_and_extent() {
        let g = CylGrid::new(1.0, 1.0, 16, 16).unwrap();
        let c = CoreRegion::spheroid(0.3, 0.2, 5.0).unwrap();
        c.validate(&g).unwrap();
        assert_eq!(c.z0(), 0.2);
        let m = c.mask(&g);
        assert!(m[g.idx(0, 7)] && m[g.idx(0, 8)]);
        assert!(!m[g.idx(5, 8)]);
        assert!(no_trapping(&g, &m));
        assert_eq!(c.density(&g)[g.idx(0, 8)], 5.0);
    }

    #[test]
    fn rejects_oversized_core() {
        let g = CylGrid::new(1.0, 1.0, 16, 16).unwrap();
        assert!(CoreRegion::spheroid(1.0, 0.5, 1.0)
            .unwrap()
            .validate(&g)
            .is_err());
        assert!(CoreRegion::spheroid(0.0, 0.5, 1.0).is_err());
        assert!(CoreRegion::spheroid(0.1, 0.1, -1.0).is_err());
    }

    #[test]
    fn profile_core() {
        let g = CylGrid::new(1.0, 1.0, 16, 16).unwrap();
        let c = CoreRegion::profile(vec![-0.3, 0.0, 0.3], vec![0.1, 0.4, 0.1], 1.0).unwrap();
        c.validate(&g).unwrap();
        assert!(c.contains(0.3, 0.0));
        assert!(!c.contains(0.3, 0.25));
        assert!(!c.contains(0.01, 0.5));
        assert!(no_trapping(&g, &c.mask(&g)));
    }

    #[test]
    fn detects_trapping_mask() {
        let g = CylGrid::new(1.0, 1.0, 8, 8).unwrap();
        let mut m = vec![false; g.len()];
        // a ring of core cells leaves an exterior pocket inside it
        m[g.idx(3, 4)] = true;
        assert!(!no_trapping(&g, &m));
        m[g.idx(3, 4)] = false;
        m[g.idx(0, 4)] = true;
        m[g.idx(1, 4)] = true;
        assert!(no_trapping(&g, &m));
    }
}
