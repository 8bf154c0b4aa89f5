use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centred grid on `[0, r_max] × [-z_max, z_max]`.
///
/// Values on the grid are stored r-major: cell `(i, j)` lives at
/// `i * n_z + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylGrid {
    pub r_max: f64,
    pub z_max: f64,
    pub n_r: usize,
    pub n_z: usize,
}

pub const MIN_CELLS: usize = 8;

impl CylGrid {
    pub fn new(r_max: f64, z_max: f64, n_r: usize, n_z: usize) -> Result<Self> {
        let g = CylGrid {
            r_max,
            z_max,
            n_r,
            n_z,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < MIN_CELLS || self.n_z < MIN_CELLS {
            return Err(Error::Domain(format!(
                "grid needs at least {MIN_CELLS} cells per axis, got {}x{}",
                self.n_r, self.n_z
            )));
        }
        if !(self.r_max > 0.0
            && self.z_max > 0.0
            && self.r_max.is_finite()
            && self.z_max.is_finite())
        {
            return Err(Error::Domain(
                "grid extents must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        self.r_max / self.n_r as f64
    }

    #[inline]
    pub fn dz(&self) -> f64 {
        2.0 * self.z_max / self.n_z as f64
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr()
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        -self.z_max + (j as f64 + 0.5) * self.dz()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_z + j
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_r * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of the ring swept by cell `(i, ·)`: `2π r_i Δr Δz`.
    #[inline]
    pub fn cell_volume(&self, i: usize) -> f64 {
        2.0 * PI * self.r(i) * self.dr() * self.dz()
    }

    /// Cell containing the point `(r, z)`, or `None` outside the grid.
    pub fn locate(&self, r: f64, z: f64) -> Option<(usize, usize)> {
        let fi = (r / self.dr()).floor();
        let fj = ((z + self.z_max) / self.dz()).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.n_r as f64 || fj >= self.n_z as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    /// Same cell counts over extents scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        CylGrid {
            r_max: self.r_max * factor,
            z_max: self.z_max * factor,
            ..*self
        }
    }

    /// Same extents with `factor` times as many cells per axis.
    pub fn refined(&self, factor: usize) -> Self {
        CylGrid {
            n_r: self.n_r * factor,
            n_z: self.n_z * factor,
            ..*self
        }
    }

    /// Fill a vector by evaluating `f(r, z)` at every cell centre.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.n_r {
            let r = self.r(i);
            for j in 0..self.n_z {
                out.push(f(r, self.z(j)));
            }
        }
        out
    }
}
