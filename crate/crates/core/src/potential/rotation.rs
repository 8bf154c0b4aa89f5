use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::CylGrid;
use crate::quad;

use super::PotentialField;

const QUAD_TOL: f64 = 1e-12;

/// Angular-velocity law `Ω(s)` of the rotating gas.
#[derive(Clone)]
pub enum RotationLaw {
    /// Rigid rotation at angular speed `omega`.
    Constant { omega: f64 },
    /// `Ω(s)` sampled at increasing radii starting from 0, interpolated
    /// linearly and held constant past the last sample.
    Sampled { s: Vec<f64>, omega: Vec<f64> },
    /// Arbitrary `Ω(s)`.
    Profile(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for RotationLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RotationLaw::Constant { omega } => write!(f, "Constant {{ omega: {omega} }}"),
            RotationLaw::Sampled { s, omega } => {
                write!(f, "Sampled {{ s: {s:?}, omega: {omega:?} }}")
            }
            RotationLaw::Profile(_) => write!(f, "Profile(..)"),
        }
    }
}

impl RotationLaw {
    pub fn constant(omega: f64) -> Result<Self> {
        let law = RotationLaw::Constant { omega };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RotationLaw::Constant { omega } => {
                if !(*omega >= 0.0 && omega.is_finite()) {
                    return Err(Error::Domain(format!(
                        "angular speed {omega} must be non-negative"
                    )));
                }
            }
            RotationLaw::Sampled { s, omega } => {
                if s.len() != omega.len() || s.len() < 2 {
                    return Err(Error::Domain(
                        "rotation profile needs at least two samples".into(),
                    ));
                }
                if s[0] != 0.0 || s.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Domain(
                        "rotation profile radii must start at 0 and increase".into(),
                    ));
                }
                if omega.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(Error::Domain(
                        "rotation profile values must be non-negative".into(),
                    ));
                }
            }
            RotationLaw::Profile(_) => {}
        }
        Ok(())
    }

    /// `Ω(s)`.
    pub fn omega(&self, s: f64) -> f64 {
        match self {
            RotationLaw::Constant { omega } => *omega,
            RotationLaw::Sampled { s: xs, omega } => {
                if s >= *xs.last().unwrap() {
                    return *omega.last().unwrap();
                }
                let k = xs.partition_point(|&x| x <= s).clamp(1, xs.len() - 1);
                let w = (s - xs[k - 1]) / (xs[k] - xs[k - 1]);
                omega[k - 1] + w * (omega[k] - omega[k - 1])
            }
            RotationLaw::Profile(f) => f(s),
        }
    }

    pub fn constant_omega(&self) -> Option<f64> {
        match self {
            RotationLaw::Constant { omega } => Some(*omega),
            _ => None,
        }
    }

    /// `J(r) = ∫₀ʳ s Ω²(s) ds` at increasing radii.
    pub fn centrifugal(&self, radii: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        if let RotationLaw::Constant { omega } = self {
            return Ok(radii.iter().map(|r| 0.5 * omega * omega * r * r).collect());
        }
        let integrand = |s: f64| {
            let w = self.omega(s);
            s * w * w
        };
        let mut breaks = vec![0.0];
        if let RotationLaw::Sampled { s, .. } = self {
            breaks.extend_from_slice(&s[1..]);
        }
        let mut out = Vec::with_capacity(radii.len());
        let (mut prev, mut acc) = (0.0, 0.0);
        for &r in radii {
            if r < prev {
                return Err(Error::Usage("radii must be non-decreasing".into()));
            }
            // split at sample knots so each panel sees a smooth integrand
            let mut lo = prev;
            for &b in breaks.iter().filter(|&&b| b > prev && b < r) {
                acc += quad::integrate(integrand, lo, b, QUAD_TOL)?;
                lo = b;
            }
            acc += quad::integrate(integrand, lo, r, QUAD_TOL)?;
            if !acc.is_finite() || acc < 0.0 {
                return Err(Error::Domain(
                    "s·Ω²(s) must be non-negative and integrable".into(),
                ));
            }
            out.push(acc);
            prev = r;
        }
        Ok(out)
    }
}

/// Centrifugal potential `J(r_i)` on every cell (independent of `z`).
pub fn rotation_potential(law: &RotationLaw, grid: &CylGrid) -> Result<PotentialField> {
    let radii: Vec<f64> = (0..grid.n_r).map(|i| grid.r(i)).collect();
    let j = law.centrifugal(&radii)?;
    let mut values = Vec::with_capacity(grid.len());
    for ji in j {
        values.extend(std::iter::repeat_n(ji, grid.n_z));
    }
    Ok(PotentialField::new(*grid, values))
}
