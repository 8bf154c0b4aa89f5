//! Lane–Emden reference solutions for non-rotating polytropes without a core.
//!
//! `θ″ + (2/ξ)θ′ + θⁿ = 0`, `θ(0) = 1`, `θ′(0) = 0`, integrated with an
//! adaptive Dormand–Prince 5(4) scheme up to the first zero `ξ₁`. A polytrope
//! `p = kρ^γ` with `n = 1/(γ−1)` and `G = 1` has `ρ = ρ_c θⁿ(r/α)` with
//! `α² = (n+1) k ρ_c^{1/n − 1} / (4π)`, radius `α ξ₁` and mass
//! `4π α³ ρ_c ω_n`, `ω_n = −ξ₁² θ′(ξ₁)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

const START: f64 = 1e-4;
const TOL: f64 = 1e-13;

/// Dimensionless constants of the Lane–Emden solution of index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaneEmden {
    pub n: f64,
    /// First zero `ξ₁`.
    pub xi1: f64,
    /// `ω_n = −ξ₁² θ′(ξ₁)`.
    pub omega_n: f64,
}

/// Dimensional star built from a [`LaneEmden`] solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polytrope {
    pub gamma: f64,
    pub k: f64,
    pub mass: f64,
    pub radius: f64,
    pub central_density: f64,
    pub alpha: f64,
    #[serde(flatten)]
    pub constants: LaneEmden,
}

fn rhs(n: f64, xi: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], -y[0].max(0.0).powf(n) - 2.0 * y[1] / xi]
}

/// One Dormand–Prince step; returns the 5th-order state and an error estimate.
fn dopri_step(n: f64, xi: f64, y: [f64; 2], h: f64) -> ([f64; 2], f64) {
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut k = [[0.0f64; 2]; 7];
    k[0] = rhs(n, xi, y);
    for s in 0..6 {
        let mut ys = y;
        for (c, kk) in A[s].iter().zip(&k) {
            ys[0] += h * c * kk[0];
            ys[1] += h * c * kk[1];
        }
        k[s + 1] = rhs(n, xi + C[s] * h, ys);
    }
    let mut y5 = y;
    let mut err = [0.0f64; 2];
    for s in 0..7 {
        for d in 0..2 {
            y5[d] += h * B5[s] * k[s][d];
            err[d] += h * (B5[s] - B4[s]) * k[s][d];
        }
    }
    let scale = |d: usize| 1.0 + y[d].abs().max(y5[d].abs());
    (y5, (err[0] / scale(0)).abs().max((err[1] / scale(1)).abs()))
}

impl LaneEmden {
    /// Integrates to the first zero for polytropic index `0 < n < 5`.
    pub fn solve(n: f64) -> Result<Self> {
        if !(n > 0.0 && n < 5.0) {
            return Err(Error::Domain(format!(
                "polytropic index {n} must lie in (0, 5)"
            )));
        }
        // series start avoids the coordinate singularity at ξ = 0
        let x = START;
        let mut y = [
            1.0 - x * x / 6.0 + n * x.powi(4) / 120.0,
            -x / 3.0 + n * x.powi(3) / 30.0,
        ];
        let mut xi = x;
        let mut h = 1e-3;
        for _ in 0..1_000_000 {
            let (y_new, err) = dopri_step(n, xi, y, h);
            if err > TOL {
                h *= (0.9 * (TOL / err).powf(0.2)).max(0.1);
                continue;
            }
            if y_new[0] <= 0.0 {
                // Newton on the zero, one accurate short step at a time
                for _ in 0..100 {
                    let dh = -y[0] / y[1];
                    if dh.abs() < 1e-15 * xi {
                        break;
                    }
                    let (ys, _) = dopri_step(n, xi, y, dh);
                    xi += dh;
                    y = ys;
                }
                return Ok(LaneEmden {
                    n,
                    xi1: xi,
                    omega_n: -xi * xi * y[1],
                });
            }
            xi += h;
            y = y_new;
            let grow = if err > 0.0 {
                (0.9 * (TOL / err).powf(0.2)).min(5.0)
            } else {
                5.0
            };
            h *= grow;
        }
        Err(Error::Numeric(
            "Lane–Emden integration did not reach the first zero".into(),
        ))
    }
}

impl Polytrope {
    /// Non-rotating, core-free polytrope `p = k ρ^γ` of mass `mass`.
    pub fn new(gamma: f64, k: f64, mass: f64) -> Result<Self> {
        if !(gamma > 4.0 / 3.0) || !(k > 0.0) || !(mass > 0.0) {
            return Err(Error::Domain("need gamma > 4/3, k > 0, mass > 0".into()));
        }
        let n = 1.0 / (gamma - 1.0);
        let c = LaneEmden::solve(n)?;
        let a0 = ((n + 1.0) * k / (4.0 * PI)).sqrt();
        // M = 4π ω_n a0³ ρ_c^{(3−n)/(2n)}
        let exponent = (3.0 - n) / (2.0 * n);
        let central_density = (mass / (4.0 * PI * c.omega_n * a0.powi(3))).powf(1.0 / exponent);
        let alpha = a0 * central_density.powf((1.0 / n - 1.0) / 2.0);
        Ok(Polytrope {
            gamma,
            k,
            mass,
            radius: alpha * c.xi1,
            central_density,
            alpha,
            constants: c,
        })
    }

    /// `ρ(r)` of the reference star.
    pub fn density(&self, r: f64) -> Result<f64> {
        if r >= self.radius {
            return Ok(0.0);
        }
        let n = self.constants.n;
        if r == 0.0 {
            return Ok(self.central_density);
        }
        // re-integrate to the requested radius
        let target = r / self.alpha;
        let x = START.min(0.5 * target);
        let mut y = [
            1.0 - x * x / 6.0 + n * x.powi(4) / 120.0,
            -x / 3.0 + n * x.powi(3) / 30.0,
        ];
        let mut xi = x;
        let mut h = 1e-3f64;
        while xi < target {
            let step = h.min(target - xi);
            let (y_new, err) = dopri_step(n, xi, y, step);
            if err > TOL {
                h = step * (0.9 * (TOL / err).powf(0.2)).max(0.1);
                continue;
            }
            xi += step;
            y = y_new;
            h = step
                * if err > 0.0 {
                    (0.9 * (TOL / err).powf(0.2)).min(5.0)
                } else {
                    5.0
                };
        }
        Ok(self.central_density * y[0].max(0.0).powf(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_indices() {
        // n = 1: θ = sin ξ / ξ, ξ₁ = π, ω = π
        let s = LaneEmden::solve(1.0).unwrap();
        assert!((s.xi1 - PI).abs() < 1e-9, "{}", s.xi1);
        assert!((s.omega_n - PI).abs() < 1e-9);
        // n = 1.5 tabulated values
        let s = LaneEmden::solve(1.5).unwrap();
        assert!((s.xi1 - 3.653_753_736).abs() < 1e-7);
        assert!((s.omega_n - 2.714_055_120).abs() < 1e-7);
    }

    #[test]
    fn gamma_two_star() {
        let p = Polytrope::new(2.0, 1.0, 1.0).unwrap();
        assert!((p.radius - PI * (1.0 / (2.0 * PI)).sqrt()).abs() < 1e-9);
        assert!((p.radius - 1.2533).abs() < 1e-4);
        // M = 4π² α³ ρ_c with α² = 1/(2π)
        let rho_c = 1.0 / (4.0 * PI * PI * (1.0 / (2.0 * PI)).powf(1.5));
        assert!((p.central_density - rho_c).abs() < 1e-9);
        let r = 0.7;
        let x = r * (2.0 * PI).sqrt();
        assert!((p.density(r).unwrap() - rho_c * x.sin() / x).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_index() {
        assert!(LaneEmden::solve(5.0).is_err());
        assert!(Polytrope::new(1.3, 1.0, 1.0).is_err());
    }
}
