//! Barotropic equation of state `p = f(ρ)` and the thermodynamic potentials
//! derived from it.
//!
//! With `I(s) = ∫₀ˢ f(t)/t² dt` the internal-energy density is `A(s) = s·I(s)`
//! and the specific enthalpy is `A′(s) = I(s) + f(s)/s`. `A′` is strictly
//! increasing with `A′(0) = 0`, so it can be inverted on `(0, ∞)`; the inverse
//! is extended by `0` for non-positive arguments, which is what cuts the
//! density off outside the gas support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

const QUAD_TOL: f64 = 1e-10;
const FOUR_THIRDS: f64 = 4.0 / 3.0;

/// Sampled monotone pressure law.
///
/// Between samples `f` is interpolated linearly in `(ln s, ln f)`; below the
/// first sample it continues as the power law fitted to the first segment.
/// Densities above the last sample are out of range.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureTable {
    density: Vec<f64>,
    pressure: Vec<f64>,
    low_exponent: f64,
    /// `I(s_i)` at each sample.
    cumulative: Vec<f64>,
    /// `A′(s_i)` at each sample.
    enthalpy_knots: Vec<f64>,
}

impl PressureTable {
    pub fn new(density: Vec<f64>, pressure: Vec<f64>) -> Result<Self> {
        if density.len() != pressure.len() || density.len() < 2 {
            return Err(Error::Domain(
                "pressure table needs at least two (density, pressure) samples of equal length"
                    .into(),
            ));
        }
        for w in density.windows(2).chain(pressure.windows(2)) {
            if !(w[0] > 0.0 && w[1] > w[0] && w[1].is_finite()) {
                return Err(Error::Domain(
                    "pressure table must be positive, finite and strictly increasing".into(),
                ));
            }
        }
        let n = density.len();
        let slope =
            |a: usize, b: usize| (pressure[b] / pressure[a]).ln() / (density[b] / density[a]).ln();
        let low_exponent = slope(0, 1);
        let high_exponent = slope(n - 2, n - 1);
        // f(s)·s^(-4/3) → 0 at 0 and → ∞ at ∞; only the endpoint slopes are checkable
        if low_exponent <= FOUR_THIRDS {
            return Err(Error::Domain(format!(
                "low-density log-slope {low_exponent} must exceed 4/3"
            )));
        }
        if high_exponent <= FOUR_THIRDS {
            return Err(Error::Domain(format!(
                "high-density log-slope {high_exponent} must exceed 4/3"
            )));
        }
        let mut table = PressureTable {
            density,
            pressure,
            low_exponent,
            cumulative: Vec::new(),
            enthalpy_knots: Vec::new(),
        };
        let mut cumulative = Vec::with_capacity(n);
        cumulative.push(table.pressure[0] / (table.density[0] * (low_exponent - 1.0)));
        for i in 1..n {
            let seg = table.segment_integral(i - 1, table.density[i])?;
            cumulative.push(cumulative[i - 1] + seg);
        }
        table.enthalpy_knots = cumulative
            .iter()
            .zip(table.density.iter().zip(&table.pressure))
            .map(|(c, (s, p))| c + p / s)
            .collect();
        table.cumulative = cumulative;
        Ok(table)
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn pressure(&self) -> &[f64] {
        &self.pressure
    }

    fn max_density(&self) -> f64 {
        *self.density.last().unwrap()
    }

    fn check_range(&self, s: f64) -> Result<()> {
        if s > self.max_density() {
            return Err(Error::Range(format!(
                "density {s} above tabulated maximum {}",
                self.max_density()
            )));
        }
        Ok(())
    }

    /// Index `i` with `s` in `[s_i, s_{i+1}]`.
    fn locate(&self, s: f64) -> usize {
        let n = self.density.len();
        match self.density.partition_point(|&d| d <= s) {
            0 => 0,
            p => (p - 1).min(n - 2),
        }
    }

    fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s <= self.density[0] {
            return self.pressure[0] * (s / self.density[0]).powf(self.low_exponent);
        }
        let i = self.locate(s);
        let (s0, s1) = (self.density[i], self.density[i + 1]);
        let (p0, p1) = (self.pressure[i], self.pressure[i + 1]);
        let w = (s / s0).ln() / (s1 / s0).ln();
        (p0.ln() + w * (p1 / p0).ln()).exp()
    }

    /// `∫_{s_i}^{s} f(t)/t² dt` in the variable `u = ln t`.
    fn segment_integral(&self, i: usize, s: f64) -> Result<f64> {
        let lo = self.density[i].ln();
        let hi = s.ln();
        quad::integrate(|u| self.eval(u.exp()) * (-u).exp(), lo, hi, QUAD_TOL)
    }

    /// `I(s) = ∫₀ˢ f(t)/t² dt`.
    fn integral(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        if s <= self.density[0] {
            return Ok(self.eval(s) / (s * (self.low_exponent - 1.0)));
        }
        let i = self.locate(s);
        Ok(self.cumulative[i] + self.segment_integral(i, s)?)
    }

    fn enthalpy(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.integral(s)? + self.eval(s) / s)
    }

    fn enthalpy_inverse(&self, h: f64) -> Result<f64> {
        let top = *self.enthalpy_knots.last().unwrap();
        if h > top {
            return Err(Error::Range(format!(
                "enthalpy {h} above tabulated maximum {top}"
            )));
        }
        let (mut lo, mut hi) = match self.enthalpy_knots.partition_point(|&k| k < h) {
            0 => (0.0, self.density[0]),
            p => (self.density[p - 1], self.density[p]),
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.enthalpy(mid)? < h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Equation of state.
#[derive(Debug, Clone, PartialEq)]
pub enum Eos {
    /// `f(s) = k·s^γ`, γ > 4/3.
    Polytrope {
        k: f64,
        gamma: f64,
    },
    Tabulated(PressureTable),
}

impl Eos {
    pub fn polytrope(k: f64, gamma: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!(
                "pressure coefficient k={k} must be positive"
            )));
        }
        if !(gamma > FOUR_THIRDS && gamma.is_finite()) {
            return Err(Error::Domain(format!(
                "adiabatic exponent gamma={gamma} must exceed 4/3"
            )));
        }
        Ok(Eos::Polytrope { k, gamma })
    }

    pub fn tabulated(density: Vec<f64>, pressure: Vec<f64>) -> Result<Self> {
        Ok(Eos::Tabulated(PressureTable::new(density, pressure)?))
    }

    fn check_density(&self, s: f64) -> Result<()> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::Domain(format!(
                "density {s} must be finite and non-negative"
            )));
        }
        if let Eos::Tabulated(t) = self {
            t.check_range(s)?;
        }
        Ok(())
    }

    /// Pressure `f(s)`.
    pub fn pressure(&self, s: f64) -> Result<f64> {
        self.check_density(s)?;
        Ok(match self {
            Eos::Polytrope { k, gamma } => k * s.powf(*gamma),
            Eos::Tabulated(t) => t.eval(s),
        })
    }

    /// Internal-energy density `A(s) = s∫₀ˢ f(t)/t² dt`.
    pub fn internal_energy(&self, s: f64) -> Result<f64> {
        self.check_density(s)?;
        match self {
            Eos::Polytrope { k, gamma } => Ok(k * s.powf(*gamma) / (gamma - 1.0)),
            Eos::Tabulated(t) => Ok(s * t.integral(s)?),
        }
    }

    /// Specific enthalpy `A′(s)`.
    pub fn enthalpy(&self, s: f64) -> Result<f64> {
        self.check_density(s)?;
        match self {
            Eos::Polytrope { k, gamma } => Ok(gamma * k * s.powf(gamma - 1.0) / (gamma - 1.0)),
            Eos::Tabulated(t) => t.enthalpy(s),
        }
    }

    /// Density with `A′(s) = h`, or `0` when `h ≤ 0`.
    pub fn enthalpy_inverse(&self, h: f64) -> Result<f64> {
        if !h.is_finite() {
            return Err(Error::Domain(format!("enthalpy {h} must be finite")));
        }
        if h <= 0.0 {
            return Ok(0.0);
        }
        match self {
            Eos::Polytrope { k, gamma } => {
                Ok(((gamma - 1.0) * h / (gamma * k)).powf(1.0 / (gamma - 1.0)))
            }
            Eos::Tabulated(t) => t.enthalpy_inverse(h),
        }
    }

    /// Whether the growth conditions used by the fast-rotation non-existence
    /// result are known to hold: `liminf f(s)s^{-γ} > 0` at infinity for some
    /// γ > 4/3 and `liminf f′(s)s^{-μ} > 0` at zero. `None` when they cannot be
    /// decided from finite data.
    pub fn nonexistence_conditions(&self) -> Option<bool> {
        match self {
            Eos::Polytrope { .. } => Some(true),
            Eos::Tabulated(_) => None,
        }
    }
}

/// Serialized form of the EOS section of a problem config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EosSpec {
    Polytrope {
        k: f64,
        gamma: f64,
    },
    Tabulated {
        density: Vec<f64>,
        pressure: Vec<f64>,
    },
}

impl EosSpec {
    pub fn build(&self) -> Result<Eos> {
        match self {
            EosSpec::Polytrope { k, gamma } => Eos::polytrope(*k, *gamma),
            EosSpec::Tabulated { density, pressure } => {
                Eos::tabulated(density.clone(), pressure.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(k: f64, g: f64) -> Eos {
        Eos::polytrope(k, g).unwrap()
    }

    /// Tabulated stand-in for k·s^γ over [1e-6, 1e6].
    fn tabulated_power(k: f64, g: f64) -> Eos {
        let density: Vec<f64> = (0..=60)
            .map(|i| 10f64.powf(-6.0 + 0.2 * i as f64))
            .collect();
        let pressure = density.iter().map(|s| k * s.powf(g)).collect();
        Eos::tabulated(density, pressure).unwrap()
    }

    #[test]
    fn pressure_examples() {
        assert_eq!(poly(1.0, 2.0).pressure(0.0).unwrap(), 0.0);
        assert_eq!(poly(1.0, 2.0).pressure(2.0).unwrap(), 4.0);
        assert!((poly(2.0, 5.0 / 3.0).pressure(8.0).unwrap() - 64.0).abs() < 1e-12);
        assert!(matches!(
            poly(1.0, 2.0).pressure(-1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn internal_energy_examples() {
        assert_eq!(poly(1.0, 2.0).internal_energy(0.0).unwrap(), 0.0);
        assert!((poly(1.0, 2.0).internal_energy(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((poly(1.0, 5.0 / 3.0).internal_energy(8.0).unwrap() - 48.0).abs() < 1e-12);
    }

    #[test]
    fn enthalpy_examples() {
        assert_eq!(poly(1.0, 2.0).enthalpy(0.0).unwrap(), 0.0);
        assert!((poly(1.0, 2.0).enthalpy(3.0).unwrap() - 6.0).abs() < 1e-14);
        assert!((poly(1.0, 5.0 / 3.0).enthalpy(8.0).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn enthalpy_inverse_examples() {
        let e = poly(1.0, 2.0);
        assert!((e.enthalpy_inverse(6.0).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(e.enthalpy_inverse(-1.0).unwrap(), 0.0);
        assert_eq!(e.enthalpy_inverse(0.0).unwrap(), 0.0);
        assert_eq!(
            tabulated_power(1.0, 2.0).enthalpy_inverse(-1.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn rejects_soft_polytropes() {
        assert!(Eos::polytrope(1.0, 4.0 / 3.0).is_err());
        assert!(Eos::polytrope(1.0, 1.2).is_err());
        assert!(Eos::polytrope(0.0, 2.0).is_err());
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Eos::tabulated(vec![1.0], vec![1.0]).is_err());
        assert!(Eos::tabulated(vec![1.0, 0.5], vec![1.0, 2.0]).is_err());
        // slope 1.2 at both ends
        assert!(Eos::tabulated(vec![1.0, 2.0], vec![1.0, 2f64.powf(1.2)]).is_err());
    }

    #[test]
    fn tabulated_matches_polytrope() {
        let t = tabulated_power(1.0, 2.0);
        let p = poly(1.0, 2.0);
        for s in [1e-8, 3e-4, 0.5, 1.0, 7.3, 900.0] {
            for (a, b) in [
                (t.pressure(s).unwrap(), p.pressure(s).unwrap()),
                (t.internal_energy(s).unwrap(), p.internal_energy(s).unwrap()),
                (t.enthalpy(s).unwrap(), p.enthalpy(s).unwrap()),
            ] {
                assert!((a - b).abs() <= 1e-9 * b.abs(), "s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn tabulated_inverse_roundtrip_and_range() {
        let t = tabulated_power(1.0, 2.0);
        for h in [1e-7, 0.02, 1.0, 55.0, 1e4] {
            let s = t.enthalpy_inverse(h).unwrap();
            assert!(
                (t.enthalpy(s).unwrap() - h).abs() <= 1e-10 * h.max(1.0),
                "h={h}"
            );
        }
        assert!(matches!(t.enthalpy_inverse(1e9), Err(Error::Range(_))));
        assert!(matches!(t.pressure(1e7), Err(Error::Range(_))));
    }

    #[test]
    fn spec_roundtrip() {
        let spec: EosSpec =
            serde_json::from_str(r#"{"kind": "polytrope", "k": 1.0, "gamma": 2.0}"#).unwrap();
        assert_eq!(spec.build().unwrap(), poly(1.0, 2.0));
        assert!(serde_json::from_str::<EosSpec>(
            r#"{"kind": "polytrope", "k": 1.0, "gamma": 2.0, "n": 1}"#
        )
        .is_err());
    }
}
