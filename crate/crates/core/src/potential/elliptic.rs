use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Complete elliptic integral of the first kind,
/// `K(m) = ∫₀^{π/2} dθ / √(1 − m sin²θ)`, for `0 ≤ m < 1`.
///
/// Arithmetic–geometric mean: `K(m) = π / (2·AGM(1, √(1−m)))`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(Error::Domain(format!(
            "elliptic K needs 0 <= m < 1, got {m}"
        )));
    }
    Ok(elliptic_k_complement(1.0 - m))
}

/// `K` as a function of the complementary parameter `1 − m`; accurate when
/// `m` is within roundoff of 1.
#[inline]
pub fn elliptic_k_complement(mc: f64) -> f64 {
    let mut a = 1.0f64;
    let mut b = mc.sqrt();
    for _ in 0..40 {
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    FRAC_PI_2 / (0.5 * (a + b))
}
