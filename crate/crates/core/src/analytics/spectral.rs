use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Roots `alpha <= beta` of `x^2 - x + lambda` and their gap `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Defined for `0 < lambda <= 1/4`.
pub fn spectral(lambda: f64) -> Result<SpectralPair> {
    if !(lambda > 0.0 && lambda <= 0.25) {
        return domain(format!("spectral pair needs 0 < lambda <= 1/4, got {lambda}"));
    }
    let delta = (1.0 - 4.0 * lambda).sqrt();
    let beta = 0.5 * (1.0 + delta);
    // lambda / beta avoids the cancellation in (1 - delta) / 2 for small lambda
    let alpha = lambda / beta;
    Ok(SpectralPair { delta, alpha, beta })
}

/// Power-tail exponent of the total progeny, `beta / alpha`, for
/// `0 < lambda < 1/4`.
pub fn gamma_exponent(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 0.25) {
        return domain(format!("tail exponent needs 0 < lambda < 1/4, got {lambda}"));
    }
    let sp = spectral(lambda)?;
    Ok(sp.beta / sp.alpha)
}
