//! Integer moments of the total progeny.
//!
//! With `x = exp(alpha t)`, the moments `f_p(t) = E Y(t)^p` and cumulants
//! `g_p(t)` of the progeny of an ancestor dying at `t` are polynomials
//! `Q_p(x)` and `R_p(x)` of degree `p`. `R_1 = Q_1 = x`. For `p >= 2` the
//! cumulant solves
//!
//! ```text
//! g'' - g' + lambda g = -lambda * Rf_p(exp(alpha t)),   g(0) = 0,
//! ```
//!
//! where the forcing `Rf_p = Q_p - R_p` collects the non-trivial set
//! partitions of the moment-cumulant identity. Each monomial `r_i x^i` of the
//! forcing contributes `lambda r_i / ((i - 1)((i + 1) lambda - i alpha)) x^i`,
//! the homogeneous `exp(beta t)` part vanishes, and the `x` coefficient is
//! pinned by `R_p(1) = 0`. Finally `E N^p = sum_k q_k / (1 - k alpha)`.

use serde::{Deserialize, Serialize};

use super::spectral::{spectral, SpectralPair};
use crate::error::{domain, Error, Result};

/// Polynomial in `x = exp(alpha t)`, coefficients in increasing degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentPoly {
    pub coeffs: Vec<f64>,
}

impl MomentPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    fn mul(&self, other: &MomentPoly) -> MomentPoly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        MomentPoly::new(out)
    }
}

/// Moment polynomial `Q_k` and cumulant polynomial `R_k` of one order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub order: usize,
    pub q: MomentPoly,
    pub r: MomentPoly,
}

/// Boundary of finiteness of `E N^p`: `p / (p + 1)^2`. For `p = 1` the
/// boundary itself is finite; for `p >= 2` it is not.
pub fn moment_threshold(p: usize) -> f64 {
    let p = p as f64;
    p / ((p + 1.0) * (p + 1.0))
}

/// Checks that every moment of order `1..=p` is finite at `lambda`; otherwise
/// reports the smallest infinite order.
pub fn check_moment_order(lambda: f64, p: usize) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    if p == 0 {
        return domain("moment order must be at least 1");
    }
    for k in 1..=p {
        let thr = moment_threshold(k);
        let infinite = if k == 1 { lambda > thr } else { lambda >= thr };
        if infinite {
            return Err(Error::InfiniteMoment { order: k, lambda });
        }
    }
    Ok(())
}

/// `1 - k alpha` without cancellation near `alpha = 1/k`. Uses
/// `alpha(1 - alpha) = lambda`, so `1 - k alpha = k (t - lambda) / (1 - alpha - 1/k)`
/// with `t = (k - 1) / k^2`; its sign matches the threshold test exactly.
fn one_minus_k_alpha(k: usize, lambda: f64, pair: &SpectralPair) -> f64 {
    match k {
        0 => 1.0,
        1 => 1.0 - pair.alpha,
        2 => pair.delta,
        _ => {
            let kf = k as f64;
            kf * (moment_threshold(k - 1) - lambda) / (1.0 - pair.alpha - 1.0 / kf)
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(Q_k, R_k)` for `k = 1..=p`.
pub fn moment_polys(lambda: f64, p: usize) -> Result<Vec<MomentPair>> {
    check_moment_order(lambda, p)?;
    let pair = spectral(lambda)?;
    let x = MomentPoly::new(vec![0.0, 1.0]);
    let mut pairs = vec![MomentPair {
        order: 1,
        q: x.clone(),
        r: x,
    }];
    for k in 2..=p {
        // moment-cumulant convolution without the j = k term
        let mut forcing = vec![0.0; k + 1];
        for j in 1..k {
            let prod = pairs[j - 1].r.mul(&pairs[k - j - 1].q);
            let c = binomial(k - 1, j - 1);
            for (slot, v) in forcing.iter_mut().zip(&prod.coeffs) {
                *slot += c * v;
            }
        }
        debug_assert!(forcing[0] == 0.0 && forcing[1] == 0.0);

        let mut r = vec![0.0; k + 1];
        for i in 2..=k {
            // (i + 1) lambda - i alpha = alpha (1 - (i + 1) alpha)
            let denom = pair.alpha * one_minus_k_alpha(i + 1, lambda, &pair);
            r[i] = lambda * forcing[i] / ((i as f64 - 1.0) * denom);
        }
        r[1] = -r[2..].iter().sum::<f64>();
        let q: Vec<f64> = r.iter().zip(&forcing).map(|(a, b)| a + b).collect();
        pairs.push(MomentPair {
            order: k,
            q: MomentPoly::new(q),
            r: MomentPoly::new(r),
        });
    }
    Ok(pairs)
}

/// `E N^p` from the recursion.
pub fn moment_n(lambda: f64, p: usize) -> Result<f64> {
    let pairs = moment_polys(lambda, p)?;
    let pair = spectral(lambda)?;
    let q = &pairs[p - 1].q;
    Ok(q
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| c / one_minus_k_alpha(k, lambda, &pair))
        .sum())
}

/// `E N = 2 / (1 + sqrt(1 - 4 lambda))` for `0 < lambda <= 1/4`.
pub fn mean_n(lambda: f64) -> Result<f64> {
    check_moment_order(lambda, 1)?;
    Ok(2.0 / (1.0 + (1.0 - 4.0 * lambda).sqrt()))
}

/// `E N^2 = 2 / (3 sqrt(1 - 4 lambda) - 1)` for `0 < lambda < 2/9`.
pub fn second_moment_n(lambda: f64) -> Result<f64> {
    check_moment_order(lambda, 2)?;
    Ok(2.0 / (3.0 * (1.0 - 4.0 * lambda).sqrt() - 1.0))
}

/// Hand-derived three-term closed form of `E N^3`, `0 < lambda < 3/16`.
pub fn third_moment_n(lambda: f64) -> Result<f64> {
    check_moment_order(lambda, 3)?;
    let a = spectral(lambda)?.alpha;
    let l = lambda;
    let t3 = 6.0 * (3.0 * l - a) * a / ((4.0 * l - 3.0 * a) * (1.0 - a - 3.0 * l));
    let t2 = 6.0 * l * (2.0 * l - a) * a
        / ((3.0 * l - 2.0 * a).powi(2) * (1.0 - a - 2.0 * l));
    Ok(t3 - t2 + 1.0 / (1.0 - a))
}
