use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{mgf, KillingDist};

/// Width of the band around 1 where a general killing law is left undecided.
pub const STABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    /// `min_{u > 0} lambda * phi(u) / u`.
    pub criterion_value: f64,
    /// Minimizing `u`.
    pub argmin: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Applies the `min_u lambda phi(u) / u` criterion. Exponential killing is
/// decided exactly, with the boundary `lambda / mu = 1/4` stable.
pub fn classify_stability(lambda: f64, killing: &KillingDist) -> Result<StabilityVerdict> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    killing.validate()?;
    let dom = killing.mgf_domain();
    if !(dom > 0.0) {
        return domain("killing distribution has a degenerate MGF domain");
    }

    if let KillingDist::Exponential { rate } = *killing {
        // lambda mu / ((mu - u) u) is minimal at u = mu / 2
        let verdict = if 4.0 * lambda <= rate {
            Verdict::Stable
        } else {
            Verdict::Unstable
        };
        return Ok(StabilityVerdict {
            verdict,
            criterion_value: 4.0 * lambda / rate,
            argmin: rate / 2.0,
        });
    }

    let h = |w: f64| -> f64 {
        let u = w.exp();
        match mgf(killing, u) {
            Ok(v) => lambda * v / u,
            Err(_) => f64::INFINITY,
        }
    };
    let (lo, hi) = if dom.is_finite() {
        (dom.ln() - 40.0, dom.ln())
    } else {
        (-40.0, 40.0)
    };

    // bracket on a log grid, then refine by golden section
    const GRID: usize = 800;
    let step = (hi - lo) / GRID as f64;
    let mut best = 0usize;
    let mut best_val = f64::INFINITY;
    for i in 0..GRID {
        let v = h(lo + step * i as f64);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    if !best_val.is_finite() {
        return domain("criterion is infinite on the whole MGF domain");
    }
    let mut a = lo + step * best.saturating_sub(1) as f64;
    let mut b = (lo + step * (best + 1) as f64).min(hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (h(c), h(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = h(d);
        }
    }
    let (w, val) = if fc < fd { (c, fc) } else { (d, fd) };
    let (w, val) = if best_val < val {
        (lo + step * best as f64, best_val)
    } else {
        (w, val)
    };

    let verdict = if val < 1.0 - STABILITY_TOL {
        Verdict::Stable
    } else if val > 1.0 + STABILITY_TOL {
        Verdict::Unstable
    } else {
        Verdict::Inconclusive
    };
    Ok(StabilityVerdict {
        verdict,
        criterion_value: val,
        argmin: w.exp(),
    })
}
