//! Estimators linking Monte Carlo output to analytic predictions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{BAOutcome, CensorPolicy};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Asymptotic two-sample Kolmogorov-Smirnov coefficient at the 1% level.
pub const KS_C_1PCT: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: u64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub censored_count: u64,
}

impl SampleSummary {
    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

pub fn summarize(samples: &[f64], censored_count: u64) -> Result<SampleSummary> {
    if samples.len() < 2 {
        return domain(format!("need at least 2 samples, got {}", samples.len()));
    }
    let n = samples.len() as f64;
    // two-pass for accuracy; sums are order-dependent only at the ulp level
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    let variance = ss / (n - 1.0);
    let stderr = (variance / n).sqrt();
    Ok(SampleSummary {
        count: samples.len() as u64,
        mean,
        variance,
        stderr,
        ci95_low: mean - Z95 * stderr,
        ci95_high: mean + Z95 * stderr,
        censored_count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    /// Order statistics actually used (may be below the request after ties).
    pub k: usize,
    pub gamma_hat: f64,
    /// `(k, gamma_hat)` for every `k` up to the one used, for Hill plots.
    pub curve: Vec<(usize, f64)>,
}

/// Sorted-descending samples with cumulative log sums, so the Hill estimate
/// for any `k` costs O(1).
#[derive(Debug, Clone)]
pub struct HillTable {
    desc: Vec<f64>,
    log_prefix: Vec<f64>,
}

impl HillTable {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return domain("Hill estimator needs at least 2 samples");
        }
        if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return domain(format!("Hill estimator needs positive finite samples, got {bad}"));
        }
        let mut desc = samples.to_vec();
        desc.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut log_prefix = Vec::with_capacity(desc.len() + 1);
        log_prefix.push(0.0);
        let mut acc = 0.0;
        for x in &desc {
            acc += x.ln();
            log_prefix.push(acc);
        }
        Ok(Self { desc, log_prefix })
    }

    pub fn len(&self) -> usize {
        self.desc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.desc.is_empty()
    }

    /// `k / sum_{i<k} ln(X_(i) / X_(k))` over descending order statistics;
    /// `None` when the log-spacings sum to zero.
    pub fn gamma_at(&self, k: usize) -> Option<f64> {
        if k == 0 || k >= self.desc.len() {
            return None;
        }
        let sum = self.log_prefix[k] - k as f64 * self.desc[k].ln();
        if sum > 0.0 {
            Some(k as f64 / sum)
        } else {
            None
        }
    }

    /// Largest `k' <= k` whose threshold is strictly below the next order
    /// statistic, i.e. not tied with a retained value.
    fn untied_k(&self, k: usize) -> Option<usize> {
        (1..=k).rev().find(|&j| self.desc[j] < self.desc[j - 1])
    }
}

/// Hill estimate of the tail index from the top `k` order statistics.
pub fn hill(samples: &[f64], k: usize) -> Result<TailEstimate> {
    let table = HillTable::new(samples)?;
    if k == 0 || k >= table.len() {
        return domain(format!("k must lie in [1, {}), got {k}", table.len()));
    }
    let used = table
        .untied_k(k)
        .ok_or_else(|| Error::Domain("top order statistics are all tied".into()))?;
    if used != k {
        log::warn!("hill: threshold tied at k = {k}; reduced to k = {used}");
    }
    let gamma_hat = table
        .gamma_at(used)
        .ok_or_else(|| Error::Domain("degenerate log-spacings".into()))?;
    let curve = (1..=used)
        .filter_map(|j| table.gamma_at(j).map(|g| (j, g)))
        .collect();
    Ok(TailEstimate {
        k: used,
        gamma_hat,
        curve,
    })
}

/// Adds independent `U(0,1)` noise to integer-valued samples so order
/// statistics have no ties.
pub fn jitter<R: Rng + ?Sized>(samples: &[f64], rng: &mut R) -> Vec<f64> {
    samples.iter().map(|x| x + rng.random::<f64>()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub distance: f64,
    pub critical_1pct: f64,
}

impl KsResult {
    pub fn rejects(&self) -> bool {
        self.distance > self.critical_1pct
    }
}

/// Two-sample Kolmogorov-Smirnov distance with the 1% critical value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return domain("KS test needs two non-empty samples");
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return domain("KS test samples contain NaN");
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    let (m, n) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / m - j as f64 / n).abs());
    }
    Ok(KsResult {
        distance: d,
        critical_1pct: KS_C_1PCT * ((m + n) / (m * n)).sqrt(),
    })
}

/// Anything that can end censored.
pub trait Censorable {
    fn is_censored(&self) -> bool;
}

impl Censorable for BAOutcome {
    fn is_censored(&self) -> bool {
        self.censored
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionFrequency {
    pub replicas: u64,
    pub survived: u64,
    pub survived_fraction: f64,
    /// Binomial standard error of the fraction.
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

/// Fraction of censored runs, read as survival. Refuses caps below
/// [`CensorPolicy::generous`], where censoring reflects budget rather than
/// explosion.
pub fn extinction_frequency<T: Censorable>(
    outcomes: &[T],
    policy: &CensorPolicy,
) -> Result<ExtinctionFrequency> {
    if outcomes.is_empty() {
        return domain("no outcomes");
    }
    if !policy.dominates(&CensorPolicy::generous()) {
        return domain(format!(
            "caps ({}, {}) too small for a survival proxy; need at least (1e6, 1e4)",
            policy.max_particles, policy.max_time
        ));
    }
    let n = outcomes.len() as f64;
    let survived = outcomes.iter().filter(|o| o.is_censored()).count() as u64;
    let p = survived as f64 / n;
    let stderr = (p * (1.0 - p) / n).sqrt();
    Ok(ExtinctionFrequency {
        replicas: outcomes.len() as u64,
        survived,
        survived_fraction: p,
        stderr,
        ci95_low: (p - Z95 * stderr).max(0.0),
        ci95_high: (p + Z95 * stderr).min(1.0),
    })
}
