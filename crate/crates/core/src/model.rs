//! Shared domain types: model parameters, killing distributions, censoring
//! caps, per-replica seeding and the outcome of one realization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Random stream used by every sampler in the crate.
pub type SimRng = ChaCha8Rng;

/// Law of the killing time `K`: how long a particle survives once at risk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KillingDist {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl KillingDist {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_positive("exponential rate", rate)?;
        Ok(Self::Exponential { rate })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        check_positive("deterministic killing time", value)?;
        Ok(Self::Deterministic { value })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        check_positive("gamma shape", shape)?;
        check_positive("gamma rate", rate)?;
        Ok(Self::Gamma { shape, rate })
    }

    /// The canonical killing law, `Exp(1)`.
    pub fn unit_exponential() -> Self {
        Self::Exponential { rate: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { rate } => check_positive("exponential rate", rate),
            Self::Deterministic { value } => check_positive("deterministic killing time", value),
            Self::Gamma { shape, rate } => {
                check_positive("gamma shape", shape)?;
                check_positive("gamma rate", rate)
            }
        }
    }

    /// Supremum of the interval `[0, d)` on which the MGF is finite.
    pub fn mgf_domain(&self) -> f64 {
        match *self {
            Self::Exponential { rate } | Self::Gamma { rate, .. } => rate,
            Self::Deterministic { .. } => f64::INFINITY,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Deterministic { value } => value,
            Self::Gamma { shape, rate } => shape / rate,
        }
    }

    /// Law of `K / c`.
    pub fn scaled_by(&self, c: f64) -> Result<Self> {
        check_positive("scale factor", c)?;
        Ok(match *self {
            Self::Exponential { rate } => Self::Exponential { rate: rate * c },
            Self::Deterministic { value } => Self::Deterministic { value: value / c },
            Self::Gamma { shape, rate } => Self::Gamma { shape, rate: rate * c },
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Self::Deterministic { value } => value,
            Self::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng),
        }
    }
}

/// Moment generating function `E exp(uK)`; `+inf` outside the domain.
pub fn mgf(dist: &KillingDist, u: f64) -> Result<f64> {
    if u.is_nan() || u < 0.0 {
        return domain(format!("mgf argument must be non-negative, got {u}"));
    }
    dist.validate()?;
    Ok(match *dist {
        KillingDist::Exponential { rate } => {
            if u < rate {
                rate / (rate - u)
            } else {
                f64::INFINITY
            }
        }
        KillingDist::Deterministic { value } => (u * value).exp(),
        KillingDist::Gamma { shape, rate } => {
            if u < rate {
                (rate / (rate - u)).powf(shape)
            } else {
                f64::INFINITY
            }
        }
    })
}

/// Offspring intensity and killing law of a birth-and-assassination process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub killing: KillingDist,
}

impl ModelParams {
    pub fn new(lambda: f64, killing: KillingDist) -> Result<Self> {
        let params = Self { lambda, killing };
        params.validate()?;
        Ok(params)
    }

    /// Intensities `(lambda, 1)`.
    pub fn unit(lambda: f64) -> Result<Self> {
        Self::new(lambda, KillingDist::unit_exponential())
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("lambda", self.lambda)?;
        self.killing.validate()
    }
}

/// Result of [`scale_to_unit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScaling {
    pub lambda_unit: f64,
    pub time_factor: f64,
}

/// Maps intensities `(lambda, mu)` to `(lambda / mu, 1)`.
///
/// Progeny counts have the same law under both; times of the unit process
/// must be divided by `time_factor` to recover the original clock.
pub fn scale_to_unit(lambda: f64, mu: f64) -> Result<UnitScaling> {
    check_positive("lambda", lambda)?;
    check_positive("mu", mu)?;
    Ok(UnitScaling {
        lambda_unit: lambda / mu,
        time_factor: mu,
    })
}

/// Dual truncation of a realization: total births and simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensorPolicy {
    pub max_particles: u64,
    pub max_time: f64,
}

impl CensorPolicy {
    pub fn new(max_particles: u64, max_time: f64) -> Result<Self> {
        let policy = Self {
            max_particles,
            max_time,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Caps large enough for a censored run to count as survival.
    pub const fn generous() -> Self {
        Self {
            max_particles: 1_000_000,
            max_time: 1.0e4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_particles == 0 {
            return domain("max_particles must be positive");
        }
        check_positive("max_time", self.max_time)
    }

    pub fn dominates(&self, other: &CensorPolicy) -> bool {
        self.max_particles >= other.max_particles && self.max_time >= other.max_time
    }
}

impl Default for CensorPolicy {
    fn default() -> Self {
        Self::generous()
    }
}

/// Identifies the random stream of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replica_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replica_index: u64) -> Self {
        Self {
            master_seed,
            replica_index,
        }
    }

    /// The stream depends only on `(master_seed, replica_index)`.
    pub fn rng(&self) -> SimRng {
        let mut rng = SimRng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replica_index);
        rng
    }

    /// A master seed for an independent family of replicas.
    pub fn derive_master(master_seed: u64, label: u64) -> u64 {
        // splitmix64 finalizer
        let mut z = master_seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// One realization of the birth-and-assassination process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BAOutcome {
    /// Born particles including the ancestor.
    pub n_born: u64,
    /// Death time of the last particle; `None` when censored.
    pub extinction_time: Option<f64>,
    pub censored: bool,
    /// Peak number of simultaneously living particles over the explored part.
    pub max_alive: u64,
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        domain(format!("{name} must be finite and positive, got {value}"))
    }
}
