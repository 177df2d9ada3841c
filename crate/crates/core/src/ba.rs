//! Exact sampler of the birth-and-assassination process.
//!
//! A particle born at `b` becomes at risk when its parent dies (at `r`) and
//! dies at `d = r + K`. While alive it gives birth at the arrivals of a
//! rate-`lambda` Poisson process on `[b, d]`; every child is at risk from `d`.
//! Because a child's death time is known as soon as its parent's is, the tree
//! is explored particle by particle, in increasing order of at-risk time, with
//! no time discretization. A global event sort is only needed for
//! [`Trajectory`] and for the peak living count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{BAOutcome, CensorPolicy, ModelParams, SeedSpec};
use crate::replicas::try_run_replicas;
use crate::stats::{summarize, SampleSummary};

/// Conditioning on the ancestor's killing clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RootCondition {
    /// At risk from time 0; its killing time is sampled.
    Free,
    /// Cannot die before `t`; at risk from `t` (the variable `X(t)`).
    AtRiskAt(f64),
    /// Dies exactly at `t` (the variable `Y(t)`).
    DiesAt(f64),
}

impl RootCondition {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::Free => Ok(()),
            Self::AtRiskAt(t) | Self::DiesAt(t) => {
                if t.is_finite() && t >= 0.0 {
                    Ok(())
                } else {
                    domain(format!("root conditioning time must be finite and >= 0, got {t}"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Birth,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub kind: EventKind,
    /// Living particles right after the event.
    pub alive_after: u64,
}

/// Time-ordered event log of one realization. The ancestor is alive before
/// the first event; its birth is not logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub events: Vec<TrajectoryEvent>,
}

impl Trajectory {
    pub fn max_alive(&self) -> u64 {
        self.events
            .iter()
            .map(|e| e.alive_after)
            .max()
            .unwrap_or(1)
            .max(1)
    }
}

/// A particle whose parent's death time is known but whose own killing
/// clock has not been drawn yet.
struct Pending {
    at_risk: f64,
    seq: u64,
    birth: f64,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap and we pop the earliest at-risk time
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at_risk
            .total_cmp(&self.at_risk)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Raw birth and death times of a realization (ancestor excluded from births).
struct Realization {
    n_born: u64,
    censored: bool,
    births: Vec<f64>,
    deaths: Vec<f64>,
}

fn explore<R: Rng + ?Sized>(
    params: &ModelParams,
    root: RootCondition,
    policy: &CensorPolicy,
    rng: &mut R,
) -> Realization {
    let lambda = params.lambda;
    let mut births = Vec::new();
    let mut deaths = Vec::new();
    let mut n_born = 1u64;
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;

    let root_death = match root {
        RootCondition::Free => params.killing.sample(rng),
        RootCondition::AtRiskAt(t) => t + params.killing.sample(rng),
        RootCondition::DiesAt(t) => t,
    };
    let mut current = Some((0.0, root_death));

    while let Some((birth, death)) = current.take() {
        if death > policy.max_time {
            return Realization {
                n_born,
                censored: true,
                births,
                deaths,
            };
        }
        deaths.push(death);
        let mut clock = birth;
        loop {
            let gap: f64 = Exp1.sample(rng);
            clock += gap / lambda;
            if clock > death {
                break;
            }
            if n_born >= policy.max_particles {
                return Realization {
                    n_born,
                    censored: true,
                    births,
                    deaths,
                };
            }
            n_born += 1;
            births.push(clock);
            heap.push(Pending {
                at_risk: death,
                seq,
                birth: clock,
            });
            seq += 1;
        }
        if let Some(next) = heap.pop() {
            let k = params.killing.sample(rng);
            current = Some((next.birth, next.at_risk + k));
        }
    }

    Realization {
        n_born,
        censored: false,
        births,
        deaths,
    }
}

/// Merges births and deaths into the ordered log; ties put births first.
fn build_events(mut births: Vec<f64>, mut deaths: Vec<f64>) -> Vec<TrajectoryEvent> {
    births.sort_unstable_by(f64::total_cmp);
    deaths.sort_unstable_by(f64::total_cmp);
    let mut events = Vec::with_capacity(births.len() + deaths.len());
    let (mut i, mut j) = (0, 0);
    let mut alive = 1u64;
    while i < births.len() || j < deaths.len() {
        let take_birth = j >= deaths.len() || (i < births.len() && births[i] <= deaths[j]);
        if take_birth {
            alive += 1;
            events.push(TrajectoryEvent {
                time: births[i],
                kind: EventKind::Birth,
                alive_after: alive,
            });
            i += 1;
        } else {
            alive -= 1;
            events.push(TrajectoryEvent {
                time: deaths[j],
                kind: EventKind::Death,
                alive_after: alive,
            });
            j += 1;
        }
    }
    events
}

fn peak_alive(births: &mut [f64], deaths: &mut [f64]) -> u64 {
    births.sort_unstable_by(f64::total_cmp);
    deaths.sort_unstable_by(f64::total_cmp);
    let (mut i, mut j) = (0, 0);
    let mut alive = 1u64;
    let mut peak = 1u64;
    while i < births.len() {
        if j < deaths.len() && deaths[j] < births[i] {
            alive -= 1;
            j += 1;
        } else {
            alive += 1;
            peak = peak.max(alive);
            i += 1;
        }
    }
    peak
}

fn validate_inputs(params: &ModelParams, root: RootCondition, policy: &CensorPolicy) -> Result<()> {
    params.validate()?;
    root.validate()?;
    policy.validate()
}

/// Draws one realization from the stream of `seed`.
pub fn sample_ba(
    params: &ModelParams,
    root: RootCondition,
    policy: &CensorPolicy,
    seed: SeedSpec,
) -> Result<BAOutcome> {
    validate_inputs(params, root, policy)?;
    Ok(sample_with_rng(params, root, policy, &mut seed.rng()))
}

/// Same as [`sample_ba`] for an already-positioned stream. Inputs are
/// assumed valid.
pub fn sample_with_rng<R: Rng + ?Sized>(
    params: &ModelParams,
    root: RootCondition,
    policy: &CensorPolicy,
    rng: &mut R,
) -> BAOutcome {
    let mut real = explore(params, root, policy, rng);
    let extinction_time = if real.censored {
        None
    } else {
        real.deaths.iter().copied().reduce(f64::max)
    };
    let max_alive = peak_alive(&mut real.births, &mut real.deaths);
    BAOutcome {
        n_born: real.n_born,
        extinction_time,
        censored: real.censored,
        max_alive,
    }
}

/// Event log of the realization [`sample_ba`] draws from the same seed.
pub fn sample_trajectory(
    params: &ModelParams,
    root: RootCondition,
    policy: &CensorPolicy,
    seed: SeedSpec,
) -> Result<Trajectory> {
    validate_inputs(params, root, policy)?;
    let real = explore(params, root, policy, &mut seed.rng());
    Ok(Trajectory {
        events: build_events(real.births, real.deaths),
    })
}

/// Independent realizations for replicas `0..replicas` of `master_seed`.
pub fn sample_many(
    params: &ModelParams,
    root: RootCondition,
    policy: &CensorPolicy,
    master_seed: u64,
    replicas: u64,
) -> Result<Vec<BAOutcome>> {
    validate_inputs(params, root, policy)?;
    try_run_replicas(master_seed, replicas, |seed| {
        Ok(sample_with_rng(params, root, policy, &mut seed.rng()))
    })
}

/// Monte Carlo estimate of `E Y(t)`: mean progeny when the ancestor dies at `t`.
pub fn sample_y_mean(
    params: &ModelParams,
    t: f64,
    replicas: u64,
    policy: &CensorPolicy,
    master_seed: u64,
) -> Result<SampleSummary> {
    let outcomes = sample_many(params, RootCondition::DiesAt(t), policy, master_seed, replicas)?;
    let censored = outcomes.iter().filter(|o| o.censored).count() as u64;
    let values: Vec<f64> = outcomes.iter().map(|o| o.n_born as f64).collect();
    summarize(&values, censored)
}
