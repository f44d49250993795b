//! Seeded bootstrap Monte Carlo oracle for the closed-form pooled-loss
//! moments, fund ruin probabilities, and multi-season scheme outcomes.
//!
//! Whole years are resampled with replacement so the cross-crop dependence
//! inside a year survives; resampling crops independently would destroy the
//! covariances the pooled variance depends on.
//!
//! Randomness comes from ChaCha8 with one stream per replication, derived
//! deterministically from (seed, replication index). Per-replication
//! statistics are collected in replication order and reduced serially, so a
//! run is bit-identical whatever the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DeclarationLog, PriceSchedule, ThetaSeries, YieldPanel};
use crate::empirics::ThresholdSet;
use crate::fund::FundSpec;
use crate::lossmodel::{loss_gain_surplus, LossSeries, ModelError};
use crate::ratemaking::{PolicyTerms, RateQuote};

/// Distinct stream spaces per operation, so a shared seed does not correlate
/// the three oracles.
const RUIN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const TRAJECTORY_SALT: u64 = 0x6a09_e667_f3bc_c909;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("panel has {years} year(s); resampling needs at least 2")]
    DegeneratePanel { years: usize },
    #[error("bad simulation config: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How seasons are resampled from the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    /// Whole years drawn i.i.d. with replacement.
    IidYears,
}

/// Replication count, seasons per replication, and the seed that makes the
/// whole run reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replications: u32,
    pub horizon: u32,
    pub seed: u64,
    pub resample_mode: ResampleMode,
}

impl SimConfig {
    fn check(&self) -> Result<(), SimError> {
        if self.replications == 0 {
            return Err(SimError::BadConfig("replications must be >= 1"));
        }
        if self.horizon == 0 {
            return Err(SimError::BadConfig("horizon must be >= 1"));
        }
        Ok(())
    }
}

/// A Monte Carlo estimate with its standard error across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn zero() -> Estimate {
        Estimate { value: 0.0, stderr: 0.0 }
    }

    /// Mean of per-replication statistics with stderr = sd/√R.
    fn from_samples(samples: &[f64]) -> Estimate {
        let r = samples.len();
        let value = samples.iter().sum::<f64>() / r as f64;
        if r < 2 || samples.iter().all(|&v| v == samples[0]) {
            return Estimate { value, stderr: 0.0 };
        }
        let ss: f64 = samples.iter().map(|&v| (v - value) * (v - value)).sum();
        let var = ss / (r - 1) as f64;
        Estimate { value, stderr: (var / r as f64).sqrt() }
    }
}

/// Bootstrap estimates mirrored to JSON with fixed field names.
///
/// The variance estimate targets the population-divisor pooled variance:
/// the expected unbiased sample variance of i.i.d. draws from the empirical
/// year distribution is exactly that.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub est_mean_loss: Estimate,
    pub est_var_loss: Estimate,
    pub est_ruin_freq: Estimate,
    pub est_mean_surplus: Estimate,
    pub farmer_ruin_freq: Estimate,
}

/// Farmer-side outcomes of simulated scheme participation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    /// Average per-season outlay: premium γl every season plus l (no
    /// declaration) or pl (declaration, benefit paid). Compare l₁ + γl.
    pub mean_outlay: Estimate,
    /// Fraction of replications whose cumulative surplus-minus-outlay went
    /// below zero at some season end.
    pub farmer_ruin_freq: Estimate,
}

fn run_replications<S, F>(replications: u32, per_rep: F) -> Vec<S>
where
    S: Send,
    F: Fn(u32) -> S + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..replications).into_par_iter().map(per_rep).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..replications).map(per_rep).collect()
    }
}

fn rep_rng(seed: u64, rep: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn pooled_series(
    panel: &YieldPanel,
    prices: &PriceSchedule,
    thresholds: &ThresholdSet,
) -> Result<LossSeries, SimError> {
    if panel.year_count() < 2 {
        return Err(SimError::DegeneratePanel { years: panel.year_count() });
    }
    Ok(loss_gain_surplus(panel, prices, thresholds)?)
}

/// Resample whole years and estimate the pooled-loss mean and variance and
/// the pooled-surplus mean; the ruin fields stay zero here.
pub fn bootstrap_moments(
    panel: &YieldPanel,
    prices: &PriceSchedule,
    thresholds: &ThresholdSet,
    theta: &ThetaSeries,
    cfg: &SimConfig,
) -> Result<SimReport, SimError> {
    cfg.check()?;
    if cfg.horizon < 2 {
        return Err(SimError::BadConfig("bootstrap horizon must be >= 2 for a variance"));
    }
    let losses = pooled_series(panel, prices, thresholds)?;
    let loss_pool = losses.pooled_loss(theta);
    let surplus_pool = losses.pooled_surplus(theta);
    let n = loss_pool.len();
    let horizon = cfg.horizon as usize;

    let stats: Vec<(f64, f64, f64)> = run_replications(cfg.replications, |rep| {
        let mut rng = rep_rng(cfg.seed, rep);
        let mut draws_loss = Vec::with_capacity(horizon);
        let mut surplus_sum = 0.0;
        for _ in 0..horizon {
            let idx = rng.gen_range(0..n);
            draws_loss.push(loss_pool[idx]);
            surplus_sum += surplus_pool[idx];
        }
        let mean = draws_loss.iter().sum::<f64>() / horizon as f64;
        let var = if draws_loss.iter().all(|&v| v == draws_loss[0]) {
            0.0
        } else {
            draws_loss.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>()
                / (horizon - 1) as f64
        };
        (mean, var, surplus_sum / horizon as f64)
    });

    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let vars: Vec<f64> = stats.iter().map(|s| s.1).collect();
    let surpluses: Vec<f64> = stats.iter().map(|s| s.2).collect();
    Ok(SimReport {
        est_mean_loss: Estimate::from_samples(&means),
        est_var_loss: Estimate::from_samples(&vars),
        est_ruin_freq: Estimate::zero(),
        est_mean_surplus: Estimate::from_samples(&surpluses),
        farmer_ruin_freq: Estimate::zero(),
    })
}

/// Fraction of simulated seasons whose pooled loss, scaled to the fund's
/// area, exceeds the fund.
pub fn ruin_frequency(
    fund: &FundSpec,
    panel: &YieldPanel,
    prices: &PriceSchedule,
    thresholds: &ThresholdSet,
    theta: &ThetaSeries,
    cfg: &SimConfig,
) -> Result<Estimate, SimError> {
    cfg.check()?;
    let losses = pooled_series(panel, prices, thresholds)?;
    let loss_pool = losses.pooled_loss(theta);
    let n = loss_pool.len();
    let horizon = cfg.horizon as usize;
    let (area, level) = (fund.total_area, fund.fund);

    let freqs: Vec<f64> = run_replications(cfg.replications, |rep| {
        let mut rng = rep_rng(cfg.seed ^ RUIN_SALT, rep);
        let mut exceed = 0usize;
        for _ in 0..horizon {
            let idx = rng.gen_range(0..n);
            if loss_pool[idx] * area > level {
                exceed += 1;
            }
        }
        exceed as f64 / horizon as f64
    });
    Ok(Estimate::from_samples(&freqs))
}

/// Simulate scheme participation season by season.
///
/// Each season the farmer pays the premium γl, plus the full instalment l
/// when no drought is declared or the retained share pl when one is. With a
/// declaration log the declaration flag travels with the resampled year;
/// otherwise declarations are independent Bernoulli(ω) draws.
pub fn scheme_trajectory(
    terms: &PolicyTerms,
    quote: &RateQuote,
    panel: &YieldPanel,
    prices: &PriceSchedule,
    thresholds: &ThresholdSet,
    theta: &ThetaSeries,
    cfg: &SimConfig,
    declarations: Option<&DeclarationLog>,
) -> Result<TrajectoryReport, SimError> {
    cfg.check()?;
    let losses = pooled_series(panel, prices, thresholds)?;
    let surplus_pool = losses.pooled_surplus(theta);
    let n = surplus_pool.len();
    let horizon = cfg.horizon as usize;
    let declared_flags: Option<Vec<bool>> =
        declarations.map(|log| panel.years().iter().map(|&y| log.contains(y)).collect());
    let l = terms.instalment;
    let premium = quote.gamma * l;
    let retained = terms.retained_fraction * l;

    let stats: Vec<(f64, f64)> = run_replications(cfg.replications, |rep| {
        let mut rng = rep_rng(cfg.seed ^ TRAJECTORY_SALT, rep);
        let mut outlay_sum = 0.0;
        let mut cumulative = 0.0;
        let mut ruined = false;
        for _ in 0..horizon {
            let idx = rng.gen_range(0..n);
            let declared = match &declared_flags {
                Some(flags) => flags[idx],
                None => rng.gen::<f64>() < terms.omega,
            };
            let outlay = premium + if declared { retained } else { l };
            outlay_sum += outlay;
            cumulative += surplus_pool[idx] - outlay;
            if cumulative < 0.0 {
                ruined = true;
            }
        }
        (outlay_sum / horizon as f64, f64::from(ruined))
    });

    let outlays: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let ruins: Vec<f64> = stats.iter().map(|s| s.1).collect();
    Ok(TrajectoryReport {
        mean_outlay: Estimate::from_samples(&outlays),
        farmer_ruin_freq: Estimate::from_samples(&ruins),
    })
}
