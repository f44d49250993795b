//! Buffer-fund sizing from pooled-loss moments and ruin-probability
//! estimation under the normal approximation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lossmodel::ClusterStats;

#[derive(Debug, Error)]
pub enum FundError {
    #[error("risk-appetite multiplier eta must be >= 0, got {0}")]
    NegativeEta(f64),
    #[error("total area must be > 0, got {0}")]
    NonPositiveArea(f64),
    #[error("pooled loss variance is zero; z-scores are undefined")]
    ZeroVariance,
}

/// A sized buffer fund: total area times the funded per-hectare level
/// E[L_θ] + η·√Var[L_θ], with the one-sided normal exceedance as the ruin
/// probability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundSpec {
    pub eta: f64,
    pub total_area: f64,
    pub fund: f64,
    pub ruin_prob: f64,
}

/// Size the buffer fund at risk appetite `eta` over `total_area` hectares.
///
/// Ruin is one-sided: the probability that a season's pooled loss exceeds
/// the funded per-hectare level, 1 − Φ(η). At η = 1.96 that is 2.5%.
pub fn size_fund(stats: &ClusterStats, total_area: f64, eta: f64) -> Result<FundSpec, FundError> {
    if !(eta >= 0.0) {
        return Err(FundError::NegativeEta(eta));
    }
    if !(total_area > 0.0) {
        return Err(FundError::NonPositiveArea(total_area));
    }
    let fund = total_area * (stats.mean_loss + eta * stats.var_loss.sqrt());
    Ok(FundSpec { eta, total_area, fund, ruin_prob: 1.0 - normal_cdf(eta) })
}

/// Z-score of a pooled per-hectare loss against the cluster moments.
pub fn standardize(loss: f64, stats: &ClusterStats) -> Result<f64, FundError> {
    if stats.var_loss <= 0.0 {
        return Err(FundError::ZeroVariance);
    }
    Ok((loss - stats.mean_loss) / stats.var_loss.sqrt())
}

/// Standard normal CDF via the Abramowitz–Stegun 26.2.17 rational
/// approximation; absolute error below 7.5e-8. Negative arguments reflect
/// through Φ(−x) = 1 − Φ(x) exactly.
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - normal_cdf(-x);
    }
    const B: [f64; 5] = [0.319381530, -0.356563782, 1.781477937, -1.821255978, 1.330274429];
    const K0: f64 = 0.2316419;
    let k = 1.0 / (1.0 + K0 * x);
    let poly = k * (B[0] + k * (B[1] + k * (B[2] + k * (B[3] + k * B[4]))));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    1.0 - pdf * poly
}
