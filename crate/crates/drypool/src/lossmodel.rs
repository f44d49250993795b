//! Per-crop and area-weighted loss/gain/surplus series, the variance
//! decomposition of the pooled loss, and the coefficient of effectiveness of
//! crop mixing.
//!
//! All expectations over years use sample means. Where two algebraic routes
//! to the same quantity exist (pooled-series form vs moment decomposition),
//! the identities are exact only with population-divisor (n) moments, so the
//! decompositions use those; unbiased (n−1) figures are reported alongside
//! in [`ClusterStats`].

use thiserror::Error;

use crate::dataset::{PriceSchedule, ThetaSeries, YieldPanel};
use crate::empirics::{population_cov, population_variance, sample_cov, sample_mean,
    sample_moments, StatError, ThresholdSet};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("crop count mismatch: panel has {panel}, {what} has {got}")]
    CropCountMismatch { panel: usize, what: &'static str, got: usize },
    #[error("year count mismatch: {left} vs {right}")]
    YearCountMismatch { left: usize, right: usize },
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error("{what} must be finite and >= 0, got {value}")]
    NegativePart { what: &'static str, value: f64 },
    #[error("weighted average loss variance is zero; coefficient of effectiveness undefined")]
    ZeroWeightedVariance,
    #[error("internal identity drift in {what}: {left} vs {right}")]
    IdentityDrift { what: &'static str, left: f64, right: f64 },
}

/// Two routes agreeing within this relative tolerance counts as exact for
/// the moment identities; beyond it something is wrong with the inputs.
const IDENTITY_RTOL: f64 = 1e-9;

fn identity_holds(a: f64, b: f64) -> bool {
    (a - b).abs() <= IDENTITY_RTOL * a.abs().max(b.abs()) + 1e-12
}

/// Priced shortfalls and excesses against each crop's drought threshold,
/// per crop and year (currency/ha).
///
/// For every cell exactly one of loss and gain is nonzero (or both are zero),
/// and surplus = gain − loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSeries {
    loss: Vec<Vec<f64>>,
    gain: Vec<Vec<f64>>,
    surplus: Vec<Vec<f64>>,
}

impl LossSeries {
    pub fn loss(&self, crop: usize) -> &[f64] {
        &self.loss[crop]
    }

    pub fn gain(&self, crop: usize) -> &[f64] {
        &self.gain[crop]
    }

    pub fn surplus(&self, crop: usize) -> &[f64] {
        &self.surplus[crop]
    }

    pub fn crop_count(&self) -> usize {
        self.loss.len()
    }

    pub fn year_count(&self) -> usize {
        self.loss[0].len()
    }

    /// Area-weighted pooled loss per year, summed in fixed crop order.
    pub fn pooled_loss(&self, theta: &ThetaSeries) -> Vec<f64> {
        pooled(&self.loss, theta)
    }

    /// Area-weighted pooled gain per year.
    pub fn pooled_gain(&self, theta: &ThetaSeries) -> Vec<f64> {
        pooled(&self.gain, theta)
    }

    /// Area-weighted pooled surplus per year.
    pub fn pooled_surplus(&self, theta: &ThetaSeries) -> Vec<f64> {
        pooled(&self.surplus, theta)
    }
}

fn pooled(matrix: &[Vec<f64>], theta: &ThetaSeries) -> Vec<f64> {
    let n = matrix[0].len();
    (0..n)
        .map(|t| {
            matrix
                .iter()
                .enumerate()
                .map(|(j, row)| theta.share(j, t) * row[t])
                .sum()
        })
        .collect()
}

fn check_alignment(
    panel: &YieldPanel,
    prices: &PriceSchedule,
    thresholds: Option<&ThresholdSet>,
) -> Result<(), ModelError> {
    if prices.crop_count() != panel.crop_count() {
        return Err(ModelError::CropCountMismatch {
            panel: panel.crop_count(),
            what: "price schedule",
            got: prices.crop_count(),
        });
    }
    if let Some(t) = thresholds {
        if t.crop_count() != panel.crop_count() {
            return Err(ModelError::CropCountMismatch {
                panel: panel.crop_count(),
                what: "threshold set",
                got: t.crop_count(),
            });
        }
    }
    Ok(())
}

fn check_theta(theta: &ThetaSeries, losses: &LossSeries) -> Result<(), ModelError> {
    if theta.crop_count() != losses.crop_count() {
        return Err(ModelError::CropCountMismatch {
            panel: losses.crop_count(),
            what: "theta series",
            got: theta.crop_count(),
        });
    }
    if theta.year_count() != losses.year_count() {
        return Err(ModelError::YearCountMismatch {
            left: theta.year_count(),
            right: losses.year_count(),
        });
    }
    Ok(())
}

/// Priced loss λ·max{0, μc − Υ}, gain λ·max{0, Υ − μc} and surplus
/// gain − loss for every crop and year.
pub fn loss_gain_surplus(
    panel: &YieldPanel,
    prices: &PriceSchedule,
    thresholds: &ThresholdSet,
) -> Result<LossSeries, ModelError> {
    check_alignment(panel, prices, Some(thresholds))?;
    let (j, n) = (panel.crop_count(), panel.year_count());
    let mut loss = vec![vec![0.0; n]; j];
    let mut gain = vec![vec![0.0; n]; j];
    let mut surplus = vec![vec![0.0; n]; j];
    for ci in 0..j {
        let mu = thresholds.mu_c_of(ci);
        for t in 0..n {
            let lambda = prices.price(ci, t);
            let y = panel.yield_at(ci, t);
            loss[ci][t] = lambda * (mu - y).max(0.0);
            gain[ci][t] = lambda * (y - mu).max(0.0);
            surplus[ci][t] = gain[ci][t] - loss[ci][t];
        }
    }
    Ok(LossSeries { loss, gain, surplus })
}

/// Revenue per hectare λ_j(t)·Υ_j(t) for each crop and year.
pub fn revenue_series(
    panel: &YieldPanel,
    prices: &PriceSchedule,
) -> Result<Vec<Vec<f64>>, ModelError> {
    check_alignment(panel, prices, None)?;
    Ok((0..panel.crop_count())
        .map(|j| {
            (0..panel.year_count())
                .map(|t| prices.price(j, t) * panel.yield_at(j, t))
                .collect()
        })
        .collect())
}

/// Expected area-weighted loss: the sample mean of the pooled per-year
/// series Σ_j θ_j(t)·L_j(t).
///
/// The equivalent decomposition Σ_j (α_j·E[L_j] + Cov[θ_j, L_j]) is evaluated
/// as a guard; the two routes must agree to within 1e-9 relative.
pub fn mean_weighted_loss(theta: &ThetaSeries, losses: &LossSeries) -> Result<f64, ModelError> {
    check_theta(theta, losses)?;
    let direct = sample_mean(&losses.pooled_loss(theta))?;
    let mut decomposed = 0.0;
    for j in 0..losses.crop_count() {
        decomposed += theta.alphas()[j] * sample_mean(losses.loss(j))?;
        decomposed += population_cov(theta.shares(j), losses.loss(j))?;
    }
    if !identity_holds(direct, decomposed) {
        return Err(ModelError::IdentityDrift {
            what: "mean weighted loss",
            left: direct,
            right: decomposed,
        });
    }
    Ok(direct)
}

/// Which route to take to the variance of the pooled loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    /// Population variance of the per-year pooled series.
    Direct,
    /// Term-by-term moment decomposition over per-crop covariances and
    /// cross-covariances; algebraically identical to `Direct`.
    Decomposed,
    /// The pairwise-independence shortcut Σ_j Cov[θ_j², L_j²]. Kept for
    /// reproduction only: it drops the E[θ²]E[L²] − (E[θL])² terms that
    /// survive even under independence, so it does not match `Direct` and is
    /// excluded from identity checks.
    IndependentReduction,
}

/// Variance of the pooled loss with population (n) divisor, by the chosen
/// route. See [`cluster_stats`] for the unbiased (n−1) figure.
pub fn var_weighted_loss(
    theta: &ThetaSeries,
    losses: &LossSeries,
    mode: VarianceMode,
) -> Result<f64, ModelError> {
    check_theta(theta, losses)?;
    let j = losses.crop_count();
    match mode {
        VarianceMode::Direct => Ok(population_variance(&losses.pooled_loss(theta))?),
        VarianceMode::Decomposed => {
            let mut total = 0.0;
            let weighted: Vec<Vec<f64>> = (0..j)
                .map(|c| {
                    theta
                        .shares(c)
                        .iter()
                        .zip(losses.loss(c))
                        .map(|(&w, &l)| w * l)
                        .collect()
                })
                .collect();
            for c in 0..j {
                let th = theta.shares(c);
                let lo = losses.loss(c);
                let th2: Vec<f64> = th.iter().map(|&v| v * v).collect();
                let lo2: Vec<f64> = lo.iter().map(|&v| v * v).collect();
                let mean_th2 = sample_mean(&th2)?;
                let mean_lo2 = sample_mean(&lo2)?;
                let first_moment =
                    population_cov(th, lo)? + sample_mean(th)? * sample_mean(lo)?;
                total += population_cov(&th2, &lo2)? + mean_th2 * mean_lo2
                    - first_moment * first_moment;
            }
            for a in 0..j {
                for b in 0..j {
                    if a != b {
                        total += population_cov(&weighted[a], &weighted[b])?;
                    }
                }
            }
            Ok(total)
        }
        VarianceMode::IndependentReduction => {
            let mut total = 0.0;
            for c in 0..j {
                let th2: Vec<f64> = theta.shares(c).iter().map(|&v| v * v).collect();
                let lo2: Vec<f64> = losses.loss(c).iter().map(|&v| v * v).collect();
                total += population_cov(&th2, &lo2)?;
            }
            Ok(total)
        }
    }
}

/// Unbiased (n−1) variance of the pooled loss series.
pub fn var_weighted_loss_unbiased(
    theta: &ThetaSeries,
    losses: &LossSeries,
) -> Result<f64, ModelError> {
    check_theta(theta, losses)?;
    Ok(sample_moments(&losses.pooled_loss(theta))?.1)
}

/// Coefficient of effectiveness of crop mixing:
/// Var[L_θ] / Σ_j α_j·Var[L_j]. Lower means pooling removes more risk; 1/J is
/// the floor for uncorrelated equal-variance losses under equal weights.
///
/// When θ is constant over years the quadratic-form expansion
/// Σ α_j²·Var[L_j] + Σ_{i≠j} α_iα_j·Cov(L_i, L_j) is evaluated as a guard and
/// must agree to within 1e-9 relative.
pub fn coefficient_of_effectiveness(
    theta: &ThetaSeries,
    losses: &LossSeries,
) -> Result<f64, ModelError> {
    check_theta(theta, losses)?;
    let denominator = weighted_average_variance(theta, losses)?;
    if denominator <= 0.0 {
        return Err(ModelError::ZeroWeightedVariance);
    }
    let phi = var_weighted_loss_unbiased(theta, losses)? / denominator;
    if theta.is_constant() {
        let j = losses.crop_count();
        let alphas = theta.alphas();
        let mut quadratic = 0.0;
        for a in 0..j {
            quadratic += alphas[a] * alphas[a] * sample_moments(losses.loss(a))?.1;
            for b in 0..j {
                if a != b {
                    quadratic +=
                        alphas[a] * alphas[b] * sample_cov(losses.loss(a), losses.loss(b))?;
                }
            }
        }
        let phi_quadratic = quadratic / denominator;
        if !identity_holds(phi, phi_quadratic) {
            return Err(ModelError::IdentityDrift {
                what: "constant-theta effectiveness",
                left: phi,
                right: phi_quadratic,
            });
        }
    }
    Ok(phi)
}

/// Weighted average of the per-crop loss variances, E[V] = Σ_j α_j·Var[L_j]
/// (unbiased divisor).
pub fn weighted_average_variance(
    theta: &ThetaSeries,
    losses: &LossSeries,
) -> Result<f64, ModelError> {
    check_theta(theta, losses)?;
    let mut total = 0.0;
    for j in 0..losses.crop_count() {
        total += theta.alphas()[j] * sample_moments(losses.loss(j))?.1;
    }
    Ok(total)
}

/// The weight vector minimizing Σ α_j² on the simplex — the uncorrelated
/// equal-variance effectiveness — and the minimal value 1/J.
pub fn effectiveness_minimizer(crop_count: usize) -> (Vec<f64>, f64) {
    assert!(crop_count >= 1, "need at least one crop");
    let w = 1.0 / crop_count as f64;
    (vec![w; crop_count], w)
}

/// Pooled and per-crop surplus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SurplusStats {
    /// Sample mean of the pooled per-year surplus Σ_j θ_j(t)·S_j(t).
    pub mean_surplus: f64,
    /// Per-crop mean surplus E[S_j].
    pub per_crop_mean: Vec<f64>,
    /// E[S_j] > 0 per crop; a crop failing this makes no business sense on
    /// its own and can be dropped from the cluster (a caller decision).
    pub insurable: Vec<bool>,
    /// Σ_j α_j·E[S_j]: the constant-share form, which is also the value under
    /// independence of θ_j and S_j. Reported for comparison with the pooled
    /// figure.
    pub independence_form: f64,
}

/// Mean pooled surplus with per-crop insurability flags.
pub fn surplus_stats(theta: &ThetaSeries, losses: &LossSeries) -> Result<SurplusStats, ModelError> {
    check_theta(theta, losses)?;
    let mean_surplus = sample_mean(&losses.pooled_surplus(theta))?;
    let per_crop_mean: Vec<f64> = (0..losses.crop_count())
        .map(|j| sample_mean(losses.surplus(j)))
        .collect::<Result<_, _>>()?;
    let insurable = per_crop_mean.iter().map(|&m| m > 0.0).collect();
    let independence_form = theta
        .alphas()
        .iter()
        .zip(&per_crop_mean)
        .map(|(&a, &m)| a * m)
        .sum();
    Ok(SurplusStats { mean_surplus, per_crop_mean, insurable, independence_form })
}

/// Gross premium split into its parts; gross = net + buffer load + admin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrossPremiumBreakdown {
    pub net_premium: f64,
    pub buffer_load: f64,
    pub admin_cost: f64,
    pub gross: f64,
}

/// Assemble a gross premium from its non-negative parts.
pub fn gross_premium(
    net: f64,
    buffer: f64,
    admin: f64,
) -> Result<GrossPremiumBreakdown, ModelError> {
    for (what, value) in [("net premium", net), ("buffer load", buffer), ("admin cost", admin)] {
        if !value.is_finite() || value < 0.0 {
            return Err(ModelError::NegativePart { what, value });
        }
    }
    Ok(GrossPremiumBreakdown {
        net_premium: net,
        buffer_load: buffer,
        admin_cost: admin,
        gross: net + buffer + admin,
    })
}

/// Pooled loss/gain/surplus moments for a crop cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    /// E[L_θ], currency/ha.
    pub mean_loss: f64,
    /// Var(L_θ) with the unbiased n−1 divisor, (currency/ha)².
    pub var_loss: f64,
    /// Var(L_θ) with the population n divisor (the value the bootstrap
    /// oracle estimates).
    pub var_loss_population: f64,
    /// E[S_θ], currency/ha.
    pub mean_surplus: f64,
    /// E[G_θ], currency/ha.
    pub mean_gain: f64,
    /// Coefficient of effectiveness Var[L_θ]/E[V]; `None` when every crop's
    /// loss variance is zero.
    pub phi: Option<f64>,
    /// E[V] = Σ_j α_j·Var[L_j] (unbiased divisor).
    pub weighted_avg_var: f64,
    /// E[S_j] > 0 per crop.
    pub per_crop_insurable: Vec<bool>,
}

/// Assemble the pooled moments a fund sizing or rate quote needs.
pub fn cluster_stats(theta: &ThetaSeries, losses: &LossSeries) -> Result<ClusterStats, ModelError> {
    let mean_loss = mean_weighted_loss(theta, losses)?;
    let var_loss = var_weighted_loss_unbiased(theta, losses)?;
    let var_loss_population = var_weighted_loss(theta, losses, VarianceMode::Direct)?;
    let surplus = surplus_stats(theta, losses)?;
    let mean_gain = sample_mean(&losses.pooled_gain(theta))?;
    let weighted_avg_var = weighted_average_variance(theta, losses)?;
    let phi = if weighted_avg_var > 0.0 {
        Some(coefficient_of_effectiveness(theta, losses)?)
    } else {
        None
    };
    Ok(ClusterStats {
        mean_loss,
        var_loss,
        var_loss_population,
        mean_surplus: surplus.mean_surplus,
        mean_gain,
        phi,
        weighted_avg_var,
        per_crop_insurable: surplus.insurable,
    })
}
