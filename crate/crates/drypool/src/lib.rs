//! Rate-making engine for pooled dry-land drought insurance.
//!
//! The library turns a multi-crop yield/area panel into the quantities an
//! insurer of drought-exposed loan instalments needs:
//!
//! - empirical drought thresholds per crop and their declaration coincidence
//!   ([`empirics`]),
//! - per-crop and area-weighted loss/gain/surplus series, the variance
//!   decomposition of the pooled loss, and the coefficient of effectiveness
//!   of crop mixing ([`lossmodel`]),
//! - buffer-fund sizing at a target ruin probability ([`fund`]),
//! - actuarially sound premium rates, the government-subsidy floor, and the
//!   piecewise premium/subsidy schedules as functions of drought probability
//!   ([`ratemaking`]),
//! - a seeded bootstrap Monte Carlo oracle that cross-checks the closed
//!   forms ([`simulate`]).
//!
//! CSV ingestion and panel validation live in [`dataset`]; the `drypool`
//! binary (see [`commands`]) wires everything into reproducible runs.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod empirics;
pub mod fund;
pub mod lossmodel;
pub mod ratemaking;
pub mod simulate;

pub use dataset::{
    derive_theta, load_declarations, load_panel, load_prices, DeclarationLog, PriceSchedule,
    ThetaSeries, YieldPanel,
};
pub use empirics::{coincidence, crop_omega, empirical_cdf, threshold_for_omega, ThresholdSet};
pub use fund::{normal_cdf, size_fund, standardize, FundSpec};
pub use lossmodel::{
    cluster_stats, coefficient_of_effectiveness, effectiveness_minimizer, gross_premium,
    loss_gain_surplus, mean_weighted_loss, revenue_series, surplus_stats, var_weighted_loss,
    ClusterStats, LossSeries, VarianceMode,
};
pub use ratemaking::{
    nu_floor, rate_schedule, residuals, set_rates, solvency_condition, sound_rate, PolicyTerms,
    RateQuote, RateSchedule, Regime,
};
pub use simulate::{
    bootstrap_moments, ruin_frequency, scheme_trajectory, Estimate, SimConfig, SimReport,
    TrajectoryReport,
};
