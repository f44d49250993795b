//! The five CLI commands behind the `drypool` binary: ingest, analyze,
//! rates, fund, simulate. Each returns a printable summary and writes
//! plot-ready CSV/JSON under the configured output directory.
//!
//! Exit-code contract: validation problems (unreadable or inconsistent
//! inputs, bad config) map to 1, computation problems (degenerate
//! statistics, rate constraints) map to 2.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{OmegaSource, RunConfig};
use crate::dataset::{
    derive_theta, instalment_moving_average, load_declarations, load_panel, load_prices,
    DeclarationLog, LoadWarning, PriceSchedule, ThetaSeries, YieldPanel,
};
use crate::empirics::ThresholdSet;
use crate::fund::{size_fund, FundSpec};
use crate::lossmodel::{cluster_stats, loss_gain_surplus, revenue_series, ClusterStats};
use crate::ratemaking::{rate_schedule, set_rates, sound_rate, PolicyTerms, RateQuote, Regime};
use crate::simulate::{bootstrap_moments, ruin_frequency, scheme_trajectory, SimReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Computation(_) => 2,
        }
    }
}

fn validation<T, E: fmt::Display>(result: Result<T, E>) -> Result<T, CliError> {
    result.map_err(|e| CliError::Validation(e.to_string()))
}

fn computation<T, E: fmt::Display>(result: Result<T, E>) -> Result<T, CliError> {
    result.map_err(|e| CliError::Computation(e.to_string()))
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

/// Everything a command needs, loaded and aligned once.
pub struct Prepared {
    pub panel: YieldPanel,
    pub warnings: Vec<LoadWarning>,
    pub prices: PriceSchedule,
    pub log: DeclarationLog,
    pub theta: ThetaSeries,
    /// Resolved drought probability for rate-setting and fund sizing.
    pub omega: f64,
    /// Resolved instalment l (given directly or a trailing moving average).
    pub instalment: f64,
    /// Crops removed by `drop_uninsurable`, if any.
    pub dropped_crops: Vec<String>,
}

pub fn prepare(config: &RunConfig) -> Result<Prepared, CliError> {
    let yields_src = read_input(&config.inputs.yields)?;
    let areas_src = read_input(&config.inputs.areas)?;
    let (mut panel, warnings) = validation(load_panel(&yields_src, &areas_src))?;
    let mut prices = validation(load_prices(&read_input(&config.inputs.prices)?, &panel))?;
    let mut log =
        validation(load_declarations(&read_input(&config.inputs.declarations)?, &panel))?;

    let instalment = match config.policy.instalment {
        Some(l) => l,
        None => {
            let path = config.inputs.instalments.as_ref().expect("validated");
            validation(instalment_moving_average(
                &read_input(path)?,
                config.policy.instalment_window,
            ))?
        }
    };
    let omega = match config.policy.omega {
        OmegaSource::Declarations => log.omega_hat(),
        OmegaSource::Fixed(x) => x,
    };

    let mut theta = if config.policy.equal_weights {
        ThetaSeries::equal_weights(panel.crop_count(), panel.year_count())
    } else {
        computation(derive_theta(&panel))?
    };

    let mut dropped_crops = Vec::new();
    if config.policy.drop_uninsurable {
        let thresholds = computation(ThresholdSet::from_omega(&panel, omega))?;
        let losses = computation(loss_gain_surplus(&panel, &prices, &thresholds))?;
        let surplus = computation(crate::lossmodel::surplus_stats(&theta, &losses))?;
        if surplus.insurable.iter().any(|&ok| !ok) {
            dropped_crops = panel
                .crops()
                .iter()
                .zip(&surplus.insurable)
                .filter(|(_, &ok)| !ok)
                .map(|(c, _)| c.clone())
                .collect();
            let keep = surplus.insurable.clone();
            panel = computation(panel.retain_crops(&keep))?;
            prices = prices.retain_crops(&keep);
            log = validation(DeclarationLog::new(
                log.declared_years().iter().copied().collect(),
                &panel,
            ))?;
            theta = if config.policy.equal_weights {
                ThetaSeries::equal_weights(panel.crop_count(), panel.year_count())
            } else {
                computation(derive_theta(&panel))?
            };
        }
    }

    Ok(Prepared { panel, warnings, prices, log, theta, omega, instalment, dropped_crops })
}

fn stats_at_omega(prepared: &Prepared, omega: f64) -> Result<(ThresholdSet, ClusterStats), CliError> {
    let thresholds = computation(ThresholdSet::from_omega(&prepared.panel, omega))?;
    let losses = computation(loss_gain_surplus(&prepared.panel, &prepared.prices, &thresholds))?;
    let stats = computation(cluster_stats(&prepared.theta, &losses))?;
    Ok((thresholds, stats))
}

fn policy_terms(prepared: &Prepared, config: &RunConfig, omega: f64) -> Result<PolicyTerms, CliError> {
    computation(PolicyTerms::new(
        prepared.instalment,
        config.policy.retained_fraction,
        omega,
        config.policy.nu,
    ))
}

// ── ingest ────────────────────────────────────────────────────────────────

#[derive(Debug)]
pub struct IngestSummary {
    pub crop_count: usize,
    pub year_count: usize,
    pub crops: Vec<String>,
    pub first_year: i32,
    pub last_year: i32,
    pub warnings: Vec<String>,
    pub declared_count: usize,
    pub omega_hat: f64,
    pub out_dir: PathBuf,
}

impl fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "panel: {} crops x {} years ({}-{})",
            self.crop_count, self.year_count, self.first_year, self.last_year
        )?;
        writeln!(f, "crops: {}", self.crops.join(", "))?;
        if self.warnings.is_empty() {
            writeln!(f, "warnings: none")?;
        } else {
            for w in &self.warnings {
                writeln!(f, "warning: {w}")?;
            }
        }
        writeln!(
            f,
            "declarations: {} of {} years; omega_hat = {:.6}",
            self.declared_count, self.year_count, self.omega_hat
        )?;
        write!(f, "canonical CSVs written to {}", self.out_dir.display())
    }
}

/// Validate all inputs and write canonical copies of the cleaned panel.
pub fn cmd_ingest(config: &RunConfig) -> Result<IngestSummary, CliError> {
    let prepared = prepare(config)?;
    let out = &config.output.dir;
    write_output(&out.join("yields.csv"), &prepared.panel.to_yields_csv())?;
    write_output(&out.join("areas.csv"), &prepared.panel.to_areas_csv())?;
    write_output(&out.join("declarations.csv"), &prepared.log.to_csv(&prepared.panel))?;
    Ok(IngestSummary {
        crop_count: prepared.panel.crop_count(),
        year_count: prepared.panel.year_count(),
        crops: prepared.panel.crops().to_vec(),
        first_year: prepared.panel.years()[0],
        last_year: *prepared.panel.years().last().expect("nonempty"),
        warnings: prepared.warnings.iter().map(|w| w.to_string()).collect(),
        declared_count: prepared.log.len(),
        omega_hat: prepared.log.omega_hat(),
        out_dir: out.clone(),
    })
}

// ── analyze ───────────────────────────────────────────────────────────────

#[derive(Debug)]
pub struct AnalyzeSummary {
    pub revenue_path: PathBuf,
    pub profit_path: PathBuf,
    pub phi_path: PathBuf,
    pub grid_len: usize,
    pub dropped_crops: Vec<String>,
}

impl fmt::Display for AnalyzeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.dropped_crops.is_empty() {
            writeln!(f, "dropped uninsurable crops: {}", self.dropped_crops.join(", "))?;
        }
        writeln!(f, "wrote {}", self.revenue_path.display())?;
        writeln!(f, "wrote {} ({} grid points)", self.profit_path.display(), self.grid_len)?;
        write!(f, "wrote {} ({} grid points)", self.phi_path.display(), self.grid_len)
    }
}

/// Write revenue per hectare and the expected-profit / effectiveness curves
/// over the drought-probability grid.
pub fn cmd_analyze(config: &RunConfig) -> Result<AnalyzeSummary, CliError> {
    let prepared = prepare(config)?;
    let out = &config.output.dir;

    let revenue = computation(revenue_series(&prepared.panel, &prepared.prices))?;
    let with_costs = !config.input_costs.is_empty();
    let mut revenue_csv = String::from("crop,year,revenue_per_ha");
    if with_costs {
        revenue_csv.push_str(",input_cost_per_ha");
    }
    revenue_csv.push('\n');
    for (j, crop) in prepared.panel.crops().iter().enumerate() {
        for (t, year) in prepared.panel.years().iter().enumerate() {
            revenue_csv.push_str(&format!("{crop},{year},{}", revenue[j][t]));
            if with_costs {
                match config.input_costs.get(crop) {
                    Some(cost) => revenue_csv.push_str(&format!(",{cost}")),
                    None => revenue_csv.push(','),
                }
            }
            revenue_csv.push('\n');
        }
    }

    let grid = config.grid.points();
    let mut profit_csv = String::from("omega,mean_surplus\n");
    let mut phi_csv = String::from("omega,phi\n");
    for &omega in &grid {
        let (_, stats) = stats_at_omega(&prepared, omega)?;
        profit_csv.push_str(&format!("{omega},{}\n", stats.mean_surplus));
        let phi = stats.phi.map_or(String::new(), |p| p.to_string());
        phi_csv.push_str(&format!("{omega},{phi}\n"));
    }

    let revenue_path = out.join("revenue.csv");
    let profit_path = out.join("profit_vs_omega.csv");
    let phi_path = out.join("phi_vs_omega.csv");
    write_output(&revenue_path, &revenue_csv)?;
    write_output(&profit_path, &profit_csv)?;
    write_output(&phi_path, &phi_csv)?;
    Ok(AnalyzeSummary {
        revenue_path,
        profit_path,
        phi_path,
        grid_len: grid.len(),
        dropped_crops: prepared.dropped_crops,
    })
}

// ── rates ─────────────────────────────────────────────────────────────────

#[derive(Debug)]
pub struct RatesSummary {
    pub schedule_path: PathBuf,
    pub grid_len: usize,
    pub subsidy_onset: Option<f64>,
    pub full_subsidy_onset: Option<f64>,
    pub omega: f64,
    pub sound_rate: f64,
    pub quote: RateQuote,
    pub instalment: f64,
    pub mean_surplus: f64,
    pub dropped_crops: Vec<String>,
}

impl fmt::Display for RatesSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.dropped_crops.is_empty() {
            writeln!(f, "dropped uninsurable crops: {}", self.dropped_crops.join(", "))?;
        }
        writeln!(f, "schedule written to {} ({} grid points)", self.schedule_path.display(), self.grid_len)?;
        match self.subsidy_onset {
            Some(w) => writeln!(f, "subsidy onset: omega = {w}")?,
            None => writeln!(f, "subsidy onset: not reached on the grid")?,
        }
        match self.full_subsidy_onset {
            Some(w) => writeln!(f, "full subsidy onset: omega = {w}")?,
            None => writeln!(f, "full subsidy onset: not reached on the grid")?,
        }
        writeln!(
            f,
            "quote at omega = {:.6}: actuarially sound rate {:.1}% of instalment (l = {})",
            self.omega,
            self.sound_rate * 100.0,
            self.instalment
        )?;
        writeln!(f, "mean surplus E[S] = {:.2}/ha", self.mean_surplus)?;
        if self.quote.regime == Regime::NoSubsidy {
            write!(
                f,
                "no subsidy required: farmer rate {:.1}%, government rate 0.0%",
                self.quote.gamma * 100.0
            )
        } else {
            write!(
                f,
                "regime {}: farmer rate {:.1}%, government rate {:.1}%",
                self.quote.regime,
                self.quote.gamma * 100.0,
                self.quote.kappa * 100.0
            )
        }
    }
}

/// Write the premium/subsidy schedule and quote the declaration-derived (or
/// configured) drought probability.
pub fn cmd_rates(config: &RunConfig) -> Result<RatesSummary, CliError> {
    let prepared = prepare(config)?;
    let grid = config.grid.points();
    let template = policy_terms(&prepared, config, prepared.omega)?;
    let schedule = computation(rate_schedule(
        &prepared.panel,
        &prepared.prices,
        &prepared.theta,
        &template,
        &grid,
    ))?;
    let schedule_path = config.output.dir.join("schedule.csv");
    write_output(&schedule_path, &schedule.to_csv())?;

    let (_, stats) = stats_at_omega(&prepared, prepared.omega)?;
    let quote = computation(set_rates(stats.mean_surplus, &template))?;
    Ok(RatesSummary {
        schedule_path,
        grid_len: grid.len(),
        subsidy_onset: schedule.subsidy_onset,
        full_subsidy_onset: schedule.full_subsidy_onset,
        omega: prepared.omega,
        sound_rate: sound_rate(prepared.omega, config.policy.retained_fraction),
        quote,
        instalment: prepared.instalment,
        mean_surplus: stats.mean_surplus,
        dropped_crops: prepared.dropped_crops,
    })
}

// ── fund ──────────────────────────────────────────────────────────────────

#[derive(Debug)]
pub struct FundSummary {
    pub spec: FundSpec,
    pub path: PathBuf,
    pub omega: f64,
    pub mean_loss: f64,
    pub var_loss: f64,
}

impl fmt::Display for FundSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "pooled loss at omega = {:.6}: mean {:.4}/ha, variance {:.4}",
            self.omega, self.mean_loss, self.var_loss
        )?;
        writeln!(
            f,
            "fund at eta = {}: {:.2} over {:.2} ha (ruin probability {:.4})",
            self.spec.eta, self.spec.fund, self.spec.total_area, self.spec.ruin_prob
        )?;
        write!(f, "written to {}", self.path.display())
    }
}

/// Size the buffer fund at the configured risk appetite and write it as JSON.
pub fn cmd_fund(config: &RunConfig) -> Result<FundSummary, CliError> {
    let prepared = prepare(config)?;
    let (_, stats) = stats_at_omega(&prepared, prepared.omega)?;
    let total_area = prepared.panel.mean_total_area();
    let spec = computation(size_fund(&stats, total_area, config.policy.eta))?;
    let path = config.output.dir.join("fund.json");
    let json = serde_json::to_string_pretty(&spec).expect("fund serializes");
    write_output(&path, &format!("{json}\n"))?;
    Ok(FundSummary {
        spec,
        path,
        omega: prepared.omega,
        mean_loss: stats.mean_loss,
        var_loss: stats.var_loss,
    })
}

// ── simulate ──────────────────────────────────────────────────────────────

#[derive(Debug)]
pub struct SimulateSummary {
    pub report: SimReport,
    pub path: PathBuf,
    /// (label, closed-form value, |estimate − closed form| in stderr units).
    pub deltas: Vec<(&'static str, f64, f64)>,
    pub mean_outlay: f64,
    pub expected_outlay: f64,
}

impl fmt::Display for SimulateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "report written to {}", self.path.display())?;
        for (label, closed, delta) in &self.deltas {
            writeln!(f, "{label}: closed form {closed:.6}, |delta| = {delta:.2} stderr")?;
        }
        write!(
            f,
            "farmer mean outlay {:.4} vs closed-form l1 + gamma*l = {:.4}",
            self.mean_outlay, self.expected_outlay
        )
    }
}

fn stderr_units(estimate: crate::simulate::Estimate, closed: f64) -> f64 {
    let diff = (estimate.value - closed).abs();
    if estimate.stderr > 0.0 {
        diff / estimate.stderr
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Run the bootstrap oracle against the closed forms and write the merged
/// report as JSON.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateSummary, CliError> {
    let prepared = prepare(config)?;
    let (thresholds, stats) = stats_at_omega(&prepared, prepared.omega)?;
    let total_area = prepared.panel.mean_total_area();
    let fund = computation(size_fund(&stats, total_area, config.policy.eta))?;
    let terms = policy_terms(&prepared, config, prepared.omega)?;
    let quote = computation(set_rates(stats.mean_surplus, &terms))?;

    let mut report = computation(bootstrap_moments(
        &prepared.panel,
        &prepared.prices,
        &thresholds,
        &prepared.theta,
        &config.sim,
    ))?;
    report.est_ruin_freq = computation(ruin_frequency(
        &fund,
        &prepared.panel,
        &prepared.prices,
        &thresholds,
        &prepared.theta,
        &config.sim,
    ))?;
    let trajectory = computation(scheme_trajectory(
        &terms,
        &quote,
        &prepared.panel,
        &prepared.prices,
        &thresholds,
        &prepared.theta,
        &config.sim,
        Some(&prepared.log),
    ))?;
    report.farmer_ruin_freq = trajectory.farmer_ruin_freq;

    let path = config.output.dir.join("sim_report.json");
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_output(&path, &format!("{json}\n"))?;

    let deltas = vec![
        ("est_mean_loss", stats.mean_loss, stderr_units(report.est_mean_loss, stats.mean_loss)),
        (
            "est_var_loss",
            stats.var_loss_population,
            stderr_units(report.est_var_loss, stats.var_loss_population),
        ),
        (
            "est_mean_surplus",
            stats.mean_surplus,
            stderr_units(report.est_mean_surplus, stats.mean_surplus),
        ),
        ("est_ruin_freq", fund.ruin_prob, stderr_units(report.est_ruin_freq, fund.ruin_prob)),
    ];
    let expected_outlay = quote.avg_instalment_outlay + quote.gamma * terms.instalment;
    Ok(SimulateSummary {
        report,
        path,
        deltas,
        mean_outlay: trajectory.mean_outlay.value,
        expected_outlay,
    })
}
