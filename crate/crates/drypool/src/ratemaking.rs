//! Premium and subsidy rate setting: the actuarially sound rate, farmer
//! solvency residuals, the subsidy floor, the piecewise premium/subsidy
//! split, and rate schedules over a drought-probability grid.
//!
//! Rates are fractions of the loan instalment `l`; currency amounts are
//! recovered as rate × l.

use thiserror::Error;

use crate::dataset::{PriceSchedule, ThetaSeries, YieldPanel};
use crate::empirics::{StatError, ThresholdSet};
use crate::lossmodel::{cluster_stats, loss_gain_surplus, ModelError};

#[derive(Debug, Error)]
pub enum RateError {
    #[error("instalment must be > 0, got {0}")]
    NonPositiveInstalment(f64),
    #[error("{what} must lie in [0, 1], got {value}")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("subsidy share {supplied} is below the floor {floor} required for solvency")]
    NuBelowFloor { supplied: f64, floor: f64 },
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Contract parameters: instalment per hectare per season, retained fraction
/// p (the insured benefit level is 1−p), drought probability ω, and an
/// optional government-share override ν (defaults to the solvency floor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyTerms {
    pub instalment: f64,
    pub retained_fraction: f64,
    pub omega: f64,
    pub nu: Option<f64>,
}

impl PolicyTerms {
    pub fn new(
        instalment: f64,
        retained_fraction: f64,
        omega: f64,
        nu: Option<f64>,
    ) -> Result<Self, RateError> {
        if !(instalment > 0.0) || !instalment.is_finite() {
            return Err(RateError::NonPositiveInstalment(instalment));
        }
        for (what, value) in [("retained fraction", retained_fraction), ("omega", omega)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(RateError::OutOfRange { what, value });
            }
        }
        if let Some(nu) = nu {
            if !(0.0..=1.0).contains(&nu) {
                return Err(RateError::OutOfRange { what: "nu", value: nu });
            }
        }
        Ok(PolicyTerms { instalment, retained_fraction, omega, nu })
    }

    pub fn with_omega(self, omega: f64) -> Result<Self, RateError> {
        PolicyTerms::new(self.instalment, self.retained_fraction, omega, self.nu)
    }
}

/// Which band of expected surplus the quote fell in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// E[S_θ] < 0: government pays the whole sound rate.
    FullSubsidy,
    /// E[S_θ] ∈ [0, l): the rate is split by the subsidy share ν.
    PartialSubsidy,
    /// E[S_θ] ≥ l: the farmer can carry the whole sound rate.
    NoSubsidy,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::FullSubsidy => "full_subsidy",
            Regime::PartialSubsidy => "partial_subsidy",
            Regime::NoSubsidy => "no_subsidy",
        };
        write!(f, "{s}")
    }
}

/// A premium/subsidy split with its solvency diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuote {
    /// Farmer premium rate γ, fraction of the instalment.
    pub gamma: f64,
    /// Government subsidy rate κ; γ + κ = ω(1−p) always.
    pub kappa: f64,
    pub regime: Regime,
    /// Average instalment outlay per season l₁ = (1−ω)l + pωl.
    pub avg_instalment_outlay: f64,
    /// Residual without insurance, R = E[S_θ] − l.
    pub residual_uninsured: f64,
    /// Residual with insurance at γ, R₁ = E[S_θ] − l₁ − γl.
    pub residual_insured: f64,
}

/// The actuarially sound premium rate ω(1−p): expected payout as a fraction
/// of the instalment.
pub fn sound_rate(omega: f64, retained_fraction: f64) -> f64 {
    omega * (1.0 - retained_fraction)
}

/// Solvency residuals at a given premium rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// R = E[S_θ] − l: what is left after instalments without insurance.
    pub uninsured: f64,
    /// l₁ = (1−ω)l + pωl: the average amount actually paid towards
    /// instalments per season once declarations trigger the benefit.
    pub avg_instalment_outlay: f64,
    /// R₁ = E[S_θ] − (1−ω)l − pωl − γl: what is left after instalments and
    /// premiums with insurance.
    pub insured: f64,
}

pub fn residuals(
    mean_surplus: f64,
    terms: &PolicyTerms,
    gamma: f64,
) -> Result<Residuals, RateError> {
    let l = terms.instalment;
    if !(l > 0.0) {
        return Err(RateError::NonPositiveInstalment(l));
    }
    let (omega, p) = (terms.omega, terms.retained_fraction);
    let avg_instalment_outlay = (1.0 - omega) * l + p * omega * l;
    Ok(Residuals {
        uninsured: mean_surplus - l,
        avg_instalment_outlay,
        insured: mean_surplus - (1.0 - omega) * l - p * omega * l - gamma * l,
    })
}

/// The farmer stays solvent iff (γ + pω) < E[S_θ]/l − (1−ω), which is the
/// same statement as R₁ > 0.
pub fn solvency_condition(
    mean_surplus: f64,
    terms: &PolicyTerms,
    gamma: f64,
) -> Result<bool, RateError> {
    let l = terms.instalment;
    if !(l > 0.0) {
        return Err(RateError::NonPositiveInstalment(l));
    }
    Ok(gamma + terms.retained_fraction * terms.omega < mean_surplus / l - (1.0 - terms.omega))
}

/// Smallest government share that keeps the farmer solvent when
/// E[S_θ] ∈ [0, l): ν ≥ 1 − E[S_θ]/l, clamped to [0, 1].
pub fn nu_floor(mean_surplus: f64, instalment: f64) -> f64 {
    (1.0 - mean_surplus / instalment).clamp(0.0, 1.0)
}

/// Split the sound rate ω(1−p) between farmer (γ) and government (κ) by the
/// expected-surplus band:
///
/// - E[S_θ] < 0 → γ = 0, κ = ω(1−p)
/// - E[S_θ] ∈ [0, l) → γ = ω(1−p)(1−ν), κ = ω(1−p)ν with ν ≥ the floor
///   (defaults to the floor itself)
/// - E[S_θ] ≥ l → γ = ω(1−p), κ = 0
///
/// One side of the split is always computed as `base − other`, which keeps
/// γ + κ = ω(1−p) bit-exact (the subtraction is exact whenever the larger
/// share is at least half of the base).
pub fn set_rates(mean_surplus: f64, terms: &PolicyTerms) -> Result<RateQuote, RateError> {
    let l = terms.instalment;
    if !(l > 0.0) {
        return Err(RateError::NonPositiveInstalment(l));
    }
    let base = sound_rate(terms.omega, terms.retained_fraction);
    let (gamma, kappa, regime) = if mean_surplus < 0.0 {
        (0.0, base, Regime::FullSubsidy)
    } else if mean_surplus < l {
        let floor = nu_floor(mean_surplus, l);
        let nu = match terms.nu {
            Some(nu) if nu < floor => {
                return Err(RateError::NuBelowFloor { supplied: nu, floor })
            }
            Some(nu) => nu,
            None => floor,
        };
        if nu >= 0.5 {
            let kappa = base * nu;
            (base - kappa, kappa, Regime::PartialSubsidy)
        } else {
            let gamma = base * (1.0 - nu);
            (gamma, base - gamma, Regime::PartialSubsidy)
        }
    } else {
        (base, 0.0, Regime::NoSubsidy)
    };
    let r = residuals(mean_surplus, terms, gamma)?;
    Ok(RateQuote {
        gamma,
        kappa,
        regime,
        avg_instalment_outlay: r.avg_instalment_outlay,
        residual_uninsured: r.uninsured,
        residual_insured: r.insured,
    })
}

/// One grid point of a rate schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRow {
    pub omega: f64,
    pub mean_surplus: f64,
    /// `None` when every crop's loss variance is zero at this threshold.
    pub phi: Option<f64>,
    pub gamma: f64,
    pub kappa: f64,
    pub regime: Regime,
}

/// A premium/subsidy schedule over a drought-probability grid, with the two
/// regime-crossing frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSchedule {
    pub rows: Vec<ScheduleRow>,
    /// Smallest grid ω whose quote needs any subsidy (κ > 0).
    pub subsidy_onset: Option<f64>,
    /// Smallest grid ω whose quote is fully subsidised (γ = 0).
    pub full_subsidy_onset: Option<f64>,
}

impl RateSchedule {
    /// CSV with header `omega,mean_surplus,phi,gamma,kappa,regime`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,mean_surplus,phi,gamma,kappa,regime\n");
        for row in &self.rows {
            let phi = row.phi.map_or(String::new(), |p| p.to_string());
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.omega, row.mean_surplus, phi, row.gamma, row.kappa, row.regime
            ));
        }
        out
    }
}

/// Evaluate the premium/subsidy split across `omega_grid`: at each ω the
/// thresholds, losses and pooled surplus are recomputed and rated with the
/// default ν (the terms' ω and ν override are carried over from the
/// template).
pub fn rate_schedule(
    panel: &YieldPanel,
    prices: &PriceSchedule,
    theta: &ThetaSeries,
    terms_template: &PolicyTerms,
    omega_grid: &[f64],
) -> Result<RateSchedule, RateError> {
    let mut rows = Vec::with_capacity(omega_grid.len());
    for &omega in omega_grid {
        let thresholds = ThresholdSet::from_omega(panel, omega)?;
        let losses = loss_gain_surplus(panel, prices, &thresholds)?;
        let stats = cluster_stats(theta, &losses)?;
        let terms = terms_template.with_omega(omega)?;
        let quote = set_rates(stats.mean_surplus, &terms)?;
        rows.push(ScheduleRow {
            omega,
            mean_surplus: stats.mean_surplus,
            phi: stats.phi,
            gamma: quote.gamma,
            kappa: quote.kappa,
            regime: quote.regime,
        });
    }
    let subsidy_onset = rows.iter().find(|r| r.kappa > 0.0).map(|r| r.omega);
    let full_subsidy_onset = rows.iter().find(|r| r.gamma == 0.0).map(|r| r.omega);
    Ok(RateSchedule { rows, subsidy_onset, full_subsidy_onset })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{derive_theta, YieldPanel};
    use proptest::prelude::*;

    fn terms(l: f64, p: f64, omega: f64, nu: Option<f64>) -> PolicyTerms {
        PolicyTerms::new(l, p, omega, nu).unwrap()
    }

    #[test]
    fn sound_rate_reproduces_the_headline_number() {
        let rate = sound_rate(2.0 / 3.0, 0.15);
        assert!((rate - 0.567).abs() < 5e-4, "got {rate}");
        assert_eq!(sound_rate(0.0, 0.4), 0.0);
        assert_eq!(sound_rate(1.0, 1.0), 0.0);
    }

    #[test]
    fn average_outlay_hand_substitution() {
        let t = terms(1008.0, 0.15, 2.0 / 3.0, None);
        let r = residuals(500.0, &t, 0.0).unwrap();
        // (1/3)(1008) + 0.15(2/3)(1008) = 336 + 100.8
        assert!((r.avg_instalment_outlay - 436.80).abs() <= 1e-9);
        assert_eq!(r.uninsured, 500.0 - 1008.0);
    }

    #[test]
    fn residuals_collapse_at_the_fair_boundary() {
        // mean surplus = l with the fair rate: both residuals vanish
        let t = terms(1008.0, 0.15, 2.0 / 3.0, None);
        let gamma = sound_rate(t.omega, t.retained_fraction);
        let r = residuals(1008.0, &t, gamma).unwrap();
        assert_eq!(r.uninsured, 0.0);
        assert!(r.insured.abs() <= 1e-9 * 1008.0);

        // mean_surplus = 0, gamma = 0, omega = 1, p = 0 -> R1 = 0
        let t = terms(500.0, 0.0, 1.0, None);
        let r = residuals(0.0, &t, 0.0).unwrap();
        assert_eq!(r.insured, 0.0);
    }

    #[test]
    fn solvency_condition_matches_residual_sign() {
        let t = terms(1008.0, 0.15, 2.0 / 3.0, None);
        // healthy surplus, moderate premium: solvent both ways
        let gamma = 0.2;
        let r = residuals(900.0, &t, gamma).unwrap();
        assert!(r.insured > 0.0);
        assert!(solvency_condition(900.0, &t, gamma).unwrap());
        // boundary: R1 == 0 must be "not solvent"
        let m = t.instalment * ((1.0 - t.omega) + t.retained_fraction * t.omega + gamma);
        let r = residuals(m, &t, gamma).unwrap();
        assert!(r.insured.abs() < 1e-9);
        // enormous premium: insolvent
        assert!(!solvency_condition(900.0, &t, 100.0).unwrap());
    }

    #[test]
    fn nu_floor_endpoints() {
        assert_eq!(nu_floor(0.0, 1008.0), 1.0);
        assert_eq!(nu_floor(1008.0, 1008.0), 0.0);
        assert_eq!(nu_floor(504.0, 1008.0), 0.5);
        // clamped outside the band
        assert_eq!(nu_floor(-50.0, 1008.0), 1.0);
        assert_eq!(nu_floor(5000.0, 1008.0), 0.0);
    }

    #[test]
    fn rate_regimes_by_surplus_band() {
        let t = terms(1008.0, 0.15, 2.0 / 3.0, None);
        let base = sound_rate(2.0 / 3.0, 0.15);

        let q = set_rates(-10.0, &t).unwrap();
        assert_eq!((q.gamma, q.kappa, q.regime), (0.0, base, Regime::FullSubsidy));
        assert!((q.kappa - 0.5667).abs() < 5e-4);

        let q = set_rates(504.0, &t).unwrap();
        assert_eq!(q.regime, Regime::PartialSubsidy);
        // default nu = floor = 0.5: equal split
        assert!((q.gamma - 0.2833).abs() < 5e-4);
        assert!((q.kappa - 0.2833).abs() < 5e-4);

        let q = set_rates(2016.0, &t).unwrap();
        assert_eq!((q.gamma, q.kappa, q.regime), (base, 0.0, Regime::NoSubsidy));
        assert!((q.gamma - 0.5667).abs() < 5e-4);
    }

    #[test]
    fn supplied_nu_below_floor_is_rejected_citing_the_floor() {
        let t = terms(1008.0, 0.15, 2.0 / 3.0, Some(0.25));
        match set_rates(504.0, &t) {
            Err(RateError::NuBelowFloor { supplied, floor }) => {
                assert_eq!(supplied, 0.25);
                assert_eq!(floor, 0.5);
            }
            other => panic!("expected NuBelowFloor, got {other:?}"),
        }
        // at or above the floor it goes through
        let t = terms(1008.0, 0.15, 2.0 / 3.0, Some(0.75));
        let q = set_rates(504.0, &t).unwrap();
        assert_eq!(q.regime, Regime::PartialSubsidy);
        let base = sound_rate(2.0 / 3.0, 0.15);
        assert_eq!(q.gamma + q.kappa, base);
        assert!((q.kappa - base * 0.75).abs() <= 1e-15);
    }

    #[test]
    fn supplied_nu_is_ignored_outside_the_partial_band() {
        let t = terms(1008.0, 0.15, 2.0 / 3.0, Some(0.9));
        assert_eq!(set_rates(-1.0, &t).unwrap().regime, Regime::FullSubsidy);
        assert_eq!(set_rates(5000.0, &t).unwrap().regime, Regime::NoSubsidy);
    }

    #[test]
    fn gamma_plus_kappa_is_bit_exact_across_the_bands() {
        let cases = [
            (-250.0, None),
            (0.0, None),
            (137.0, None),
            (504.0, Some(0.5)),
            (504.0, Some(0.813)),
            (900.0, None),
            (1007.9999, None),
            (1008.0, None),
            (5000.0, Some(0.3)),
        ];
        for (m, nu) in cases {
            let t = terms(1008.0, 0.15, 2.0 / 3.0, nu);
            let q = set_rates(m, &t).unwrap();
            let base = sound_rate(t.omega, t.retained_fraction);
            assert_eq!(q.gamma + q.kappa, base, "surplus {m}, nu {nu:?}");
        }
    }

    #[test]
    fn schedule_is_continuous_at_both_regime_boundaries() {
        let l = 1008.0;
        let t = terms(l, 0.15, 2.0 / 3.0, None);
        let eps = 1e-9 * l;
        let base = sound_rate(t.omega, t.retained_fraction);

        // upper boundary: partial -> none
        let below = set_rates(l - eps, &t).unwrap().gamma;
        let at = set_rates(l, &t).unwrap().gamma;
        assert_eq!(at, base);
        assert!((below - at).abs() <= 1e-6, "gap {}", (below - at).abs());

        // lower boundary: full -> partial
        let above = set_rates(eps, &t).unwrap().gamma;
        let full = set_rates(-0.0_f64.min(-f64::MIN_POSITIVE), &t).unwrap().gamma;
        assert_eq!(full, 0.0);
        assert!((above - full).abs() <= 1e-6, "gap {}", (above - full).abs());
    }

    #[test]
    fn fair_rate_solvency_reduces_to_surplus_above_instalment() {
        let t = terms(1008.0, 0.15, 2.0 / 3.0, None);
        let fair = sound_rate(t.omega, t.retained_fraction);
        for m in [0.0, 500.0, 1007.0, 1009.0, 5000.0] {
            let solvent = solvency_condition(m, &t, fair).unwrap();
            assert_eq!(solvent, m > t.instalment, "m = {m}");
        }
    }

    fn schedule_fixture() -> (YieldPanel, PriceSchedule) {
        // two crops with enough spread for every band to appear
        let yields = vec![
            vec![60.0, 200.0, 140.0, 400.0, 90.0, 320.0, 30.0, 250.0],
            vec![80.0, 150.0, 110.0, 300.0, 70.0, 260.0, 50.0, 180.0],
        ];
        let areas = vec![vec![30.0; 8], vec![20.0; 8]];
        let panel = YieldPanel::new(
            vec!["a".into(), "b".into()],
            (2000..2008).collect(),
            yields,
            areas,
        )
        .unwrap();
        (panel, PriceSchedule::Constant(vec![2.0, 1.5]))
    }

    #[test]
    fn schedule_crossings_match_exhaustive_scan_oracle() {
        let (panel, prices) = schedule_fixture();
        let theta = derive_theta(&panel).unwrap();
        let template = terms(150.0, 0.15, 0.5, None);
        let grid: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
        let schedule = rate_schedule(&panel, &prices, &theta, &template, &grid).unwrap();

        // oracle: independently evaluate every grid point and scan
        let mut first_kappa = None;
        let mut first_zero_gamma = None;
        for &omega in &grid {
            let thresholds = ThresholdSet::from_omega(&panel, omega).unwrap();
            let losses = loss_gain_surplus(&panel, &prices, &thresholds).unwrap();
            let stats = cluster_stats(&theta, &losses).unwrap();
            let q = set_rates(stats.mean_surplus, &template.with_omega(omega).unwrap()).unwrap();
            if first_kappa.is_none() && q.kappa > 0.0 {
                first_kappa = Some(omega);
            }
            if first_zero_gamma.is_none() && q.gamma == 0.0 {
                first_zero_gamma = Some(omega);
            }
        }
        assert_eq!(schedule.subsidy_onset, first_kappa);
        assert_eq!(schedule.full_subsidy_onset, first_zero_gamma);
        assert!(schedule.subsidy_onset.is_some());
    }

    #[test]
    fn always_profitable_panel_needs_no_subsidy() {
        // yields far above every threshold the grid can select: each grid
        // point keeps the lowest yield as the threshold, losses stay zero and
        // the surplus clears the instalment, so every quote is NoSubsidy
        let yields = vec![vec![900.0, 1100.0, 950.0, 1200.0], vec![800.0, 1000.0, 900.0, 1050.0]];
        let panel = YieldPanel::new(
            vec!["a".into(), "b".into()],
            (2000..2004).collect(),
            yields,
            vec![vec![10.0; 4]; 2],
        )
        .unwrap();
        let prices = PriceSchedule::Constant(vec![5.0, 5.0]);
        let theta = derive_theta(&panel).unwrap();
        let template = terms(100.0, 0.15, 0.5, None);
        let grid = [0.05, 0.1, 0.15, 0.2, 0.25];
        let schedule = rate_schedule(&panel, &prices, &theta, &template, &grid).unwrap();
        assert!(schedule.rows.iter().all(|r| r.kappa == 0.0));
        assert_eq!(schedule.subsidy_onset, None);
    }

    #[test]
    fn zero_yield_panel_gets_full_subsidy_rates_everywhere() {
        let panel = YieldPanel::new(
            vec!["a".into()],
            (2000..2004).collect(),
            vec![vec![0.0; 4]],
            vec![vec![10.0; 4]],
        )
        .unwrap();
        let prices = PriceSchedule::Constant(vec![5.0]);
        let theta = derive_theta(&panel).unwrap();
        let template = terms(100.0, 0.15, 0.5, None);
        let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
        let schedule = rate_schedule(&panel, &prices, &theta, &template, &grid).unwrap();
        for row in &schedule.rows {
            assert_eq!(row.gamma, 0.0, "omega {}", row.omega);
            assert_eq!(row.kappa, sound_rate(row.omega, 0.15), "omega {}", row.omega);
        }
    }

    #[test]
    fn schedule_csv_has_the_documented_header() {
        let (panel, prices) = schedule_fixture();
        let theta = derive_theta(&panel).unwrap();
        let template = terms(150.0, 0.15, 0.5, None);
        let schedule = rate_schedule(&panel, &prices, &theta, &template, &[0.25, 0.5]).unwrap();
        let csv = schedule.to_csv();
        assert!(csv.starts_with("omega,mean_surplus,phi,gamma,kappa,regime\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn rate_identity_holds_for_random_tuples(
            omega in 0.0f64..1.0,
            p in 0.0f64..1.0,
            m in -2000.0f64..4000.0,
            l in 1.0f64..2000.0,
            nu_above_floor in 0.0f64..1.0,
        ) {
            // nu drawn at or above the floor so the partial band accepts it
            let floor = nu_floor(m, l);
            let nu = floor + nu_above_floor * (1.0 - floor);
            let t = PolicyTerms::new(l, p, omega, Some(nu)).unwrap();
            let q = set_rates(m, &t).unwrap();
            prop_assert_eq!(q.gamma + q.kappa, sound_rate(omega, p));
            prop_assert!(q.gamma >= 0.0 && q.kappa >= 0.0);
        }

        #[test]
        fn solvency_condition_equals_insured_residual_sign(
            omega in 0.0f64..1.0,
            p in 0.0f64..1.0,
            m in -2000.0f64..4000.0,
            l in 1.0f64..2000.0,
            gamma in 0.0f64..1.0,
        ) {
            let t = PolicyTerms::new(l, p, omega, None).unwrap();
            let lhs = solvency_condition(m, &t, gamma).unwrap();
            let rhs = residuals(m, &t, gamma).unwrap().insured > 0.0;
            // the two routes may disagree only within float noise of the
            // boundary; skip that sliver
            let r1 = residuals(m, &t, gamma).unwrap().insured;
            prop_assume!(r1.abs() > 1e-9 * l);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn gamma_monotone_in_surplus_at_the_floor(
            omega in 0.01f64..1.0,
            p in 0.0f64..0.99,
            l in 1.0f64..2000.0,
            m1 in -1000.0f64..3000.0,
            m2 in -1000.0f64..3000.0,
        ) {
            let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            let t = PolicyTerms::new(l, p, omega, None).unwrap();
            let q_lo = set_rates(lo, &t).unwrap();
            let q_hi = set_rates(hi, &t).unwrap();
            prop_assert!(q_lo.gamma <= q_hi.gamma + 1e-12);
            prop_assert!(q_lo.kappa >= q_hi.kappa - 1e-12);
        }
    }
}
