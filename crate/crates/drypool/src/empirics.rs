//! Empirical distribution machinery: step-function CDFs, quantile-based
//! drought thresholds, declaration coincidence, and sample moments.

use thiserror::Error;

use crate::dataset::{DeclarationLog, YieldPanel};

#[derive(Debug, Error)]
pub enum StatError {
    #[error("empty sample")]
    EmptySample,
    #[error("probability must be in (0, 1], got {0}")]
    BadProbability(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} observations, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("no drought declarations on record; coincidence is undefined")]
    EmptyDeclarations,
    #[error("threshold for crop index {crop} must be finite and >= 0, got {value}")]
    BadThreshold { crop: usize, value: f64 },
    #[error("expected {expected} thresholds, got {got}")]
    ThresholdCount { expected: usize, got: usize },
}

/// Right-continuous empirical CDF: the fraction of sample values <= x.
pub fn empirical_cdf(sample: &[f64], x: f64) -> Result<f64, StatError> {
    if sample.is_empty() {
        return Err(StatError::EmptySample);
    }
    let count = sample.iter().filter(|&&v| v <= x).count();
    Ok(count as f64 / sample.len() as f64)
}

/// Smallest sample value whose empirical CDF reaches `omega`: the k-th order
/// statistic with k = ceil(omega * n), so `empirical_cdf(sample, result) >= omega`
/// always holds, with equality on the grid {1/n, ..., 1} for distinct values.
pub fn threshold_for_omega(sample: &[f64], omega: f64) -> Result<f64, StatError> {
    if sample.is_empty() {
        return Err(StatError::EmptySample);
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(StatError::BadProbability(omega));
    }
    let n = sample.len();
    let nf = n as f64;
    // float-robust ceil: land on the smallest k with k/n >= omega, comparing
    // with the same division the ECDF uses
    let mut k = (omega * nf).ceil() as usize;
    k = k.clamp(1, n);
    while k > 1 && (k - 1) as f64 / nf >= omega {
        k -= 1;
    }
    while (k as f64) / nf < omega && k < n {
        k += 1;
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite sample values"));
    Ok(sorted[k - 1])
}

/// How thresholds were chosen: matched to a target declaration frequency, or
/// supplied externally (e.g. from per-crop profitability levels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaTarget {
    Quantile(f64),
    External,
}

/// Per-crop drought thresholds with their realized frequencies, and (when a
/// declaration log has been folded in) the coincidence proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    mu_c: Vec<f64>,
    omega_target: OmegaTarget,
    omega_j: Vec<f64>,
    psi_true: Option<Vec<f64>>,
    psi_false: Option<Vec<f64>>,
}

impl ThresholdSet {
    /// Thresholds at the `omega`-quantile of each crop's yield distribution.
    pub fn from_omega(panel: &YieldPanel, omega: f64) -> Result<Self, StatError> {
        let mu_c = (0..panel.crop_count())
            .map(|j| threshold_for_omega(panel.yields(j), omega))
            .collect::<Result<Vec<_>, _>>()?;
        let omega_j = realized_frequencies(panel, &mu_c);
        Ok(ThresholdSet {
            mu_c,
            omega_target: OmegaTarget::Quantile(omega),
            omega_j,
            psi_true: None,
            psi_false: None,
        })
    }

    /// Externally supplied thresholds (kg/ha), one per panel crop.
    pub fn external(panel: &YieldPanel, mu_c: Vec<f64>) -> Result<Self, StatError> {
        if mu_c.len() != panel.crop_count() {
            return Err(StatError::ThresholdCount {
                expected: panel.crop_count(),
                got: mu_c.len(),
            });
        }
        for (crop, &value) in mu_c.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(StatError::BadThreshold { crop, value });
            }
        }
        let omega_j = realized_frequencies(panel, &mu_c);
        Ok(ThresholdSet {
            mu_c,
            omega_target: OmegaTarget::External,
            omega_j,
            psi_true: None,
            psi_false: None,
        })
    }

    /// Fold in declaration coincidence; ψ_false is 1 − ψ_true by definition.
    pub fn with_coincidence(
        mut self,
        panel: &YieldPanel,
        log: &DeclarationLog,
    ) -> Result<Self, StatError> {
        let psi = coincidence(panel, &self, log)?;
        self.psi_false = Some(psi.iter().map(|&p| 1.0 - p).collect());
        self.psi_true = Some(psi);
        Ok(self)
    }

    pub fn mu_c(&self) -> &[f64] {
        &self.mu_c
    }

    pub fn mu_c_of(&self, crop: usize) -> f64 {
        self.mu_c[crop]
    }

    pub fn omega_target(&self) -> OmegaTarget {
        self.omega_target
    }

    /// Realized per-crop drought frequency ω_j = F_j(μc).
    pub fn omega_j(&self) -> &[f64] {
        &self.omega_j
    }

    pub fn psi_true(&self) -> Option<&[f64]> {
        self.psi_true.as_deref()
    }

    pub fn psi_false(&self) -> Option<&[f64]> {
        self.psi_false.as_deref()
    }

    pub fn crop_count(&self) -> usize {
        self.mu_c.len()
    }

    pub fn retain_crops(&self, keep: &[bool]) -> ThresholdSet {
        let idx: Vec<usize> = (0..self.crop_count()).filter(|&j| keep[j]).collect();
        let pick = |v: &Vec<f64>| idx.iter().map(|&j| v[j]).collect::<Vec<f64>>();
        ThresholdSet {
            mu_c: pick(&self.mu_c),
            omega_target: self.omega_target,
            omega_j: pick(&self.omega_j),
            psi_true: self.psi_true.as_ref().map(pick),
            psi_false: self.psi_false.as_ref().map(pick),
        }
    }
}

fn realized_frequencies(panel: &YieldPanel, mu_c: &[f64]) -> Vec<f64> {
    (0..panel.crop_count())
        .map(|j| {
            let ys = panel.yields(j);
            ys.iter().filter(|&&y| y <= mu_c[j]).count() as f64 / ys.len() as f64
        })
        .collect()
}

/// Per-crop proportion of declared years whose yield fell strictly below the
/// crop's threshold. The step function is strict — a yield exactly at the
/// threshold produces zero loss, so it does not count as a coincident drought.
pub fn coincidence(
    panel: &YieldPanel,
    thresholds: &ThresholdSet,
    log: &DeclarationLog,
) -> Result<Vec<f64>, StatError> {
    if log.is_empty() {
        return Err(StatError::EmptyDeclarations);
    }
    let m = log.len() as f64;
    Ok((0..panel.crop_count())
        .map(|j| {
            let hits = log
                .declared_years()
                .iter()
                .filter(|&&year| {
                    let t = panel.year_index(year).expect("declared year in panel");
                    thresholds.mu_c_of(j) - panel.yield_at(j, t) > 0.0
                })
                .count();
            hits as f64 / m
        })
        .collect())
}

/// Realized per-crop drought frequency ω_j = F_j(μc), the empirical CDF of
/// each crop's yields at its threshold.
pub fn crop_omega(panel: &YieldPanel, thresholds: &ThresholdSet) -> Vec<f64> {
    realized_frequencies(panel, thresholds.mu_c())
}

/// Arithmetic mean.
pub fn sample_mean(series: &[f64]) -> Result<f64, StatError> {
    if series.is_empty() {
        return Err(StatError::EmptySample);
    }
    Ok(series.iter().sum::<f64>() / series.len() as f64)
}

/// Mean and unbiased (n−1) variance. A constant series has variance exactly 0.
pub fn sample_moments(series: &[f64]) -> Result<(f64, f64), StatError> {
    let var = variance_with_divisor(series, series.len().saturating_sub(1))?;
    Ok((sample_mean(series)?, var))
}

/// Population (divisor n) variance; exact moment identities hold with it.
pub fn population_variance(series: &[f64]) -> Result<f64, StatError> {
    variance_with_divisor(series, series.len())
}

fn variance_with_divisor(series: &[f64], divisor: usize) -> Result<f64, StatError> {
    if series.len() < 2 {
        return Err(StatError::TooShort { need: 2, got: series.len() });
    }
    if series.iter().all(|&v| v == series[0]) {
        return Ok(0.0);
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let ss: f64 = series.iter().map(|&v| (v - mean) * (v - mean)).sum();
    Ok(ss / divisor as f64)
}

/// Unbiased (n−1) sample covariance. Exactly 0 when either input is constant.
pub fn sample_cov(x: &[f64], y: &[f64]) -> Result<f64, StatError> {
    covariance_with_divisor(x, y, x.len().saturating_sub(1))
}

/// Population (divisor n) covariance, the form the algebraic variance
/// decomposition identities require.
pub fn population_cov(x: &[f64], y: &[f64]) -> Result<f64, StatError> {
    covariance_with_divisor(x, y, x.len())
}

fn covariance_with_divisor(x: &[f64], y: &[f64], divisor: usize) -> Result<f64, StatError> {
    if x.len() != y.len() {
        return Err(StatError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(StatError::TooShort { need: 2, got: x.len() });
    }
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Ok(0.0);
    }
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    Ok(ss / divisor as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::YieldPanel;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn ecdf_counts_weakly() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_cdf(&s, 2.0).unwrap(), 0.5);
        assert_eq!(empirical_cdf(&s, 0.5).unwrap(), 0.0);
        assert_eq!(empirical_cdf(&s, 4.0).unwrap(), 1.0);
        assert_eq!(empirical_cdf(&s, 100.0).unwrap(), 1.0);
        assert!(matches!(empirical_cdf(&[], 0.0), Err(StatError::EmptySample)));
    }

    #[test]
    fn ecdf_matches_exhaustive_count_at_median() {
        let s = [13.0, 2.0, 8.0, 5.0, 21.0, 8.0, 1.0];
        let x = 8.0;
        let brute = s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        assert_eq!(empirical_cdf(&s, x).unwrap(), brute);
    }

    #[test]
    fn threshold_order_statistics() {
        let s = [10.0, 20.0, 30.0];
        assert_eq!(threshold_for_omega(&s, 1.0 / 3.0).unwrap(), 10.0);
        assert_eq!(threshold_for_omega(&s, 1.0).unwrap(), 30.0);
        assert!(matches!(threshold_for_omega(&s, 0.0), Err(StatError::BadProbability(_))));
        assert!(matches!(threshold_for_omega(&s, 1.1), Err(StatError::BadProbability(_))));
    }

    #[test]
    fn threshold_two_thirds_verified_by_scanning_candidates() {
        let s = [10.0, 20.0, 30.0];
        let omega = 2.0 / 3.0;
        // oracle: smallest sample value whose ECDF reaches omega
        let mut sorted = s;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let oracle = *sorted
            .iter()
            .find(|&&candidate| empirical_cdf(&s, candidate).unwrap() >= omega)
            .unwrap();
        assert_eq!(oracle, 20.0);
        assert_eq!(threshold_for_omega(&s, omega).unwrap(), oracle);
    }

    fn tiny_panel(yields: Vec<Vec<f64>>, years: Vec<i32>) -> YieldPanel {
        let j = yields.len();
        let n = years.len();
        YieldPanel::new(
            (0..j).map(|i| format!("c{i}")).collect(),
            years,
            yields,
            vec![vec![1.0; n]; j],
        )
        .unwrap()
    }

    #[test]
    fn coincidence_all_or_nothing() {
        let panel = tiny_panel(vec![vec![5.0, 6.0, 7.0, 8.0]], vec![2000, 2001, 2002, 2003]);
        let log = DeclarationLog::new(BTreeSet::from([2000, 2002]), &panel).unwrap();
        let high = ThresholdSet::external(&panel, vec![100.0]).unwrap();
        assert_eq!(coincidence(&panel, &high, &log).unwrap(), vec![1.0]);
        let low = ThresholdSet::external(&panel, vec![1.0]).unwrap();
        assert_eq!(coincidence(&panel, &low, &log).unwrap(), vec![0.0]);
    }

    #[test]
    fn coincidence_mixed_fixture_matches_tally_oracle() {
        let yields = vec![
            vec![3.0, 9.0, 4.0, 8.0, 2.0, 7.0],
            vec![5.0, 5.0, 6.0, 1.0, 9.0, 2.0],
        ];
        let years = vec![2000, 2001, 2002, 2003, 2004, 2005];
        let panel = tiny_panel(yields.clone(), years.clone());
        let declared = BTreeSet::from([2000, 2001, 2003, 2005]);
        let log = DeclarationLog::new(declared.clone(), &panel).unwrap();
        let mu = vec![5.0, 5.0];
        let thresholds = ThresholdSet::external(&panel, mu.clone()).unwrap();
        let psi = coincidence(&panel, &thresholds, &log).unwrap();
        // brute-force per-year tally
        for j in 0..2 {
            let mut hits = 0;
            for (t, &year) in years.iter().enumerate() {
                if declared.contains(&year) && yields[j][t] < mu[j] {
                    hits += 1;
                }
            }
            assert_eq!(psi[j], hits as f64 / declared.len() as f64, "crop {j}");
        }
        // crop 0: only year 2000 (3 < 5) hits; crop 1: 2003 and 2005 hit,
        // the two years at exactly 5.0 do not (strict step function)
        assert_eq!(psi, vec![0.25, 0.5]);
    }

    #[test]
    fn yield_exactly_at_threshold_is_not_coincident() {
        let panel = tiny_panel(vec![vec![5.0, 4.0]], vec![2000, 2001]);
        let log = DeclarationLog::new(BTreeSet::from([2000]), &panel).unwrap();
        let thresholds = ThresholdSet::external(&panel, vec![5.0]).unwrap();
        assert_eq!(coincidence(&panel, &thresholds, &log).unwrap(), vec![0.0]);
    }

    #[test]
    fn empty_declarations_are_an_error() {
        let panel = tiny_panel(vec![vec![5.0, 4.0]], vec![2000, 2001]);
        let log = DeclarationLog::new(BTreeSet::new(), &panel).unwrap();
        let thresholds = ThresholdSet::external(&panel, vec![5.0]).unwrap();
        assert!(matches!(
            coincidence(&panel, &thresholds, &log),
            Err(StatError::EmptyDeclarations)
        ));
    }

    #[test]
    fn psi_true_plus_psi_false_is_exactly_one() {
        let yields = vec![vec![3.0, 9.0, 4.0, 8.0, 2.0, 7.0, 1.0], vec![2.0; 7]];
        let panel = tiny_panel(yields, vec![2000, 2001, 2002, 2003, 2004, 2005, 2006]);
        let log = DeclarationLog::new(BTreeSet::from([2000, 2002, 2004]), &panel).unwrap();
        let t = ThresholdSet::external(&panel, vec![4.5, 1.0])
            .unwrap()
            .with_coincidence(&panel, &log)
            .unwrap();
        let (pt, pf) = (t.psi_true().unwrap(), t.psi_false().unwrap());
        for j in 0..2 {
            assert_eq!(pt[j] + pf[j], 1.0, "crop {j}");
        }
    }

    #[test]
    fn crop_omega_boundaries() {
        let panel = tiny_panel(vec![vec![5.0, 6.0, 7.0]], vec![2000, 2001, 2002]);
        let zero = ThresholdSet::external(&panel, vec![0.0]).unwrap();
        assert_eq!(crop_omega(&panel, &zero), vec![0.0]);
        let high = ThresholdSet::external(&panel, vec![100.0]).unwrap();
        assert_eq!(crop_omega(&panel, &high), vec![1.0]);
    }

    #[test]
    fn crop_omega_from_quantile_thresholds_is_tight() {
        // distinct yields: omega_j >= omega and omega_j - omega < 1/n,
        // verified by enumerating the ECDF at every sample point
        let yields = vec![vec![210.0, 35.0, 170.0, 90.0, 60.0, 141.0, 8.0, 199.0]];
        let panel = tiny_panel(yields.clone(), (2000..2008).collect());
        let n = 8.0;
        for k in 1..=8 {
            let omega = k as f64 / n;
            let t = ThresholdSet::from_omega(&panel, omega).unwrap();
            let w = crop_omega(&panel, &t)[0];
            assert!(w >= omega, "omega_j {w} < target {omega}");
            assert!(w - omega < 1.0 / n, "slack too large at {omega}");
            // enumeration oracle: no sample value below the threshold reaches omega
            for &y in &yields[0] {
                if y < t.mu_c_of(0) {
                    assert!(empirical_cdf(&yields[0], y).unwrap() < omega);
                }
            }
        }
    }

    #[test]
    fn moments_trivial_cases() {
        let (m, v) = sample_moments(&[3.5, 3.5, 3.5]).unwrap();
        assert_eq!(m, 3.5);
        assert_eq!(v, 0.0);
        let (m, v) = sample_moments(&[0.0, 2.0]).unwrap();
        assert_eq!(m, 1.0);
        assert_eq!(v, 2.0);
        assert!(matches!(sample_moments(&[1.0]), Err(StatError::TooShort { .. })));
    }

    #[test]
    fn moments_match_two_pass_oracle() {
        let xs = [12.1, 7.3, 9.8, 15.6, 11.0, 8.4, 13.9];
        let (m, v) = sample_moments(&xs).unwrap();
        let brute_mean = xs.iter().sum::<f64>() / 7.0;
        let brute_var = xs.iter().map(|&x| (x - brute_mean).powi(2)).sum::<f64>() / 6.0;
        assert!((m - brute_mean).abs() < 1e-12);
        assert!((v - brute_var).abs() < 1e-12);
    }

    #[test]
    fn covariance_cases() {
        let x = [1.0, 4.0, 2.0, 8.0];
        assert_eq!(sample_cov(&x, &x).unwrap(), sample_moments(&x).unwrap().1);
        assert_eq!(sample_cov(&x, &[5.0; 4]).unwrap(), 0.0);
        let y = [2.0, 1.0, 7.0, 3.0];
        let mx = x.iter().sum::<f64>() / 4.0;
        let my = y.iter().sum::<f64>() / 4.0;
        let brute =
            x.iter().zip(&y).map(|(&a, &b)| (a - mx) * (b - my)).sum::<f64>() / 3.0;
        assert!((sample_cov(&x, &y).unwrap() - brute).abs() < 1e-12);
        assert!(matches!(
            sample_cov(&x, &[1.0, 2.0]),
            Err(StatError::LengthMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn quantile_cdf_round_trip_on_grid(
            values in proptest::collection::vec(0.0f64..1e4, 2..60),
        ) {
            let n = values.len();
            for k in 1..=n {
                let omega = k as f64 / n as f64;
                let thr = threshold_for_omega(&values, omega).unwrap();
                let reached = empirical_cdf(&values, thr).unwrap();
                prop_assert!(reached >= omega);
                // distinct values: exact equality on the grid
                let mut sorted = values.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                sorted.dedup();
                if sorted.len() == n {
                    prop_assert_eq!(reached, omega);
                }
            }
        }

        #[test]
        fn threshold_is_monotone_in_omega(
            values in proptest::collection::vec(0.0f64..1e4, 2..60),
            lo in 0.01f64..1.0,
            hi in 0.01f64..1.0,
        ) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let a = threshold_for_omega(&values, lo).unwrap();
            let b = threshold_for_omega(&values, hi).unwrap();
            prop_assert!(a <= b);
        }

        #[test]
        fn coincidence_and_crop_omega_ignore_year_order(
            data in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0, any::<bool>()), 3..20),
            seed in any::<u64>(),
        ) {
            // same multiset of (yield_a, yield_b, declared) triples in two
            // different temporal arrangements must give identical statistics
            let n = data.len();
            let years: Vec<i32> = (0..n as i32).map(|i| 2000 + i).collect();
            let mut permuted = data.clone();
            // deterministic shuffle
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let pick = (state >> 33) as usize % (i + 1);
                permuted.swap(i, pick);
            }
            let build = |rows: &[(f64, f64, bool)]| {
                let panel = YieldPanel::new(
                    vec!["a".into(), "b".into()],
                    years.clone(),
                    vec![
                        rows.iter().map(|r| r.0).collect(),
                        rows.iter().map(|r| r.1).collect(),
                    ],
                    vec![vec![1.0; n]; 2],
                ).unwrap();
                let declared: BTreeSet<i32> = rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.2)
                    .map(|(i, _)| years[i])
                    .collect();
                (panel, declared)
            };
            let (p1, d1) = build(&data);
            let (p2, d2) = build(&permuted);
            let t1 = ThresholdSet::external(&p1, vec![50.0, 25.0]).unwrap();
            let t2 = ThresholdSet::external(&p2, vec![50.0, 25.0]).unwrap();
            prop_assert_eq!(crop_omega(&p1, &t1), crop_omega(&p2, &t2));
            if !d1.is_empty() {
                let l1 = DeclarationLog::new(d1, &p1).unwrap();
                let l2 = DeclarationLog::new(d2, &p2).unwrap();
                prop_assert_eq!(
                    coincidence(&p1, &t1, &l1).unwrap(),
                    coincidence(&p2, &t2, &l2).unwrap()
                );
            }
        }
    }
}
