//! Cross-implementation check: the bundled synthetic panel was generated
//! together with reference statistics computed by an independent NumPy
//! implementation of the same definitions. The engine must reproduce them.

use drypool::dataset::{derive_theta, load_declarations, load_panel, load_prices};
use drypool::empirics::{coincidence, crop_omega, ThresholdSet};
use drypool::lossmodel::{cluster_stats, loss_gain_surplus};

fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"))
}

fn close(got: f64, want: f64, what: &str) {
    let tol = 1e-9 * want.abs().max(1.0);
    assert!((got - want).abs() <= tol, "{what}: got {got}, reference {want}");
}

#[test]
fn fixture_statistics_match_independent_reference() {
    let (panel, warnings) = load_panel(&fixture("yields.csv"), &fixture("areas.csv")).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(panel.crop_count(), 3);
    assert_eq!(panel.year_count(), 24);
    assert_eq!(panel.crops(), &["maize", "sorghum", "cowpeas"]);

    let prices = load_prices(&fixture("prices.csv"), &panel).unwrap();
    let log = load_declarations(&fixture("declarations.csv"), &panel).unwrap();
    assert_eq!(log.len(), 16);
    assert_eq!(log.omega_hat(), 2.0 / 3.0);

    let omega = 2.0 / 3.0;
    let thresholds = ThresholdSet::from_omega(&panel, omega).unwrap();
    assert_eq!(thresholds.mu_c(), &[1235.9, 1007.8, 492.5]);

    let realized = crop_omega(&panel, &thresholds);
    for (j, &w) in realized.iter().enumerate() {
        close(w, 2.0 / 3.0, &format!("omega_j[{j}]"));
    }

    let psi = coincidence(&panel, &thresholds, &log).unwrap();
    assert_eq!(psi, vec![0.9375, 0.9375, 0.8125]);

    let theta = derive_theta(&panel).unwrap();
    let reference_alphas = [0.5350342429422077, 0.3435003079249934, 0.12146544913279889];
    for (j, &a) in theta.alphas().iter().enumerate() {
        close(a, reference_alphas[j], &format!("alpha[{j}]"));
    }

    let losses = loss_gain_surplus(&panel, &prices, &thresholds).unwrap();
    let stats = cluster_stats(&theta, &losses).unwrap();
    close(stats.mean_loss, 573.7214113803676, "mean pooled loss");
    close(stats.var_loss_population, 401342.19169752026, "population pooled variance");
    close(stats.var_loss, 418791.8522061081, "unbiased pooled variance");
    close(stats.mean_surplus, -462.5385166163431, "mean pooled surplus");
    close(stats.weighted_avg_var, 495468.14013706316, "weighted average variance");
    close(stats.phi.unwrap(), 0.8452447660716513, "coefficient of effectiveness");
    close(panel.mean_total_area(), 6304.333333333333, "mean total area");
}
