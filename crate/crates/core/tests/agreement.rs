//! Simulation against quadrature at moderate trial counts.

use std::f64::consts::FRAC_PI_3;

use relaysec::analytic::{p_direct_colluding, p_selected_relay_colluding_lower, SystemParams};
use relaysec::geometry::PolarPoint;
use relaysec::geometry::SimulationWindow;
use relaysec::montecarlo::{default_window, simulate, EavesdropperModel, Scenario, TrialConfig, DEFAULT_TAIL_TOL};
use relaysec::quadrature::{
    p_direct_noncolluding, p_relay_noncolluding_exact, p_selected_relay_noncolluding_lower, QuadratureConfig,
};

const TRIALS: u64 = 200_000;

fn config(p: &SystemParams, model: EavesdropperModel, scenario: Scenario, seed: u64) -> TrialConfig {
    let window = default_window(p, &scenario, 1e-4).unwrap();
    TrialConfig::new(p, TRIALS, seed, model, scenario)
        .unwrap()
        .with_window(window)
}

fn assert_close(mc: f64, se: f64, reference: f64) {
    assert!((mc - reference).abs() < 4.0 * se, "mc {mc} vs {reference} (se {se})");
}

#[test]
fn noncolluding_direct() {
    let p = SystemParams::new(4.0, 1e-4, 1e-3, 20.0).unwrap();
    let exact = p_direct_noncolluding(&p, &QuadratureConfig::default()).unwrap();
    let est = simulate(&p, &config(&p, EavesdropperModel::NonColluding, Scenario::Direct, 1)).unwrap();
    assert_close(est.p_hat, est.std_error(), exact);
}

#[test]
fn noncolluding_fixed_relay() {
    let p = SystemParams::new(4.0, 1e-4, 1e-3, 20.0).unwrap();
    let relay = PolarPoint::new(5.0, FRAC_PI_3).unwrap();
    let exact = p_relay_noncolluding_exact(relay, &p, &QuadratureConfig::default()).unwrap();
    let est = simulate(
        &p,
        &config(&p, EavesdropperModel::NonColluding, Scenario::FixedRelay(relay), 2),
    )
    .unwrap();
    assert_close(est.p_hat, est.std_error(), exact);
}

#[test]
fn fixed_relay_asymmetry_is_real() {
    // swapping the hop lengths changes the exact value, and simulation agrees
    let p = SystemParams::new(4.0, 3e-4, 1e-3, 20.0).unwrap();
    let cfg = QuadratureConfig::default();
    for theta in [0.3, std::f64::consts::PI - 0.3] {
        let relay = PolarPoint::new(6.0, theta).unwrap();
        let exact = relaysec::quadrature::p_relay_colluding_exact(relay, &p, &cfg).unwrap();
        let est = simulate(
            &p,
            &config(&p, EavesdropperModel::Colluding, Scenario::FixedRelay(relay), 3),
        )
        .unwrap();
        assert_close(est.p_hat, est.std_error(), exact);
    }
}

#[test]
fn selected_relay_bounds_sit_below_simulation() {
    let p = SystemParams::new(4.0, 1e-5, 1e-3, 20.0).unwrap();
    let col = simulate(
        &p,
        &config(&p, EavesdropperModel::Colluding, Scenario::SelectedRelay, 4),
    )
    .unwrap();
    let nc = simulate(
        &p,
        &config(&p, EavesdropperModel::NonColluding, Scenario::SelectedRelay, 4),
    )
    .unwrap();
    let col_bound = p_selected_relay_colluding_lower(&p);
    let nc_bound = p_selected_relay_noncolluding_lower(&p, &QuadratureConfig::default()).unwrap();
    assert!(col_bound <= col.p_hat + 3.0 * col.std_error());
    assert!(nc_bound <= nc.p_hat + 3.0 * nc.std_error());
    assert!(col.successes <= nc.successes);
}

#[test]
fn wilson_coverage_over_repeated_runs() {
    let p = SystemParams::new(4.0, 1e-5, 1e-3, 20.0).unwrap();
    let exact = p_direct_colluding(&p);
    let runs = 400;
    let template = config(&p, EavesdropperModel::Colluding, Scenario::Direct, 0);
    let covered = (0..runs)
        .filter(|&i| {
            let c = TrialConfig {
                trials: 5_000,
                seed: 10_000 + i,
                ..template
            };
            simulate(&p, &c).unwrap().contains(exact)
        })
        .count();
    assert!(covered as f64 >= 0.93 * runs as f64, "{covered}/{runs}");
}

#[test]
fn doubling_the_window_changes_little() {
    // the difference is measured at 4e5 trials and compared with the
    // standard error at 1e5 trials
    let p = SystemParams::new(4.0, 1e-4, 1e-3, 20.0).unwrap();
    let midpoint = PolarPoint::new(0.0, 0.0).unwrap();
    for scenario in [Scenario::Direct, Scenario::FixedRelay(midpoint)] {
        let base = TrialConfig::new(&p, 400_000, 5, EavesdropperModel::Colluding, scenario).unwrap();
        let w = default_window(&p, &scenario, DEFAULT_TAIL_TOL).unwrap();
        let doubled = base.with_window(SimulationWindow::new(w.center, 2.0 * w.radius).unwrap());
        let a = simulate(&p, &base).unwrap();
        let b = simulate(&p, &doubled).unwrap();
        let se_1e5 = (a.p_hat * (1.0 - a.p_hat) / 1e5).sqrt();
        assert!(
            (a.p_hat - b.p_hat).abs() < se_1e5,
            "{scenario:?}: {} vs {}",
            a.p_hat,
            b.p_hat
        );
    }
}
