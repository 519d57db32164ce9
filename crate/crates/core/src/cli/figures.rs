//! Plans that regenerate the data behind each figure.

use std::f64::consts::FRAC_PI_2;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use super::plan::{Axis, BaseParams, Column, GridParam, Overrides, Plan, Quantity, SimulationSettings};
use crate::analytic::{d_max_direct, d_max_relay, SecrecyTarget, SystemParams};
use crate::montecarlo::{EavesdropperModel, WindowRule};
use crate::quadrature::QuadratureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Figure {
    /// Fixed relays, colluding: exact, lower bound and simulation versus λ_E
    Fig2,
    /// Fixed relays, non-colluding: exact, lower bounds and simulation versus λ_E
    Fig3,
    /// Direct versus selected relay in both models at two relay densities
    Fig4,
    /// Secure gain versus relay density
    Fig5,
    /// Probabilities versus link length with the decision thresholds
    Fig6,
}

/// Relay positions `(r, θ)` drawn in the fixed-relay figures.
pub const RELAY_LOCATIONS: [(f64, f64); 3] = [(0.0, 0.0), (5.0, 0.0), (10.0, FRAC_PI_2)];

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }
}

fn location_tag(r: f64, theta: f64) -> String {
    format!("r{}_th{}", r, (theta.to_degrees()).round())
}

fn lambda_e_axis() -> Axis {
    Axis {
        param: GridParam::LambdaE,
        start: 1e-5,
        stop: 1e-3,
        points: 7,
        log: true,
    }
}

fn column(label: String, quantity: Quantity, overrides: Overrides) -> Column {
    Column {
        label,
        quantity,
        overrides,
    }
}

fn relay_columns(exact: Quantity, lowers: &[(&str, Quantity)]) -> Vec<Column> {
    let mut cols = Vec::new();
    for &(r, theta) in &RELAY_LOCATIONS {
        let tag = location_tag(r, theta);
        let at = Overrides {
            relay: Some((r, theta)),
            ..Overrides::default()
        };
        cols.push(column(format!("exact_{tag}"), exact, at));
        for (name, q) in lowers {
            cols.push(column(format!("{name}_{tag}"), *q, at));
        }
        cols.push(column(format!("mc_{tag}"), Quantity::RelayMc, at));
    }
    cols
}

/// Plan for `fig` with the given simulation settings.
pub fn plan(fig: Figure, seed: u64, trials: u64, window: WindowRule, quadrature: QuadratureConfig) -> Plan {
    let simulation = SimulationSettings { seed, trials, window };
    let mut base = BaseParams {
        alpha: 4.0,
        lambda_e: 1e-5,
        lambda_r: 1e-3,
        d_sd: 20.0,
        delta: None,
        model: EavesdropperModel::Colluding,
        relay_r: 0.0,
        relay_theta: 0.0,
    };
    let mut notes = Vec::new();
    let (axes, columns) = match fig {
        Figure::Fig2 => {
            notes.push("relay locations (r [m], theta [rad]): (0, 0), (5, 0), (10, pi/2)".into());
            (
                vec![lambda_e_axis()],
                relay_columns(
                    Quantity::RelayColludingExact,
                    &[("lower", Quantity::RelayColludingLower)],
                ),
            )
        }
        Figure::Fig3 => {
            base.model = EavesdropperModel::NonColluding;
            notes.push("relay locations are a substitute: the fig2 set (0, 0), (5, 0), (10, pi/2)".into());
            notes.push(
                "lower: product of single-hop fading expectations; lower_jensen: closed-form Jensen bound".into(),
            );
            (
                vec![lambda_e_axis()],
                relay_columns(
                    Quantity::RelayNoncolludingExact,
                    &[
                        ("lower", Quantity::RelayNoncolludingLower),
                        ("lower_jensen", Quantity::RelayColludingLower),
                    ],
                ),
            )
        }
        Figure::Fig4 => {
            let model = |m| Overrides {
                model: Some(m),
                ..Overrides::default()
            };
            let both = |m, lr| Overrides {
                model: Some(m),
                lambda_r: Some(lr),
                ..Overrides::default()
            };
            let col = EavesdropperModel::Colluding;
            let non = EavesdropperModel::NonColluding;
            let mut cols = vec![
                column(
                    "direct_colluding".into(),
                    Quantity::DirectColluding,
                    Overrides::default(),
                ),
                column("direct_colluding_mc".into(), Quantity::DirectMc, model(col)),
                column(
                    "direct_noncolluding".into(),
                    Quantity::DirectNoncolluding,
                    Overrides::default(),
                ),
                column("direct_noncolluding_mc".into(), Quantity::DirectMc, model(non)),
            ];
            for (tag, lr) in [("lr1e-2", 1e-2), ("lr1e-3", 1e-3)] {
                cols.push(column(
                    format!("relay_colluding_{tag}"),
                    Quantity::SelectedRelayColludingLower,
                    both(col, lr),
                ));
                cols.push(column(
                    format!("relay_colluding_{tag}_mc"),
                    Quantity::SelectedRelayMc,
                    both(col, lr),
                ));
                cols.push(column(
                    format!("relay_noncolluding_{tag}"),
                    Quantity::SelectedRelayNoncolludingLower,
                    both(non, lr),
                ));
                cols.push(column(
                    format!("relay_noncolluding_{tag}_mc"),
                    Quantity::SelectedRelayMc,
                    both(non, lr),
                ));
            }
            (vec![lambda_e_axis()], cols)
        }
        Figure::Fig5 => {
            base.delta = Some(0.7);
            notes.push("secure gain approaches sqrt(2) as the relay density grows".into());
            let at = |le| Overrides {
                lambda_e: Some(le),
                ..Overrides::default()
            };
            (
                vec![Axis {
                    param: GridParam::LambdaR,
                    start: 1e-6,
                    stop: 10.0,
                    points: 36,
                    log: true,
                }],
                vec![
                    column("gain_le1e-3".into(), Quantity::SecureGain, at(1e-3)),
                    column("gain_le1e-5".into(), Quantity::SecureGain, at(1e-5)),
                ],
            )
        }
        Figure::Fig6 => {
            base.delta = Some(0.7);
            let target = SecrecyTarget::new(0.7).expect("valid target");
            let at = |lr: f64| SystemParams::new(4.0, 1e-5, lr, 20.0).expect("valid params");
            notes.push(format!(
                "threshold d_max_direct = {:.2} m",
                d_max_direct(target, &at(1e-3)).as_f64()
            ));
            notes.push(format!(
                "threshold d_max_relay(lambda_r = 1e-3) = {:.2} m",
                d_max_relay(target, &at(1e-3)).as_f64()
            ));
            notes.push(format!(
                "threshold d_max_relay(lambda_r = 1e-4) = {:.2} m",
                d_max_relay(target, &at(1e-4)).as_f64()
            ));
            let lr = |v| Overrides {
                lambda_r: Some(v),
                ..Overrides::default()
            };
            (
                vec![Axis {
                    param: GridParam::DSd,
                    start: 10.0,
                    stop: 200.0,
                    points: 20,
                    log: false,
                }],
                vec![
                    column(
                        "direct_colluding".into(),
                        Quantity::DirectColluding,
                        Overrides::default(),
                    ),
                    column("direct_colluding_mc".into(), Quantity::DirectMc, Overrides::default()),
                    column(
                        "relay_colluding_lr1e-3".into(),
                        Quantity::SelectedRelayColludingLower,
                        lr(1e-3),
                    ),
                    column("relay_colluding_lr1e-3_mc".into(), Quantity::SelectedRelayMc, lr(1e-3)),
                    column(
                        "relay_colluding_lr1e-4".into(),
                        Quantity::SelectedRelayColludingLower,
                        lr(1e-4),
                    ),
                ],
            )
        }
    };
    Plan {
        name: fig.name().to_string(),
        base,
        axes,
        columns,
        simulation,
        quadrature,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::DEFAULT_TAIL_TOL;

    #[test]
    fn every_plan_validates() {
        for fig in Figure::value_variants() {
            let p = plan(
                *fig,
                1,
                10,
                WindowRule::Auto(DEFAULT_TAIL_TOL),
                QuadratureConfig::default(),
            );
            p.validate().unwrap();
            assert_eq!(p.name, fig.name());
        }
    }

    #[test]
    fn fig2_columns() {
        let p = plan(
            Figure::Fig2,
            1,
            10,
            WindowRule::Auto(DEFAULT_TAIL_TOL),
            QuadratureConfig::default(),
        );
        let labels: Vec<&str> = p.columns.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels[..3], ["exact_r0_th0", "lower_r0_th0", "mc_r0_th0"]);
        assert!(labels.contains(&"exact_r10_th90"));
    }

    #[test]
    fn fig6_notes_carry_thresholds() {
        let p = plan(
            Figure::Fig6,
            1,
            10,
            WindowRule::Auto(DEFAULT_TAIL_TOL),
            QuadratureConfig::default(),
        );
        let joined = p.notes.join("\n");
        assert!(joined.contains("d_max_direct = 85.02 m"));
        assert!(joined.contains("= 114.90 m"));
        assert!(joined.contains("= 58.17 m"));
    }
}
