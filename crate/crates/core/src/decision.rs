//! Relay-or-not decision for a source that knows the link geometry and the
//! node densities.
//!
//! 1. Transmit directly if the link is no longer than the direct range.
//! 2. Otherwise relay through the node nearest the midpoint if the relay
//!    density beats its threshold and the link is within the relay range.
//! 3. Otherwise the target cannot be met.
//!
//! Thresholds come from the colluding-eavesdropper bounds. Against
//! non-colluding eavesdroppers they remain sufficient conditions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analytic::{
    d_max_direct, d_max_relay, relay_density_threshold, secure_gain, DistanceBound, SecrecyTarget, SystemParams,
};
use crate::error::Result;
use crate::montecarlo::EavesdropperModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    DirectSufficient,
    UseRelay,
    Infeasible,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::DirectSufficient => "direct transmission",
            Outcome::UseRelay => "relay transmission",
            Outcome::Infeasible => "infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionReport {
    pub outcome: Outcome,
    pub delta: f64,
    pub d_sd: f64,
    pub lambda_r: f64,
    pub d_max_direct: DistanceBound,
    pub d_max_relay: DistanceBound,
    /// `None` when the gain is undefined (no eavesdroppers or no relays).
    pub secure_gain: Option<f64>,
    pub relay_density_threshold: f64,
    pub model: EavesdropperModel,
    pub model_note: String,
}

impl DecisionReport {
    /// The outcome implied by the recorded thresholds.
    pub fn rederive(&self) -> Outcome {
        outcome_from(
            self.d_sd,
            self.lambda_r,
            self.d_max_direct,
            self.d_max_relay,
            self.relay_density_threshold,
        )
    }

    pub fn is_consistent(&self) -> bool {
        self.rederive() == self.outcome
    }
}

impl fmt::Display for DecisionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let range = |b: DistanceBound| match b {
            DistanceBound::Bounded(d) => format!("{d:.2} m"),
            DistanceBound::Unbounded => "unbounded".to_string(),
        };
        writeln!(f, "decision:                 {}", self.outcome)?;
        writeln!(f, "target delta:             {}", self.delta)?;
        writeln!(f, "link length:              {} m", self.d_sd)?;
        writeln!(f, "direct range:             {}", range(self.d_max_direct))?;
        writeln!(f, "relay range:              {}", range(self.d_max_relay))?;
        match self.secure_gain {
            Some(g) => writeln!(f, "secure gain:              {g:.4}")?,
            None => writeln!(f, "secure gain:              undefined")?,
        }
        writeln!(
            f,
            "relay density threshold:  {:.4e} per m^2 (have {:.4e})",
            self.relay_density_threshold, self.lambda_r
        )?;
        write!(
            f,
            "eavesdroppers:            {} ({})",
            self.model.as_str(),
            self.model_note
        )
    }
}

fn outcome_from(d_sd: f64, lambda_r: f64, direct: DistanceBound, relay: DistanceBound, threshold: f64) -> Outcome {
    if direct.admits(d_sd) {
        Outcome::DirectSufficient
    } else if lambda_r > threshold && relay.admits(d_sd) {
        Outcome::UseRelay
    } else {
        Outcome::Infeasible
    }
}

/// Decision against colluding eavesdroppers.
pub fn decide(params: &SystemParams, delta: SecrecyTarget) -> DecisionReport {
    decide_for(params, delta, EavesdropperModel::Colluding)
}

/// Decision with the guarantee labelled for `model`. The thresholds are the
/// same for both models.
pub fn decide_for(params: &SystemParams, delta: SecrecyTarget, model: EavesdropperModel) -> DecisionReport {
    let direct = d_max_direct(delta, params);
    let relay = d_max_relay(delta, params);
    let threshold = relay_density_threshold(delta, params);
    let gain: Result<f64> = secure_gain(delta, params);
    let outcome = outcome_from(params.d_sd(), params.lambda_r(), direct, relay, threshold);
    let model_note = match model {
        EavesdropperModel::Colluding => "thresholds are exact for the colluding lower bounds",
        EavesdropperModel::NonColluding => {
            "sufficient condition: colluding thresholds also secure non-colluding eavesdroppers"
        }
    };
    DecisionReport {
        outcome,
        delta: delta.value(),
        d_sd: params.d_sd(),
        lambda_r: params.lambda_r(),
        d_max_direct: direct,
        d_max_relay: relay,
        secure_gain: gain.ok(),
        relay_density_threshold: threshold,
        model,
        model_note: model_note.to_string(),
    }
}
