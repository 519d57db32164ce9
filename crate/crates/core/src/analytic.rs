//! Closed-form secure connection probabilities and the relay-or-not thresholds.
//!
//! Everything here is built on the colluding exponent scale
//!
//! ```text
//! A = (2π λ_E / α) Γ(2/α) Γ(1 − 2/α)
//! ```
//!
//! which is computed once when a [`SystemParams`] is constructed.
//!
//! The transmit SNR `epsilon` is carried and validated but never enters a
//! probability: every secrecy event compares two received SNRs that share the
//! same transmit power, so it cancels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check, Error, Result};
use crate::geometry::{hop_distances, PolarPoint};
use statrs::function::gamma::gamma;

/// Network and channel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    alpha: f64,
    lambda_e: f64,
    lambda_r: f64,
    d_sd: f64,
    epsilon: f64,
    coefficient_a: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    alpha: f64,
    lambda_e: f64,
    lambda_r: f64,
    d_sd: f64,
    epsilon: f64,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        SystemParams::new(raw.alpha, raw.lambda_e, raw.lambda_r, raw.d_sd)?.with_epsilon(raw.epsilon)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams {
            alpha: p.alpha,
            lambda_e: p.lambda_e,
            lambda_r: p.lambda_r,
            d_sd: p.d_sd,
            epsilon: p.epsilon,
        }
    }
}

impl SystemParams {
    /// Validates the parameters (`α > 2`, non-negative finite densities,
    /// positive distance) with unit transmit SNR.
    pub fn new(alpha: f64, lambda_e: f64, lambda_r: f64, d_sd: f64) -> Result<Self> {
        check(
            alpha.is_finite() && alpha > 2.0,
            "alpha",
            alpha,
            "path-loss exponent must satisfy alpha > 2",
        )?;
        check(
            lambda_e.is_finite() && lambda_e >= 0.0,
            "lambda_e",
            lambda_e,
            "eavesdropper density must be finite and non-negative",
        )?;
        check(
            lambda_r.is_finite() && lambda_r >= 0.0,
            "lambda_r",
            lambda_r,
            "relay density must be finite and non-negative",
        )?;
        check(
            d_sd.is_finite() && d_sd > 0.0,
            "d_sd",
            d_sd,
            "source-destination distance must be finite and positive",
        )?;
        Ok(Self {
            alpha,
            lambda_e,
            lambda_r,
            d_sd,
            epsilon: 1.0,
            coefficient_a: coefficient_a(lambda_e, alpha)?,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        check(
            epsilon.is_finite() && epsilon > 0.0,
            "epsilon",
            epsilon,
            "transmit SNR must be finite and positive",
        )?;
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.lambda_e, self.lambda_r, self.d_sd)?.with_epsilon(self.epsilon)
    }

    pub fn with_lambda_e(self, lambda_e: f64) -> Result<Self> {
        Self::new(self.alpha, lambda_e, self.lambda_r, self.d_sd)?.with_epsilon(self.epsilon)
    }

    pub fn with_lambda_r(self, lambda_r: f64) -> Result<Self> {
        Self::new(self.alpha, self.lambda_e, lambda_r, self.d_sd)?.with_epsilon(self.epsilon)
    }

    pub fn with_d_sd(self, d_sd: f64) -> Result<Self> {
        Self::new(self.alpha, self.lambda_e, self.lambda_r, d_sd)?.with_epsilon(self.epsilon)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda_e(&self) -> f64 {
        self.lambda_e
    }

    pub fn lambda_r(&self) -> f64 {
        self.lambda_r
    }

    pub fn d_sd(&self) -> f64 {
        self.d_sd
    }

    /// Transmit SNR. Unused by every probability in this crate.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The colluding exponent scale `A`, in m⁻².
    pub fn a(&self) -> f64 {
        self.coefficient_a
    }

    /// `πλ_E Γ(1 + 2/α)`: the non-colluding exponent per unit squared hop
    /// length and unit `h^{−2/α}`.
    pub fn noncolluding_scale(&self) -> f64 {
        PI * self.lambda_e * gamma(1.0 + 2.0 / self.alpha)
    }
}

/// Target secure connection probability `δ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SecrecyTarget(f64);

impl SecrecyTarget {
    pub fn new(delta: f64) -> Result<Self> {
        check(
            delta.is_finite() && delta > 0.0 && delta < 1.0,
            "delta",
            delta,
            "target probability must lie strictly between 0 and 1",
        )?;
        Ok(Self(delta))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SecrecyTarget {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SecrecyTarget> for f64 {
    fn from(t: SecrecyTarget) -> f64 {
        t.0
    }
}

/// Largest source–destination distance meeting a target, or no limit at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceBound {
    Bounded(f64),
    Unbounded,
}

impl DistanceBound {
    /// Whether `d_sd` lies within the bound (closed at the boundary).
    pub fn admits(&self, d_sd: f64) -> bool {
        match *self {
            DistanceBound::Bounded(max) => d_sd <= max,
            DistanceBound::Unbounded => true,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            DistanceBound::Bounded(max) => max,
            DistanceBound::Unbounded => f64::INFINITY,
        }
    }
}

/// `A = (2π λ_E / α) Γ(2/α) Γ(1 − 2/α)`.
pub fn coefficient_a(lambda_e: f64, alpha: f64) -> Result<f64> {
    check(
        alpha.is_finite() && alpha > 2.0,
        "alpha",
        alpha,
        "path-loss exponent must satisfy alpha > 2",
    )?;
    check(
        lambda_e.is_finite() && lambda_e >= 0.0,
        "lambda_e",
        lambda_e,
        "eavesdropper density must be finite and non-negative",
    )?;
    let b = 2.0 / alpha;
    Ok(2.0 * PI * lambda_e / alpha * gamma(b) * gamma(1.0 - b))
}

/// Direct transmission, colluding eavesdroppers: `exp(−A d_sd²)`.
pub fn p_direct_colluding(params: &SystemParams) -> f64 {
    (-params.a() * params.d_sd * params.d_sd).exp()
}

/// Jensen lower bound for direct transmission against non-colluding
/// eavesdroppers. Same value as [`p_direct_colluding`].
pub fn p_direct_noncolluding_lower(params: &SystemParams) -> f64 {
    p_direct_colluding(params)
}

/// Lower bound for a relay at `relay`, colluding eavesdroppers:
/// `exp(−A(d_sr² + d_rd²)) = exp(−A d_sd²/2 − 2A r²)`.
pub fn p_relay_colluding_lower(relay: PolarPoint, params: &SystemParams) -> f64 {
    let a = params.a();
    (-0.5 * a * params.d_sd * params.d_sd - 2.0 * a * relay.r() * relay.r()).exp()
}

/// The same bound evaluated from the two hop lengths instead of `r`.
pub fn p_relay_colluding_lower_from_hops(relay: PolarPoint, params: &SystemParams) -> f64 {
    // d_sd is validated by SystemParams
    let (d_sr, d_rd) = hop_distances(relay, params.d_sd).expect("validated d_sd");
    (-params.a() * (d_sr * d_sr + d_rd * d_rd)).exp()
}

/// Jensen lower bound for a relay against non-colluding eavesdroppers. It
/// coincides with [`p_relay_colluding_lower`].
pub fn p_relay_noncolluding_lower_jensen(relay: PolarPoint, params: &SystemParams) -> f64 {
    p_relay_colluding_lower(relay, params)
}

/// Lower bound with the relay nearest the midpoint selected:
/// `λ_R π / (2A + λ_R π) · exp(−A d_sd² / 2)`. Zero without relays.
pub fn p_selected_relay_colluding_lower(params: &SystemParams) -> f64 {
    let a = params.a();
    let density = params.lambda_r * PI;
    if density == 0.0 {
        return 0.0;
    }
    density / (2.0 * a + density) * (-0.5 * a * params.d_sd * params.d_sd).exp()
}

/// Longest distance at which direct transmission meets `delta` against
/// colluding eavesdroppers: `sqrt(ln(1/δ) / A)`.
pub fn d_max_direct(delta: SecrecyTarget, params: &SystemParams) -> DistanceBound {
    let a = params.a();
    if a == 0.0 {
        return DistanceBound::Unbounded;
    }
    DistanceBound::Bounded(((1.0 / delta.0).ln() / a).sqrt())
}

/// `λ_R π / (δ (2A + λ_R π))`; relaying can meet the target only when this exceeds one.
fn relay_margin(delta: SecrecyTarget, params: &SystemParams) -> f64 {
    let density = params.lambda_r * PI;
    density / (delta.0 * (2.0 * params.a() + density))
}

/// Longest distance at which the selected relay meets `delta` against
/// colluding eavesdroppers. Zero when relaying cannot reach the target.
pub fn d_max_relay(delta: SecrecyTarget, params: &SystemParams) -> DistanceBound {
    let a = params.a();
    if params.lambda_r == 0.0 {
        return DistanceBound::Bounded(0.0);
    }
    if a == 0.0 {
        return DistanceBound::Unbounded;
    }
    let margin = relay_margin(delta, params);
    if margin < 1.0 {
        return DistanceBound::Bounded(0.0);
    }
    DistanceBound::Bounded((2.0 / a * margin.ln()).sqrt())
}

/// Ratio of the relay and direct distance limits,
/// `sqrt(2 ln(λ_R π / (δ(2A + λ_R π))) / ln(1/δ))`; zero when relaying cannot
/// meet the target at all.
pub fn secure_gain(delta: SecrecyTarget, params: &SystemParams) -> Result<f64> {
    if params.lambda_e <= 0.0 {
        return Err(Error::Undefined("secure gain needs a positive eavesdropper density"));
    }
    if params.lambda_r <= 0.0 {
        return Err(Error::Undefined("secure gain needs a positive relay density"));
    }
    let margin = relay_margin(delta, params);
    if margin < 1.0 {
        return Ok(0.0);
    }
    Ok((2.0 * margin.ln() / (1.0 / delta.0).ln()).sqrt())
}

/// Relay density above which relaying reaches farther than direct
/// transmission: `2A(δ + √δ) / (π(1 − δ))`.
pub fn relay_density_threshold(delta: SecrecyTarget, params: &SystemParams) -> f64 {
    let d = delta.0;
    2.0 * params.a() * (d + d.sqrt()) / (PI * (1.0 - d))
}
