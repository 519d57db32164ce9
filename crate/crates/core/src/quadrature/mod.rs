//! Numerical evaluation of the secrecy probabilities that have no closed form.
//!
//! * colluding relay probability with the spatial correlation term,
//! * non-colluding direct and relay probabilities (fading expectations),
//! * the selected-relay bound against non-colluding eavesdroppers (series).

mod fading;
pub mod integrate;
pub mod spatial;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fading::FadingWeightRule;
use integrate::{compensated_sum, integrate as adaptive, Tolerance};

use crate::analytic::{p_relay_colluding_lower, SystemParams};
use crate::error::{check, Error, Result};
use crate::geometry::{hop_distances, PolarPoint};
use statrs::function::gamma::{gamma, ln_gamma};

/// Accuracy and budget settings shared by every evaluation in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Relative tolerance of 1-D and 2-D integrals.
    pub rel_tol: f64,
    /// Relative tolerance of the 4-D non-colluding composite.
    pub composite_rel_tol: f64,
    /// Panel budget of each adaptive integral.
    pub max_subdivisions: usize,
    /// Node count of the fading rule.
    pub fading_order: usize,
    pub series_max_terms: usize,
    /// A series stops once its terms fall below this fraction of the partial sum.
    pub series_term_tol: f64,
    /// Tensor node count above which the composite logs a cost warning.
    pub node_budget: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            composite_rel_tol: 1e-3,
            max_subdivisions: 4000,
            fading_order: 64,
            // terms cluster around n ≈ z, and z reaches the thousands at deep fades
            series_max_terms: 100_000,
            series_term_tol: 1e-12,
            node_budget: 4096,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("composite_rel_tol", self.composite_rel_tol),
            ("series_term_tol", self.series_term_tol),
        ] {
            check(
                v.is_finite() && v > 0.0 && v < 1.0,
                name,
                v,
                "tolerance must lie in (0, 1)",
            )?;
        }
        check(
            self.max_subdivisions >= 1,
            "max_subdivisions",
            self.max_subdivisions as f64,
            "need at least one panel",
        )?;
        check(
            self.series_max_terms >= 1,
            "series_max_terms",
            self.series_max_terms as f64,
            "need at least one term",
        )?;
        check(
            self.fading_order >= 2,
            "fading_order",
            self.fading_order as f64,
            "rule needs at least two nodes",
        )?;
        Ok(())
    }

    fn rule(&self) -> Result<FadingWeightRule> {
        self.validate()?;
        FadingWeightRule::exponential(self.fading_order)
    }
}

/// True when the relay sits on the source or the destination. The relay
/// formulas then reduce to the single surviving hop.
pub fn is_degenerate_relay(relay: PolarPoint, d_sd: f64) -> Result<bool> {
    let (d_sr, d_rd) = hop_distances(relay, d_sd)?;
    Ok(d_sr == 0.0 || d_rd == 0.0)
}

/// Colluding correlation integral `f` for a relay at `relay`. The hop
/// lengths must match the relay position.
pub fn spatial_correlation_integral_colluding(
    d_sr: f64,
    d_rd: f64,
    relay: PolarPoint,
    d_sd: f64,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    cfg.validate()?;
    check(
        alpha.is_finite() && alpha > 2.0,
        "alpha",
        alpha,
        "path-loss exponent must satisfy alpha > 2",
    )?;
    let (sr, rd) = hop_distances(relay, d_sd)?;
    let scale = 1e-9 * (d_sd + relay.r());
    check(
        (sr - d_sr).abs() <= scale,
        "d_sr",
        d_sr,
        "inconsistent with the relay position",
    )?;
    check(
        (rd - d_rd).abs() <= scale,
        "d_rd",
        d_rd,
        "inconsistent with the relay position",
    )?;
    correlation_colluding(d_sr, d_rd, alpha, cfg)
}

/// `f` clipped to its analytic cap `min(C d_sr², C d_rd²)`; the cap is exact
/// and the clip only removes quadrature error.
fn correlation_colluding(d_sr: f64, d_rd: f64, alpha: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let f = spatial::colluding_correlation(d_sr, d_rd, alpha, cfg.rel_tol, cfg.max_subdivisions)?;
    let b = 2.0 / alpha;
    let c = 2.0 * PI / alpha * gamma(b) * gamma(1.0 - b);
    Ok(f.clamp(0.0, c * d_sr.min(d_rd).powi(2)))
}

/// Exact relay probability against colluding eavesdroppers,
/// `exp(−A d_sr² − A d_rd² + λ_E f)`.
pub fn p_relay_colluding_exact(relay: PolarPoint, params: &SystemParams, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    if params.lambda_e() == 0.0 {
        return Ok(1.0);
    }
    let (d_sr, d_rd) = hop_distances(relay, params.d_sd())?;
    let f = correlation_colluding(d_sr, d_rd, params.alpha(), cfg)?;
    let a = params.a();
    let exact = (-(a * d_sr * d_sr + a * d_rd * d_rd - params.lambda_e() * f)).exp();
    Ok(exact.clamp(p_relay_colluding_lower(relay, params), 1.0))
}

/// `E[exp(−c h^{−2/α})]` for unit exponential `h`, where `c·Γ(1 − 2/α) = jensen`.
///
/// Evaluated as `e^{−jensen} (1 + E[φ(c h^{−2/α} − jensen)])` with
/// `φ(y) = e^{−y} − 1 + y ≥ 0`, so the result never drops below the Jensen
/// value `e^{−jensen}` and the small gap is integrated without cancellation.
fn single_hop(c: f64, jensen: f64, alpha: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if c == 0.0 {
        return Ok(1.0);
    }
    let floor = (-jensen).exp();
    // h = t^p makes h^{−2/α} dh = p dt, which removes the h → 0 singularity
    let p = alpha / (alpha - 2.0);
    let gap = |t: f64| -> f64 {
        if t == 0.0 {
            return p * c * floor;
        }
        let h = t.powf(p);
        let cu = c * t.powf(1.0 - p);
        let y = cu - jensen;
        let scaled_phi = if y.abs() < 1e-2 {
            floor * y * y * (0.5 - y * (1.0 / 6.0 - y * (1.0 / 24.0 - y / 120.0)))
        } else {
            (-cu).exp() - floor + floor * y
        };
        p * t.powf(p - 1.0) * (-h).exp() * scaled_phi.max(0.0)
    };
    let t_knee = c.powf(1.0 / (p - 1.0));
    let t_max = (60.0 + jensen).powf(1.0 / p);
    let tol = Tolerance::relative(cfg.rel_tol, cfg.max_subdivisions).with_abs(1e-3 * cfg.rel_tol * floor);
    let extra = adaptive(
        gap,
        0.0,
        t_max,
        &[0.5 * t_knee, t_knee, 2.0 * t_knee, 1.0],
        tol,
        "non-colluding fading expectation",
    )?
    .value;
    Ok((floor + extra).min(1.0))
}

fn single_hop_at(d: f64, params: &SystemParams, cfg: &QuadratureConfig) -> Result<f64> {
    single_hop(
        params.noncolluding_scale() * d * d,
        params.a() * d * d,
        params.alpha(),
        cfg,
    )
}

/// Direct transmission against non-colluding eavesdroppers,
/// `E_h[exp(−πλ_E Γ(1 + 2/α) d_sd² h^{−2/α})]`.
pub fn p_direct_noncolluding(params: &SystemParams, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    single_hop_at(params.d_sd(), params, cfg)
}

/// Relay lower bound against non-colluding eavesdroppers that drops the
/// correlation term: the product of the two single-hop expectations.
pub fn p_relay_noncolluding_lower(relay: PolarPoint, params: &SystemParams, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let (d_sr, d_rd) = hop_distances(relay, params.d_sd())?;
    Ok(single_hop_at(d_sr, params, cfg)? * single_hop_at(d_rd, params, cfg)?)
}

/// Exact relay probability against non-colluding eavesdroppers,
///
/// ```text
/// E_{h1,h2}[exp(−k(d_sr² h1^{−2/α} + d_rd² h2^{−2/α}) + λ_E g(h1, h2))]
/// ```
///
/// with `k = πλ_E Γ(1 + 2/α)`. Written as the lower bound plus
/// `E[e^{−k(…)} (e^{λ_E g} − 1)]`; only that non-negative correction goes
/// through the fading rule tensor, with `g` from a 2-D adaptive integral per
/// node pair. The result is kept within `[max(lower, colluding exact), 1]`,
/// which the true value satisfies.
pub fn p_relay_noncolluding_exact(relay: PolarPoint, params: &SystemParams, cfg: &QuadratureConfig) -> Result<f64> {
    let rule = cfg.rule()?;
    if params.lambda_e() == 0.0 {
        return Ok(1.0);
    }
    let (d_sr, d_rd) = hop_distances(relay, params.d_sd())?;
    let lower = p_relay_noncolluding_lower(relay, params, cfg)?;
    let colluding = p_relay_colluding_exact(relay, params, cfg)?;
    if d_sr == 0.0 || d_rd == 0.0 {
        return Ok(lower.max(colluding).min(1.0));
    }
    let pairs = rule.order() * rule.order();
    if pairs > cfg.node_budget {
        tracing::warn!(
            pairs,
            budget = cfg.node_budget,
            "non-colluding composite exceeds its node budget"
        );
    }

    let k = params.noncolluding_scale();
    let lambda = params.lambda_e();
    let alpha = params.alpha();
    let beta = 2.0 / alpha;
    let c_sr = k * d_sr * d_sr;
    let c_rd = k * d_rd * d_rd;
    let g_tol = 0.1 * cfg.composite_rel_tol;
    // terms are bounded by w_i w_j e^{−max(c_sr u_i, c_rd u_j)} since λ g ≤ min of the two
    let negligible = 1e-4 * cfg.composite_rel_tol * lower;
    let nodes = rule.nodes();

    let rows: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|&(h1, w1)| {
            let x1 = c_sr * h1.powf(-beta);
            let mut terms = Vec::with_capacity(nodes.len());
            for &(h2, w2) in nodes {
                let x2 = c_rd * h2.powf(-beta);
                let weight = w1 * w2;
                if weight * (-x1.max(x2)).exp() < negligible {
                    continue;
                }
                let g = spatial::noncolluding_correlation(d_sr, d_rd, h1, h2, alpha, g_tol, cfg.max_subdivisions)?;
                let boost = (lambda * g).min(x1.min(x2));
                terms.push(weight * (-(x1 + x2)).exp() * boost.exp_m1());
            }
            Ok(compensated_sum(terms))
        })
        .collect();
    let mut row_sums = Vec::with_capacity(rows.len());
    for r in rows {
        row_sums.push(r?);
    }
    let exact = lower + compensated_sum(row_sums);
    Ok(exact.max(colluding).min(1.0))
}

/// Sum of `Σ_n e^{ln_t0 + n ln z − ln n!}` from its largest term outward.
fn poisson_weighted_series(ln_t0: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if z == 0.0 {
        return Ok(ln_t0.exp());
    }
    let peak = z.floor();
    let ln_peak = ln_t0 + peak * z.ln() - ln_gamma(peak + 1.0);
    let t_peak = ln_peak.exp();
    if t_peak == 0.0 {
        return Ok(0.0);
    }
    let mut sum = t_peak;
    let mut used = 1usize;
    let mut up = t_peak;
    let mut n = peak;
    loop {
        n += 1.0;
        up *= z / n;
        sum += up;
        used += 1;
        if up <= cfg.series_term_tol * sum {
            break;
        }
        if used >= cfg.series_max_terms {
            return Err(Error::SeriesNonConvergence {
                what: "selected-relay series",
                terms: used,
            });
        }
    }
    let mut down = t_peak;
    let mut n = peak;
    while n > 0.0 {
        down *= n / z;
        n -= 1.0;
        sum += down;
        used += 1;
        if down <= cfg.series_term_tol * sum {
            break;
        }
        if used >= cfg.series_max_terms {
            return Err(Error::SeriesNonConvergence {
                what: "selected-relay series",
                terms: used,
            });
        }
    }
    Ok(sum)
}

/// Lower bound for the relay nearest the midpoint against non-colluding
/// eavesdroppers, as a fading expectation of the series
///
/// ```text
/// Σ_n λ_R π e^{−k(u1 + u2) d_sd²/4} z^n / (n! s),   s = k(u1 + u2) + λ_R π,
/// z = (k (u2 − u1) d_sd)² / (4 s),   u_i = h_i^{−2/α}.
/// ```
///
/// Zero without relays.
pub fn p_selected_relay_noncolluding_lower(params: &SystemParams, cfg: &QuadratureConfig) -> Result<f64> {
    let rule = cfg.rule()?;
    let density = params.lambda_r() * PI;
    if density == 0.0 {
        return Ok(0.0);
    }
    if params.lambda_e() == 0.0 {
        return Ok(1.0);
    }
    let k = params.noncolluding_scale();
    let d = params.d_sd();
    let beta = 2.0 / params.alpha();
    let us: Vec<(f64, f64)> = rule.nodes().iter().map(|&(h, w)| (h.powf(-beta), w)).collect();
    // (ln weight, ln t0, z) per fading pair
    let mut pairs = Vec::with_capacity(us.len() * us.len());
    for &(u1, w1) in &us {
        for &(u2, w2) in &us {
            let s = k * (u1 + u2) + density;
            let z = (k * (u2 - u1) * d).powi(2) / (4.0 * s);
            let ln_t0 = (density / s).ln() - 0.25 * k * (u1 + u2) * d * d;
            pairs.push(((w1 * w2).ln(), ln_t0, z));
        }
    }
    // a pair's series sums to t0 e^z, so pairs far below the largest one
    // can be dropped before summing
    let ln_mass = |&(lw, lt, z): &(f64, f64, f64)| lw + lt + z;
    let ln_max = pairs.iter().map(ln_mass).fold(f64::NEG_INFINITY, f64::max);
    let ln_cut = ln_max + (1e-4 * cfg.series_term_tol).ln();
    let mut terms = Vec::with_capacity(pairs.len());
    for pair @ (lw, ln_t0, z) in pairs {
        if ln_mass(&pair) < ln_cut {
            continue;
        }
        terms.push(lw.exp() * poisson_weighted_series(ln_t0, z, cfg)?);
    }
    Ok(compensated_sum(terms).min(1.0))
}
