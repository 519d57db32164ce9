//! Monte Carlo estimates of the secure connection probabilities.
//!
//! Every trial samples the eavesdropper field and all fading afresh and
//! evaluates the secrecy event directly: a hop of length `d` is secure when
//! `h d^{−α}` exceeds the eavesdroppers' aggregate `Σ_j h_j d_j^{−α}`
//! (colluding) or `max_j h_j d_j^{−α}` (non-colluding). The power-scaling
//! factor cancels from both sides and never appears.
//!
//! Trial `i` draws from a ChaCha8 stream keyed by the master seed and the
//! scenario, positioned at stream `i`. Results therefore do not depend on
//! how trials are split across threads, and the two eavesdropper models see
//! the same realizations for a given seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::SystemParams;
use crate::error::{check, Error, Result};
use crate::geometry::{
    hop_distances, nearest_to_origin, sample_ppp_into, tail_radius, Endpoints, PlanarPoint, PolarPoint,
    SimulationWindow,
};

/// Two-sided 97.5% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Default bound on the truncated colluding aggregate, in units of the
/// legitimate signal on the longest hop.
pub const DEFAULT_TAIL_TOL: f64 = 1e-3;

/// Trials handed to one worker at a time.
const CHUNK: u64 = 4096;

/// Expected relay count of the disc sampled before falling back to the
/// nearest-point law.
const RELAY_DISC_MEAN: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EavesdropperModel {
    /// Eavesdroppers combine their signals: the aggregate is a sum.
    Colluding,
    /// Each eavesdropper decodes alone: the aggregate is the strongest one.
    NonColluding,
}

impl EavesdropperModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            EavesdropperModel::Colluding => "colluding",
            EavesdropperModel::NonColluding => "noncolluding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Direct,
    FixedRelay(PolarPoint),
    /// The relay nearest the midpoint of a Poisson relay field.
    SelectedRelay,
}

impl Scenario {
    fn tag(&self) -> u64 {
        match self {
            Scenario::Direct => 1,
            Scenario::FixedRelay(_) => 2,
            Scenario::SelectedRelay => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    pub window: SimulationWindow,
    pub eavesdropper_model: EavesdropperModel,
    pub scenario: Scenario,
}

impl TrialConfig {
    /// Config with the window from [`default_window`] at [`DEFAULT_TAIL_TOL`].
    pub fn new(
        params: &SystemParams,
        trials: u64,
        seed: u64,
        eavesdropper_model: EavesdropperModel,
        scenario: Scenario,
    ) -> Result<Self> {
        let window = default_window(params, &scenario, DEFAULT_TAIL_TOL)?;
        let cfg = Self {
            trials,
            seed,
            window,
            eavesdropper_model,
            scenario,
        };
        cfg.validate(params)?;
        Ok(cfg)
    }

    pub fn with_window(mut self, window: SimulationWindow) -> Self {
        self.window = window;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_model(mut self, model: EavesdropperModel) -> Self {
        self.eavesdropper_model = model;
        self
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        check(
            self.trials >= 1,
            "trials",
            self.trials as f64,
            "need at least one trial",
        )?;
        let ends = Endpoints::new(params.d_sd())?;
        let w = &self.window;
        check(
            w.contains(&ends.source) && w.contains(&ends.destination),
            "window_radius",
            w.radius,
            "window must enclose the source and the destination",
        )?;
        if let Scenario::FixedRelay(relay) = self.scenario {
            check(
                w.contains(&relay.to_planar()),
                "window_radius",
                w.radius,
                "window must enclose the relay",
            )?;
        }
        Ok(())
    }
}

/// Window centered on the midpoint, large enough that the eavesdroppers left
/// outside add at most `tail_tol` (in units of the longest hop's signal) to
/// the expected colluding aggregate at any transmitter, and never smaller
/// than [`SimulationWindow::around_link`].
pub fn default_window(params: &SystemParams, scenario: &Scenario, tail_tol: f64) -> Result<SimulationWindow> {
    check(
        tail_tol.is_finite() && tail_tol > 0.0,
        "tail_tol",
        tail_tol,
        "tail tolerance must be positive",
    )?;
    let base = SimulationWindow::around_link(params.d_sd(), params.lambda_e())?;
    let d = params.d_sd();
    // distance from the center to the farthest transmitter, and the longest hop
    let (offset, hop) = match scenario {
        Scenario::Direct | Scenario::SelectedRelay => (0.5 * d, d),
        Scenario::FixedRelay(relay) => {
            let (d_sr, d_rd) = hop_distances(*relay, d)?;
            (relay.r().max(0.5 * d), d_sr.max(d_rd))
        }
    };
    let tail = tail_radius(params.lambda_e(), params.alpha(), hop, tail_tol);
    let radius = base.radius.max(offset + tail).max(offset + 0.5 * d);
    SimulationWindow::centered(radius)
}

/// Monte Carlo estimate of a probability with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_level: f64,
}

impl ProbabilityEstimate {
    /// Estimate with a 95% Wilson interval.
    pub fn from_counts(successes: u64, trials: u64) -> Result<Self> {
        check(trials >= 1, "trials", trials as f64, "need at least one trial")?;
        check(
            successes <= trials,
            "successes",
            successes as f64,
            "cannot exceed the trial count",
        )?;
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        Ok(Self {
            successes,
            trials,
            p_hat: p,
            ci_low: (center - half).clamp(0.0, p),
            ci_high: (center + half).clamp(p, 1.0),
            ci_level: 0.95,
        })
    }

    /// `sqrt(p̂(1 − p̂)/n)`.
    pub fn std_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

/// Running eavesdropper aggregate for one receiver.
#[derive(Debug, Clone, Copy)]
struct Aggregate {
    model: EavesdropperModel,
    value: f64,
}

impl Aggregate {
    fn new(model: EavesdropperModel) -> Self {
        Self { model, value: 0.0 }
    }

    fn push(&mut self, snr: f64) {
        match self.model {
            EavesdropperModel::Colluding => self.value += snr,
            EavesdropperModel::NonColluding => self.value = self.value.max(snr),
        }
    }
}

/// Eavesdropper SNR at the receivers of a transmission from `tx`, with the
/// power factor dropped: the sum (colluding) or the maximum (non-colluding)
/// of `h_j ‖tx − e_j‖^{−α}`. Zero without eavesdroppers.
pub fn aggregate_eaves_snr(
    tx: PlanarPoint,
    eaves: &[PlanarPoint],
    fading: &[f64],
    alpha: f64,
    model: EavesdropperModel,
) -> Result<f64> {
    if eaves.len() != fading.len() {
        return Err(Error::LengthMismatch {
            positions: eaves.len(),
            fading: fading.len(),
        });
    }
    let mut agg = Aggregate::new(model);
    for (e, h) in eaves.iter().zip(fading) {
        let d2 = tx.distance_sq(e);
        if d2 == 0.0 {
            return Err(Error::CoincidentEavesdropper);
        }
        agg.push(h * path_gain(d2, alpha));
    }
    Ok(agg.value)
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of grid point `index` in a sweep with master seed `master`.
pub fn point_seed(master: u64, index: u64) -> u64 {
    splitmix(master ^ splitmix(index.wrapping_add(0x5EED)))
}

fn base_rng(seed: u64, scenario: &Scenario) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ scenario.tag().wrapping_mul(0xA24B_AED4_963E_E407)))
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// `d^{−α}` from `d²`.
#[inline]
fn path_gain(d2: f64, alpha: f64) -> f64 {
    if alpha == 4.0 {
        1.0 / (d2 * d2)
    } else {
        d2.powf(-0.5 * alpha)
    }
}

/// Per-trial state, reused across the trials of one worker.
struct Trial<'a> {
    params: &'a SystemParams,
    cfg: &'a TrialConfig,
    ends: Endpoints,
    scratch: Vec<PlanarPoint>,
}

impl<'a> Trial<'a> {
    /// One secure/insecure outcome. Realizations with an eavesdropper exactly
    /// on a transmitter are redrawn from the same stream.
    fn run(&mut self, rng: &mut ChaCha8Rng) -> bool {
        loop {
            let outcome = match self.cfg.scenario {
                Scenario::Direct => self.direct(rng),
                Scenario::FixedRelay(relay) => self.relay(relay.to_planar(), rng),
                Scenario::SelectedRelay => match self.select_relay(rng) {
                    Some(relay) => self.relay(relay, rng),
                    None => Some(false),
                },
            };
            if let Some(secure) = outcome {
                return secure;
            }
        }
    }

    fn direct(&mut self, rng: &mut ChaCha8Rng) -> Option<bool> {
        let alpha = self.params.alpha();
        let d_sd = self.params.d_sd();
        let signal = exp1(rng) * path_gain(d_sd * d_sd, alpha);
        let mut agg = Aggregate::new(self.cfg.eavesdropper_model);
        sample_ppp_into(self.params.lambda_e(), &self.cfg.window, rng, &mut self.scratch);
        for e in &self.scratch {
            let d2 = self.ends.source.distance_sq(e);
            if d2 == 0.0 {
                return None;
            }
            agg.push(exp1(rng) * path_gain(d2, alpha));
            // both aggregates only grow; the rest of the field cannot help
            if agg.value >= signal {
                return Some(false);
            }
        }
        Some(signal > agg.value)
    }

    fn relay(&mut self, relay: PlanarPoint, rng: &mut ChaCha8Rng) -> Option<bool> {
        let alpha = self.params.alpha();
        let source = self.ends.source;
        let d_sr2 = source.distance_sq(&relay);
        let d_rd2 = relay.distance_sq(&self.ends.destination);
        let h_sr = exp1(rng);
        let h_rd = exp1(rng);
        // a relay on an endpoint makes that hop surely secure
        let signal_sr = if d_sr2 == 0.0 {
            f64::INFINITY
        } else {
            h_sr * path_gain(d_sr2, alpha)
        };
        let signal_rd = if d_rd2 == 0.0 {
            f64::INFINITY
        } else {
            h_rd * path_gain(d_rd2, alpha)
        };
        let mut at_source = Aggregate::new(self.cfg.eavesdropper_model);
        let mut at_relay = Aggregate::new(self.cfg.eavesdropper_model);
        sample_ppp_into(self.params.lambda_e(), &self.cfg.window, rng, &mut self.scratch);
        for e in &self.scratch {
            let ds = source.distance_sq(e);
            let dr = relay.distance_sq(e);
            if ds == 0.0 || dr == 0.0 {
                return None;
            }
            at_source.push(exp1(rng) * path_gain(ds, alpha));
            at_relay.push(exp1(rng) * path_gain(dr, alpha));
            if at_source.value >= signal_sr || at_relay.value >= signal_rd {
                return Some(false);
            }
        }
        Some(signal_sr > at_source.value && signal_rd > at_relay.value)
    }

    /// Nearest relay of an unbounded Poisson field. A disc holding
    /// [`RELAY_DISC_MEAN`] relays on average is sampled first; when it is
    /// empty the nearest relay lies beyond it, at a radius drawn from the
    /// conditional nearest-point law.
    fn select_relay(&mut self, rng: &mut ChaCha8Rng) -> Option<PlanarPoint> {
        let density = self.params.lambda_r();
        if density <= 0.0 {
            return None;
        }
        let inner = (RELAY_DISC_MEAN / (PI * density)).sqrt();
        let disc = SimulationWindow {
            center: PlanarPoint::ORIGIN,
            radius: inner,
        };
        sample_ppp_into(density, &disc, rng, &mut self.scratch);
        if let Some(p) = nearest_to_origin(&self.scratch) {
            return Some(p);
        }
        let u: f64 = rng.random();
        let r = (inner * inner - (1.0 - u).ln() / (PI * density)).sqrt();
        let phi = 2.0 * PI * rng.random::<f64>();
        Some(PlanarPoint {
            x: r * phi.cos(),
            y: r * phi.sin(),
        })
    }
}

/// Runs `cfg.trials` trials of `cfg.scenario` and counts the secure ones.
pub fn simulate(params: &SystemParams, cfg: &TrialConfig) -> Result<ProbabilityEstimate> {
    cfg.validate(params)?;
    let ends = Endpoints::new(params.d_sd())?;
    let base = base_rng(cfg.seed, &cfg.scenario);
    let chunks = cfg.trials.div_ceil(CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut trial = Trial {
                params,
                cfg,
                ends,
                scratch: Vec::new(),
            };
            let start = c * CHUNK;
            let end = (start + CHUNK).min(cfg.trials);
            let mut hits = 0u64;
            for i in start..end {
                let mut rng = base.clone();
                rng.set_stream(i);
                rng.set_word_pos(0);
                hits += trial.run(&mut rng) as u64;
            }
            hits
        })
        .sum();
    ProbabilityEstimate::from_counts(successes, cfg.trials)
}

/// Direct transmission; `cfg.scenario` is ignored.
pub fn run_direct(params: &SystemParams, cfg: &TrialConfig) -> Result<ProbabilityEstimate> {
    simulate(
        params,
        &TrialConfig {
            scenario: Scenario::Direct,
            ..*cfg
        },
    )
}

/// Relay at a fixed position; `cfg.scenario` is ignored.
pub fn run_fixed_relay(params: &SystemParams, relay: PolarPoint, cfg: &TrialConfig) -> Result<ProbabilityEstimate> {
    simulate(
        params,
        &TrialConfig {
            scenario: Scenario::FixedRelay(relay),
            ..*cfg
        },
    )
}

/// Relay nearest the midpoint of a fresh relay field per trial; a trial
/// without relays fails. `cfg.scenario` is ignored.
pub fn run_selected_relay(params: &SystemParams, cfg: &TrialConfig) -> Result<ProbabilityEstimate> {
    simulate(
        params,
        &TrialConfig {
            scenario: Scenario::SelectedRelay,
            ..*cfg
        },
    )
}

/// How each sweep point picks its simulation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowRule {
    Fixed(SimulationWindow),
    /// [`default_window`] with this tail tolerance.
    Auto(f64),
}

impl WindowRule {
    pub fn window(&self, params: &SystemParams, scenario: &Scenario) -> Result<SimulationWindow> {
        match self {
            WindowRule::Fixed(w) => Ok(*w),
            WindowRule::Auto(tail) => default_window(params, scenario, *tail),
        }
    }
}

/// One estimate per grid point. Point `i` runs with seed
/// [`point_seed`]`(template.seed, i)`, so any subset reruns identically.
/// A failing point does not stop the others.
pub fn sweep(grid: &[SystemParams], template: &TrialConfig, windows: WindowRule) -> Vec<Result<ProbabilityEstimate>> {
    grid.iter()
        .enumerate()
        .map(|(i, params)| {
            let window = windows.window(params, &template.scenario)?;
            let cfg = TrialConfig {
                seed: point_seed(template.seed, i as u64),
                window,
                ..*template
            };
            simulate(params, &cfg)
        })
        .collect()
}
