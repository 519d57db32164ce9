//! Grid × column evaluation plans, their CSV output and run manifests.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{
    coefficient_a, d_max_direct, d_max_relay, p_direct_colluding, p_relay_colluding_lower,
    p_selected_relay_colluding_lower, relay_density_threshold, secure_gain, DistanceBound, SecrecyTarget, SystemParams,
};
use crate::error::{Error, Result};
use crate::geometry::PolarPoint;
use crate::montecarlo::{point_seed, simulate, EavesdropperModel, Scenario, TrialConfig, WindowRule};
use crate::quadrature::{
    is_degenerate_relay, p_direct_noncolluding, p_relay_colluding_exact, p_relay_noncolluding_exact,
    p_relay_noncolluding_lower, p_selected_relay_noncolluding_lower, QuadratureConfig,
};

/// Every quantity the tool can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    /// Coefficient A of the colluding exponent [per m²]
    CoefficientA,
    /// Direct link, colluding eavesdroppers, closed form
    DirectColluding,
    /// Direct link, non-colluding eavesdroppers, fading quadrature
    DirectNoncolluding,
    /// Fixed relay, colluding, lower bound (closed form)
    RelayColludingLower,
    /// Fixed relay, colluding, exact (spatial quadrature)
    RelayColludingExact,
    /// Fixed relay, non-colluding, lower bound without the correlation term
    RelayNoncolludingLower,
    /// Fixed relay, non-colluding, exact (4-D quadrature)
    RelayNoncolludingExact,
    /// Relay nearest the midpoint, colluding, lower bound (closed form)
    SelectedRelayColludingLower,
    /// Relay nearest the midpoint, non-colluding, lower bound (series)
    SelectedRelayNoncolludingLower,
    /// Direct link, Monte Carlo, model from --model
    DirectMc,
    /// Fixed relay, Monte Carlo, model from --model
    RelayMc,
    /// Relay nearest the midpoint, Monte Carlo, model from --model
    SelectedRelayMc,
    /// Longest direct link meeting --delta [m]
    DMaxDirect,
    /// Longest relayed link meeting --delta [m]
    DMaxRelay,
    /// Relay-to-direct range ratio at --delta
    SecureGain,
    /// Relay density above which relaying extends the range [per m²]
    RelayDensityThreshold,
}

impl Quantity {
    pub fn name(&self) -> String {
        self.to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string()
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Quantity::DirectMc | Quantity::RelayMc | Quantity::SelectedRelayMc)
    }

    /// Model the value refers to: fixed by the analytic quantities, taken
    /// from `chosen` by the simulations and the thresholds.
    pub fn model_for(&self, chosen: EavesdropperModel) -> EavesdropperModel {
        use Quantity::*;
        match self {
            DirectColluding | RelayColludingExact | RelayColludingLower | SelectedRelayColludingLower => {
                EavesdropperModel::Colluding
            }
            DirectNoncolluding | RelayNoncolludingExact | RelayNoncolludingLower | SelectedRelayNoncolludingLower => {
                EavesdropperModel::NonColluding
            }
            _ => chosen,
        }
    }

    fn needs_delta(&self) -> bool {
        matches!(
            self,
            Quantity::DMaxDirect | Quantity::DMaxRelay | Quantity::SecureGain | Quantity::RelayDensityThreshold
        )
    }
}

/// Parameters a sweep axis can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GridParam {
    Alpha,
    LambdaE,
    LambdaR,
    DSd,
    Delta,
    RelayR,
    RelayTheta,
}

impl GridParam {
    pub fn column(&self) -> &'static str {
        match self {
            GridParam::Alpha => "alpha",
            GridParam::LambdaE => "lambda_e",
            GridParam::LambdaR => "lambda_r",
            GridParam::DSd => "d_sd",
            GridParam::Delta => "delta",
            GridParam::RelayR => "relay_r",
            GridParam::RelayTheta => "relay_theta",
        }
    }
}

/// One sweep axis, written `param=start:stop:points[:log]` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: GridParam,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub log: bool,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        if n == 1 {
            return vec![self.start];
        }
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.start;
                }
                if i == n - 1 {
                    return self.stop;
                }
                let t = i as f64 / (n - 1) as f64;
                if self.log {
                    (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + t * (self.stop - self.start)
                }
            })
            .collect()
    }
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (name, range) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("expected param=start:stop:points[:log], got `{s}`"))?;
        let param = GridParam::from_str(name.trim(), true).map_err(|_| {
            let names: Vec<String> = GridParam::value_variants()
                .iter()
                .map(|p| p.to_possible_value().unwrap().get_name().to_string())
                .collect();
            anyhow!(
                "unknown sweep parameter `{name}` (expected one of {})",
                names.join(", ")
            )
        })?;
        let parts: Vec<&str> = range.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            bail!("expected start:stop:points[:log] after `{name}=`, got `{range}`");
        }
        let start: f64 = parts[0]
            .trim()
            .parse()
            .with_context(|| format!("bad start `{}`", parts[0]))?;
        let stop: f64 = parts[1]
            .trim()
            .parse()
            .with_context(|| format!("bad stop `{}`", parts[1]))?;
        let points: usize = parts[2]
            .trim()
            .parse()
            .with_context(|| format!("bad point count `{}`", parts[2]))?;
        let log = match parts.get(3).map(|p| p.trim()) {
            None => false,
            Some("log") => true,
            Some(other) => bail!("unknown axis scale `{other}` (only `log` is accepted)"),
        };
        if points == 0 {
            bail!("an axis needs at least one point");
        }
        if !start.is_finite() || !stop.is_finite() {
            bail!("axis bounds must be finite");
        }
        if log && (start <= 0.0 || stop <= 0.0) {
            bail!("a log axis needs positive bounds");
        }
        Ok(Axis {
            param,
            start,
            stop,
            points,
            log,
        })
    }
}

/// Fixed settings shared by every grid point before axis values are applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    pub alpha: f64,
    pub lambda_e: f64,
    pub lambda_r: f64,
    pub d_sd: f64,
    pub delta: Option<f64>,
    pub model: EavesdropperModel,
    pub relay_r: f64,
    pub relay_theta: f64,
}

/// Per-column changes to the base settings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<EavesdropperModel>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub relay: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub label: String,
    pub quantity: Quantity,
    #[serde(default)]
    pub overrides: Overrides,
}

impl Column {
    pub fn plain(quantity: Quantity) -> Self {
        Self {
            label: quantity.name().replace('-', "_"),
            quantity,
            overrides: Overrides::default(),
        }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub seed: u64,
    pub trials: u64,
    pub window: WindowRule,
}

/// Resolved settings of one evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Point {
    pub params: SystemParams,
    pub delta: Option<f64>,
    pub model: EavesdropperModel,
    pub relay: PolarPoint,
}

impl Point {
    pub fn resolve(base: &BaseParams, assignments: &[(GridParam, f64)], overrides: &Overrides) -> Result<Self> {
        let mut b = *base;
        for &(param, v) in assignments {
            match param {
                GridParam::Alpha => b.alpha = v,
                GridParam::LambdaE => b.lambda_e = v,
                GridParam::LambdaR => b.lambda_r = v,
                GridParam::DSd => b.d_sd = v,
                GridParam::Delta => b.delta = Some(v),
                GridParam::RelayR => b.relay_r = v,
                GridParam::RelayTheta => b.relay_theta = v,
            }
        }
        if let Some(v) = overrides.lambda_e {
            b.lambda_e = v;
        }
        if let Some(v) = overrides.lambda_r {
            b.lambda_r = v;
        }
        if let Some(m) = overrides.model {
            b.model = m;
        }
        if let Some((r, theta)) = overrides.relay {
            b.relay_r = r;
            b.relay_theta = theta;
        }
        Ok(Self {
            params: SystemParams::new(b.alpha, b.lambda_e, b.lambda_r, b.d_sd)?,
            delta: b.delta,
            model: b.model,
            relay: PolarPoint::new(b.relay_r, b.relay_theta)?,
        })
    }
}

/// Result of evaluating one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Value {
    /// `None` when the quantity is unbounded.
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub successes: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
}

impl Value {
    fn exact(v: f64) -> Self {
        Self {
            value: Some(v),
            ci_low: None,
            ci_high: None,
            successes: None,
            trials: None,
        }
    }

    fn bound(b: DistanceBound) -> Self {
        match b {
            DistanceBound::Bounded(d) => Self::exact(d),
            DistanceBound::Unbounded => Self {
                value: None,
                ..Self::exact(0.0)
            },
        }
    }
}

fn target(point: &Point, q: Quantity) -> Result<SecrecyTarget> {
    match point.delta {
        Some(d) => SecrecyTarget::new(d),
        None => Err(Error::InvalidParameter {
            name: "delta",
            value: f64::NAN,
            reason: match q {
                Quantity::DMaxDirect => "d-max-direct needs --delta",
                Quantity::DMaxRelay => "d-max-relay needs --delta",
                Quantity::SecureGain => "secure-gain needs --delta",
                _ => "relay-density-threshold needs --delta",
            },
        }),
    }
}

/// Evaluates `q` at `point`; Monte Carlo quantities run with `seed`.
pub fn evaluate(
    q: Quantity,
    point: &Point,
    sim: &SimulationSettings,
    seed: u64,
    quad: &QuadratureConfig,
) -> Result<Value> {
    let p = &point.params;
    let relay = point.relay;
    let mc = |scenario: Scenario| -> Result<Value> {
        let window = sim.window.window(p, &scenario)?;
        let cfg = TrialConfig {
            trials: sim.trials,
            seed,
            window,
            eavesdropper_model: point.model,
            scenario,
        };
        let e = simulate(p, &cfg)?;
        Ok(Value {
            value: Some(e.p_hat),
            ci_low: Some(e.ci_low),
            ci_high: Some(e.ci_high),
            successes: Some(e.successes),
            trials: Some(e.trials),
        })
    };
    if q.needs_delta() {
        target(point, q)?;
    }
    Ok(match q {
        Quantity::CoefficientA => Value::exact(coefficient_a(p.lambda_e(), p.alpha())?),
        Quantity::DirectColluding => Value::exact(p_direct_colluding(p)),
        Quantity::DirectNoncolluding => Value::exact(p_direct_noncolluding(p, quad)?),
        Quantity::RelayColludingLower => Value::exact(p_relay_colluding_lower(relay, p)),
        Quantity::RelayColludingExact => Value::exact(p_relay_colluding_exact(relay, p, quad)?),
        Quantity::RelayNoncolludingLower => Value::exact(p_relay_noncolluding_lower(relay, p, quad)?),
        Quantity::RelayNoncolludingExact => Value::exact(p_relay_noncolluding_exact(relay, p, quad)?),
        Quantity::SelectedRelayColludingLower => Value::exact(p_selected_relay_colluding_lower(p)),
        Quantity::SelectedRelayNoncolludingLower => Value::exact(p_selected_relay_noncolluding_lower(p, quad)?),
        Quantity::DirectMc => mc(Scenario::Direct)?,
        Quantity::RelayMc => mc(Scenario::FixedRelay(relay))?,
        Quantity::SelectedRelayMc => mc(Scenario::SelectedRelay)?,
        Quantity::DMaxDirect => Value::bound(d_max_direct(target(point, q)?, p)),
        Quantity::DMaxRelay => Value::bound(d_max_relay(target(point, q)?, p)),
        Quantity::SecureGain => Value::exact(secure_gain(target(point, q)?, p)?),
        Quantity::RelayDensityThreshold => Value::exact(relay_density_threshold(target(point, q)?, p)),
    })
}

/// Single-evaluation record printed by `eval`.
#[derive(Debug, Clone, Serialize)]
pub struct EvalRecord {
    pub quantity: String,
    #[serde(flatten)]
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
    pub alpha: f64,
    pub lambda_e: f64,
    pub lambda_r: f64,
    pub d_sd: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub model: EavesdropperModel,
    pub relay_r: f64,
    pub relay_theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn eval_record(
    q: Quantity,
    point: &Point,
    sim: &SimulationSettings,
    quad: &QuadratureConfig,
) -> Result<EvalRecord> {
    let value = evaluate(q, point, sim, sim.seed, quad)?;
    let relay_quantity = matches!(
        q,
        Quantity::RelayColludingExact
            | Quantity::RelayColludingLower
            | Quantity::RelayNoncolludingExact
            | Quantity::RelayNoncolludingLower
            | Quantity::RelayMc
    );
    let note = if value.value.is_none() {
        Some("unbounded")
    } else if relay_quantity && is_degenerate_relay(point.relay, point.params.d_sd())? {
        Some("degenerate relay on an endpoint: single-hop value")
    } else {
        None
    };
    Ok(EvalRecord {
        quantity: q.name(),
        value,
        note,
        alpha: point.params.alpha(),
        lambda_e: point.params.lambda_e(),
        lambda_r: point.params.lambda_r(),
        d_sd: point.params.d_sd(),
        delta: point.delta,
        model: q.model_for(point.model),
        relay_r: point.relay.r(),
        relay_theta: point.relay.theta(),
        seed: q.is_stochastic().then_some(sim.seed),
    })
}

/// Everything needed to regenerate a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub name: String,
    pub base: BaseParams,
    pub axes: Vec<Axis>,
    pub columns: Vec<Column>,
    pub simulation: SimulationSettings,
    pub quadrature: QuadratureConfig,
    /// Free-form remarks carried into the manifest.
    #[serde(default)]
    pub notes: Vec<String>,
}

/// One failed cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub row: usize,
    pub column: String,
    pub message: String,
}

/// Rendered output of a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub csv: String,
    pub failures: Vec<Failure>,
}

fn fmt_f64(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}

impl Plan {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            bail!("a sweep needs one or two axes, got {}", self.axes.len());
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            bail!("both axes vary `{}`", self.axes[0].param.column());
        }
        if self.columns.is_empty() {
            bail!("nothing to evaluate: give at least one --quantity");
        }
        if self.simulation.trials == 0 {
            bail!("--trials must be at least 1");
        }
        self.quadrature.validate()?;
        if !self
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            || self.name.is_empty()
        {
            bail!("output name `{}` may only use letters, digits, `-` and `_`", self.name);
        }
        Ok(())
    }

    /// Grid points in row order, the first axis outermost.
    pub fn grid(&self) -> Vec<Vec<(GridParam, f64)>> {
        let mut rows: Vec<Vec<(GridParam, f64)>> = vec![Vec::new()];
        for axis in &self.axes {
            let values = axis.values();
            rows = rows
                .into_iter()
                .flat_map(|row| {
                    values.iter().map(move |&v| {
                        let mut r = row.clone();
                        r.push((axis.param, v));
                        r
                    })
                })
                .collect();
        }
        rows
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.axes.iter().map(|a| a.param.column().to_string()).collect();
        for c in &self.columns {
            h.push(c.label.clone());
            if c.quantity.is_stochastic() {
                h.push(format!("{}_ci_low", c.label));
                h.push(format!("{}_ci_high", c.label));
            }
        }
        h
    }

    /// Evaluates every cell. Row `i` uses seed `point_seed(seed, i)` for all
    /// its Monte Carlo columns.
    pub fn run(&self) -> anyhow::Result<Table> {
        self.validate()?;
        let mut csv = self.header().join(",");
        csv.push('\n');
        let mut failures = Vec::new();
        for (row, assignment) in self.grid().into_iter().enumerate() {
            let seed = point_seed(self.simulation.seed, row as u64);
            let mut cells: Vec<String> = assignment.iter().map(|&(_, v)| fmt_f64(v)).collect();
            for col in &self.columns {
                let width = if col.quantity.is_stochastic() { 3 } else { 1 };
                let outcome = Point::resolve(&self.base, &assignment, &col.overrides)
                    .and_then(|point| evaluate(col.quantity, &point, &self.simulation, seed, &self.quadrature));
                tracing::debug!(row, column = %col.label, "evaluated");
                match outcome {
                    Ok(Value {
                        value: Some(v),
                        ci_low,
                        ci_high,
                        ..
                    }) if v.is_finite() => {
                        cells.push(fmt_f64(v));
                        if width == 3 {
                            cells.push(ci_low.map(fmt_f64).unwrap_or_default());
                            cells.push(ci_high.map(fmt_f64).unwrap_or_default());
                        }
                    }
                    other => {
                        let message = match other {
                            Ok(_) => "unbounded".to_string(),
                            Err(e) => e.to_string(),
                        };
                        failures.push(Failure {
                            row,
                            column: col.label.clone(),
                            message,
                        });
                        cells.extend(std::iter::repeat_n(String::new(), width));
                    }
                }
            }
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        Ok(Table { csv, failures })
    }
}

impl Table {
    pub fn diagnostics_csv(&self) -> Option<String> {
        if self.failures.is_empty() {
            return None;
        }
        let mut s = String::from("row,column,message\n");
        for f in &self.failures {
            // messages never contain line breaks; quote for embedded commas
            s.push_str(&format!("{},{},\"{}\"\n", f.row, f.column, f.message.replace('"', "'")));
        }
        Some(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputChecksum {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Record of a run, sufficient to regenerate its data files byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub created: String,
    pub seed: u64,
    pub trials: u64,
    pub plan: Plan,
    pub outputs: Vec<OutputChecksum>,
}

impl fmt::Display for RunManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let json = serde_json::to_string_pretty(self).map_err(|_| fmt::Error)?;
        f.write_str(&json)
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Writes `data` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, data: &[u8]) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("{} is not a file path", path.display()))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(data)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

/// Files produced by [`execute`].
#[derive(Debug, Clone)]
pub struct Emitted {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub diagnostics: Option<PathBuf>,
    pub manifest_data: RunManifest,
    pub failures: usize,
}

/// Runs `plan` and writes `<name>.csv`, `<name>.manifest.json` and, when
/// cells failed, `<name>.diagnostics.csv` into `out_dir`.
pub fn execute(plan: &Plan, out_dir: &Path) -> anyhow::Result<Emitted> {
    let table = plan.run()?;
    let csv_path = out_dir.join(format!("{}.csv", plan.name));
    write_atomic(&csv_path, table.csv.as_bytes())?;
    let mut outputs = vec![OutputChecksum {
        file: format!("{}.csv", plan.name),
        bytes: table.csv.len() as u64,
        sha256: sha256_hex(table.csv.as_bytes()),
    }];
    let diagnostics = match table.diagnostics_csv() {
        Some(d) => {
            let path = out_dir.join(format!("{}.diagnostics.csv", plan.name));
            write_atomic(&path, d.as_bytes())?;
            outputs.push(OutputChecksum {
                file: format!("{}.diagnostics.csv", plan.name),
                bytes: d.len() as u64,
                sha256: sha256_hex(d.as_bytes()),
            });
            Some(path)
        }
        None => {
            // drop a sidecar left over from an earlier run
            let stale = out_dir.join(format!("{}.diagnostics.csv", plan.name));
            if stale.exists() {
                fs::remove_file(&stale).with_context(|| format!("removing {}", stale.display()))?;
            }
            None
        }
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed: plan.simulation.seed,
        trials: plan.simulation.trials,
        plan: plan.clone(),
        outputs,
    };
    let manifest_path = out_dir.join(format!("{}.manifest.json", plan.name));
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(&manifest_path, text.as_bytes())?;
    Ok(Emitted {
        csv: csv_path,
        manifest: manifest_path,
        diagnostics,
        manifest_data: manifest,
        failures: table.failures.len(),
    })
}

/// Reads a manifest, reruns its plan into `out_dir` and lists any output
/// whose checksum changed.
pub fn rerun(manifest_path: &Path, out_dir: &Path) -> anyhow::Result<(Emitted, Vec<String>)> {
    let text = fs::read_to_string(manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let old: RunManifest =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", manifest_path.display()))?;
    let mut plan = old.plan.clone();
    // the top-level copies win if someone edited them
    plan.simulation.seed = old.seed;
    plan.simulation.trials = old.trials;
    let emitted = execute(&plan, out_dir)?;
    let mut changed = Vec::new();
    for before in &old.outputs {
        match emitted.manifest_data.outputs.iter().find(|o| o.file == before.file) {
            Some(after) if after.sha256 == before.sha256 => {}
            _ => changed.push(before.file.clone()),
        }
    }
    for after in &emitted.manifest_data.outputs {
        if !old.outputs.iter().any(|o| o.file == after.file) {
            changed.push(after.file.clone());
        }
    }
    Ok((emitted, changed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::DEFAULT_TAIL_TOL;

    fn base() -> BaseParams {
        BaseParams {
            alpha: 4.0,
            lambda_e: 1e-5,
            lambda_r: 1e-3,
            d_sd: 20.0,
            delta: Some(0.7),
            model: EavesdropperModel::Colluding,
            relay_r: 0.0,
            relay_theta: 0.0,
        }
    }

    fn plan(axes: Vec<Axis>, columns: Vec<Column>) -> Plan {
        Plan {
            name: "t".into(),
            base: base(),
            axes,
            columns,
            simulation: SimulationSettings {
                seed: 3,
                trials: 500,
                window: WindowRule::Auto(DEFAULT_TAIL_TOL),
            },
            quadrature: QuadratureConfig::default(),
            notes: vec![],
        }
    }

    #[test]
    fn axis_parsing() {
        let a: Axis = "lambda-e=1e-5:1e-3:3:log".parse().unwrap();
        assert_eq!(a.param, GridParam::LambdaE);
        let v = a.values();
        assert_eq!(v[0], 1e-5);
        assert_eq!(v[2], 1e-3);
        assert!((v[1] - 1e-4).abs() < 1e-18);
        let b: Axis = "d-sd=10:20:3".parse().unwrap();
        assert_eq!(b.values(), vec![10.0, 15.0, 20.0]);
        assert_eq!("alpha=3:5:1".parse::<Axis>().unwrap().values(), vec![3.0]);
        for bad in [
            "beta=1:2:3",
            "alpha=1:2",
            "alpha=1:2:0",
            "lambda-e=0:1:3:log",
            "alpha=1:2:3:cubic",
            "alpha",
        ] {
            assert!(bad.parse::<Axis>().is_err(), "{bad}");
        }
    }

    #[test]
    fn every_quantity_evaluates() {
        let point = Point::resolve(&base(), &[], &Overrides::default()).unwrap();
        let sim = SimulationSettings {
            seed: 1,
            trials: 200,
            window: WindowRule::Auto(DEFAULT_TAIL_TOL),
        };
        let quad = QuadratureConfig::default();
        for q in Quantity::value_variants() {
            let v = evaluate(*q, &point, &sim, 1, &quad).unwrap();
            assert!(v.value.unwrap().is_finite(), "{q:?}");
            assert_eq!(v.ci_low.is_some(), q.is_stochastic());
        }
        let v = evaluate(Quantity::DirectColluding, &point, &sim, 1, &quad).unwrap();
        assert!((v.value.unwrap() - 0.98046).abs() < 1e-5);
    }

    #[test]
    fn missing_delta_is_reported() {
        let b = BaseParams { delta: None, ..base() };
        let point = Point::resolve(&b, &[], &Overrides::default()).unwrap();
        let sim = SimulationSettings {
            seed: 1,
            trials: 1,
            window: WindowRule::Auto(DEFAULT_TAIL_TOL),
        };
        let err = evaluate(Quantity::DMaxDirect, &point, &sim, 1, &QuadratureConfig::default()).unwrap_err();
        assert!(err.to_string().contains("--delta"));
    }

    #[test]
    fn singleton_grid_gives_one_row() {
        let p = plan(
            vec!["d-sd=20:20:1".parse().unwrap()],
            vec![Column::plain(Quantity::DirectColluding)],
        );
        let t = p.run().unwrap();
        assert_eq!(t.csv, "d_sd,direct_colluding\n20.0,0.9804543338284276\n");
    }

    #[test]
    fn two_axes_and_failures() {
        let p = plan(
            vec!["alpha=3:4:2".parse().unwrap(), "lambda-e=0:1e-4:2".parse().unwrap()],
            vec![Column::plain(Quantity::DMaxDirect), Column::plain(Quantity::DirectMc)],
        );
        let t = p.run().unwrap();
        let lines: Vec<&str> = t.csv.lines().collect();
        assert_eq!(
            lines[0],
            "alpha,lambda_e,d_max_direct,direct_mc,direct_mc_ci_low,direct_mc_ci_high"
        );
        assert_eq!(lines.len(), 5);
        // λ_E = 0 leaves the direct range unbounded
        assert!(lines[1].starts_with("3.0,0.0,,1.0,"));
        assert_eq!(t.failures.len(), 2);
        assert!(t.diagnostics_csv().unwrap().contains("unbounded"));
    }

    #[test]
    fn invalid_points_fail_per_cell() {
        let p = plan(
            vec!["alpha=1.5:4:2".parse().unwrap()],
            vec![Column::plain(Quantity::DirectColluding)],
        );
        let t = p.run().unwrap();
        assert_eq!(t.failures.len(), 1);
        assert!(t.failures[0].message.contains("alpha > 2"));
        assert!(t.csv.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn execute_and_rerun_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = plan(
            vec!["lambda-e=1e-5:1e-4:2:log".parse().unwrap()],
            vec![
                Column::plain(Quantity::DirectColluding),
                Column::plain(Quantity::DirectMc),
            ],
        );
        let first = execute(&p, dir.path()).unwrap();
        let before = fs::read(&first.csv).unwrap();
        let again = dir.path().join("again");
        let (second, changed) = rerun(&first.manifest, &again).unwrap();
        assert!(changed.is_empty(), "{changed:?}");
        assert_eq!(before, fs::read(&second.csv).unwrap());
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(&first.manifest).unwrap()).unwrap();
        assert_eq!(m.outputs[0].sha256, sha256_hex(&before));
        assert_eq!(m.plan, p);
    }
}
