//! Experiment configuration: one JSON document, schema-checked.
//!
//! Every section is optional; missing fields take the defaults of the
//! corresponding `*Params` type. Unknown fields are rejected.

use std::fmt;

use clap::ValueEnum;
use critlog_core::rgflow::{Branch, FlowMode};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Green,
    Bubble,
    Decompose,
    Flow,
    Predict,
    McWsaw,
    McPhi4,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Green => "green",
            Command::Bubble => "bubble",
            Command::Decompose => "decompose",
            Command::Flow => "flow",
            Command::Predict => "predict",
            Command::McWsaw => "mc-wsaw",
            Command::McPhi4 => "mc-phi4",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<String>,
    /// Directory of the decomposition cache; off when absent.
    #[serde(default)]
    pub cache_dir: Option<String>,
    #[serde(default)]
    pub green: Option<GreenParams>,
    #[serde(default)]
    pub bubble: Option<BubbleParams>,
    #[serde(default)]
    pub decompose: Option<DecomposeParams>,
    #[serde(default)]
    pub flow: Option<FlowParams>,
    #[serde(default)]
    pub predict: Option<PredictParams>,
    #[serde(default, rename = "mc-wsaw")]
    pub mc_wsaw: Option<McWsawParams>,
    #[serde(default, rename = "mc-phi4")]
    pub mc_phi4: Option<McPhi4Params>,
    #[serde(default)]
    pub verify: Option<VerifyParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenRoute {
    /// ℤ^d, Bessel heat-kernel integral.
    Heat,
    /// ℤ^d, Fourier quadrature.
    Fourier,
    /// Finite torus, dense inverse.
    Torus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenParams {
    pub d: usize,
    pub m2: f64,
    pub route: GreenRoute,
    /// Table over symmetry classes with `|x|_∞ ≤ radius` (ℤ^d routes).
    pub radius: i64,
    /// Explicit displacements; replaces the class table when given.
    pub points: Option<Vec<Vec<i64>>>,
    pub resolution: usize,
    /// Torus side for the `torus` route.
    pub side: usize,
}

impl Default for GreenParams {
    fn default() -> Self {
        GreenParams { d: 4, m2: 0.0, route: GreenRoute::Heat, radius: 4, points: None, resolution: 3, side: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BubbleRoute {
    Time,
    Spatial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleParams {
    pub n: Vec<usize>,
    pub m2: Vec<f64>,
    pub route: BubbleRoute,
    /// Box radius of the spatial route.
    pub radius: i64,
}

impl Default for BubbleParams {
    fn default() -> Self {
        BubbleParams { n: vec![0, 1], m2: vec![1e-2, 1e-3, 1e-4], route: BubbleRoute::Time, radius: 48 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeParams {
    pub d: usize,
    pub l: u64,
    pub m2: f64,
    pub scales: u32,
    pub cutoff: i64,
    /// Recompute on a cache hit and require bitwise equality.
    pub verify_cache: bool,
}

impl Default for DecomposeParams {
    fn default() -> Self {
        DecomposeParams { d: 4, l: 2, m2: 0.0, scales: 40, cutoff: 4, verify_cache: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    pub n: usize,
    pub p: u32,
    pub l: u64,
    pub m2: f64,
    pub g0: f64,
    pub branch: Branch,
    pub a: Vec<i64>,
    /// `null` runs the one-point flow.
    pub b: Option<Vec<i64>>,
    /// Endpoints `b` of a scan; replaces `b` when non-empty.
    pub scan: Vec<Vec<i64>>,
    /// Defaults to 1 with a pair, 0 without.
    pub lambda_b0: Option<f64>,
    /// Defaults to `2 j_ab + 30` with a pair, 60 without.
    pub j_max: Option<u32>,
    /// Decomposition depth; defaults to the largest `j_max`.
    pub scales: Option<u32>,
    pub cutoff: i64,
    pub mode: FlowMode,
    pub omega: f64,
    pub stability: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            n: 1,
            p: 2,
            l: 2,
            m2: 0.0,
            g0: 0.02,
            branch: Branch::Plus,
            a: vec![0; 4],
            b: Some(vec![16, 0, 0, 0]),
            scan: Vec::new(),
            lambda_b0: None,
            j_max: None,
            scales: None,
            cutoff: 0,
            mode: FlowMode::Default,
            omega: 2.0,
            stability: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictParams {
    pub n: Vec<usize>,
    pub p: Vec<u32>,
    pub g0: f64,
    pub l: u64,
    /// Axis separation of the two-point flows.
    pub separation: i64,
    /// Depth of the one-point flows.
    pub star_scales: u32,
}

impl Default for PredictParams {
    fn default() -> Self {
        PredictParams { n: vec![0, 1, 2, 3], p: vec![1, 2], g0: 0.02, l: 2, separation: 1 << 20, star_scales: 60 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McWsawParams {
    pub d: usize,
    pub side: usize,
    pub g: f64,
    pub nu: f64,
    pub p: u32,
    pub a: usize,
    /// `null` samples the star network (free endpoints).
    pub b: Option<usize>,
    pub samples: u64,
    /// Also evaluate the exact oracle (tori with at most 3 sites, `ν > 0`).
    pub oracle: bool,
}

impl Default for McWsawParams {
    fn default() -> Self {
        McWsawParams { d: 1, side: 2, g: 0.01, nu: 1.0, p: 1, a: 0, b: Some(1), samples: 1_000_000, oracle: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McPhi4Params {
    pub d: usize,
    pub side: usize,
    pub n: usize,
    pub g: f64,
    pub nu: f64,
    pub a: usize,
    pub b: usize,
    pub sweeps: u64,
    pub therm: u64,
}

impl Default for McPhi4Params {
    fn default() -> Self {
        McPhi4Params { d: 1, side: 2, n: 2, g: 1.0, nu: 1.0, a: 0, b: 1, sweeps: 1_000_000, therm: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    /// Walk-network Monte Carlo samples per check.
    pub samples: u64,
    /// Spin-model sweeps per check.
    pub sweeps: u64,
    /// Tolerance of the exact identities.
    pub tol: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { samples: 200_000, sweeps: 200_000, tol: 1e-10 }
    }
}

/// Parameters of the selected subcommand, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Green(GreenParams),
    Bubble(BubbleParams),
    Decompose(DecomposeParams),
    Flow(FlowParams),
    Predict(PredictParams),
    McWsaw(McWsawParams),
    McPhi4(McPhi4Params),
    Verify(VerifyParams),
}

impl ExperimentConfig {
    pub fn params(&self, cmd: Command) -> Params {
        match cmd {
            Command::Green => Params::Green(self.green.clone().unwrap_or_default()),
            Command::Bubble => Params::Bubble(self.bubble.clone().unwrap_or_default()),
            Command::Decompose => Params::Decompose(self.decompose.clone().unwrap_or_default()),
            Command::Flow => Params::Flow(self.flow.clone().unwrap_or_default()),
            Command::Predict => Params::Predict(self.predict.clone().unwrap_or_default()),
            Command::McWsaw => Params::McWsaw(self.mc_wsaw.clone().unwrap_or_default()),
            Command::McPhi4 => Params::McPhi4(self.mc_phi4.clone().unwrap_or_default()),
            Command::Verify => Params::Verify(self.verify.clone().unwrap_or_default()),
        }
    }
}

/// The part of a run that determines its outputs. Output directory,
/// thread count and cache location are excluded.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub seed: u64,
    pub format: Format,
    pub params: Params,
}

impl Resolved {
    /// Canonical JSON (sorted keys).
    pub fn canonical(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }
}

/// Schema or value error with its location.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    pub message: String,
    /// Dotted path of the offending field.
    pub field: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
}

impl ConfigError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        ConfigError { message: message.into(), field: Some(field.to_string()), line: None, column: None }
    }

    pub fn plain(message: impl Into<String>) -> Self {
        ConfigError { message: message.into(), field: None, line: None, column: None }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        write!(f, "{}", self.message)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        Ok(())
    }
}

/// Parse a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let line = inner.line();
        let column = inner.column();
        let message = strip_position(&inner.to_string());
        ConfigError {
            message,
            field: (path != ".").then_some(path),
            line: (line > 0).then_some(line),
            column: (line > 0).then_some(column),
        }
    })?;
    de.end().map_err(|e| ConfigError {
        message: strip_position(&e.to_string()),
        field: None,
        line: Some(e.line()),
        column: Some(e.column()),
    })?;
    Ok(cfg)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn require(ok: bool, field: &str, msg: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::field(field, msg))
    }
}

/// Value checks that the schema cannot express. Anything finer is left to
/// the core routines, whose argument errors are also reported as config
/// errors.
pub fn validate(params: &Params) -> Result<(), ConfigError> {
    match params {
        Params::Green(p) => {
            require(p.d >= 1, "green.d", "must be >= 1")?;
            require(p.radius >= 0, "green.radius", "must be >= 0")?;
            require(p.resolution >= 2, "green.resolution", "must be >= 2")?;
            if let Some(pts) = &p.points {
                for (i, x) in pts.iter().enumerate() {
                    require(x.len() == p.d, &format!("green.points[{i}]"), "needs d coordinates")?;
                }
            }
        }
        Params::Bubble(p) => {
            require(!p.n.is_empty(), "bubble.n", "must not be empty")?;
            require(p.m2.len() >= 2, "bubble.m2", "needs at least two masses for a slope")?;
            require(p.m2.iter().all(|&m| m > 0.0), "bubble.m2", "masses must be > 0")?;
        }
        Params::Decompose(p) => {
            require(p.scales >= 1, "decompose.scales", "must be >= 1")?;
            require(p.cutoff >= 0, "decompose.cutoff", "must be >= 0")?;
        }
        Params::Flow(p) => {
            require(p.a.len() == 4, "flow.a", "needs 4 coordinates")?;
            if let Some(b) = &p.b {
                require(b.len() == 4, "flow.b", "needs 4 coordinates")?;
            }
            for (i, b) in p.scan.iter().enumerate() {
                require(b.len() == 4, &format!("flow.scan[{i}]"), "needs 4 coordinates")?;
            }
            require(p.cutoff >= 0, "flow.cutoff", "must be >= 0")?;
        }
        Params::Predict(p) => {
            require(!p.n.is_empty() && !p.p.is_empty(), "predict", "n and p must not be empty")?;
            require(p.separation >= 1, "predict.separation", "must be >= 1")?;
        }
        Params::McWsaw(p) => {
            require(p.samples >= 1, "mc-wsaw.samples", "must be >= 1")?;
        }
        Params::McPhi4(p) => {
            require(p.sweeps >= 1, "mc-phi4.sweeps", "must be >= 1")?;
        }
        Params::Verify(p) => {
            require(p.tol > 0.0, "verify.tol", "must be > 0")?;
        }
    }
    Ok(())
}
