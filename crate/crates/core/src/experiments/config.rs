//! Scenario configuration files.
//!
//! ```json
//! {
//!   "version": 1,
//!   "scenario": "blowup",
//!   "params": { "alpha": 1.0, "beta": 0.9 },
//!   "grid": { "n": 8192, "length": 64.0 },
//!   "solver": { "dt": 1e-3, "t_end": 25.0 },
//!   "seed": 0,
//!   "output_dir": "out/blowup",
//!   "acceptance": { "relative_error": { "max": 0.02 } }
//! }
//! ```
//!
//! Unknown keys are rejected at every level, including inside `params`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dynamics::{Scheme, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::{Grid, DEFAULT_LENGTH, DEFAULT_N};
use crate::linops::OperatorKind;
use crate::modulation::TierCoefficients;
use crate::rhs::Tolerance;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n: DEFAULT_N,
            length: DEFAULT_LENGTH,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n, self.length)
    }
}

/// Bounds on one headline metric. Either side may be omitted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Threshold {
    pub fn admits(&self, value: f64) -> bool {
        value.is_finite()
            && self.min.is_none_or(|m| value >= m)
            && self.max.is_none_or(|m| value <= m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceParams {
    pub scheme: Scheme,
    pub dt_coarse: f64,
    pub dt_fine: f64,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        ConvergenceParams {
            scheme: Scheme::StrangRk4,
            dt_coarse: 2e-3,
            dt_fine: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolitonPropagationParams {
    pub alpha: f64,
    /// Repeat the run with the local cubic nonlinearity.
    pub compare_local: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceParams>,
}

impl Default for SolitonPropagationParams {
    fn default() -> Self {
        SolitonPropagationParams {
            alpha: 1.0,
            compare_local: true,
            convergence: Some(ConvergenceParams::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupParams {
    pub alpha: f64,
    pub beta: f64,
    /// Closed-form tracking is checked up to this fraction of the blow-up time.
    pub track_fraction: f64,
    /// Fit window for `1/‖u‖_∞`, as fractions of the detection time.
    pub extrapolation_window: [f64; 2],
}

impl Default for BlowupParams {
    fn default() -> Self {
        BlowupParams {
            alpha: 1.0,
            beta: 0.9,
            track_fraction: 0.8,
            extrapolation_window: [0.85, 0.95],
        }
    }
}

/// Powers of ε multiplying each entry of [`StabilityWindowParams::shape`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TierPowers {
    pub a_e: i32,
    pub b_e: i32,
    pub a_o: i32,
    pub b_o: i32,
}

impl Default for TierPowers {
    fn default() -> Self {
        TierPowers {
            a_e: 2,
            b_e: 2,
            a_o: 1,
            b_o: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityWindowParams {
    pub epsilons: Vec<f64>,
    /// Crossing level: `T*(ε)` is the first `|t|` with `d(u(t), Q) > k·ε`.
    pub k: f64,
    /// Runs that never cross are censored here.
    pub t_max: f64,
    pub shape: TierCoefficients,
    pub powers: TierPowers,
    /// `‖η‖_{H¹}` of each seed is drawn from `[0, eta_fill·ε²]`.
    pub eta_fill: f64,
    pub tier_constant: f64,
    pub backward: bool,
    /// Sampling interval for d, Λ, Ξ.
    pub sample_every: f64,
}

impl Default for StabilityWindowParams {
    fn default() -> Self {
        StabilityWindowParams {
            epsilons: vec![1e-2, 3e-3, 1e-3, 3e-4],
            k: 10.0,
            t_max: 200.0,
            shape: TierCoefficients {
                a_e: 0.0,
                b_e: 0.0,
                a_o: 1.0,
                b_o: -1.0,
            },
            powers: TierPowers::default(),
            eta_fill: 0.5,
            tier_constant: 1.0,
            backward: true,
            sample_every: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowerBoundParams {
    pub alpha: f64,
    pub beta: f64,
    pub t_window: f64,
    pub samples: usize,
    /// Fraction of the blow-up time for the L² divergence check.
    pub divergence_fraction: f64,
    /// Grid for the divergence quadrature; the profile is sharp there.
    pub divergence_grid: GridConfig,
}

impl Default for LowerBoundParams {
    fn default() -> Self {
        LowerBoundParams {
            alpha: 1.0,
            beta: 0.99,
            t_window: 10.0,
            samples: 101,
            divergence_fraction: 0.99,
            divergence_grid: GridConfig {
                n: 65536,
                length: 64.0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationOdeParams {
    /// Size of the `b_o`-only and `a_o`-only kicks.
    pub delta: f64,
    /// Horizon for the secular-growth check.
    pub secular_time: f64,
    /// Size of the generic tiered perturbation; `0` skips that run.
    pub epsilon: f64,
    pub generic_time: f64,
    /// Spacing of the fitted samples used for finite differences.
    pub sample_every: f64,
    pub tolerance: Tolerance,
}

impl Default for ModulationOdeParams {
    fn default() -> Self {
        ModulationOdeParams {
            delta: 1e-3,
            secular_time: 0.5,
            epsilon: 1e-2,
            generic_time: 2.0,
            sample_every: 0.01,
            tolerance: Tolerance { abs: 1e-5, rel: 0.05 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumParams {
    pub operators: Vec<OperatorKind>,
    pub n_eigs: usize,
    pub gap_margin: f64,
    pub identity_pairs: usize,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        SpectrumParams {
            operators: vec![OperatorKind::He, OperatorKind::LMinus],
            n_eigs: 40,
            gap_margin: 1e-3,
            identity_pairs: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    SolitonPropagation(SolitonPropagationParams),
    Blowup(BlowupParams),
    StabilityWindow(StabilityWindowParams),
    LowerBound(LowerBoundParams),
    ModulationOdeCheck(ModulationOdeParams),
    Spectrum(SpectrumParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SolitonPropagation,
    Blowup,
    StabilityWindow,
    LowerBound,
    ModulationOdeCheck,
    Spectrum,
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            Scenario::SolitonPropagation(_) => ScenarioKind::SolitonPropagation,
            Scenario::Blowup(_) => ScenarioKind::Blowup,
            Scenario::StabilityWindow(_) => ScenarioKind::StabilityWindow,
            Scenario::LowerBound(_) => ScenarioKind::LowerBound,
            Scenario::ModulationOdeCheck(_) => ScenarioKind::ModulationOdeCheck,
            Scenario::Spectrum(_) => ScenarioKind::Spectrum,
        }
    }

    fn params_value(&self) -> Value {
        let v = match self {
            Scenario::SolitonPropagation(p) => serde_json::to_value(p),
            Scenario::Blowup(p) => serde_json::to_value(p),
            Scenario::StabilityWindow(p) => serde_json::to_value(p),
            Scenario::LowerBound(p) => serde_json::to_value(p),
            Scenario::ModulationOdeCheck(p) => serde_json::to_value(p),
            Scenario::Spectrum(p) => serde_json::to_value(p),
        };
        v.expect("params serialise")
    }

    fn from_parts(kind: ScenarioKind, params: Value) -> std::result::Result<Scenario, serde_json::Error> {
        Ok(match kind {
            ScenarioKind::SolitonPropagation => Scenario::SolitonPropagation(serde_json::from_value(params)?),
            ScenarioKind::Blowup => Scenario::Blowup(serde_json::from_value(params)?),
            ScenarioKind::StabilityWindow => Scenario::StabilityWindow(serde_json::from_value(params)?),
            ScenarioKind::LowerBound => Scenario::LowerBound(serde_json::from_value(params)?),
            ScenarioKind::ModulationOdeCheck => Scenario::ModulationOdeCheck(serde_json::from_value(params)?),
            ScenarioKind::Spectrum => Scenario::Spectrum(serde_json::from_value(params)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct ScenarioConfig {
    pub version: u32,
    pub scenario: Scenario,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub acceptance: BTreeMap<String, Threshold>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: u32,
    scenario: ScenarioKind,
    #[serde(default = "empty_object")]
    params: Value,
    #[serde(default)]
    grid: GridConfig,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    seed: u64,
    output_dir: PathBuf,
    #[serde(default)]
    acceptance: BTreeMap<String, Threshold>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl TryFrom<RawConfig> for ScenarioConfig {
    type Error = String;

    fn try_from(raw: RawConfig) -> std::result::Result<Self, String> {
        let scenario = Scenario::from_parts(raw.scenario, raw.params).map_err(|e| format!("params: {e}"))?;
        Ok(ScenarioConfig {
            version: raw.version,
            scenario,
            grid: raw.grid,
            solver: raw.solver,
            seed: raw.seed,
            output_dir: raw.output_dir,
            acceptance: raw.acceptance,
        })
    }
}

impl From<ScenarioConfig> for RawConfig {
    fn from(c: ScenarioConfig) -> Self {
        RawConfig {
            version: c.version,
            scenario: c.scenario.kind(),
            params: c.scenario.params_value(),
            grid: c.grid,
            solver: c.solver,
            seed: c.seed,
            output_dir: c.output_dir,
            acceptance: c.acceptance,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(config_err(msg))
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, output_dir: impl Into<PathBuf>) -> Self {
        ScenarioConfig {
            version: SCHEMA_VERSION,
            scenario,
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            seed: 0,
            output_dir: output_dir.into(),
            acceptance: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serialises")
    }

    /// SHA-256 of the canonical (key-sorted) JSON form.
    pub fn hash(&self) -> String {
        hash_value(&self.to_value())
    }

    pub fn with_threshold(mut self, metric: &str, threshold: Threshold) -> Self {
        self.acceptance.insert(metric.to_string(), threshold);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        self.grid.build()?;
        self.solver.validate()?;
        for (name, t) in &self.acceptance {
            require(t.min.is_some() || t.max.is_some(), "acceptance entries need `min` or `max`")?;
            if !is_known_metric(&self.scenario, name) {
                return Err(config_err(format!(
                    "acceptance metric `{name}` is not produced by scenario {:?}",
                    self.scenario.kind()
                )));
            }
        }
        match &self.scenario {
            Scenario::SolitonPropagation(p) => {
                require(positive(p.alpha), "alpha must be positive")?;
                if let Some(c) = &p.convergence {
                    require(positive(c.dt_coarse) && positive(c.dt_fine), "convergence steps must be positive")?;
                    require(c.dt_coarse > c.dt_fine, "dt_coarse must exceed dt_fine")?;
                }
            }
            Scenario::Blowup(p) => {
                require(positive(p.alpha) && positive(p.beta), "alpha and beta must be positive")?;
                require(p.track_fraction > 0.0 && p.track_fraction < 1.0, "track_fraction must lie in (0, 1)")?;
                let [lo, hi] = p.extrapolation_window;
                require(0.0 < lo && lo < hi && hi <= 1.0, "extrapolation_window must satisfy 0 < lo < hi <= 1")?;
            }
            Scenario::StabilityWindow(p) => {
                require(!p.epsilons.is_empty(), "epsilons must not be empty")?;
                require(
                    p.epsilons.iter().all(|&e| e.is_finite() && (0.0..=0.05).contains(&e)),
                    "each epsilon must lie in [0, 0.05]",
                )?;
                require(positive(p.k), "k must be positive")?;
                require(positive(p.t_max), "t_max must be positive")?;
                require(positive(p.sample_every), "sample_every must be positive")?;
                require(p.eta_fill.is_finite() && p.eta_fill >= 0.0, "eta_fill must be non-negative")?;
                require(positive(p.tier_constant), "tier_constant must be positive")?;
                let w = &p.powers;
                require(
                    w.a_e >= 1 && w.b_e >= 1 && w.a_o >= 1 && w.b_o >= 2,
                    "powers must respect the data tiers (a_e, b_e, a_o >= 1; b_o >= 2)",
                )?;
            }
            Scenario::LowerBound(p) => {
                require(positive(p.alpha) && positive(p.beta), "alpha and beta must be positive")?;
                require((p.alpha - p.beta).abs() <= 0.1, "|alpha - beta| must not exceed 0.1")?;
                require(positive(p.t_window), "t_window must be positive")?;
                require(p.samples >= 2, "samples must be at least 2")?;
                require(
                    p.divergence_fraction > 0.0 && p.divergence_fraction < 1.0,
                    "divergence_fraction must lie in (0, 1)",
                )?;
                p.divergence_grid.build()?;
            }
            Scenario::ModulationOdeCheck(p) => {
                require(positive(p.delta) && p.delta <= 0.05, "delta must lie in (0, 0.05]")?;
                require(positive(p.secular_time), "secular_time must be positive")?;
                require(p.epsilon.is_finite() && (0.0..=0.05).contains(&p.epsilon), "epsilon must lie in [0, 0.05]")?;
                require(positive(p.generic_time), "generic_time must be positive")?;
                require(positive(p.sample_every), "sample_every must be positive")?;
                require(
                    p.tolerance.abs >= 0.0 && p.tolerance.rel >= 0.0 && (p.tolerance.abs > 0.0 || p.tolerance.rel > 0.0),
                    "tolerance needs a positive abs or rel part",
                )?;
            }
            Scenario::Spectrum(p) => {
                require(!p.operators.is_empty(), "operators must not be empty")?;
                require(p.gap_margin > 0.0 && p.gap_margin < 0.5, "gap_margin must lie in (0, 0.5)")?;
            }
        }
        Ok(())
    }
}

pub fn hash_value(v: &Value) -> String {
    let bytes = serde_json::to_vec(v).expect("value serialises");
    hex::encode(Sha256::digest(&bytes))
}

/// Metric names each scenario reports; indexed families are matched by prefix.
pub fn known_metrics(kind: ScenarioKind) -> &'static [&'static str] {
    match kind {
        ScenarioKind::SolitonPropagation => &[
            "sup_h1_error",
            "local_sup_h1_error",
            "mass_drift",
            "energy_drift",
            "mass_quadrature_error",
            "energy_quadrature_error",
            "convergence_ratio",
        ],
        ScenarioKind::Blowup => &[
            "blowup_detected",
            "expected_time",
            "detected_time",
            "detected_relative_error",
            "estimated_time",
            "relative_error",
            "tracking_error_unit",
            "tracking_error",
            "max_linf",
        ],
        ScenarioKind::StabilityWindow => &[
            "t_star_monotone",
            "t_star_slope",
            "crossings",
            "xi_constant",
            "xi_exponent",
            "lambda_constant",
            "t_star.",
            "xi_sup.",
            "lambda_sup.",
            "d_sup.",
        ],
        ScenarioKind::LowerBound => &[
            "ratio_min",
            "ratio_max",
            "initial_difference",
            "initial_ratio",
            "divergence_factor",
        ],
        ScenarioKind::ModulationOdeCheck => &[
            "standing_theta_dot_error",
            "standing_fd_theta_error",
            "standing_max_discrepancy",
            "secular_a_o",
            "secular_a_o_expected",
            "secular_relative_error",
            "a_o_only_drift",
            "constraint_residual",
            "generic_exact_ratio",
            "generic_formula_ratio",
            "generic.",
        ],
        ScenarioKind::Spectrum => &[
            "identity_profile_max",
            "conjugation_max",
            "sigma1_plain",
            "sigma1_corrected",
            "kernel_max",
            "chain_max",
            "gap_count.",
            "zero_cluster.",
            "smallest.",
        ],
    }
}

fn is_known_metric(s: &Scenario, name: &str) -> bool {
    known_metrics(s.kind())
        .iter()
        .any(|m| if m.ends_with('.') { name.starts_with(m) } else { name == *m })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOWUP: &str = r#"{
        "version": 1,
        "scenario": "blowup",
        "params": { "alpha": 1.0, "beta": 0.9 },
        "grid": { "n": 256, "length": 64.0 },
        "solver": { "dt": 1e-3, "t_end": 2.0 },
        "output_dir": "out",
        "acceptance": { "relative_error": { "max": 0.02 } }
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ScenarioConfig::from_json(BLOWUP).unwrap();
        assert!(matches!(cfg.scenario, Scenario::Blowup(ref p) if p.beta == 0.9 && p.track_fraction == 0.8));
        let back: ScenarioConfig = serde_json::from_value(cfg.to_value()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn rejects_unknown_keys() {
        let top = BLOWUP.replace("\"version\": 1,", "\"version\": 1, \"colour\": 3,");
        assert!(ScenarioConfig::from_json(&top).is_err());
        let inner = BLOWUP.replace("\"beta\": 0.9", "\"beta\": 0.9, \"gamma\": 1");
        assert!(ScenarioConfig::from_json(&inner).is_err());
        let solver = BLOWUP.replace("\"t_end\": 2.0", "\"t_end\": 2.0, \"tol\": 1");
        assert!(ScenarioConfig::from_json(&solver).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let v = BLOWUP.replace("\"version\": 1", "\"version\": 2");
        assert!(ScenarioConfig::from_json(&v).is_err());
        let m = BLOWUP.replace("relative_error", "nonsense");
        assert!(ScenarioConfig::from_json(&m).is_err());
        let g = BLOWUP.replace("\"n\": 256", "\"n\": 255");
        assert!(ScenarioConfig::from_json(&g).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::from_json(BLOWUP).unwrap();
        let mut b = a.clone();
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn threshold_bounds() {
        let t = Threshold {
            min: Some(1.0),
            max: None,
        };
        assert!(t.admits(1.0) && !t.admits(0.5) && !t.admits(f64::NAN));
    }
}
