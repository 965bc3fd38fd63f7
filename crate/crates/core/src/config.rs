//! JSON experiment descriptions.
//!
//! ```json
//! {
//!   "pipeline": "propagate",
//!   "model": { "kind": "harmonic" },
//!   "grid": { "x_min": -7.0, "x_max": 7.0, "intervals": 600 },
//!   "slicing": { "block_time": "2*pi/16", "slices": 4, "blocks": 16 },
//!   "initial_state": { "kind": "gaussian", "alpha": 2.0, "x_start": 1.0 },
//!   "snapshot_stride": 1
//! }
//! ```
//!
//! `block_time` takes a number or a product/quotient of numbers and `pi`.
//! Everything is checked by [`ExperimentConfig::validate`] before any
//! matrix is built.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::DEFAULT_MIN_NORM;
use crate::error::{Error, Result};
use crate::lattice::{SpatialGrid, TimeSlicing};
use crate::model::{DoubleWellParams, PotentialModel};
use crate::spectral::DEFAULT_PEAK_THRESHOLD;
use crate::tunneling::TrialParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Propagate,
    Spectrum,
    Tunnel,
    Normcheck,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Propagate => "propagate",
            Pipeline::Spectrum => "spectrum",
            Pipeline::Tunnel => "tunnel",
            Pipeline::Normcheck => "normcheck",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Harmonic,
    DoubleWell { alpha: f64, x_min: f64 },
    Custom { coeffs: Vec<f64>, mass: f64 },
}

impl ModelSpec {
    pub fn build(&self) -> Result<PotentialModel> {
        match self {
            ModelSpec::Harmonic => Ok(PotentialModel::harmonic()),
            ModelSpec::DoubleWell { alpha, x_min } => {
                PotentialModel::double_well(DoubleWellParams::new(*alpha, *x_min)?)
            }
            ModelSpec::Custom { coeffs, mass } => PotentialModel::custom(coeffs.clone(), *mass),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub intervals: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeSpec {
    Value(f64),
    Expr(String),
}

impl TimeSpec {
    pub fn resolve(&self) -> Result<f64> {
        match self {
            TimeSpec::Value(v) => Ok(*v),
            TimeSpec::Expr(s) => parse_time_expr(s),
        }
    }
}

/// Evaluates `a*b/c...` where each factor is a decimal number or `pi`.
fn parse_time_expr(expr: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot parse time expression `{expr}`"));
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = expr.trim();
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        let factor = match token {
            "pi" | "PI" | "π" => std::f64::consts::PI,
            _ => token.parse::<f64>().map_err(|_| bad())?,
        };
        if op == '*' {
            value *= factor;
        } else {
            value /= factor;
        }
        if end == rest.len() {
            return Ok(value);
        }
        op = rest[end..].chars().next().ok_or_else(bad)?;
        rest = &rest[end + 1..];
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlicingSpec {
    pub block_time: TimeSpec,
    pub slices: usize,
    pub blocks: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKeyword {
    Fit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrialSpec {
    Fit(FitKeyword),
    Params(TrialParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateSpec {
    Gaussian { alpha: f64, x_start: f64 },
    Localized { trial: TrialSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub pipeline: Option<Pipeline>,
    pub model: ModelSpec,
    pub grid: GridSpec,
    pub slicing: SlicingSpec,
    #[serde(default)]
    pub initial_state: Option<InitialStateSpec>,
    /// Propagation steps for `propagate` and `tunnel`; defaults to `slicing.blocks`.
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub snapshot_stride: Option<usize>,
    #[serde(default)]
    pub peak_threshold: Option<f64>,
    #[serde(default)]
    pub min_norm: Option<f64>,
    /// Rescale `G(t_i)` on the trace ladder; defaults to true.
    #[serde(default)]
    pub renormalize: Option<bool>,
    #[serde(default)]
    pub note: Option<String>,
}

/// Initial state after validation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialState {
    Gaussian {
        alpha: f64,
        x_start: f64,
    },
    /// `None` requests a variational fit.
    Localized(Option<TrialParams>),
}

/// A validated experiment with every derived object built.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub pipeline: Pipeline,
    pub model: PotentialModel,
    pub grid: SpatialGrid,
    pub slicing: TimeSlicing,
    pub initial_state: Option<InitialState>,
    pub steps: usize,
    pub output_dir: PathBuf,
    pub snapshot_stride: Option<usize>,
    pub peak_threshold: f64,
    pub min_norm: f64,
    pub renormalize: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every precondition for `pipeline` and builds the experiment.
    /// A `pipeline` field in the file must agree with the requested one.
    pub fn validate(&self, pipeline: Pipeline) -> Result<Experiment> {
        let cfg = |e: Error| Error::Config(e.to_string());
        if let Some(p) = self.pipeline {
            if p != pipeline {
                return Err(Error::Config(format!("config is for `{p}`, not `{pipeline}`")));
            }
        }
        let model = self.model.build().map_err(cfg)?;
        let grid = SpatialGrid::new(self.grid.x_min, self.grid.x_max, self.grid.intervals).map_err(cfg)?;
        let block_time = self.slicing.block_time.resolve()?;
        let slicing = TimeSlicing::new(block_time, self.slicing.slices, self.slicing.blocks).map_err(cfg)?;

        let initial_state = match &self.initial_state {
            None => None,
            Some(InitialStateSpec::Gaussian { alpha, x_start }) => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::Config(format!("gaussian width must be positive, got {alpha}")));
                }
                if !grid.contains(*x_start) {
                    return Err(Error::Config(format!("x_start = {x_start} lies outside the grid")));
                }
                Some(InitialState::Gaussian {
                    alpha: *alpha,
                    x_start: *x_start,
                })
            }
            Some(InitialStateSpec::Localized { trial }) => {
                if model.double_well_params().is_none() {
                    return Err(Error::Config(
                        "a localized initial state needs the double-well model".into(),
                    ));
                }
                let params = match trial {
                    TrialSpec::Fit(FitKeyword::Fit) => None,
                    TrialSpec::Params(p) => {
                        p.validate().map_err(cfg)?;
                        if !(p.beta > 0.0 && grid.contains(p.beta) && grid.contains(-p.beta)) {
                            return Err(Error::Config(format!(
                                "trial displacement {} must be positive and on the grid",
                                p.beta
                            )));
                        }
                        Some(*p)
                    }
                };
                Some(InitialState::Localized(params))
            }
        };

        match pipeline {
            Pipeline::Propagate if initial_state.is_none() => {
                return Err(Error::Config("propagate needs an initial_state".into()));
            }
            Pipeline::Tunnel => {
                if model.double_well_params().is_none() {
                    return Err(Error::Config(format!(
                        "tunnel needs the double-well model, got `{}`",
                        model.label()
                    )));
                }
                if !grid.is_symmetric() {
                    return Err(Error::Config("tunnel needs a grid symmetric about x = 0".into()));
                }
                if matches!(initial_state, Some(InitialState::Gaussian { .. })) {
                    return Err(Error::Config("tunnel starts from a localized state".into()));
                }
            }
            _ => {}
        }

        let steps = self.steps.unwrap_or(slicing.blocks());
        if let Some(0) = self.snapshot_stride {
            return Err(Error::Config("snapshot_stride must be at least 1".into()));
        }
        let peak_threshold = self.peak_threshold.unwrap_or(DEFAULT_PEAK_THRESHOLD);
        if !(peak_threshold > 0.0 && peak_threshold < 1.0) {
            return Err(Error::Config(format!(
                "peak_threshold must lie in (0, 1), got {peak_threshold}"
            )));
        }
        let min_norm = self.min_norm.unwrap_or(DEFAULT_MIN_NORM);
        if !(0.0..=1.0).contains(&min_norm) {
            return Err(Error::Config(format!("min_norm must lie in [0, 1], got {min_norm}")));
        }
        Ok(Experiment {
            pipeline,
            model,
            grid,
            slicing,
            initial_state,
            steps,
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
            snapshot_stride: self.snapshot_stride,
            peak_threshold,
            min_norm,
            renormalize: self.renormalize.unwrap_or(true),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const BASE: &str = r#"{
        "model": { "kind": "harmonic" },
        "grid": { "x_min": -7, "x_max": 7, "intervals": 600 },
        "slicing": { "block_time": "2*pi/16", "slices": 4, "blocks": 16 },
        "initial_state": { "kind": "gaussian", "alpha": 2.0, "x_start": 1.0 }
    }"#;

    #[test]
    fn time_expressions() {
        assert_eq!(parse_time_expr("pi/7").unwrap(), PI / 7.0);
        assert_eq!(parse_time_expr("2*pi/16").unwrap(), 2.0 * PI / 16.0);
        assert_eq!(parse_time_expr(" 0.25 ").unwrap(), 0.25);
        assert_eq!(parse_time_expr("pi").unwrap(), PI);
        assert!(parse_time_expr("pi/").is_err());
        assert!(parse_time_expr("tau").is_err());
    }

    #[test]
    fn base_config_validates() {
        let exp = ExperimentConfig::from_json(BASE)
            .unwrap()
            .validate(Pipeline::Propagate)
            .unwrap();
        assert!(exp.model.is_harmonic());
        assert_eq!(exp.grid.intervals(), 600);
        assert!((exp.slicing.block_time() - PI / 8.0).abs() < 1e-15);
        assert_eq!(exp.steps, 16);
        assert_eq!(exp.peak_threshold, DEFAULT_PEAK_THRESHOLD);
        assert_eq!(exp.min_norm, DEFAULT_MIN_NORM);
        assert!(exp.renormalize);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = BASE.replace("\"intervals\": 600", "\"intervals\": 600, \"dx\": 0.1");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Config(_))));
    }

    #[test]
    fn bad_values_are_config_errors() {
        for (from, to) in [
            ("\"slices\": 4", "\"slices\": 3"),
            ("\"intervals\": 600", "\"intervals\": 1"),
            ("\"x_start\": 1.0", "\"x_start\": 9.0"),
            ("\"alpha\": 2.0", "\"alpha\": -2.0"),
            ("\"2*pi/16\"", "\"-pi\""),
        ] {
            let cfg = ExperimentConfig::from_json(&BASE.replace(from, to)).unwrap();
            let err = cfg.validate(Pipeline::Propagate).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{from} -> {to}: {err}");
        }
    }

    #[test]
    fn tunnel_rejects_harmonic_model() {
        let text = BASE.replace(
            r#"{ "kind": "gaussian", "alpha": 2.0, "x_start": 1.0 }"#,
            r#"{ "kind": "localized", "trial": "fit" }"#,
        );
        let err = ExperimentConfig::from_json(&text)
            .unwrap()
            .validate(Pipeline::Tunnel)
            .unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn localized_state_parses_both_forms() {
        let dw = BASE.replace(
            r#"{ "kind": "harmonic" }"#,
            r#"{ "kind": "double_well", "alpha": 0.0216, "x_min": 2.48 }"#,
        );
        let fit = dw.replace(
            r#"{ "kind": "gaussian", "alpha": 2.0, "x_start": 1.0 }"#,
            r#"{ "kind": "localized", "trial": "fit" }"#,
        );
        let exp = ExperimentConfig::from_json(&fit)
            .unwrap()
            .validate(Pipeline::Tunnel)
            .unwrap();
        assert_eq!(exp.initial_state, Some(InitialState::Localized(None)));
        let fixed = dw.replace(
            r#"{ "kind": "gaussian", "alpha": 2.0, "x_start": 1.0 }"#,
            r#"{ "kind": "localized", "trial": { "alpha": 0.8, "beta": 2.4 } }"#,
        );
        let exp = ExperimentConfig::from_json(&fixed)
            .unwrap()
            .validate(Pipeline::Tunnel)
            .unwrap();
        assert_eq!(
            exp.initial_state,
            Some(InitialState::Localized(Some(TrialParams { alpha: 0.8, beta: 2.4 })))
        );
    }

    #[test]
    fn pipeline_field_must_match() {
        let text = BASE.replacen('{', r#"{ "pipeline": "spectrum","#, 1);
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert!(cfg.validate(Pipeline::Spectrum).is_ok());
        assert!(cfg.validate(Pipeline::Propagate).is_err());
    }

    #[test]
    fn custom_model_round_trips() {
        let text = BASE.replace(
            r#"{ "kind": "harmonic" }"#,
            r#"{ "kind": "custom", "coeffs": [0, 0, 0.5], "mass": 1 }"#,
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, back);
        let exp = cfg.validate(Pipeline::Normcheck).unwrap();
        assert_eq!(exp.model.potential(2.0), 2.0);
    }
}
