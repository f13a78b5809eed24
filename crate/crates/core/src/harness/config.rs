use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifiers::{Init, TrainConfig};
use crate::error::{Error, Result};
use crate::rng::SeedSpec;

/// Weight init scale of the noise-ball sweep MLPs.
pub const NOISE_SWEEP_INIT_SCALE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MarginCollapse,
    NoiseBallSweep,
    FragileBox,
    SphereScaling,
    LidContrast,
    TransferMatrix,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::MarginCollapse,
        ExperimentKind::NoiseBallSweep,
        ExperimentKind::FragileBox,
        ExperimentKind::SphereScaling,
        ExperimentKind::LidContrast,
        ExperimentKind::TransferMatrix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::MarginCollapse => "margin_collapse",
            ExperimentKind::NoiseBallSweep => "noise_ball_sweep",
            ExperimentKind::FragileBox => "fragile_box",
            ExperimentKind::SphereScaling => "sphere_scaling",
            ExperimentKind::LidContrast => "lid_contrast",
            ExperimentKind::TransferMatrix => "transfer_matrix",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// Optimizer overrides; unset fields keep the model family's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    /// Standard deviation of the Gaussian initialization (linear models).
    pub init_scale: Option<f64>,
}

impl TrainSettings {
    pub fn apply(&self, mut base: TrainConfig) -> TrainConfig {
        if let Some(v) = self.learning_rate {
            base.learning_rate = v;
        }
        if let Some(v) = self.epochs {
            base.epochs = v;
        }
        if let Some(v) = self.batch_size {
            base.batch_size = Some(v);
        }
        if let Some(scale) = self.init_scale {
            base.init = Init::Gaussian { scale };
        }
        base
    }
}

/// Shape parameters of the experiment's generating distribution. Only the
/// fields relevant to the experiment's manifold are read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldTemplate {
    /// Distance between Gaussian class means, in units of `scale`.
    pub separation: Option<f64>,
    pub scale: Option<f64>,
    pub inner_radius: Option<f64>,
    pub outer_radius: Option<f64>,
    pub gap: Option<f64>,
    pub segment_length: Option<f64>,
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxGrid {
    pub k: Vec<u32>,
    pub d: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Default for BoxGrid {
    fn default() -> Self {
        BoxGrid {
            k: vec![1, 10, 100],
            d: vec![1.0, 2.0, 3.0],
            sigma: vec![0.5, 1.0, 2.0],
        }
    }
}

/// One experiment. Every field except `experiment` is optional and falls
/// back to a per-kind default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Ambient dimensions `N`, strictly increasing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsic_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_per_class: Option<usize>,
    /// Independent repetitions per sweep point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    /// Monte Carlo draws per estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_grid: Option<BoxGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_half_width: Option<f64>,
    /// Random directions per point for boundary searches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_points: Option<usize>,
    /// Neighbour counts for LID estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    /// Independently trained models in a transfer matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<usize>,
    /// Multiplier applied to minimal attacks before transfer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_scale: Option<f64>,
    /// Replace the trained network by the ideal norm-threshold classifier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_oracle: Option<bool>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            dims: None,
            intrinsic_dim: None,
            n_per_class: None,
            seeds: None,
            trials: None,
            epsilon: None,
            sigma: None,
            rho: None,
            hidden: None,
            train: None,
            manifold: None,
            box_grid: None,
            box_half_width: None,
            directions: None,
            test_points: None,
            k: None,
            models: None,
            attack_scale: None,
            norm_oracle: None,
        }
    }

    /// Parses and validates; errors name the offending field.
    pub fn from_json_str(s: &str) -> Result<ExperimentConfig> {
        let value: Value =
            serde_json::from_str(s).map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Config(inner.to_string())
            } else {
                Error::Config(format!("field `{path}`: {inner}"))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides in order (last wins). Keys are dotted
    /// paths (`train.epochs`); values are parsed as JSON, falling back to a
    /// bare string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<ExperimentConfig> {
        let mut value = serde_json::to_value(self)?;
        for o in overrides {
            apply_override(&mut value, o.as_ref())?;
        }
        Self::from_value(value)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        if dims.is_empty() {
            return Err(Error::Config("field `dims`: must not be empty".into()));
        }
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "field `dims`: must be strictly increasing".into(),
            ));
        }
        if dims[0] < 1 {
            return Err(Error::Config(
                "field `dims`: dimensions must be at least 1".into(),
            ));
        }
        if self.trials() < 1 {
            return Err(Error::Config("field `trials`: must be at least 1".into()));
        }
        if self.seeds() < 1 {
            return Err(Error::Config("field `seeds`: must be at least 1".into()));
        }
        if self.n_per_class() < 2 {
            return Err(Error::Config(
                "field `n_per_class`: must be at least 2".into(),
            ));
        }
        if self.test_points() < 1 {
            return Err(Error::Config(
                "field `test_points`: must be at least 1".into(),
            ));
        }
        if self.directions() < 1 {
            return Err(Error::Config(
                "field `directions`: must be at least 1".into(),
            ));
        }
        let positive = [
            ("epsilon", self.epsilon()),
            ("sigma", self.sigma()),
            ("box_half_width", self.box_half_width()),
            ("attack_scale", self.attack_scale()),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "field `{name}`: must be positive and finite"
                )));
            }
        }
        let rho = self.rho();
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Config("field `rho`: must lie in (0, 1]".into()));
        }
        let m = self.intrinsic_dim();
        match self.experiment {
            ExperimentKind::MarginCollapse
            | ExperimentKind::NoiseBallSweep
            | ExperimentKind::TransferMatrix => {
                if m < 1 || dims[0] < m {
                    return Err(Error::Config(format!(
                        "field `intrinsic_dim`: need 1 ≤ M ≤ N for every N, got M = {m}"
                    )));
                }
            }
            ExperimentKind::LidContrast | ExperimentKind::SphereScaling => {
                if dims[0] < 2 {
                    return Err(Error::Config(
                        "field `dims`: this manifold needs N ≥ 2".into(),
                    ));
                }
            }
            ExperimentKind::FragileBox => {}
        }
        if self.k_list().iter().any(|&k| k < 2) {
            return Err(Error::Config(
                "field `k`: neighbour counts must be at least 2".into(),
            ));
        }
        if self.models() < 2 {
            return Err(Error::Config(
                "field `models`: need at least 2 models".into(),
            ));
        }
        let grid = self.box_grid();
        if grid.k.is_empty() || grid.d.is_empty() || grid.sigma.is_empty() {
            return Err(Error::Config(
                "field `box_grid`: every axis needs a value".into(),
            ));
        }
        if grid.d.iter().chain(&grid.sigma).any(|v| !(*v > 0.0)) {
            return Err(Error::Config(
                "field `box_grid`: d and sigma must be positive".into(),
            ));
        }
        if let Some(t) = &self.train {
            let probe = t.apply(TrainConfig::mlp(SeedSpec::default()));
            probe
                .validate()
                .map_err(|e| Error::Config(format!("field `train`: {e}")))?;
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.dims.clone().unwrap_or_else(|| match self.experiment {
            ExperimentKind::MarginCollapse => vec![10, 50, 100, 500, 1000],
            ExperimentKind::NoiseBallSweep => vec![10, 50, 200],
            ExperimentKind::FragileBox => vec![1],
            ExperimentKind::SphereScaling => vec![20, 50, 100, 200, 500],
            ExperimentKind::LidContrast => vec![10],
            ExperimentKind::TransferMatrix => vec![10, 100],
        })
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim.unwrap_or(2)
    }

    pub fn n_per_class(&self) -> usize {
        self.n_per_class.unwrap_or(match self.experiment {
            ExperimentKind::SphereScaling => 1000,
            ExperimentKind::LidContrast => 500,
            _ => 50,
        })
    }

    pub fn seeds(&self) -> usize {
        self.seeds.unwrap_or(match self.experiment {
            ExperimentKind::MarginCollapse => 20,
            ExperimentKind::NoiseBallSweep => 5,
            ExperimentKind::SphereScaling => 2,
            ExperimentKind::LidContrast => 3,
            _ => 1,
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials.unwrap_or(match self.experiment {
            ExperimentKind::FragileBox => 1_000_000,
            _ => 10_000,
        })
    }

    /// Margin threshold, or gradient-sign step for LID contrasts.
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(match self.experiment {
            ExperimentKind::LidContrast => 0.05,
            _ => 0.1 * self.gaussian_scale(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(1.0)
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(crate::probe::DEFAULT_RHO)
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.hidden
            .clone()
            .unwrap_or_else(|| match self.experiment {
                ExperimentKind::SphereScaling => vec![128, 128],
                _ => vec![64],
            })
    }

    pub fn box_grid(&self) -> BoxGrid {
        self.box_grid.clone().unwrap_or_default()
    }

    pub fn box_half_width(&self) -> f64 {
        self.box_half_width.unwrap_or(2.0)
    }

    pub fn directions(&self) -> usize {
        self.directions.unwrap_or(100)
    }

    pub fn test_points(&self) -> usize {
        self.test_points.unwrap_or(match self.experiment {
            ExperimentKind::NoiseBallSweep | ExperimentKind::SphereScaling => 20,
            _ => 100,
        })
    }

    pub fn k_list(&self) -> Vec<usize> {
        self.k
            .clone()
            .unwrap_or_else(|| vec![10, crate::lid::DEFAULT_K, 50])
    }

    pub fn models(&self) -> usize {
        self.models.unwrap_or(4)
    }

    pub fn attack_scale(&self) -> f64 {
        self.attack_scale.unwrap_or(3.0)
    }

    pub fn norm_oracle(&self) -> bool {
        self.norm_oracle.unwrap_or(false)
    }

    pub fn template(&self) -> ManifoldTemplate {
        self.manifold.clone().unwrap_or_default()
    }

    pub(crate) fn gaussian_scale(&self) -> f64 {
        self.manifold.as_ref().and_then(|m| m.scale).unwrap_or(1.0)
    }

    /// Logistic-regression optimizer with overrides applied.
    pub fn logistic_train(&self, seed: SeedSpec) -> TrainConfig {
        self.train
            .clone()
            .unwrap_or_default()
            .apply(TrainConfig::logistic(seed))
    }

    pub fn mlp_train(&self, seed: SeedSpec) -> TrainConfig {
        let base = match self.experiment {
            ExperimentKind::SphereScaling => TrainConfig {
                learning_rate: 0.1,
                ..TrainConfig::mlp(seed)
            },
            // fixed-scale init: off-manifold weights keep O(1) size per coordinate
            ExperimentKind::NoiseBallSweep => TrainConfig {
                init: Init::Gaussian {
                    scale: NOISE_SWEEP_INIT_SCALE,
                },
                ..TrainConfig::mlp(seed)
            },
            _ => TrainConfig::mlp(seed),
        };
        self.train.clone().unwrap_or_default().apply(base)
    }
}

fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(Error::Config(format!(
            "override `{assignment}` is not of the form key=value"
        )));
    };
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!(
            "override `{assignment}` has an empty key"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let Value::Object(map) = node else {
            return Err(Error::Config(format!(
                "override `{key}`: `{part}` is not inside an object"
            )));
        };
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        let child = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if child.is_null() {
            *child = Value::Object(Default::default());
        }
        node = child;
    }
    unreachable!("split yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json_str(r#"{"experiment": "margin_collapse"}"#).unwrap();
        assert_eq!(cfg.dims(), vec![10, 50, 100, 500, 1000]);
        assert_eq!(cfg.seeds(), 20);
        assert_eq!(cfg.intrinsic_dim(), 2);
    }

    #[test]
    fn unknown_and_mistyped_fields_are_named() {
        let e = ExperimentConfig::from_json_str(r#"{"experiment": "fragile_box", "trails": 3}"#)
            .unwrap_err();
        assert!(e.to_string().contains("trails"), "{e}");
        let e =
            ExperimentConfig::from_json_str(r#"{"experiment": "fragile_box", "trials": "many"}"#)
                .unwrap_err();
        assert!(e.to_string().contains("trials"), "{e}");
        let e = ExperimentConfig::from_json_str(
            r#"{"experiment": "margin_collapse", "train": {"epochs": -1}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("train.epochs"), "{e}");
    }

    #[test]
    fn invariants_are_enforced() {
        for bad in [
            r#"{"experiment": "margin_collapse", "dims": [10, 10]}"#,
            r#"{"experiment": "margin_collapse", "dims": [50, 10]}"#,
            r#"{"experiment": "margin_collapse", "dims": []}"#,
            r#"{"experiment": "fragile_box", "trials": 0}"#,
            r#"{"experiment": "margin_collapse", "dims": [1, 2], "intrinsic_dim": 2}"#,
            r#"{"experiment": "noise_ball_sweep", "sigma": 0}"#,
        ] {
            assert!(ExperimentConfig::from_json_str(bad).is_err(), "{bad}");
        }
        assert!(ExperimentConfig::from_json_str("{not json").is_err());
    }

    #[test]
    fn overrides_last_wins() {
        let cfg = ExperimentConfig::new(ExperimentKind::MarginCollapse);
        let cfg = cfg
            .with_overrides(&["seeds=3", "dims=[2,4]", "seeds=5", "train.epochs=7"])
            .unwrap();
        assert_eq!(cfg.seeds(), 5);
        assert_eq!(cfg.dims(), vec![2, 4]);
        assert_eq!(cfg.train.unwrap().epochs, Some(7));
        assert!(ExperimentConfig::new(ExperimentKind::MarginCollapse)
            .with_overrides(&["colour=blue"])
            .is_err());
        assert!(ExperimentConfig::new(ExperimentKind::MarginCollapse)
            .with_overrides(&["seeds"])
            .is_err());
    }

    #[test]
    fn override_can_switch_kind_by_name() {
        let cfg = ExperimentConfig::new(ExperimentKind::MarginCollapse)
            .with_overrides(&["experiment=fragile_box"])
            .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::FragileBox);
    }

    #[test]
    fn serialization_round_trips() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::LidContrast);
        cfg.k = Some(vec![5, 10]);
        cfg.manifold = Some(ManifoldTemplate {
            gap: Some(0.5),
            ..Default::default()
        });
        let back = ExperimentConfig::from_json_str(&cfg.to_json_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
