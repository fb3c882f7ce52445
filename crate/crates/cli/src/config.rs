//! Run configuration.
//!
//! Keys are read from a flat TOML file and may be overridden by environment
//! variables named `SSI_<KEY>` (upper case), e.g. `SSI_TARGET=2.5`. Override
//! values are parsed as TOML scalars and fall back to strings, so
//! `SSI_HORIZON=1y` works without quoting. Relative paths are resolved
//! against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use ssi_core::gar::{CrpsConfig, EvalConfig, EvalScheme, SkewTFitConfig};
use ssi_core::moments::{ExtremeTailRule, MomentConfig};
use ssi_core::signal::{Aggregation, NormScheme, DEFAULT_TARGET};
use ssi_core::spd::TailPolicy;

use crate::error::{CliError, Result};
use crate::ingest::{MacroAggregation, Transform};

pub const ENV_PREFIX: &str = "SSI_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TailRuleMode {
    Off,
    #[default]
    Saturate,
    Historical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    FullSample,
    Rolling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Expanding,
    Rolling,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub spd_path: Option<PathBuf>,
    pub gdp_path: Option<PathBuf>,
    pub nfci_path: Option<PathBuf>,
    pub out_dir: PathBuf,

    pub target: f64,
    /// SPD horizon label used by signal, ssi and gar; required when the
    /// panel holds more than one.
    pub horizon: Option<String>,
    pub variable: Option<String>,

    /// Width for open tail bins; the adjacent bin's width when unset.
    pub tail_width: Option<f64>,
    pub tail_rule: TailRuleMode,
    pub tail_threshold: f64,
    pub historical_negative: f64,
    pub historical_positive: f64,
    pub include_kelly: bool,
    pub epsilon_mean: f64,

    pub aggregation: AggregationMethod,
    pub normalization: Normalization,
    pub rolling_window: usize,

    pub gdp_aggregation: MacroAggregation,
    pub gdp_transform: Transform,
    pub nfci_aggregation: MacroAggregation,
    /// Cross-sectional statistic of SPD means used as the SPF regressor.
    pub spf_statistic: AggregationMethod,

    pub gar_horizon: usize,
    pub eval_scheme: Scheme,
    pub eval_window: usize,
    pub initial_frac: f64,
    pub min_eval_periods: usize,
    pub shape_bound: f64,
    pub dof_min: f64,
    pub dof_max: f64,
    pub residual_tol: f64,
    pub starts: usize,
    pub crps_k: f64,
    pub crps_steps_per_scale: usize,
    pub log_score_cap: f64,

    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = SkewTFitConfig::default();
        let eval = EvalConfig::default();
        Self {
            spd_path: None,
            gdp_path: None,
            nfci_path: None,
            out_dir: PathBuf::from("out"),
            target: DEFAULT_TARGET,
            horizon: None,
            variable: None,
            tail_width: None,
            tail_rule: TailRuleMode::Saturate,
            tail_threshold: 0.25,
            historical_negative: -1.0,
            historical_positive: 1.0,
            include_kelly: false,
            epsilon_mean: 1e-6,
            aggregation: AggregationMethod::Mean,
            normalization: Normalization::FullSample,
            rolling_window: 8,
            gdp_aggregation: MacroAggregation::Mean,
            gdp_transform: Transform::Level,
            nfci_aggregation: MacroAggregation::Last,
            spf_statistic: AggregationMethod::Mean,
            gar_horizon: eval.horizon,
            eval_scheme: Scheme::Expanding,
            eval_window: 40,
            initial_frac: eval.initial_frac,
            min_eval_periods: eval.min_eval_periods,
            shape_bound: fit.shape_bound,
            dof_min: fit.dof_min,
            dof_max: fit.dof_max,
            residual_tol: fit.residual_tol,
            starts: fit.starts,
            crps_k: eval.crps.k,
            crps_steps_per_scale: eval.crps.steps_per_scale,
            log_score_cap: eval.log_score_cap,
            seed: fit.seed,
        }
    }
}

fn env_value(raw: &str) -> toml::Value {
    // parse as the right-hand side of `v = ...`, else keep the text
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    /// Load from an optional TOML file, then apply `SSI_*` overrides from
    /// `env`.
    pub fn load<I>(path: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let (mut table, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                let table: toml::Table = text
                    .parse()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                (table, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (toml::Table::new(), PathBuf::new()),
        };
        let mut overrides: Vec<(String, String)> = env
            .into_iter()
            .filter_map(|(k, v)| {
                k.strip_prefix(ENV_PREFIX)
                    .map(|k| (k.to_ascii_lowercase(), v))
            })
            .collect();
        overrides.sort();
        for (k, v) in overrides {
            let value = match table.get(&k) {
                // keep string-typed keys as strings, e.g. horizon = "5"
                Some(toml::Value::String(_)) => toml::Value::String(v),
                _ => env_value(&v),
            };
            table.insert(k, value);
        }
        let mut cfg: RunConfig = RunConfig::deserialize(toml::Value::Table(table))
            .map_err(|e| CliError::Config(e.to_string()))?;
        for p in [&mut cfg.spd_path, &mut cfg.gdp_path, &mut cfg.nfci_path]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if path.is_some() && cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !self.target.is_finite() {
            return bad("target must be finite");
        }
        if let Some(w) = self.tail_width {
            if !(w > 0.0 && w.is_finite()) {
                return bad("tail_width must be positive");
            }
        }
        if !(self.tail_threshold > 0.0 && self.tail_threshold <= 1.0) {
            return bad("tail_threshold must lie in (0, 1]");
        }
        if self.normalization == Normalization::Rolling && self.rolling_window == 0 {
            return bad("rolling_window must be positive");
        }
        if self.gar_horizon == 0 {
            return bad("gar_horizon must be at least 1");
        }
        if !(self.initial_frac > 0.0 && self.initial_frac < 1.0) {
            return bad("initial_frac must lie in (0, 1)");
        }
        if !(self.dof_min > 1.0 && self.dof_max >= self.dof_min && self.shape_bound >= 0.0) {
            return bad("skew-t search box needs 1 < dof_min <= dof_max and shape_bound >= 0");
        }
        if !(self.crps_k > 0.0) || self.crps_steps_per_scale == 0 {
            return bad("crps_k and crps_steps_per_scale must be positive");
        }
        for (name, p) in [
            ("spd_path", &self.spd_path),
            ("gdp_path", &self.gdp_path),
            ("nfci_path", &self.nfci_path),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(CliError::Config(format!(
                        "{name} {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn tail_policy(&self) -> TailPolicy {
        match self.tail_width {
            Some(w) => TailPolicy::FixedWidth(w),
            None => TailPolicy::AdjacentWidth,
        }
    }

    pub fn moment_config(&self) -> MomentConfig {
        let threshold = self.tail_threshold;
        let tail_rule = match self.tail_rule {
            TailRuleMode::Off => ExtremeTailRule::Off,
            TailRuleMode::Saturate => ExtremeTailRule::Saturate { threshold },
            TailRuleMode::Historical => ExtremeTailRule::Historical {
                threshold,
                negative: self.historical_negative,
                positive: self.historical_positive,
            },
        };
        MomentConfig {
            epsilon_mean: self.epsilon_mean,
            tail_rule,
            include_kelly: self.include_kelly,
        }
    }

    pub fn aggregation(&self) -> Aggregation {
        match self.aggregation {
            AggregationMethod::Mean => Aggregation::Mean,
            AggregationMethod::Median => Aggregation::Median,
        }
    }

    pub fn norm_scheme(&self) -> NormScheme {
        match self.normalization {
            Normalization::FullSample => NormScheme::FullSampleMaxAbs,
            Normalization::Rolling => NormScheme::RollingMaxAbs {
                window: self.rolling_window,
            },
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        let fit = SkewTFitConfig {
            shape_bound: self.shape_bound,
            dof_min: self.dof_min,
            dof_max: self.dof_max,
            residual_tol: self.residual_tol,
            starts: self.starts,
            seed: self.seed,
            ..SkewTFitConfig::default()
        };
        EvalConfig {
            scheme: match self.eval_scheme {
                Scheme::Expanding => EvalScheme::Expanding,
                Scheme::Rolling => EvalScheme::Rolling {
                    window: self.eval_window,
                },
            },
            initial_frac: self.initial_frac,
            min_eval_periods: self.min_eval_periods,
            horizon: self.gar_horizon,
            fit,
            crps: CrpsConfig {
                k: self.crps_k,
                steps_per_scale: self.crps_steps_per_scale,
                ..CrpsConfig::default()
            },
            log_score_cap: self.log_score_cap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_overrides_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "target = 2.0\nhorizon = \"1y\"\nout_dir = \"res\"\n").unwrap();
        let env = vec![
            ("SSI_TARGET".to_string(), "2.5".to_string()),
            ("SSI_HORIZON".to_string(), "5y".to_string()),
            ("SSI_EVAL_SCHEME".to_string(), "rolling".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ];
        let cfg = RunConfig::load(Some(&p), env).unwrap();
        assert_eq!(cfg.target, 2.5);
        assert_eq!(cfg.horizon.as_deref(), Some("5y"));
        assert_eq!(cfg.eval_scheme, Scheme::Rolling);
        assert_eq!(cfg.out_dir, dir.path().join("res"));
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "targte = 2.0\n").unwrap();
        assert!(matches!(
            RunConfig::load(Some(&p), Vec::new()),
            Err(CliError::Config(_))
        ));
        let env = vec![("SSI_TARGET".to_string(), "nan".to_string())];
        assert!(RunConfig::load(None, env).is_err());
    }
}
