use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::LocalCost;
use crate::error::Error;
use crate::panel::{MissingPolicy, VariableRole, VariableSpec};
use crate::sarimax::{FitOptions, OrderSearch};
use crate::selection::{DEFAULT_ALPHA, DEFAULT_CORR_THRESHOLD};

/// Order-search and optimizer settings for the forecasting phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SarimaxSettings {
    pub p: Vec<usize>,
    pub d: Vec<usize>,
    pub q: Vec<usize>,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for SarimaxSettings {
    fn default() -> Self {
        let search = OrderSearch::default();
        let fit = FitOptions::default();
        Self {
            p: search.p,
            d: search.d,
            q: search.q,
            max_iter: fit.max_iter,
            tolerance: fit.tolerance,
        }
    }
}

impl SarimaxSettings {
    pub fn search(&self) -> OrderSearch {
        OrderSearch {
            p: self.p.clone(),
            d: self.d.clone(),
            q: self.q.clone(),
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            include_constant: None,
            max_iter: self.max_iter,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringSettings {
    pub local_cost: LocalCost,
    pub band: Option<usize>,
}

/// Everything a pipeline run depends on. Relative paths in a config file
/// are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_entity_column")]
    pub entity_column: String,
    #[serde(default = "default_period_column")]
    pub period_column: String,
    #[serde(default = "default_variables")]
    pub variables: Vec<VariableSpec>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_corr_threshold")]
    pub corr_threshold: f64,
    #[serde(default = "default_horizon")]
    pub forecast_horizon: usize,
    /// Last training period; defaults to the last period minus the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_year: Option<i32>,
    #[serde(default = "default_k")]
    pub k_clusters: usize,
    /// Recorded for reproducibility. Every stage is deterministic, so no
    /// stage currently draws from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sarimax: SarimaxSettings,
    #[serde(default)]
    pub clustering: ClusteringSettings,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("output")
}
fn default_entity_column() -> String {
    "country".into()
}
fn default_period_column() -> String {
    "year".into()
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_corr_threshold() -> f64 {
    DEFAULT_CORR_THRESHOLD
}
fn default_horizon() -> usize {
    3
}
fn default_k() -> usize {
    3
}

/// CO2 in kt as the dependent variable and eight World Development
/// Indicators as candidate predictors, keyed by their WDI series codes.
pub fn default_variables() -> Vec<VariableSpec> {
    use VariableRole::*;
    [
        ("Co", "EN.ATM.CO2E.KT", Dependent),
        ("RE", "EG.FEC.RNEW.ZS", CandidatePredictor),
        ("Fa", "AG.LND.FRST.ZS", CandidatePredictor),
        ("EP", "EG.ELC.FOSL.ZS", CandidatePredictor),
        ("G", "EG.GDP.PUSE.KO.PP.KD", CandidatePredictor),
        ("TG", "EN.ATM.GHGT.KT.CE", CandidatePredictor),
        ("F", "AG.LND.FRST.K2", CandidatePredictor),
        ("EU", "EG.USE.PCAP.KG.OE", CandidatePredictor),
        ("EPC", "EG.USE.ELEC.KH.PC", CandidatePredictor),
    ]
    .into_iter()
    .map(|(code, col, role)| VariableSpec::new(code, col, role))
    .collect()
}

impl PipelineConfig {
    /// Defaults for everything but the input file.
    pub fn with_input(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            output_dir: default_output_dir(),
            entity_column: default_entity_column(),
            period_column: default_period_column(),
            variables: default_variables(),
            missing_policy: MissingPolicy::default(),
            alpha: DEFAULT_ALPHA,
            corr_threshold: DEFAULT_CORR_THRESHOLD,
            forecast_horizon: default_horizon(),
            split_year: None,
            k_clusters: default_k(),
            seed: 0,
            sarimax: SarimaxSettings::default(),
            clustering: ClusteringSettings::default(),
        }
    }

    /// Parse TOML; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, Error> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        if cfg.input.is_relative() {
            cfg.input = base_dir.join(&cfg.input);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base_dir.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, Error> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.corr_threshold > 0.0 && self.corr_threshold <= 1.0) {
            return bad(format!("corr_threshold must lie in (0, 1], got {}", self.corr_threshold));
        }
        if self.forecast_horizon == 0 {
            return bad("forecast_horizon must be at least 1".into());
        }
        if self.k_clusters == 0 {
            return bad("k_clusters must be at least 1".into());
        }
        let s = &self.sarimax;
        if s.p.is_empty() || s.d.is_empty() || s.q.is_empty() {
            return bad("sarimax search ranges must be non-empty".into());
        }
        if s.max_iter == 0 || !(s.tolerance > 0.0) {
            return bad("sarimax max_iter and tolerance must be positive".into());
        }
        if self.variables.iter().filter(|v| v.role == VariableRole::Dependent).count() != 1 {
            return bad("exactly one variable must have role `dependent`".into());
        }
        if !self.variables.iter().any(|v| v.role == VariableRole::CandidatePredictor) {
            return bad("at least one candidate_predictor is required".into());
        }
        Ok(())
    }
}
