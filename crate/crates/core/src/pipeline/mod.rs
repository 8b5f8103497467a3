//! End-to-end analysis driven by a [`PipelineConfig`].
//!
//! Phase I walks the model-choice flow:
//!
//! 1. pooled OLS (A) and the entity-effects LM test;
//! 2. on rejection, random effects without (B) and with (C) period dummies,
//!    and the Wald test on the dummies, which decides the carried RE model;
//! 3. fixed effects (D) and the Hausman contrast against the carried model;
//! 4. on rejection, the GLM fixed-effects model (E) and a BIC comparison of
//!    D and E;
//! 5. feature selection on the final model.
//!
//! Phase II forecasts every entity with SARIMAX under both feature sets and
//! clusters the standardised dependent series.

mod config;
mod output;
mod svg;

pub use config::{default_variables, ClusteringSettings, PipelineConfig, SarimaxSettings};
pub use output::{
    cost_grids, write_cluster_features_table, write_coefficient_table, write_comparison_table, write_correlation_table,
    write_dendrogram_table, write_forecast_errors_table, write_forecasts_table, write_model_fit_table, write_nrmse_table,
    write_outputs, write_selection_table, write_tests_table,
};

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{cluster_feature_summary, dtw_kcluster, standardized_series, ward_cluster, ClusterReport, Dendrogram, KClusterOptions};
use crate::diagnostics::{breusch_pagan_heteroskedasticity, breusch_pagan_panel, hausman, wald_time_effects, Decision, TestResult};
use crate::error::Error;
use crate::estimators::{compare_models, fit_model, FitResult, ModelComparison, ModelKind, ModelSpec};
use crate::panel::{impute_missing, load_panel, PanelDataset};
use crate::sarimax::{ScenarioConfig, ScenarioPair};
use crate::selection::{select_features, SelectionReport};

/// One branch of the model-choice flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionStep {
    pub test: String,
    pub p_value: f64,
    pub decision: Decision,
    pub branch: String,
    /// Label of the model carried forward after this step.
    pub carried_model: String,
}

/// Rebuild the decision trace from the test outcomes alone.
///
/// `winner` is the BIC winner among the fixed-effects models, needed only
/// when Hausman rejects.
pub fn derive_decision_trace(
    breusch_pagan: &TestResult,
    wald: Option<&TestResult>,
    hausman: Option<&TestResult>,
    winner: Option<&str>,
) -> Vec<DecisionStep> {
    let step = |t: &TestResult, branch: &str, carried: &str| DecisionStep {
        test: t.test_name.clone(),
        p_value: t.p_value,
        decision: t.decision,
        branch: branch.to_string(),
        carried_model: carried.to_string(),
    };
    let mut trace = Vec::new();
    if !breusch_pagan.decision.rejected() {
        trace.push(step(breusch_pagan, "no entity effects: keep pooled OLS", "A"));
        return trace;
    }
    trace.push(step(breusch_pagan, "entity effects present: fit random effects", "B"));
    let Some(wald) = wald else { return trace };
    let re = if wald.decision.rejected() {
        trace.push(step(wald, "period effects significant: carry the time-effects model", "C"));
        "C"
    } else {
        trace.push(step(wald, "period effects not significant: carry the base random effects model", "B"));
        "B"
    };
    let Some(hausman) = hausman else { return trace };
    if hausman.decision.rejected() {
        let w = winner.unwrap_or("D");
        trace.push(step(hausman, "random effects inconsistent: compare fixed effects models by BIC", w));
    } else {
        trace.push(step(hausman, "random effects consistent: keep the random effects model", re));
    }
    trace
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Phase1Report {
    pub models: Vec<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub breusch_pagan: Option<TestResult>,
    /// Classical heteroskedasticity variant, reported as a diagnostic only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heteroskedasticity: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wald: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausman: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ModelComparison>,
    pub decision_trace: Vec<DecisionStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionReport>,
}

impl Phase1Report {
    pub fn model(&self, label: &str) -> Option<&FitResult> {
        self.models.iter().find(|m| m.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityFailure {
    pub entity: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2Report {
    pub split_year: i32,
    pub horizon: usize,
    pub all_features: Vec<String>,
    pub selected_features: Vec<String>,
    pub forecasts: Vec<ScenarioPair>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forecast_failures: Vec<EntityFailure>,
    /// Entities where the selected features gave a lower RMSE.
    pub selected_improves: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dendrogram: Option<Dendrogram>,
    pub clusters: ClusterReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub input_sha256: String,
    pub config: PipelineConfig,
    /// Entities, periods and variables after loading and gap filling.
    pub panel_shape: (usize, usize, usize),
    pub periods: (i32, i32),
    pub imputed_cells: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Incomplete { stage: String, error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub status: RunStatus,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase1: Option<Phase1Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase2: Option<Phase2Report>,
}

/// A stage that failed after producing part of its output.
#[derive(Debug)]
pub struct Incomplete<T> {
    pub partial: T,
    pub error: Error,
}

/// Fixed notes describing modelling choices, embedded in every report.
pub fn report_notes() -> Vec<String> {
    [
        "random effects use Swamy-Arora variance components; the time-effects model reuses the components of the base model so the two are nested",
        "fixed-effects likelihoods: model D at the unbiased residual variance, model E (Gaussian GLM) at the ML dispersion",
        "SARIMAX regressors enter the differenced equation; a constant is included only when no differencing is applied",
        "forecast tests use the observed regressor values of the hold-out years",
        "NRMSE is normalised by the range of the hold-out actuals",
        "clustering uses per-entity z-scores (n-1) of the dependent variable with squared-difference DTW",
        "annual growth rate is the mean per-entity compound annual growth rate",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn sha256_file(path: &std::path::Path) -> Result<String, Error> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(format!("cannot open {}", path.display()), e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io("cannot read input", e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Load and gap-fill the configured panel. Returns the panel and the number
/// of cells that were imputed.
pub fn load_dataset(config: &PipelineConfig) -> Result<(PanelDataset, usize), Error> {
    if !config.input.exists() {
        return Err(Error::io(
            format!("input {}", config.input.display()),
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let raw = load_panel(&config.input, &config.variables, &config.entity_column, &config.period_column)?;
    let missing = raw.missing_count();
    let panel = impute_missing(&raw, config.missing_policy)?;
    Ok((panel, missing))
}

pub fn provenance(config: &PipelineConfig, panel: &PanelDataset, imputed_cells: usize) -> Result<Provenance, Error> {
    let periods = panel.periods();
    Ok(Provenance {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        input_sha256: sha256_file(&config.input)?,
        config: config.clone(),
        panel_shape: panel.shape(),
        periods: (periods[0], periods[periods.len() - 1]),
        imputed_cells,
        notes: report_notes(),
    })
}

fn spec(panel: &PanelDataset, kind: ModelKind) -> ModelSpec {
    ModelSpec::new(kind, panel.dependent(), &panel.candidate_predictors())
}

/// Phase I. On failure the partial report holds every completed step.
pub fn run_phase1(panel: &PanelDataset, config: &PipelineConfig) -> Result<Phase1Report, Incomplete<Phase1Report>> {
    let mut report = Phase1Report::default();
    match phase1_steps(panel, config, &mut report) {
        Ok(()) => Ok(report),
        Err(error) => Err(Incomplete { partial: report, error }),
    }
}

fn phase1_steps(panel: &PanelDataset, config: &PipelineConfig, r: &mut Phase1Report) -> Result<(), Error> {
    let alpha = config.alpha;
    let pooled = fit_model(panel, &spec(panel, ModelKind::PooledOls))?;
    let bp = breusch_pagan_panel(&pooled, panel, alpha)?;
    r.heteroskedasticity = breusch_pagan_heteroskedasticity(&pooled, panel, alpha).ok();
    r.breusch_pagan = Some(bp.clone());
    r.models.push(pooled);

    let final_label: String = if !bp.decision.rejected() {
        "A".into()
    } else {
        let b = fit_model(panel, &spec(panel, ModelKind::RandomEffects))?;
        let c = fit_model(panel, &spec(panel, ModelKind::RandomEffectsTime))?;
        let wald = wald_time_effects(&b, &c, alpha)?;
        r.wald = Some(wald.clone());
        r.models.push(b);
        r.models.push(c);
        let carried = if wald.decision.rejected() { "C" } else { "B" };

        let d = fit_model(panel, &spec(panel, ModelKind::FixedEffects))?;
        let h = hausman(&d, r.model(carried).expect("carried model was fitted"), alpha)?;
        r.hausman = Some(h.clone());
        r.models.push(d);
        if h.decision.rejected() {
            let e = fit_model(panel, &spec(panel, ModelKind::FixedEffectsGlm))?;
            r.models.push(e);
            let fe: Vec<FitResult> = r.models.iter().filter(|m| matches!(m.label(), "D" | "E")).cloned().collect();
            let cmp = compare_models(&fe)?;
            let winner = cmp.best().model.clone();
            r.comparison = Some(cmp);
            winner
        } else {
            carried.into()
        }
    };
    r.decision_trace = derive_decision_trace(
        &bp,
        r.wald.as_ref(),
        r.hausman.as_ref(),
        r.comparison.as_ref().map(|c| c.best().model.as_str()),
    );
    r.final_model = Some(final_label.clone());
    let fit = r.model(&final_label).expect("final model was fitted");
    r.selection = Some(select_features(fit, panel, alpha, config.corr_threshold)?);
    Ok(())
}

/// Phase II. Per-entity forecasting failures are recorded and skipped.
pub fn run_phase2(panel: &PanelDataset, selection: &SelectionReport, config: &PipelineConfig) -> Result<Phase2Report, Error> {
    if selection.selected.is_empty() {
        return Err(Error::Config("selection is empty".into()));
    }
    for code in &selection.selected {
        panel.variable_index(code)?;
    }
    let periods = panel.periods();
    let last = periods[periods.len() - 1];
    let horizon = config.forecast_horizon;
    let split_year = config.split_year.unwrap_or(last - horizon as i32);
    if split_year + horizon as i32 > last || split_year < periods[0] {
        return Err(Error::Config(format!(
            "split year {split_year} with horizon {horizon} does not fit the panel periods {}..{last}",
            periods[0]
        )));
    }
    let all = panel.candidate_predictors();
    let scenario = ScenarioConfig {
        split_year,
        horizon,
        search: config.sarimax.search(),
        options: config.sarimax.fit_options(),
    };
    let outcomes: Vec<Result<ScenarioPair, EntityFailure>> = panel
        .entities()
        .par_iter()
        .map(|e| {
            crate::sarimax::forecast_entity(panel, e, &selection.selected, &all, &scenario).map_err(|err| EntityFailure {
                entity: e.clone(),
                error: err.to_string(),
            })
        })
        .collect();
    let mut forecasts = Vec::new();
    let mut forecast_failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(p) => forecasts.push(p),
            Err(f) => {
                log::warn!("forecasting skipped for {}: {}", f.entity, f.error);
                forecast_failures.push(f);
            }
        }
    }
    let selected_improves = forecasts.iter().filter(|p| p.selected_improves()).count();

    let mut warnings = Vec::new();
    let names = panel.entities().to_vec();
    let series = standardized_series(panel, panel.dependent())?;
    let options = KClusterOptions {
        local_cost: config.clustering.local_cost,
        band: config.clustering.band,
        ..KClusterOptions::default()
    };
    let (dendrogram, mut clusters) = if names.len() == 1 {
        warnings.push("a single entity cannot be clustered; using k = 1".to_string());
        (None, dtw_kcluster(&series, &names, 1, None, &options)?)
    } else {
        let k = config.k_clusters;
        if k > names.len() {
            return Err(Error::Config(format!("k_clusters = {k} exceeds the {} entities", names.len())));
        }
        let dendrogram = ward_cluster(&series, &names)?;
        let seed = dendrogram.cut(k)?;
        let clusters = dtw_kcluster(&series, &names, k, Some(&seed), &options)?;
        (Some(dendrogram), clusters)
    };
    clusters.feature_summaries = cluster_feature_summary(panel, &clusters.labels, &selection.selected)?;
    Ok(Phase2Report {
        split_year,
        horizon,
        all_features: all,
        selected_features: selection.selected.clone(),
        forecasts,
        forecast_failures,
        selected_improves,
        dendrogram,
        clusters,
        warnings,
    })
}

/// Load, run both phases and assemble the report. A failure inside a phase
/// still yields a report, flagged incomplete, alongside the error.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport, (Option<Box<PipelineReport>>, Error)> {
    config.validate().map_err(|e| (None, e))?;
    let (panel, imputed) = load_dataset(config).map_err(|e| (None, e))?;
    let provenance = provenance(config, &panel, imputed).map_err(|e| (None, e))?;
    let mut report = PipelineReport {
        status: RunStatus::Complete,
        provenance,
        phase1: None,
        phase2: None,
    };
    let phase1 = match run_phase1(&panel, config) {
        Ok(p) => p,
        Err(Incomplete { partial, error }) => {
            report.phase1 = Some(partial);
            report.status = RunStatus::Incomplete {
                stage: "phase1".into(),
                error: error.to_string(),
            };
            return Err((Some(Box::new(report)), error));
        }
    };
    let selection = phase1.selection.clone().expect("complete phase 1 has a selection");
    report.phase1 = Some(phase1);
    match run_phase2(&panel, &selection, config) {
        Ok(p2) => report.phase2 = Some(p2),
        Err(error) => {
            report.status = RunStatus::Incomplete {
                stage: "phase2".into(),
                error: error.to_string(),
            };
            return Err((Some(Box::new(report)), error));
        }
    }
    Ok(report)
}

/// Deterministic JSON rendering of a report.
pub fn report_json(report: &PipelineReport) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}
