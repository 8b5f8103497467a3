//! Per-entity hold-out forecasting with two exogenous feature sets.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_forecast, fit_sarimax, forecast, select_order, FitOptions, OrderSearch, SarimaxError, SarimaxOrder};
use crate::panel::PanelDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    AllFeatures,
    SelectedFeatures,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::AllFeatures => "all_features",
            Scenario::SelectedFeatures => "selected_features",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    pub entity: String,
    pub scenario: Scenario,
    pub features: Vec<String>,
    pub order: SarimaxOrder,
    pub horizon: usize,
    pub periods: Vec<i32>,
    pub point_forecasts: Vec<f64>,
    pub actuals: Vec<f64>,
    pub mae: f64,
    pub rmse: f64,
    pub nrmse: Option<f64>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPair {
    pub entity: String,
    pub all_features: ForecastReport,
    pub selected_features: ForecastReport,
}

impl ScenarioPair {
    /// Selected features gave a strictly lower RMSE.
    pub fn selected_improves(&self) -> bool {
        self.selected_features.rmse < self.all_features.rmse
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Last training period.
    pub split_year: i32,
    pub horizon: usize,
    pub search: OrderSearch,
    pub options: FitOptions,
}

impl ScenarioConfig {
    pub fn new(split_year: i32, horizon: usize) -> Self {
        Self {
            split_year,
            horizon,
            search: OrderSearch::default(),
            options: FitOptions::default(),
        }
    }
}

fn exog_matrix(panel: &PanelDataset, entity: usize, codes: &[String], rows: std::ops::Range<usize>) -> Result<DMatrix<f64>, SarimaxError> {
    let mut m = DMatrix::zeros(rows.len(), codes.len());
    for (j, code) in codes.iter().enumerate() {
        let v = panel.variable_index(code)?;
        let series = panel.series(entity, v);
        for (i, t) in rows.clone().enumerate() {
            m[(i, j)] = series[t];
        }
    }
    Ok(m)
}

fn window(panel: &PanelDataset, config: &ScenarioConfig) -> Result<(usize, usize), SarimaxError> {
    let periods = panel.periods();
    let split = periods
        .iter()
        .position(|&p| p == config.split_year)
        .ok_or_else(|| SarimaxError::InvalidOrder(format!("split year {} is not a panel period", config.split_year)))?;
    let train = split + 1;
    if config.horizon == 0 || train + config.horizon > periods.len() {
        return Err(SarimaxError::InvalidOrder(format!(
            "split year {} plus horizon {} exceeds the last period {}",
            config.split_year,
            config.horizon,
            periods.last().copied().unwrap_or_default()
        )));
    }
    Ok((train, config.horizon))
}

fn run_scenario(
    panel: &PanelDataset,
    entity: usize,
    scenario: Scenario,
    features: &[String],
    config: &ScenarioConfig,
) -> Result<ForecastReport, SarimaxError> {
    let (train, h) = window(panel, config)?;
    let dep = panel.variable_index(panel.dependent())?;
    let y_all = panel.series(entity, dep);
    let y = &y_all[..train];
    let x_train = exog_matrix(panel, entity, features, 0..train)?;
    let x_test = exog_matrix(panel, entity, features, train..train + h)?;
    let selection = select_order(y, &x_train, &config.search, &config.options)?;
    let fit = fit_sarimax(y, &x_train, selection.order, &config.options)?.with_exog_names(features);
    let point_forecasts = forecast(&fit, &x_test, h)?;
    let actuals = y_all[train..train + h].to_vec();
    let metrics = evaluate_forecast(&point_forecasts, &actuals)?;
    Ok(ForecastReport {
        entity: panel.entities()[entity].clone(),
        scenario,
        features: features.to_vec(),
        order: fit.order,
        horizon: h,
        periods: panel.periods()[train..train + h].to_vec(),
        point_forecasts,
        actuals,
        mae: metrics.mae,
        rmse: metrics.rmse,
        nrmse: metrics.nrmse,
        converged: fit.converged,
        warnings: fit.warnings,
    })
}

/// Both scenarios for one entity.
pub fn forecast_entity(
    panel: &PanelDataset,
    entity: &str,
    selected: &[String],
    all_codes: &[String],
    config: &ScenarioConfig,
) -> Result<ScenarioPair, SarimaxError> {
    let e = panel.entity_index(entity)?;
    let all_features = run_scenario(panel, e, Scenario::AllFeatures, all_codes, config)?;
    let selected_features = if selected == all_codes {
        ForecastReport {
            scenario: Scenario::SelectedFeatures,
            ..all_features.clone()
        }
    } else {
        run_scenario(panel, e, Scenario::SelectedFeatures, selected, config)?
    };
    Ok(ScenarioPair {
        entity: entity.to_string(),
        all_features,
        selected_features,
    })
}

/// Every entity, in panel order. Entities are fitted in parallel.
pub fn run_two_scenarios_with(
    panel: &PanelDataset,
    selected: &[String],
    all_codes: &[String],
    config: &ScenarioConfig,
) -> Result<Vec<ScenarioPair>, SarimaxError> {
    window(panel, config)?;
    panel
        .entities()
        .par_iter()
        .map(|e| forecast_entity(panel, e, selected, all_codes, config))
        .collect()
}

/// [`run_two_scenarios_with`] using the default order search.
pub fn run_two_scenarios(
    panel: &PanelDataset,
    selected: &[String],
    all_codes: &[String],
    split_year: i32,
    horizon: usize,
) -> Result<Vec<ScenarioPair>, SarimaxError> {
    run_two_scenarios_with(panel, selected, all_codes, &ScenarioConfig::new(split_year, horizon))
}
