//! Panel regressions: pooled OLS, Swamy–Arora random effects (with and
//! without period dummies) and fixed effects by within-demeaning or
//! entity dummies, plus information-criterion model comparison.
//!
//! Observations are stacked entity-major (all periods of the first entity,
//! then the second, …), which is also the order of stored residuals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    gaussian_loglik, solve_least_squares, tail_probability, Distribution, NumericsError, Sides,
};
use crate::panel::{PanelDataset, PanelError};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("design is rank deficient at term `{term}`")]
    RankDeficient { term: String },
    #[error(transparent)]
    Numerics(NumericsError),
    #[error("{n} observations are not enough for {k} parameters")]
    InsufficientObservations { n: usize, k: usize },
    #[error("idiosyncratic variance estimate is not positive ({0})")]
    DegenerateVariance(f64),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("fits cannot be compared: {0}")]
    IncomparableFits(String),
}

/// The five model families of the Phase I comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Model A.
    PooledOls,
    /// Model B.
    RandomEffects,
    /// Model C: random effects plus period dummies.
    RandomEffectsTime,
    /// Model D: linear regression with entity fixed effects.
    #[serde(rename = "fixed_effects_within")]
    FixedEffects,
    /// Model E: Gaussian identity-link GLM with entity fixed effects.
    FixedEffectsGlm,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::PooledOls => "A",
            ModelKind::RandomEffects => "B",
            ModelKind::RandomEffectsTime => "C",
            ModelKind::FixedEffects => "D",
            ModelKind::FixedEffectsGlm => "E",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Some(match label.to_ascii_uppercase().as_str() {
            "A" => ModelKind::PooledOls,
            "B" => ModelKind::RandomEffects,
            "C" => ModelKind::RandomEffectsTime,
            "D" => ModelKind::FixedEffects,
            "E" => ModelKind::FixedEffectsGlm,
            _ => return None,
        })
    }

    pub fn description(self) -> &'static str {
        match self {
            ModelKind::PooledOls => "pooled OLS",
            ModelKind::RandomEffects => "random effects",
            ModelKind::RandomEffectsTime => "random effects with period effects",
            ModelKind::FixedEffects => "linear regression with entity fixed effects",
            ModelKind::FixedEffectsGlm => "Gaussian GLM with entity fixed effects",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dependent: String,
    pub predictors: Vec<String>,
    pub include_intercept: bool,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, dependent: &str, predictors: &[String]) -> Self {
        Self {
            kind,
            dependent: dependent.to_string(),
            predictors: predictors.to_vec(),
            include_intercept: true,
        }
    }

    fn validate(&self) -> Result<(), EstimationError> {
        if self.predictors.is_empty() {
            return Err(EstimationError::InvalidSpec("no predictors".into()));
        }
        for (i, p) in self.predictors.iter().enumerate() {
            if *p == self.dependent {
                return Err(EstimationError::InvalidSpec(format!("`{p}` is both dependent and predictor")));
            }
            if self.predictors[..i].contains(p) {
                return Err(EstimationError::InvalidSpec(format!("duplicate predictor `{p}`")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Intercept,
    Predictor,
    PeriodDummy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub term: String,
    pub kind: TermKind,
    pub estimate: f64,
    pub std_error: f64,
    pub statistic: f64,
    pub p_value: f64,
}

impl Coefficient {
    /// `***`, `**`, `*` at 0.001, 0.01 and 0.05.
    pub fn stars(&self) -> &'static str {
        significance_stars(self.p_value)
    }
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub f_statistic: f64,
    pub f_df: (f64, f64),
    pub f_pvalue: f64,
    pub total_ss: f64,
    pub residual_ss: f64,
    /// Residual variance used for the coefficient covariance.
    pub sigma2: f64,
    pub df_resid: usize,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    pub n_params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    pub sigma2_u: f64,
    pub sigma2_e: f64,
    pub theta: f64,
    /// The between-based estimate of `sigma2_u` was negative and set to 0.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityEffect {
    pub entity: String,
    pub effect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedEffectsMethod {
    Within,
    DummyVariable,
}

/// Estimated model with inference and fit statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<FixedEffectsMethod>,
    pub coefficients: Vec<Coefficient>,
    /// Coefficient covariance, rows and columns in `coefficients` order.
    pub covariance: Vec<Vec<f64>>,
    /// Reference distribution of the coefficient statistics (two-sided).
    pub reference: Distribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_effects: Option<Vec<EntityEffect>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_components: Option<VarianceComponents>,
    pub fit: FitStatistics,
    /// How the likelihood variance was chosen, for the report.
    pub likelihood_note: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Entity-major residuals (on the quasi-demeaned scale for RE fits).
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.term == term)
    }

    /// Coefficients of the declared predictors, in spec order.
    pub fn slopes(&self) -> Vec<&Coefficient> {
        self.coefficients.iter().filter(|c| c.kind == TermKind::Predictor).collect()
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let k = self.covariance.len();
        DMatrix::from_fn(k, k, |i, j| self.covariance[i][j])
    }

    pub fn label(&self) -> &'static str {
        self.spec.kind.label()
    }
}

struct Design {
    terms: Vec<(String, TermKind)>,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

fn check_dependent(panel: &PanelDataset, spec: &ModelSpec) -> Result<(), EstimationError> {
    spec.validate()?;
    panel.ensure_complete()?;
    panel.variable_index(&spec.dependent)?;
    for p in &spec.predictors {
        panel.variable_index(p)?;
    }
    Ok(())
}

fn build_design(panel: &PanelDataset, spec: &ModelSpec, intercept: bool, period_dummies: bool) -> Result<Design, EstimationError> {
    let n = panel.n_obs();
    let mut terms = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if intercept {
        terms.push(("(Intercept)".to_string(), TermKind::Intercept));
        columns.push(vec![1.0; n]);
    }
    for p in &spec.predictors {
        terms.push((p.clone(), TermKind::Predictor));
        columns.push(panel.column(p)?);
    }
    if period_dummies {
        let nt = panel.periods().len();
        for (t, period) in panel.periods().iter().enumerate().skip(1) {
            terms.push((format!("year{period}"), TermKind::PeriodDummy));
            columns.push((0..n).map(|row| if row % nt == t { 1.0 } else { 0.0 }).collect());
        }
    }
    let k = columns.len();
    let x = DMatrix::from_fn(n, k, |i, j| columns[j][i]);
    let y = DVector::from_vec(panel.column(&spec.dependent)?);
    Ok(Design { terms, x, y })
}

fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>, terms: &[(String, TermKind)]) -> Result<crate::numerics::LeastSquaresSolution, EstimationError> {
    solve_least_squares(x, y).map_err(|e| match e {
        NumericsError::RankDeficient { column } => EstimationError::RankDeficient {
            term: terms.get(column).map(|t| t.0.clone()).unwrap_or_else(|| column.to_string()),
        },
        NumericsError::Underdetermined { rows, cols } => EstimationError::InsufficientObservations { n: rows, k: cols },
        other => EstimationError::Numerics(other),
    })
}

/// Demean every column (and y) within each entity block of length `nt`.
fn entity_demean(m: &DMatrix<f64>, nt: usize, factor: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    let ne = m.nrows() / nt;
    for j in 0..m.ncols() {
        for e in 0..ne {
            let block = e * nt..(e + 1) * nt;
            let mean = block.clone().map(|i| m[(i, j)]).sum::<f64>() / nt as f64;
            for i in block {
                out[(i, j)] -= factor * mean;
            }
        }
    }
    out
}

fn entity_means(m: &DMatrix<f64>, nt: usize) -> DMatrix<f64> {
    let ne = m.nrows() / nt;
    DMatrix::from_fn(ne, m.ncols(), |e, j| (e * nt..(e + 1) * nt).map(|i| m[(i, j)]).sum::<f64>() / nt as f64)
}

fn statistic(estimate: f64, se: f64) -> f64 {
    if se > 0.0 {
        estimate / se
    } else if estimate == 0.0 {
        0.0
    } else {
        estimate.signum() * f64::INFINITY
    }
}

fn coefficient_table(
    terms: &[(String, TermKind)],
    estimates: &DVector<f64>,
    covariance: &DMatrix<f64>,
    reference: Distribution,
) -> Result<Vec<Coefficient>, EstimationError> {
    terms
        .iter()
        .enumerate()
        .map(|(j, (term, kind))| {
            let estimate = estimates[j];
            let std_error = covariance[(j, j)].max(0.0).sqrt();
            let stat = statistic(estimate, std_error);
            let p_value = tail_probability(stat, reference, Sides::Two).map_err(EstimationError::Numerics)?;
            Ok(Coefficient {
                term: term.clone(),
                kind: *kind,
                estimate,
                std_error,
                statistic: stat,
                p_value,
            })
        })
        .collect()
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn centered_ss(y: &DVector<f64>) -> f64 {
    let mean = y.mean();
    y.iter().map(|v| (v - mean).powi(2)).sum()
}

fn f_test(restricted_rss: f64, rss: f64, q: usize, df: usize) -> Result<(f64, f64), EstimationError> {
    if q == 0 {
        return Ok((f64::NAN, f64::NAN));
    }
    let num = (restricted_rss - rss).max(0.0) / q as f64;
    let den = rss / df as f64;
    let f = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let p = tail_probability(f, Distribution::F { df1: q as f64, df2: df as f64 }, Sides::One).map_err(EstimationError::Numerics)?;
    Ok((f, p))
}

fn information_criteria(log_likelihood: f64, n_params: usize, n_obs: usize) -> (f64, f64) {
    let k = n_params as f64;
    (2.0 * k - 2.0 * log_likelihood, k * (n_obs as f64).ln() - 2.0 * log_likelihood)
}

fn loglik_or_infinite(residuals: &[f64], sigma2: f64) -> f64 {
    if sigma2 > 0.0 {
        gaussian_loglik(residuals, sigma2).unwrap_or(f64::NAN)
    } else {
        // A perfect fit has unbounded Gaussian likelihood.
        f64::INFINITY
    }
}

/// Model A: one regression over all stacked entity-period rows.
pub fn fit_pooled_ols(panel: &PanelDataset, spec: &ModelSpec) -> Result<FitResult, EstimationError> {
    if spec.kind != ModelKind::PooledOls {
        return Err(EstimationError::InvalidSpec(format!("expected pooled_ols, got {:?}", spec.kind)));
    }
    check_dependent(panel, spec)?;
    let d = build_design(panel, spec, spec.include_intercept, false)?;
    let (n, k) = d.x.shape();
    if n <= k {
        return Err(EstimationError::InsufficientObservations { n, k });
    }
    let sol = lstsq(&d.x, &d.y, &d.terms)?;
    let df = n - k;
    let rss = sol.residual_sum_squares;
    let sigma2 = rss / df as f64;
    let cov = &sol.covariance_unscaled * sigma2;
    let reference = Distribution::StudentT { df: df as f64 };
    let coefficients = coefficient_table(&d.terms, &sol.coefficients, &cov, reference)?;

    let total_ss = if spec.include_intercept { centered_ss(&d.y) } else { d.y.norm_squared() };
    let r_squared = 1.0 - rss / total_ss;
    let dof_base = if spec.include_intercept { n - 1 } else { n };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * dof_base as f64 / df as f64;
    let q = if spec.include_intercept { k - 1 } else { k };
    let (f_statistic, f_pvalue) = f_test(total_ss, rss, q, df)?;
    let residuals: Vec<f64> = sol.residuals.iter().copied().collect();
    let log_likelihood = loglik_or_infinite(&residuals, rss / n as f64);
    let n_params = k + 1;
    let (aic, bic) = information_criteria(log_likelihood, n_params, n);
    Ok(FitResult {
        spec: spec.clone(),
        method: None,
        coefficients,
        covariance: to_rows(&cov),
        reference,
        entity_effects: None,
        variance_components: None,
        fit: FitStatistics {
            r_squared,
            adj_r_squared,
            f_statistic,
            f_df: (q as f64, df as f64),
            f_pvalue,
            total_ss,
            residual_ss: rss,
            sigma2,
            df_resid: df,
            log_likelihood,
            aic,
            bic,
            n_obs: n,
            n_params,
        },
        likelihood_note: "Gaussian log-likelihood at the ML variance RSS/n; parameters count coefficients and the variance".into(),
        warnings: Vec::new(),
        residuals,
    })
}

/// Swamy–Arora variance components from within and between regressions.
fn swamy_arora(panel: &PanelDataset, spec: &ModelSpec) -> Result<(VarianceComponents, Vec<String>), EstimationError> {
    let nt = panel.periods().len();
    let ne = panel.entities().len();
    let base = build_design(panel, spec, false, false)?;
    let (n, p) = base.x.shape();

    let xw = entity_demean(&base.x, nt, 1.0);
    let yw = entity_demean(&DMatrix::from_column_slice(n, 1, base.y.as_slice()), nt, 1.0).column(0).into_owned();
    let within_df = n
        .checked_sub(ne + p)
        .filter(|d| *d > 0)
        .ok_or(EstimationError::InsufficientObservations { n, k: ne + p })?;
    let within = lstsq(&xw, &yw, &base.terms)?;
    let sigma2_e = within.residual_sum_squares / within_df as f64;
    if !(sigma2_e > 0.0) {
        return Err(EstimationError::DegenerateVariance(sigma2_e));
    }

    let mut xb = DMatrix::from_element(ne, p + 1, 1.0);
    xb.columns_mut(1, p).copy_from(&entity_means(&base.x, nt));
    let yb = entity_means(&DMatrix::from_column_slice(n, 1, base.y.as_slice()), nt).column(0).into_owned();
    let between_df = ne
        .checked_sub(p + 1)
        .filter(|d| *d > 0)
        .ok_or(EstimationError::InsufficientObservations { n: ne, k: p + 1 })?;
    let mut between_terms = vec![("(Intercept)".to_string(), TermKind::Intercept)];
    between_terms.extend(base.terms.iter().cloned());
    let between = lstsq(&xb, &yb, &between_terms)?;
    let sigma2_between = between.residual_sum_squares / between_df as f64;
    let raw_u = sigma2_between - sigma2_e / nt as f64;

    let mut warnings = Vec::new();
    let (sigma2_u, clamped) = if raw_u < 0.0 {
        warnings.push(format!("negative entity variance estimate {raw_u:.6e} clamped to 0"));
        (0.0, true)
    } else {
        (raw_u, false)
    };
    let theta = 1.0 - (sigma2_e / (nt as f64 * sigma2_u + sigma2_e)).sqrt();
    Ok((
        VarianceComponents {
            sigma2_u,
            sigma2_e,
            theta,
            clamped,
        },
        warnings,
    ))
}

/// Feasible GLS for a given quasi-demeaning factor. Exposed so callers can
/// probe the boundary behaviour (`theta = 0` is pooled OLS, `theta → 1`
/// approaches the within estimator).
pub fn quasi_demeaned_fit(
    panel: &PanelDataset,
    spec: &ModelSpec,
    components: VarianceComponents,
    time_effects: bool,
) -> Result<FitResult, EstimationError> {
    check_dependent(panel, spec)?;
    let nt = panel.periods().len();
    let ne = panel.entities().len();
    let theta = components.theta;
    let d = build_design(panel, spec, spec.include_intercept, time_effects)?;
    let (n, k) = d.x.shape();
    if n <= k {
        return Err(EstimationError::InsufficientObservations { n, k });
    }
    let xs = entity_demean(&d.x, nt, theta);
    let ys = entity_demean(&DMatrix::from_column_slice(n, 1, d.y.as_slice()), nt, theta).column(0).into_owned();
    let sol = lstsq(&xs, &ys, &d.terms)?;
    let df = n - k;
    let rss = sol.residual_sum_squares;
    let sigma2 = rss / df as f64;
    let cov = &sol.covariance_unscaled * sigma2;
    let reference = Distribution::StandardNormal;
    let coefficients = coefficient_table(&d.terms, &sol.coefficients, &cov, reference)?;

    let total_ss = centered_ss(&ys);
    let r_squared = 1.0 - rss / total_ss;
    let adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) as f64 / df as f64;
    let (f_statistic, f_pvalue) = f_test(total_ss, rss, k - 1, df)?;
    let residuals: Vec<f64> = sol.residuals.iter().copied().collect();

    // Exact Gaussian likelihood of the error-components model at the
    // estimated variances: |Ω_i| = σ_e^{2(T−1)} (σ_e² + T σ_u²).
    let s2e = components.sigma2_e;
    let s2u = components.sigma2_u;
    let log_det = ne as f64 * ((nt as f64 - 1.0) * s2e.ln() + (s2e + nt as f64 * s2u).ln());
    let log_likelihood = -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + rss / s2e);
    let n_params = k + 2;
    let (aic, bic) = information_criteria(log_likelihood, n_params, n);
    let kind = if time_effects { ModelKind::RandomEffectsTime } else { ModelKind::RandomEffects };
    let mut spec = spec.clone();
    spec.kind = kind;
    Ok(FitResult {
        spec,
        method: None,
        coefficients,
        covariance: to_rows(&cov),
        reference,
        entity_effects: None,
        variance_components: Some(components),
        fit: FitStatistics {
            r_squared,
            adj_r_squared,
            f_statistic,
            f_df: ((k - 1) as f64, df as f64),
            f_pvalue,
            total_ss,
            residual_ss: rss,
            sigma2,
            df_resid: df,
            log_likelihood,
            aic,
            bic,
            n_obs: n,
            n_params,
        },
        likelihood_note: "exact error-components Gaussian likelihood at the Swamy-Arora variances; parameters count coefficients and both variances".into(),
        warnings: Vec::new(),
        residuals,
    })
}

/// Models B and C: random effects by feasible GLS.
///
/// Variance components always come from the regression on the declared
/// predictors, so models with and without period dummies share the same
/// quasi-demeaning and are nested.
pub fn fit_random_effects(panel: &PanelDataset, spec: &ModelSpec, time_trend: bool) -> Result<FitResult, EstimationError> {
    let expected = if time_trend { ModelKind::RandomEffectsTime } else { ModelKind::RandomEffects };
    if spec.kind != expected {
        return Err(EstimationError::InvalidSpec(format!("expected {expected:?}, got {:?}", spec.kind)));
    }
    check_dependent(panel, spec)?;
    if panel.periods().len() < 2 {
        return Err(EstimationError::InsufficientObservations { n: panel.periods().len(), k: 2 });
    }
    let (components, warnings) = swamy_arora(panel, spec)?;
    let mut fit = quasi_demeaned_fit(panel, spec, components, time_trend)?;
    fit.warnings = warnings;
    Ok(fit)
}

/// Models D and E: entity fixed effects.
///
/// Both methods give the same slopes, standard errors and entity effects.
/// They differ in the reported R² (within vs. overall). The model kind
/// decides the likelihood accounting: the GLM (E) evaluates the Gaussian
/// likelihood at the ML variance `RSS/n`; the linear regression (D) at the
/// degrees-of-freedom corrected residual variance `RSS/(n − p − E)`.
pub fn fit_fixed_effects(panel: &PanelDataset, spec: &ModelSpec, method: FixedEffectsMethod) -> Result<FitResult, EstimationError> {
    if !matches!(spec.kind, ModelKind::FixedEffects | ModelKind::FixedEffectsGlm) {
        return Err(EstimationError::InvalidSpec(format!("expected a fixed-effects kind, got {:?}", spec.kind)));
    }
    check_dependent(panel, spec)?;
    let nt = panel.periods().len();
    let ne = panel.entities().len();
    if nt < 2 {
        return Err(EstimationError::InsufficientObservations { n: nt, k: 2 });
    }
    let base = build_design(panel, spec, false, false)?;
    let (n, p) = base.x.shape();
    let df = n
        .checked_sub(p + ne)
        .filter(|d| *d > 0)
        .ok_or(EstimationError::InsufficientObservations { n, k: p + ne })?;
    let y_mat = DMatrix::from_column_slice(n, 1, base.y.as_slice());
    let yw = entity_demean(&y_mat, nt, 1.0).column(0).into_owned();
    let within_tss = yw.norm_squared();

    let (slopes, cov_unscaled, residuals, rss, total_ss) = match method {
        FixedEffectsMethod::Within => {
            let xw = entity_demean(&base.x, nt, 1.0);
            let sol = lstsq(&xw, &yw, &base.terms)?;
            let res: Vec<f64> = sol.residuals.iter().copied().collect();
            (sol.coefficients, sol.covariance_unscaled, res, sol.residual_sum_squares, within_tss)
        }
        FixedEffectsMethod::DummyVariable => {
            let k = 1 + p + (ne - 1);
            let mut x = DMatrix::zeros(n, k);
            let mut terms = vec![("(Intercept)".to_string(), TermKind::Intercept)];
            terms.extend(base.terms.iter().cloned());
            for i in 0..n {
                x[(i, 0)] = 1.0;
                for j in 0..p {
                    x[(i, 1 + j)] = base.x[(i, j)];
                }
                let e = i / nt;
                if e > 0 {
                    x[(i, p + e)] = 1.0;
                }
            }
            for e in 1..ne {
                terms.push((format!("entity:{}", panel.entities()[e]), TermKind::Intercept));
            }
            let sol = lstsq(&x, &base.y, &terms)?;
            let slopes = sol.coefficients.rows(1, p).into_owned();
            let cov = sol.covariance_unscaled.view((1, 1), (p, p)).into_owned();
            let res: Vec<f64> = sol.residuals.iter().copied().collect();
            (slopes, cov, res, sol.residual_sum_squares, centered_ss(&base.y))
        }
    };

    let sigma2 = rss / df as f64;
    let cov = &cov_unscaled * sigma2;
    let reference = Distribution::StudentT { df: df as f64 };
    let coefficients = coefficient_table(&base.terms, &slopes, &cov, reference)?;

    let y_means = entity_means(&y_mat, nt);
    let x_means = entity_means(&base.x, nt);
    let entity_effects = (0..ne)
        .map(|e| EntityEffect {
            entity: panel.entities()[e].clone(),
            effect: y_means[(e, 0)] - (0..p).map(|j| x_means[(e, j)] * slopes[j]).sum::<f64>(),
        })
        .collect();

    let r_squared = 1.0 - rss / total_ss;
    let adj_den = match method {
        FixedEffectsMethod::Within => n - ne,
        FixedEffectsMethod::DummyVariable => n - 1,
    };
    let adj_r_squared = 1.0 - (1.0 - r_squared) * adj_den as f64 / df as f64;
    let (f_statistic, f_pvalue) = f_test(within_tss, rss, p, df)?;

    let (lik_variance, likelihood_note) = match spec.kind {
        ModelKind::FixedEffectsGlm => (
            rss / n as f64,
            "Gaussian GLM likelihood at the ML dispersion RSS/n; parameters count slopes, entity intercepts and the dispersion",
        ),
        _ => (
            sigma2,
            "linear-regression likelihood at the unbiased residual variance RSS/(n-p-E); parameters count slopes, entity intercepts and the variance",
        ),
    };
    let log_likelihood = loglik_or_infinite(&residuals, lik_variance);
    let n_params = p + ne + 1;
    let (aic, bic) = information_criteria(log_likelihood, n_params, n);
    Ok(FitResult {
        spec: spec.clone(),
        method: Some(method),
        coefficients,
        covariance: to_rows(&cov),
        reference,
        entity_effects: Some(entity_effects),
        variance_components: None,
        fit: FitStatistics {
            r_squared,
            adj_r_squared,
            f_statistic,
            f_df: (p as f64, df as f64),
            f_pvalue,
            total_ss,
            residual_ss: rss,
            sigma2,
            df_resid: df,
            log_likelihood,
            aic,
            bic,
            n_obs: n,
            n_params,
        },
        likelihood_note: likelihood_note.into(),
        warnings: Vec::new(),
        residuals,
    })
}

/// Fit any model kind with its default method (dummy variables for D/E).
pub fn fit_model(panel: &PanelDataset, spec: &ModelSpec) -> Result<FitResult, EstimationError> {
    match spec.kind {
        ModelKind::PooledOls => fit_pooled_ols(panel, spec),
        ModelKind::RandomEffects => fit_random_effects(panel, spec, false),
        ModelKind::RandomEffectsTime => fit_random_effects(panel, spec, true),
        ModelKind::FixedEffects | ModelKind::FixedEffectsGlm => fit_fixed_effects(panel, spec, FixedEffectsMethod::DummyVariable),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub model: String,
    pub kind: ModelKind,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub delta_aic: f64,
    pub delta_bic: f64,
    pub delta_log_likelihood: f64,
}

/// Fits ranked by BIC (then AIC, then fewer parameters, then input order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub ranking: Vec<ComparisonEntry>,
    /// Index into the input slice of the best fit.
    pub best_index: usize,
}

impl ModelComparison {
    pub fn best(&self) -> &ComparisonEntry {
        &self.ranking[0]
    }
}

pub fn compare_models(fits: &[FitResult]) -> Result<ModelComparison, EstimationError> {
    let first = fits.first().ok_or_else(|| EstimationError::IncomparableFits("no fits given".into()))?;
    for f in fits {
        if f.fit.n_obs != first.fit.n_obs {
            return Err(EstimationError::IncomparableFits(format!(
                "observation counts differ ({} vs {})",
                first.fit.n_obs, f.fit.n_obs
            )));
        }
        if f.spec.dependent != first.spec.dependent {
            return Err(EstimationError::IncomparableFits("dependent variables differ".into()));
        }
    }
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (&fits[a].fit, &fits[b].fit);
        fa.bic
            .total_cmp(&fb.bic)
            .then(fa.aic.total_cmp(&fb.aic))
            .then(fa.n_params.cmp(&fb.n_params))
    });
    let best = &fits[order[0]].fit;
    let ranking = order
        .iter()
        .map(|&i| {
            let f = &fits[i];
            ComparisonEntry {
                model: f.label().to_string(),
                kind: f.spec.kind,
                log_likelihood: f.fit.log_likelihood,
                aic: f.fit.aic,
                bic: f.fit.bic,
                n_params: f.fit.n_params,
                delta_aic: f.fit.aic - best.aic,
                delta_bic: f.fit.bic - best.bic,
                delta_log_likelihood: f.fit.log_likelihood - best.log_likelihood,
            }
        })
        .collect();
    Ok(ModelComparison {
        ranking,
        best_index: order[0],
    })
}
