//! Specification tests behind the model-choice flow: the entity-effects
//! Lagrange multiplier test (pooled vs. random effects), the Wald F test on
//! period dummies, and the Hausman contrast (random vs. fixed effects).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{FitResult, ModelKind, TermKind};
use crate::numerics::{
    min_eigenvalue, solve_least_squares, symmetric_pseudo_inverse, tail_probability, Distribution, NumericsError, Sides,
};
use crate::panel::{PanelDataset, PanelError};

#[derive(Debug, Error)]
pub enum TestError {
    #[error("residuals do not form a balanced panel ({residuals} residuals for {entities} x {periods})")]
    UnbalancedPanel { residuals: usize, entities: usize, periods: usize },
    #[error("models are not nested: {0}")]
    NotNested(String),
    #[error("fits are incompatible: {0}")]
    IncompatibleFits(String),
    #[error("invalid test input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    RejectNull,
    FailToReject,
}

impl Decision {
    pub fn from_p_value(p_value: f64, alpha: f64) -> Self {
        if p_value < alpha {
            Decision::RejectNull
        } else {
            Decision::FailToReject
        }
    }

    pub fn rejected(self) -> bool {
        self == Decision::RejectNull
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: String,
    pub statistic: f64,
    pub distribution: Distribution,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
    pub null_description: String,
    pub alternative_description: String,
    /// Hausman only: the covariance contrast was not positive definite and
    /// a pseudo-inverse (with rank as df) was used.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub pseudo_inverse: bool,
}

impl TestResult {
    fn new(name: &str, statistic: f64, distribution: Distribution, alpha: f64, null: &str, alternative: &str) -> Result<Self, TestError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(TestError::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let p_value = tail_probability(statistic, distribution, Sides::One)?;
        Ok(Self {
            test_name: name.to_string(),
            statistic,
            distribution,
            p_value,
            alpha,
            decision: Decision::from_p_value(p_value, alpha),
            null_description: null.to_string(),
            alternative_description: alternative.to_string(),
            pseudo_inverse: false,
        })
    }
}

/// Entity-effects LM statistic from a pooled fit:
/// `nT / (2(T−1)) · [Σᵢ(Σₜ eᵢₜ)² / Σ eᵢₜ² − 1]²`, referred to χ²(1).
pub fn breusch_pagan_panel(pooled_fit: &FitResult, panel: &PanelDataset, alpha: f64) -> Result<TestResult, TestError> {
    if pooled_fit.spec.kind != ModelKind::PooledOls {
        return Err(TestError::InvalidInput("the LM test needs a pooled OLS fit".into()));
    }
    let (ne, nt) = (panel.entities().len(), panel.periods().len());
    let e = &pooled_fit.residuals;
    if e.len() != ne * nt || nt < 2 {
        return Err(TestError::UnbalancedPanel {
            residuals: e.len(),
            entities: ne,
            periods: nt,
        });
    }
    let ss: f64 = e.iter().map(|v| v * v).sum();
    if !(ss > 0.0) {
        return Err(TestError::InvalidInput("residuals are identically zero".into()));
    }
    let grouped: f64 = e.chunks(nt).map(|c| c.iter().sum::<f64>().powi(2)).sum();
    let n = (ne * nt) as f64;
    let lm = n / (2.0 * (nt as f64 - 1.0)) * (grouped / ss - 1.0).powi(2);
    TestResult::new(
        "Breusch-Pagan LM (entity effects)",
        lm,
        Distribution::ChiSquare { df: 1.0 },
        alpha,
        "no entity-specific variance component: pooled OLS is adequate",
        "entity effects are present: a random effects model is more appropriate",
    )
}

/// Studentized Breusch–Pagan heteroskedasticity test: `n R²` from
/// regressing squared pooled residuals on the model predictors, χ²(p).
pub fn breusch_pagan_heteroskedasticity(pooled_fit: &FitResult, panel: &PanelDataset, alpha: f64) -> Result<TestResult, TestError> {
    let e = &pooled_fit.residuals;
    let n = e.len();
    if n != panel.n_obs() {
        return Err(TestError::UnbalancedPanel {
            residuals: n,
            entities: panel.entities().len(),
            periods: panel.periods().len(),
        });
    }
    let preds = &pooled_fit.spec.predictors;
    let mut x = DMatrix::from_element(n, preds.len() + 1, 1.0);
    for (j, code) in preds.iter().enumerate() {
        let col = panel.column(code)?;
        x.column_mut(j + 1).copy_from_slice(&col);
    }
    let u = DVector::from_iterator(n, e.iter().map(|v| v * v));
    let sol = solve_least_squares(&x, &u)?;
    let mean = u.mean();
    let tss: f64 = u.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 { 1.0 - sol.residual_sum_squares / tss } else { 0.0 };
    TestResult::new(
        "Breusch-Pagan (heteroskedasticity)",
        n as f64 * r2,
        Distribution::ChiSquare { df: preds.len() as f64 },
        alpha,
        "residual variance does not depend on the predictors",
        "residual variance depends on the predictors",
    )
}

/// F test that the period dummies of `fit_time` are jointly zero.
pub fn wald_time_effects(fit_base: &FitResult, fit_time: &FitResult, alpha: f64) -> Result<TestResult, TestError> {
    let (b, t) = (&fit_base.fit, &fit_time.fit);
    if b.n_obs != t.n_obs {
        return Err(TestError::NotNested(format!("observation counts differ ({} vs {})", b.n_obs, t.n_obs)));
    }
    let base_terms: Vec<&str> = fit_base.coefficients.iter().map(|c| c.term.as_str()).collect();
    let time_terms: Vec<&str> = fit_time
        .coefficients
        .iter()
        .filter(|c| c.kind != TermKind::PeriodDummy)
        .map(|c| c.term.as_str())
        .collect();
    if base_terms != time_terms {
        return Err(TestError::NotNested("non-dummy terms differ between the fits".into()));
    }
    if fit_base.coefficients.iter().any(|c| c.kind == TermKind::PeriodDummy) {
        return Err(TestError::NotNested("base fit already has period dummies".into()));
    }
    let q = fit_time.coefficients.len() - fit_base.coefficients.len();
    if q == 0 {
        return Err(TestError::NotNested("time fit adds no period dummies".into()));
    }
    let df2 = t.n_obs - fit_time.coefficients.len();
    let rss_b = b.residual_ss;
    let rss_t = t.residual_ss;
    if rss_t > rss_b * (1.0 + 1e-10) + 1e-300 {
        return Err(TestError::NotNested(format!("time fit has larger RSS ({rss_t} > {rss_b})")));
    }
    let num = (rss_b - rss_t).max(0.0) / q as f64;
    let statistic = if num == 0.0 {
        0.0
    } else if rss_t > 0.0 {
        num / (rss_t / df2 as f64)
    } else {
        f64::INFINITY
    };
    TestResult::new(
        "Wald F (period effects)",
        statistic,
        Distribution::F { df1: q as f64, df2: df2 as f64 },
        alpha,
        "the coefficients of the period dummies are jointly zero",
        "period effects are jointly significant",
    )
}

/// Hausman contrast of slope coefficients between a fixed-effects and a
/// random-effects fit. Intercepts, entity and period terms are excluded.
pub fn hausman(fe_fit: &FitResult, re_fit: &FitResult, alpha: f64) -> Result<TestResult, TestError> {
    let fe_terms: Vec<usize> = slope_indices(fe_fit);
    let mut re_index = Vec::with_capacity(fe_terms.len());
    for &i in &fe_terms {
        let term = &fe_fit.coefficients[i].term;
        let j = re_fit
            .coefficients
            .iter()
            .position(|c| c.kind == TermKind::Predictor && &c.term == term)
            .ok_or_else(|| TestError::IncompatibleFits(format!("`{term}` missing from the random-effects fit")))?;
        re_index.push(j);
    }
    if slope_indices(re_fit).len() != fe_terms.len() {
        return Err(TestError::IncompatibleFits("slope sets differ".into()));
    }
    if fe_terms.is_empty() {
        return Err(TestError::IncompatibleFits("no slopes to contrast".into()));
    }
    let k = fe_terms.len();
    let vf = fe_fit.covariance_matrix();
    let vr = re_fit.covariance_matrix();
    let diff = DVector::from_fn(k, |a, _| fe_fit.coefficients[fe_terms[a]].estimate - re_fit.coefficients[re_index[a]].estimate);
    let vdiff = DMatrix::from_fn(k, k, |a, b| vf[(fe_terms[a], fe_terms[b])] - vr[(re_index[a], re_index[b])]);

    let scale = vdiff.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let positive_definite = scale > 0.0 && min_eigenvalue(&vdiff) > 1e-12 * scale;
    let (inverse, rank, pseudo) = if positive_definite {
        match vdiff.clone().cholesky() {
            Some(ch) => (ch.inverse(), k, false),
            None => {
                let (p, r) = symmetric_pseudo_inverse(&vdiff, 1e-10);
                (p, r, true)
            }
        }
    } else {
        let (p, r) = symmetric_pseudo_inverse(&vdiff, 1e-10);
        (p, r, true)
    };
    if rank == 0 {
        return Err(TestError::IncompatibleFits("covariance contrast is numerically zero".into()));
    }
    let statistic = (diff.transpose() * &inverse * &diff)[(0, 0)];
    let mut result = TestResult::new(
        "Hausman",
        statistic,
        Distribution::ChiSquare { df: rank as f64 },
        alpha,
        "the random effects estimator is consistent and efficient",
        "the random effects estimator is inconsistent, favouring fixed effects",
    )?;
    result.pseudo_inverse = pseudo;
    Ok(result)
}

fn slope_indices(fit: &FitResult) -> Vec<usize> {
    fit.coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == TermKind::Predictor)
        .map(|(i, _)| i)
        .collect()
}
