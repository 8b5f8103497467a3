//! Regression with seasonal ARIMA errors (SARIMAX).
//!
//! The series and the exogenous regressors are differenced by
//! `(1 − L)^d (1 − L^S)^D`; the differenced series is modelled as
//! `w_t = x̃_tᵀβ + u_t` with `u_t` a seasonal ARMA process. The exact
//! Gaussian likelihood is evaluated with a Kalman filter from the
//! stationary initial state. For fixed ARMA parameters the filter is linear
//! in the data, so `β` is obtained by GLS on filtered innovations and `σ²`
//! is concentrated out; the simplex search runs over the ARMA parameters
//! only, which yields the joint maximum over `(φ, θ, Φ, Θ, β, σ²)`.

mod optim;
pub mod params;
mod scenario;
pub mod statespace;

pub use optim::{minimize_with_restart, nelder_mead, Minimum, NelderMeadOptions};
pub use scenario::{forecast_entity, run_two_scenarios, run_two_scenarios_with, ForecastReport, Scenario, ScenarioConfig, ScenarioPair};
pub use statespace::ArmaProcess;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{solve_least_squares, NumericsError};
use crate::panel::PanelError;
use params::{constrain_ar, constrain_ma, difference, expand_ar, expand_ma, integrate};

#[derive(Debug, Error)]
pub enum SarimaxError {
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("series too short: {len} observations, at least {needed} needed")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("exogenous matrix has {rows} rows, series has {len}")]
    ExogShape { rows: usize, len: usize },
    #[error("exogenous column {column} is zero or collinear after differencing")]
    DegenerateExog { column: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),
    #[error("future exogenous matrix is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    HorizonExogMismatch { rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("forecast and actual lengths differ ({forecasts} vs {actuals})")]
    LengthMismatch { forecasts: usize, actuals: usize },
    #[error("actuals have zero range; NRMSE is undefined")]
    DegenerateRange,
    #[error("no order in the search space could be fitted: {0}")]
    NoAdmissibleOrder(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

/// `(p, d, q)(P, D, Q, S)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SarimaxOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    #[serde(rename = "P")]
    pub seasonal_p: usize,
    #[serde(rename = "D")]
    pub seasonal_d: usize,
    #[serde(rename = "Q")]
    pub seasonal_q: usize,
    #[serde(rename = "S")]
    pub s: usize,
}

impl SarimaxOrder {
    /// Nonseasonal `(p, d, q)` with `S = 1`.
    pub fn arima(p: usize, d: usize, q: usize) -> Self {
        Self {
            p,
            d,
            q,
            seasonal_p: 0,
            seasonal_d: 0,
            seasonal_q: 0,
            s: 1,
        }
    }

    pub fn seasonal(self, seasonal_p: usize, seasonal_d: usize, seasonal_q: usize, s: usize) -> Self {
        Self {
            seasonal_p,
            seasonal_d,
            seasonal_q,
            s,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), SarimaxError> {
        if self.s == 0 {
            return Err(SarimaxError::InvalidOrder("seasonal period must be at least 1".into()));
        }
        if self.s == 1 && (self.seasonal_p + self.seasonal_d + self.seasonal_q) > 0 {
            return Err(SarimaxError::InvalidOrder("seasonal terms need S > 1".into()));
        }
        Ok(())
    }

    pub fn n_arma(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    /// Number of levels consumed by differencing.
    pub fn differencing_lag(&self) -> usize {
        self.d + self.seasonal_d * self.s
    }

    pub fn is_differenced(&self) -> bool {
        self.differencing_lag() > 0
    }
}

impl std::fmt::Display for SarimaxOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)?;
        if self.seasonal_p + self.seasonal_d + self.seasonal_q > 0 {
            write!(f, "({},{},{},{})", self.seasonal_p, self.seasonal_d, self.seasonal_q, self.s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Constant in the differenced equation. `None`: only when the order
    /// has no differencing.
    pub include_constant: Option<bool>,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            include_constant: None,
            max_iter: 500,
            tolerance: 1e-8,
        }
    }
}

impl FitOptions {
    fn constant_for(&self, order: &SarimaxOrder) -> bool {
        self.include_constant.unwrap_or(!order.is_differenced())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SarimaxFit {
    pub order: SarimaxOrder,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub seasonal_phi: Vec<f64>,
    pub seasonal_theta: Vec<f64>,
    pub include_constant: bool,
    /// Names for `beta_exog`; `const` first when a constant is included.
    pub exog_names: Vec<String>,
    pub beta_exog: Vec<f64>,
    pub beta_std_errors: Vec<f64>,
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    /// Observations after differencing.
    pub n_obs: usize,
    pub n_params: usize,
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip)]
    next_state: Vec<f64>,
    #[serde(skip)]
    y_tail: Vec<f64>,
    #[serde(skip)]
    exog_tail: DMatrix<f64>,
}

impl SarimaxFit {
    /// Expanded ARMA process of the differenced regression errors.
    pub fn process(&self) -> ArmaProcess {
        ArmaProcess::new(
            expand_ar(&self.phi, &self.seasonal_phi, self.order.s),
            expand_ma(&self.theta, &self.seasonal_theta, self.order.s),
        )
    }

    /// Raw exogenous columns the fit expects (excluding the constant).
    pub fn n_exog(&self) -> usize {
        self.exog_tail.ncols()
    }

    /// Rename the raw exogenous columns.
    pub fn with_exog_names(mut self, names: &[String]) -> Self {
        let offset = usize::from(self.include_constant);
        for (slot, name) in self.exog_names.iter_mut().skip(offset).zip(names) {
            *slot = name.clone();
        }
        self
    }

    /// `w_t − x̃_tᵀβ̂` on the training data, the series whose Kalman
    /// likelihood is `log_likelihood`.
    pub fn regression_errors(&self, y: &[f64], exog: &DMatrix<f64>) -> Result<Vec<f64>, SarimaxError> {
        let (w, xd) = prepare(y, exog, &self.order, self.include_constant)?;
        Ok((0..w.len())
            .map(|t| w[t] - (0..xd.ncols()).map(|j| xd[(t, j)] * self.beta_exog[j]).sum::<f64>())
            .collect())
    }
}

/// Difference `y` and every exogenous column, appending a constant column.
fn prepare(y: &[f64], exog: &DMatrix<f64>, order: &SarimaxOrder, constant: bool) -> Result<(Vec<f64>, DMatrix<f64>), SarimaxError> {
    if exog.nrows() != y.len() {
        return Err(SarimaxError::ExogShape {
            rows: exog.nrows(),
            len: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(SarimaxError::NonFinite("series"));
    }
    if exog.iter().any(|v| !v.is_finite()) {
        return Err(SarimaxError::NonFinite("exogenous regressors"));
    }
    let lag = order.differencing_lag();
    if y.len() <= lag {
        return Err(SarimaxError::SeriesTooShort { len: y.len(), needed: lag + 1 });
    }
    let w = difference(y, order.d, order.seasonal_d, order.s);
    let offset = usize::from(constant);
    let mut xd = DMatrix::from_element(w.len(), exog.ncols() + offset, 1.0);
    for j in 0..exog.ncols() {
        let col: Vec<f64> = exog.column(j).iter().copied().collect();
        let dc = difference(&col, order.d, order.seasonal_d, order.s);
        xd.column_mut(j + offset).copy_from_slice(&dc);
    }
    Ok((w, xd))
}

struct Profile {
    log_likelihood: f64,
    sigma2: f64,
    beta: DVector<f64>,
    beta_cov_unscaled: DMatrix<f64>,
    next_state: DVector<f64>,
}

/// Concentrated exact likelihood for fixed ARMA parameters.
fn profile(process: &ArmaProcess, w: &[f64], xd: &DMatrix<f64>) -> Option<Profile> {
    let n = w.len();
    let m = xd.ncols();
    let mut data = DMatrix::zeros(n, m + 1);
    data.column_mut(0).copy_from_slice(w);
    data.columns_mut(1, m).copy_from(xd);
    let out = process.filter(&data)?;
    let weights: Vec<f64> = out.variances.iter().map(|f| 1.0 / f.sqrt()).collect();
    let vw = DVector::from_fn(n, |t, _| out.innovations[(t, 0)] * weights[t]);
    let (beta, cov, ssr) = if m > 0 {
        let vx = DMatrix::from_fn(n, m, |t, j| out.innovations[(t, j + 1)] * weights[t]);
        let sol = solve_least_squares(&vx, &vw).ok()?;
        (sol.coefficients, sol.covariance_unscaled, sol.residual_sum_squares)
    } else {
        (DVector::zeros(0), DMatrix::zeros(0, 0), vw.norm_squared())
    };
    let sigma2 = ssr / n as f64;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return None;
    }
    let log_det: f64 = out.variances.iter().map(|f| f.ln()).sum();
    let log_likelihood = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0) - 0.5 * log_det;
    let next_state = out.next_state.column(0) - out.next_state.columns(1, m) * &beta;
    Some(Profile {
        log_likelihood,
        sigma2,
        beta,
        beta_cov_unscaled: cov,
        next_state,
    })
}

struct ArmaParams {
    phi: Vec<f64>,
    theta: Vec<f64>,
    seasonal_phi: Vec<f64>,
    seasonal_theta: Vec<f64>,
}

fn unpack(x: &[f64], order: &SarimaxOrder) -> ArmaParams {
    let (p, q, sp) = (order.p, order.q, order.seasonal_p);
    ArmaParams {
        phi: constrain_ar(&x[..p]),
        theta: constrain_ma(&x[p..p + q]),
        seasonal_phi: constrain_ar(&x[p + q..p + q + sp]),
        seasonal_theta: constrain_ma(&x[p + q + sp..]),
    }
}

fn process_of(params: &ArmaParams, s: usize) -> ArmaProcess {
    ArmaProcess::new(
        expand_ar(&params.phi, &params.seasonal_phi, s),
        expand_ma(&params.theta, &params.seasonal_theta, s),
    )
}

fn autocorrelation(z: &[f64], max_lag: usize) -> Vec<f64> {
    let n = z.len();
    let mean = z.iter().sum::<f64>() / n as f64;
    let c0: f64 = z.iter().map(|v| (v - mean).powi(2)).sum();
    (0..=max_lag)
        .map(|k| {
            if c0 == 0.0 || k >= n {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            (k..n).map(|t| (z[t] - mean) * (z[t - k] - mean)).sum::<f64>() / c0
        })
        .collect()
}

/// Sample partial autocorrelations by Durbin–Levinson on the sample ACF.
fn sample_pacf(z: &[f64], p: usize) -> Vec<f64> {
    let rho = autocorrelation(z, p);
    let mut phi: Vec<f64> = Vec::new();
    let mut out = Vec::with_capacity(p);
    for k in 1..=p {
        let num = rho[k] - (1..k).map(|j| phi[j - 1] * rho[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * rho[j]).sum::<f64>();
        let r = if den.abs() > 1e-12 { (num / den).clamp(-0.99, 0.99) } else { 0.0 };
        let prev = phi.clone();
        for j in 1..k {
            phi[j - 1] = prev[j - 1] - r * prev[k - j - 1];
        }
        phi.push(r);
        out.push(r);
    }
    out
}

/// Maximum-likelihood SARIMAX fit.
pub fn fit_sarimax(y: &[f64], exog: &DMatrix<f64>, order: SarimaxOrder, options: &FitOptions) -> Result<SarimaxFit, SarimaxError> {
    order.validate()?;
    let constant = options.constant_for(&order);
    let (w, xd) = prepare(y, exog, &order, constant)?;
    let n = w.len();
    let m = xd.ncols();
    let n_arma = order.n_arma();
    let n_params = n_arma + m + 1;
    if n < n_params + 2 {
        return Err(SarimaxError::SeriesTooShort {
            len: y.len(),
            needed: n_params + 2 + order.differencing_lag(),
        });
    }
    for j in 0..m {
        if xd.column(j).iter().all(|v| *v == 0.0) {
            return Err(SarimaxError::DegenerateExog { column: j });
        }
    }
    let z: Vec<f64> = if m > 0 {
        let sol = solve_least_squares(&xd, &DVector::from_column_slice(&w)).map_err(|e| match e {
            NumericsError::RankDeficient { column } => SarimaxError::DegenerateExog { column },
            other => SarimaxError::OptimizerFailure(other.to_string()),
        })?;
        sol.residuals.iter().copied().collect()
    } else {
        w.clone()
    };

    let mut warnings = Vec::new();
    let rho1 = autocorrelation(&w, 1)[1];
    if rho1 > 0.9 {
        warnings.push(format!(
            "differenced series has lag-1 autocorrelation {rho1:.3}; it may still contain a unit root"
        ));
    }

    let mut x0 = vec![0.0; n_arma];
    for (i, r) in sample_pacf(&z, order.p).into_iter().enumerate() {
        x0[i] = r / (1.0 - r * r).sqrt();
    }
    let objective = |x: &[f64]| -> f64 {
        let params = unpack(x, &order);
        match profile(&process_of(&params, order.s), &w, &xd) {
            Some(p) => -p.log_likelihood,
            None => f64::INFINITY,
        }
    };
    let nm = NelderMeadOptions {
        max_iter: options.max_iter,
        f_tol: options.tolerance,
        initial_step: 0.5,
    };
    let best = minimize_with_restart(objective, &x0, nm);
    if !best.f.is_finite() {
        return Err(SarimaxError::OptimizerFailure("likelihood is not finite at any visited point".into()));
    }
    if !best.converged {
        warnings.push(format!("simplex search stopped at the iteration cap ({})", options.max_iter));
    }
    let params = unpack(&best.x, &order);
    let prof = profile(&process_of(&params, order.s), &w, &xd)
        .ok_or_else(|| SarimaxError::OptimizerFailure("likelihood could not be evaluated at the optimum".into()))?;

    let beta_std_errors = (0..m).map(|j| (prof.sigma2 * prof.beta_cov_unscaled[(j, j)]).max(0.0).sqrt()).collect();
    let mut exog_names = Vec::with_capacity(m);
    if constant {
        exog_names.push("const".to_string());
    }
    exog_names.extend((1..=exog.ncols()).map(|j| format!("x{j}")));
    let ll = prof.log_likelihood;
    let k = n_params as f64;
    let lag = order.differencing_lag();
    Ok(SarimaxFit {
        order,
        phi: params.phi,
        theta: params.theta,
        seasonal_phi: params.seasonal_phi,
        seasonal_theta: params.seasonal_theta,
        include_constant: constant,
        exog_names,
        beta_exog: prof.beta.iter().copied().collect(),
        beta_std_errors,
        sigma2: prof.sigma2,
        log_likelihood: ll,
        aic: 2.0 * k - 2.0 * ll,
        bic: k * (n as f64).ln() - 2.0 * ll,
        n_obs: n,
        n_params,
        converged: best.converged,
        iterations: best.iterations,
        warnings,
        next_state: prof.next_state.iter().copied().collect(),
        y_tail: y[y.len() - lag..].to_vec(),
        exog_tail: exog.rows(exog.nrows() - lag, lag).into_owned(),
    })
}

/// `h`-step point forecasts given the regressors for the forecast periods.
pub fn forecast(fit: &SarimaxFit, exog_future: &DMatrix<f64>, h: usize) -> Result<Vec<f64>, SarimaxError> {
    let m_raw = fit.n_exog();
    if h == 0 || exog_future.nrows() != h || exog_future.ncols() != m_raw {
        return Err(SarimaxError::HorizonExogMismatch {
            rows: exog_future.nrows(),
            cols: exog_future.ncols(),
            expected_rows: h,
            expected_cols: m_raw,
        });
    }
    if exog_future.iter().any(|v| !v.is_finite()) {
        return Err(SarimaxError::NonFinite("future exogenous regressors"));
    }
    let order = fit.order;
    let lag = order.differencing_lag();
    let offset = usize::from(fit.include_constant);
    let mut xd = DMatrix::from_element(h, m_raw + offset, 1.0);
    for j in 0..m_raw {
        let mut col: Vec<f64> = fit.exog_tail.column(j).iter().copied().collect();
        col.extend(exog_future.column(j).iter());
        let dc = difference(&col, order.d, order.seasonal_d, order.s);
        debug_assert_eq!(dc.len(), h);
        xd.column_mut(j + offset).copy_from_slice(&dc);
    }
    let u = fit.process().project(&DVector::from_column_slice(&fit.next_state), h);
    let w: Vec<f64> = (0..h)
        .map(|t| u[t] + (0..xd.ncols()).map(|j| xd[(t, j)] * fit.beta_exog[j]).sum::<f64>())
        .collect();
    debug_assert_eq!(fit.y_tail.len(), lag);
    Ok(integrate(&w, &fit.y_tail, order.d, order.seasonal_d, order.s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// `None` when the actuals are constant.
    pub nrmse: Option<f64>,
}

impl ForecastMetrics {
    pub fn nrmse(&self) -> Result<f64, SarimaxError> {
        self.nrmse.ok_or(SarimaxError::DegenerateRange)
    }
}

/// MAE, RMSE and RMSE normalised by the range of `actuals`.
pub fn evaluate_forecast(forecasts: &[f64], actuals: &[f64]) -> Result<ForecastMetrics, SarimaxError> {
    if forecasts.len() != actuals.len() || forecasts.is_empty() {
        return Err(SarimaxError::LengthMismatch {
            forecasts: forecasts.len(),
            actuals: actuals.len(),
        });
    }
    if forecasts.iter().chain(actuals).any(|v| !v.is_finite()) {
        return Err(SarimaxError::NonFinite("forecast evaluation input"));
    }
    let n = forecasts.len() as f64;
    let mae = forecasts.iter().zip(actuals).map(|(f, a)| (f - a).abs()).sum::<f64>() / n;
    let rmse = (forecasts.iter().zip(actuals).map(|(f, a)| (f - a).powi(2)).sum::<f64>() / n).sqrt();
    let max = actuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = actuals.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    Ok(ForecastMetrics {
        mae,
        rmse,
        nrmse: (range > 0.0).then(|| rmse / range),
    })
}

/// Candidate orders for [`select_order`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSearch {
    pub p: Vec<usize>,
    pub d: Vec<usize>,
    pub q: Vec<usize>,
}

impl Default for OrderSearch {
    fn default() -> Self {
        Self {
            p: vec![0, 1, 2],
            d: vec![0, 1, 2],
            q: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub p: usize,
    pub q: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelection {
    pub order: SarimaxOrder,
    /// Sample variance of the series at each differencing level examined.
    pub variances: Vec<(usize, f64)>,
    pub grid: Vec<GridCell>,
}

fn sample_variance(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    Some(v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64)
}

/// Differencing order by variance reduction, then `(p, q)` by minimum AIC
/// (ties to fewer ARMA parameters, then grid order).
pub fn select_order(y: &[f64], exog: &DMatrix<f64>, search: &OrderSearch, options: &FitOptions) -> Result<OrderSelection, SarimaxError> {
    if search.p.is_empty() || search.d.is_empty() || search.q.is_empty() {
        return Err(SarimaxError::InvalidOrder("empty search space".into()));
    }
    let mut ds = search.d.clone();
    ds.sort_unstable();
    ds.dedup();
    let mut d = ds[0];
    let mut var = sample_variance(&difference(y, d, 0, 1)).ok_or(SarimaxError::SeriesTooShort { len: y.len(), needed: d + 2 })?;
    let mut variances = vec![(d, var)];
    for &next in &ds[1..] {
        let Some(v) = sample_variance(&difference(y, next, 0, 1)) else { break };
        variances.push((next, v));
        if v < var {
            d = next;
            var = v;
        } else {
            break;
        }
    }

    let mut grid = Vec::new();
    let mut best: Option<(f64, usize, SarimaxOrder)> = None;
    let mut last_error = String::new();
    for &p in &search.p {
        for &q in &search.q {
            let order = SarimaxOrder::arima(p, d, q);
            match fit_sarimax(y, exog, order, options) {
                Ok(fit) if fit.aic.is_finite() => {
                    grid.push(GridCell {
                        p,
                        q,
                        aic: Some(fit.aic),
                        error: None,
                    });
                    let better = match best {
                        None => true,
                        Some((aic, k, _)) => fit.aic < aic - 1e-9 || ((fit.aic - aic).abs() <= 1e-9 && p + q < k),
                    };
                    if better {
                        best = Some((fit.aic, p + q, order));
                    }
                }
                Ok(_) => {
                    last_error = format!("order {order}: non-finite AIC");
                    grid.push(GridCell {
                        p,
                        q,
                        aic: None,
                        error: Some("non-finite AIC".into()),
                    });
                }
                Err(e) => {
                    log::warn!("order {order} skipped: {e}");
                    last_error = format!("order {order}: {e}");
                    grid.push(GridCell {
                        p,
                        q,
                        aic: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }
    let (_, _, order) = best.ok_or(SarimaxError::NoAdmissibleOrder(last_error))?;
    log::debug!("order grid: {grid:?}");
    log::info!("selected order {order}");
    Ok(OrderSelection { order, variances, grid })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_hand_fixture() {
        let m = evaluate_forecast(&[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!((m.mae, m.rmse, m.nrmse), (1.0, 1.0, Some(0.5)));
        let perfect = evaluate_forecast(&[3.0, 4.0], &[3.0, 4.0]).unwrap();
        assert_eq!((perfect.mae, perfect.rmse, perfect.nrmse), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn constant_actuals_have_no_nrmse() {
        let m = evaluate_forecast(&[1.0, 2.0], &[5.0, 5.0]).unwrap();
        assert!(matches!(m.nrmse(), Err(SarimaxError::DegenerateRange)));
        assert!(m.rmse > 0.0);
    }

    #[test]
    fn seasonal_order_validation() {
        assert!(SarimaxOrder::arima(1, 0, 0).seasonal(1, 0, 0, 1).validate().is_err());
        assert!(SarimaxOrder::arima(1, 0, 0).seasonal(1, 1, 0, 12).validate().is_ok());
    }

    #[test]
    fn mean_model_forecasts_constant() {
        let y = [1.0, 3.0, 2.0, 4.0, 0.0, 2.0, 3.0, 1.0];
        let ones = DMatrix::from_element(y.len(), 1, 1.0);
        let opts = FitOptions {
            include_constant: Some(false),
            ..Default::default()
        };
        let fit = fit_sarimax(&y, &ones, SarimaxOrder::arima(0, 0, 0), &opts).unwrap();
        assert!((fit.beta_exog[0] - 2.0).abs() < 1e-12);
        assert!((fit.sigma2 - 1.5).abs() < 1e-12);
        let f = forecast(&fit, &DMatrix::from_element(3, 1, 1.0), 3).unwrap();
        assert!(f.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn horizon_mismatch() {
        let y = [1.0, 3.0, 2.0, 4.0, 0.0, 2.0, 3.0, 1.0];
        let fit = fit_sarimax(&y, &DMatrix::zeros(8, 0), SarimaxOrder::arima(0, 0, 0), &FitOptions::default()).unwrap();
        assert!(matches!(
            forecast(&fit, &DMatrix::zeros(2, 0), 3),
            Err(SarimaxError::HorizonExogMismatch { .. })
        ));
        assert!(matches!(
            forecast(&fit, &DMatrix::zeros(3, 1), 3),
            Err(SarimaxError::HorizonExogMismatch { .. })
        ));
    }

    #[test]
    fn too_short() {
        let y = [1.0, 2.0, 3.0];
        assert!(matches!(
            fit_sarimax(&y, &DMatrix::zeros(3, 0), SarimaxOrder::arima(2, 0, 2), &FitOptions::default()),
            Err(SarimaxError::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn zero_exog_after_differencing() {
        let y = [1.0, 2.5, 3.0, 4.5, 4.0, 6.0, 7.5, 7.0];
        let x = DMatrix::from_element(8, 1, 3.0);
        assert!(matches!(
            fit_sarimax(&y, &x, SarimaxOrder::arima(0, 1, 0), &FitOptions::default()),
            Err(SarimaxError::DegenerateExog { column: 0 })
        ));
    }
}
