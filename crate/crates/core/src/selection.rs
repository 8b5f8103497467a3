//! Significance filtering followed by greedy pruning of collinear pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{FitResult, ModelSpec};
use crate::panel::{correlation_matrix, PanelDataset, PanelError};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_CORR_THRESHOLD: f64 = 0.80;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("no predictor is significant at alpha = {alpha}")]
    NoSignificantFeatures { alpha: f64 },
    #[error("invalid selection parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Panel(#[from] PanelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantFeature {
    pub code: String,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollinearDrop {
    pub kept: String,
    pub dropped: String,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub source_model: ModelSpec,
    pub alpha: f64,
    pub corr_threshold: f64,
    pub significant: Vec<SignificantFeature>,
    pub dropped_collinear: Vec<CollinearDrop>,
    /// Surviving codes in the fit's predictor order.
    pub selected: Vec<String>,
}

pub fn select_features(fit: &FitResult, panel: &PanelDataset, alpha: f64, corr_threshold: f64) -> Result<SelectionReport, SelectionError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SelectionError::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(corr_threshold > 0.0 && corr_threshold <= 1.0) {
        return Err(SelectionError::InvalidParameter(format!(
            "correlation threshold must lie in (0, 1], got {corr_threshold}"
        )));
    }
    let significant: Vec<SignificantFeature> = fit
        .slopes()
        .into_iter()
        .filter(|c| c.p_value < alpha)
        .map(|c| SignificantFeature {
            code: c.term.clone(),
            p_value: c.p_value,
        })
        .collect();
    if significant.is_empty() {
        return Err(SelectionError::NoSignificantFeatures { alpha });
    }

    let codes: Vec<String> = significant.iter().map(|s| s.code.clone()).collect();
    let corr = correlation_matrix(panel, &codes)?;
    let mut pairs = Vec::new();
    for a in 0..codes.len() {
        for b in (a + 1)..codes.len() {
            pairs.push((a, b, corr.values[(a, b)]));
        }
    }
    // Stable sort keeps spec order among equal |corr|.
    pairs.sort_by(|x, y| y.2.abs().total_cmp(&x.2.abs()));

    let mut dropped = vec![false; codes.len()];
    let mut dropped_collinear = Vec::new();
    for (a, b, r) in pairs {
        if r.abs() < corr_threshold || dropped[a] || dropped[b] {
            continue;
        }
        let (keep, drop) = if significant[b].p_value < significant[a].p_value { (b, a) } else { (a, b) };
        dropped[drop] = true;
        dropped_collinear.push(CollinearDrop {
            kept: codes[keep].clone(),
            dropped: codes[drop].clone(),
            correlation: r,
        });
    }
    let selected = codes.iter().zip(&dropped).filter(|(_, d)| !**d).map(|(c, _)| c.clone()).collect();
    Ok(SelectionReport {
        source_model: fit.spec.clone(),
        alpha,
        corr_threshold,
        significant,
        dropped_collinear,
        selected,
    })
}
