use serde::{Deserialize, Serialize};

use super::kcluster::EntityLabel;
use super::ClusterError;
use crate::panel::PanelDataset;

/// Per cluster and feature: pooled statistics over every member row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub cluster: usize,
    pub feature: String,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (`n − 1`); 0 for a single value.
    pub std_dev: f64,
    /// Mean per-entity compound annual growth rate in percent; `None` when
    /// no entity qualifies.
    pub annual_growth_rate_pct: Option<f64>,
    /// Entities left out of the growth rate (non-positive endpoints).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub growth_excluded: Vec<String>,
}

/// `100·[(last/first)^(1/(T−1)) − 1]`; `None` for non-positive endpoints.
pub fn compound_annual_growth_pct(series: &[f64]) -> Option<f64> {
    let (first, last) = (*series.first()?, *series.last()?);
    if series.len() < 2 || !(first > 0.0) || !(last > 0.0) {
        return None;
    }
    Some(100.0 * ((last / first).powf(1.0 / (series.len() - 1) as f64) - 1.0))
}

pub fn cluster_feature_summary(panel: &PanelDataset, labels: &[EntityLabel], features: &[String]) -> Result<Vec<FeatureSummary>, ClusterError> {
    let mut entity_cluster = Vec::with_capacity(panel.entities().len());
    for e in panel.entities() {
        let l = labels
            .iter()
            .find(|l| &l.entity == e)
            .ok_or_else(|| ClusterError::UnlabeledEntity(e.clone()))?;
        entity_cluster.push(l.cluster);
    }
    let mut clusters: Vec<usize> = entity_cluster.clone();
    clusters.sort_unstable();
    clusters.dedup();

    let mut out = Vec::new();
    for &c in &clusters {
        for code in features {
            let v = panel.variable_index(code)?;
            let mut pooled = Vec::new();
            let mut growth = Vec::new();
            let mut excluded = Vec::new();
            for (e, _) in entity_cluster.iter().enumerate().filter(|(_, &l)| l == c) {
                let s = panel.series(e, v);
                match compound_annual_growth_pct(&s) {
                    Some(g) => growth.push(g),
                    None => excluded.push(panel.entities()[e].clone()),
                }
                pooled.extend(s);
            }
            let n = pooled.len() as f64;
            let mean = pooled.iter().sum::<f64>() / n;
            let std_dev = if pooled.len() > 1 {
                (pooled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            pooled.sort_by(f64::total_cmp);
            let m = pooled.len();
            let median = if m % 2 == 1 {
                pooled[m / 2]
            } else {
                0.5 * (pooled[m / 2 - 1] + pooled[m / 2])
            };
            out.push(FeatureSummary {
                cluster: c,
                feature: code.clone(),
                mean,
                median,
                std_dev,
                annual_growth_rate_pct: (!growth.is_empty()).then(|| growth.iter().sum::<f64>() / growth.len() as f64),
                growth_excluded: excluded,
            });
        }
    }
    Ok(out)
}
