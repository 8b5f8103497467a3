use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dtw::{dtw, dtw_distance, LocalCost};
use super::summary::FeatureSummary;
use super::ward::ward_cluster;
use super::ClusterError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KClusterOptions {
    pub local_cost: LocalCost,
    pub band: Option<usize>,
    pub max_rounds: usize,
    pub barycenter_iterations: usize,
}

impl Default for KClusterOptions {
    fn default() -> Self {
        Self {
            local_cost: LocalCost::Squared,
            band: None,
            max_rounds: 50,
            barycenter_iterations: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityLabel {
    pub entity: String,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberAlignment {
    pub entity: String,
    pub cluster: usize,
    pub distance: f64,
    /// Pairs `(member index, center index)`.
    pub path: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub k: usize,
    pub labels: Vec<EntityLabel>,
    pub centers: Vec<Vec<f64>>,
    pub center_distances: Vec<Vec<f64>>,
    pub member_alignments: Vec<MemberAlignment>,
    /// Total member-to-center DTW cost after initialisation and each round.
    pub objective_trace: Vec<f64>,
    pub rounds: usize,
    pub converged: bool,
    pub options: KClusterOptions,
    #[serde(default)]
    pub feature_summaries: Vec<FeatureSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ClusterReport {
    pub fn label_of(&self, entity: &str) -> Option<usize> {
        self.labels.iter().find(|l| l.entity == entity).map(|l| l.cluster)
    }

    pub fn members(&self, cluster: usize) -> Vec<&str> {
        self.labels.iter().filter(|l| l.cluster == cluster).map(|l| l.entity.as_str()).collect()
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// DTW barycenter averaging from `init`. Each iteration aligns every member
/// to the current center and replaces each center sample by the mean
/// (squared cost) or median (absolute cost) of the samples aligned to it,
/// which never increases the members' total DTW cost.
pub fn dtw_barycenter(members: &[&[f64]], init: &[f64], options: &KClusterOptions) -> Result<Vec<f64>, ClusterError> {
    let mut center = init.to_vec();
    let mut cost = total_cost(members, &center, options)?;
    for _ in 0..options.barycenter_iterations {
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); center.len()];
        for s in members {
            let w = dtw(&center, s, options.local_cost, options.band)?;
            for (i, j) in w.path {
                buckets[i].push(s[j]);
            }
        }
        let next: Vec<f64> = buckets
            .iter_mut()
            .map(|b| match options.local_cost {
                LocalCost::Squared => b.iter().sum::<f64>() / b.len() as f64,
                LocalCost::Absolute => median(b),
            })
            .collect();
        let next_cost = total_cost(members, &next, options)?;
        if next == center || next_cost > cost {
            break;
        }
        center = next;
        cost = next_cost;
    }
    Ok(center)
}

fn total_cost(members: &[&[f64]], center: &[f64], options: &KClusterOptions) -> Result<f64, ClusterError> {
    members.iter().map(|s| dtw_distance(s, center, options.local_cost, options.band)).sum()
}

fn euclidean_mean(members: &[&[f64]]) -> Vec<f64> {
    let len = members[0].len();
    (0..len).map(|t| members.iter().map(|s| s[t]).sum::<f64>() / members.len() as f64).collect()
}

/// DTW k-clustering refined from an initial partition (default: Ward cut).
pub fn dtw_kcluster(
    series: &[Vec<f64>],
    names: &[String],
    k: usize,
    seed_labels: Option<&[usize]>,
    options: &KClusterOptions,
) -> Result<ClusterReport, ClusterError> {
    let n = series.len();
    if names.len() != n {
        return Err(ClusterError::LengthMismatch(format!("{} names for {n} series", names.len())));
    }
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    let len = series[0].len();
    if len == 0 {
        return Err(ClusterError::EmptySequence);
    }
    if series.iter().any(|s| s.len() != len) {
        return Err(ClusterError::LengthMismatch("series lengths differ".into()));
    }
    let mut labels: Vec<usize> = match seed_labels {
        Some(l) => {
            if l.len() != n || l.iter().any(|&c| c >= k) {
                return Err(ClusterError::LengthMismatch("seed labels do not match the series".into()));
            }
            l.to_vec()
        }
        None if k == 1 => vec![0; n],
        None => ward_cluster(series, names)?.cut(k)?,
    };
    let mut warnings = Vec::new();
    let mut restarted = false;

    let members_of = |labels: &[usize], c: usize| -> Vec<&[f64]> {
        labels.iter().zip(series).filter(|(l, _)| **l == c).map(|(_, s)| s.as_slice()).collect()
    };
    let mut centers = Vec::with_capacity(k);
    for c in 0..k {
        let m = members_of(&labels, c);
        if m.is_empty() {
            return Err(ClusterError::EmptyCluster { cluster: c });
        }
        centers.push(dtw_barycenter(&m, &euclidean_mean(&m), options)?);
    }
    let distances = |centers: &[Vec<f64>]| -> Result<Vec<Vec<f64>>, ClusterError> {
        series
            .par_iter()
            .map(|s| centers.iter().map(|c| dtw_distance(s, c, options.local_cost, options.band)).collect())
            .collect()
    };
    let objective = |d: &[Vec<f64>], labels: &[usize]| -> f64 { labels.iter().enumerate().map(|(i, &l)| d[i][l]).sum() };

    let mut dist = distances(&centers)?;
    let mut trace = vec![objective(&dist, &labels)];
    let mut converged = false;
    let mut rounds = 0;
    while rounds < options.max_rounds {
        rounds += 1;
        let mut changed = false;
        for i in 0..n {
            let current = labels[i];
            let mut best = current;
            for c in 0..k {
                if dist[i][c] < dist[i][best] {
                    best = c;
                }
            }
            if best != current {
                labels[i] = best;
                changed = true;
            }
        }
        for c in 0..k {
            if labels.iter().any(|&l| l == c) {
                continue;
            }
            if restarted {
                return Err(ClusterError::EmptyCluster { cluster: c });
            }
            restarted = true;
            // Farthest series from its own center, among clusters that keep a member.
            let donor = (0..n)
                .filter(|&i| labels.iter().filter(|&&l| l == labels[i]).count() > 1)
                .max_by(|&a, &b| dist[a][labels[a]].total_cmp(&dist[b][labels[b]]).then(b.cmp(&a)))
                .ok_or(ClusterError::EmptyCluster { cluster: c })?;
            warnings.push(format!("cluster {c} emptied; restarted at `{}`", names[donor]));
            labels[donor] = c;
            centers[c] = series[donor].clone();
            changed = true;
        }
        if !changed {
            converged = true;
            break;
        }
        for c in 0..k {
            let m = members_of(&labels, c);
            centers[c] = dtw_barycenter(&m, &centers[c], options)?;
        }
        dist = distances(&centers)?;
        trace.push(objective(&dist, &labels));
    }

    let mut center_distances = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let d = dtw_distance(&centers[a], &centers[b], options.local_cost, options.band)?;
            center_distances[a][b] = d;
            center_distances[b][a] = d;
        }
    }
    let member_alignments = (0..n)
        .map(|i| {
            let w = dtw(&series[i], &centers[labels[i]], options.local_cost, options.band)?;
            Ok(MemberAlignment {
                entity: names[i].clone(),
                cluster: labels[i],
                distance: w.distance,
                path: w.path,
            })
        })
        .collect::<Result<Vec<_>, ClusterError>>()?;
    Ok(ClusterReport {
        k,
        labels: names
            .iter()
            .zip(&labels)
            .map(|(e, &c)| EntityLabel {
                entity: e.clone(),
                cluster: c,
            })
            .collect(),
        centers,
        center_distances,
        member_alignments,
        objective_trace: trace,
        rounds,
        converged,
        options: *options,
        feature_summaries: Vec::new(),
        warnings,
    })
}
