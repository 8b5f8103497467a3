use serde::{Deserialize, Serialize};

use super::ClusterError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Leaves are `0..n`; the cluster formed at step `s` has id `n + s`.
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_labels: Vec<String>,
}

impl Dendrogram {
    /// Flat labels for `k` clusters, numbered by their smallest leaf.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>, ClusterError> {
        let n = self.leaf_labels.len();
        if k == 0 || k > n {
            return Err(ClusterError::InvalidK { k, n });
        }
        let mut parent: Vec<usize> = (0..2 * n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (s, merge) in self.merges.iter().take(n - k).enumerate() {
            let id = n + s;
            let ra = find(&mut parent, merge.cluster_a);
            let rb = find(&mut parent, merge.cluster_b);
            parent[ra] = id;
            parent[rb] = id;
        }
        let mut ids: Vec<usize> = Vec::new();
        let mut labels = Vec::with_capacity(n);
        for leaf in 0..n {
            let root = find(&mut parent, leaf);
            let label = match ids.iter().position(|&r| r == root) {
                Some(l) => l,
                None => {
                    ids.push(root);
                    ids.len() - 1
                }
            };
            labels.push(label);
        }
        Ok(labels)
    }

    /// Leaves in an order where every cluster is contiguous, for drawing.
    pub fn leaf_order(&self) -> Vec<usize> {
        let n = self.leaf_labels.len();
        if self.merges.is_empty() {
            return (0..n).collect();
        }
        let mut out = Vec::with_capacity(n);
        let mut stack = vec![n + self.merges.len() - 1];
        while let Some(id) = stack.pop() {
            if id < n {
                out.push(id);
            } else {
                let m = &self.merges[id - n];
                stack.push(m.cluster_b);
                stack.push(m.cluster_a);
            }
        }
        out
    }
}

/// Agglomerative Ward clustering on Euclidean distances.
///
/// Squared distances are updated by Lance–Williams; reported heights are
/// their square roots. Exact ties merge the lexicographically smallest
/// `(a, b)` pair of cluster ids.
pub fn ward_cluster(series: &[Vec<f64>], labels: &[String]) -> Result<Dendrogram, ClusterError> {
    let n = series.len();
    if n < 2 {
        return Err(ClusterError::TooFewSeries(n));
    }
    if labels.len() != n {
        return Err(ClusterError::LengthMismatch(format!("{} labels for {n} series", labels.len())));
    }
    let len = series[0].len();
    if let Some(bad) = series.iter().position(|s| s.len() != len) {
        return Err(ClusterError::LengthMismatch(format!(
            "series {bad} has length {}, expected {len}",
            series[bad].len()
        )));
    }
    let total = 2 * n - 1;
    let mut d2 = vec![vec![0.0; total]; total];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = series[i].iter().zip(&series[j]).map(|(a, b)| (a - b).powi(2)).sum();
            d2[i][j] = v;
            d2[j][i] = v;
        }
    }
    let mut size = vec![1usize; total];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                if d2[a][b] < best.2 {
                    best = (a, b, d2[a][b]);
                }
            }
        }
        let (a, b, dab) = best;
        let id = n + step;
        size[id] = size[a] + size[b];
        active.retain(|&c| c != a && c != b);
        for &c in &active {
            let (na, nb, nc) = (size[a] as f64, size[b] as f64, size[c] as f64);
            let v = ((na + nc) * d2[c][a] + (nb + nc) * d2[c][b] - nc * dab) / (na + nb + nc);
            d2[c][id] = v;
            d2[id][c] = v;
        }
        active.push(id);
        merges.push(Merge {
            cluster_a: a,
            cluster_b: b,
            height: dab.max(0.0).sqrt(),
            size: size[id],
        });
    }
    Ok(Dendrogram {
        merges,
        leaf_labels: labels.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn outlier_merges_last() {
        let s = vec![vec![0.0], vec![0.1], vec![5.0], vec![5.2], vec![40.0]];
        let d = ward_cluster(&s, &labels(5)).unwrap();
        let last = d.merges.last().unwrap();
        assert!(last.cluster_a == 4 || last.cluster_b == 4);
        assert_eq!(d.cut(3).unwrap(), vec![0, 0, 1, 1, 2]);
        assert_eq!(d.cut(1).unwrap(), vec![0; 5]);
        assert_eq!(d.cut(5).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn leaf_order_is_permutation() {
        let s = vec![vec![0.0], vec![9.0], vec![0.5], vec![8.0]];
        let d = ward_cluster(&s, &labels(4)).unwrap();
        let mut order = d.leaf_order();
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn rejects_unequal_lengths() {
        let s = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(matches!(ward_cluster(&s, &labels(2)), Err(ClusterError::LengthMismatch(_))));
    }
}
