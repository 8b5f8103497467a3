use serde::{Deserialize, Serialize};

use super::ClusterError;

/// Pointwise cost between aligned samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalCost {
    Absolute,
    #[default]
    Squared,
}

impl LocalCost {
    #[inline]
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            LocalCost::Absolute => (x - y).abs(),
            LocalCost::Squared => (x - y) * (x - y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpingResult {
    /// Raw cumulative cost, equal to `cost_matrix[n−1][m−1]`.
    pub distance: f64,
    /// 0-based index pairs from `(0, 0)` to `(n−1, m−1)`.
    pub path: Vec<(usize, usize)>,
    /// Accumulated cost; cells outside the band are `+∞`.
    pub cost_matrix: Vec<Vec<f64>>,
}

fn check(a: &[f64], b: &[f64], band: Option<usize>) -> Result<(), ClusterError> {
    if a.is_empty() || b.is_empty() {
        return Err(ClusterError::EmptySequence);
    }
    if let Some(w) = band {
        let diff = a.len().abs_diff(b.len());
        if w < diff {
            return Err(ClusterError::BandTooNarrow { band: w, required: diff });
        }
    }
    Ok(())
}

#[inline]
fn in_band(i: usize, j: usize, band: Option<usize>) -> bool {
    band.map_or(true, |w| i.abs_diff(j) <= w)
}

/// Dynamic time warping with steps `(i−1, j)`, `(i, j−1)`, `(i−1, j−1)`.
///
/// Backtracking prefers the diagonal step, then the `i` decrement.
pub fn dtw(a: &[f64], b: &[f64], local_cost: LocalCost, band: Option<usize>) -> Result<WarpingResult, ClusterError> {
    check(a, b, band)?;
    let (n, m) = (a.len(), b.len());
    let mut acc = vec![vec![f64::INFINITY; m]; n];
    for i in 0..n {
        for j in 0..m {
            if !in_band(i, j, band) {
                continue;
            }
            let c = local_cost.eval(a[i], b[j]);
            let prev = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => acc[0][j - 1],
                (_, 0) => acc[i - 1][0],
                _ => acc[i - 1][j - 1].min(acc[i - 1][j]).min(acc[i][j - 1]),
            };
            acc[i][j] = c + prev;
        }
    }
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while (i, j) != (0, 0) {
        let step = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[i - 1][j - 1];
            let up = acc[i - 1][j];
            let left = acc[i][j - 1];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        (i, j) = step;
        path.push(step);
    }
    path.reverse();
    Ok(WarpingResult {
        distance: acc[n - 1][m - 1],
        path,
        cost_matrix: acc,
    })
}

/// Distance only, in `O(m)` memory.
pub fn dtw_distance(a: &[f64], b: &[f64], local_cost: LocalCost, band: Option<usize>) -> Result<f64, ClusterError> {
    check(a, b, band)?;
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for (i, &x) in a.iter().enumerate() {
        for j in 0..m {
            if !in_band(i, j, band) {
                cur[j] = f64::INFINITY;
                continue;
            }
            let before = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j - 1].min(prev[j]).min(cur[j - 1]),
            };
            cur[j] = local_cost.eval(x, b[j]) + before;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}
