//! Simulators and independent reference computations shared by the
//! integration tests and the acceptance harness.

#![allow(dead_code)]

use co2_analysis::panel::{PanelDataset, VariableRole};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Panel with `y` as the dependent variable and `x1..xk` as candidates.
/// `cell(e, t)` returns `(y, x)`.
pub fn panel_from(ne: usize, nt: usize, k: usize, mut cell: impl FnMut(usize, usize) -> (f64, Vec<f64>)) -> PanelDataset {
    let mut variables = vec!["y".to_string()];
    variables.extend(names("x", k));
    let mut roles = vec![VariableRole::Dependent];
    roles.extend(std::iter::repeat(VariableRole::CandidatePredictor).take(k));
    let mut values = Vec::with_capacity(ne * nt * (k + 1));
    for e in 0..ne {
        for t in 0..nt {
            let (y, x) = cell(e, t);
            assert_eq!(x.len(), k);
            values.push(y);
            values.extend(x);
        }
    }
    PanelDataset::new(names("E", ne), (2000..2000 + nt as i32).collect(), variables, roles, values).unwrap()
}

#[derive(Debug, Clone)]
pub struct PanelSim {
    pub entities: usize,
    pub periods: usize,
    pub beta: Vec<f64>,
    pub sigma_u: f64,
    pub sigma_e: f64,
    /// Loading of the entity effect on every regressor; 0 keeps the
    /// random-effects assumptions.
    pub effect_loading: f64,
    pub period_sd: f64,
}

impl PanelSim {
    pub fn new(entities: usize, periods: usize, beta: Vec<f64>) -> Self {
        Self {
            entities,
            periods,
            beta,
            sigma_u: 1.0,
            sigma_e: 1.0,
            effect_loading: 0.0,
            period_sd: 0.0,
        }
    }

    pub fn simulate(&self, rng: &mut ChaCha8Rng) -> PanelDataset {
        let k = self.beta.len();
        let u: Vec<f64> = (0..self.entities).map(|_| self.sigma_u * gauss(rng)).collect();
        let lambda: Vec<f64> = (0..self.periods).map(|_| self.period_sd * gauss(rng)).collect();
        let level: Vec<Vec<f64>> = (0..self.entities).map(|_| (0..k).map(|_| gauss(rng)).collect()).collect();
        let mut draws = Vec::with_capacity(self.entities * self.periods);
        for e in 0..self.entities {
            for t in 0..self.periods {
                let x: Vec<f64> = (0..k).map(|j| level[e][j] + self.effect_loading * u[e] + gauss(rng)).collect();
                let y = 1.0 + x.iter().zip(&self.beta).map(|(a, b)| a * b).sum::<f64>() + u[e] + lambda[t] + self.sigma_e * gauss(rng);
                draws.push((y, x));
            }
        }
        let mut it = draws.into_iter();
        panel_from(self.entities, self.periods, k, |_, _| it.next().unwrap())
    }
}

/// Entity-major design matrix and response.
pub fn design(panel: &PanelDataset, intercept: bool) -> (DMatrix<f64>, DVector<f64>) {
    let y = DVector::from_vec(panel.column(panel.dependent()).unwrap());
    let preds = panel.candidate_predictors();
    let n = y.len();
    let offset = usize::from(intercept);
    let mut x = DMatrix::zeros(n, preds.len() + offset);
    if intercept {
        x.column_mut(0).fill(1.0);
    }
    for (j, p) in preds.iter().enumerate() {
        x.set_column(j + offset, &DVector::from_vec(panel.column(p).unwrap()));
    }
    (x, y)
}

/// β from `(XᵀX) β = Xᵀy` by LU, a different route from the QR solver.
pub fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    (x.transpose() * x).lu().solve(&(x.transpose() * y)).expect("well-conditioned fixture")
}

pub fn rss(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    (y - x * beta).norm_squared()
}

/// Subtract `theta` times each entity's time mean from every column.
pub fn quasi_demean(m: &DMatrix<f64>, periods: usize, theta: f64) -> DMatrix<f64> {
    let mut out = m.clone();
    for e in 0..m.nrows() / periods {
        for j in 0..m.ncols() {
            let mean = (0..periods).map(|t| m[(e * periods + t, j)]).sum::<f64>() / periods as f64;
            for t in 0..periods {
                out[(e * periods + t, j)] -= theta * mean;
            }
        }
    }
    out
}

/// GLS with the error-components covariance written out in full:
/// `Ω = σ²_e I + σ²_u (I_E ⊗ J_T)`.
pub fn gls_explicit(x: &DMatrix<f64>, y: &DVector<f64>, periods: usize, sigma2_u: f64, sigma2_e: f64) -> DVector<f64> {
    let n = x.nrows();
    let mut omega = DMatrix::identity(n, n) * sigma2_e;
    for e in 0..n / periods {
        for s in 0..periods {
            for t in 0..periods {
                omega[(e * periods + s, e * periods + t)] += sigma2_u;
            }
        }
    }
    let w = omega.try_inverse().expect("Ω is positive definite");
    let xtw = x.transpose() * &w;
    (&xtw * x).lu().solve(&(&xtw * y)).unwrap()
}

/// Autocovariances `γ(0..n)` of a causal ARMA with unit innovation variance
/// from a long truncated ψ-weight expansion.
pub fn arma_autocovariance(ar: &[f64], ma: &[f64], n: usize) -> Vec<f64> {
    const TERMS: usize = 20_000;
    let mut psi = vec![0.0; TERMS];
    psi[0] = 1.0;
    for j in 1..TERMS {
        let mut v = if j <= ma.len() { ma[j - 1] } else { 0.0 };
        for (i, a) in ar.iter().enumerate() {
            if j > i {
                v += a * psi[j - 1 - i];
            }
        }
        psi[j] = v;
    }
    (0..n).map(|h| (0..TERMS - h).map(|j| psi[j] * psi[j + h]).sum()).collect()
}

/// Exact Gaussian log-likelihood from the dense Toeplitz covariance.
pub fn dense_arma_loglik(ar: &[f64], ma: &[f64], u: &[f64], sigma2: f64) -> f64 {
    let n = u.len();
    let g = arma_autocovariance(ar, ma, n);
    let cov = DMatrix::from_fn(n, n, |i, j| sigma2 * g[i.abs_diff(j)]);
    let chol = cov.cholesky().expect("stationary covariance");
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let v = DVector::from_column_slice(u);
    let quad = v.dot(&chol.solve(&v));
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// Closed-form exact AR(1) log-likelihood.
pub fn ar1_exact_loglik(phi: f64, u: &[f64], sigma2: f64) -> f64 {
    let n = u.len() as f64;
    let mut q = (1.0 - phi * phi) * u[0] * u[0];
    for t in 1..u.len() {
        q += (u[t] - phi * u[t - 1]).powi(2);
    }
    -0.5 * (n * (2.0 * std::f64::consts::PI * sigma2).ln() - (1.0 - phi * phi).ln() + q / sigma2)
}

/// Simulate a stationary AR(1) with a burn-in.
pub fn simulate_ar1(rng: &mut ChaCha8Rng, phi: f64, n: usize) -> Vec<f64> {
    let mut x = 0.0;
    let mut out = Vec::with_capacity(n);
    for t in 0..n + 200 {
        x = phi * x + gauss(rng);
        if t >= 200 {
            out.push(x);
        }
    }
    out
}

/// Minimum DTW cost by depth-first enumeration of every monotone path with
/// unit steps, pruned once a partial cost reaches the best complete one.
pub fn dtw_bruteforce(a: &[f64], b: &[f64], cost: impl Fn(f64, f64) -> f64 + Copy) -> f64 {
    fn go(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64, cost: impl Fn(f64, f64) -> f64 + Copy) {
        let acc = acc + cost(a[i], b[j]);
        if acc >= *best {
            return;
        }
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = acc;
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            go(a, b, i + 1, j + 1, acc, best, cost);
        }
        if i + 1 < a.len() {
            go(a, b, i + 1, j, acc, best, cost);
        }
        if j + 1 < b.len() {
            go(a, b, i, j + 1, acc, best, cost);
        }
    }
    let mut best = f64::INFINITY;
    go(a, b, 0, 0, 0.0, &mut best, cost);
    best
}

/// All sequences over `alphabet` with lengths `1..=max_len`.
pub fn all_sequences(alphabet: &[f64], max_len: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut layer: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                alphabet.iter().map(move |&c| {
                    let mut t = s.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

pub fn random_series(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<Vec<f64>> {
    let noise = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|_| {
            let shift: f64 = rng.random_range(-2.0..2.0);
            let slope: f64 = rng.random_range(-0.3..0.3);
            (0..len).map(|t| shift + slope * t as f64 + noise.sample(rng)).collect()
        })
        .collect()
}
