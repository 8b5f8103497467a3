//! Harvey state-space form of an ARMA process and its Kalman filter.
//!
//! `u_t = Σ arᵢ u_{t−i} + ε_t + Σ maⱼ ε_{t−j}` is represented with state
//! dimension `r = max(p, q + 1)`, transition `T` (AR coefficients in the
//! first column, ones on the superdiagonal), disturbance loading
//! `R = (1, ma₁, …, ma_{r−1})ᵀ` and observation `Z = e₁`. All variances
//! below are in units of the innovation variance σ².

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaProcess {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
}

/// Kalman output for one or more series filtered with the same system.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    /// One column per input series.
    pub innovations: DMatrix<f64>,
    /// Innovation variances `F_t`, shared by all columns.
    pub variances: Vec<f64>,
    /// Predicted state `a_{n+1|n}` per column.
    pub next_state: DMatrix<f64>,
}

impl ArmaProcess {
    pub fn new(ar: Vec<f64>, ma: Vec<f64>) -> Self {
        Self { ar, ma }
    }

    pub fn state_dim(&self) -> usize {
        self.ar.len().max(self.ma.len() + 1)
    }

    pub fn transition(&self) -> DMatrix<f64> {
        let r = self.state_dim();
        let mut t = DMatrix::zeros(r, r);
        for (i, a) in self.ar.iter().enumerate() {
            t[(i, 0)] = *a;
        }
        for i in 0..r.saturating_sub(1) {
            t[(i, i + 1)] = 1.0;
        }
        t
    }

    fn loading(&self) -> DVector<f64> {
        let r = self.state_dim();
        DVector::from_fn(r, |i, _| if i == 0 { 1.0 } else { self.ma.get(i - 1).copied().unwrap_or(0.0) })
    }

    /// Unconditional state covariance solving `P = T P Tᵀ + R Rᵀ`.
    /// `None` when the AR part is not stationary.
    pub fn stationary_covariance(&self) -> Option<DMatrix<f64>> {
        let r = self.state_dim();
        let t = self.transition();
        let rv = self.loading();
        let q = &rv * rv.transpose();
        let kron = t.kronecker(&t);
        let lhs = DMatrix::identity(r * r, r * r) - kron;
        let rhs = DVector::from_column_slice(q.as_slice());
        let vec_p = lhs.lu().solve(&rhs)?;
        let mut p = DMatrix::from_column_slice(r, r, vec_p.as_slice());
        crate::numerics::symmetrize(&mut p);
        if !(p[(0, 0)] > 0.0) || p.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(p)
    }

    /// Filter the columns of `data` (n × c) from the stationary initial state.
    pub fn filter(&self, data: &DMatrix<f64>) -> Option<FilterOutput> {
        let (n, c) = data.shape();
        let t = self.transition();
        let rv = self.loading();
        let q = &rv * rv.transpose();
        let mut p = self.stationary_covariance()?;
        let r = self.state_dim();
        let mut a = DMatrix::zeros(r, c);
        let mut innovations = DMatrix::zeros(n, c);
        let mut variances = Vec::with_capacity(n);
        for step in 0..n {
            let f = p[(0, 0)];
            if !(f > 0.0) || !f.is_finite() {
                return None;
            }
            let v = data.row(step) - a.row(0);
            innovations.row_mut(step).copy_from(&v);
            variances.push(f);
            let k = (&t * p.column(0)) / f;
            a = &t * &a + &k * &v;
            p = &t * &p * t.transpose() + &q - &k * k.transpose() * f;
            crate::numerics::symmetrize(&mut p);
        }
        Some(FilterOutput {
            innovations,
            variances,
            next_state: a,
        })
    }

    /// Exact Gaussian log-likelihood of a zero-mean series.
    pub fn log_likelihood(&self, u: &[f64], sigma2: f64) -> Option<f64> {
        if !(sigma2 > 0.0) {
            return None;
        }
        let out = self.filter(&DMatrix::from_column_slice(u.len(), 1, u))?;
        let mut ll = 0.0;
        for (i, f) in out.variances.iter().enumerate() {
            let v = out.innovations[(i, 0)];
            let var = f * sigma2;
            ll -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + v * v / var);
        }
        Some(ll)
    }

    /// Point forecasts of `u` for `h` steps from a predicted state.
    pub fn project(&self, next_state: &DVector<f64>, h: usize) -> Vec<f64> {
        let t = self.transition();
        let mut s = next_state.clone();
        let mut out = Vec::with_capacity(h);
        for _ in 0..h {
            out.push(s[0]);
            s = &t * s;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_stationary_variance() {
        let p = ArmaProcess::new(vec![0.6], vec![]).stationary_covariance().unwrap();
        assert!((p[(0, 0)] - 1.0 / (1.0 - 0.36)).abs() < 1e-12);
    }

    #[test]
    fn ma1_variance() {
        let p = ArmaProcess::new(vec![], vec![0.5]).stationary_covariance().unwrap();
        assert!((p[(0, 0)] - 1.25).abs() < 1e-12);
    }

    #[test]
    fn unit_root_has_no_stationary_covariance() {
        assert!(ArmaProcess::new(vec![1.0], vec![]).stationary_covariance().is_none());
    }

    #[test]
    fn white_noise_likelihood() {
        let u = [0.3, -1.0, 0.5];
        let ll = ArmaProcess::new(vec![], vec![]).log_likelihood(&u, 2.0).unwrap();
        let ss: f64 = u.iter().map(|v| v * v).sum();
        let expected = -1.5 * (2.0 * std::f64::consts::PI * 2.0).ln() - ss / 4.0;
        assert!((ll - expected).abs() < 1e-14);
    }
}
