use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::NumericsError;

/// A column is treated as collinear with its predecessors when the QR
/// diagonal falls below this fraction of the column's own norm.
const RANK_TOLERANCE: f64 = 1e-10;

/// Output of an ordinary least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquaresSolution {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub residual_sum_squares: f64,
    /// `(XᵀX)⁻¹`, obtained as `R⁻¹R⁻ᵀ` from the QR factor.
    pub covariance_unscaled: DMatrix<f64>,
    pub rank: usize,
}

/// Minimise `‖y − Xβ‖²` through a Householder QR factorisation.
///
/// Returns [`NumericsError::RankDeficient`] with the index of the first
/// column lying (numerically) in the span of the columns before it.
pub fn solve_least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquaresSolution, NumericsError> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(NumericsError::DimensionMismatch { rows: n, len: y.len() });
    }
    if k == 0 || n < k {
        return Err(NumericsError::Underdetermined { rows: n, cols: k });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite("design matrix or response"));
    }

    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let col_norm = x.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * col_norm {
            return Err(NumericsError::RankDeficient { column: j });
        }
    }

    let q = qr.q();
    let qty = q.transpose() * y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or(NumericsError::RankDeficient { column: k - 1 })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(NumericsError::RankDeficient { column: k - 1 })?;
    let mut covariance_unscaled = &r_inv * r_inv.transpose();
    symmetrize(&mut covariance_unscaled);

    let residuals = y - x * &coefficients;
    let residual_sum_squares = residuals.norm_squared();
    Ok(LeastSquaresSolution {
        coefficients,
        residuals,
        residual_sum_squares,
        covariance_unscaled,
        rank: k,
    })
}

/// Gaussian log-likelihood of independent residuals with common variance.
pub fn gaussian_loglik(residuals: &[f64], sigma2: f64) -> Result<f64, NumericsError> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(NumericsError::NonPositiveVariance(sigma2));
    }
    let n = residuals.len() as f64;
    let ss: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - ss / (2.0 * sigma2))
}

/// Moore–Penrose inverse of a symmetric matrix and its numerical rank.
///
/// Eigenvalues at or below `rel_tol · max|λ|` are treated as zero; negative
/// eigenvalues above the cutoff are kept, so the caller can inspect
/// definiteness separately through [`min_eigenvalue`].
pub fn symmetric_pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let n = m.nrows();
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cutoff = rel_tol * scale;
    let mut inv = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff && scale > 0.0 {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            inv += (v * v.transpose()) / lambda;
        }
    }
    (inv, rank)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let mut sym = m.clone();
    symmetrize(&mut sym);
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
