//! Lag polynomials, differencing and the stationarity-enforcing transform.
//!
//! AR polynomials are written `1 − Σ φᵢ Lⁱ`, MA polynomials `1 + Σ θᵢ Lⁱ`.

/// Partial autocorrelations to AR coefficients (Durbin–Levinson).
pub fn pacf_to_coefficients(r: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    for (k, &rk) in r.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - rk * prev[k - 1 - j];
        }
        phi.push(rk);
    }
    phi
}

/// Inverse of [`pacf_to_coefficients`]; `None` when `phi` is not stationary.
pub fn coefficients_to_pacf(phi: &[f64]) -> Option<Vec<f64>> {
    let mut cur = phi.to_vec();
    let mut r = vec![0.0; phi.len()];
    for k in (0..phi.len()).rev() {
        let rk = cur[k];
        if !(rk.abs() < 1.0) {
            return None;
        }
        r[k] = rk;
        let denom = 1.0 - rk * rk;
        let prev: Vec<f64> = (0..k).map(|j| (cur[j] + rk * cur[k - 1 - j]) / denom).collect();
        cur = prev;
    }
    Some(r)
}

/// Unconstrained reals to stationary AR coefficients.
pub fn constrain_ar(x: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = x.iter().map(|v| v / (1.0 + v * v).sqrt()).collect();
    pacf_to_coefficients(&r)
}

/// Unconstrained reals to invertible MA coefficients.
pub fn constrain_ma(x: &[f64]) -> Vec<f64> {
    constrain_ar(x).into_iter().map(|c| -c).collect()
}

/// Inverse of [`constrain_ar`], with partial autocorrelations clipped to
/// ±0.99 so starting values stay away from the boundary.
pub fn unconstrain_ar(phi: &[f64]) -> Vec<f64> {
    let r = coefficients_to_pacf(phi).unwrap_or_else(|| vec![0.0; phi.len()]);
    r.into_iter()
        .map(|v| {
            let v = v.clamp(-0.99, 0.99);
            v / (1.0 - v * v).sqrt()
        })
        .collect()
}

pub fn unconstrain_ma(theta: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
    unconstrain_ar(&neg)
}

/// Product of two polynomials given by full coefficient vectors (constant first).
pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn lag_poly(coefs: &[f64], sign: f64, stride: usize) -> Vec<f64> {
    let mut p = vec![0.0; coefs.len() * stride + 1];
    p[0] = 1.0;
    for (i, c) in coefs.iter().enumerate() {
        p[(i + 1) * stride] = sign * c;
    }
    p
}

/// `φ*` with `1 − Σ φ*ⱼ Lʲ = (1 − Σ φᵢ Lⁱ)(1 − Σ Φᵢ L^{iS})`.
pub fn expand_ar(phi: &[f64], seasonal: &[f64], s: usize) -> Vec<f64> {
    let full = poly_mul(&lag_poly(phi, -1.0, 1), &lag_poly(seasonal, -1.0, s));
    full[1..].iter().map(|c| -c).collect()
}

/// `θ*` with `1 + Σ θ*ⱼ Lʲ = (1 + Σ θᵢ Lⁱ)(1 + Σ Θᵢ L^{iS})`.
pub fn expand_ma(theta: &[f64], seasonal: &[f64], s: usize) -> Vec<f64> {
    let full = poly_mul(&lag_poly(theta, 1.0, 1), &lag_poly(seasonal, 1.0, s));
    full[1..].to_vec()
}

/// Coefficients `δ₀ = 1, δ₁, …` of `(1 − L)^d (1 − L^S)^D`.
pub fn differencing_polynomial(d: usize, seasonal_d: usize, s: usize) -> Vec<f64> {
    let mut p = vec![1.0];
    for _ in 0..d {
        p = poly_mul(&p, &[1.0, -1.0]);
    }
    for _ in 0..seasonal_d {
        let mut sp = vec![0.0; s + 1];
        sp[0] = 1.0;
        sp[s] = -1.0;
        p = poly_mul(&p, &sp);
    }
    p
}

/// Apply `δ(L)`; the output is shorter by `deg δ`.
pub fn difference(y: &[f64], d: usize, seasonal_d: usize, s: usize) -> Vec<f64> {
    let delta = differencing_polynomial(d, seasonal_d, s);
    let lag = delta.len() - 1;
    (lag..y.len())
        .map(|t| delta.iter().enumerate().map(|(j, c)| c * y[t - j]).sum())
        .collect()
}

/// Undo [`difference`]: given the `deg δ` levels preceding `w`, rebuild the
/// levels aligned with `w`.
pub fn integrate(w: &[f64], history: &[f64], d: usize, seasonal_d: usize, s: usize) -> Vec<f64> {
    let delta = differencing_polynomial(d, seasonal_d, s);
    let lag = delta.len() - 1;
    assert_eq!(history.len(), lag, "history must hold deg(delta) levels");
    let mut levels = history.to_vec();
    for &wt in w {
        let t = levels.len();
        let y = wt - (1..=lag).map(|j| delta[j] * levels[t - j]).sum::<f64>();
        levels.push(y);
    }
    levels.split_off(lag)
}
