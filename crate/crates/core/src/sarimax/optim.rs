//! Nelder–Mead simplex minimisation.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once `f_max − f_min` over the simplex falls to this value.
    pub f_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            f_tol: 1e-8,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimise `f` from `x0`. Non-finite values count as `+∞`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: NelderMeadOptions) -> Minimum {
    let n = x0.len();
    if n == 0 {
        return Minimum {
            x: Vec::new(),
            f: eval(&mut f, x0),
            iterations: 0,
            converged: true,
        };
    }
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i] == 0.0 { opts.initial_step } else { opts.initial_step * v[i].abs().max(1.0) };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(&mut f, v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        if values[0].is_finite() && spread <= opts.f_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect() };

        let xr = along(-1.0);
        let fr = eval(&mut f, &xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&mut f, &xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        // Outside contraction when the reflection helped, inside otherwise.
        let xc = along(if fr < values[n] { -0.5 } else { 0.5 });
        let fc = eval(&mut f, &xc);
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
            values[i] = eval(&mut f, &shrunk);
            simplex[i] = shrunk;
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        converged,
    }
}

/// One run, then a restart from the best point with the remaining budget.
pub fn minimize_with_restart(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: NelderMeadOptions) -> Minimum {
    let first = nelder_mead(&mut f, x0, opts);
    if !first.converged || x0.is_empty() {
        return first;
    }
    let remaining = opts.max_iter.saturating_sub(first.iterations);
    if remaining == 0 {
        return first;
    }
    let second = nelder_mead(
        &mut f,
        &first.x,
        NelderMeadOptions {
            max_iter: remaining,
            ..opts
        },
    );
    let iterations = first.iterations + second.iterations;
    if second.f <= first.f {
        Minimum { iterations, ..second }
    } else {
        Minimum { iterations, ..first }
    }
}
