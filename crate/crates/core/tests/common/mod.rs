//! Reference computations used as oracles by the integration tests. Each one
//! is written independently of the library code it checks.
#![allow(dead_code)]

use std::f64::consts::PI;

pub fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * PI).sqrt())
}

/// Standard normal CDF from the Taylor series of erf, accurate to ~1e-15
/// for |x| < 6.
pub fn normal_cdf_series(x: f64) -> f64 {
    let z = x / 2f64.sqrt();
    let mut term = z;
    let mut sum = z;
    for n in 1..200 {
        term *= -z * z / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    0.5 * (1.0 + 2.0 / PI.sqrt() * sum)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Kalman-filter log-likelihood of `y_1..y_T` for
/// `x_t = mu + phi (x_{t-1} - mu) + sv v_t`, `y_t = x_t + se e_t`, with `x_0`
/// stationary.
pub fn kalman_loglik(mu: f64, phi: f64, sv: f64, se: f64, y: &[f64]) -> f64 {
    let mut m = mu;
    let mut p = sv * sv / (1.0 - phi * phi);
    let mut ll = 0.0;
    for &obs in y {
        let mp = mu + phi * (m - mu);
        let pp = phi * phi * p + sv * sv;
        let s = pp + se * se;
        ll += -0.5 * ((2.0 * PI * s).ln() + (obs - mp) * (obs - mp) / s);
        let k = pp / s;
        m = mp + k * (obs - mp);
        p = (1.0 - k) * pp;
    }
    ll
}

/// Log-likelihood of the leveraged SV model by a point-mass filter on a
/// uniform grid. Uses the bivariate normal of `(x_{t+1}, y_t) | x_t` with
/// covariance `[[sv^2, c(x)], [c(x), e^x]]` directly. `x_1` is Gaussian with
/// mean `mu` and variance `phi^2 v0 + sv^2`.
#[allow(clippy::too_many_arguments)]
pub fn sv_grid_loglik(
    mu: f64,
    phi: f64,
    sv: f64,
    v0: f64,
    cross: impl Fn(f64) -> f64,
    y: &[f64],
    lo: f64,
    hi: f64,
    g: usize,
) -> f64 {
    let dx = (hi - lo) / g as f64;
    let xs: Vec<f64> = (0..g).map(|i| lo + (i as f64 + 0.5) * dx).collect();
    let sd1 = (phi * phi * v0 + sv * sv).sqrt();
    // Predictive density of x_t before seeing y_t.
    let mut pred: Vec<f64> = xs.iter().map(|x| normal_pdf(*x, mu, sd1)).collect();
    for &yt in &y[..y.len() - 1] {
        let mut next = vec![0.0; g];
        for (i, &x) in xs.iter().enumerate() {
            if pred[i] == 0.0 {
                continue;
            }
            let (s11, s22, s12) = (sv * sv, x.exp(), cross(x));
            let det = s11 * s22 - s12 * s12;
            if det <= 0.0 {
                continue;
            }
            let mean_x = mu + phi * (x - mu);
            for (j, &xn) in xs.iter().enumerate() {
                let a = xn - mean_x;
                let q = (s22 * a * a - 2.0 * s12 * a * yt + s11 * yt * yt) / det;
                next[j] += pred[i] * dx * (-0.5 * q).exp() / (2.0 * PI * det.sqrt());
            }
        }
        pred = next;
    }
    let last = y[y.len() - 1];
    let lik: f64 = xs
        .iter()
        .zip(&pred)
        .map(|(x, p)| p * dx * normal_pdf(last, 0.0, (0.5 * x).exp()))
        .sum();
    lik.ln()
}

/// Mean and standard error of `exp(v)` relative to `exp(shift)`, i.e. of
/// `exp(v - shift)`.
pub fn mean_and_se_of_exp(values: &[f64], shift: f64) -> (f64, f64) {
    let w: Vec<f64> = values.iter().map(|v| (v - shift).exp()).collect();
    let n = w.len() as f64;
    let m = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
