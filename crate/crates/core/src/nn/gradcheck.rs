//! Central finite-difference utilities used by gradient tests.

/// Relative error between an analytic and a numeric derivative.
///
/// Symmetric form `|a − n| / max(ε, |a| + |n|)`, which stays meaningful when
/// both values are near zero.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let denom = (analytic.abs() + numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Central-difference gradient of a scalar function of a flat vector.
pub fn central_diff<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut buf = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = buf[i];
        buf[i] = orig + h;
        let fp = f(&buf);
        buf[i] = orig - h;
        let fm = f(&buf);
        buf[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Largest relative error between an analytic gradient and the
/// central-difference gradient of `f` at `x`.
pub fn max_rel_err<F>(f: F, x: &[f64], analytic: &[f64], h: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let numeric = central_diff(f, x, h);
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(&a, &n)| rel_err(a, n))
        .fold(0.0, f64::max)
}
