//! Central finite-difference gradient verification.
//!
//! The checker only needs a scalar-valued function of a flat parameter
//! vector; it knows nothing about graphs, so it stays independent of the
//! backward implementation it is used to verify.

/// Central finite-difference gradient of `f` at `x0`.
pub fn finite_difference<F>(mut f: F, x0: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x0.len()];
    let mut x = x0.to_vec();
    for i in 0..x0.len() {
        x[i] = x0[i] + h;
        let up = f(&x);
        x[i] = x0[i] - h;
        let down = f(&x);
        x[i] = x0[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Worst relative discrepancy between `analytic` and `numeric`, where the
/// relative scale is `max(1, |a|, |n|)` per element.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / 1.0_f64.max(a.abs()).max(n.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        // f(x) = sum x_i^2, grad = 2x
        let x0 = [0.5, -1.25, 3.0];
        let g = finite_difference(|x| x.iter().map(|v| v * v).sum(), &x0, 1e-4);
        let expected: Vec<f64> = x0.iter().map(|v| 2.0 * v).collect();
        assert!(max_relative_error(&expected, &g) < 1e-8);
    }
}
