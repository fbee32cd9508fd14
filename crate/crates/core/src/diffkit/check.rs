//! Central finite differences, used as the independent oracle in tests.

/// Central-difference gradient of `f` at `x`.
pub fn central_gradient<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central-difference directional derivative `(g(x + h v) − g(x − h v)) / 2h`.
pub fn fd_directional<G>(g: G, x: &[f64], v: &[f64], h: f64) -> Vec<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let up: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let down: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
    g(&up)
        .iter()
        .zip(g(&down))
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect()
}

/// Largest per-coordinate relative error between `analytic_grad` and a
/// central-difference estimate with step `h`:
/// `max_i |fd_i − g_i| / (|g_i| + 1e−12)`.
pub fn finite_diff_check<F>(f: F, x: &[f64], analytic_grad: &[f64], h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    central_gradient(f, x, h)
        .iter()
        .zip(analytic_grad)
        .map(|(fd, g)| (fd - g).abs() / (g.abs() + 1e-12))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffkit::softplus;

    #[test]
    fn square_passes() {
        assert!(finite_diff_check(|x| x[0] * x[0], &[3.0], &[6.0], 1e-5) < 1e-6);
    }

    #[test]
    fn softplus_at_zero_passes() {
        assert!(finite_diff_check(|x| softplus(x[0]), &[0.0], &[0.5], 1e-5) < 1e-6);
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        assert!(finite_diff_check(|x| x[0] * x[0], &[3.0], &[5.0], 1e-5) > 0.1);
    }
}
