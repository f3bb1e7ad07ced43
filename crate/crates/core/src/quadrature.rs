//! Gauss–Legendre and Clenshaw–Curtis rules.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[a, b]`, nodes ascending.
///
/// Newton iteration on `P_n` from Chebyshev-like initial guesses; exact for
/// polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = (b - a) / 2.0;
    let mid = (a + b) / 2.0;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // z is descending in i; fill from both ends so nodes ascend.
        x[i] = mid - half * z;
        x[n - 1 - i] = mid + half * z;
        w[i] = half * wi;
        w[n - 1 - i] = half * wi;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Clenshaw–Curtis weights for the `degree + 1` Chebyshev–Gauss–Lobatto
/// nodes `-cos(pi j / degree)` mapped to `[a, b]`.
pub fn clenshaw_curtis(degree: usize, a: f64, b: f64) -> Vec<f64> {
    let n = degree;
    let mut w = vec![0.0; n + 1];
    if n == 0 {
        w[0] = b - a;
        return w;
    }
    let nf = n as f64;
    let theta: Vec<f64> = (0..=n).map(|j| PI * j as f64 / nf).collect();
    let mut v = vec![1.0; n.saturating_sub(1)];
    if n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta[i + 1]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta[i + 1]).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    let scale = (b - a) / 2.0;
    w.iter_mut().for_each(|x| *x *= scale);
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 8, 33] {
            let (x, w) = gauss_legendre(n, 0.0, 2.0);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = 2f64.powi(p as i32 + 1) / (p as f64 + 1.0);
                assert!((q - exact).abs() < 1e-12 * exact.max(1.0), "n={n} p={p}");
            }
        }
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials() {
        for n in [8, 9, 16, 33] {
            let w = clenshaw_curtis(n, 0.0, 1.0);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let x: Vec<f64> = (0..=n).map(|j| (1.0 - (PI * j as f64 / n as f64).cos()) / 2.0).collect();
            for p in 0..=n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }
}
