//! Gauss-Legendre and Gauss-Lobatto rules on the reference interval [-1, 1].

use std::f64::consts::PI;

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-14 {
        // endpoint limit of the derivative
        let s = if x > 0.0 { 1.0 } else if n % 2 == 0 { -1.0 } else { 1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `n`-point Gauss-Lobatto rule (includes both endpoints), `n >= 2`.
pub fn gauss_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2, "Gauss-Lobatto rule needs at least two points");
    let big_n = n - 1;
    let nf = big_n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = -(PI * i as f64 / nf).cos();
        if i > 0 {
            for _ in 0..100 {
                let (p, dp) = legendre(big_n, x);
                let d2p = (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x);
                let dx = dp / d2p;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
        }
        let (p, _) = legendre(big_n, x);
        let w = 2.0 / (nf * (nf + 1.0) * p * p);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    nodes[0] = -1.0;
    nodes[n - 1] = 1.0;
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(nodes: &[f64], weights: &[f64], p: i32) -> f64 {
        nodes.iter().zip(weights).map(|(x, w)| w * x.powi(p)).sum()
    }

    fn exact_monomial(p: i32) -> f64 {
        if p % 2 == 1 {
            0.0
        } else {
            2.0 / (p as f64 + 1.0)
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n as i32) {
                let err = (integrate(&x, &w, p) - exact_monomial(p)).abs();
                assert!(err < 1e-14, "n={n} p={p} err={err}");
            }
        }
    }

    #[test]
    fn gauss_lobatto_exactness_and_endpoints() {
        for n in 2..=8 {
            let (x, w) = gauss_lobatto(n);
            assert_eq!(x[0], -1.0);
            assert_eq!(x[n - 1], 1.0);
            for p in 0..(2 * n as i32 - 2) {
                let err = (integrate(&x, &w, p) - exact_monomial(p)).abs();
                assert!(err < 1e-14, "n={n} p={p} err={err}");
            }
        }
    }

    #[test]
    fn lobatto_four_points() {
        let (x, _) = gauss_lobatto(4);
        assert!((x[2] - 1.0 / 5f64.sqrt()).abs() < 1e-15);
    }
}
