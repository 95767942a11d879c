//! Gauss–Legendre quadrature.
//!
//! Band integrals are taken in the variable θ with λ = 2 − 2 cos θ,
//! which turns the square-root band edges of the free density into the
//! smooth weight (2/π) sin²θ on [0, π].

use crate::error::{Error, Result};

/// Nodes and weights on [−1, 1], by Newton iteration on the Legendre
/// recurrence (Numerical Recipes gauleg).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            let pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                let pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                x[i] = -z;
                x[n - 1 - i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
                w[n - 1 - i] = w[i];
                break;
            }
        }
    }
    (x, w)
}

/// ∫_0^π f(θ) dθ with n Gauss–Legendre nodes.
pub fn integrate_theta<F: Fn(f64) -> f64>(f: &F, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let half = std::f64::consts::PI / 2.0;
    let mut acc = 0.0;
    for i in 0..n {
        let theta = half * (x[i] + 1.0);
        acc += w[i] * f(theta);
    }
    acc * half
}

pub const QUADRATURE_START: usize = 256;
pub const QUADRATURE_CAP: usize = 8192;

/// Doubles the node count until two successive values differ by less
/// than `tol`; reports non-convergence past the cap.
pub fn integrate_theta_adaptive<F: Fn(f64) -> f64>(f: &F, tol: f64) -> Result<f64> {
    let mut n = QUADRATURE_START;
    let mut prev = integrate_theta(f, n);
    while n < QUADRATURE_CAP {
        n *= 2;
        let cur = integrate_theta(f, n);
        if (cur - prev).abs() < tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence { what: "band quadrature", iterations: QUADRATURE_CAP })
}
