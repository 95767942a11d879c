//! The regular solution φ_n of the lattice Schrödinger recursion,
//! fixed by the Dirichlet data φ_0 = 0, φ_1 = 1.
//!
//! φ_n is a polynomial of degree n−1 in λ. Its coefficients follow from
//! an exact convolution of the three-term recursion
//!     φ_{n+1} = (2 + V_n − λ) φ_n − φ_{n−1},
//! which also yields the λ-derivative recursion used for the
//! divided-difference limits in the Darboux workspace.

use num_complex::Complex64;

use crate::potential::Potential;

/// φ_n as a polynomial in λ: coefficients `coeffs[j]` multiply λ^j,
/// degree exactly n−1.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularPolynomial {
    pub site: usize,
    pub coeffs: Vec<f64>,
}

impl RegularPolynomial {
    pub fn eval(&self, lambda: f64) -> f64 {
        horner(&self.coeffs, lambda)
    }

    pub fn derivative(&self) -> RegularPolynomial {
        let coeffs = if self.coeffs.len() <= 1 {
            vec![0.0]
        } else {
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| j as f64 * c)
                .collect()
        };
        RegularPolynomial { site: self.site, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// φ_0..φ_{n_max} at real λ by forward recursion.
pub fn regular_solution(v: &Potential, lambda: f64, n_max: usize) -> Vec<f64> {
    let mut phi = Vec::with_capacity(n_max + 1);
    phi.push(0.0);
    if n_max == 0 {
        return phi;
    }
    phi.push(1.0);
    for n in 1..n_max {
        let next = (2.0 + v.v(n) - lambda) * phi[n] - phi[n - 1];
        phi.push(next);
    }
    phi
}

/// φ_0..φ_{n_max} at complex λ.
pub fn regular_solution_complex(v: &Potential, lambda: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut phi = Vec::with_capacity(n_max + 1);
    phi.push(Complex64::new(0.0, 0.0));
    if n_max == 0 {
        return phi;
    }
    phi.push(Complex64::new(1.0, 0.0));
    for n in 1..n_max {
        let next = (Complex64::new(2.0 + v.v(n), 0.0) - lambda) * phi[n] - phi[n - 1];
        phi.push(next);
    }
    phi
}

/// φ and φ̇ = dφ/dλ at real λ, both to site n_max. The derivative obeys
/// φ̇_{n+1} = (2 + V_n − λ) φ̇_n − φ_n − φ̇_{n−1} with φ̇_0 = φ̇_1 = 0.
///
/// `phi_override`, when provided, substitutes stable φ values (e.g. the
/// Jost route at a bound state) into the derivative recursion.
pub fn regular_solution_with_derivative(
    v: &Potential,
    lambda: f64,
    n_max: usize,
    phi_override: Option<&[f64]>,
) -> (Vec<f64>, Vec<f64>) {
    let phi = match phi_override {
        Some(p) => p[..=n_max.min(p.len() - 1)].to_vec(),
        None => regular_solution(v, lambda, n_max),
    };
    assert!(phi.len() > n_max, "phi table too short for n_max");
    let mut dphi = vec![0.0; n_max + 1];
    for n in 1..n_max {
        dphi[n + 1] = (2.0 + v.v(n) - lambda) * dphi[n] - phi[n] - dphi[n - 1];
    }
    (phi, dphi)
}

/// Exact λ-polynomial coefficients of φ_1..φ_{n_max}.
pub fn regular_polynomial_table(v: &Potential, n_max: usize) -> Vec<RegularPolynomial> {
    assert!(n_max >= 1);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max);
    rows.push(vec![1.0]);
    for n in 1..n_max {
        let prev: &[f64] = if n >= 2 { &rows[n - 2] } else { &[] };
        let cur = &rows[n - 1];
        let mut next = vec![0.0; n + 1];
        let a = 2.0 + v.v(n);
        for (j, c) in cur.iter().enumerate() {
            next[j] += a * c; // (2 + V_n) φ_n
            next[j + 1] -= c; // −λ φ_n
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= c; // −φ_{n−1}
        }
        rows.push(next);
    }
    rows.into_iter()
        .enumerate()
        .map(|(i, coeffs)| RegularPolynomial { site: i + 1, coeffs })
        .collect()
}

pub fn regular_polynomial_coeffs(v: &Potential, n: usize) -> RegularPolynomial {
    regular_polynomial_table(v, n).pop().unwrap()
}

/// Max residual of the three-term recursion over interior sites,
/// scaled by the local solution size.
pub fn recursion_residual(v: &Potential, lambda: f64, phi: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for n in 1..phi.len() - 1 {
        let r = ((2.0 + v.v(n) - lambda) * phi[n] - phi[n - 1] - phi[n + 1]).abs();
        let scale = phi[n - 1].abs().max(phi[n].abs()).max(phi[n + 1].abs()).max(1e-300);
        worst = worst.max(r / scale);
    }
    worst
}
