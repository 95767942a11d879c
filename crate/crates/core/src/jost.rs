//! Jost solutions and the Jost function for compactly supported
//! potentials.
//!
//! With V_n = 0 for n > b, the Jost solution obeys f_n = z^n exactly for
//! n ≥ b and the backward recursion f_{n−1} = (z + 1/z + V_n) f_n − f_{n+1}
//! below. Carried out on z-coefficient vectors, this produces the exact
//! representation f_n(z) = Σ_m K_{nm} z^m, with f_0 a polynomial of
//! degree 2b−1. All spectral quantities downstream are built from this
//! table.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::regular::regular_solution;

/// Exact coefficient table K_{nm} of the Jost solutions of a compactly
/// supported potential, rows n = 0..=b.
#[derive(Debug, Clone)]
pub struct JostData {
    support: usize,
    /// `k[n][m]` = K_{nm}; each row has length max(2b, n+1) with the
    /// convention f_n = z^n for n ≥ b.
    k: Vec<Vec<f64>>,
}

impl JostData {
    pub fn from_potential(v: &Potential) -> Self {
        let b = v.support();
        if b == 0 {
            return Self { support: 0, k: vec![vec![1.0]] };
        }
        let width = 2 * b + 2; // workspace for powers z^0..z^{2b+1}
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; width]; b + 2];
        rows[b][b] = 1.0; // f_b = z^b
        rows[b + 1][b + 1] = 1.0; // f_{b+1} = z^{b+1}
        for n in (1..=b).rev() {
            // f_{n-1} = (z + 1/z + V_n) f_n − f_{n+1}
            let mut prev = vec![0.0; width];
            let vn = v.v(n);
            for m in 0..width {
                let c = rows[n][m];
                if c != 0.0 {
                    prev[m + 1] += c;
                    // minimum power of f_n is n >= 1, so m-1 never underflows
                    if m > 0 {
                        prev[m - 1] += c;
                    } else {
                        debug_assert_eq!(c, 0.0);
                    }
                    prev[m] += vn * c;
                }
            }
            for m in 0..width {
                prev[m] -= rows[n + 1][m];
            }
            rows[n - 1] = prev;
        }
        // Degree of f_n is 2b−1−n; everything above power 2b−1 cancels
        // exactly in the recursion.
        let k = rows
            .into_iter()
            .take(b + 1)
            .map(|mut row| {
                row.truncate(2 * b);
                row
            })
            .collect();
        Self { support: b, k }
    }

    pub fn support(&self) -> usize {
        self.support
    }

    /// K_{nm}; zero outside the stored table (and exactly δ_{nm}-like
    /// for n ≥ b where f_n = z^n).
    pub fn k(&self, n: usize, m: usize) -> f64 {
        if n < self.k.len() {
            self.k[n].get(m).copied().unwrap_or(0.0)
        } else if n == m {
            1.0
        } else {
            0.0
        }
    }

    /// Coefficients K_{00}..K_{0,2b−1} of the Jost function.
    pub fn f0_coeffs(&self) -> &[f64] {
        &self.k[0]
    }

    /// f_n(z) for |z| ≤ 1 (f_n = z^n beyond the support).
    pub fn eval_f(&self, n: usize, z: Complex64) -> Complex64 {
        if n <= self.support {
            horner_complex(&self.k[n], z)
        } else {
            z.powu(n as u32)
        }
    }

    pub fn f0(&self, z: Complex64) -> Complex64 {
        horner_complex(&self.k[0], z)
    }

    pub fn f0_real(&self, z: f64) -> f64 {
        crate::regular::horner(&self.k[0], z)
    }

    pub fn f1_real(&self, z: f64) -> f64 {
        if self.support == 0 {
            z
        } else {
            crate::regular::horner(&self.k[1], z)
        }
    }

    pub fn f0_derivative_real(&self, z: f64) -> f64 {
        let c = &self.k[0];
        let mut acc = 0.0;
        for (j, cj) in c.iter().enumerate().skip(1).rev() {
            acc = acc * z + j as f64 * cj;
        }
        acc
    }

    /// Scale 1 + Σ |K_{0m}| used for endpoint and zero tolerances.
    pub fn coefficient_scale(&self) -> f64 {
        1.0 + self.k[0].iter().map(|c| c.abs()).sum::<f64>()
    }

    /// |f_0(e^{iθ})|².
    pub fn f0_mod2_on_circle(&self, theta: f64) -> f64 {
        self.f0(Complex64::from_polar(1.0, theta)).norm_sqr()
    }
}

fn horner_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Jost-function table of a compactly supported potential.
pub fn jost_function(v: &Potential) -> JostData {
    JostData::from_potential(v)
}

/// f_{n_min}..f_{b+1} by backward value recursion from f_n = z^n,
/// n ≥ b. Valid for 0 < |z| ≤ 1; indexing of the result starts at n_min.
pub fn jost_solution(v: &Potential, z: Complex64, n_min: usize) -> Result<Vec<Complex64>> {
    if z.norm() == 0.0 {
        return Err(Error::Input("jost_solution: z = 0".into()));
    }
    if z.norm() > 1.0 + 1e-12 {
        return Err(Error::Input(format!("jost_solution: |z| = {} > 1", z.norm())));
    }
    let b = v.support();
    let top = b.max(n_min).max(1);
    let mut f = vec![Complex64::new(0.0, 0.0); top + 2];
    f[top] = z.powu(top as u32);
    f[top + 1] = z.powu(top as u32 + 1);
    let coef = z + z.inv();
    for n in (n_min.max(1)..=top).rev() {
        f[n - 1] = (coef + v.v(n)) * f[n] - f[n + 1];
    }
    Ok(f[n_min..].to_vec())
}

/// Real-z fast path: f_0..f_{b+1} at real z in (−1,0)∪(0,1).
pub fn jost_solution_real(v: &Potential, z: f64) -> Vec<f64> {
    let b = v.support().max(1);
    let mut f = vec![0.0; b + 2];
    f[b] = z.powi(b as i32);
    f[b + 1] = z.powi(b as i32 + 1);
    let coef = z + 1.0 / z;
    for n in (1..=b).rev() {
        f[n - 1] = (coef + v.v(n)) * f[n] - f[n + 1];
    }
    f
}

/// Residual of the representation of φ_n through the Jost pair,
/// |φ_n − (g_0 f_n − f_0 g_n)/(z − 1/z)| with g_n = conj(f_n) on the
/// unit circle. Rejects z = ±1 where the pair degenerates.
pub fn wronskian_identity_residual(v: &Potential, z: Complex64, n: usize) -> Result<f64> {
    if (z.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("z must lie on the unit circle, |z| = {}", z.norm())));
    }
    if (z - 1.0).norm() < 1e-9 || (z + 1.0).norm() < 1e-9 {
        return Err(Error::Input("wronskian identity degenerates at z = ±1".into()));
    }
    let f = jost_solution(v, z, 0)?;
    let g: Vec<Complex64> = f.iter().map(|x| x.conj()).collect();
    let fr = |k: usize| -> Complex64 {
        if k < f.len() {
            f[k]
        } else {
            z.powu(k as u32)
        }
    };
    let gr = |k: usize| -> Complex64 {
        if k < g.len() {
            g[k]
        } else {
            z.powu(k as u32).conj()
        }
    };
    let lambda = 2.0 - z - z.inv();
    debug_assert!(lambda.im.abs() < 1e-9);
    let phi = regular_solution(v, lambda.re, n);
    let rhs = (gr(0) * fr(n) - fr(0) * gr(n)) / (z - z.inv());
    Ok((Complex64::new(phi[n], 0.0) - rhs).norm())
}
