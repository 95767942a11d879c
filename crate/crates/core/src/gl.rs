//! The generic Gel'fand–Levitan transformation between two spectral
//! densities sharing the same continuous spectrum.
//!
//! The kernel G_{nm} = ∫ φ_n [dρ̃ − dρ] φ_m is built by band quadrature
//! plus atom sums; each row of the transformation matrix A solves
//! (I + G_{n−1}) a = −g_{n−1}, and the potential update reads
//! Ṽ_n − V_n = A_{(n+1)n} − A_{n(n−1)} with A_{10} = 0.

use crate::density::SpectralDensity;
use crate::error::{Error, Result};
use crate::jost::JostData;
use crate::linalg;
use crate::potential::Potential;
use crate::quadrature;
use crate::regular::regular_solution;
use crate::spectral::{bound_phi_table, endpoint_tolerance};

/// Dense symmetric cache of G_{nm} for 1 ≤ n, m ≤ size.
#[derive(Debug, Clone)]
pub struct GLKernel {
    size: usize,
    /// 1-based access through `entry`; row/col 0 unused.
    g: Vec<Vec<f64>>,
}

impl GLKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, n: usize, m: usize) -> f64 {
        self.g[n][m]
    }

    pub fn from_dense(g: Vec<Vec<f64>>) -> Self {
        let size = g.len().saturating_sub(1);
        Self { size, g }
    }
}

/// φ_1..φ_top of the unperturbed potential at an atom energy. Bound
/// states of the potential take the decaying Jost route; other atom
/// energies (the state being added) take the forward recursion.
fn atom_phi_row(v: &Potential, jd: &JostData, lambda: f64, z: f64, top: usize) -> Vec<f64> {
    let is_own_bound = jd.f0_real(z).abs() <= 1e3 * endpoint_tolerance(jd);
    if is_own_bound {
        bound_phi_table(v, z, top)
    } else {
        regular_solution(v, lambda, top)
    }
}

/// Builds the kernel between two densities over sites 1..=n_max+1,
/// doubling the band quadrature until the entries stabilize.
pub fn gl_kernel_from_densities(
    v: &Potential,
    rho: &SpectralDensity,
    rho_tilde: &SpectralDensity,
    n_max: usize,
) -> Result<GLKernel> {
    let top = n_max + 1;
    let jd = JostData::from_potential(v);

    let band = |nodes: usize| -> Vec<Vec<f64>> {
        let (x, w) = quadrature::gauss_legendre(nodes);
        let half = std::f64::consts::PI / 2.0;
        let mut g = vec![vec![0.0; top + 1]; top + 1];
        for i in 0..nodes {
            let theta = half * (x[i] + 1.0);
            let lambda = 2.0 - 2.0 * theta.cos();
            let dw = rho_tilde.theta_weight(theta) - rho.theta_weight(theta);
            let phi = regular_solution(v, lambda, top);
            let wq = w[i] * half * dw;
            for n in 1..=top {
                let base = wq * phi[n];
                for m in n..=top {
                    g[n][m] += base * phi[m];
                }
            }
        }
        g
    };

    let mut nodes = quadrature::QUADRATURE_START;
    let mut prev = band(nodes);
    let g_band = loop {
        if nodes >= quadrature::QUADRATURE_CAP {
            return Err(Error::NonConvergence {
                what: "Gel'fand-Levitan kernel quadrature",
                iterations: nodes,
            });
        }
        nodes *= 2;
        let cur = band(nodes);
        let mut converged = true;
        for n in 1..=top {
            for m in n..=top {
                let delta = (cur[n][m] - prev[n][m]).abs();
                if delta > 1e-13 * (1.0 + cur[n][m].abs()) {
                    converged = false;
                }
            }
        }
        if converged {
            break cur;
        }
        prev = cur;
    };

    let mut g = g_band;
    // Fixed accumulation order (atoms sorted by λ) keeps the kernel
    // reproducible bit for bit under any input ordering.
    for (atoms, sign) in [(&rho_tilde.atoms, 1.0), (&rho.atoms, -1.0)] {
        let mut atoms = atoms.clone();
        atoms.sort_by(|x, y| x.lambda.partial_cmp(&y.lambda).unwrap());
        for a in &atoms {
            let phi = atom_phi_row(v, &jd, a.lambda, a.z, top);
            for n in 1..=top {
                let base = sign * a.c2_gl * phi[n];
                for m in n..=top {
                    g[n][m] += base * phi[m];
                }
            }
        }
    }
    for n in 1..=top {
        for m in 1..n {
            g[n][m] = g[m][n];
        }
    }
    Ok(GLKernel { size: top, g })
}

/// Lower-triangular solution table A_{nm}, rows n = 2..=size; the row
/// for site n solves the (n−1)-dimensional system.
#[derive(Debug, Clone)]
pub struct GLSolution {
    /// `rows[n]` holds A_{n1}..A_{n(n−1)}; rows 0 and 1 are empty.
    rows: Vec<Vec<f64>>,
}

impl GLSolution {
    /// A_{nm} with the A_{10} = 0 convention; zero outside the table.
    pub fn a(&self, n: usize, m: usize) -> f64 {
        if n < self.rows.len() && m >= 1 && m < n {
            self.rows[n][m - 1]
        } else {
            0.0
        }
    }

    pub fn max_row(&self) -> usize {
        self.rows.len() - 1
    }
}

const DET_RATIO_LIMIT: usize = 8;

/// Solves the Gel'fand–Levitan system row by row with a dense
/// partial-pivot LU. Rows n ≤ 8 are re-derived through the
/// determinant-ratio form as an independent check.
pub fn solve_gl(kernel: &GLKernel, n_max: usize) -> Result<GLSolution> {
    let top = (n_max + 1).min(kernel.size());
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(), Vec::new()];
    for n in 2..=top {
        let dim = n - 1;
        let mut mat = linalg::zeros(dim);
        for k in 1..=dim {
            for l in 1..=dim {
                mat[k - 1][l - 1] = kernel.entry(k, l) + if k == l { 1.0 } else { 0.0 };
            }
        }
        let rhs: Vec<f64> = (1..=dim).map(|m| -kernel.entry(n, m)).collect();
        let factors = linalg::lu_factor(&mat)
            .ok_or(Error::SingularSystem { n, cond: f64::INFINITY })?;
        let cond = factors.pivot_ratio();
        if cond > 1e12 {
            return Err(Error::SingularSystem { n, cond });
        }
        let mut y = factors.solve(&rhs);
        // iterative refinement with compensated residuals recovers the
        // digits the rank-one-dominated kernels lose in the first solve
        for _ in 0..3 {
            let mut ext = Vec::with_capacity(dim + 1);
            for (k, row) in mat.iter().enumerate() {
                let mut both = row.clone();
                both.push(rhs[k]);
                ext.push(both);
            }
            let mut with_one = y.clone();
            with_one.push(-1.0);
            let resid: Vec<f64> = ext
                .iter()
                .map(|row| -linalg::dot_compensated(row, &with_one))
                .collect();
            let update = factors.solve(&resid);
            let mut biggest = 0.0f64;
            for (yk, uk) in y.iter_mut().zip(&update) {
                *yk += uk;
                biggest = biggest.max(uk.abs());
            }
            if biggest < 1e-15 {
                break;
            }
        }
        let a = y;
        // residual check against the system as assembled; the scale of
        // the solution normalizes the tolerance
        let mut worst = 0.0f64;
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        for (k, &r) in rhs.iter().enumerate() {
            let lhs: f64 = (0..dim).map(|l| mat[k][l] * a[l]).sum();
            worst = worst.max((lhs - r).abs());
        }
        let mat_scale = mat
            .iter()
            .flatten()
            .fold(1.0f64, |acc, x| acc.max(x.abs()));
        if worst > 1e-10 * (norm * mat_scale).max(1.0) {
            return Err(Error::Diagnostic(format!(
                "Gel'fand-Levitan row {n} residual {worst:.3e} exceeds tolerance"
            )));
        }
        if n <= DET_RATIO_LIMIT {
            let den = factors.determinant();
            for m in 1..=dim {
                let ratio = det_ratio_entry(kernel, n, m, den);
                let rel = (ratio - a[m - 1]).abs() / a[m - 1].abs().max(1e-12);
                if rel > 1e-8 {
                    return Err(Error::Diagnostic(format!(
                        "determinant-ratio mismatch at A_{{{n}{m}}}: {ratio} vs {}",
                        a[m - 1]
                    )));
                }
            }
        }
        rows.push(a);
    }
    Ok(GLSolution { rows })
}

/// A_{nm} as the ratio of the bordered determinant to det(I+G_{n−1}).
fn det_ratio_entry(kernel: &GLKernel, n: usize, m: usize, den: f64) -> f64 {
    let dim = n - 1;
    let mut block = linalg::zeros(dim + 1);
    // top-left 0, top row the m-th unit vector, left column g_{n−1}
    for j in 1..=dim {
        block[0][j] = if j == m { 1.0 } else { 0.0 };
        block[j][0] = kernel.entry(n, j);
        for l in 1..=dim {
            block[j][l] = kernel.entry(j, l) + if j == l { 1.0 } else { 0.0 };
        }
    }
    linalg::determinant(&block) / den
}

/// Transformed potential and regular solution from a solved system.
pub fn gl_transform(v: &Potential, sol: &GLSolution, n_max: usize) -> (Vec<f64>, PhiTransform) {
    let mut v_tilde = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        v_tilde.push(v.v(n) + sol.a(n + 1, n) - sol.a(n, n - 1));
    }
    (v_tilde, PhiTransform { base: v.clone(), sol: sol.clone() })
}

/// Evaluation rule φ̃_n = φ_n + Σ_{m<n} A_{nm} φ_m.
#[derive(Debug, Clone)]
pub struct PhiTransform {
    base: Potential,
    sol: GLSolution,
}

impl PhiTransform {
    pub fn eval(&self, lambda: f64, n_max: usize) -> Vec<f64> {
        let phi = regular_solution(&self.base, lambda, n_max);
        self.eval_from_phi(&phi, n_max)
    }

    /// Same rule applied to a caller-supplied φ table (for bound-state
    /// energies where the stable Jost route must feed the sum).
    pub fn eval_from_phi(&self, phi: &[f64], n_max: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(0.0);
        for n in 1..=n_max {
            let mut val = phi[n];
            for m in 1..n {
                val += self.sol.a(n, m) * phi[m];
            }
            out.push(val);
        }
        out
    }
}
