//! Closed-form Darboux transformations: add or remove one bound state
//! without touching the continuous spectrum.
//!
//! Both directions reduce to the same workspace. With the per-site
//! state vectors ξ_n (entries φ_n(λ_s)) and a fixed diagonal matrix D
//! built from the norming constants, the site matrix is
//! W_n = D + Σ_{j<n} ξ_j ξ_jᵀ and
//!
//!     Ṽ_n − V_n = ξ_nᵀ W_n⁻¹ ξ_{n−1} − ξ_{n+1}ᵀ W_{n+1}⁻¹ ξ_n,
//!
//! with the first term dropped at n = 1. Adding makes W_n positive
//! definite; removing makes it negative definite with a margin that
//! shrinks geometrically in n, so the removal path assembles W_n from
//! the tail side, W_n = W_∞ − Σ_{j≥n} ξ_j ξ_jᵀ, where eigenvector
//! orthogonality collapses W_∞ to a diagonal with an exact zero in the
//! removed slot. That representation keeps the deep-site potential
//! values at full precision.
//!
//! The transformed regular solution at a list energy λ_t collapses to
//! φ̃_n(λ_t) = D_t (W_n⁻¹ ξ_n)_t, the stable route for composing
//! transforms.

use num_complex::Complex64;

use crate::density::{Atom, JostEval, SpectralDensity};
use crate::error::{Error, Result};
use crate::jost::JostData;
use crate::linalg::{self, Mat};
use crate::param::{bound_z_of_lambda, is_bound_energy, lambda_of_bound_z};
use crate::potential::Potential;
use crate::regular::{regular_solution, regular_solution_with_derivative};
use crate::spectral::{self, bound_phi_table, BoundState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Add { lambda: f64, c2: f64 },
    Remove { lambda: f64, c2: f64 },
}

/// Intended bound-state datum carried through a transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSpec {
    pub lambda: f64,
    pub z: f64,
    pub c2_gl: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Diagnostics {
    /// Smallest signed definiteness margin over the site matrices
    /// (positive when the required definiteness held strictly). The
    /// removal margin decays like z^{2n} by nature; it is reported,
    /// not gated, beyond the sign check.
    pub definiteness_margin: f64,
    /// Max relative deviation of the divided-difference closed form of
    /// the accumulator from the direct sum.
    pub accumulator_residual: f64,
    /// Max relative violation of |f̃_0|² z_p^{±2} = |f_0|² on the circle.
    pub blaschke_residual: f64,
    pub compact: bool,
}

/// Everything a transform needs to know about its starting point.
/// Compact potentials get this from the forward pipeline; transform
/// results carry their own tables for composition.
#[derive(Debug, Clone)]
pub struct DarbouxInput {
    /// V_n for n = 1..; sites beyond the vector are zero.
    pub v: Vec<f64>,
    pub bounds: Vec<BoundSpec>,
    /// phi[s][n] = φ_n(λ_s) for each bound state, n = 0..=n_max+2.
    pub phi: Vec<Vec<f64>>,
    pub jost: JostEval,
    /// Continuous prefactor of the spectral density of `v`.
    pub density_scale: f64,
}

impl DarbouxInput {
    fn c2_sum(&self) -> f64 {
        self.bounds.iter().map(|b| b.c2_gl).sum()
    }

    /// Builds the input tables from a compactly supported potential.
    pub fn from_compact(v: &Potential, n_max: usize) -> Result<Self> {
        let jd = JostData::from_potential(v);
        let scan = spectral::find_bound_states(&jd)?;
        let mut bounds = Vec::new();
        let mut phi = Vec::new();
        for &z in &scan.zeros {
            let c2 = spectral::gl_norming_constant(v, z)?;
            bounds.push(BoundSpec { lambda: lambda_of_bound_z(z), z, c2_gl: c2 });
            phi.push(bound_phi_table(v, z, n_max + 2));
        }
        let mut vv = vec![0.0; n_max.max(v.support())];
        for n in 1..=vv.len() {
            vv[n - 1] = v.v(n);
        }
        Ok(Self { v: vv, bounds, phi, jost: JostEval::from_jost(&jd), density_scale: 1.0 })
    }
}

#[derive(Debug, Clone)]
pub struct DarbouxResult {
    pub mode: Mode,
    pub n_max: usize,
    /// Unperturbed potential over the window.
    pub v_base: Vec<f64>,
    /// Transformed potential values Ṽ_1..Ṽ_{n_max}.
    pub v_tilde: Vec<f64>,
    /// Intended bound states of Ṽ, in list order.
    pub bounds_tilde: Vec<BoundSpec>,
    /// Residue-route Marchenko constants of the intended states.
    pub c2_marchenko_tilde: Vec<f64>,
    pub jost_tilde: JostEval,
    pub density_tilde: SpectralDensity,
    /// φ̃_n(λ_t) tables for the intended states, n = 0..=n_max+2.
    pub phi_bound_table: Vec<Vec<f64>>,
    /// Squared norms h̃_n = ∫ φ̃_n² dρ̃ of the transformed family in its
    /// own measure. All ones exactly when the transformed measure is
    /// realized by a potential; the deviation from one measures how far
    /// a generic prescription leaves the discrete Schrödinger class.
    pub h_norms: Vec<f64>,
    pub diagnostics: Diagnostics,
    phi_rule: Option<PhiTildeRule>,
}

impl DarbouxResult {
    /// Removes the last-listed bound state of this result (the one a
    /// preceding `add` appended), returning the composed transform.
    ///
    /// The inverse runs through the norm-corrected Gel'fand–Levitan
    /// system Σ_j Â_nj (G'_jm + h̃_m δ_jm) = −G'_nm, which reduces to
    /// the plain system when h̃ ≡ 1 and inverts the preceding step
    /// exactly otherwise.
    pub fn remove_last(&self, n_max: usize) -> Result<DarbouxResult> {
        remove_last_composed(self, n_max)
    }

    /// Generic-λ evaluation of φ̃ (available on transforms started from
    /// a compact potential).
    pub fn phi_tilde(&self, lambda: f64, n_max: usize) -> Option<Vec<f64>> {
        self.phi_rule.as_ref().map(|r| r.eval(lambda, n_max))
    }

    pub fn phi_rule(&self) -> Option<&PhiTildeRule> {
        self.phi_rule.as_ref()
    }
}

/// Norm-corrected inverse transform on a preceding result.
fn remove_last_composed(r: &DarbouxResult, n_max: usize) -> Result<DarbouxResult> {
    if n_max > r.n_max {
        return Err(Error::Input(format!(
            "composition window {n_max} exceeds the stored window {}",
            r.n_max
        )));
    }
    let kk = r.bounds_tilde.len();
    if kk == 0 {
        return Err(Error::Precondition("no bound state to remove".into()));
    }
    let removed = r.bounds_tilde[kk - 1];
    let c_rm = removed.c2_gl;
    let t1 = 1.0 - r.bounds_tilde.iter().map(|b| b.c2_gl).sum::<f64>();
    if t1 <= 0.0 {
        return Err(Error::Precondition("norming mass must stay below 1".into()));
    }
    let top = n_max + 2;
    let phi = &r.phi_bound_table;
    let h = &r.h_norms;
    let ratio = c_rm / t1;

    // The norm-corrected system Σ_j Â_nj (G'_jm + h̃_m δ_jm) = −G'_nm is
    // separable over the list states: its matrix is
    // (1+ratio) diag(h̃) − Φᵀ diag(κ) Φ with κ_s = ratio C_s (and
    // κ_K = C_K T0/T1 for the removed slot). Woodbury collapses each
    // row to the K×K capacitance C_n = K⁻¹ − M_{n−1} with
    // M_{n−1} = Σ_{m<n} φ̃_m φ̃_mᵀ/B_m. The surviving slots converge to
    // O(1) limits, so their forward partial sums are benign; the
    // removed slot converges to zero by completeness and is assembled
    // from its tail instead, anchored deep in the padded tables.
    let z_rm = removed.z;
    let b_weight = |m: usize| (1.0 + ratio) * h[m];
    let anchor = phi[0].len() - 1;
    // Entries of the capacitance touching the removed slot converge to
    // zero by completeness; their forward partial sums would drown in
    // the epsilon floor of the O(1) early terms, so every K-involving
    // entry is accumulated backward from a geometric closure at the
    // padded anchor. tail_k[n][s] = Σ_{m≥n} φ̃_s φ̃_K/B_m.
    let mut tail_k: Vec<Vec<f64>> = vec![vec![0.0; kk]; anchor + 2];
    let zs: Vec<f64> = r.bounds_tilde.iter().map(|b| b.z).collect();
    for s in 0..kk {
        let zz = zs[s] * z_rm;
        tail_k[anchor + 1][s] =
            phi[s][anchor] * phi[kk - 1][anchor] * zz / ((1.0 - zz) * b_weight(anchor));
    }
    for n in (1..=anchor).rev() {
        let bw = b_weight(n);
        for s in 0..kk {
            tail_k[n][s] = tail_k[n + 1][s] + phi[s][n] * phi[kk - 1][n] / bw;
        }
    }
    // the surviving block converges to O(1) limits; forward sums are benign
    let mut inv_kappa = vec![0.0; kk];
    for (s, b) in r.bounds_tilde.iter().enumerate().take(kk - 1) {
        inv_kappa[s] = t1 / (c_rm * b.c2_gl);
    }

    let phivec = |n: usize| -> Vec<f64> { (0..kk).map(|s| phi[s][n]).collect() };
    let mut partial = linalg::zeros(kk); // M_{n−1} over the surviving block
    let mut y_rows: Vec<Vec<f64>> = vec![Vec::new()];
    let mut partials: Vec<Mat> = vec![partial.clone()];
    let mut cond_margin = f64::INFINITY;
    for n in 1..=top {
        let mut c_n = linalg::zeros(kk);
        for s in 0..kk - 1 {
            for t in 0..kk - 1 {
                c_n[s][t] = -partial[s][t];
            }
            c_n[s][s] += inv_kappa[s];
        }
        for s in 0..kk {
            c_n[s][kk - 1] = tail_k[n][s];
            c_n[kk - 1][s] = tail_k[n][s];
        }
        let f = linalg::lu_factor(&c_n)
            .ok_or(Error::SingularSystem { n, cond: f64::INFINITY })?;
        cond_margin = cond_margin.min(1.0 / f.pivot_ratio().max(1.0));
        y_rows.push(f.solve(&phivec(n)));
        let pv = phivec(n);
        let bw = b_weight(n);
        for s in 0..kk - 1 {
            for t in 0..kk - 1 {
                partial[s][t] += pv[s] * pv[t] / bw;
            }
        }
        partials.push(partial.clone());
    }
    // Â_nm = w_mᵀ y_n with w_m = φ̃vec(m)/B_m
    let a = |n: usize, m: usize| -> f64 {
        if n < y_rows.len() && m >= 1 && m < n {
            linalg::dot(&phivec(m), &y_rows[n]) / b_weight(m)
        } else {
            0.0
        }
    };

    let mut v_hat = vec![0.0; n_max];
    for n in 1..=n_max {
        v_hat[n - 1] = v_at(&r.v_tilde, n) + a(n + 1, n) - a(n, n - 1);
    }

    // φ̂ tables for the surviving states:
    // φ̂_n(λ_t) = φ̃_n(λ_t) + (M_{n−1} y_n)_t, with the K column of
    // M_{n−1} expressed through the backward tail (M_∞ cross terms
    // vanish by orthogonality)
    let mut phi_hat = vec![vec![0.0; top + 1]; kk.saturating_sub(1)];
    let mut h_hat = vec![1.0; top + 1];
    for n in 1..=top {
        let y = &y_rows[n];
        for t in 0..kk - 1 {
            let mut val = phi[t][n] - tail_k[n][t] * y[kk - 1];
            for s in 0..kk - 1 {
                val += partials[n - 1][t][s] * y[s];
            }
            phi_hat[t][n] = val;
        }
        h_hat[n] = (1.0 + ratio) * h[n] - linalg::dot(&phivec(n), y);
    }

    let bounds_hat: Vec<BoundSpec> = r.bounds_tilde[..kk - 1].to_vec();
    let jost_hat = r.jost_tilde.with_factor(removed.z, -1);
    let t0 = t1 + c_rm;
    let scale_hat =
        r.density_tilde.continuous_scale * t0 * removed.z * removed.z / t1;
    let blaschke_residual = blaschke_check(&r.jost_tilde, &jost_hat, removed.z, -1)?;
    let atoms: Vec<Atom> = bounds_hat
        .iter()
        .map(|b| Atom { lambda: b.lambda, z: b.z, c2_gl: b.c2_gl })
        .collect();
    let density_hat = SpectralDensity::assemble(jost_hat.clone(), atoms, scale_hat)?;
    let c2_marchenko: Vec<f64> = bounds_hat
        .iter()
        .map(|b| residue_norming(&jost_hat, b.z))
        .collect();
    let tail_start = n_max - n_max / 4;
    let compact = v_hat[tail_start..].iter().all(|v| v.abs() < 1e-9);

    Ok(DarbouxResult {
        mode: Mode::Remove { lambda: removed.lambda, c2: c_rm },
        n_max,
        v_base: r.v_tilde[..n_max.min(r.v_tilde.len())].to_vec(),
        v_tilde: v_hat,
        bounds_tilde: bounds_hat,
        c2_marchenko_tilde: c2_marchenko,
        jost_tilde: jost_hat,
        density_tilde: density_hat,
        phi_bound_table: phi_hat,
        h_norms: h_hat,
        diagnostics: Diagnostics {
            // conditioning margin of the dense solves; the workspace
            // definiteness notion does not apply on this path
            definiteness_margin: cond_margin,
            accumulator_residual: 0.0,
            blaschke_residual,
            compact,
        },
        phi_rule: None,
    })
}

fn residue_norming(jost: &JostEval, z_s: f64) -> f64 {
    let z = Complex64::new(z_s, 0.0);
    let num = jost.eval(Complex64::new(1.0 / z_s, 0.0)).re;
    let den = z_s * jost.derivative(z).re;
    num / den
}

fn blaschke_check(
    base: &JostEval,
    transformed: &JostEval,
    z_p: f64,
    direction: i8,
) -> Result<f64> {
    let mut worst = 0.0f64;
    let pow = if direction > 0 { z_p * z_p } else { 1.0 / (z_p * z_p) };
    for i in 0..64 {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / 64.0;
        let z = Complex64::from_polar(1.0, theta);
        let old2 = base.eval(z).norm_sqr();
        let new2 = transformed.eval(z).norm_sqr();
        worst = worst.max((new2 * pow - old2).abs() / old2.max(1e-300));
    }
    if worst > 1e-10 {
        return Err(Error::Diagnostic(format!(
            "|f_0|² update violated on the circle (residual {worst:.3e})"
        )));
    }
    Ok(worst)
}

/// Extra sites computed beyond the requested window. Composition
/// anchors its geometric closures at the end of the stored tables, so
/// the padding sets how far the closure error sits below the window.
const TABLE_PAD: usize = 34;

/// Adds a bound state at λ_new with Gel'fand–Levitan norming constant
/// C²_new to a compactly supported potential.
pub fn add_bound_state(
    v: &Potential,
    lambda_new: f64,
    c2_new: f64,
    n_max: usize,
) -> Result<DarbouxResult> {
    let input = DarbouxInput::from_compact(v, n_max + TABLE_PAD)?;
    add_bound_state_core(&input, lambda_new, c2_new, n_max)
}

/// Removes the `index`-th bound state (ascending-z order) of a
/// compactly supported potential. Internally the list is reordered so
/// that the removed state sits last.
pub fn remove_bound_state(v: &Potential, index: usize, n_max: usize) -> Result<DarbouxResult> {
    let mut input = DarbouxInput::from_compact(v, n_max)?;
    let n = input.bounds.len();
    if n == 0 {
        return Err(Error::Precondition("no bound state to remove".into()));
    }
    if index >= n {
        return Err(Error::Input(format!("bound-state index {index} out of range (N = {n})")));
    }
    input.bounds.swap(index, n - 1);
    input.phi.swap(index, n - 1);
    remove_last_core(&input, n_max)
}

/// Core of the addition transform; the φ table of the new state is
/// produced by forward recursion (the new energy is not a bound state
/// of the unperturbed problem, so the recursion tracks the dominant
/// branch there).
pub fn add_bound_state_core(
    input: &DarbouxInput,
    lambda_new: f64,
    c2_new: f64,
    n_max: usize,
) -> Result<DarbouxResult> {
    if !is_bound_energy(lambda_new) {
        return Err(Error::Precondition(format!(
            "new bound state energy {lambda_new} must lie outside [0,4]"
        )));
    }
    if c2_new <= 0.0 {
        return Err(Error::Precondition("norming constant must be positive".into()));
    }
    let t1 = 1.0 - input.c2_sum();
    let t2 = t1 - c2_new;
    if t2 <= 0.0 {
        return Err(Error::Precondition(format!(
            "total norming mass {} must stay below 1",
            input.c2_sum() + c2_new
        )));
    }
    let z_new = bound_z_of_lambda(lambda_new)?;
    for b in &input.bounds {
        if (b.z - z_new).abs() < 1e-10 {
            return Err(Error::Precondition(format!(
                "a bound state already sits at z = {z_new}"
            )));
        }
    }

    // diag(τ E_N^{-1}): entries T2/(C_s² C_new²), last T2/(T1 C_new²)
    let mut d = Vec::with_capacity(input.bounds.len() + 1);
    for b in &input.bounds {
        d.push(t2 / (b.c2_gl * c2_new));
    }
    d.push(t2 / (t1 * c2_new));

    // the engine runs over the padded window the input tables cover
    let n_eng = match input.phi.first() {
        Some(row) => (row.len() - 3).max(n_max),
        None => n_max + TABLE_PAD,
    };
    let base_pot = potential_from_values(&input.v);
    let phi_new = regular_solution(&base_pot, lambda_new, n_eng + 2);
    let mut phi_tables: Vec<Vec<f64>> = input.phi.clone();
    phi_tables.push(phi_new);
    let lambdas: Vec<f64> = input
        .bounds
        .iter()
        .map(|b| b.lambda)
        .chain(std::iter::once(lambda_new))
        .collect();

    let engine = run_engine(
        &input.v,
        &phi_tables,
        &lambdas,
        &d,
        SiteMatrices::Forward,
        n_eng,
    )?;

    let h_norms = h_from_dets(&engine.dets, t2 / t1, n_eng);

    let mut bounds_tilde = input.bounds.clone();
    bounds_tilde.push(BoundSpec { lambda: lambda_new, z: z_new, c2_gl: c2_new });
    let jost_tilde = input.jost.with_factor(z_new, 1);
    let scale_tilde = input.density_scale * t2 / (t1 * z_new * z_new);

    finish(FinishArgs {
        input,
        mode: Mode::Add { lambda: lambda_new, c2: c2_new },
        n_max,
        engine,
        bounds_tilde,
        jost_tilde,
        scale_tilde,
        z_p: z_new,
        direction: 1,
        phi_tables,
        lambdas,
        h_norms,
    })
}

/// Squared norms of the transformed family in its own measure, through
/// the determinant identity h̃_n = pref · det W_{n+1}/det W_n, where
/// pref is T2/T1 for the addition and T0/T1 for the removal. Ratios of
/// consecutive determinants are cancellation-free.
fn h_from_dets(dets: &[f64], pref: f64, n_max: usize) -> Vec<f64> {
    let top = n_max + 2;
    let mut h = vec![1.0; top + 1];
    for n in 1..=top {
        h[n] = pref * dets[n + 1] / dets[n];
    }
    h
}

/// Core of the removal transform: drops the last-listed bound state.
pub fn remove_last_core(input: &DarbouxInput, n_max: usize) -> Result<DarbouxResult> {
    let n_states = input.bounds.len();
    if n_states == 0 {
        return Err(Error::Precondition("no bound state to remove".into()));
    }
    let t1 = 1.0 - input.c2_sum();
    if t1 <= 0.0 {
        return Err(Error::Precondition("norming mass must stay below 1".into()));
    }
    let removed = input.bounds[n_states - 1];
    let lambdas: Vec<f64> = input.bounds.iter().map(|b| b.lambda).collect();
    let zs: Vec<f64> = input.bounds.iter().map(|b| b.z).collect();

    // Tail-side representation of the site matrices. The total
    // accumulator Σ_{j≥1} θ_j θ_jᵀ is diagonal by eigenvector
    // orthogonality, with entries 1/C_s²; building W_n = W_∞ − T_n
    // from the tail keeps the geometrically small removal margins at
    // full relative precision.
    let anchor = input.phi[0].len() - 1;
    let k = n_states;
    let mut tails: Vec<Mat> = vec![linalg::zeros(k); anchor + 2];
    let mut closure = linalg::zeros(k);
    for p in 0..k {
        for q in 0..k {
            let zz = zs[p] * zs[q];
            closure[p][q] = input.phi[p][anchor] * input.phi[q][anchor] * zz / (1.0 - zz);
        }
    }
    tails[anchor + 1] = closure;
    for n in (1..=anchor).rev() {
        let mut t = tails[n + 1].clone();
        for p in 0..k {
            for q in 0..k {
                t[p][q] += input.phi[p][n] * input.phi[q][n];
            }
        }
        tails[n] = t;
    }
    let s_total_diag: Vec<f64> = (0..k).map(|s| tails[1][s][s]).collect();
    let s_nn = s_total_diag[k - 1];
    let t0_eff = t1 + 1.0 / s_nn;
    let mut d_eff = Vec::with_capacity(k);
    let mut w_inf = Vec::with_capacity(k);
    for s in 0..k - 1 {
        d_eff.push(-t0_eff * s_total_diag[s] * s_nn);
        w_inf.push(-t1 * s_total_diag[s] * s_nn);
    }
    d_eff.push(-s_nn);
    w_inf.push(0.0);

    let engine = run_engine(
        &input.v,
        &input.phi,
        &lambdas,
        &d_eff,
        SiteMatrices::Tail { w_inf, tails },
        n_max,
    )?;

    let t0 = t1 + removed.c2_gl;
    let h_norms = h_from_dets(&engine.dets, t0 / t1, n_max);

    let bounds_tilde: Vec<BoundSpec> = input.bounds[..n_states - 1].to_vec();
    let jost_tilde = input.jost.with_factor(removed.z, -1);
    let scale_tilde = input.density_scale * t0 * removed.z * removed.z / t1;

    finish(FinishArgs {
        input,
        mode: Mode::Remove { lambda: removed.lambda, c2: removed.c2_gl },
        n_max,
        engine,
        bounds_tilde,
        jost_tilde,
        scale_tilde,
        z_p: removed.z,
        direction: -1,
        phi_tables: input.phi.clone(),
        lambdas,
        h_norms,
    })
}

enum SiteMatrices {
    /// W_n = D + Σ_{j<n} ξ_j ξ_jᵀ, accumulated forward (addition).
    Forward,
    /// W_n = diag(w_inf) − T_n with T_n = Σ_{j≥n} θ_j θ_jᵀ (removal).
    Tail { w_inf: Vec<f64>, tails: Vec<Mat> },
}

struct EngineOutput {
    v_tilde: Vec<f64>,
    /// beta[n] for n = 2..=n_max+2 (first two entries empty).
    beta: Vec<Vec<f64>>,
    /// phi_tilde_at_list[n][t] = D_t (W_n⁻¹ ξ_n)_t, n = 0..=n_max+2.
    phi_tilde_at_list: Vec<Vec<f64>>,
    /// det W_n for n = 1..=n_max+3 (index 0 unused); the norm ratios
    /// h̃_n come out of consecutive determinants.
    dets: Vec<f64>,
    definiteness_margin: f64,
    accumulator_residual: f64,
}

/// Shared site loop of both transforms. One factorization per site:
/// u_n = W_n⁻¹ ξ_n gives the coupling a(n) = ξ_{n−1}ᵀ u_n, the row
/// vector β_n = −u_n, and the transformed values at the list energies.
fn run_engine(
    v: &[f64],
    phi: &[Vec<f64>],
    lambdas: &[f64],
    d_eff: &[f64],
    matrices: SiteMatrices,
    n_max: usize,
) -> Result<EngineOutput> {
    let k = d_eff.len();
    let required_sign = if matches!(matrices, SiteMatrices::Forward) { 1.0 } else { -1.0 };
    let base_pot = potential_from_values(v);
    let xi = |n: usize| -> Vec<f64> { phi.iter().map(|row| row[n]).collect::<Vec<f64>>() };

    // λ-derivative tables for the closed-form accumulator check
    let mut dphi: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (s, lam) in lambdas.iter().enumerate() {
        let (_, dp) =
            regular_solution_with_derivative(&base_pot, *lam, n_max + 2, Some(&phi[s]));
        dphi.push(dp);
    }

    let mut accum = linalg::zeros(k);
    let mut margin = f64::INFINITY;
    let mut acc_residual = 0.0f64;
    let mut couplings = vec![0.0; n_max + 3]; // a(n) = ξ_{n−1}ᵀ W_n⁻¹ ξ_n, a(1) = 0
    let mut beta: Vec<Vec<f64>> = vec![Vec::new(), Vec::new()];
    let mut phi_tilde_at_list: Vec<Vec<f64>> = vec![vec![0.0; k]];
    let mut dets = vec![0.0; n_max + 4];

    for n in 1..=n_max + 2 {
        let w = match &matrices {
            SiteMatrices::Forward => {
                let mut w = accum.clone();
                for t in 0..k {
                    w[t][t] += d_eff[t];
                }
                w
            }
            SiteMatrices::Tail { w_inf, tails } => {
                let mut w = tails[n].clone();
                for p in 0..k {
                    for q in 0..k {
                        w[p][q] = -w[p][q];
                    }
                }
                for t in 0..k {
                    w[t][t] += w_inf[t];
                }
                w
            }
        };

        let eig = linalg::sym_eigenvalues(&w);
        let site_margin = if required_sign > 0.0 {
            // the eigenvalue estimate drowns in rounding once the
            // accumulator dwarfs D; min diag(D) is a rigorous floor
            let floor = d_eff.iter().copied().fold(f64::INFINITY, f64::min);
            eig[0].max(floor)
        } else {
            -eig[k - 1]
        };
        let w_norm: f64 = (0..k).map(|t| d_eff[t].abs()).fold(0.0, f64::max);
        if required_sign > 0.0 {
            // addition: the margin is bounded below by min diag(D)
            if site_margin < 1e-12 {
                return Err(Error::Diagnostic(format!(
                    "definiteness margin {site_margin:.3e} lost at site {n}"
                )));
            }
        } else if site_margin < -1e-10 * w_norm.max(1.0) {
            // removal: margins decay geometrically; only a genuine sign
            // flip beyond rounding noise is an error
            return Err(Error::Diagnostic(format!(
                "removal workspace lost negative definiteness at site {n} ({site_margin:.3e})"
            )));
        }
        margin = margin.min(site_margin);

        if n >= 2 && n <= n_max + 1 {
            let sigma_below = match &matrices {
                SiteMatrices::Forward => accum.clone(),
                SiteMatrices::Tail { tails, .. } => {
                    let mut s = tails[1].clone();
                    for p in 0..k {
                        for q in 0..k {
                            s[p][q] -= tails[n][p][q];
                        }
                    }
                    s
                }
            };
            let closed = accumulate_closed_form(phi, &dphi, lambdas, n)?;
            for p in 0..k {
                for q in 0..k {
                    let denom = sigma_below[p][q].abs().max(1.0);
                    acc_residual =
                        acc_residual.max((closed[p][q] - sigma_below[p][q]).abs() / denom);
                }
            }
        }

        let xin = xi(n);
        let (u, det) = match &matrices {
            // The growing (last) column makes W badly scaled at deep
            // sites; eliminating it against the bounded old-state block
            // keeps every component of the solution at full relative
            // precision.
            SiteMatrices::Forward => solve_schur_last(&w, &xin)
                .ok_or_else(|| Error::Diagnostic(format!("site matrix singular at site {n}")))?,
            SiteMatrices::Tail { .. } => {
                let factors = linalg::lu_factor(&w).ok_or_else(|| {
                    Error::Diagnostic(format!("site matrix singular at site {n}"))
                })?;
                (factors.solve(&xin), factors.determinant())
            }
        };
        dets[n] = det;
        couplings[n] = if n >= 2 { linalg::dot(&xi(n - 1), &u) } else { 0.0 };
        phi_tilde_at_list.push((0..k).map(|t| d_eff[t] * u[t]).collect());
        if n >= 2 {
            beta.push(u.iter().map(|x| -x).collect());
        }

        if let SiteMatrices::Forward = &matrices {
            for p in 0..k {
                for q in 0..k {
                    accum[p][q] += xin[p] * xin[q];
                }
            }
        }
    }

    // one further determinant so the norm ratio reaches site n_max+2
    dets[n_max + 3] = match &matrices {
        SiteMatrices::Forward => {
            let mut w = accum.clone();
            for t in 0..k {
                w[t][t] += d_eff[t];
            }
            linalg::lu_factor(&w).map(|f| f.determinant()).unwrap_or(0.0)
        }
        SiteMatrices::Tail { w_inf, tails } => {
            let n = n_max + 3;
            let mut w = tails[n].clone();
            for p in 0..k {
                for q in 0..k {
                    w[p][q] = -w[p][q];
                }
            }
            for t in 0..k {
                w[t][t] += w_inf[t];
            }
            linalg::lu_factor(&w).map(|f| f.determinant()).unwrap_or(0.0)
        }
    };

    let mut v_tilde = vec![0.0; n_max];
    for n in 1..=n_max {
        v_tilde[n - 1] = v_at(v, n) + couplings[n] - couplings[n + 1];
    }

    Ok(EngineOutput {
        v_tilde,
        beta,
        phi_tilde_at_list,
        dets,
        definiteness_margin: margin,
        accumulator_residual: acc_residual,
    })
}

struct FinishArgs<'a> {
    input: &'a DarbouxInput,
    mode: Mode,
    n_max: usize,
    engine: EngineOutput,
    bounds_tilde: Vec<BoundSpec>,
    jost_tilde: JostEval,
    scale_tilde: f64,
    z_p: f64,
    direction: i8,
    phi_tables: Vec<Vec<f64>>,
    lambdas: Vec<f64>,
    h_norms: Vec<f64>,
}

fn finish(args: FinishArgs<'_>) -> Result<DarbouxResult> {
    let FinishArgs {
        input,
        mode,
        n_max,
        engine,
        bounds_tilde,
        jost_tilde,
        scale_tilde,
        z_p,
        direction,
        phi_tables,
        lambdas,
        h_norms,
    } = args;

    // |f̃_0(z)|² z_p^{∓2} must reproduce |f_0(z)|² on the circle.
    let blaschke_residual = blaschke_check(&input.jost, &jost_tilde, z_p, direction)?;

    let atoms: Vec<Atom> = bounds_tilde
        .iter()
        .map(|b| Atom { lambda: b.lambda, z: b.z, c2_gl: b.c2_gl })
        .collect();
    let density_tilde = SpectralDensity::assemble(jost_tilde.clone(), atoms, scale_tilde)?;

    // Marchenko constants of the intended states from the residue of
    // S̃/z; f̃_0 stays meromorphic because the factors are rational.
    let c2_marchenko_tilde: Vec<f64> =
        bounds_tilde.iter().map(|b| residue_norming(&jost_tilde, b.z)).collect();

    // Intended-state φ̃ tables: every remaining state is one of the
    // list energies, where φ̃_n(λ_t) = D_t (W_n⁻¹ξ_n)_t was collected.
    let keep: Vec<usize> = match mode {
        Mode::Add { .. } => (0..lambdas.len()).collect(),
        Mode::Remove { .. } => (0..lambdas.len() - 1).collect(),
    };
    let mut phi_bound_table = Vec::with_capacity(keep.len());
    for &t in &keep {
        let mut row = Vec::with_capacity(engine.phi_tilde_at_list.len());
        for n in 0..engine.phi_tilde_at_list.len() {
            row.push(engine.phi_tilde_at_list[n][t]);
        }
        phi_bound_table.push(row);
    }

    let mut v_tilde = engine.v_tilde;
    v_tilde.truncate(n_max);
    let tail_start = n_max - n_max / 4;
    let compact = v_tilde[tail_start..].iter().all(|v| v.abs() < 1e-9);

    let phi_rule = Some(PhiTildeRule {
        v_base: potential_from_values(&input.v),
        lambdas,
        beta: engine.beta,
        phi: phi_tables,
    });

    let mut v_base = input.v.clone();
    v_base.truncate(n_max.max(v_base.iter().rposition(|x| *x != 0.0).map_or(0, |p| p + 1)));

    Ok(DarbouxResult {
        mode,
        n_max,
        v_base,
        v_tilde,
        bounds_tilde,
        c2_marchenko_tilde,
        jost_tilde,
        density_tilde,
        phi_bound_table,
        h_norms,
        diagnostics: Diagnostics {
            definiteness_margin: engine.definiteness_margin,
            accumulator_residual: engine.accumulator_residual,
            blaschke_residual,
            compact,
        },
        phi_rule,
    })
}

/// Solves W u = r by eliminating the last coordinate through its Schur
/// complement against the leading block; also returns det W. `None` on
/// a singular leading block or complement.
fn solve_schur_last(w: &Mat, r: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = w.len();
    if k == 1 {
        if w[0][0] == 0.0 {
            return None;
        }
        return Some((vec![r[0] / w[0][0]], w[0][0]));
    }
    let m = k - 1;
    let block: Mat = (0..m).map(|i| w[i][..m].to_vec()).collect();
    let factors = linalg::lu_factor(&block)?;
    let b: Vec<f64> = (0..m).map(|i| w[i][k - 1]).collect();
    let a_inv_b = factors.solve(&b);
    let a_inv_r = factors.solve(&r[..m]);
    let schur = w[k - 1][k - 1] - linalg::dot(&b, &a_inv_b);
    if schur == 0.0 {
        return None;
    }
    let u_last = (r[k - 1] - linalg::dot(&b, &a_inv_r)) / schur;
    let mut u: Vec<f64> = (0..m).map(|i| a_inv_r[i] - a_inv_b[i] * u_last).collect();
    u.push(u_last);
    Some((u, factors.determinant() * schur))
}

fn v_at(v: &[f64], n: usize) -> f64 {
    if n >= 1 && n <= v.len() {
        v[n - 1]
    } else {
        0.0
    }
}

fn potential_from_values(v: &[f64]) -> Potential {
    let mut vals = v.to_vec();
    while vals.last().is_some_and(|x| *x == 0.0) {
        vals.pop();
    }
    Potential::new(vals).expect("finite potential values")
}

/// Direct summation Σ_{j=1}^{n−1} ξ_j ξ_jᵀ from the φ tables.
pub fn accumulate_direct(phi: &[Vec<f64>], n: usize) -> Mat {
    let k = phi.len();
    let mut m = linalg::zeros(k);
    for j in 1..n {
        for p in 0..k {
            for q in 0..k {
                m[p][q] += phi[p][j] * phi[q][j];
            }
        }
    }
    m
}

/// Divided-difference closed form of the accumulator: off-diagonal
/// entries (φ_{n−1}(λ_k) φ_n(λ_l) − φ_n(λ_k) φ_{n−1}(λ_l))/(λ_k − λ_l),
/// diagonal entries φ_n φ̇_{n−1} − φ_{n−1} φ̇_n. Coincident energies are
/// rejected (bound states are simple).
pub fn accumulate_closed_form(
    phi: &[Vec<f64>],
    dphi: &[Vec<f64>],
    lambdas: &[f64],
    n: usize,
) -> Result<Mat> {
    let k = lambdas.len();
    assert!(n >= 2);
    let mut m = linalg::zeros(k);
    for p in 0..k {
        for q in 0..k {
            if p == q {
                m[p][q] = phi[p][n] * dphi[p][n - 1] - phi[p][n - 1] * dphi[p][n];
            } else {
                let dl = lambdas[p] - lambdas[q];
                if dl.abs() < 1e-12 {
                    return Err(Error::Precondition(format!(
                        "coincident energies {} and {}",
                        lambdas[p], lambdas[q]
                    )));
                }
                m[p][q] = (phi[p][n - 1] * phi[q][n] - phi[p][n] * phi[q][n - 1]) / dl;
            }
        }
    }
    Ok(m)
}

/// Scattering-matrix and phase-shift update through the unimodular
/// factor ((1 − z_p z)/(z − z_p))^{±2}; verifies the factor modulus and
/// the ±1 change in the Levinson count.
pub struct ScatteringUpdate {
    pub s_samples: Vec<(f64, Complex64)>,
    pub phase_samples: Vec<(f64, f64)>,
    pub winding_change: f64,
    pub factor_modulus_residual: f64,
}

pub fn update_scattering_and_phase(
    base: &JostEval,
    z_p: f64,
    direction: i8,
    grid: usize,
) -> Result<ScatteringUpdate> {
    if !(z_p.abs() < 1.0 && z_p != 0.0) {
        return Err(Error::Precondition(format!("z_p = {z_p} must lie inside the unit interval")));
    }
    if grid < 64 {
        return Err(Error::Precondition("grid must have at least 64 samples".into()));
    }
    let transformed = base.with_factor(z_p, direction);
    let delta = spectral::WINDING_EDGE_DELTA;
    let span = std::f64::consts::PI - 2.0 * delta;
    let mut s_samples = Vec::with_capacity(grid);
    let mut factor_residual = 0.0f64;
    for i in 0..grid {
        let theta = delta + span * i as f64 / (grid - 1) as f64;
        let z = Complex64::from_polar(1.0, theta);
        let factor = (1.0 - z_p * z) / (z - z_p);
        let fpow = if direction > 0 { factor * factor } else { (factor * factor).inv() };
        factor_residual = factor_residual.max((factor.norm() - 1.0).abs());
        let f0 = base.eval(z);
        let s_old = f0.conj() / f0;
        s_samples.push((theta, fpow * s_old));
    }
    if factor_residual > 1e-12 {
        return Err(Error::Diagnostic(format!(
            "Blaschke factor modulus off unity by {factor_residual:.3e}"
        )));
    }
    let (old_args, _) = spectral::unwrap_on_upper_circle(
        &|t| base.eval(Complex64::from_polar(1.0, t)).arg(),
        grid,
    );
    let (new_args, _) = spectral::unwrap_on_upper_circle(
        &|t| transformed.eval(Complex64::from_polar(1.0, t)).arg(),
        grid,
    );
    let w_old = old_args[grid - 1] - old_args[0];
    let w_new = new_args[grid - 1] - new_args[0];
    let winding_change = w_new - w_old;
    let expected = std::f64::consts::PI * direction as f64;
    if (winding_change - expected).abs() > std::f64::consts::PI / 50.0 {
        return Err(Error::Diagnostic(format!(
            "Levinson count did not change by {direction}: Δ = {winding_change:.6}"
        )));
    }
    let phase_samples = new_args
        .iter()
        .enumerate()
        .map(|(i, &a)| (delta + span * i as f64 / (grid - 1) as f64, -a))
        .collect();
    Ok(ScatteringUpdate {
        s_samples,
        phase_samples,
        winding_change,
        factor_modulus_residual: factor_residual,
    })
}

/// Generic-λ evaluation rule for the transformed regular solution,
/// φ̃_n(λ) = φ_n(λ) + β_nᵀ Σ_{m<n} ξ_m φ_m(λ).
#[derive(Debug, Clone)]
pub struct PhiTildeRule {
    v_base: Potential,
    lambdas: Vec<f64>,
    beta: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
}

impl PhiTildeRule {
    pub fn eval(&self, lambda: f64, n_max: usize) -> Vec<f64> {
        let phi_l = regular_solution(&self.v_base, lambda, n_max.max(1));
        let k = self.lambdas.len();
        let mut running = vec![0.0; k];
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(0.0);
        if n_max >= 1 {
            out.push(phi_l[1]);
        }
        for n in 2..=n_max {
            for t in 0..k {
                running[t] += self.phi[t][n - 1] * phi_l[n - 1];
            }
            let corr = if n < self.beta.len() {
                linalg::dot(&self.beta[n], &running)
            } else {
                0.0
            };
            out.push(phi_l[n] + corr);
        }
        out
    }

    /// Same value through the divided-difference vectors α_n(λ):
    /// φ̃_n = [1 − β_nᵀ α_{n−1}] φ_n + β_nᵀ α_n φ_{n−1}.
    pub fn eval_divided_difference(&self, lambda: f64, n_max: usize) -> Result<Vec<f64>> {
        let phi_l = regular_solution(&self.v_base, lambda, n_max.max(1));
        let k = self.lambdas.len();
        for lam in &self.lambdas {
            if (lambda - lam).abs() < 1e-9 {
                return Err(Error::Precondition(format!(
                    "divided-difference form is singular at list energy {lam}"
                )));
            }
        }
        let alpha = |n: usize| -> Vec<f64> {
            (0..k).map(|t| self.phi[t][n] / (lambda - self.lambdas[t])).collect()
        };
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(0.0);
        if n_max >= 1 {
            out.push(phi_l[1]);
        }
        for n in 2..=n_max {
            let b = &self.beta[n];
            let one_minus = 1.0 - linalg::dot(b, &alpha(n - 1));
            let val = one_minus * phi_l[n] + linalg::dot(b, &alpha(n)) * phi_l[n - 1];
            out.push(val);
        }
        Ok(out)
    }
}

/// Quick spectral-consistency check: re-derives the bound-state set of
/// the truncated transformed potential through the forward pipeline
/// and matches it against the intended set.
pub struct ConsistencyReport {
    pub max_lambda_error: f64,
    pub max_c2_error: f64,
    pub count_matches: bool,
}

pub fn verify_spectral_consistency(result: &DarbouxResult) -> Result<ConsistencyReport> {
    let v_trunc = potential_from_values(&result.v_tilde);
    let jd = JostData::from_potential(&v_trunc);
    let scan = spectral::find_bound_states(&jd)?;
    let mut intended = result.bounds_tilde.clone();
    intended.sort_by(|a, b| a.z.partial_cmp(&b.z).unwrap());
    if scan.zeros.len() != intended.len() {
        return Ok(ConsistencyReport {
            max_lambda_error: f64::INFINITY,
            max_c2_error: f64::INFINITY,
            count_matches: false,
        });
    }
    let mut max_l = 0.0f64;
    let mut max_c = 0.0f64;
    for (z, spec) in scan.zeros.iter().zip(intended.iter()) {
        let lambda = lambda_of_bound_z(*z);
        max_l = max_l.max((lambda - spec.lambda).abs());
        let c2 = spectral::gl_norming_constant(&v_trunc, *z)?;
        max_c = max_c.max((c2 - spec.c2_gl).abs());
    }
    Ok(ConsistencyReport { max_lambda_error: max_l, max_c2_error: max_c, count_matches: true })
}

/// Convenience wrapper returning the analysis-based bound list of a
/// compact potential in ascending-z order.
pub fn bound_states_of(v: &Potential) -> Result<Vec<BoundState>> {
    Ok(spectral::analyze(v)?.bound_states)
}
