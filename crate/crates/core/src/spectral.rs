//! Bound states, norming constants, scattering matrix, phase shift
//! with the Levinson winding check, band-edge classification, and
//! spectral-density assembly.
//!
//! Bound states are the simple real zeros of the Jost function inside
//! the unit interval pair (−1,0)∪(0,1). The Gel'fand–Levitan norming
//! constant is the inverse norm of the regular solution there, the
//! Marchenko constant the inverse norm of the Jost solution; the two
//! are tied by C² = c² f_1(z_s)².

use num_complex::Complex64;

use crate::density::{Atom, JostEval, SpectralDensity};
use crate::error::{Error, Result};
use crate::jost::{jost_solution_real, JostData};
use crate::param::lambda_of_bound_z;
use crate::potential::Potential;
use crate::regular::regular_solution;

/// Tolerance scale for declaring f_0(±1) = 0 (the exceptional case).
pub fn endpoint_tolerance(jd: &JostData) -> f64 {
    1e-9 * jd.coefficient_scale()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub lambda: f64,
    pub z: f64,
    /// Gel'fand–Levitan norming constant squared.
    pub c2_gl: f64,
    /// Marchenko norming constant squared.
    pub c2_marchenko: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndpointClass {
    pub mu_plus: u8,
    pub mu_minus: u8,
}

/// Zeros of f_0 in (−1,0)∪(0,1), plus any zeros hugging ±1 which mark
/// the exceptional case rather than bound states.
#[derive(Debug, Clone, Default)]
pub struct BoundStateScan {
    pub zeros: Vec<f64>,
    pub boundary_events: Vec<f64>,
}

const SCAN_GRID: usize = 4096;
const BISECTION_TOL: f64 = 1e-14;

/// Sign-scan and bisection for the real zeros of the Jost function in
/// the open unit interval pair; simple zeros guaranteed by theory.
pub fn find_bound_states(jd: &JostData) -> Result<BoundStateScan> {
    let f = |x: f64| jd.f0_real(x);
    let scale = jd.coefficient_scale();
    let mut roots: Vec<f64> = Vec::new();

    let xs: Vec<f64> = (0..=SCAN_GRID)
        .map(|i| -1.0 + 2.0 * i as f64 / SCAN_GRID as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    for i in 0..=SCAN_GRID {
        if fs[i] == 0.0 {
            roots.push(xs[i]);
        }
    }
    for i in 0..SCAN_GRID {
        if fs[i] * fs[i + 1] < 0.0 {
            let (mut lo, mut hi) = (xs[i], xs[i + 1]);
            let mut flo = fs[i];
            while hi - lo > BISECTION_TOL {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * BISECTION_TOL);

    let mut scan = BoundStateScan::default();
    for r in roots {
        if 1.0 - r.abs() <= 1e-9 {
            scan.boundary_events.push(r);
            continue;
        }
        let slope = jd.f0_derivative_real(r);
        if slope.abs() <= 1e-9 * scale {
            return Err(Error::Diagnostic(format!(
                "zero of f_0 at z = {r} is not numerically simple"
            )));
        }
        scan.zeros.push(r);
    }
    // A degree-(2b−1) polynomial admits at most 2b−1 real zeros.
    debug_assert!(jd.support() == 0 || scan.zeros.len() <= 2 * jd.support() - 1);
    Ok(scan)
}

/// Regular solution φ_0..φ_{n_max} at a bound state, through the Jost
/// route φ_n = f_n(z_s)/f_1(z_s). Unlike the forward recursion this
/// stays on the decaying branch at every site.
pub fn bound_phi_table(v: &Potential, z_s: f64, n_max: usize) -> Vec<f64> {
    let f = jost_solution_real(v, z_s);
    let f1 = f[1];
    debug_assert!(f1 != 0.0, "f_1 cannot vanish at a bound state");
    let b = v.support().max(1);
    let mut phi = Vec::with_capacity(n_max + 1);
    phi.push(0.0);
    for n in 1..=n_max {
        let val = if n < f.len() {
            f[n] / f1
        } else {
            // f_n = z^n beyond the support
            phi[b] * z_s.powi((n - b) as i32)
        };
        phi.push(val);
    }
    phi
}

const NORMING_TAIL_TOL: f64 = 1e-14;

/// Gel'fand–Levitan norming constant squared, C² = 1/Σ φ_n(λ_s)².
/// The series is summed until the geometric tail estimate (decay rate
/// z_s²) drops below 1e−14 of the partial sum. The φ values come from
/// the Jost route, which stays on the decaying branch at every site
/// (the forward recursion degrades exponentially past deep supports);
/// a z that is not actually a zero of the Jost function is rejected
/// up front.
pub fn gl_norming_constant(v: &Potential, z_s: f64) -> Result<f64> {
    if !(z_s.abs() < 1.0 && z_s != 0.0) {
        return Err(Error::Precondition(format!("z = {z_s} is not inside the unit interval")));
    }
    let jd = JostData::from_potential(v);
    if jd.f0_real(z_s).abs() > 1e-6 * jd.coefficient_scale() {
        return Err(Error::Diagnostic(format!(
            "z = {z_s} is not a bound state: |f_0(z)| = {:.3e}",
            jd.f0_real(z_s).abs()
        )));
    }
    let r = z_s * z_s;
    let b = v.support().max(1);
    let phi = bound_phi_table(v, z_s, b + 2);
    let mut partial = 0.0f64;
    for n in 1..=b + 2 {
        let term = phi[n] * phi[n];
        partial += term;
        if n >= b {
            let tail = term * r / (1.0 - r);
            if tail < NORMING_TAIL_TOL * partial {
                return Ok(1.0 / (partial + tail));
            }
        }
    }
    // beyond the support the decay is exactly geometric
    let term = phi[b + 2] * phi[b + 2];
    Ok(1.0 / (partial + term * r / (1.0 - r)))
}

/// Residue form of the Marchenko constant for compact support:
/// c² = Res[S/z, z_s] = f_0(1/z_s)/(z_s f_0'(z_s)).
pub fn marchenko_residue(jd: &JostData, z_s: f64) -> f64 {
    jd.f0_real(1.0 / z_s) / (z_s * jd.f0_derivative_real(z_s))
}

/// Marchenko norming constant squared, c² = 1/Σ f_n(z_s)², with the
/// geometric tail beyond the support summed in closed form. Checked
/// against the residue of S/z.
pub fn marchenko_norming_constant(v: &Potential, jd: &JostData, z_s: f64) -> Result<f64> {
    if !(z_s.abs() < 1.0 && z_s != 0.0) {
        return Err(Error::Precondition(format!("z = {z_s} is not inside the unit interval")));
    }
    let b = v.support().max(1);
    let f = jost_solution_real(v, z_s);
    let r = z_s * z_s;
    let mut sum = 0.0;
    for n in 1..b {
        sum += f[n] * f[n];
    }
    sum += z_s.powi(2 * b as i32) / (1.0 - r);
    let series = 1.0 / sum;
    let residue = marchenko_residue(jd, z_s);
    let rel = (series - residue).abs() / residue.abs().max(1e-300);
    if rel > 1e-10 {
        return Err(Error::Diagnostic(format!(
            "Marchenko routes disagree at z = {z_s}: series {series} vs residue {residue}"
        )));
    }
    Ok(series)
}

/// Full bound-state record at a verified zero z_s, with the
/// C² = c² f_1(z_s)² consistency relation enforced.
pub fn bound_state(v: &Potential, jd: &JostData, z_s: f64) -> Result<BoundState> {
    let lambda = lambda_of_bound_z(z_s);
    let c2_gl = gl_norming_constant(v, z_s)?;
    let c2_m = marchenko_norming_constant(v, jd, z_s)?;
    let f1 = jd.f1_real(z_s);
    let tied = c2_m * f1 * f1;
    let rel = (c2_gl - tied).abs() / c2_gl.abs().max(1e-300);
    if rel > 1e-10 {
        return Err(Error::Diagnostic(format!(
            "norming constants violate C^2 = c^2 f_1^2 at z = {z_s} (rel {rel:.3e})"
        )));
    }
    if c2_gl <= 0.0 || c2_m <= 0.0 {
        return Err(Error::Diagnostic(format!("non-positive norming constant at z = {z_s}")));
    }
    Ok(BoundState { lambda, z: z_s, c2_gl, c2_marchenko: c2_m })
}

/// Scattering matrix S(z) = conj(f_0(z))/f_0(z) on the unit circle.
pub fn scattering_matrix(jd: &JostData, z: Complex64) -> Result<Complex64> {
    if (z.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("S(z) requires |z| = 1, got |z| = {}", z.norm())));
    }
    let f0 = jd.f0(z);
    if f0.norm() <= endpoint_tolerance(jd) {
        return Err(Error::Input(format!(
            "f_0 vanishes at z = {z}; S is undefined there"
        )));
    }
    Ok(f0.conj() / f0)
}

#[derive(Debug, Clone, Copy)]
pub struct WindingReport {
    /// Change of arg f_0 along the upper half circle (principal-value
    /// exclusion of the band edges).
    pub delta_arg_f0: f64,
    pub n_bound: usize,
    pub mu_plus: u8,
    pub mu_minus: u8,
    /// π (N + μ₊/2 + μ₋/2).
    pub target: f64,
    pub ok: bool,
    pub grid: usize,
}

#[derive(Debug, Clone)]
pub struct PhaseData {
    /// (θ, φ(e^{iθ})) with the phase shift φ = −arg f_0, unwrapped.
    pub samples: Vec<(f64, f64)>,
    pub winding: WindingReport,
}

/// Principal-value exclusion around θ = 0, π in winding computations.
pub const WINDING_EDGE_DELTA: f64 = 1e-3;
const MAX_PHASE_GRID: usize = 1 << 20;

fn principal_diff(d: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    (d + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI
}

/// Unwraps an argument function along θ ∈ (δ, π−δ); returns the
/// continued samples and the worst adjacent jump (for ambiguity
/// detection).
pub fn unwrap_on_upper_circle<F: Fn(f64) -> f64>(arg_at: &F, grid: usize) -> (Vec<f64>, f64) {
    let delta = WINDING_EDGE_DELTA;
    let span = std::f64::consts::PI - 2.0 * delta;
    let mut out = Vec::with_capacity(grid);
    let mut worst_jump = 0.0f64;
    let mut prev = 0.0;
    for i in 0..grid {
        let theta = delta + span * i as f64 / (grid - 1) as f64;
        let a = arg_at(theta);
        if i == 0 {
            prev = a;
        } else {
            let d = principal_diff(a - prev);
            worst_jump = worst_jump.max(d.abs());
            prev += d;
        }
        out.push(prev);
    }
    (out, worst_jump)
}

/// Unwrapped phase shift along the upper half circle and the Levinson
/// winding verification Δ arg f_0 = π (N + μ₊/2 + μ₋/2) within π/50.
///
/// The grid doubles on unwrap ambiguity (adjacent jump beyond π/2)
/// until the winding is unambiguous.
pub fn phase_shift_and_levinson(jd: &JostData, grid_size: usize) -> Result<PhaseData> {
    if grid_size < 64 {
        return Err(Error::Precondition("phase grid must have at least 64 samples".into()));
    }
    let arg_at = |theta: f64| jd.f0(Complex64::from_polar(1.0, theta)).arg();
    let mut grid = grid_size;
    let (args, jump) = loop {
        let (args, jump) = unwrap_on_upper_circle(&arg_at, grid);
        if jump <= std::f64::consts::FRAC_PI_2 {
            break (args, jump);
        }
        if grid >= MAX_PHASE_GRID {
            return Err(Error::PhaseUnwrap { grid, jump });
        }
        grid *= 2;
    };
    let _ = jump;
    let delta_arg = args[args.len() - 1] - args[0];
    let scan = find_bound_states(jd)?;
    let endpoints = endpoint_classification(jd)?;
    let n = scan.zeros.len();
    let target = std::f64::consts::PI
        * (n as f64 + 0.5 * endpoints.mu_plus as f64 + 0.5 * endpoints.mu_minus as f64);
    let ok = (delta_arg - target).abs() <= std::f64::consts::PI / 50.0;
    let delta = WINDING_EDGE_DELTA;
    let span = std::f64::consts::PI - 2.0 * delta;
    let samples = args
        .iter()
        .enumerate()
        .map(|(i, &a)| (delta + span * i as f64 / (args.len() - 1) as f64, -a))
        .collect();
    Ok(PhaseData {
        samples,
        winding: WindingReport {
            delta_arg_f0: delta_arg,
            n_bound: n,
            mu_plus: endpoints.mu_plus,
            mu_minus: endpoints.mu_minus,
            target,
            ok,
            grid,
        },
    })
}

/// Generic/exceptional classification of the band edges: μ± = 1 when
/// f_0(±1) vanishes to within the scale-relative tolerance. An
/// exceptional zero must be simple.
pub fn endpoint_classification(jd: &JostData) -> Result<EndpointClass> {
    let tol = endpoint_tolerance(jd);
    let mut class = EndpointClass { mu_plus: 0, mu_minus: 0 };
    for (value, slot, edge) in [
        (jd.f0_real(1.0), &mut class.mu_plus, 1.0),
        (jd.f0_real(-1.0), &mut class.mu_minus, -1.0),
    ] {
        if value.abs() <= tol {
            let slope = jd.f0_derivative_real(edge);
            if slope.abs() <= tol {
                return Err(Error::Diagnostic(format!(
                    "degenerate zero of f_0 at z = {edge}"
                )));
            }
            *slot = 1;
        }
    }
    Ok(class)
}

/// Spectral density of a potential from its Jost data and bound
/// states. The continuous part is dρ̊/|f_0|² (unit prefactor; the
/// truncated-operator Parseval identity fixes the normalization). The
/// band integral is additionally matched against Π z_k² whenever f_0
/// has no zeros outside the closed unit disk, the regime in which that
/// identity holds.
pub fn spectral_density(jd: &JostData, bounds: &[BoundState]) -> Result<SpectralDensity> {
    let atoms: Vec<Atom> = bounds
        .iter()
        .map(|b| Atom { lambda: b.lambda, z: b.z, c2_gl: b.c2_gl })
        .collect();
    let density = SpectralDensity::assemble(JostEval::from_jost(jd), atoms, 1.0)?;
    let degree: i64 = if jd.support() == 0 { 0 } else { 2 * jd.support() as i64 - 1 };
    let endpoints = endpoint_classification(jd)?;
    let outside =
        degree - bounds.len() as i64 - endpoints.mu_plus as i64 - endpoints.mu_minus as i64;
    if bounds.is_empty() || outside == 0 {
        let z_prod2 = density.z_prod2();
        if (density.band_free_integral - z_prod2).abs() > 1e-6 * z_prod2.max(1e-12) {
            return Err(Error::Diagnostic(format!(
                "band integral {} vs z-product normalization {z_prod2}",
                density.band_free_integral
            )));
        }
    }
    Ok(density)
}

/// Complete forward pipeline for one potential.
#[derive(Debug, Clone)]
pub struct SpectralAnalysis {
    pub potential: Potential,
    pub jost: JostData,
    pub bound_states: Vec<BoundState>,
    pub boundary_events: Vec<f64>,
    pub endpoints: EndpointClass,
    pub density: SpectralDensity,
}

pub fn analyze(v: &Potential) -> Result<SpectralAnalysis> {
    let jost = JostData::from_potential(v);
    let scan = find_bound_states(&jost)?;
    let mut bound_states = Vec::with_capacity(scan.zeros.len());
    for &z in &scan.zeros {
        bound_states.push(bound_state(v, &jost, z)?);
    }
    let endpoints = endpoint_classification(&jost)?;
    let density = spectral_density(&jost, &bound_states)?;
    Ok(SpectralAnalysis {
        potential: v.clone(),
        jost,
        bound_states,
        boundary_events: scan.boundary_events,
        endpoints,
        density,
    })
}

/// Orthonormality functional ∫ φ_n dρ φ_m (band quadrature plus atom
/// sums); equals δ_{nm} for the density of the same potential.
pub fn orthonormality_integral(
    v: &Potential,
    density: &SpectralDensity,
    n: usize,
    m: usize,
) -> Result<f64> {
    let top = n.max(m);
    let band = crate::quadrature::integrate_theta_adaptive(
        &|theta: f64| {
            let lambda = 2.0 - 2.0 * theta.cos();
            let phi = regular_solution(v, lambda, top);
            density.theta_weight(theta) * phi[n] * phi[m]
        },
        1e-9,
    )?;
    let atoms: f64 = density
        .atoms
        .iter()
        .map(|a| {
            let phi = bound_phi_table(v, a.z, top);
            a.c2_gl * phi[n] * phi[m]
        })
        .sum();
    Ok(band + atoms)
}

/// Consistency of the factored form Π (1 − z/α_j) with a two-site
/// potential: returns (V_1, V_2) when the cubic is the Jost function of
/// such a potential.
pub fn two_site_potential_from_factors(alphas: &[Complex64; 3]) -> Result<(f64, f64)> {
    if alphas.iter().any(|a| a.norm() == 0.0) {
        return Err(Error::Input("factor roots must be nonzero".into()));
    }
    let inv: Vec<Complex64> = alphas.iter().map(|a| a.inv()).collect();
    let k1 = -(inv[0] + inv[1] + inv[2]);
    let k2 = inv[0] * inv[1] + inv[0] * inv[2] + inv[1] * inv[2];
    let k3 = -(inv[0] * inv[1] * inv[2]);
    let scale = 1.0 + k1.norm() + k2.norm() + k3.norm();
    if k1.im.abs() + k2.im.abs() + k3.im.abs() > 1e-9 * scale {
        return Err(Error::Diagnostic(
            "factored cubic has complex coefficients; not a Jost function".into(),
        ));
    }
    let v2 = k3.re;
    let v1 = k1.re - v2;
    if (v1 * v2 - k2.re).abs() > 1e-9 * scale {
        return Err(Error::Diagnostic(
            "coefficient system is inconsistent; not the Jost function of a two-site potential"
                .into(),
        ));
    }
    Ok((v1, v2))
}

/// Candidate Marchenko constants of a hypothetical triple of real
/// bound-state zeros of a two-site Jost function. A negative entry
/// rules the configuration out.
pub fn marchenko_triple_candidates(alpha: &[f64; 3]) -> [f64; 3] {
    let c = |s: usize, t: usize, u: usize| -> f64 {
        let (a, b2, c3) = (alpha[s], alpha[t], alpha[u]);
        (1.0 - a * a) * (1.0 - a * b2) * (1.0 - a * c3)
            / (a.powi(4) * (b2 - a) * (c3 - a))
    };
    [c(0, 1, 2), c(1, 0, 2), c(2, 0, 1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jost::jost_function;

    fn example_two_site() -> Potential {
        let s5 = 5.0f64.sqrt();
        Potential::new(vec![-s5, 4.0 / s5]).unwrap()
    }

    #[test]
    fn no_bound_states_for_small_single_site() {
        let jd = jost_function(&Potential::new(vec![0.5]).unwrap());
        let scan = find_bound_states(&jd).unwrap();
        assert!(scan.zeros.is_empty());
        assert!(scan.boundary_events.is_empty());
    }

    #[test]
    fn two_site_example_has_half_integer_zeros() {
        let jd = jost_function(&example_two_site());
        let scan = find_bound_states(&jd).unwrap();
        assert_eq!(scan.zeros.len(), 2);
        assert!((scan.zeros[0] + 0.5).abs() < 1e-12);
        assert!((scan.zeros[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_site_root_from_bisection() {
        let jd = jost_function(&Potential::new(vec![1.25]).unwrap());
        let scan = find_bound_states(&jd).unwrap();
        assert_eq!(scan.zeros.len(), 1);
        assert!((scan.zeros[0] + 0.8).abs() < 1e-12);
    }

    #[test]
    fn norming_constants_single_site() {
        // V = (1.25): z = −0.8. The eigenvector is z^{n−1}, so
        // C² = 1 − z² and c² = C²/z² = V² − 1 by the residue route.
        let v = Potential::new(vec![1.25]).unwrap();
        let jd = jost_function(&v);
        let z = -0.8;
        let c2 = gl_norming_constant(&v, z).unwrap();
        assert!((c2 - 0.36).abs() < 1e-12);
        let m2 = marchenko_norming_constant(&v, &jd, z).unwrap();
        assert!((m2 - 0.5625).abs() < 1e-12);
        let res = marchenko_residue(&jd, z);
        assert!((res - (1.25f64 * 1.25 - 1.0)).abs() < 1e-12);
        let b = bound_state(&v, &jd, z).unwrap();
        assert!((b.c2_gl - b.c2_marchenko * z * z).abs() < 1e-12);
        assert!((b.lambda - 4.05).abs() < 1e-12);
    }

    #[test]
    fn norming_constants_example_values() {
        // C² = 3(12 ∓ 5√5)/76 at z = ∓1/2.
        let v = example_two_site();
        let jd = jost_function(&v);
        let s5 = 5.0f64.sqrt();
        let c1 = gl_norming_constant(&v, -0.5).unwrap();
        let c2 = gl_norming_constant(&v, 0.5).unwrap();
        assert!((c1 - 3.0 * (12.0 - 5.0 * s5) / 76.0).abs() < 1e-12);
        assert!((c2 - 3.0 * (12.0 + 5.0 * s5) / 76.0).abs() < 1e-12);
        for z in [-0.5, 0.5] {
            let b = bound_state(&v, &jd, z).unwrap();
            let f1 = jd.f1_real(z);
            assert!((b.c2_gl - b.c2_marchenko * f1 * f1).abs() < 1e-10 * b.c2_gl);
        }
    }

    #[test]
    fn norming_rejects_non_bound_point() {
        let v = Potential::new(vec![0.5]).unwrap();
        assert!(gl_norming_constant(&v, 0.4).is_err());
    }

    #[test]
    fn triple_of_interior_zeros_is_impossible() {
        let c = marchenko_triple_candidates(&[-0.6, 0.3, 0.7]);
        assert!(c[0] > 0.0);
        assert!(c[1] < 0.0, "middle candidate must be negative, got {}", c[1]);
        assert!(c[2] > 0.0);
    }

    #[test]
    fn realizability_of_factored_cubics() {
        let one = Complex64::new(1.0, 0.0);
        assert!(two_site_potential_from_factors(&[one, one, one]).is_err());
        // V1 = −√2, V2 = 1/√2 corresponds to α = (−1, 1, √2).
        let s2 = 2.0f64.sqrt();
        let (v1, v2) = two_site_potential_from_factors(&[
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(s2, 0.0),
        ])
        .unwrap();
        assert!((v1 + s2).abs() < 1e-12);
        assert!((v2 - 1.0 / s2).abs() < 1e-12);
    }

    #[test]
    fn third_factored_case_has_one_bound_state() {
        // α1 = 3/(2(1+√10)), α2/3 = 2/(1 ± i√2): C1² = (625+128√10)/3489.
        let s10 = 10.0f64.sqrt();
        let s2 = 2.0f64.sqrt();
        let a1 = Complex64::new(3.0 / (2.0 * (1.0 + s10)), 0.0);
        let a2 = Complex64::new(2.0, 0.0) / Complex64::new(1.0, s2);
        let a3 = Complex64::new(2.0, 0.0) / Complex64::new(1.0, -s2);
        let (v1, v2) = two_site_potential_from_factors(&[a1, a2, a3]).unwrap();
        assert!((v1 - (-(7.0 + s10) / 6.0)).abs() < 1e-10);
        assert!((v2 - (-(1.0 + s10) / 2.0)).abs() < 1e-10);
        let v = Potential::new(vec![v1, v2]).unwrap();
        let jd = jost_function(&v);
        let scan = find_bound_states(&jd).unwrap();
        assert_eq!(scan.zeros.len(), 1);
        assert!((scan.zeros[0] - a1.re).abs() < 1e-12);
        let c2 = gl_norming_constant(&v, scan.zeros[0]).unwrap();
        let expect = (625.0 + 128.0 * s10) / 3489.0;
        assert!((c2 - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn scattering_matrix_is_unimodular() {
        let v = Potential::new(vec![1.25]).unwrap();
        let jd = jost_function(&v);
        for k in 1..16 {
            let theta = std::f64::consts::PI * k as f64 / 16.0;
            let z = Complex64::from_polar(1.0, theta);
            let s = scattering_matrix(&jd, z).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12);
            // (2.11): S = f0(1/z)/f0(z)
            let alt = jd.f0(z.inv()) / jd.f0(z);
            assert!((s - alt).norm() < 1e-12);
            // closed form (V1 + z)/(z + V1 z^2)
            let closed = (1.25 + z) / (z + 1.25 * z * z);
            assert!((s - closed).norm() < 1e-12);
        }
        let free = jost_function(&Potential::free());
        let s = scattering_matrix(&free, Complex64::from_polar(1.0, 0.7)).unwrap();
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn scattering_matrix_dual_forms_on_example() {
        let jd = jost_function(&example_two_site());
        let z = Complex64::new(0.0, 1.0);
        let s = scattering_matrix(&jd, z).unwrap();
        let alt = jd.f0(z.inv()) / jd.f0(z);
        assert!((s - alt).norm() < 1e-12);
    }

    #[test]
    fn endpoint_classification_cases() {
        let free = jost_function(&Potential::free());
        let e = endpoint_classification(&free).unwrap();
        assert_eq!((e.mu_plus, e.mu_minus), (0, 0));

        // f0 = 1 − z vanishes at z = 1: exceptional at the lower edge.
        let v = Potential::new(vec![-1.0]).unwrap();
        let e = endpoint_classification(&jost_function(&v)).unwrap();
        assert_eq!((e.mu_plus, e.mu_minus), (1, 0));

        let e = endpoint_classification(&jost_function(&example_two_site())).unwrap();
        assert_eq!((e.mu_plus, e.mu_minus), (0, 0));
    }

    #[test]
    fn levinson_windings() {
        let free = jost_function(&Potential::free());
        let p = phase_shift_and_levinson(&free, 256).unwrap();
        assert!(p.winding.ok);
        assert!(p.winding.delta_arg_f0.abs() < 1e-6);
        assert!(p.samples.iter().all(|&(_, phi)| phi.abs() < 1e-9));

        let jd = jost_function(&example_two_site());
        let p = phase_shift_and_levinson(&jd, 256).unwrap();
        assert_eq!(p.winding.n_bound, 2);
        assert!(p.winding.ok);
        assert!((p.winding.delta_arg_f0 - 2.0 * std::f64::consts::PI).abs() < 0.05);

        let jd = jost_function(&Potential::new(vec![1.25]).unwrap());
        let p = phase_shift_and_levinson(&jd, 256).unwrap();
        assert_eq!(p.winding.n_bound, 1);
        assert!(p.winding.ok);
        assert!((p.winding.delta_arg_f0 - std::f64::consts::PI).abs() < 0.05);
    }

    #[test]
    fn density_masses() {
        // Free: unit continuous mass. Example 5.3: atom (4.05, 0.36).
        let v = Potential::new(vec![1.25]).unwrap();
        let a = analyze(&v).unwrap();
        assert_eq!(a.bound_states.len(), 1);
        let atom = &a.density.atoms[0];
        assert!((atom.lambda - 4.05).abs() < 1e-12);
        assert!((atom.c2_gl - 0.36).abs() < 1e-12);
        assert!((a.density.mass - 1.0).abs() < 1e-9);
        assert!((a.density.continuous_mass() - 0.64).abs() < 1e-9);

        let a = analyze(&example_two_site()).unwrap();
        assert!((a.density.c2_sum() - 18.0 / 19.0).abs() < 1e-11);
        assert!((a.density.continuous_mass() - 1.0 / 19.0).abs() < 1e-9);
    }

    #[test]
    fn orthonormality_of_forward_density() {
        let v = Potential::new(vec![1.25]).unwrap();
        let a = analyze(&v).unwrap();
        for n in 1..=3 {
            for m in 1..=3 {
                let val = orthonormality_integral(&v, &a.density, n, m).unwrap();
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!(
                    (val - expect).abs() < 1e-7,
                    "({n},{m}): {val} vs {expect}"
                );
            }
        }
    }
}
