//! Spectral densities: a continuous weight on the band λ ∈ [0,4] plus a
//! finite list of atoms at the bound-state energies, normalized to
//! total mass one.
//!
//! The continuous part is scale · dρ̊ / |f_0(z)|² where dρ̊ is the free
//! density and scale = (1 − Σ C_s²) / Π z_k². Darboux updates multiply
//! f_0 by a rational Blaschke-type factor, so the evaluator keeps the
//! base polynomial together with the factors applied to it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jost::JostData;
use crate::quadrature;

/// One bound-state atom (λ_s, C_s²) of a spectral density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub lambda: f64,
    pub z: f64,
    pub c2_gl: f64,
}

/// Evaluates the Jost function of a potential or of a chain of Darboux
/// transforms applied to it, anywhere in the closed unit disk.
#[derive(Debug, Clone)]
pub struct JostEval {
    base: Vec<f64>,
    /// (z_p, +1) for an added bound state, (z_p, −1) for a removed one.
    factors: Vec<(f64, i8)>,
}

impl JostEval {
    pub fn from_jost(jd: &JostData) -> Self {
        Self { base: jd.f0_coeffs().to_vec(), factors: Vec::new() }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self { base: coeffs, factors: Vec::new() }
    }

    /// Applies the bound-state factor (1 − z/z_p)/(1 − z_p z) (add) or
    /// its reciprocal (remove).
    pub fn with_factor(&self, z_p: f64, direction: i8) -> Self {
        let mut factors = self.factors.clone();
        // A remove exactly cancels a matching add.
        if let Some(pos) = factors.iter().position(|&(z, d)| z == z_p && d == -direction) {
            factors.remove(pos);
        } else {
            factors.push((z_p, direction));
        }
        Self { base: self.base.clone(), factors }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut val = self
            .base
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        for &(zp, dir) in &self.factors {
            let num = 1.0 - z / zp;
            let den = 1.0 - zp * z;
            let f = num / den;
            val *= if dir > 0 { f } else { f.inv() };
        }
        val
    }

    /// d f̃_0/dz, analytic through the product rule on the factors.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        // base' and base
        let mut bval = Complex64::new(0.0, 0.0);
        let mut bder = Complex64::new(0.0, 0.0);
        for &c in self.base.iter().rev() {
            bder = bder * z + bval;
            bval = bval * z + c;
        }
        // product rule over factors: d(v * f)/dz = v' f + v f'
        let mut val = bval;
        let mut der = bder;
        for &(zp, dir) in &self.factors {
            let num = 1.0 - z / zp;
            let den = 1.0 - zp * z;
            let (f, fp) = if dir > 0 {
                let f = num / den;
                // f' = [−1/zp · den + zp · num] / den²
                (f, (-den / zp + zp * num) / (den * den))
            } else {
                let f = den / num;
                (f, (-zp * num + den / zp) / (num * num))
            };
            der = der * f + val * fp;
            val *= f;
        }
        der
    }

    pub fn mod2_on_circle(&self, theta: f64) -> f64 {
        self.eval(Complex64::from_polar(1.0, theta)).norm_sqr()
    }

    pub fn factors(&self) -> &[(f64, i8)] {
        &self.factors
    }
}

#[derive(Debug, Clone)]
pub struct SpectralDensity {
    /// Prefactor of the continuous part. The forward problem has
    /// prefactor one (the Parseval identity of the truncated operator
    /// pins it down); Darboux transforms scale it multiplicatively.
    pub continuous_scale: f64,
    pub jost: JostEval,
    /// Atoms sorted by λ.
    pub atoms: Vec<Atom>,
    /// Total mass as verified by quadrature at construction.
    pub mass: f64,
    /// ∫_band dρ̊/|f_0|²; equals Π z_k² exactly when f_0 has no zeros
    /// outside the closed unit disk.
    pub band_free_integral: f64,
}

impl SpectralDensity {
    /// Assembles and verifies a density from a Jost evaluator, its
    /// atoms, and the continuous prefactor. Fails when Σ C² ≥ 1 or
    /// when the total mass misses one beyond 1e−8.
    pub fn assemble(jost: JostEval, mut atoms: Vec<Atom>, continuous_scale: f64) -> Result<Self> {
        atoms.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
        let c2_sum: f64 = atoms.iter().map(|a| a.c2_gl).sum();
        if c2_sum >= 1.0 {
            return Err(Error::Precondition(format!(
                "sum of norming constants {c2_sum} must stay below 1"
            )));
        }
        let free_over_f0 =
            |theta: f64| free_theta_weight(theta) / jost.mod2_on_circle(theta);
        let band_free_integral = quadrature::integrate_theta_adaptive(&free_over_f0, 1e-9)?;
        let continuous_mass = continuous_scale * band_free_integral;
        let mass = continuous_mass + c2_sum;
        if (mass - 1.0).abs() > 1e-8 {
            return Err(Error::Diagnostic(format!(
                "spectral density mass {mass} deviates from 1 beyond 1e-8"
            )));
        }
        Ok(Self { continuous_scale, jost, atoms, mass, band_free_integral })
    }

    /// Product of the squared bound-state z values (the normalization
    /// the band integral takes when f_0 is zero-free outside the disk).
    pub fn z_prod2(&self) -> f64 {
        self.atoms.iter().map(|a| a.z * a.z).product()
    }

    /// Continuous weight w(λ) on the open band (0,4); zero outside.
    pub fn weight(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 || lambda >= 4.0 {
            return 0.0;
        }
        let theta = ((2.0 - lambda) / 2.0).clamp(-1.0, 1.0).acos();
        self.continuous_scale * (lambda * (4.0 - lambda)).sqrt()
            / (2.0 * std::f64::consts::PI * self.jost.mod2_on_circle(theta))
    }

    /// Continuous weight in the θ variable, including the dθ Jacobian:
    /// the band integral of `theta_weight` over [0, π] is the
    /// continuous mass.
    pub fn theta_weight(&self, theta: f64) -> f64 {
        self.continuous_scale * free_theta_weight(theta) / self.jost.mod2_on_circle(theta)
    }

    pub fn c2_sum(&self) -> f64 {
        self.atoms.iter().map(|a| a.c2_gl).sum()
    }

    pub fn continuous_mass(&self) -> f64 {
        self.continuous_scale * self.band_free_integral
    }
}

/// Free density in θ: (2/π) sin²θ, unit mass on [0, π].
pub fn free_theta_weight(theta: f64) -> f64 {
    2.0 / std::f64::consts::PI * theta.sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jost::jost_function;
    use crate::potential::Potential;

    #[test]
    fn free_density_has_unit_mass_and_no_atoms() {
        let jd = jost_function(&Potential::free());
        let d = SpectralDensity::assemble(JostEval::from_jost(&jd), Vec::new(), 1.0).unwrap();
        assert!((d.mass - 1.0).abs() < 1e-10);
        assert!(d.atoms.is_empty());
        assert!((d.continuous_scale - 1.0).abs() < 1e-14);
        // w(2) = sqrt(4)/2pi = 1/pi for the free case
        assert!((d.weight(2.0) - 1.0 / std::f64::consts::PI).abs() < 1e-13);
        assert_eq!(d.weight(-1.0), 0.0);
        assert_eq!(d.weight(5.0), 0.0);
    }

    #[test]
    fn factor_cancellation_in_eval() {
        let jd = jost_function(&Potential::new(vec![0.5]).unwrap());
        let e = JostEval::from_jost(&jd);
        let chained = e.with_factor(0.4, 1).with_factor(0.4, -1);
        assert!(chained.factors().is_empty());
        let z = Complex64::new(0.3, 0.2);
        assert!((chained.eval(z) - e.eval(z)).norm() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let jd = jost_function(&Potential::new(vec![0.7, -0.4]).unwrap());
        let e = JostEval::from_jost(&jd).with_factor(0.5, 1).with_factor(-0.3, -1);
        let z = Complex64::new(0.2, 0.1);
        let h = 1e-6;
        let fd = (e.eval(z + h) - e.eval(z - h)) / (2.0 * h);
        assert!((e.derivative(z) - fd).norm() < 1e-8);
    }
}
