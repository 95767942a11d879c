//! Spectral-parameter maps between the energy variable λ and the
//! auxiliary variable z, related by λ = 2 − z − 1/z.
//!
//! The closed unit disk in z is the physical sheet: the continuous
//! spectrum λ ∈ [0,4] corresponds to the unit circle (upper half for
//! the principal representative), λ ∈ (−∞,0) to z ∈ (0,1), and
//! λ ∈ (4,∞) to z ∈ (−1,0). Bound states live at real z inside the
//! unit disk.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A paired (λ, z) value with λ = 2 − z − 1/z and |z| ≤ 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub lambda: Complex64,
    pub z: Complex64,
}

impl SpectralPoint {
    /// Residual of the defining relation, |λ − (2 − z − 1/z)|.
    pub fn relation_residual(&self) -> f64 {
        (self.lambda - (Complex64::new(2.0, 0.0) - self.z - self.z.inv())).norm()
    }
}

/// Maps λ to the spectral point with |z| ≤ 1. For λ ∈ (0,4) the
/// upper-half-circle representative (Im z > 0) is returned.
pub fn z_of_lambda(lambda: Complex64) -> SpectralPoint {
    let w = Complex64::new(1.0, 0.0) - lambda / 2.0;
    let s = (lambda * (lambda - 4.0)).sqrt();
    let z1 = w + s / 2.0;
    let z2 = w - s / 2.0;
    // The two candidates multiply to 1, so at most one lies inside the
    // unit circle; on the circle itself prefer Im z >= 0.
    let (n1, n2) = (z1.norm(), z2.norm());
    let z = if (n1 - n2).abs() <= 1e-12 * (1.0 + n1) {
        if z1.im >= 0.0 {
            z1
        } else {
            z2
        }
    } else if n1 < n2 {
        z1
    } else {
        z2
    };
    SpectralPoint { lambda, z }
}

pub fn z_of_lambda_real(lambda: f64) -> SpectralPoint {
    z_of_lambda(Complex64::new(lambda, 0.0))
}

/// Inverse map λ = 2 − z − 1/z; rejects z = 0.
pub fn lambda_of_z(z: Complex64) -> Result<SpectralPoint> {
    if z.norm() == 0.0 {
        return Err(Error::Input("lambda_of_z: z = 0 has no finite image".into()));
    }
    let lambda = Complex64::new(2.0, 0.0) - z - z.inv();
    Ok(SpectralPoint { lambda, z })
}

/// True when λ is a possible bound-state energy, i.e. off the band [0,4].
pub fn is_bound_energy(lambda: f64) -> bool {
    lambda.is_finite() && (lambda < 0.0 || lambda > 4.0)
}

/// Real z in (−1,0)∪(0,1) for a bound-state energy.
pub fn bound_z_of_lambda(lambda: f64) -> Result<f64> {
    if !is_bound_energy(lambda) {
        return Err(Error::Precondition(format!(
            "lambda = {lambda} lies in the continuous spectrum [0,4]"
        )));
    }
    let p = z_of_lambda_real(lambda);
    debug_assert!(p.z.im.abs() < 1e-14);
    Ok(p.z.re)
}

pub fn lambda_of_bound_z(z: f64) -> f64 {
    2.0 - z - 1.0 / z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_edges_and_midpoint() {
        let p = z_of_lambda_real(0.0);
        assert!((p.z - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let p = z_of_lambda_real(2.0);
        assert!((p.z - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        assert!(p.relation_residual() < 1e-14);
        let p = z_of_lambda_real(4.0);
        assert!((p.z - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn bound_state_branches() {
        // lambda = 9/2 pairs with z = -1/2, lambda = -1/2 with z = 1/2.
        let p = z_of_lambda_real(4.5);
        assert!((p.z - Complex64::new(-0.5, 0.0)).norm() < 1e-14);
        let q = lambda_of_z(Complex64::new(0.5, 0.0)).unwrap();
        assert!((q.lambda.re + 0.5).abs() < 1e-14);
        assert!((lambda_of_bound_z(-0.5) - 4.5).abs() < 1e-14);
    }

    #[test]
    fn circle_maps_to_band() {
        let z = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2);
        let p = lambda_of_z(z).unwrap();
        assert!((p.lambda.re - 2.0).abs() < 1e-14);
        assert!(p.lambda.im.abs() < 1e-14);
    }

    #[test]
    fn zero_rejected() {
        assert!(lambda_of_z(Complex64::new(0.0, 0.0)).is_err());
    }
}
