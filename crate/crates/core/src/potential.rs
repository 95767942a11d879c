//! Real-valued potentials on the half-line lattice.
//!
//! The canonical input class is compactly supported: V_n = 0 for
//! n > b. General summable potentials with a finite first moment enter
//! only through explicit truncation, with the discarded weight
//! reported to the caller.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
    faddeev_weight: f64,
}

impl Potential {
    /// Compactly supported potential V_1..V_b. Rejects non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite potential value {bad}")));
        }
        let faddeev_weight = first_moment(&values);
        Ok(Self { values, faddeev_weight })
    }

    pub fn free() -> Self {
        Self { values: Vec::new(), faddeev_weight: 0.0 }
    }

    /// Truncates a longer sequence at `cut` sites and reports the
    /// discarded first-moment weight Σ_{n>cut} n · |V_n|.
    pub fn truncated(values: &[f64], cut: usize) -> Result<(Self, f64)> {
        let kept = values[..cut.min(values.len())].to_vec();
        let discarded = values
            .iter()
            .enumerate()
            .skip(cut)
            .map(|(i, v)| (i + 1) as f64 * v.abs())
            .sum();
        Ok((Self::new(kept)?, discarded))
    }

    /// Support b; values are implicitly zero for n > b.
    pub fn support(&self) -> usize {
        self.values.len()
    }

    /// V_n for 1-based site index n (zero beyond the support).
    pub fn v(&self, n: usize) -> f64 {
        if n >= 1 && n <= self.values.len() {
            self.values[n - 1]
        } else {
            0.0
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First moment Σ n · |V_n|, cached at construction.
    pub fn faddeev_weight(&self) -> f64 {
        self.faddeev_weight
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn first_moment(values: &[f64]) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * v.abs())
        .sum()
}
