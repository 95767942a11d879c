//! File formats: the potential JSON schema, the spectral report, the
//! transform request/result pair, and the CSV curve writers.
//!
//! All numeric output goes through serde_json's shortest-roundtrip
//! float formatting, so identical inputs produce identical bytes and a
//! re-read report reproduces the in-memory values exactly.

use serde::{Deserialize, Serialize};

use crate::darboux::DarbouxResult;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::spectral::{PhaseData, SpectralAnalysis};

/// On-disk potential: {"values": [...], "support": b}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialFile {
    pub values: Vec<f64>,
    pub support: usize,
}

impl PotentialFile {
    pub fn from_potential(v: &Potential) -> Self {
        Self { values: v.values().to_vec(), support: v.support() }
    }

    pub fn into_potential(self) -> Result<Potential> {
        if self.support != self.values.len() {
            return Err(Error::Input(format!(
                "support {} does not match {} stored values",
                self.support,
                self.values.len()
            )));
        }
        Potential::new(self.values)
    }
}

pub fn read_potential(path: &std::path::Path) -> Result<Potential> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let file: PotentialFile = serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("malformed potential file {}: {e}", path.display())))?;
    file.into_potential()
}

pub fn write_potential(path: &std::path::Path, v: &Potential) -> Result<()> {
    let text = serde_json::to_string_pretty(&PotentialFile::from_potential(v))
        .expect("potential serializes");
    std::fs::write(path, text + "\n")
        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundStateJson {
    pub z: f64,
    pub lambda: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "c2")]
    pub c2_marchenko: f64,
}

/// The spectral report emitted by `analyze`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SpectralReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub bound_states: Vec<BoundStateJson>,
    pub mu_plus: u8,
    pub mu_minus: u8,
    pub levinson_ok: bool,
    pub continuous_mass: f64,
}

pub fn spectral_report(analysis: &SpectralAnalysis, phase: &PhaseData) -> SpectralReport {
    SpectralReport {
        n: analysis.bound_states.len(),
        bound_states: analysis
            .bound_states
            .iter()
            .map(|b| BoundStateJson {
                z: b.z,
                lambda: b.lambda,
                c2: b.c2_gl,
                c2_marchenko: b.c2_marchenko,
            })
            .collect(),
        mu_plus: analysis.endpoints.mu_plus,
        mu_minus: analysis.endpoints.mu_minus,
        levinson_ok: phase.winding.ok,
        continuous_mass: analysis.density.continuous_mass(),
    }
}

/// Transform request: {"op": "add"|"remove", "lambda": .., "C2": ..,
/// "index": .., "n_max": ..}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformRequest {
    pub op: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "C2", skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub n_max: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransformReport {
    pub request: TransformRequest,
    pub v_tilde: Vec<f64>,
    pub bound_states: Vec<BoundStateJson>,
    pub compact: bool,
    pub definiteness_margin: f64,
    pub accumulator_residual: f64,
    pub blaschke_residual: f64,
    pub density_mass: f64,
}

pub fn transform_report(req: TransformRequest, result: &DarbouxResult) -> TransformReport {
    TransformReport {
        request: req,
        v_tilde: result.v_tilde.clone(),
        bound_states: result
            .bounds_tilde
            .iter()
            .zip(&result.c2_marchenko_tilde)
            .map(|(b, &m2)| BoundStateJson {
                z: b.z,
                lambda: b.lambda,
                c2: b.c2_gl,
                c2_marchenko: m2,
            })
            .collect(),
        compact: result.diagnostics.compact,
        definiteness_margin: result.diagnostics.definiteness_margin,
        accumulator_residual: result.diagnostics.accumulator_residual,
        blaschke_residual: result.diagnostics.blaschke_residual,
        density_mass: result.density_tilde.mass,
    }
}

/// CSV with fixed header `theta,phi`.
pub fn phase_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("theta,phi\n");
    for (theta, phi) in samples {
        out.push_str(&format!("{theta},{phi}\n"));
    }
    out
}

/// CSV with fixed header `lambda,weight`.
pub fn density_csv(density: &crate::density::SpectralDensity, samples: usize) -> String {
    let mut out = String::from("lambda,weight\n");
    for i in 0..samples {
        let lambda = 4.0 * (i as f64 + 0.5) / samples as f64;
        out.push_str(&format!("{lambda},{}\n", density.weight(lambda)));
    }
    out
}

/// CSV with fixed header `n,V`.
pub fn potential_csv(values: &[f64]) -> String {
    let mut out = String::from("n,V\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{v}\n", i + 1));
    }
    out
}
