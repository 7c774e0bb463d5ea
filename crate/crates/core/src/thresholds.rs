//! Efficiency thresholds for one-click steering.
//!
//! An assemblage produced by rank-one click effects εΠ_x on a pure entangled
//! state admits an LHS model exactly when ε ≤ 1/λ_max(Σ_x Π_x).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, hs_inner, ComplexMatrix};
use crate::quantum::MeasurementFamily;
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub epsilon_star: f64,
    pub lambda_max: f64,
    pub lambda_minus: f64,
    #[serde(rename = "X")]
    pub settings: usize,
    pub overlap_sum: f64,
}

fn projector_sum(family: &MeasurementFamily) -> Result<(ComplexMatrix, Vec<ComplexMatrix>)> {
    let projectors: Vec<ComplexMatrix> =
        (0..family.settings()).map(|x| family.plane_projector(x)).collect();
    for p in &projectors {
        let ev = p.eigenvalues()?;
        if (ev[0] - 1.0).abs() > tol::RANK_ONE || ev[1].abs() > tol::RANK_ONE {
            return Err(Error::param("projector", ev[1], "click projectors must be rank one"));
        }
    }
    let mut sum = ComplexMatrix::zeros(2);
    for p in &projectors {
        sum += p;
    }
    Ok((sum, projectors))
}

/// Σ_{x,x'} ⟨Π_x, Π_x'⟩
pub fn overlap_sum(family: &MeasurementFamily) -> Result<f64> {
    let (_, ps) = projector_sum(family)?;
    let mut s = 0.0;
    for a in &ps {
        for b in &ps {
            s += hs_inner(a, b)?.re;
        }
    }
    Ok(s)
}

/// Both non-zero eigenvalues of Σ_x Π_x from the pairwise overlaps alone:
/// λ± = ½(X ± √(2Σ⟨Π_x,Π_x'⟩ − X²)).
pub fn projector_sum_spectrum(family: &MeasurementFamily) -> Result<(f64, f64)> {
    let x = family.settings() as f64;
    let disc = 2.0 * overlap_sum(family)? - x * x;
    if disc < -tol::DISCRIMINANT {
        return Err(Error::NegativeDiscriminant(disc));
    }
    let root = disc.max(0.0).sqrt();
    Ok((0.5 * (x + root), 0.5 * (x - root)))
}

/// ε* = 1/λ_max(Σ_x Π_x), with λ_max from direct diagonalisation.
pub fn cutoff_efficiency(family: &MeasurementFamily) -> Result<ThresholdReport> {
    let (sum, _) = projector_sum(family)?;
    let eig = eig_hermitian(&sum)?;
    Ok(ThresholdReport {
        epsilon_star: 1.0 / eig.values[0],
        lambda_max: eig.values[0],
        lambda_minus: eig.values[1],
        settings: family.settings(),
        overlap_sum: overlap_sum(family)?,
    })
}

/// λ_max for the equally spaced family: ½(X + sin(Xδ/2)/sin(δ/2)).
///
/// δ below 1e-8 (including δ = 0) returns the limit X.
pub fn lambda_max_equal_spaced(settings: usize, delta: f64) -> Result<f64> {
    if settings < 2 {
        return Err(Error::param("X", settings as f64, "at least two settings required"));
    }
    let x = settings as f64;
    let upper = 2.0 * std::f64::consts::PI / x;
    if !(delta >= 0.0 && delta < upper) {
        return Err(Error::param("delta", delta, format!("spacing must lie in [0, {upper})")));
    }
    if delta < tol::SMALL_SPACING {
        return Ok(x);
    }
    Ok(0.5 * (x + (x * delta / 2.0).sin() / (delta / 2.0).sin()))
}

/// Infimum of the cutoff over equally spaced families: 1/X.
pub fn asymptotic_threshold(settings: usize) -> Result<f64> {
    if settings < 2 {
        return Err(Error::param("X", settings as f64, "at least two settings required"));
    }
    Ok(1.0 / settings as f64)
}

/// Number of detection patterns A^X · B^Y.
pub fn complexity_cost(a: u32, x: u32, b: u32, y: u32) -> u64 {
    (a as u64).pow(x) * (b as u64).pow(y)
}
