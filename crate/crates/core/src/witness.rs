//! Closed-form optimal witnesses for two-setting one-click assemblages on a
//! qubit.
//!
//! All operators are written in a fixed orthonormal frame {|e₀⟩, |e₁⟩} of
//! Bob's space, normally the Schmidt basis with |e₀⟩ the leading vector.
//! With V̂ = |e₀⟩⟨e₁| + |e₁⟩⟨e₀| and σ̃_z = |e₀⟩⟨e₀| − |e₁⟩⟨e₁|, the
//! witness family is
//!
//! ```text
//! F_{+|0} =  a|e₀⟩⟨e₀| + b V̂ + c|e₁⟩⟨e₁|
//! F_{+|1} = −a|e₀⟩⟨e₀| − b V̂ + c|e₁⟩⟨e₁|
//! F_{∅|0} = 2a|e₀⟩⟨e₀|,   F_{∅|1} = 0
//! a = (1 − cos γ/2)/8,  b = sin(γ/2)/8,  c = (1 + cos γ/2)/8
//! ```
//!
//! For any two-setting assemblage its value is
//! ¼[λ₀ − ⟨σ̃_z σ_+⟩ − cos(γ/2) K₊ + sin(γ/2) D] where λ₀ = ⟨e₀|ρ_B|e₀⟩,
//! ⟨·⟩ averages over settings, K₊ = λ₀ − ⟨Tr σ_+⟩ and
//! D = ½ Tr[V̂(σ_{+|0} − σ_{+|1})]. Minimising over γ gives
//! γ = 2 atan2(−D, K₊) and the value ¼(λ₀ − ⟨σ̃_z σ_+⟩ − √(D² + K₊²)).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, re, trace_product, ComplexMatrix, C64};
use crate::quantum::{Assemblage, SchmidtState};
use crate::tol;

/// Orthonormal qubit frame used to write witnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitFrame {
    pub e0: Vec<C64>,
    pub e1: Vec<C64>,
}

impl QubitFrame {
    pub fn computational() -> Self {
        QubitFrame {
            e0: vec![re(1.0), re(0.0)],
            e1: vec![re(0.0), re(1.0)],
        }
    }

    /// Bob's two leading Schmidt vectors.
    pub fn from_state(state: &SchmidtState) -> Result<Self> {
        if state.dim_b() != 2 || state.basis_b().len() < 2 {
            return Err(Error::DimensionMismatch("witness frame needs a qubit on Bob's side".into()));
        }
        Self::new(state.basis_b()[0].clone(), state.basis_b()[1].clone())
    }

    pub fn new(e0: Vec<C64>, e1: Vec<C64>) -> Result<Self> {
        if e0.len() != 2 || e1.len() != 2 {
            return Err(Error::DimensionMismatch("frame vectors must be qubit vectors".into()));
        }
        let err = (inner(&e0, &e0) - re(1.0)).norm()
            + (inner(&e1, &e1) - re(1.0)).norm()
            + inner(&e0, &e1).norm();
        if err > 1e-11 {
            return Err(Error::param("frame", err, "frame vectors must be orthonormal"));
        }
        Ok(QubitFrame { e0, e1 })
    }

    pub fn p0(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.e0)
    }

    pub fn p1(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.e1)
    }

    /// V̂ = |e₀⟩⟨e₁| + |e₁⟩⟨e₀|
    pub fn flip(&self) -> ComplexMatrix {
        &ComplexMatrix::outer(&self.e0, &self.e1) + &ComplexMatrix::outer(&self.e1, &self.e0)
    }

    /// σ̃_z = |e₀⟩⟨e₀| − |e₁⟩⟨e₁|
    pub fn sigma_z(&self) -> ComplexMatrix {
        &self.p0() - &self.p1()
    }

    /// ⟨e₀|M|e₀⟩
    pub fn leading_weight(&self, m: &ComplexMatrix) -> f64 {
        m.sandwich(&self.e0, &self.e0).re
    }
}

/// The four witness operators and the γ they were built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(rename = "F_click_0")]
    pub f_click_0: ComplexMatrix,
    #[serde(rename = "F_click_1")]
    pub f_click_1: ComplexMatrix,
    #[serde(rename = "F_null_0")]
    pub f_null_0: ComplexMatrix,
    #[serde(rename = "F_null_1")]
    pub f_null_1: ComplexMatrix,
    pub gamma: f64,
}

impl Witness {
    /// F indexed as `[x][a]` with a = 0 click, 1 null.
    pub fn operators(&self) -> [[&ComplexMatrix; 2]; 2] {
        [
            [&self.f_click_0, &self.f_null_0],
            [&self.f_click_1, &self.f_null_1],
        ]
    }

    /// Σ_λ Σ_{a,x} D(a|x,λ) Tr F_{a|x}; each (a, x) occurs in two strategies.
    pub fn normalisation(&self) -> f64 {
        2.0 * self
            .operators()
            .iter()
            .flatten()
            .map(|f| f.trace().re)
            .sum::<f64>()
    }

    /// Σ_{a,x} D(a|x,λ) F_{a|x} for λ = 0..4, in the order
    /// (+,+), (+,∅), (∅,+), (∅,∅) of outcomes for settings (0, 1).
    pub fn strategy_sums(&self) -> [ComplexMatrix; 4] {
        let f = self.operators();
        [(0, 0), (0, 1), (1, 0), (1, 1)].map(|(a0, a1)| f[0][a0] + f[1][a1])
    }

    /// Smallest eigenvalue among the strategy sums.
    pub fn min_strategy_eigenvalue(&self) -> Result<f64> {
        let mut m = f64::INFINITY;
        for s in self.strategy_sums() {
            m = m.min(s.min_eigenvalue()?);
        }
        Ok(m)
    }

    /// Normalisation within tolerance and every strategy sum PSD.
    pub fn is_dual_feasible(&self) -> Result<bool> {
        Ok((self.normalisation() - 1.0).abs() <= tol::WITNESS_NORMALISATION
            && self.min_strategy_eigenvalue()? >= -tol::WITNESS_PSD)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringResult {
    pub parameter: f64,
    pub witness: Witness,
    pub steerable: bool,
}

/// Statistics entering the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub lambda0: f64,
    /// ½ Tr[V̂(σ_{+|0} − σ_{+|1})]
    pub d: f64,
    pub k_plus: f64,
    /// Setting average of Tr[σ̃_z σ_{+|x}].
    pub sigma_z_mean: f64,
    pub gamma: f64,
    pub value: f64,
    /// Largest setting difference of Tr[σ̃_z σ_{+|x}] and Tr σ_{+|x}.
    pub asymmetry: f64,
    pub asymmetric: bool,
}

fn check_shape(asm: &Assemblage) -> Result<()> {
    if asm.settings() != 2 || asm.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "closed-form witness needs two settings on a qubit, got X = {} and d_B = {}",
            asm.settings(),
            asm.dim()
        )));
    }
    Ok(())
}

/// Closed-form statistics, γ and optimal value in the given frame.
pub fn closed_form_in(asm: &Assemblage, lambda0: f64, frame: &QubitFrame) -> Result<ClosedForm> {
    check_shape(asm)?;
    let v = frame.flip();
    let sz = frame.sigma_z();
    let s0 = asm.click(0);
    let s1 = asm.click(1);
    let d = 0.5 * (trace_product(&v, s0) - trace_product(&v, s1)).re;
    let z0 = trace_product(&sz, s0).re;
    let z1 = trace_product(&sz, s1).re;
    let t0 = s0.trace().re;
    let t1 = s1.trace().re;
    let k_plus = lambda0 - 0.5 * (t0 + t1);
    if k_plus < -tol::K_PLUS {
        return Err(Error::param(
            "K_plus",
            k_plus,
            "click traces exceed the declared leading eigenvalue",
        ));
    }
    let k_plus = k_plus.max(0.0);
    let sigma_z_mean = 0.5 * (z0 + z1);
    let asymmetry = (z0 - z1).abs().max((t0 - t1).abs());
    let gamma = 2.0 * (-d).atan2(k_plus);
    let value = 0.25 * (lambda0 - sigma_z_mean - d.hypot(k_plus));
    Ok(ClosedForm {
        lambda0,
        d,
        k_plus,
        sigma_z_mean,
        gamma,
        value,
        asymmetry,
        asymmetric: asymmetry > tol::SETTING_ASYMMETRY,
    })
}

pub fn closed_form(asm: &Assemblage, lambda0: f64) -> Result<ClosedForm> {
    closed_form_in(asm, lambda0, &QubitFrame::computational())
}

/// γ = 2 atan2(−D, K₊) ∈ [−π, π].
pub fn gamma_parameter(asm: &Assemblage, lambda0: f64) -> Result<f64> {
    Ok(closed_form(asm, lambda0)?.gamma)
}

/// μ* = ¼(λ₀ − ⟨Tr σ̃_z σ_+⟩ − √(D² + K₊²)).
pub fn primal_value(asm: &Assemblage, lambda0: f64) -> Result<f64> {
    Ok(closed_form(asm, lambda0)?.value)
}

pub fn optimal_witness_in(gamma: f64, frame: &QubitFrame) -> Result<Witness> {
    let pi = std::f64::consts::PI;
    if !(gamma >= -pi - 1e-12 && gamma <= pi + 1e-12) {
        return Err(Error::param("gamma", gamma, "must lie in [-pi, pi]"));
    }
    let (s, c) = (gamma / 2.0).sin_cos();
    let a = (1.0 - c) / 8.0;
    let b = s / 8.0;
    let cc = (1.0 + c) / 8.0;
    let p0 = frame.p0();
    let p1 = frame.p1();
    let v = frame.flip();
    let f0 = &(&p0.scale(a) + &v.scale(b)) + &p1.scale(cc);
    let f1 = &(&p0.scale(-a) + &v.scale(-b)) + &p1.scale(cc);
    Ok(Witness {
        f_click_0: f0,
        f_click_1: f1,
        f_null_0: p0.scale(2.0 * a),
        f_null_1: ComplexMatrix::zeros(2),
        gamma,
    })
}

pub fn optimal_witness(gamma: f64) -> Result<Witness> {
    optimal_witness_in(gamma, &QubitFrame::computational())
}

/// Σ_{a,x} Tr[F_{a|x} σ_{a|x}], steerable when below −margin.
pub fn steering_parameter_with_margin(w: &Witness, asm: &Assemblage, margin: f64) -> Result<SteeringResult> {
    check_shape(asm)?;
    let f = w.operators();
    let mut parameter = 0.0;
    for (x, fx) in f.iter().enumerate() {
        for (a, fa) in fx.iter().enumerate() {
            parameter += trace_product(fa, &asm.members()[x][a]).re;
        }
    }
    Ok(SteeringResult {
        parameter,
        witness: w.clone(),
        steerable: parameter < -margin,
    })
}

pub fn steering_parameter(w: &Witness, asm: &Assemblage) -> Result<SteeringResult> {
    steering_parameter_with_margin(w, asm, 0.0)
}

/// Builds the optimal witness for `asm` in `frame` with λ₀ = ⟨e₀|ρ_B|e₀⟩ and
/// evaluates it.
pub fn evaluate_in_frame(asm: &Assemblage, frame: &QubitFrame) -> Result<SteeringResult> {
    let lambda0 = frame.leading_weight(asm.rho_b());
    let cf = closed_form_in(asm, lambda0, frame)?;
    let w = optimal_witness_in(cf.gamma, frame)?;
    steering_parameter(&w, asm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{steered_assemblage, MeasurementFamily};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn maxent(eps: f64, delta: f64) -> Assemblage {
        let s = SchmidtState::phi_plus_alpha(FRAC_PI_4).unwrap();
        steered_assemblage(&s, &MeasurementFamily::one_click(2, delta, eps).unwrap()).unwrap()
    }

    #[test]
    fn gamma_zero_witness() {
        let w = optimal_witness(0.0).unwrap();
        let quarter = ComplexMatrix::diag(&[0.0, 0.25]);
        assert!((&w.f_click_0 - &quarter).max_abs() < 1e-16);
        assert!((&w.f_click_1 - &quarter).max_abs() < 1e-16);
        assert!(w.f_null_0.max_abs() < 1e-16);
    }

    #[test]
    fn zero_efficiency() {
        let a = maxent(0.0, 1.0);
        let cf = closed_form(&a, 0.5).unwrap();
        assert_eq!(cf.d, 0.0);
        assert_eq!(cf.gamma, 0.0);
        assert!(cf.value.abs() < 1e-16);
    }

    #[test]
    fn witness_value_equals_closed_form() {
        let a = maxent(0.8, FRAC_PI_2);
        let cf = closed_form(&a, 0.5).unwrap();
        let w = optimal_witness(cf.gamma).unwrap();
        assert!(w.is_dual_feasible().unwrap());
        let r = steering_parameter(&w, &a).unwrap();
        assert!((r.parameter - cf.value).abs() < 1e-14);
        assert!(r.steerable);
    }

    #[test]
    fn gamma_antisymmetric_under_swap() {
        let a = maxent(0.7, 1.2);
        let b = a.permute_settings(&[1, 0]).unwrap();
        let g = gamma_parameter(&a, 0.5).unwrap();
        let h = gamma_parameter(&b, 0.5).unwrap();
        assert!(g.abs() > 1e-3);
        assert!((g + h).abs() < 1e-14);
    }

    #[test]
    fn boundary_sign() {
        let delta: f64 = 1.0;
        let eb = 1.0 / (1.0 + (delta / 2.0).cos());
        assert!(primal_value(&maxent(eb - 1e-4, delta), 0.5).unwrap() > 0.0);
        assert!(primal_value(&maxent(eb + 1e-4, delta), 0.5).unwrap() < 0.0);
        assert!(primal_value(&maxent(eb, delta), 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dual_feasible_for_any_gamma() {
        for i in 0..=40 {
            let g = -PI + 2.0 * PI * i as f64 / 40.0;
            let w = optimal_witness(g).unwrap();
            assert!((w.normalisation() - 1.0).abs() < 1e-14);
            assert!(w.min_strategy_eigenvalue().unwrap() >= -1e-15);
            let s = &w.f_click_0 + &w.f_click_1;
            assert!(s.min_eigenvalue().unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_inconsistent_lambda0() {
        let a = maxent(0.9, 1.0);
        assert!(closed_form(&a, 0.2).is_err());
    }
}
