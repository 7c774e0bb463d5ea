//! Pure bipartite states, one-click measurement families, Bob's POVM and
//! the assemblages they generate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, kron_vec, re, ComplexMatrix, C64};
use crate::tol;

/// Outcome of a one-click measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Click,
    Null,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Click, Outcome::Null];

    pub fn index(self) -> usize {
        match self {
            Outcome::Click => 0,
            Outcome::Null => 1,
        }
    }
}

/// Bipartite pure state Σ_i √λ_i |α_i⟩|β_i⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchmidtRecord", into = "SchmidtRecord")]
pub struct SchmidtState {
    coeffs: Vec<f64>,
    dim_a: usize,
    dim_b: usize,
    basis_a: Vec<Vec<C64>>,
    basis_b: Vec<Vec<C64>>,
}

#[derive(Serialize, Deserialize)]
struct SchmidtRecord {
    coeffs: Vec<f64>,
    dim_a: usize,
    dim_b: usize,
    basis_a: Vec<Vec<C64>>,
    basis_b: Vec<Vec<C64>>,
}

impl TryFrom<SchmidtRecord> for SchmidtState {
    type Error = Error;
    fn try_from(r: SchmidtRecord) -> Result<Self> {
        let s = SchmidtState::new(r.coeffs, r.basis_a, r.basis_b)?;
        if s.dim_a != r.dim_a || s.dim_b != r.dim_b {
            return Err(Error::DimensionMismatch(format!(
                "declared dims {}x{} but basis vectors give {}x{}",
                r.dim_a, r.dim_b, s.dim_a, s.dim_b
            )));
        }
        Ok(s)
    }
}

impl From<SchmidtState> for SchmidtRecord {
    fn from(s: SchmidtState) -> Self {
        SchmidtRecord {
            coeffs: s.coeffs,
            dim_a: s.dim_a,
            dim_b: s.dim_b,
            basis_a: s.basis_a,
            basis_b: s.basis_b,
        }
    }
}

fn check_orthonormal(basis: &[Vec<C64>], side: &str) -> Result<usize> {
    let dim = basis.first().map(Vec::len).unwrap_or(0);
    if dim == 0 || dim > crate::linalg::MAX_DIM {
        return Err(Error::DimensionMismatch(format!("{side} basis has dimension {dim}")));
    }
    for (i, u) in basis.iter().enumerate() {
        if u.len() != dim {
            return Err(Error::DimensionMismatch(format!("{side} basis vectors differ in length")));
        }
        for (j, v) in basis.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            let err = (inner(u, v) - re(expect)).norm();
            if err > tol::UNIT_NORM * 10.0 {
                return Err(Error::param(
                    "basis",
                    err,
                    format!("{side} basis is not orthonormal at ({i},{j})"),
                ));
            }
        }
    }
    Ok(dim)
}

impl SchmidtState {
    /// Coefficients are sorted into descending order together with their
    /// basis vectors; equal coefficients keep their input order.
    pub fn new(coeffs: Vec<f64>, basis_a: Vec<Vec<C64>>, basis_b: Vec<Vec<C64>>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() != basis_a.len() || coeffs.len() != basis_b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients, {} + {} basis vectors",
                coeffs.len(),
                basis_a.len(),
                basis_b.len()
            )));
        }
        if let Some(&bad) = coeffs.iter().find(|&&l| l.is_nan() || l < 0.0 || !l.is_finite()) {
            return Err(Error::param("coeffs", bad, "Schmidt coefficients must be non-negative"));
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > tol::SCHMIDT_SUM {
            return Err(Error::param("coeffs", sum, "Schmidt coefficients must sum to 1"));
        }
        let dim_a = check_orthonormal(&basis_a, "Alice")?;
        let dim_b = check_orthonormal(&basis_b, "Bob")?;
        if dim_a * dim_b > crate::linalg::MAX_DIM {
            return Err(Error::DimensionMismatch(format!(
                "joint dimension {dim_a}x{dim_b} exceeds {}",
                crate::linalg::MAX_DIM
            )));
        }
        let mut order: Vec<usize> = (0..coeffs.len()).collect();
        order.sort_by(|&i, &j| coeffs[j].total_cmp(&coeffs[i]));
        Ok(SchmidtState {
            coeffs: order.iter().map(|&i| coeffs[i]).collect(),
            dim_a,
            dim_b,
            basis_a: order.iter().map(|&i| basis_a[i].clone()).collect(),
            basis_b: order.iter().map(|&i| basis_b[i].clone()).collect(),
        })
    }

    /// cos α |HH⟩ + sin α |VV⟩ for α ∈ [0, π/4].
    pub fn phi_plus_alpha(alpha: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::FRAC_PI_4 + 1e-15).contains(&alpha) {
            return Err(Error::param("alpha", alpha, "must lie in [0, pi/4]"));
        }
        let (s, c) = alpha.sin_cos();
        let h = vec![re(1.0), re(0.0)];
        let v = vec![re(0.0), re(1.0)];
        Self::new(
            vec![c * c, s * s],
            vec![h.clone(), v.clone()],
            vec![h, v],
        )
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn basis_a(&self) -> &[Vec<C64>] {
        &self.basis_a
    }

    pub fn basis_b(&self) -> &[Vec<C64>] {
        &self.basis_b
    }

    /// Largest Schmidt coefficient.
    pub fn lambda0(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn is_entangled(&self) -> bool {
        self.coeffs.get(1).is_some_and(|&l| l > tol::SCHMIDT_NONZERO)
    }

    /// Generalised concurrence √(2(1 − Σλ²)); equals sin 2α for the qubit family.
    pub fn concurrence(&self) -> f64 {
        let purity: f64 = self.coeffs.iter().map(|l| l * l).sum();
        (2.0 * (1.0 - purity)).max(0.0).sqrt()
    }

    /// State vector in C^{d_A} ⊗ C^{d_B}.
    pub fn vector(&self) -> Vec<C64> {
        let mut psi = vec![C64::default(); self.dim_a * self.dim_b];
        for ((l, a), b) in self.coeffs.iter().zip(&self.basis_a).zip(&self.basis_b) {
            for (p, z) in psi.iter_mut().zip(kron_vec(a, b)) {
                *p += z * l.sqrt();
            }
        }
        psi
    }

    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.vector())
    }

    pub fn rho_b(&self) -> ComplexMatrix {
        let mut rho = ComplexMatrix::zeros(self.dim_b);
        for (l, b) in self.coeffs.iter().zip(&self.basis_b) {
            rho += &ComplexMatrix::projector(b).scale(*l);
        }
        rho
    }
}

/// X one-click measurements with rank-one click projectors in the plane
/// spanned by Alice's two leading Schmidt vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFamily {
    amplitude_angles: Vec<f64>,
    efficiency: f64,
}

fn check_efficiency(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("epsilon", eps, "efficiency must lie in [0, 1]"));
    }
    Ok(())
}

impl MeasurementFamily {
    /// Arbitrary distinct amplitude angles μ_x; click vector (cos μ/2, sin μ/2).
    pub fn from_angles(angles: Vec<f64>, efficiency: f64) -> Result<Self> {
        if angles.len() < 2 {
            return Err(Error::param("X", angles.len() as f64, "at least two settings required"));
        }
        check_efficiency(efficiency)?;
        for (i, a) in angles.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::param("amplitude_angle", *a, "must be finite"));
            }
            for b in &angles[i + 1..] {
                // Angles differing by 2π give the same projector.
                let d = ((a - b) / 2.0).sin().abs();
                if d < 1e-15 {
                    return Err(Error::param("amplitude_angle", *b, "click projectors must be distinct"));
                }
            }
        }
        Ok(MeasurementFamily {
            amplitude_angles: angles,
            efficiency,
        })
    }

    /// Equally spaced family μ_x = (x − (X−1)/2)·δ with 0 < δ < 2π/X.
    pub fn one_click(settings: usize, delta: f64, efficiency: f64) -> Result<Self> {
        if settings < 2 {
            return Err(Error::param("X", settings as f64, "at least two settings required"));
        }
        let upper = 2.0 * std::f64::consts::PI / settings as f64;
        if !(delta > 0.0 && delta < upper) {
            return Err(Error::param("delta", delta, format!("spacing must lie in (0, {upper})")));
        }
        let mid = (settings as f64 - 1.0) / 2.0;
        let angles = (0..settings).map(|x| (x as f64 - mid) * delta).collect();
        Self::from_angles(angles, efficiency)
    }

    /// Two-setting family written as cos θ|H⟩ ± sin θ|V⟩ (the half-wave-plate
    /// convention); setting 0 takes the + sign. Spacing δ = 4θ.
    pub fn from_hwp_angle(theta: f64, efficiency: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_4) {
            return Err(Error::param("theta", theta, "must lie in (0, pi/4)"));
        }
        Self::from_angles(vec![2.0 * theta, -2.0 * theta], efficiency)
    }

    /// Two-setting family whose click-projector overlap Tr[Π₀Π₁] is `overlap`.
    pub fn from_overlap(overlap: f64, efficiency: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&overlap) {
            return Err(Error::param("overlap", overlap, "must lie in [0, 1)"));
        }
        Self::one_click(2, delta_from_overlap(overlap), efficiency)
    }

    pub fn settings(&self) -> usize {
        self.amplitude_angles.len()
    }

    pub fn amplitude_angles(&self) -> &[f64] {
        &self.amplitude_angles
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn with_efficiency(&self, efficiency: f64) -> Result<Self> {
        check_efficiency(efficiency)?;
        Ok(MeasurementFamily {
            amplitude_angles: self.amplitude_angles.clone(),
            efficiency,
        })
    }

    /// The family measured along the orthogonal axis (μ → μ + π).
    pub fn orthogonal(&self) -> Self {
        MeasurementFamily {
            amplitude_angles: self
                .amplitude_angles
                .iter()
                .map(|m| m + std::f64::consts::PI)
                .collect(),
            efficiency: self.efficiency,
        }
    }

    /// Click-vector coordinates in the (α₀, α₁) plane.
    pub fn plane_vector(&self, x: usize) -> [f64; 2] {
        let m = self.amplitude_angles[x];
        [(m / 2.0).cos(), (m / 2.0).sin()]
    }

    /// Click vector embedded in Alice's space using the state's Schmidt basis.
    pub fn click_vector(&self, x: usize, state: &SchmidtState) -> Result<Vec<C64>> {
        if state.basis_a.len() < 2 {
            return Err(Error::DimensionMismatch(
                "click vectors need two Schmidt vectors on Alice's side".into(),
            ));
        }
        let [c0, c1] = self.plane_vector(x);
        Ok(state.basis_a[0]
            .iter()
            .zip(&state.basis_a[1])
            .map(|(a0, a1)| a0 * c0 + a1 * c1)
            .collect())
    }

    /// Π_{+|x} as a 2×2 matrix in the (α₀, α₁) plane.
    pub fn plane_projector(&self, x: usize) -> ComplexMatrix {
        let [c0, c1] = self.plane_vector(x);
        ComplexMatrix::from_real_rows(&[c0 * c0, c0 * c1, c0 * c1, c1 * c1]).expect("2x2")
    }

    /// Tr[Π_x Π_x'] for all pairs.
    pub fn overlap_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.settings();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let [a0, a1] = self.plane_vector(i);
                        let [b0, b1] = self.plane_vector(j);
                        let ip = a0 * b0 + a1 * b1;
                        ip * ip
                    })
                    .collect()
            })
            .collect()
    }

    /// Click and null effects E_{+|x} = εΠ, E_{∅|x} = I − εΠ on Alice's space.
    pub fn effects(&self, x: usize, state: &SchmidtState) -> Result<[ComplexMatrix; 2]> {
        let e = self.click_vector(x, state)?;
        let click = ComplexMatrix::projector(&e).scale(self.efficiency);
        let null = &ComplexMatrix::identity(state.dim_a) - &click;
        Ok([click, null])
    }
}

/// δ such that cos²(δ/2) = overlap.
pub fn delta_from_overlap(overlap: f64) -> f64 {
    2.0 * overlap.clamp(0.0, 1.0).sqrt().acos()
}

/// cos²(δ/2)
pub fn overlap_from_delta(delta: f64) -> f64 {
    let c = (delta / 2.0).cos();
    c * c
}

/// Positive operators on Bob's space summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = effects
            .first()
            .map(ComplexMatrix::dim)
            .ok_or_else(|| Error::DimensionMismatch("empty POVM".into()))?;
        let mut sum = ComplexMatrix::zeros(dim);
        for e in &effects {
            sum = sum.try_add(e)?;
            let min = e.min_eigenvalue()?;
            if min < -tol::POVM_PSD {
                return Err(Error::NotPositive { min_eigenvalue: min });
            }
        }
        let err = (&sum - &ComplexMatrix::identity(dim)).max_abs();
        if err > tol::POVM_COMPLETENESS {
            return Err(Error::param("povm", err, "effects do not sum to the identity"));
        }
        Ok(Povm { effects })
    }

    /// (2/3)|e_b⟩⟨e_b| with e₀ = |V⟩, e₁,₂ = (√3/2)|H⟩ ± ½|V⟩.
    pub fn trine() -> Self {
        let r3 = 3f64.sqrt() / 2.0;
        let vs = [[0.0, 1.0], [r3, 0.5], [r3, -0.5]];
        let effects = vs
            .iter()
            .map(|v| ComplexMatrix::projector(&[re(v[0]), re(v[1])]).scale(2.0 / 3.0))
            .collect();
        Povm::new(effects).expect("trine is a valid POVM")
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }
}

/// Bob's unnormalised conditional states σ_{a|x}, stored as `[click, null]`
/// per setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssemblageRecord", into = "AssemblageRecord")]
pub struct Assemblage {
    members: Vec<[ComplexMatrix; 2]>,
    rho_b: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct AssemblageRecord {
    dim_b: usize,
    members: Vec<[ComplexMatrix; 2]>,
}

impl TryFrom<AssemblageRecord> for Assemblage {
    type Error = Error;
    fn try_from(r: AssemblageRecord) -> Result<Self> {
        let a = Assemblage::new(r.members)?;
        if a.dim() != r.dim_b {
            return Err(Error::DimensionMismatch(format!(
                "declared dim_b {} but members are {}x{}",
                r.dim_b,
                a.dim(),
                a.dim()
            )));
        }
        Ok(a)
    }
}

impl From<Assemblage> for AssemblageRecord {
    fn from(a: Assemblage) -> Self {
        AssemblageRecord {
            dim_b: a.dim(),
            members: a.members,
        }
    }
}

impl Assemblage {
    /// Validates positivity and no-signalling; ρ_B is the setting average.
    pub fn new(members: Vec<[ComplexMatrix; 2]>) -> Result<Self> {
        let asm = Self::new_unchecked(members)?;
        asm.validate()?;
        Ok(asm)
    }

    /// Only shapes and Hermiticity are checked.
    pub fn new_unchecked(members: Vec<[ComplexMatrix; 2]>) -> Result<Self> {
        let dim = members
            .first()
            .map(|m| m[0].dim())
            .ok_or_else(|| Error::DimensionMismatch("assemblage needs at least one setting".into()))?;
        let mut rho = ComplexMatrix::zeros(dim);
        for m in &members {
            for s in m {
                if s.dim() != dim {
                    return Err(Error::DimensionMismatch("assemblage members differ in size".into()));
                }
                if !s.is_hermitian() {
                    return Err(Error::NotHermitian {
                        max_asymmetry: s.max_asymmetry(),
                    });
                }
            }
            rho += &(&m[0] + &m[1]);
        }
        let rho_b = rho.scale(1.0 / members.len() as f64);
        Ok(Assemblage { members, rho_b })
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.members {
            for s in m {
                let min = s.min_eigenvalue()?;
                if min < -tol::PSD {
                    return Err(Error::NotPositive { min_eigenvalue: min });
                }
            }
        }
        let residual = self.signalling_residual();
        if residual > tol::NO_SIGNALLING {
            return Err(Error::Signalling { residual });
        }
        Ok(())
    }

    /// max_x ‖Σ_a σ_{a|x} − ρ_B‖_∞
    pub fn signalling_residual(&self) -> f64 {
        self.members
            .iter()
            .map(|m| (&(&m[0] + &m[1]) - &self.rho_b).max_abs())
            .fold(0.0, f64::max)
    }

    pub fn settings(&self) -> usize {
        self.members.len()
    }

    pub fn dim(&self) -> usize {
        self.rho_b.dim()
    }

    pub fn member(&self, a: Outcome, x: usize) -> &ComplexMatrix {
        &self.members[x][a.index()]
    }

    pub fn click(&self, x: usize) -> &ComplexMatrix {
        &self.members[x][0]
    }

    pub fn null(&self, x: usize) -> &ComplexMatrix {
        &self.members[x][1]
    }

    pub fn members(&self) -> &[[ComplexMatrix; 2]] {
        &self.members
    }

    pub fn rho_b(&self) -> &ComplexMatrix {
        &self.rho_b
    }

    /// True when every member has vanishing imaginary part.
    pub fn is_real(&self) -> bool {
        self.members
            .iter()
            .flatten()
            .all(|m| m.max_imag() <= tol::HERMITIAN)
    }

    /// Assemblage with settings in the given order.
    pub fn permute_settings(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.settings() {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        Self::new_unchecked(order.iter().map(|&x| self.members[x].clone()).collect())
    }
}

/// σ_{+|x} = ε √ρ_B Π^T √ρ_B in Bob's Schmidt basis, σ_{∅|x} = ρ_B − σ_{+|x}.
///
/// Built directly from the Schmidt decomposition:
/// σ_{+|x} = ε Σ_ij √(λ_iλ_j) ⟨α_j|Π_x|α_i⟩ |β_i⟩⟨β_j|.
pub fn steered_assemblage(state: &SchmidtState, family: &MeasurementFamily) -> Result<Assemblage> {
    let d = state.coeffs.len();
    if d < 2 {
        return Err(Error::DimensionMismatch(
            "one-click families need a Schmidt rank-2 support".into(),
        ));
    }
    let rho_b = state.rho_b();
    let mut members = Vec::with_capacity(family.settings());
    for x in 0..family.settings() {
        let e = family.click_vector(x, state)?;
        // ⟨α_i|e⟩ amplitudes.
        let amp: Vec<C64> = state.basis_a.iter().map(|a| inner(a, &e)).collect();
        let mut click = ComplexMatrix::zeros(state.dim_b);
        for i in 0..d {
            for j in 0..d {
                // ⟨α_j|Π|α_i⟩ = ⟨α_j|e⟩⟨e|α_i⟩
                let pij = amp[j] * amp[i].conj();
                let w = (state.coeffs[i] * state.coeffs[j]).sqrt() * family.efficiency;
                if w == 0.0 {
                    continue;
                }
                click += &ComplexMatrix::outer(&state.basis_b[i], &state.basis_b[j]).scale_c(pij * w);
            }
        }
        let click = click.hermitian_part();
        let null = &rho_b - &click;
        members.push([click, null]);
    }
    let mut asm = Assemblage::new_unchecked(members)?;
    asm.rho_b = rho_b;
    asm.validate()?;
    Ok(asm)
}

/// Effect traces Tr[E_{a|x}] for each setting, `[click, null]`.
pub fn effect_traces(family: &MeasurementFamily, dim_a: usize) -> Vec<[f64; 2]> {
    let eps = family.efficiency();
    vec![[eps, dim_a as f64 - eps]; family.settings()]
}

/// σ_{a|x} → (1−η)σ_{a|x} + η Tr[E_{a|x}] I/(d_A d_B).
pub fn add_white_noise_with_traces(
    asm: &Assemblage,
    traces: &[[f64; 2]],
    eta: f64,
    dim_a: usize,
) -> Result<Assemblage> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param("eta", eta, "noise fraction must lie in [0, 1]"));
    }
    if traces.len() != asm.settings() {
        return Err(Error::DimensionMismatch("one trace pair per setting required".into()));
    }
    let d_b = asm.dim();
    let id = ComplexMatrix::identity(d_b);
    let norm = (dim_a * d_b) as f64;
    let members = asm
        .members
        .iter()
        .zip(traces)
        .map(|(m, t)| {
            [0, 1].map(|a| &m[a].scale(1.0 - eta) + &id.scale(eta * t[a] / norm))
        })
        .collect();
    Assemblage::new(members)
}

pub fn add_white_noise_assemblage(
    asm: &Assemblage,
    family: &MeasurementFamily,
    eta: f64,
    dim_a: usize,
    dim_b: usize,
) -> Result<Assemblage> {
    if dim_b != asm.dim() {
        return Err(Error::DimensionMismatch(format!(
            "d_B = {dim_b} but assemblage is {}x{}",
            asm.dim(),
            asm.dim()
        )));
    }
    if family.settings() != asm.settings() {
        return Err(Error::DimensionMismatch("family and assemblage settings differ".into()));
    }
    add_white_noise_with_traces(asm, &effect_traces(family, dim_a), eta, dim_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn phi_plus_coefficients() {
        let s = SchmidtState::phi_plus_alpha(FRAC_PI_4).unwrap();
        assert!((s.coeffs()[0] - 0.5).abs() < 1e-15 && (s.coeffs()[1] - 0.5).abs() < 1e-15);
        assert!(s.is_entangled());
        let p = SchmidtState::phi_plus_alpha(0.0).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 0.0]);
        assert!(!p.is_entangled());
        let q = SchmidtState::phi_plus_alpha(0.31).unwrap();
        assert!((q.coeffs()[0] - 0.31f64.cos().powi(2)).abs() < 1e-15);
        assert!((q.concurrence() - 0.62f64.sin()).abs() < 1e-12);
        assert!(SchmidtState::phi_plus_alpha(1.0).is_err());
        assert!(SchmidtState::phi_plus_alpha(-0.1).is_err());
    }

    #[test]
    fn degenerate_order_follows_input() {
        let s = SchmidtState::phi_plus_alpha(FRAC_PI_4).unwrap();
        assert_eq!(s.basis_b()[0], vec![re(1.0), re(0.0)]);
    }

    #[test]
    fn hwp_convention_is_quadruple_spacing() {
        let f = MeasurementFamily::from_hwp_angle(0.2, 0.7).unwrap();
        let g = MeasurementFamily::one_click(2, 0.8, 0.7).unwrap();
        let ov_f = f.overlap_matrix()[0][1];
        let ov_g = g.overlap_matrix()[0][1];
        assert!((ov_f - ov_g).abs() < 1e-15);
        assert!((f.plane_vector(0)[1] - 0.2f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn family_range_checks() {
        assert!(MeasurementFamily::one_click(2, PI, 0.5).is_err());
        assert!(MeasurementFamily::one_click(2, 0.0, 0.5).is_err());
        assert!(MeasurementFamily::one_click(1, 0.1, 0.5).is_err());
        assert!(MeasurementFamily::one_click(2, 1.0, 1.5).is_err());
        assert!(MeasurementFamily::from_angles(vec![0.3, 0.3], 0.5).is_err());
    }

    #[test]
    fn orthogonal_click_vectors_complete() {
        let f = MeasurementFamily::from_angles(vec![-PI / 2.0, PI / 2.0], 1.0).unwrap();
        let sum = &f.plane_projector(0) + &f.plane_projector(1);
        assert!((&sum - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn trine_complete() {
        let t = Povm::trine();
        let mut sum = ComplexMatrix::zeros(2);
        for e in t.effects() {
            assert!((e.trace().re - 2.0 / 3.0).abs() < 1e-15);
            sum += e;
        }
        assert!((&sum - &ComplexMatrix::identity(2)).max_abs() < 1e-12);
        let h = [re(1.0), re(0.0)];
        assert!(t.effects()[0].sandwich(&h, &h).norm() < 1e-16);
    }

    #[test]
    fn maxent_click_trace_is_half_efficiency() {
        let s = SchmidtState::phi_plus_alpha(FRAC_PI_4).unwrap();
        let f = MeasurementFamily::one_click(2, 1.1, 0.6).unwrap();
        let a = steered_assemblage(&s, &f).unwrap();
        for x in 0..2 {
            assert!((a.click(x).trace().re - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_efficiency_and_product_state() {
        let s = SchmidtState::phi_plus_alpha(0.5).unwrap();
        let f = MeasurementFamily::one_click(2, 1.0, 0.0).unwrap();
        let a = steered_assemblage(&s, &f).unwrap();
        assert!(a.click(0).max_abs() == 0.0);
        assert!((a.null(1) - &s.rho_b()).max_abs() == 0.0);

        let p = SchmidtState::phi_plus_alpha(0.0).unwrap();
        let a = steered_assemblage(&p, &f.with_efficiency(0.8).unwrap()).unwrap();
        for m in a.members().iter().flatten() {
            assert!(m[(1, 1)].norm() < 1e-15 && m[(0, 1)].norm() < 1e-15);
        }
    }

    #[test]
    fn matches_sqrt_rho_transpose_form() {
        let s = SchmidtState::phi_plus_alpha(0.4).unwrap();
        let f = MeasurementFamily::one_click(2, 0.9, 0.85).unwrap();
        let a = steered_assemblage(&s, &f).unwrap();
        let sq = s.rho_b().sqrt_psd().unwrap();
        for x in 0..2 {
            let alt = (&(&sq * &f.plane_projector(x).transpose()) * &sq).scale(0.85);
            assert!((a.click(x) - &alt).max_abs() < 1e-14);
        }
    }

    #[test]
    fn white_noise_endpoints() {
        let s = SchmidtState::phi_plus_alpha(FRAC_PI_4).unwrap();
        let f = MeasurementFamily::one_click(2, 1.0, 0.7).unwrap();
        let a = steered_assemblage(&s, &f).unwrap();
        let same = add_white_noise_assemblage(&a, &f, 0.0, 2, 2).unwrap();
        assert!((same.click(0) - a.click(0)).max_abs() < 1e-16);
        let full = add_white_noise_assemblage(&a, &f, 1.0, 2, 2).unwrap();
        let expect = ComplexMatrix::identity(2).scale(0.7 / 4.0);
        assert!((full.click(0) - &expect).max_abs() < 1e-16);
        assert!((full.click(1) - &expect).max_abs() < 1e-16);
        assert!(add_white_noise_assemblage(&a, &f, 1.2, 2, 2).is_err());
    }

    #[test]
    fn assemblage_json_round_trip() {
        let s = SchmidtState::phi_plus_alpha(0.6).unwrap();
        let f = MeasurementFamily::one_click(2, 1.3, 0.9).unwrap();
        let a = steered_assemblage(&s, &f).unwrap();
        let txt = serde_json::to_string(&a).unwrap();
        let back: Assemblage = serde_json::from_str(&txt).unwrap();
        assert!((back.click(1) - a.click(1)).max_abs() < 1e-16);
        let st: SchmidtState = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(st, s);
    }
}
