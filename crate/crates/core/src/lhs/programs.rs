//! LHS feasibility, spectral robustness and white-noise robustness.
//!
//! An assemblage {σ_{a|x}} has an LHS model when σ_{a|x} = Σ_λ D_λ(a|x) σ_λ
//! for PSD σ_λ, λ running over the deterministic strategies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sdp::{solve_sdp, MatrixExpr, SdpProblem};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexMatrix};
use crate::quantum::{effect_traces, steered_assemblage, Assemblage, MeasurementFamily, SchmidtState};
use crate::tol;

/// Largest number of settings accepted by the strategy-based programs.
pub const MAX_SETTINGS: usize = 4;

/// The A^X deterministic response functions for X settings and A outcomes.
///
/// Strategy λ answers setting x with digit (X−1−x) of λ written in base A,
/// so for two outcomes and two settings λ = 0..3 reads (+,+), (+,∅), (∅,+),
/// (∅,∅).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategySet {
    settings: usize,
    outcomes: usize,
}

impl DeterministicStrategySet {
    pub fn new(settings: usize, outcomes: usize) -> Result<Self> {
        if settings == 0 || settings > MAX_SETTINGS {
            return Err(Error::param(
                "X",
                settings as f64,
                format!("between 1 and {MAX_SETTINGS} settings supported"),
            ));
        }
        if outcomes < 2 {
            return Err(Error::param("outcomes", outcomes as f64, "at least two outcomes required"));
        }
        Ok(DeterministicStrategySet { settings, outcomes })
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.pow(self.settings as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Outcome assigned to setting x by strategy λ.
    pub fn response(&self, lambda: usize, x: usize) -> usize {
        let shift = self.settings - 1 - x;
        (lambda / self.outcomes.pow(shift as u32)) % self.outcomes
    }

    /// D_λ(a|x) ∈ {0, 1}.
    pub fn d(&self, lambda: usize, a: usize, x: usize) -> f64 {
        if self.response(lambda, x) == a {
            1.0
        } else {
            0.0
        }
    }

    /// All strategies as response lists.
    pub fn strategies(&self) -> Vec<Vec<usize>> {
        (0..self.len())
            .map(|l| (0..self.settings).map(|x| self.response(l, x)).collect())
            .collect()
    }
}

fn strategy_set(asm: &Assemblage) -> Result<DeterministicStrategySet> {
    DeterministicStrategySet::new(asm.settings(), 2)
}

/// Adds one matrix variable per strategy; `lhs_side(a, x)` is the target
/// Σ_λ D_λ(a|x) σ_λ must equal.
fn strategy_problem(
    set: &DeterministicStrategySet,
    dim: usize,
    psd: bool,
    mut lhs_side: impl FnMut(&mut SdpProblem, usize, usize) -> MatrixExpr,
) -> (SdpProblem, Vec<usize>) {
    let mut p = SdpProblem::new();
    let vars: Vec<usize> = (0..set.len()).map(|_| p.add_matrix_var(dim, psd)).collect();
    for x in 0..set.settings() {
        for a in 0..set.outcomes() {
            let mut e = lhs_side(&mut p, a, x);
            for (l, &v) in vars.iter().enumerate() {
                if set.response(l, x) == a {
                    e = e.var(v, 1.0);
                }
            }
            p.add_equality(e);
        }
    }
    (p, vars)
}

/// Spectral-robustness program: maximise μ subject to σ_λ ⪰ μI and
/// Σ_λ D_λ(a|x)σ_λ = σ_{a|x}.
pub fn spectral_robustness_problem(asm: &Assemblage) -> Result<SdpProblem> {
    let set = strategy_set(asm)?;
    let d = asm.dim();
    let (mut p, vars) = strategy_problem(&set, d, false, |_, a, x| {
        MatrixExpr::constant(asm.members()[x][a].scale(-1.0))
    });
    let mu = p.add_scalar_var();
    for &v in &vars {
        p.add_psd(
            MatrixExpr::zero(d)
                .var(v, 1.0)
                .scalar(mu, ComplexMatrix::identity(d).scale(-1.0)),
        );
    }
    p.maximize_scalar(mu, 1.0);
    Ok(p)
}

/// μ*; negative exactly when the assemblage is steerable.
pub fn lhs_spectral_robustness(asm: &Assemblage) -> Result<f64> {
    let sol = solve_sdp(&spectral_robustness_problem(asm)?)?.certified()?;
    Ok(sol.scalar_values[0])
}

/// True when an LHS model exists up to the feasibility tolerance.
pub fn has_lhs_model(asm: &Assemblage) -> Result<bool> {
    Ok(lhs_spectral_robustness(asm)? >= -tol::LHS_FEASIBILITY)
}

fn family_at(angles: &[f64], eps: f64) -> Result<MeasurementFamily> {
    MeasurementFamily::from_angles(angles.to_vec(), eps)
}

/// (Σ_x σ_{+|x})^{-1/2}, or None when the click sum is singular.
///
/// LHS feasibility is invariant under σ ↦ Aσ A† for invertible A; whitening
/// the click sum keeps nearly parallel click operators well conditioned.
fn conditioner(unit: &Assemblage) -> Result<Option<ComplexMatrix>> {
    let mut sum = ComplexMatrix::zeros(unit.dim());
    for x in 0..unit.settings() {
        sum += unit.click(x);
    }
    let eig = eig_hermitian(&sum)?;
    let max = eig.values[0];
    let min = *eig.values.last().expect("non-empty");
    if max.is_nan() || max <= 0.0 || min <= CONDITIONER_FLOOR * max {
        return Ok(None);
    }
    Ok(Some(eig.map_values(|l| 1.0 / l.sqrt())))
}

const CONDITIONER_FLOOR: f64 = 1e-14;

fn transform(asm: &Assemblage, a: &ComplexMatrix) -> Result<Assemblage> {
    let adj = a.adjoint();
    let members = asm
        .members()
        .iter()
        .map(|m| [0, 1].map(|k| (&(a * &m[k]) * &adj).hermitian_part()))
        .collect();
    Assemblage::new_unchecked(members)
}

/// Largest ε for which the one-click family with the given amplitude angles
/// admits an LHS model, by bisection on [0, 1] over feasibility calls.
///
/// Feasibility is decided on the assemblage conjugated by the inverse square
/// root of the unit-efficiency click sum.
pub fn max_lhs_efficiency(state: &SchmidtState, angles: &[f64]) -> Result<f64> {
    let unit = steered_assemblage(state, &family_at(angles, 1.0)?)?;
    let cond = conditioner(&unit)?;
    let feasible = |eps: f64| -> Result<bool> {
        let asm = steered_assemblage(state, &family_at(angles, eps)?)?;
        match &cond {
            Some(a) => has_lhs_model(&transform(&asm, a)?),
            None => has_lhs_model(&asm),
        }
    };
    if feasible(1.0)? {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol::EFFICIENCY_BISECTION {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Same quantity from a single program linear in ε: maximise ε subject to
/// Σ_λ D_λ(+|x)σ_λ = εΠ̃_x, Σ_λ D_λ(∅|x)σ_λ = ρ_B − εΠ̃_x, σ_λ ⪰ 0 and
/// 0 ≤ ε ≤ 1, where Π̃_x is the click member at unit efficiency. The data are
/// conditioned as in [`max_lhs_efficiency`].
pub fn max_lhs_efficiency_direct(state: &SchmidtState, angles: &[f64]) -> Result<f64> {
    let raw = steered_assemblage(state, &family_at(angles, 1.0)?)?;
    let unit = match conditioner(&raw)? {
        Some(a) => transform(&raw, &a)?,
        None => raw,
    };
    let set = strategy_set(&unit)?;
    let d = unit.dim();
    let rho = unit.rho_b().clone();
    let mut eps_var = None;
    let (mut p, _) = strategy_problem(&set, d, true, |p, a, x| {
        let e = *eps_var.get_or_insert_with(|| p.add_scalar_var());
        let click = unit.click(x);
        if a == 0 {
            MatrixExpr::zero(d).scalar(e, click.scale(-1.0))
        } else {
            MatrixExpr::constant(rho.scale(-1.0)).scalar(e, click.clone())
        }
    });
    let e = eps_var.expect("at least one constraint");
    p.bound(e, Some(0.0), Some(1.0));
    p.maximize_scalar(e, 1.0);
    let sol = solve_sdp(&p)?.certified()?;
    Ok(sol.scalar_values[e])
}

/// Minimal η ∈ [0, 1] for which (1−η)σ_{a|x} + η Tr[E_{a|x}] I/(d_A d_B)
/// admits an LHS model. Unsteerable inputs give 0.
///
/// The program is solved after conjugating assemblage and noise operator by
/// the inverse square root of the click sum, which leaves η* unchanged.
pub fn white_noise_robustness(
    asm: &Assemblage,
    traces: &[[f64; 2]],
    dim_a: usize,
    dim_b: usize,
) -> Result<f64> {
    if dim_b != asm.dim() {
        return Err(Error::DimensionMismatch(format!(
            "d_B = {dim_b} but assemblage is {}x{}",
            asm.dim(),
            asm.dim()
        )));
    }
    if traces.len() != asm.settings() {
        return Err(Error::DimensionMismatch("one trace pair per setting required".into()));
    }
    let noise = ComplexMatrix::identity(dim_b).scale(1.0 / (dim_a * dim_b) as f64);
    let solved = match conditioner(asm)? {
        Some(a) => {
            let conj = (&(&a * &noise) * &a.adjoint()).hermitian_part();
            noise_robustness(&transform(asm, &a)?, traces, &conj)
        }
        None => noise_robustness(asm, traces, &noise),
    };
    match solved {
        // The optimum η = 0 sits on a degenerate face when an LHS model
        // already exists; the LHS verdict settles it.
        Err(e @ Error::Solver { .. }) => match has_lhs_model(asm) {
            Ok(true) => Ok(0.0),
            _ => Err(e),
        },
        other => other,
    }
}

/// Minimal η with (1−η)σ_{a|x} + η t_{a|x} N LHS-compatible.
fn noise_robustness(asm: &Assemblage, traces: &[[f64; 2]], noise: &ComplexMatrix) -> Result<f64> {
    let set = strategy_set(asm)?;
    let mut eta_var = None;
    let (mut p, _) = strategy_problem(&set, asm.dim(), true, |p, a, x| {
        let eta = *eta_var.get_or_insert_with(|| p.add_scalar_var());
        let s = &asm.members()[x][a];
        // −[(1−η)σ + η t N] = −σ + η(σ − t N)
        MatrixExpr::constant(s.scale(-1.0)).scalar(eta, s - &noise.scale(traces[x][a]))
    });
    let eta = eta_var.expect("at least one constraint");
    p.bound(eta, Some(0.0), Some(1.0));
    p.maximize_scalar(eta, -1.0);
    let sol = solve_sdp(&p)?.certified()?;
    let eta = sol.scalar_values[eta].clamp(0.0, 1.0);
    // η below the feasibility tolerance is not resolved by the solver
    Ok(if eta < tol::LHS_FEASIBILITY { 0.0 } else { eta })
}

/// WNR of the two-setting one-click assemblage on the state with parameter α.
pub fn one_click_wnr(alpha: f64, delta: f64, eps: f64) -> Result<f64> {
    let state = SchmidtState::phi_plus_alpha(alpha)?;
    let family = MeasurementFamily::one_click(2, delta, eps)?;
    let asm = steered_assemblage(&state, &family)?;
    white_noise_robustness(&asm, &effect_traces(&family, 2), 2, 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WnrMode {
    /// α = π/4, spacing optimised.
    Maxent,
    /// α and spacing optimised.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WnrPoint {
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    pub alpha: f64,
}

const DELTA_GRID: usize = 16;
const ALPHA_GRID: usize = 8;
const GOLDEN_STEPS: usize = 30;

/// Golden-section maximisation of f on [lo, hi] starting from a bracket.
fn golden_max(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    for _ in 0..GOLDEN_STEPS {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b)?;
        }
    }
    Ok(if fa >= fb { (a, fa) } else { (b, fb) })
}

/// Search over a linear grid plus geometrically shrinking points towards 0,
/// then golden-section refinement between the neighbours of the best point.
fn maximise_on(f: &dyn Fn(f64) -> Result<f64>, upper: f64, grid: usize) -> Result<(f64, f64)> {
    let h = upper / (grid as f64 + 1.0);
    let mut pts: Vec<f64> = (1..=grid).map(|i| h * i as f64).collect();
    let mut t = h;
    for _ in 0..GEOMETRIC_POINTS {
        t *= 0.5;
        pts.push(t);
    }
    pts.sort_by(f64::total_cmp);
    let vals = pts.iter().map(|&t| f(t)).collect::<Result<Vec<f64>>>()?;
    let (bi, &bv) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let best = (pts[bi], bv);
    if bv <= 0.0 {
        return Ok(best);
    }
    let lo = if bi == 0 { 0.5 * pts[0] } else { pts[bi - 1] };
    let hi = pts.get(bi + 1).copied().unwrap_or(0.5 * (pts[bi] + upper));
    let refined = golden_max(f, lo, hi)?;
    Ok(if refined.1 >= best.1 { refined } else { best })
}

const GEOMETRIC_POINTS: usize = 6;

/// Largest WNR over the spacing (and α in optimised mode) at efficiency ε.
pub fn optimal_wnr(eps: f64, mode: WnrMode) -> Result<WnrPoint> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("epsilon", eps, "efficiency must lie in [0, 1]"));
    }
    let pi = std::f64::consts::PI;
    let quarter = std::f64::consts::FRAC_PI_4;
    let over_delta = |alpha: f64| -> Result<(f64, f64)> {
        let f = |d: f64| one_click_wnr(alpha, d, eps);
        maximise_on(&f, pi, DELTA_GRID)
    };
    let (delta, eta) = over_delta(quarter)?;
    let mut best = WnrPoint {
        epsilon: eps,
        eta,
        delta,
        alpha: quarter,
    };
    if mode == WnrMode::Optimized {
        let f = |a: f64| -> Result<f64> { Ok(over_delta(a)?.1) };
        let mut best_alpha = quarter;
        let mut best_eta = eta;
        let mut best_i = ALPHA_GRID;
        for i in 1..ALPHA_GRID {
            let a = quarter * i as f64 / ALPHA_GRID as f64;
            let v = f(a)?;
            if v > best_eta {
                best_eta = v;
                best_alpha = a;
                best_i = i;
            }
        }
        if best_i < ALPHA_GRID && best_eta > 0.0 {
            let h = quarter / ALPHA_GRID as f64;
            let lo = h * (best_i as f64 - 1.0);
            let hi = (h * (best_i as f64 + 1.0)).min(quarter);
            let (a, v) = golden_max(&f, lo.max(1e-6), hi)?;
            if v > best_eta {
                best_alpha = a;
                best_eta = v;
            }
        }
        if best_eta > best.eta {
            let (delta, eta) = over_delta(best_alpha)?;
            best = WnrPoint {
                epsilon: eps,
                eta,
                delta,
                alpha: best_alpha,
            };
        }
    }
    Ok(best)
}

/// [`optimal_wnr`] on each efficiency, in input order.
pub fn wnr_curve(eps: &[f64], mode: WnrMode) -> Result<Vec<WnrPoint>> {
    eps.par_iter().map(|&e| optimal_wnr(e, mode)).collect()
}
