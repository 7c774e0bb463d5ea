//! Two-party Bell tests with lossy detectors.
//!
//! Behaviours are tables p(ab|xy) for x, y ∈ {0, 1} with two outcomes, or
//! three when the null outcome ∅ (index 2) is kept. The Eberhard expression
//! is evaluated on three-outcome tables and equals the CH expression of the
//! table obtained by mapping every null to 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, re, ComplexMatrix, C64};
use crate::tol;

/// Index of the null outcome in three-outcome tables.
pub const NULL: usize = 2;

/// p(ab|xy) stored as `table[x][y][a][b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BehaviorRecord", into = "BehaviorRecord")]
pub struct Behavior {
    outcomes: usize,
    table: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Serialize, Deserialize)]
struct BehaviorRecord {
    outcomes: usize,
    table: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<BehaviorRecord> for Behavior {
    type Error = Error;
    fn try_from(r: BehaviorRecord) -> Result<Self> {
        Behavior::new(r.outcomes, r.table)
    }
}

impl From<Behavior> for BehaviorRecord {
    fn from(b: Behavior) -> Self {
        BehaviorRecord {
            outcomes: b.outcomes,
            table: b.table,
        }
    }
}

impl Behavior {
    pub fn new(outcomes: usize, table: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        if outcomes != 2 && outcomes != 3 {
            return Err(Error::InvalidBehavior(format!("{outcomes} outcomes per input; 2 or 3 supported")));
        }
        let shape_ok = table.len() == 2
            && table.iter().all(|tx| {
                tx.len() == 2
                    && tx
                        .iter()
                        .all(|ty| ty.len() == outcomes && ty.iter().all(|r| r.len() == outcomes))
            });
        if !shape_ok {
            return Err(Error::InvalidBehavior(format!("table must be 2x2x{outcomes}x{outcomes}")));
        }
        let b = Behavior { outcomes, table };
        b.validate()?;
        Ok(b)
    }

    pub fn from_fn(outcomes: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let table = (0..2)
            .map(|x| {
                (0..2)
                    .map(|y| (0..outcomes).map(|a| (0..outcomes).map(|b| f(a, b, x, y)).collect()).collect())
                    .collect()
            })
            .collect();
        Self::new(outcomes, table)
    }

    fn validate(&self) -> Result<()> {
        for x in 0..2 {
            for y in 0..2 {
                let mut sum = 0.0;
                for a in 0..self.outcomes {
                    for b in 0..self.outcomes {
                        let v = self.p(a, b, x, y);
                        if v.is_nan() || v < 0.0 {
                            return Err(Error::InvalidBehavior(format!("p({a}{b}|{x}{y}) = {v} is negative")));
                        }
                        sum += v;
                    }
                }
                if (sum - 1.0).abs() > tol::BEHAVIOR_SUM {
                    return Err(Error::InvalidBehavior(format!("p(..|{x}{y}) sums to {sum}")));
                }
            }
        }
        let residual = self.signalling_residual();
        if residual > tol::BEHAVIOR_NO_SIGNALLING {
            return Err(Error::Signalling { residual });
        }
        Ok(())
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// p(ab|xy)
    pub fn p(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.table[x][y][a][b]
    }

    pub fn table(&self) -> &[Vec<Vec<Vec<f64>>>] {
        &self.table
    }

    fn marginal_a_given(&self, a: usize, x: usize, y: usize) -> f64 {
        (0..self.outcomes).map(|b| self.p(a, b, x, y)).sum()
    }

    fn marginal_b_given(&self, b: usize, x: usize, y: usize) -> f64 {
        (0..self.outcomes).map(|a| self.p(a, b, x, y)).sum()
    }

    /// p_A(a|x), read at y = 0.
    pub fn marginal_a(&self, a: usize, x: usize) -> f64 {
        self.marginal_a_given(a, x, 0)
    }

    /// p_B(b|y), read at x = 0.
    pub fn marginal_b(&self, b: usize, y: usize) -> f64 {
        self.marginal_b_given(b, 0, y)
    }

    /// Largest dependence of a marginal on the other party's input.
    pub fn signalling_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for k in 0..self.outcomes {
            for i in 0..2 {
                r = r.max((self.marginal_a_given(k, i, 0) - self.marginal_a_given(k, i, 1)).abs());
                r = r.max((self.marginal_b_given(k, 0, i) - self.marginal_b_given(k, 1, i)).abs());
            }
        }
        r
    }
}

fn require_outcomes(b: &Behavior, n: usize, what: &str) -> Result<()> {
    if b.outcomes != n {
        return Err(Error::InvalidBehavior(format!(
            "{what} needs a {n}-outcome table, got {}",
            b.outcomes
        )));
    }
    Ok(())
}

/// E = p(00|11) + p(10|10) + p(∅0|10) + p(01|01) + p(0∅|01) − p(00|00);
/// non-negative for every local behaviour.
pub fn eberhard_value(b: &Behavior) -> Result<f64> {
    require_outcomes(b, 3, "Eberhard expression")?;
    Ok(b.p(0, 0, 1, 1) + b.p(1, 0, 1, 0) + b.p(NULL, 0, 1, 0) + b.p(0, 1, 0, 1) + b.p(0, NULL, 0, 1)
        - b.p(0, 0, 0, 0))
}

/// S = p(00|11) − p(00|10) − p(00|01) − p(00|00) + p_A(0|0) + p_B(0|0);
/// non-negative for every local behaviour.
pub fn ch_value(b: &Behavior) -> Result<f64> {
    require_outcomes(b, 2, "CH expression")?;
    Ok(b.p(0, 0, 1, 1) - b.p(0, 0, 1, 0) - b.p(0, 0, 0, 1) - b.p(0, 0, 0, 0)
        + b.marginal_a(0, 0)
        + b.marginal_b(0, 0))
}

/// C = C₀₀ + C₀₁ + C₁₀ − C₁₁ with C_xy = p(00) + p(11) − p(01) − p(10).
pub fn chsh_value(b: &Behavior) -> Result<f64> {
    require_outcomes(b, 2, "CHSH expression")?;
    let corr = |x, y| b.p(0, 0, x, y) + b.p(1, 1, x, y) - b.p(0, 1, x, y) - b.p(1, 0, x, y);
    Ok(corr(0, 0) + corr(0, 1) + corr(1, 0) - corr(1, 1))
}

/// p(ab|xy) = ½ when a ⊕ b = xy.
pub fn pr_box() -> Behavior {
    Behavior::from_fn(2, |a, b, x, y| if (a ^ b) == (x & y) { 0.5 } else { 0.0 }).expect("PR box is valid")
}

/// Both detectors fire independently with probability ε; a missed detection
/// yields ∅.
pub fn apply_inefficiency(b: &Behavior, eps: f64) -> Result<Behavior> {
    require_outcomes(b, 2, "inefficiency map")?;
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("epsilon", eps, "efficiency must lie in [0, 1]"));
    }
    let miss = 1.0 - eps;
    Behavior::from_fn(3, |a, bb, x, y| match (a == NULL, bb == NULL) {
        (false, false) => eps * eps * b.p(a, bb, x, y),
        (false, true) => eps * miss * b.marginal_a(a, x),
        (true, false) => eps * miss * b.marginal_b(bb, y),
        (true, true) => miss * miss,
    })
}

/// Probability of mapping ∅ to outcome 0, per party and input; the null is
/// mapped to 1 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullAssignment {
    pub alice: [f64; 2],
    pub bob: [f64; 2],
}

impl NullAssignment {
    pub const ALL_TO_ONE: NullAssignment = NullAssignment {
        alice: [0.0; 2],
        bob: [0.0; 2],
    };
    pub const ALL_TO_ZERO: NullAssignment = NullAssignment {
        alice: [1.0; 2],
        bob: [1.0; 2],
    };

    /// The 16 deterministic assignments, bit k of the index set for
    /// (alice₀, alice₁, bob₀, bob₁) in order.
    pub fn deterministic() -> Vec<NullAssignment> {
        (0..16u32)
            .map(|m| {
                let bit = |k: u32| f64::from((m >> k) & 1);
                NullAssignment {
                    alice: [bit(0), bit(1)],
                    bob: [bit(2), bit(3)],
                }
            })
            .collect()
    }
}

/// p'(ab|xy) = Σ_{a'b'} p(a'b'|xy) T_A(a|a',x) T_B(b|b',y), where T copies
/// 0 and 1 and sends ∅ to 0 with the assignment probability.
pub fn assign_nulls(b: &Behavior, s: &NullAssignment) -> Result<Behavior> {
    require_outcomes(b, 3, "null assignment")?;
    for q in s.alice.iter().chain(&s.bob) {
        if !(0.0..=1.0).contains(q) {
            return Err(Error::param("assignment", *q, "probabilities must lie in [0, 1]"));
        }
    }
    let t = |q: f64, out: usize, src: usize| -> f64 {
        match src {
            NULL => {
                if out == 0 {
                    q
                } else {
                    1.0 - q
                }
            }
            _ => f64::from(u8::from(out == src)),
        }
    };
    Behavior::from_fn(2, |a, bb, x, y| {
        let mut v = 0.0;
        for a2 in 0..3 {
            for b2 in 0..3 {
                v += b.p(a2, b2, x, y) * t(s.alice[x], a, a2) * t(s.bob[y], bb, b2);
            }
        }
        v
    })
}

/// Largest CHSH value over the deterministic null assignments.
pub fn best_assigned_chsh(b: &Behavior) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for s in NullAssignment::deterministic() {
        best = best.max(chsh_value(&assign_nulls(b, &s)?)?);
    }
    Ok(best)
}

/// Eberhard operator for a maximally entangled pair with lossy detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellOperator {
    pub matrix: ComplexMatrix,
    pub epsilon: f64,
    pub phi_x: f64,
    pub phi_y: f64,
}

impl BellOperator {
    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.matrix.min_eigenvalue()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }
}

/// B̂ = ε/2 · [[2−ε, 1−ε, 1−ε, TR−ε], [1−ε, 2−ε, TR*−ε, 1−ε],
/// [1−ε, T*R−ε, 2−ε, 1−ε], [T*R*−ε, 1−ε, 1−ε, 2−ε]] with
/// T = (ε/2)(e^{iφx} − 1) and R = e^{iφy} − 1.
pub fn bell_operator(eps: f64, phi_x: f64, phi_y: f64) -> Result<BellOperator> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("epsilon", eps, "efficiency must lie in [0, 1]"));
    }
    let t = (C64::from_polar(1.0, phi_x) - 1.0) * (eps / 2.0);
    let r = C64::from_polar(1.0, phi_y) - 1.0;
    let d = re(2.0 - eps);
    let o = re(1.0 - eps);
    let e = re(eps);
    let rows = [
        d,
        o,
        o,
        t * r - e,
        o,
        d,
        t * r.conj() - e,
        o,
        o,
        t.conj() * r - e,
        d,
        o,
        t.conj() * r.conj() - e,
        o,
        o,
        d,
    ];
    let matrix = ComplexMatrix::from_rows(&rows)?.scale(eps / 2.0);
    Ok(BellOperator {
        matrix,
        epsilon: eps,
        phi_x,
        phi_y,
    })
}

fn lambda_min_at(eps: f64, phi_x: f64, phi_y: f64) -> f64 {
    bell_operator(eps, phi_x, phi_y)
        .and_then(|b| b.min_eigenvalue())
        .unwrap_or(f64::INFINITY)
}

fn det_at(eps: f64, phi_x: f64, phi_y: f64) -> f64 {
    bell_operator(eps, phi_x, phi_y)
        .map(|b| b.matrix.determinant().re)
        .unwrap_or(f64::INFINITY)
}

/// Minimum of a function of two angles, each wrapped to [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleMinimum {
    pub value: f64,
    pub phi_x: f64,
    pub phi_y: f64,
}

const REFINEMENT_PASSES: usize = 3;
const STARTS: usize = 4;
const NM_MAX_ITERATIONS: usize = 2000;

/// Nelder–Mead in two dimensions from `start` with initial step `step`.
fn nelder_mead(f: &dyn Fn([f64; 2]) -> f64, start: [f64; 2], step: f64, tol_x: f64) -> ([f64; 2], f64) {
    let mut simplex = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut vals = simplex.map(f);
    for _ in 0..NM_MAX_ITERATIONS {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        simplex = idx.map(|i| simplex[i]);
        vals = idx.map(|i| vals[i]);
        let size = (1..3)
            .map(|k| (simplex[k][0] - simplex[0][0]).abs().max((simplex[k][1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        if size < tol_x {
            break;
        }
        let centroid = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let along = |t: f64| [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])];
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let xc = if fr < vals[2] { along(-0.5) } else { along(0.5) };
            let fc = f(xc);
            if fc < vals[2].min(fr) {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    vals[k] = f(simplex[k]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).expect("three vertices");
    (simplex[best], vals[best])
}

fn wrap(a: f64) -> f64 {
    a.rem_euclid(2.0 * std::f64::consts::PI)
}

/// Coarse grid over [0, 2π)², then repeated Nelder–Mead passes from the best
/// grid points.
fn minimise_angles(f: &dyn Fn([f64; 2]) -> f64, resolution: usize) -> AngleMinimum {
    let h = 2.0 * std::f64::consts::PI / resolution as f64;
    let mut grid: Vec<(f64, [f64; 2])> = (0..resolution * resolution)
        .map(|k| {
            let p = [h * (k / resolution) as f64, h * (k % resolution) as f64];
            (f(p), p)
        })
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = (grid[0].1, grid[0].0);
    for &(_, start) in grid.iter().take(STARTS) {
        let mut point = start;
        let mut step = h;
        let mut value = f(point);
        for _ in 0..REFINEMENT_PASSES {
            let (p, v) = nelder_mead(f, point, step, 0.1 * tol::BELL_ANGLE);
            if v <= value {
                point = p;
                value = v;
            }
            step = (step * 0.1).max(10.0 * tol::BELL_ANGLE);
        }
        if value < best.1 {
            best = (point, value);
        }
    }
    AngleMinimum {
        value: best.1,
        phi_x: wrap(best.0[0]),
        phi_y: wrap(best.0[1]),
    }
}

/// Global minimum of λ_min(B̂(ε, φx, φy)) over both angles.
pub fn min_eig_over_angles(eps: f64, resolution: usize) -> Result<AngleMinimum> {
    if resolution < 64 {
        return Err(Error::param("resolution", resolution as f64, "at least 64 points per angle"));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("epsilon", eps, "efficiency must lie in [0, 1]"));
    }
    Ok(minimise_angles(&|p| lambda_min_at(eps, p[0], p[1]), resolution))
}

/// Minimum of det B̂ over both angles; negative exactly when B̂ has an odd
/// number of negative eigenvalues somewhere.
pub fn min_det_over_angles(eps: f64, resolution: usize) -> Result<AngleMinimum> {
    if resolution < 64 {
        return Err(Error::param("resolution", resolution as f64, "at least 64 points per angle"));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("epsilon", eps, "efficiency must lie in [0, 1]"));
    }
    Ok(minimise_angles(&|p| det_at(eps, p[0], p[1]), resolution))
}

pub const DEFAULT_RESOLUTION: usize = 64;

/// Tolerable white-noise fraction at efficiency ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseThreshold {
    pub epsilon: f64,
    pub eta: f64,
    pub phi_x: f64,
    pub phi_y: f64,
    pub lambda_min: f64,
    /// No violation at this efficiency; `eta` is then 0.
    pub below_threshold: bool,
}

/// η = 1/(1 − ε(2−ε)/(2λ_min)) at the angle-optimal λ_min.
pub fn noise_threshold_optimized(eps: f64) -> Result<NoiseThreshold> {
    let m = min_eig_over_angles(eps, DEFAULT_RESOLUTION)?;
    let below = m.value >= -tol::BELL_EIGENVALUE;
    let eta = if below {
        0.0
    } else {
        1.0 / (1.0 - eps * (2.0 - eps) / (2.0 * m.value))
    };
    Ok(NoiseThreshold {
        epsilon: eps,
        eta,
        phi_x: m.phi_x,
        phi_y: m.phi_y,
        lambda_min: m.value,
        below_threshold: below,
    })
}

/// ½(1 − √2), the smallest eigenvalue of B̂ at ε = 1.
pub fn s_max() -> f64 {
    0.5 * (1.0 - std::f64::consts::SQRT_2)
}

/// η solving ε[(1−η)S_max + η/2 − 1] = −1 for a maximally entangled state
/// mixed with white noise, (1−η)|ψ⟩⟨ψ| + η I/4.
pub fn noise_threshold_maxent(eps: f64) -> Result<NoiseThreshold> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param("epsilon", eps, "efficiency must lie in (0, 1]"));
    }
    let s = s_max();
    let eta = (1.0 - 1.0 / eps - s) / (0.5 - s);
    let below = eta <= 0.0;
    let pi = std::f64::consts::PI;
    Ok(NoiseThreshold {
        epsilon: eps,
        eta: eta.max(0.0),
        phi_x: pi / 2.0,
        phi_y: 1.5 * pi,
        lambda_min: s,
        below_threshold: below,
    })
}

/// Efficiency at which `violates` switches from false to true, by bisection
/// on [lo, hi] to width `tol`.
pub fn locate_threshold(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    violates: impl Fn(f64) -> Result<bool>,
) -> Result<f64> {
    if violates(lo)? || !violates(hi)? {
        return Err(Error::param("bracket", lo, "predicate must be false at lo and true at hi"));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if violates(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Efficiency where the angle-optimised λ_min first drops below
/// −BELL_EIGENVALUE.
pub fn eigenvalue_threshold(tol: f64) -> Result<f64> {
    locate_threshold(0.5, 1.0, tol, |e| {
        Ok(min_eig_over_angles(e, DEFAULT_RESOLUTION)?.value < -tol::BELL_EIGENVALUE)
    })
}

/// Same threshold located from the sign of min det B̂. The other three
/// eigenvalues are O(ε/2), so the determinant cut is scaled by ε³/8.
pub fn determinant_threshold(tol: f64) -> Result<f64> {
    locate_threshold(0.5, 1.0, tol, |e| {
        Ok(min_det_over_angles(e, DEFAULT_RESOLUTION)?.value < -tol::BELL_EIGENVALUE * e.powi(3) / 8.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellMode {
    Optimized,
    Maxent,
}

/// Noise thresholds on a grid of efficiencies, in input order.
pub fn bell_curve(mode: BellMode, eps: &[f64]) -> Result<Vec<NoiseThreshold>> {
    eps.par_iter()
        .map(|&e| match mode {
            BellMode::Optimized => noise_threshold_optimized(e),
            BellMode::Maxent => noise_threshold_maxent(e),
        })
        .collect()
}

/// λ_min(B̂) at the given angles, for callers that fix the angles.
pub fn lambda_min(eps: f64, phi_x: f64, phi_y: f64) -> Result<f64> {
    bell_operator(eps, phi_x, phi_y)?.min_eigenvalue()
}

/// All eigenvalues of B̂, descending.
pub fn spectrum(eps: f64, phi_x: f64, phi_y: f64) -> Result<Vec<f64>> {
    Ok(eig_hermitian(&bell_operator(eps, phi_x, phi_y)?.matrix)?.values)
}
