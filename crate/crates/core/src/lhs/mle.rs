//! Maximum-likelihood reconstruction of a qubit assemblage.
//!
//! Unknowns are real symmetric σ_{+|x} and ρ_B with Tr ρ_B = 1, and
//! σ_{∅|x} = ρ_B − σ_{+|x}. The concave objective
//! Σ_{a,b,x} p(a,b|x) log Tr[E_b σ_{a|x}] is maximised over
//! {σ_{+|x} ⪰ 0, ρ_B − σ_{+|x} ⪰ 0} with a log-det barrier whose weight is
//! divided by ten per stage; each stage runs damped Newton with a
//! backtracking line search that keeps every block positive definite.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{re, ComplexMatrix};
use crate::quantum::{Assemblage, Povm};
use crate::tol;

/// P(a|x) and P(b|a,x), with a = 0 click and a = 1 null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTables {
    /// `p_a[x][a]`
    pub p_a: Vec<[f64; 2]>,
    /// `p_b_given_a[x][a][b]`
    pub p_b_given_a: Vec<[Vec<f64>; 2]>,
}

impl ProbabilityTables {
    pub fn settings(&self) -> usize {
        self.p_a.len()
    }

    /// p(a,b|x) = P(a|x) P(b|a,x)
    pub fn joint(&self, x: usize, a: usize, b: usize) -> f64 {
        self.p_a[x][a] * self.p_b_given_a[x][a][b]
    }

    /// Rows sum to one within `tol`; conditionals of a zero-probability
    /// outcome are not constrained.
    pub fn validate(&self, outcomes_b: usize, tol: f64) -> Result<()> {
        if self.p_a.is_empty() || self.p_a.len() != self.p_b_given_a.len() {
            return Err(Error::DimensionMismatch("probability tables need matching settings".into()));
        }
        for (x, (pa, pb)) in self.p_a.iter().zip(&self.p_b_given_a).enumerate() {
            check_row(pa, tol, x)?;
            for a in 0..2 {
                if pb[a].len() != outcomes_b {
                    return Err(Error::DimensionMismatch(format!(
                        "setting {x}: {} conditional entries for {outcomes_b} POVM outcomes",
                        pb[a].len()
                    )));
                }
                if pa[a] > 0.0 {
                    check_row(&pb[a], tol, x)?;
                }
            }
        }
        Ok(())
    }
}

fn check_row(row: &[f64], tol: f64, x: usize) -> Result<()> {
    if let Some(v) = row.iter().find(|v| !(**v >= 0.0 && **v <= 1.0 + tol)) {
        return Err(Error::param("probability", *v, format!("setting {x}: entries must lie in [0, 1]")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::param("probability_sum", sum, format!("setting {x}: row must sum to 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleReport {
    pub assemblage: Assemblage,
    /// Final log-likelihood.
    pub objective: f64,
    /// Log-likelihood at the end of each barrier stage.
    pub stage_objectives: Vec<f64>,
    /// Barrier objective after each accepted Newton step.
    pub iterate_objectives: Vec<f64>,
    pub iterations: usize,
}

/// Affine real-linear form gᵀθ + h.
struct Affine {
    g: DVector<f64>,
    h: f64,
}

/// 2×2 real symmetric block B(θ) = B₀ + Σ θ_k B_k, stored by entries
/// (00, 01, 11).
struct Block {
    b0: [f64; 3],
    bk: Vec<(usize, [f64; 3])>,
}

impl Block {
    fn at(&self, th: &DVector<f64>) -> [f64; 3] {
        let mut m = self.b0;
        for (k, d) in &self.bk {
            for i in 0..3 {
                m[i] += th[*k] * d[i];
            }
        }
        m
    }
}

fn det(m: &[f64; 3]) -> f64 {
    m[0] * m[2] - m[1] * m[1]
}

fn is_pd(m: &[f64; 3]) -> bool {
    m[0] > 0.0 && m[2] > 0.0 && det(m) > 0.0
}

/// Tr[A B] for symmetric 2×2 blocks in (00, 01, 11) form.
fn tr2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2]
}

fn inverse(m: &[f64; 3]) -> [f64; 3] {
    let d = det(m);
    [m[2] / d, -m[1] / d, m[0] / d]
}

/// Product A B of symmetric blocks as a full 2×2 matrix.
fn mul(a: &[f64; 3], b: &[f64; 3]) -> [[f64; 2]; 2] {
    let fa = [[a[0], a[1]], [a[1], a[2]]];
    let fb = [[b[0], b[1]], [b[1], b[2]]];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = fa[i][0] * fb[0][j] + fa[i][1] * fb[1][j];
        }
    }
    out
}

struct Model {
    n: usize,
    terms: Vec<(f64, Affine)>,
    blocks: Vec<Block>,
}

impl Model {
    fn loglik(&self, th: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|(p, f)| p * (f.g.dot(th) + f.h).ln())
            .sum()
    }

    fn feasible(&self, th: &DVector<f64>) -> bool {
        self.blocks.iter().all(|b| is_pd(&b.at(th)))
            && self.terms.iter().all(|(_, f)| f.g.dot(th) + f.h > 0.0)
    }

    fn barrier_objective(&self, th: &DVector<f64>, t: f64) -> f64 {
        self.loglik(th) + t * self.blocks.iter().map(|b| det(&b.at(th)).ln()).sum::<f64>()
    }

    fn derivatives(&self, th: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        for (p, f) in &self.terms {
            let v = f.g.dot(th) + f.h;
            g += &f.g * (p / v);
            h -= &f.g * f.g.transpose() * (p / (v * v));
        }
        for b in &self.blocks {
            let inv = inverse(&b.at(th));
            let prods: Vec<(usize, [[f64; 2]; 2])> =
                b.bk.iter().map(|(k, d)| (*k, mul(&inv, d))).collect();
            for (k, d) in &b.bk {
                g[*k] += t * tr2(&inv, d);
            }
            for (k, pk) in &prods {
                for (l, pl) in &prods {
                    // Tr[B⁻¹B_k B⁻¹B_l]
                    let mut tr = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            tr += pk[i][j] * pl[j][i];
                        }
                    }
                    h[(*k, *l)] -= t * tr;
                }
            }
        }
        (g, h)
    }
}

const INITIAL_BARRIER: f64 = 1e-2;
const FINAL_BARRIER: f64 = 1e-14;
const ARMIJO: f64 = 0.25;

/// Reconstructs {σ_{a|x}} from P(a|x), P(b|a,x) and Bob's POVM.
///
/// Operators are restricted to real matrices: only the real parts of the
/// POVM effects enter, and components along σ_y are fixed to zero.
pub fn mle_assemblage(probs: &ProbabilityTables, povm: &Povm) -> Result<Assemblage> {
    Ok(mle_reconstruct(probs, povm)?.assemblage)
}

pub fn mle_reconstruct(probs: &ProbabilityTables, povm: &Povm) -> Result<MleReport> {
    if povm.dim() != 2 {
        return Err(Error::DimensionMismatch("reconstruction supports a qubit POVM".into()));
    }
    probs.validate(povm.len(), tol::PROBABILITY_SUM)?;
    let nx = probs.settings();
    // θ = (a_x, b_x, c_x for σ_{+|x}) ++ (r, s) for ρ_B = [[r, s], [s, 1−r]].
    let n = 3 * nx + 2;
    let (ir, is) = (3 * nx, 3 * nx + 1);
    let eff: Vec<[f64; 3]> = povm
        .effects()
        .iter()
        .map(|e| [e[(0, 0)].re, 0.5 * (e[(0, 1)].re + e[(1, 0)].re), e[(1, 1)].re])
        .collect();

    let mut terms = Vec::new();
    for x in 0..nx {
        for (b, e) in eff.iter().enumerate() {
            // Tr[E σ_{+|x}] = e00 a + 2 e01 b + e11 c
            let p = probs.joint(x, 0, b);
            if p > 0.0 {
                let mut g = DVector::zeros(n);
                g[3 * x] = e[0];
                g[3 * x + 1] = 2.0 * e[1];
                g[3 * x + 2] = e[2];
                terms.push((p, Affine { g, h: 0.0 }));
            }
            // Tr[E(ρ − σ_{+|x})] = e11 + (e00 − e11) r + 2 e01 s − Tr[E σ_{+|x}]
            let p = probs.joint(x, 1, b);
            if p > 0.0 {
                let mut g = DVector::zeros(n);
                g[3 * x] = -e[0];
                g[3 * x + 1] = -2.0 * e[1];
                g[3 * x + 2] = -e[2];
                g[ir] = e[0] - e[2];
                g[is] = 2.0 * e[1];
                terms.push((p, Affine { g, h: e[2] }));
            }
        }
    }
    let mut blocks = Vec::new();
    for x in 0..nx {
        blocks.push(Block {
            b0: [0.0; 3],
            bk: vec![(3 * x, [1.0, 0.0, 0.0]), (3 * x + 1, [0.0, 1.0, 0.0]), (3 * x + 2, [0.0, 0.0, 1.0])],
        });
        blocks.push(Block {
            b0: [0.0, 0.0, 1.0],
            bk: vec![
                (ir, [1.0, 0.0, -1.0]),
                (is, [0.0, 1.0, 0.0]),
                (3 * x, [-1.0, 0.0, 0.0]),
                (3 * x + 1, [0.0, -1.0, 0.0]),
                (3 * x + 2, [0.0, 0.0, -1.0]),
            ],
        });
    }
    let model = Model { n, terms, blocks };

    let mut th = DVector::zeros(n);
    for x in 0..nx {
        let p = probs.p_a[x][0].clamp(0.01, 0.99);
        th[3 * x] = 0.5 * p;
        th[3 * x + 2] = 0.5 * p;
    }
    th[ir] = 0.5;

    let mut t = INITIAL_BARRIER;
    let mut iterations = 0;
    let mut stage_objectives = Vec::new();
    let mut iterate_objectives = Vec::new();
    let mut last = f64::NEG_INFINITY;
    loop {
        let mut f = model.barrier_objective(&th, t);
        while iterations < tol::MLE_MAX_ITERATIONS {
            let (g, h) = model.derivatives(&th, t);
            let neg = -&h;
            let step = match neg.clone().cholesky() {
                Some(ch) => ch.solve(&g),
                None => match neg.lu().solve(&g) {
                    Some(s) => s,
                    None => break,
                },
            };
            let decrement = g.dot(&step);
            if decrement.is_nan() || decrement <= 1e-15 {
                break;
            }
            iterations += 1;
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-16 {
                let cand = &th + &step * alpha;
                if model.feasible(&cand) {
                    let fc = model.barrier_objective(&cand, t);
                    if fc.is_finite() && fc >= f + ARMIJO * alpha * decrement {
                        th = cand;
                        f = fc;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            iterate_objectives.push(f);
        }
        let l = model.loglik(&th);
        stage_objectives.push(l);
        let improvement = l - last;
        last = l;
        t *= 0.1;
        if t < FINAL_BARRIER
            || (improvement.abs() < tol::MLE_IMPROVEMENT && t < 1e-10)
            || iterations >= tol::MLE_MAX_ITERATIONS
        {
            break;
        }
    }

    let rho = sym(th[ir], th[is], 1.0 - th[ir]);
    let members = (0..nx)
        .map(|x| {
            let click = sym(th[3 * x], th[3 * x + 1], th[3 * x + 2]);
            let null = &rho - &click;
            [click, null]
        })
        .collect();
    let assemblage = Assemblage::new_unchecked(members)?;
    Ok(MleReport {
        assemblage,
        objective: model.loglik(&th),
        stage_objectives,
        iterate_objectives,
        iterations,
    })
}

fn sym(a: f64, b: f64, c: f64) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[re(a), re(b), re(b), re(c)]).expect("2x2")
}

/// P(a|x), P(b|a,x) generated exactly from an assemblage and POVM.
pub fn exact_probabilities(asm: &Assemblage, povm: &Povm) -> Result<ProbabilityTables> {
    if asm.dim() != povm.dim() {
        return Err(Error::DimensionMismatch("assemblage and POVM dimensions differ".into()));
    }
    let mut p_a = Vec::new();
    let mut p_b = Vec::new();
    for m in asm.members() {
        let tr = [m[0].trace().re, m[1].trace().re];
        let total = tr[0] + tr[1];
        p_a.push([tr[0] / total, tr[1] / total]);
        p_b.push([0, 1].map(|a| {
            povm.effects()
                .iter()
                .map(|e| {
                    if tr[a] > 0.0 {
                        crate::linalg::trace_product(e, &m[a]).re / tr[a]
                    } else {
                        0.0
                    }
                })
                .collect()
        }));
    }
    Ok(ProbabilityTables {
        p_a,
        p_b_given_a: p_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{steered_assemblage, MeasurementFamily, SchmidtState};

    fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        0.5 * (a - b).eigenvalues().unwrap().iter().map(|l| l.abs()).sum::<f64>()
    }

    #[test]
    fn exact_round_trip() {
        let s = SchmidtState::phi_plus_alpha(0.6).unwrap();
        let f = MeasurementFamily::one_click(2, 1.1, 0.7).unwrap();
        let asm = steered_assemblage(&s, &f).unwrap();
        let povm = Povm::trine();
        let probs = exact_probabilities(&asm, &povm).unwrap();
        let rep = mle_reconstruct(&probs, &povm).unwrap();
        for x in 0..2 {
            for a in 0..2 {
                let d = trace_distance(&rep.assemblage.members()[x][a], &asm.members()[x][a]);
                assert!(d < 1e-4, "x={x} a={a} d={d}");
            }
        }
        assert!(rep.assemblage.signalling_residual() < 1e-8);
        for w in rep.stage_objectives.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn rejects_unnormalised() {
        let probs = ProbabilityTables {
            p_a: vec![[0.5, 0.6]],
            p_b_given_a: vec![[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]],
        };
        assert!(mle_assemblage(&probs, &Povm::trine()).is_err());
    }
}
