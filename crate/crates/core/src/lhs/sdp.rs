//! Small dense semidefinite programs.
//!
//! Problems are written over Hermitian matrix variables and real scalar
//! variables, with affine matrix equalities, affine PSD constraints, scalar
//! bounds and a linear objective to maximise. Equalities are eliminated
//! through a null-space parametrisation, leaving an LMI problem
//!
//! ```text
//! maximise bᵀz  s.t.  S = C − Σ_k z_k A_k ⪰ 0
//! ```
//!
//! whose conic dual is min ⟨C, X⟩ s.t. ⟨A_k, X⟩ = b_k, X ⪰ 0. The pair is
//! solved with an infeasible-start primal-dual interior-point method using
//! the HKM search direction and Mehrotra predictor-corrector steps. Complex
//! Hermitian blocks are embedded as real symmetric blocks [[R, −I], [I, R]];
//! when all data are real the variables are restricted to real symmetric
//! matrices, which loses nothing since the real part of any optimal point is
//! again optimal.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, re, ComplexMatrix};
use crate::tol;

/// Largest number of real scalar unknowns accepted.
pub const MAX_UNKNOWNS: usize = 200;

const MAX_ITERATIONS: usize = 100;
const TARGET: f64 = 1e-11;
const STEP_FRACTION: f64 = 0.98;
const DIVERGENCE: f64 = 1e10;
/// Iterations without halving the worst residual before giving up.
const STALL_ITERATIONS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// Equality constraints inconsistent or the conic dual diverged.
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

/// constant + Σ coef·X_var + Σ s_j·M_j
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixExpr {
    pub constant: ComplexMatrix,
    pub matrix_terms: Vec<(usize, f64)>,
    pub scalar_terms: Vec<(usize, ComplexMatrix)>,
}

impl MatrixExpr {
    pub fn constant(m: ComplexMatrix) -> Self {
        MatrixExpr {
            constant: m,
            matrix_terms: Vec::new(),
            scalar_terms: Vec::new(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(ComplexMatrix::zeros(dim))
    }

    pub fn var(mut self, var: usize, coef: f64) -> Self {
        self.matrix_terms.push((var, coef));
        self
    }

    pub fn scalar(mut self, var: usize, m: ComplexMatrix) -> Self {
        self.scalar_terms.push((var, m));
        self
    }

    pub fn dim(&self) -> usize {
        self.constant.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixVar {
    pub dim: usize,
    /// Adds the constraint X ⪰ 0.
    pub psd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarBound {
    pub var: usize,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// maximise Σ c_j s_j + Σ Re Tr[W_k X_k]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub scalar: Vec<(usize, f64)>,
    pub matrix: Vec<(usize, ComplexMatrix)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub matrix_vars: Vec<MatrixVar>,
    pub scalar_vars: usize,
    /// Each expression is constrained to vanish.
    pub equalities: Vec<MatrixExpr>,
    /// Each expression is constrained to be PSD.
    pub psd: Vec<MatrixExpr>,
    pub bounds: Vec<ScalarBound>,
    pub objective: Objective,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_matrix_var(&mut self, dim: usize, psd: bool) -> usize {
        self.matrix_vars.push(MatrixVar { dim, psd });
        self.matrix_vars.len() - 1
    }

    pub fn add_scalar_var(&mut self) -> usize {
        self.scalar_vars += 1;
        self.scalar_vars - 1
    }

    pub fn add_equality(&mut self, e: MatrixExpr) {
        self.equalities.push(e);
    }

    pub fn add_psd(&mut self, e: MatrixExpr) {
        self.psd.push(e);
    }

    pub fn bound(&mut self, var: usize, lower: Option<f64>, upper: Option<f64>) {
        self.bounds.push(ScalarBound { var, lower, upper });
    }

    pub fn maximize_scalar(&mut self, var: usize, coef: f64) {
        self.objective.scalar.push((var, coef));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub value: f64,
    pub matrix_values: Vec<ComplexMatrix>,
    pub scalar_values: Vec<f64>,
    /// Largest violation of the stated constraints at the returned point,
    /// relative to 1 + the magnitude of the constraint data.
    pub primal_infeasibility: f64,
    /// Residual of the conic dual certificate relative to 1 + ‖b‖∞.
    pub dual_infeasibility: f64,
    /// |⟨C, X⟩ − bᵀz|
    pub gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_certified(&self) -> bool {
        self.status == SolveStatus::Optimal
            && self.primal_infeasibility <= tol::SDP_RESIDUAL
            && self.dual_infeasibility <= tol::SDP_RESIDUAL
            && self.gap <= tol::SDP_RESIDUAL
    }

    /// Err unless the solution is certified.
    pub fn certified(self) -> Result<Self> {
        if self.is_certified() {
            Ok(self)
        } else {
            Err(Error::Solver {
                status: self.status,
                primal_infeasibility: self.primal_infeasibility,
                dual_infeasibility: self.dual_infeasibility,
                gap: self.gap,
            })
        }
    }
}

/// One coordinate direction of a matrix variable or a scalar.
#[derive(Clone, Copy)]
enum Param {
    Matrix { var: usize, basis: usize },
    Scalar(usize),
}

/// Orthonormal (Hilbert–Schmidt) basis of Hermitian d×d matrices; the real
/// symmetric part comes first.
fn hermitian_basis(dim: usize, real: bool) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    for i in 0..dim {
        let mut m = ComplexMatrix::zeros(dim);
        m[(i, i)] = re(1.0);
        out.push(m);
    }
    for i in 0..dim {
        for j in i + 1..dim {
            let mut m = ComplexMatrix::zeros(dim);
            m[(i, j)] = re(s);
            m[(j, i)] = re(s);
            out.push(m);
        }
    }
    if !real {
        for i in 0..dim {
            for j in i + 1..dim {
                let mut m = ComplexMatrix::zeros(dim);
                m[(i, j)] = c(0.0, s);
                m[(j, i)] = c(0.0, -s);
                out.push(m);
            }
        }
    }
    out
}

/// Coordinates Re Tr[B_k M] in the basis above.
fn coordinates(m: &ComplexMatrix, real: bool) -> Vec<f64> {
    let d = m.dim();
    let r2 = std::f64::consts::SQRT_2;
    let mut out: Vec<f64> = (0..d).map(|i| m[(i, i)].re).collect();
    for i in 0..d {
        for j in i + 1..d {
            out.push(r2 * 0.5 * (m[(i, j)].re + m[(j, i)].re));
        }
    }
    if !real {
        for i in 0..d {
            for j in i + 1..d {
                // Re Tr[B M] for B = i/√2 (E_ij − E_ji)
                out.push(r2 * 0.5 * (m[(j, i)].im - m[(i, j)].im));
            }
        }
    }
    out
}

/// Real symmetric representative of a Hermitian block.
fn embed(m: &ComplexMatrix, real: bool) -> DMatrix<f64> {
    let d = m.dim();
    if real {
        DMatrix::from_fn(d, d, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re))
    } else {
        DMatrix::from_fn(2 * d, 2 * d, |i, j| {
            let (bi, ii) = (i / d, i % d);
            let (bj, jj) = (j / d, j % d);
            let h = 0.5 * (m[(ii, jj)] + m[(jj, ii)].conj());
            match (bi, bj) {
                (0, 0) | (1, 1) => h.re,
                (0, 1) => -h.im,
                _ => h.im,
            }
        })
    }
}

struct Lmi {
    c: Vec<DMatrix<f64>>,
    /// a[k][block]
    a: Vec<Vec<DMatrix<f64>>>,
    b: DVector<f64>,
}

struct IpmResult {
    status: SolveStatus,
    z: DVector<f64>,
    dual_infeasibility: f64,
    gap: f64,
    iterations: usize,
}

pub fn solve_sdp(p: &SdpProblem) -> Result<SdpSolution> {
    validate(p)?;
    let real = is_real(p);

    let mut params = Vec::new();
    let mut var_offsets = Vec::new();
    let bases: Vec<Vec<ComplexMatrix>> = p
        .matrix_vars
        .iter()
        .map(|v| hermitian_basis(v.dim, real))
        .collect();
    for (v, basis) in bases.iter().enumerate() {
        var_offsets.push(params.len());
        for k in 0..basis.len() {
            params.push(Param::Matrix { var: v, basis: k });
        }
    }
    let scalar_offset = params.len();
    for s in 0..p.scalar_vars {
        params.push(Param::Scalar(s));
    }
    let n = params.len();
    if n > MAX_UNKNOWNS {
        return Err(Error::param("unknowns", n as f64, format!("at most {MAX_UNKNOWNS} supported")));
    }

    // Linear part of an expression along each parameter.
    let derivative = |e: &MatrixExpr, prm: Param| -> Option<ComplexMatrix> {
        let mut out: Option<ComplexMatrix> = None;
        let mut acc = |m: ComplexMatrix| {
            out = Some(match out.take() {
                Some(o) => &o + &m,
                None => m,
            })
        };
        match prm {
            Param::Matrix { var, basis } => {
                for &(v, coef) in &e.matrix_terms {
                    if v == var {
                        acc(bases[var][basis].scale(coef));
                    }
                }
            }
            Param::Scalar(s) => {
                for (v, m) in &e.scalar_terms {
                    if *v == s {
                        acc(m.clone());
                    }
                }
            }
        }
        out
    };

    // PSD expressions: stated ones plus PSD variables.
    let mut psd_exprs: Vec<MatrixExpr> = p.psd.clone();
    for (v, mv) in p.matrix_vars.iter().enumerate() {
        if mv.psd {
            psd_exprs.push(MatrixExpr::zero(mv.dim).var(v, 1.0));
        }
    }

    // Equalities: E y = f.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for e in &p.equalities {
        let derivs: Vec<Option<Vec<f64>>> = params
            .iter()
            .map(|&prm| derivative(e, prm).map(|d| coordinates(&d, real)))
            .collect();
        let c0 = coordinates(&e.constant, real);
        for (k, ck) in c0.iter().enumerate() {
            rows.push(
                derivs
                    .iter()
                    .map(|d| d.as_ref().map_or(0.0, |v| v[k]))
                    .collect(),
            );
            rhs.push(-ck);
        }
    }
    let (y0, null) = match eliminate(&rows, &rhs, n) {
        Some(v) => v,
        None => {
            return Ok(SdpSolution {
                status: SolveStatus::Infeasible,
                value: f64::NAN,
                matrix_values: Vec::new(),
                scalar_values: Vec::new(),
                primal_infeasibility: f64::INFINITY,
                dual_infeasibility: f64::NAN,
                gap: f64::NAN,
                iterations: 0,
            })
        }
    };
    let nz = null.ncols();

    // Objective coefficients per parameter.
    let mut cvec = DVector::zeros(n);
    for &(s, coef) in &p.objective.scalar {
        cvec[scalar_offset + s] += coef;
    }
    for (v, w) in &p.objective.matrix {
        for (k, b) in bases[*v].iter().enumerate() {
            cvec[var_offsets[*v] + k] += crate::linalg::trace_product(w, b).re;
        }
    }

    // LMI blocks: S_j = C_j − Σ z_k A_jk with C_j = embed(F_j(y0)),
    // A_jk = −Σ_p N_pk embed(∂F_j/∂y_p).
    let mut lmi_c = Vec::new();
    let mut lmi_a: Vec<Vec<DMatrix<f64>>> = vec![Vec::new(); nz];
    let mut push_block = |constant: DMatrix<f64>, derivs: Vec<(usize, DMatrix<f64>)>| {
        let mut c0 = constant;
        for (pi, d) in &derivs {
            c0 += d * y0[*pi];
        }
        for k in 0..nz {
            let mut a = DMatrix::zeros(c0.nrows(), c0.ncols());
            for (pi, d) in &derivs {
                let w = null[(*pi, k)];
                if w != 0.0 {
                    a -= d * w;
                }
            }
            lmi_a[k].push(a);
        }
        lmi_c.push(c0);
    };
    for e in &psd_exprs {
        let derivs = params
            .iter()
            .enumerate()
            .filter_map(|(i, &prm)| derivative(e, prm).map(|d| (i, embed(&d, real))))
            .collect();
        push_block(embed(&e.constant, real), derivs);
    }
    for bnd in &p.bounds {
        let pi = scalar_offset + bnd.var;
        if let Some(lo) = bnd.lower {
            push_block(DMatrix::from_element(1, 1, -lo), vec![(pi, DMatrix::from_element(1, 1, 1.0))]);
        }
        if let Some(hi) = bnd.upper {
            push_block(DMatrix::from_element(1, 1, hi), vec![(pi, DMatrix::from_element(1, 1, -1.0))]);
        }
    }

    let b = null.transpose() * &cvec;
    let lmi = Lmi {
        c: lmi_c,
        a: lmi_a,
        b,
    };
    let res = if nz == 0 || lmi.c.is_empty() {
        IpmResult {
            status: if lmi.c.is_empty() && b_nonzero(&lmi.b) {
                SolveStatus::Unbounded
            } else {
                SolveStatus::Optimal
            },
            z: DVector::zeros(nz),
            dual_infeasibility: 0.0,
            gap: 0.0,
            iterations: 0,
        }
    } else {
        interior_point(&lmi)
    };

    let y = &y0 + &null * &res.z;
    let rhs_scale = 1.0 + rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let eq_residual = rows
        .iter()
        .zip(&rhs)
        .map(|(r, f)| (r.iter().zip(y.iter()).map(|(a, b)| a * b).sum::<f64>() - f).abs())
        .fold(0.0, f64::max)
        / rhs_scale;
    let mut cone_violation: f64 = 0.0;
    for (j, c0) in lmi.c.iter().enumerate() {
        let mut s = c0.clone();
        for k in 0..nz {
            s -= &lmi.a[k][j] * res.z[k];
        }
        let scale = 1.0 + s.amax();
        let min = SymmetricEigen::new(s).eigenvalues.min();
        cone_violation = cone_violation.max(-min / scale);
    }
    let primal_infeasibility = eq_residual.max(cone_violation);

    let matrix_values = bases
        .iter()
        .enumerate()
        .map(|(v, basis)| {
            let mut m = ComplexMatrix::zeros(p.matrix_vars[v].dim);
            for (k, bk) in basis.iter().enumerate() {
                m += &bk.scale(y[var_offsets[v] + k]);
            }
            m
        })
        .collect();
    let scalar_values = (0..p.scalar_vars).map(|s| y[scalar_offset + s]).collect();
    let value = cvec.dot(&y);
    let mut status = res.status;
    if status == SolveStatus::Optimal
        && (primal_infeasibility > tol::SDP_RESIDUAL
            || res.dual_infeasibility > tol::SDP_RESIDUAL
            || res.gap > tol::SDP_RESIDUAL)
    {
        status = SolveStatus::NumericalFailure;
    }
    Ok(SdpSolution {
        status,
        value,
        matrix_values,
        scalar_values,
        primal_infeasibility,
        dual_infeasibility: res.dual_infeasibility,
        gap: res.gap,
        iterations: res.iterations,
    })
}

fn b_nonzero(b: &DVector<f64>) -> bool {
    b.iter().any(|v| v.abs() > 0.0)
}

fn validate(p: &SdpProblem) -> Result<()> {
    let check_expr = |e: &MatrixExpr| -> Result<()> {
        let d = e.dim();
        if !e.constant.is_hermitian() {
            return Err(Error::NotHermitian {
                max_asymmetry: e.constant.max_asymmetry(),
            });
        }
        for &(v, _) in &e.matrix_terms {
            let mv = p
                .matrix_vars
                .get(v)
                .ok_or_else(|| Error::DimensionMismatch(format!("unknown matrix variable {v}")))?;
            if mv.dim != d {
                return Err(Error::DimensionMismatch(format!(
                    "variable {v} is {0}x{0} in a {d}x{d} expression",
                    mv.dim
                )));
            }
        }
        for (s, m) in &e.scalar_terms {
            if *s >= p.scalar_vars {
                return Err(Error::DimensionMismatch(format!("unknown scalar variable {s}")));
            }
            if m.dim() != d {
                return Err(Error::DimensionMismatch("scalar coefficient size".into()));
            }
            if !m.is_hermitian() {
                return Err(Error::NotHermitian {
                    max_asymmetry: m.max_asymmetry(),
                });
            }
        }
        Ok(())
    };
    for e in p.equalities.iter().chain(&p.psd) {
        check_expr(e)?;
    }
    for b in &p.bounds {
        if b.var >= p.scalar_vars {
            return Err(Error::DimensionMismatch(format!("bound on unknown scalar {}", b.var)));
        }
    }
    for &(s, _) in &p.objective.scalar {
        if s >= p.scalar_vars {
            return Err(Error::DimensionMismatch(format!("objective on unknown scalar {s}")));
        }
    }
    for (v, w) in &p.objective.matrix {
        let mv = p
            .matrix_vars
            .get(*v)
            .ok_or_else(|| Error::DimensionMismatch(format!("objective on unknown matrix {v}")))?;
        if mv.dim != w.dim() {
            return Err(Error::DimensionMismatch("objective weight size".into()));
        }
    }
    Ok(())
}

fn is_real(p: &SdpProblem) -> bool {
    let real = |m: &ComplexMatrix| m.max_imag() == 0.0;
    p.equalities
        .iter()
        .chain(&p.psd)
        .all(|e| real(&e.constant) && e.scalar_terms.iter().all(|(_, m)| real(m)))
        && p.objective.matrix.iter().all(|(_, w)| real(w))
}

/// One-sided Jacobi SVD of an m×n matrix: returns (W, V) with W = A V,
/// V orthogonal and the columns of W mutually orthogonal; the singular
/// values are the column norms of W.
fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.ncols();
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut w, &mut v] {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, i)], m[(r, j)]);
                        m[(r, i)] = c * x - s * y;
                        m[(r, j)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

const JACOBI_SWEEPS: usize = 60;

/// Particular solution and null-space basis of E y = f, or None when the
/// system is inconsistent.
fn eliminate(rows: &[Vec<f64>], rhs: &[f64], n: usize) -> Option<(DVector<f64>, DMatrix<f64>)> {
    if rows.is_empty() {
        return Some((DVector::zeros(n), DMatrix::identity(n, n)));
    }
    let e = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    let f = DVector::from_column_slice(rhs);
    let (w, v) = jacobi_svd(&e);
    let sv: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cutoff = 1e-10 * smax;
    let mut y0 = DVector::zeros(n);
    let mut null_cols = Vec::new();
    for (k, &s) in sv.iter().enumerate() {
        if s > cutoff {
            y0 += v.column(k) * (w.column(k).dot(&f) / (s * s));
        } else {
            null_cols.push(v.column(k).into_owned());
        }
    }
    let resid = (&e * &y0 - &f).amax();
    if resid > tol::SDP_RESIDUAL * (1.0 + f.amax()) {
        return None;
    }
    let null = if null_cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&null_cols)
    };
    Some((y0, null))
}

fn fro(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

fn blocks_inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest step α ≤ 1 (scaled by the boundary fraction) keeping X + α dX ≻ 0.
fn step_length(x: &[DMatrix<f64>], dx: &[DMatrix<f64>], fraction: f64) -> f64 {
    let mut alpha_max = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        let min = match xb.clone().cholesky() {
            Some(ch) => {
                let l = ch.l();
                let linv = match l.clone().try_inverse() {
                    Some(v) => v,
                    None => return 0.0,
                };
                let m = symmetrize(&(&linv * db * linv.transpose()));
                SymmetricEigen::new(m).eigenvalues.min()
            }
            None => return 0.0,
        };
        if min < 0.0 {
            alpha_max = alpha_max.min(-1.0 / min);
        }
    }
    (fraction * alpha_max).min(1.0)
}

fn interior_point(lmi: &Lmi) -> IpmResult {
    let nz = lmi.b.len();
    let nb = lmi.c.len();
    let dims: Vec<usize> = lmi.c.iter().map(|c| c.nrows()).collect();
    let total: f64 = dims.iter().sum::<usize>() as f64;
    let norm_c = lmi.c.iter().map(|c| fro(c).powi(2)).sum::<f64>().sqrt();
    let norm_b = lmi.b.amax();
    let norm_a: Vec<f64> = lmi
        .a
        .iter()
        .map(|ak| ak.iter().map(|m| fro(m).powi(2)).sum::<f64>().sqrt())
        .collect();

    let xi = (0..nz)
        .map(|k| (1.0 + lmi.b[k].abs()) / (1.0 + norm_a[k]))
        .fold(10f64.max(total.sqrt()), f64::max);
    let eta = norm_a
        .iter()
        .copied()
        .fold(10f64.max(total.sqrt()).max(norm_c), f64::max);
    let mut x: Vec<DMatrix<f64>> = dims.iter().map(|&d| DMatrix::identity(d, d) * xi).collect();
    let mut s: Vec<DMatrix<f64>> = dims.iter().map(|&d| DMatrix::identity(d, d) * eta).collect();
    let mut z = DVector::zeros(nz);

    let a_op = |m: &[DMatrix<f64>]| -> DVector<f64> {
        DVector::from_fn(nz, |k, _| blocks_inner(&lmi.a[k], m))
    };
    let a_adj = |v: &DVector<f64>| -> Vec<DMatrix<f64>> {
        (0..nb)
            .map(|j| {
                let mut m = DMatrix::zeros(dims[j], dims[j]);
                for k in 0..nz {
                    if v[k] != 0.0 {
                        m += &lmi.a[k][j] * v[k];
                    }
                }
                m
            })
            .collect()
    };

    let mut best: Option<(f64, DVector<f64>, f64, f64)> = None;
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut stalled = 0;
    let mut since_progress = 0;
    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);

    for iter in 0..MAX_ITERATIONS {
        iterations = iter;
        let rp = &lmi.b - a_op(&x);
        let az = a_adj(&z);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|j| &lmi.c[j] - &az[j] - &s[j]).collect();
        let mu = blocks_inner(&x, &s) / total;
        let pobj = blocks_inner(&lmi.c, &x);
        let dobj = lmi.b.dot(&z);
        let pinf = rp.amax() / (1.0 + norm_b);
        let dinf = rd.iter().map(|m| m.amax()).fold(0.0, f64::max) / (1.0 + norm_c);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let gap_abs = (pobj - dobj).abs();
        last = (pinf, dinf, gap_abs);

        let score = pinf.max(dinf).max(gap);
        if best.as_ref().is_none_or(|b| score < 0.5 * b.0) {
            since_progress = 0;
        } else {
            since_progress += 1;
        }
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, z.clone(), pinf, gap_abs));
        }
        if since_progress >= STALL_ITERATIONS {
            status = SolveStatus::NumericalFailure;
            break;
        }
        if pinf < TARGET && dinf < TARGET && gap < TARGET {
            status = SolveStatus::Optimal;
            break;
        }
        if dobj > DIVERGENCE && dinf < 1e-6 {
            status = SolveStatus::Unbounded;
            break;
        }
        if pobj < -DIVERGENCE && pinf < 1e-6 {
            status = SolveStatus::Infeasible;
            break;
        }

        let s_inv: Vec<DMatrix<f64>> = match s
            .iter()
            .map(|m| m.clone().cholesky().map(|c| c.inverse()))
            .collect::<Option<Vec<_>>>()
        {
            Some(v) => v,
            None => {
                status = SolveStatus::NumericalFailure;
                break;
            }
        };

        // Schur complement M_ij = Tr(A_i X A_j S⁻¹).
        let g: Vec<Vec<DMatrix<f64>>> = (0..nz)
            .map(|k| (0..nb).map(|j| &x[j] * &lmi.a[k][j] * &s_inv[j]).collect())
            .collect();
        let mut m = DMatrix::zeros(nz, nz);
        for i in 0..nz {
            for k in i..nz {
                let v = blocks_inner(&lmi.a[i], &g[k]);
                m[(i, k)] = v;
                m[(k, i)] = v;
            }
        }
        let factor = m.clone().cholesky();
        let lu = if factor.is_none() { Some(m.clone().lu()) } else { None };
        let solve = |r: &DVector<f64>| -> Option<DVector<f64>> {
            match (&factor, &lu) {
                (Some(ch), _) => Some(ch.solve(r)),
                (None, Some(lu)) => lu.solve(r),
                _ => None,
            }
        };

        // Direction for a given centring target and second-order term.
        let direction = |sigma_mu: f64, corr: Option<&Vec<DMatrix<f64>>>| {
            let base: Vec<DMatrix<f64>> = (0..nb)
                .map(|j| {
                    let mut t = &s_inv[j] * sigma_mu - &x[j] - &x[j] * &rd[j] * &s_inv[j];
                    if let Some(cc) = corr {
                        t -= &cc[j] * &s_inv[j];
                    }
                    t
                })
                .collect();
            let r = &rp - a_op(&base);
            let dz = solve(&r)?;
            let adz = a_adj(&dz);
            let ds: Vec<DMatrix<f64>> = (0..nb).map(|j| &rd[j] - &adz[j]).collect();
            let dx: Vec<DMatrix<f64>> = (0..nb)
                .map(|j| {
                    let mut t = &s_inv[j] * sigma_mu - &x[j] - &x[j] * &ds[j] * &s_inv[j];
                    if let Some(cc) = corr {
                        t -= &cc[j] * &s_inv[j];
                    }
                    symmetrize(&t)
                })
                .collect();
            Some((dx, dz, ds))
        };

        let Some((dxa, _, dsa)) = direction(0.0, None) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let ap = step_length(&x, &dxa, 1.0);
        let ad = step_length(&s, &dsa, 1.0);
        let xa: Vec<DMatrix<f64>> = (0..nb).map(|j| &x[j] + &dxa[j] * ap).collect();
        let sa: Vec<DMatrix<f64>> = (0..nb).map(|j| &s[j] + &dsa[j] * ad).collect();
        let mu_aff = blocks_inner(&xa, &sa) / total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Vec<DMatrix<f64>> = (0..nb).map(|j| &dxa[j] * &dsa[j]).collect();
        let Some((dx, dz, ds)) = direction(sigma * mu, Some(&corr)) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let ap = step_length(&x, &dx, STEP_FRACTION);
        let ad = step_length(&s, &ds, STEP_FRACTION);
        if ap < 1e-12 && ad < 1e-12 {
            stalled += 1;
            if stalled > 3 {
                status = SolveStatus::NumericalFailure;
                break;
            }
        } else {
            stalled = 0;
        }
        for j in 0..nb {
            x[j] += &dx[j] * ap;
            s[j] += &ds[j] * ad;
        }
        z += &dz * ad;
    }

    let (pinf, _, gap_abs) = last;
    let mut z_out = z;
    let mut dual_inf = pinf;
    let mut gap_out = gap_abs;
    if status != SolveStatus::Optimal {
        if let Some((_, bz, bp, bg)) = best {
            z_out = bz;
            dual_inf = bp;
            gap_out = bg;
        }
        if matches!(status, SolveStatus::MaxIterations | SolveStatus::NumericalFailure)
            && dual_inf <= tol::SDP_RESIDUAL
            && gap_out <= tol::SDP_RESIDUAL
        {
            status = SolveStatus::Optimal;
        }
    }
    IpmResult {
        status,
        z: z_out,
        dual_infeasibility: dual_inf,
        gap: gap_out,
        iterations: iterations + 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_identity_bound() {
        // maximise t s.t. I − tI ⪰ 0
        let mut p = SdpProblem::new();
        let t = p.add_scalar_var();
        p.add_psd(
            MatrixExpr::constant(ComplexMatrix::identity(2)).scalar(t, ComplexMatrix::identity(2).scale(-1.0)),
        );
        p.maximize_scalar(t, 1.0);
        let sol = solve_sdp(&p).unwrap().certified().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9, "{}", sol.value);
    }

    #[test]
    fn max_eigenvalue_as_sdp() {
        // min t s.t. tI − M ⪰ 0, for a complex Hermitian M.
        let m = ComplexMatrix::from_rows(&[re(1.0), c(0.3, 0.4), c(0.3, -0.4), re(-0.5)]).unwrap();
        let mut p = SdpProblem::new();
        let t = p.add_scalar_var();
        p.add_psd(MatrixExpr::constant(m.scale(-1.0)).scalar(t, ComplexMatrix::identity(2)));
        p.maximize_scalar(t, -1.0);
        let sol = solve_sdp(&p).unwrap().certified().unwrap();
        let lmax = m.max_eigenvalue().unwrap();
        assert!((sol.scalar_values[0] - lmax).abs() < 1e-9);
    }

    #[test]
    fn matrix_variable_with_equality() {
        // max Re Tr[W X] s.t. Tr X = 1, X ⪰ 0 → λ_max(W), complex W.
        let w = ComplexMatrix::from_rows(&[re(0.2), c(0.0, 0.7), c(0.0, -0.7), re(0.1)]).unwrap();
        let mut p = SdpProblem::new();
        let xv = p.add_matrix_var(2, true);
        // Tr X = 1 written as a 1×1 equality is not expressible, so fix X's
        // trace through a scalar: X − sI has ... use X + Y = I with Y ⪰ 0 instead.
        let y = p.add_matrix_var(2, true);
        p.add_equality(
            MatrixExpr::constant(ComplexMatrix::identity(2).scale(-1.0))
                .var(xv, 1.0)
                .var(y, 1.0),
        );
        p.objective.matrix.push((xv, w.clone()));
        let sol = solve_sdp(&p).unwrap().certified().unwrap();
        let ev = w.eigenvalues().unwrap();
        let expect: f64 = ev.iter().filter(|&&l| l > 0.0).sum();
        assert!((sol.value - expect).abs() < 1e-8, "{} vs {}", sol.value, expect);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut p = SdpProblem::new();
        let xv = p.add_matrix_var(2, true);
        p.add_equality(MatrixExpr::constant(ComplexMatrix::identity(2).scale(-1.0)).var(xv, 1.0));
        p.add_equality(MatrixExpr::constant(ComplexMatrix::identity(2).scale(-2.0)).var(xv, 1.0));
        let sol = solve_sdp(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.certified().is_err());
    }

    #[test]
    fn unbounded_detected() {
        let mut p = SdpProblem::new();
        let t = p.add_scalar_var();
        p.bound(t, Some(0.0), None);
        p.maximize_scalar(t, 1.0);
        let sol = solve_sdp(&p).unwrap();
        assert_ne!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn infeasible_cone_detected() {
        // X ⪰ 0 and X = −I.
        let mut p = SdpProblem::new();
        let xv = p.add_matrix_var(2, true);
        p.add_equality(MatrixExpr::constant(ComplexMatrix::identity(2)).var(xv, 1.0));
        let sol = solve_sdp(&p).unwrap();
        assert!(!sol.is_certified());
    }

    #[test]
    fn json_round_trip() {
        let mut p = SdpProblem::new();
        let t = p.add_scalar_var();
        p.bound(t, Some(-1.0), Some(2.0));
        p.maximize_scalar(t, 1.0);
        let txt = serde_json::to_string(&p).unwrap();
        let q: SdpProblem = serde_json::from_str(&txt).unwrap();
        assert_eq!(p, q);
        let sol = solve_sdp(&q).unwrap().certified().unwrap();
        assert!((sol.value - 2.0).abs() < 1e-9);
        let back: SdpSolution = serde_json::from_str(&serde_json::to_string(&sol).unwrap()).unwrap();
        assert_eq!(back.status, SolveStatus::Optimal);
    }
}
