//! Dense complex matrices of small dimension and a Hermitian eigensolver.
//!
//! Everything here works on square matrices of dimension at most
//! [`MAX_DIM`]. Hermitian 2×2 problems are diagonalised in closed form;
//! larger ones use cyclic complex Jacobi rotations.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub const MAX_DIM: usize = 8;

pub type C64 = Complex64;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRecord", into = "MatrixRecord")]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

/// JSON layout: explicit dimension and row-major `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixRecord> for ComplexMatrix {
    type Error = Error;

    fn try_from(rec: MatrixRecord) -> Result<Self> {
        if rec.dim == 0 || rec.dim > MAX_DIM {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimension {} outside 1..={MAX_DIM}",
                rec.dim
            )));
        }
        if rec.entries.len() != rec.dim * rec.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                rec.entries.len(),
                rec.dim,
                rec.dim
            )));
        }
        Ok(ComplexMatrix {
            dim: rec.dim,
            data: rec.entries.iter().map(|[r, i]| c(*r, *i)).collect(),
        })
    }
}

impl From<ComplexMatrix> for MatrixRecord {
    fn from(m: ComplexMatrix) -> Self {
        MatrixRecord {
            dim: m.dim,
            entries: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  [")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f, " ]")?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        ComplexMatrix {
            dim,
            data: vec![C64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = re(1.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major entries; the length must be a perfect square.
    pub fn from_rows(entries: &[C64]) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() || dim > MAX_DIM {
            return Err(Error::DimensionMismatch(format!(
                "{} entries do not form a square matrix of dimension <= {MAX_DIM}",
                entries.len()
            )));
        }
        Ok(ComplexMatrix {
            dim,
            data: entries.to_vec(),
        })
    }

    pub fn from_real_rows(entries: &[f64]) -> Result<Self> {
        let z: Vec<C64> = entries.iter().map(|&x| re(x)).collect();
        Self::from_rows(&z)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = re(v);
        }
        m
    }

    /// |u⟩⟨v|
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len(), "outer product of unequal lengths");
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    /// |v⟩⟨v|
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// ⟨u|M|v⟩
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let mv = self.apply(v);
        u.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest |M[i][j] - conj(M[j][i])|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.max_asymmetry() <= tol::HERMITIAN
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest imaginary part among the entries.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(0.5)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.dim, self.dim, other.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self + other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(self * other)
    }

    /// Eigenvalues only, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eig_hermitian(self)?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("non-empty"))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    /// Square root of a positive semidefinite Hermitian matrix. Eigenvalues
    /// down to `-tol::PSD` are clipped to zero.
    pub fn sqrt_psd(&self) -> Result<Self> {
        let eig = eig_hermitian(self)?;
        let min = *eig.values.last().expect("non-empty");
        if min < -tol::PSD {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(eig.map_values(|l| l.max(0.0).sqrt()))
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> C64 {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = re(1.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
                .expect("non-empty range");
            if a[pivot * n + col].norm() == 0.0 {
                return re(0.0);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for row in col + 1..n {
                let f = a[row * n + col] / p;
                for k in col..n {
                    let v = a[col * n + k];
                    a[row * n + k] -= f * v;
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in mul");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::default() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-1.0)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self + &rhs
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self - &rhs
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add_assign");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub_assign");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// Kronecker product A ⊗ B. The result must fit in [`MAX_DIM`].
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.dim * b.dim;
    if n > MAX_DIM {
        return Err(Error::DimensionMismatch(format!(
            "kron of {}x{} and {}x{} exceeds dimension {MAX_DIM}",
            a.dim, a.dim, b.dim, b.dim
        )));
    }
    Ok(ComplexMatrix::from_fn(n, |i, j| {
        a[(i / b.dim, j / b.dim)] * b[(i % b.dim, j % b.dim)]
    }))
}

fn check_bipartite(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<()> {
    if d_a == 0 || d_b == 0 || d_a * d_b != m.dim {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not on a {d_a}x{d_b} bipartite space",
            m.dim, m.dim
        )));
    }
    Ok(())
}

/// Tr_A over the first tensor factor.
pub fn partial_trace_a(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, d_a, d_b)?;
    Ok(ComplexMatrix::from_fn(d_b, |i, j| {
        (0..d_a).map(|k| m[(k * d_b + i, k * d_b + j)]).sum()
    }))
}

/// Tr_B over the second tensor factor.
pub fn partial_trace_b(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, d_a, d_b)?;
    Ok(ComplexMatrix::from_fn(d_a, |i, j| {
        (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()
    }))
}

/// Hilbert–Schmidt inner product Tr[A†B].
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    a.check_same_dim(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum())
}

/// Tr[AB] without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    assert_eq!(a.dim, b.dim, "dimension mismatch in trace_product");
    let n = a.dim;
    let mut s = C64::default();
    for i in 0..n {
        for k in 0..n {
            s += a.data[i * n + k] * b.data[k * n + i];
        }
    }
    s
}

/// Descending eigenvalues and matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

impl EigenResult {
    /// Σ λ_i v_i v_i†
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|l| l)
    }

    /// Σ f(λ_i) v_i v_i†
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut m = ComplexMatrix::zeros(n);
        for (l, v) in self.values.iter().zip(&self.vectors) {
            m += &ComplexMatrix::projector(v).scale(f(*l));
        }
        m
    }
}

/// Diagonalises a Hermitian matrix.
///
/// Eigenvalues come out descending. Each eigenvector is phase-fixed so that
/// its first non-negligible component is real and positive; exact ties are
/// ordered by lexicographic comparison of the eigenvectors' real parts,
/// larger first.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenResult> {
    let asym = m.max_asymmetry();
    if asym > tol::HERMITIAN * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
        });
    }
    let h = m.hermitian_part();
    let mut pairs = match h.dim {
        1 => vec![(h[(0, 0)].re, vec![re(1.0)])],
        2 => eig_2x2(&h),
        _ => eig_jacobi(&h),
    };
    for (_, v) in pairs.iter_mut() {
        fix_phase(v);
    }
    pairs.sort_by(|(la, va), (lb, vb)| {
        lb.total_cmp(la).then_with(|| {
            let ra: Vec<f64> = va.iter().map(|z| z.re).collect();
            let rb: Vec<f64> = vb.iter().map(|z| z.re).collect();
            lexicographic(&rb, &ra)
        })
    });
    let (values, vectors) = pairs.into_iter().unzip();
    Ok(EigenResult { values, vectors })
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn fix_phase(v: &mut [C64]) {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-10).copied() {
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

fn eig_2x2(h: &ComplexMatrix) -> Vec<(f64, Vec<C64>)> {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let (l_hi, l_lo) = (mean + half_gap, mean - half_gap);
    if b.norm() <= f64::EPSILON * (a.abs() + d.abs()).max(f64::MIN_POSITIVE) {
        // Already diagonal.
        let e0 = vec![re(1.0), re(0.0)];
        let e1 = vec![re(0.0), re(1.0)];
        return if a >= d {
            vec![(a, e0), (d, e1)]
        } else {
            vec![(d, e1), (a, e0)]
        };
    }
    let vec_for = |l: f64| -> Vec<C64> {
        // Two candidate null vectors of (H - l); keep the better-conditioned one.
        let v1 = [b, re(l - a)];
        let v2 = [re(l - d), b.conj()];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        if n1 >= n2 {
            v1.to_vec()
        } else {
            v2.to_vec()
        }
    };
    vec![(l_hi, vec_for(l_hi)), (l_lo, vec_for(l_lo))]
}

fn eig_jacobi(h: &ComplexMatrix) -> Vec<(f64, Vec<C64>)> {
    let n = h.dim;
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol::JACOBI_OFF_DIAGONAL * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // U = diag(1, e^{-iφ}) · real rotation, zeroing A[p][q].
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
                let (s, cs) = theta.sin_cos();
                let u_pp = re(cs);
                let u_pq = re(s);
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * cs;
                // A <- A U (columns p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                }
                // A <- U† A (rows p, q)
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = re(0.0);
                a[(q, p)] = re(0.0);
                a[(p, p)] = re(a[(p, p)].re);
                a[(q, q)] = re(a[(q, q)].re);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }
    (0..n)
        .map(|j| (a[(j, j)].re, (0..n).map(|i| v[(i, j)]).collect()))
        .collect()
}

/// Inner product ⟨u|v⟩.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Tensor product of state vectors.
pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter()
        .flat_map(|a| v.iter().map(move |b| a * b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
        // Small LCG so the unit tests stay dependency-free.
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = re(next());
            for j in i + 1..dim {
                let z = c(next(), next());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn identity_spectrum() {
        let e = eig_hermitian(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert_eq!(e.vectors[0], vec![re(1.0), re(0.0)]);
    }

    #[test]
    fn diag_spectrum() {
        let e = eig_hermitian(&ComplexMatrix::diag(&[1.0, -1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, -1.0]);
        let e = eig_hermitian(&ComplexMatrix::diag(&[-1.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, -1.0]);
        assert_eq!(e.vectors[0], vec![re(0.0), re(1.0)]);
    }

    #[test]
    fn projector_pair_at_two_thirds_pi() {
        let d = 2.0 * std::f64::consts::PI / 3.0;
        let v = |mu: f64| vec![re((mu / 2.0).cos()), re((mu / 2.0).sin())];
        let sum = &ComplexMatrix::projector(&v(-d / 2.0)) + &ComplexMatrix::projector(&v(d / 2.0));
        let e = eig_hermitian(&sum).unwrap();
        assert!((e.values[0] - 1.5).abs() < 1e-14);
        assert!((e.values[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[1.0, 2.0, 0.0, 1.0]).unwrap();
        match eig_hermitian(&m) {
            Err(Error::NotHermitian { max_asymmetry }) => assert!((max_asymmetry - 2.0).abs() < 1e-15),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_reconstructs_random_matrices() {
        for dim in 1..=8 {
            for seed in 0..20 {
                let m = rand_hermitian(dim, seed * 31 + dim as u64);
                let e = eig_hermitian(&m).unwrap();
                let err = (&e.reconstruct() - &m).max_abs();
                assert!(err <= tol::RECONSTRUCTION, "dim {dim} seed {seed}: {err:e}");
                for w in e.values.windows(2) {
                    assert!(w[0] >= w[1]);
                }
                for (i, vi) in e.vectors.iter().enumerate() {
                    for (j, vj) in e.vectors.iter().enumerate() {
                        let ip = inner(vi, vj);
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((ip - re(expect)).norm() < 1e-12, "orthonormality {i},{j}");
                    }
                }
            }
        }
    }

    #[test]
    fn degenerate_jacobi_is_deterministic() {
        let m = ComplexMatrix::identity(4).scale(0.25);
        let a = eig_hermitian(&m).unwrap();
        let b = eig_hermitian(&m).unwrap();
        assert_eq!(a.vectors, b.vectors);
        assert_eq!(a.vectors[0][0], re(1.0));
    }

    #[test]
    fn kron_and_partial_traces() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2).unwrap(), ComplexMatrix::identity(4));
        let a = rand_hermitian(2, 3);
        let b = rand_hermitian(3, 4);
        let ab = kron(&a, &b).unwrap();
        let ta = partial_trace_a(&ab, 2, 3).unwrap();
        assert!((&ta - &b.scale_c(a.trace())).max_abs() < 1e-12);
        let tb = partial_trace_b(&ab, 2, 3).unwrap();
        assert!((&tb - &a.scale_c(b.trace())).max_abs() < 1e-12);
        assert!((ta.trace() - ab.trace()).norm() < 1e-12);
        assert!(kron(&ComplexMatrix::identity(3), &ComplexMatrix::identity(3)).is_err());
        assert!(partial_trace_a(&ab, 2, 2).is_err());
    }

    #[test]
    fn maximally_entangled_reduced_state() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = vec![re(h), re(0.0), re(0.0), re(h)];
        let rho = ComplexMatrix::projector(&phi);
        let red = partial_trace_a(&rho, 2, 2).unwrap();
        assert!((&red - &ComplexMatrix::identity(2).scale(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn hs_inner_of_rank_one_projectors() {
        let u = vec![re(1.0), re(0.0)];
        let t: f64 = 0.4;
        let v = vec![re(t.cos()), c(0.0, t.sin())];
        let overlap = inner(&u, &v).norm();
        let ip = hs_inner(&ComplexMatrix::projector(&u), &ComplexMatrix::projector(&v)).unwrap();
        assert!((ip.re - overlap * overlap).abs() < 1e-15);
        assert!(ip.im.abs() < 1e-15);
        assert!(hs_inner(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn determinant_matches_eigenvalue_product() {
        for seed in 0..10 {
            let m = rand_hermitian(4, 100 + seed);
            let prod: f64 = m.eigenvalues().unwrap().iter().product();
            let det = m.determinant();
            assert!((det.re - prod).abs() < 1e-12, "{} vs {}", det.re, prod);
            assert!(det.im.abs() < 1e-12);
        }
    }

    #[test]
    fn json_layout() {
        let m = ComplexMatrix::from_rows(&[re(1.0), c(0.0, -0.5), c(0.0, 0.5), re(2.0)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"dim":2,"entries":[[1.0,0.0],[0.0,-0.5],[0.0,0.5],[2.0,0.0]]}"#);
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"dim":2,"entries":[[1.0,0.0]]}"#).is_err());
    }
}
