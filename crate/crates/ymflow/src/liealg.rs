//! Dense arithmetic on so(n): antisymmetric matrices, the generator fields
//! `sigma_i(y) = y e_i^T - e_i y^T`, Frobenius products and the exponential map.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

/// An element of so(n), stored as a dense `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SoMatrix {
    m: DMatrix<f64>,
}

impl SoMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    /// Projects an arbitrary square matrix onto so(n) via `(M - M^T) / 2`.
    pub fn antisymmetrize(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "so(n) elements are square");
        let t = m.transpose();
        Self { m: (m - t) * 0.5 }
    }

    /// Wraps a matrix that the caller guarantees to be antisymmetric.
    pub(crate) fn from_antisymmetric(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    /// `E_ij = e_i e_j^T - e_j e_i^T` (zero-based indices).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(n, n);
        if i != j {
            m[(i, j)] = 1.0;
            m[(j, i)] = -1.0;
        }
        Self { m }
    }

    /// Antisymmetrization of a matrix with independent uniform entries in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        Self::antisymmetrize(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.m.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn dot(&self, other: &SoMatrix) -> f64 {
        self.m.dot(&other.m)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * s }
    }

    /// `self += s * other` without allocating.
    pub fn axpy(&mut self, s: f64, other: &SoMatrix) {
        for (a, b) in self.m.iter_mut().zip(other.m.iter()) {
            *a += s * b;
        }
    }

    /// `self += s * [a, b]`.
    pub fn add_commutator(&mut self, s: f64, a: &SoMatrix, b: &SoMatrix) {
        self.m.gemm(s, &a.m, &b.m, 1.0);
        self.m.gemm(-s, &b.m, &a.m, 1.0);
    }

    /// Conjugation `S X S^T` by an orthogonal matrix.
    pub fn conjugate(&self, s: &DMatrix<f64>) -> Self {
        Self::from_antisymmetric(s * &self.m * s.transpose())
    }

    /// Largest violation of `X + X^T = 0`.
    pub fn antisymmetry_defect(&self) -> f64 {
        (&self.m + self.m.transpose()).amax()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.amax()
    }
}

impl Add for &SoMatrix {
    type Output = SoMatrix;
    fn add(self, rhs: &SoMatrix) -> SoMatrix {
        SoMatrix { m: &self.m + &rhs.m }
    }
}

impl Sub for &SoMatrix {
    type Output = SoMatrix;
    fn sub(self, rhs: &SoMatrix) -> SoMatrix {
        SoMatrix { m: &self.m - &rhs.m }
    }
}

impl Add for SoMatrix {
    type Output = SoMatrix;
    fn add(self, rhs: SoMatrix) -> SoMatrix {
        SoMatrix { m: self.m + rhs.m }
    }
}

impl Sub for SoMatrix {
    type Output = SoMatrix;
    fn sub(self, rhs: SoMatrix) -> SoMatrix {
        SoMatrix { m: self.m - rhs.m }
    }
}

impl AddAssign<&SoMatrix> for SoMatrix {
    fn add_assign(&mut self, rhs: &SoMatrix) {
        self.m += &rhs.m;
    }
}

impl SubAssign<&SoMatrix> for SoMatrix {
    fn sub_assign(&mut self, rhs: &SoMatrix) {
        self.m -= &rhs.m;
    }
}

impl Mul<f64> for &SoMatrix {
    type Output = SoMatrix;
    fn mul(self, s: f64) -> SoMatrix {
        self.scale(s)
    }
}

impl Mul<f64> for SoMatrix {
    type Output = SoMatrix;
    fn mul(self, s: f64) -> SoMatrix {
        SoMatrix { m: self.m * s }
    }
}

impl Neg for SoMatrix {
    type Output = SoMatrix;
    fn neg(self) -> SoMatrix {
        SoMatrix { m: -self.m }
    }
}

/// An so(n)-valued 1-form evaluated at a point: one matrix per coordinate index.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub comps: Vec<SoMatrix>,
}

impl OneForm {
    pub fn zeros(n: usize) -> Self {
        Self { comps: vec![SoMatrix::zeros(n); n] }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.comps.iter().map(SoMatrix::norm_sq).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &OneForm) -> f64 {
        frobenius_inner(&self.comps, &other.comps).expect("matching 1-forms")
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { comps: self.comps.iter().map(|c| c.scale(s)).collect() }
    }

    pub fn axpy(&mut self, s: f64, other: &OneForm) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.axpy(s, b);
        }
    }

    pub fn sub(&self, other: &OneForm) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

/// An so(n)-valued 2-form: `F[i][j] = -F[j][i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoForm {
    n: usize,
    comps: Vec<SoMatrix>,
}

impl TwoForm {
    pub fn zeros(n: usize) -> Self {
        Self { n, comps: vec![SoMatrix::zeros(n); n * n] }
    }

    /// Builds `F[i][j]` from the strict upper triangle produced by `f(i, j)`, `i < j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> SoMatrix) -> Self {
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let m = f(i, j);
                out.comps[j * n + i] = -m.clone();
                out.comps[i * n + j] = m;
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &SoMatrix {
        &self.comps[i * self.n + j]
    }

    /// Row `alpha` viewed as a 1-form `j -> F[alpha][j]`.
    pub fn row(&self, alpha: usize) -> OneForm {
        OneForm { comps: (0..self.n).map(|j| self.get(alpha, j).clone()).collect() }
    }

    /// Frobenius norm summed over ordered index pairs.
    pub fn norm(&self) -> f64 {
        self.comps.iter().map(SoMatrix::norm_sq).sum::<f64>().sqrt()
    }

    /// Interior product with a vector: `(y . F)_j = sum_i y_i F[i][j]`.
    pub fn interior(&self, y: &[f64]) -> OneForm {
        let n = self.n;
        let mut out = OneForm::zeros(n);
        for (i, &yi) in y.iter().enumerate() {
            for j in 0..n {
                out.comps[j].axpy(yi, self.get(i, j));
            }
        }
        out
    }

    pub fn max_antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                d = d.max((self.get(i, j) + self.get(j, i)).max_abs());
            }
        }
        d
    }
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: &SoMatrix, b: &SoMatrix) -> Result<SoMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!(
            "commutator of so({}) and so({})",
            a.dim(),
            b.dim()
        )));
    }
    Ok(bracket(a, b))
}

/// Unchecked commutator for internal hot loops.
#[inline]
pub(crate) fn bracket(a: &SoMatrix, b: &SoMatrix) -> SoMatrix {
    let mut m = &a.m * &b.m;
    m.gemm(-1.0, &b.m, &a.m, 1.0);
    SoMatrix { m }
}

/// `sum_alpha tr(T_alpha^T V_alpha)` over two equally indexed collections.
pub fn frobenius_inner(t: &[SoMatrix], v: &[SoMatrix]) -> Result<f64> {
    if t.len() != v.len() {
        return Err(Error::Dimension(format!(
            "index sets of length {} and {}",
            t.len(),
            v.len()
        )));
    }
    let mut s = 0.0;
    for (a, b) in t.iter().zip(v) {
        if a.dim() != b.dim() {
            return Err(Error::Dimension("mixed matrix sizes".into()));
        }
        s += a.dot(b);
    }
    Ok(s)
}

/// `sigma_i(y)` with entries `(sigma_i)_{mu nu} = delta_{i nu} y_mu - delta_{i mu} y_nu`.
pub fn sigma(i: usize, y: &[f64]) -> SoMatrix {
    let n = y.len();
    assert!(i < n, "sigma index {i} out of range for n = {n}");
    let mut m = DMatrix::zeros(n, n);
    for (mu, &ym) in y.iter().enumerate() {
        m[(mu, i)] += ym;
        m[(i, mu)] -= ym;
    }
    SoMatrix { m }
}

/// Matrix exponential of an antisymmetric matrix by scaling and squaring with a
/// diagonal [6/6] Pade approximant.
pub fn so_exponential(a: &SoMatrix) -> DMatrix<f64> {
    const C: [f64; 7] = [
        1.0,
        1.0 / 2.0,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let n = a.dim();
    let norm1 = (0..n)
        .map(|j| a.m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let x = &a.m / 2f64.powi(squarings as i32);
    let id = DMatrix::<f64>::identity(n, n);
    let mut num = id.clone() * C[0];
    let mut den = id.clone() * C[0];
    let mut pow = id.clone();
    for (k, c) in C.iter().enumerate().skip(1) {
        pow = &pow * &x;
        num += &pow * *c;
        if k % 2 == 0 {
            den += &pow * *c;
        } else {
            den -= &pow * *c;
        }
    }
    let mut e = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        e = &e * &e;
    }
    e
}

/// Re-orthogonalizes a near-orthogonal matrix with one Newton-Schulz polar step.
pub fn reorthogonalize(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let g = s.transpose() * s;
    s * (id * 1.5 - g * 0.5)
}

/// `max |S^T S - I|`.
pub fn orthogonality_defect(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows();
    (s.transpose() * s - DMatrix::<f64>::identity(n, n)).amax()
}
