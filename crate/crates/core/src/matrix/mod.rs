//! Dense complex matrices.
//!
//! [`ComplexMatrix`] is the finite-dimensional stand-in for an element of
//! `B(H)`. Storage is row-major `Complex64`. Products skip zero entries, so
//! the matrix-unit and projection-heavy workloads in this crate run at sparse
//! cost without a separate sparse type. Singular values and Hermitian
//! eigenproblems are delegated to `nalgebra`.

mod commutant;
mod span;

pub use commutant::{commutant_basis, commutant_basis_with_tol, COMMUTANT_TOL};
pub use span::SpanBasis;
pub(crate) use commutant::right_nullspace;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{IodError, Result};

pub type Complex = num_complex::Complex64;

pub(crate) const ZERO: Complex = Complex::new(0.0, 0.0);
pub(crate) const ONE: Complex = Complex::new(1.0, 0.0);

/// `max(1, norm)`: the scale every relative tolerance is multiplied by.
#[inline]
pub fn tol_scale(norm: f64) -> f64 {
    norm.max(1.0)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    /// The matrix unit `E_ij` of size `dim × dim`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < dim && j < dim, "matrix unit ({i}, {j}) out of range for dim {dim}");
        let mut m = Self::zeros(dim, dim);
        m.data[i * dim + j] = ONE;
        m
    }

    pub fn from_diagonal(diag: &[Complex]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex> = diag.iter().map(|&x| Complex::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(IodError::ShapeMismatch {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(IodError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(IodError::ShapeMismatch {
                    rows: r,
                    cols: c,
                    len: data.len() + row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(r, c, data)
    }

    /// Real-valued convenience constructor, mostly for tests and fixtures.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<Complex>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| Complex::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex) {
        self.data[i * self.cols + j] = value;
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex] {
        &mut self.data
    }

    pub fn ensure_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(IodError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    /// Nonzero entries as `(row, col, value)`, row-major order.
    pub fn nonzeros(&self) -> Vec<(usize, usize, Complex)> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, z)| **z != ZERO)
            .map(|(p, &z)| (p / self.cols, p % self.cols, z))
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex::new(c, 0.0))
    }

    /// `(a + a*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square(), "hermitian part of a non-square matrix");
        Self::from_fn(self.rows, self.cols, |i, j| (self.get(i, j) + self.get(j, i).conj()) * 0.5)
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius inner product `⟨self, other⟩ = tr(self* other)`.
    pub fn inner(&self, other: &Self) -> Complex {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "inner product shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(self)
    }

    /// `max |a_ij − conj(a_ji)| ≤ tol · max(1, ‖a‖)`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        hermitian_defect(self) <= tol * tol_scale(self.spectral_norm())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn zip_with(&self, other: &Self, op: &str, f: impl Fn(Complex, Complex) -> Complex) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "matrix {op}: shape {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub(crate) fn add_assign_ref(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix add: shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matrix product: {}x{} times {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let (n, inner, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * m];
        let right_nnz = other.data.iter().filter(|z| **z != ZERO).count();
        if right_nnz * 4 < other.data.len() {
            // sparse right operand: iterate its nonzeros per row
            let mut row_nz: Vec<Vec<(usize, Complex)>> = vec![Vec::new(); inner];
            for (p, &z) in other.data.iter().enumerate() {
                if z != ZERO {
                    row_nz[p / m].push((p % m, z));
                }
            }
            for i in 0..n {
                let orow = &mut out[i * m..(i + 1) * m];
                for (k, nz) in row_nz.iter().enumerate() {
                    let aik = self.data[i * inner + k];
                    if aik == ZERO || nz.is_empty() {
                        continue;
                    }
                    for &(j, b) in nz {
                        orow[j] += aik * b;
                    }
                }
            }
        } else {
            for i in 0..n {
                let orow = &mut out[i * m..(i + 1) * m];
                for k in 0..inner {
                    let aik = self.data[i * inner + k];
                    if aik == ZERO {
                        continue;
                    }
                    let brow = &other.data[k * m..(k + 1) * m];
                    for (o, b) in orow.iter_mut().zip(brow) {
                        *o += aik * b;
                    }
                }
            }
        }
        Self {
            rows: n,
            cols: m,
            data: out,
        }
    }
}

/// Largest entrywise deviation from Hermitian symmetry, `max |a_ij − conj(a_ji)|`.
pub(crate) fn hermitian_defect(a: &ComplexMatrix) -> f64 {
    let n = a.rows;
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a.get(i, j) - a.get(j, i).conj()).norm());
        }
    }
    worst
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self.get(i, j);
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                $body(self, rhs)
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                $body(&self, &rhs)
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                $body(&self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &ComplexMatrix, b: &ComplexMatrix| a.zip_with(b, "sum", |x, y| x + y));
forward_binop!(Sub, sub, |a: &ComplexMatrix, b: &ComplexMatrix| a.zip_with(b, "difference", |x, y| x - y));
forward_binop!(Mul, mul, |a: &ComplexMatrix, b: &ComplexMatrix| a.matmul(b));

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Largest singular value; `0` for matrices with a zero dimension.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    if a.rows == 0 || a.cols == 0 || a.is_zero() {
        return 0.0;
    }
    a.to_nalgebra().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Spectral data of the Hermitian part `(a + a*)/2`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = a.ensure_square()?;
    let h = a.hermitian_part();
    // A zero row i gives the eigenpair (0, e_i). Splitting those off keeps
    // the solver away from exactly zero rows, where it can return NaN.
    let (live, dead) = split_zero_rows(&h);
    let mut pairs: Vec<(f64, Vec<Complex>)> = dead
        .iter()
        .map(|&i| (0.0, (0..n).map(|r| if r == i { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) }).collect()))
        .collect();
    if !live.is_empty() {
        let m = live.len();
        let reduced = DMatrix::<Complex>::from_fn(m, m, |r, c| h.get(live[r], live[c]));
        let eig = nalgebra::SymmetricEigen::new(reduced);
        for k in 0..m {
            let mut v = vec![Complex::new(0.0, 0.0); n];
            for (r, &i) in live.iter().enumerate() {
                v[i] = eig.eigenvectors[(r, k)];
            }
            pairs.push((eig.eigenvalues[k], v));
        }
    }
    if pairs.iter().any(|(x, v)| !x.is_finite() || v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(IodError::EigenFailure(n));
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(HermitianEigen { values, vectors })
}

/// Indices of rows with a nonzero entry, and of rows that are exactly zero.
fn split_zero_rows(h: &ComplexMatrix) -> (Vec<usize>, Vec<usize>) {
    let n = h.rows();
    (0..n).partition(|&i| (0..n).any(|j| h.get(i, j) != Complex::new(0.0, 0.0)))
}

/// Ascending eigenvalues of the Hermitian part of `a`.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = a.ensure_square()?;
    let h = a.hermitian_part();
    // Zero rows only contribute the eigenvalue 0 and can make the solver
    // return NaN, so they are split off first.
    let (live, dead) = split_zero_rows(&h);
    let mut values = vec![0.0; dead.len()];
    if !live.is_empty() {
        let m = live.len();
        let reduced = DMatrix::<Complex>::from_fn(m, m, |r, c| h.get(live[r], live[c]));
        values.extend(reduced.symmetric_eigenvalues().iter().cloned());
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(IodError::EigenFailure(n));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Positive semidefiniteness up to the relative tolerance `tol · max(1, ‖a‖)`:
/// `a` must be Hermitian entrywise within it, and the Hermitian part's least
/// eigenvalue must be at least its negative.
pub fn is_psd(a: &ComplexMatrix, tol: f64) -> Result<bool> {
    let n = a.ensure_square()?;
    if n == 0 {
        return Ok(true);
    }
    let slack = tol * tol_scale(spectral_norm(a));
    if hermitian_defect(a) > slack {
        return Ok(false);
    }
    let min = hermitian_eigenvalues(a)?.first().copied().unwrap_or(0.0);
    Ok(min >= -slack)
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MatrixDoc::deserialize(d)?;
        let data = doc.data.iter().map(|&[re, im]| Complex::new(re, im)).collect();
        ComplexMatrix::from_row_major(doc.rows, doc.cols, data).map_err(serde::de::Error::custom)
    }
}
