//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is a finite-valued wrapper around a dynamically sized
//! nalgebra matrix. Decompositions (SVD, Hermitian eigenvalues, Schur) come
//! from nalgebra; this module adds validation, the JSON wire format and the
//! few operator-theoretic helpers the rest of the crate needs.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative tolerance used when deciding whether an input is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Above this dimension the spectral radius falls back to the power limit.
pub const EIGEN_DIM_LIMIT: usize = 64;

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, &entries))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != cols) {
            return Err(Error::input("ragged rows"));
        }
        Self::new(r, cols, rows.concat())
    }

    /// Real matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn from_dmatrix(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::input("matrix dimensions must be positive"));
        }
        if !inner.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::input("matrix has non-finite entries"));
        }
        Ok(ComplexMatrix { inner })
    }

    /// Wraps a matrix produced by arithmetic on finite inputs.
    pub(crate) fn wrap(inner: DMatrix<C64>) -> Self {
        ComplexMatrix { inner }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::wrap(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::wrap(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        Self::wrap(m)
    }

    pub fn scalar(z: C64) -> Self {
        Self::wrap(DMatrix::from_element(1, 1, z))
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.inner[(i, j)] = z;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.inner.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::wrap(&self.inner * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    /// (M + M*)/2
    pub fn hermitian_part(&self) -> Self {
        Self::wrap((&self.inner + self.inner.adjoint()) * c(0.5, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    /// Non-negative integer power by repeated squaring.
    pub fn pow(&self, n: u32) -> Self {
        assert!(self.is_square(), "pow of a non-square matrix");
        let mut result = DMatrix::identity(self.rows(), self.rows());
        let mut base = self.inner.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Self::wrap(result)
    }

    pub fn try_inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::input("inverse of a non-square matrix"));
        }
        self.inner
            .clone()
            .try_inverse()
            .map(Self::wrap)
            .filter(ComplexMatrix::is_finite)
            .ok_or_else(|| Error::input("matrix is singular"))
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.inner.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// Max-entry distance, used for residuals of exact identities.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "\n  ")?;
            for j in 0..self.cols() {
                let z = self.inner[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
        }
        write!(f, "\n]")
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::wrap(&self.inner + &rhs.inner)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::wrap(&self.inner - &rhs.inner)
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::wrap(&self.inner * &rhs.inner)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix::wrap(-&self.inner)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows(),
            cols: self.cols(),
            data: self.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        let entries = raw.data.iter().map(|[re, im]| c(*re, *im)).collect();
        ComplexMatrix::new(raw.rows, raw.cols, entries).map_err(serde::de::Error::custom)
    }
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::input("op_norm of a matrix with non-finite entries"));
    }
    Ok(m.singular_values()[0])
}

fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    if !h.is_square() {
        return Err(Error::input("Hermitian matrix must be square"));
    }
    if !h.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let asym = h.max_abs_diff(&h.adjoint());
    if asym > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::input(format!(
            "matrix is not Hermitian (max |H - H*| = {asym:e})"
        )));
    }
    Ok(())
}

/// Eigenvalues of the Hermitian part of `m`, ascending. No validation.
pub(crate) fn hermitian_eigenvalues_raw(m: &DMatrix<C64>) -> Vec<f64> {
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub(crate) fn lambda_min_raw(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues_raw(m)[0]
}

pub(crate) fn lambda_max_raw(m: &DMatrix<C64>) -> f64 {
    *hermitian_eigenvalues_raw(m).last().expect("non-empty matrix")
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    Ok(hermitian_eigenvalues_raw(h.as_dmatrix()))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig_hermitian(h: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(h)?[0])
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eig_hermitian(h: &ComplexMatrix) -> Result<f64> {
    Ok(*hermitian_eigenvalues(h)?.last().expect("non-empty matrix"))
}

/// Eigenvalues of a general square matrix via the complex Schur form.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::input("eigenvalues of a non-square matrix"));
    }
    if m.rows() == 1 {
        return Ok(vec![m.get(0, 0)]);
    }
    let schur = Schur::try_new(m.as_dmatrix().clone(), SCHUR_EPS, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::internal("Schur iteration did not converge"))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// max |λ| over the spectrum.
pub fn spectral_radius(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::input("spectral radius of a non-square matrix"));
    }
    if m.rows() <= EIGEN_DIM_LIMIT {
        Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    } else {
        spectral_radius_power_limit(m, 1024)
    }
}

/// ‖Mⁿ‖^{1/n}, accumulated in log scale so large `n` cannot overflow.
pub fn spectral_radius_power_limit(m: &ComplexMatrix, n: u32) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::input("spectral radius of a non-square matrix"));
    }
    if n == 0 {
        return Err(Error::input("power must be positive"));
    }
    let mut p = DMatrix::<C64>::identity(m.rows(), m.rows());
    let mut log_scale = 0.0;
    for _ in 0..n {
        p = &p * m.as_dmatrix();
        let s = p.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s == 0.0 {
            return Ok(0.0);
        }
        p /= c(s, 0.0);
        log_scale += s.ln();
    }
    let tail = ComplexMatrix::wrap(p).singular_values()[0];
    Ok(((log_scale + tail.ln()) / n as f64).exp())
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::wrap(a.as_dmatrix().kronecker(b.as_dmatrix()))
}

/// Isometric inclusion of a subspace, given by orthonormal basis columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Embedding {
    ambient_dim: usize,
    basis: ComplexMatrix,
}

/// Gram-matrix tolerance for [`Embedding`] bases.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

impl Embedding {
    pub fn new(basis: ComplexMatrix) -> Result<Self> {
        if basis.cols() > basis.rows() {
            return Err(Error::input("embedding has more basis vectors than the ambient dimension"));
        }
        let gram = &basis.adjoint() * &basis;
        let err = gram.max_abs_diff(&ComplexMatrix::identity(basis.cols()));
        if err > ORTHONORMAL_TOL {
            return Err(Error::input(format!(
                "embedding basis is not orthonormal (Gram error {err:e})"
            )));
        }
        Ok(Embedding {
            ambient_dim: basis.rows(),
            basis,
        })
    }

    /// Coordinate embedding; the k-th basis vector is `e_{indices[k]}`.
    pub fn coordinates(ambient_dim: usize, indices: &[usize]) -> Result<Self> {
        let mut basis = ComplexMatrix::zeros(ambient_dim.max(1), indices.len().max(1));
        if indices.is_empty() || ambient_dim == 0 {
            return Err(Error::input("coordinate embedding needs at least one index"));
        }
        for (k, &i) in indices.iter().enumerate() {
            if i >= ambient_dim {
                return Err(Error::input(format!(
                    "coordinate {i} out of range for ambient dimension {ambient_dim}"
                )));
            }
            basis.set(i, k, ONE);
        }
        Embedding::new(basis)
    }

    pub fn full(n: usize) -> Self {
        Embedding {
            ambient_dim: n,
            basis: ComplexMatrix::identity(n),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }
}

#[derive(Deserialize)]
struct EmbeddingJson {
    basis: ComplexMatrix,
    #[serde(default)]
    ambient_dim: Option<usize>,
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = EmbeddingJson::deserialize(deserializer)?;
        if let Some(n) = raw.ambient_dim {
            if n != raw.basis.rows() {
                return Err(serde::de::Error::custom(
                    "ambient_dim does not match the basis row count",
                ));
            }
        }
        Embedding::new(raw.basis).map_err(serde::de::Error::custom)
    }
}

/// B* M B for the embedding basis B, i.e. P_𝒳 M|𝒳 in the embedded coordinates.
pub fn compress(m: &ComplexMatrix, e: &Embedding) -> Result<ComplexMatrix> {
    if !m.is_square() || m.rows() != e.ambient_dim() {
        return Err(Error::input(format!(
            "cannot compress a {}x{} matrix to an embedding in dimension {}",
            m.rows(),
            m.cols(),
            e.ambient_dim()
        )));
    }
    let b = e.basis();
    Ok(&(&b.adjoint() * m) * b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nilpotent(rho: f64) -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, rho, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(ComplexMatrix::new(2, 2, vec![ONE; 3]).is_err());
        assert!(ComplexMatrix::new(0, 2, vec![]).is_err());
        let nan = ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]);
        assert!(matches!(nan, Err(Error::Input(_))));
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&ComplexMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
        assert!((op_norm(&nilpotent(2.0)).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn min_eig_examples() {
        assert_eq!(min_eig_hermitian(&ComplexMatrix::zeros(3, 3)).unwrap(), 0.0);
        let d = ComplexMatrix::from_diagonal(&[c(3.0, 0.0), c(-1.0, 0.0), c(5.0, 0.0)]);
        assert!((min_eig_hermitian(&d).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_eig_rejects_non_hermitian() {
        assert!(matches!(min_eig_hermitian(&nilpotent(1.0)), Err(Error::Input(_))));
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(spectral_radius(&nilpotent(1.0)).unwrap(), 0.0);
        let d = ComplexMatrix::from_diagonal(&[c(0.5, 0.0), c(-0.9, 0.0)]);
        assert!((spectral_radius(&d).unwrap() - 0.9).abs() < 1e-12);
        assert!(spectral_radius(&ComplexMatrix::zeros(2, 3)).is_err());
        assert_eq!(spectral_radius_power_limit(&nilpotent(1.0), 8).unwrap(), 0.0);
    }

    #[test]
    fn kron_examples() {
        let a = nilpotent(3.0);
        assert_eq!(kron(&a, &ComplexMatrix::identity(1)), a);
        assert_eq!(
            kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)),
            ComplexMatrix::identity(6)
        );
    }

    #[test]
    fn compress_examples() {
        let e = Embedding::coordinates(5, &[3, 1]).unwrap();
        let c3 = compress(&ComplexMatrix::identity(5), &e).unwrap();
        assert_eq!(c3, ComplexMatrix::identity(2));
        let m = nilpotent(1.0);
        assert_eq!(compress(&m, &Embedding::full(2)).unwrap(), m);
        assert!(compress(&m, &e).is_err());
    }

    #[test]
    fn embedding_rejects_non_orthonormal() {
        let b = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(Embedding::new(b).is_err());
        assert!(Embedding::coordinates(3, &[3]).is_err());
    }

    #[test]
    fn json_format() {
        let m = ComplexMatrix::new(1, 2, vec![c(1.0, -2.0), c(0.5, 0.0)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":2,"data":[[1.0,-2.0],[0.5,0.0]]}"#);
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).is_err());
    }
}
