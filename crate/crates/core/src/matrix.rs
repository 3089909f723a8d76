//! Dense complex square matrices.
//!
//! [`CMatrix`] is the single carrier type for gates, residues, monodromy
//! matrices and spin operators. It wraps a `nalgebra::DMatrix<Complex64>` and
//! guarantees a square shape with finite entries.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A square complex matrix with finite entries and `dim >= 1`.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

impl CMatrix {
    /// Validates shape and finiteness.
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.nrows() != inner.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix must be square with dim >= 1, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if inner.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self(inner))
    }

    /// Builds from rows. Panics on ragged input; intended for literals.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        assert!(n > 0 && rows.iter().all(|r| r.len() == n), "rows must form a square");
        Self(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        assert!(n > 0 && rows.iter().all(|r| r.len() == n), "rows must form a square");
        Self(DMatrix::from_fn(n, n, |i, j| c(rows[i][j], 0.0)))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0);
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0);
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0);
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn diag(values: &[C64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { ZERO })
    }

    pub fn scalar(z: C64) -> Self {
        Self::diag(&[z])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    /// Raw column-major storage.
    pub fn as_slice(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self(&self.0 * z)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn determinant(&self) -> C64 {
        self.0.determinant()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Kronecker product `self ⊗ other` (self indexes the slow, leading factor).
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// Frobenius distance `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `min_θ ‖self − e^{iθ} other‖_F`.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let overlap: C64 = other
            .0
            .iter()
            .zip(self.0.iter())
            .map(|(v, u)| v.conj() * u)
            .sum();
        let a = self.0.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let b = other.0.iter().map(|z| z.norm_sqr()).sum::<f64>();
        (a + b - 2.0 * overlap.norm()).max(0.0).sqrt()
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.0.adjoint() * &self.0;
        Self(g).distance(&Self::identity(self.dim()))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.distance(&self.adjoint())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Matrix exponential (scaling and squaring with Padé approximants).
    pub fn exp(&self) -> Self {
        Self(self.0.exp())
    }

    pub fn try_inverse(&self) -> Result<Self> {
        self.0
            .clone()
            .try_inverse()
            .map(Self)
            .ok_or_else(|| Error::Numerical("matrix is singular".into()))
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.dim());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let out = &self.0 * DVector::from_column_slice(v);
        Ok(out.iter().copied().collect())
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        CMatrix(self.0 * rhs.0)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: CMatrix) -> CMatrix {
        CMatrix(self.0 + rhs.0)
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        self.0 += &rhs.0;
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: CMatrix) -> CMatrix {
        CMatrix(self.0 - rhs.0)
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-self.0)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim(), self.dim())?;
        for row in self.rows() {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Complex numbers on the wire: `{"re": …, "im": …}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexRepr {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexRepr {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexRepr> for C64 {
    fn from(z: ComplexRepr) -> Self {
        C64::new(z.re, z.im)
    }
}

/// `#[serde(with = "complex_serde")]` for a single `C64`.
pub mod complex_serde {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        ComplexRepr::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        ComplexRepr::deserialize(d).map(C64::from)
    }
}

/// `#[serde(with = "complex_vec_serde")]` for `Vec<C64>`.
pub mod complex_vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let reprs: Vec<ComplexRepr> = v.iter().copied().map(ComplexRepr::from).collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<C64>, D::Error> {
        let reprs = Vec::<ComplexRepr>::deserialize(d)?;
        Ok(reprs.into_iter().map(C64::from).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    dim: usize,
    entries: Vec<Vec<ComplexRepr>>,
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            dim: self.dim(),
            entries: self
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(ComplexRepr::from).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = MatrixRepr::deserialize(d)?;
        let n = repr.dim;
        if repr.entries.len() != n || repr.entries.iter().any(|r| r.len() != n) {
            return Err(D::Error::custom(format!(
                "matrix entries do not form a {n}x{n} array"
            )));
        }
        let inner = DMatrix::from_fn(n, n, |i, j| C64::from(repr.entries[i][j]));
        CMatrix::new(inner).map_err(D::Error::custom)
    }
}
