//! Dense complex linear algebra for systems of at most [`MAX_QUBITS`] qubits.
//!
//! Index convention: label character 0 is qubit 0, which is the leftmost
//! (most-significant) tensor factor. A computational basis index `b` therefore
//! stores qubit 0 in its highest bit.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 3;

/// Tolerance on Hermiticity and unit trace of a density matrix.
pub const STATE_TOL: f64 = 1e-12;
/// Most negative eigenvalue (or probability) still treated as zero.
pub const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

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

    /// Column vector with a single 1 at `index`.
    pub fn basis_column(dim: usize, index: usize) -> Self {
        let mut m = Self::zeros(dim, 1);
        m.data[index] = ONE;
        m
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * n + i] = z;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn conjugate_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * cols + j * other.cols + l] =
                            a * other.get(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.conjugate_transpose()) <= tol
    }

    /// `self · inner · self†`.
    pub fn sandwich(&self, inner: &Self) -> Result<Self> {
        self.matmul(inner)?.matmul(&self.conjugate_transpose())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on a dimension mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix dimension mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

pub fn conjugate_transpose(a: &ComplexMatrix) -> ComplexMatrix {
    a.conjugate_transpose()
}

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let c = |re, im| Complex64::new(re, im);
        let data = match self {
            Pauli::I => [c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)],
            Pauli::X => [c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
            Pauli::Y => [c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
            Pauli::Z => [c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)],
        };
        ComplexMatrix {
            rows: 2,
            cols: 2,
            data: data.to_vec(),
        }
    }
}

impl TryFrom<char> for Pauli {
    type Error = Error;

    fn try_from(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::invalid(format!("'{other}' is not a Pauli symbol (expected I, X, Y or Z)"))),
        }
    }
}

pub fn pauli_matrix(symbol: char) -> Result<ComplexMatrix> {
    Pauli::try_from(symbol).map(Pauli::matrix)
}

/// Tensor product of single-qubit Paulis, e.g. `"XZ"` is `X ⊗ Z` with X on qubit 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::invalid("Pauli string must be nonempty"));
        }
        Ok(Self(ops))
    }

    pub fn num_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let mut iter = self.0.iter();
        let first = iter.next().expect("nonempty by construction").matrix();
        iter.fold(first, |acc, p| acc.kron(&p.matrix()))
    }
}

pub fn pauli_string_matrix(p: &PauliString) -> ComplexMatrix {
    p.matrix()
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s.chars().map(Pauli::try_from).collect::<Result<Vec<_>>>()?;
        Self::new(ops)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A validated mixed state on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and a nonnegative diagonal.
    ///
    /// Full positivity is not checked here; the diagonal test catches the
    /// failures that matter for sampling.
    pub fn new(num_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::invalid(format!(
                "{num_qubits}-qubit density matrix must be {dim}x{dim}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let rho = Self { num_qubits, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// `|0…0⟩⟨0…0|`.
    pub fn ground(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1usize << num_qubits;
        let mut matrix = ComplexMatrix::zeros(dim, dim);
        matrix.set(0, 0, ONE);
        Ok(Self { num_qubits, matrix })
    }

    /// `|ψ⟩⟨ψ|` for a normalized column vector `ψ`.
    pub fn from_pure(num_qubits: usize, psi: &ComplexMatrix) -> Result<Self> {
        if psi.cols() != 1 {
            return Err(Error::invalid("state vector must be a column"));
        }
        let norm: f64 = psi.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::invalid(format!("state vector has norm {norm}, expected 1")));
        }
        Self::new(num_qubits, psi * &psi.conjugate_transpose())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Real diagonal: the computational-basis outcome distribution.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix.get(i, i).re).collect()
    }

    /// `U ρ U†` for a unitary of matching size.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Result<Self> {
        if unitary.rows() != self.dim() || unitary.cols() != self.dim() {
            return Err(Error::invalid("unitary dimension does not match state"));
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            matrix: unitary.sandwich(&self.matrix)?,
        })
    }

    /// Wraps a matrix produced by a trusted CPTP update and re-validates it.
    pub(crate) fn from_update(num_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self { num_qubits, matrix };
        rho.validate().map_err(|e| match e {
            Error::InvalidInput(m) => Error::integrity(m),
            other => other,
        })?;
        Ok(rho)
    }

    fn validate(&self) -> Result<()> {
        if !self.matrix.is_hermitian(STATE_TOL) {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::invalid(format!("density matrix trace is {tr}, expected 1")));
        }
        if let Some(d) = self.diagonal().into_iter().find(|&d| d < -PSD_TOL) {
            return Err(Error::invalid(format!("density matrix has negative population {d}")));
        }
        Ok(())
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::invalid(format!("qubit count must be in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(())
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` (2×2) acting on `qubit`.
pub fn embed_single(op: &ComplexMatrix, qubit: usize, num_qubits: usize) -> Result<ComplexMatrix> {
    if qubit >= num_qubits {
        return Err(Error::invalid(format!(
            "qubit index {qubit} out of range for {num_qubits} qubits"
        )));
    }
    if op.rows() != 2 || op.cols() != 2 {
        return Err(Error::invalid("single-qubit operator must be 2x2"));
    }
    let left = ComplexMatrix::identity(1 << qubit);
    let right = ComplexMatrix::identity(1 << (num_qubits - qubit - 1));
    Ok(left.kron(op).kron(&right))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_tensor_identity_is_identity4() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor_product(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn ket0_tensor_ket1_is_basis1() {
        let k0 = ComplexMatrix::basis_column(2, 0);
        let k1 = ComplexMatrix::basis_column(2, 1);
        assert_eq!(tensor_product(&k0, &k1), ComplexMatrix::basis_column(4, 1));
    }

    #[test]
    fn z_tensor_x_blocks() {
        // [X, 0; 0, -X]
        let expected = ComplexMatrix::from_real(
            4,
            4,
            &[
                0., 1., 0., 0., //
                1., 0., 0., 0., //
                0., 0., 0., -1., //
                0., 0., -1., 0.,
            ],
        )
        .unwrap();
        let zx = tensor_product(&Pauli::Z.matrix(), &Pauli::X.matrix());
        assert_eq!(zx, expected);
    }

    #[test]
    fn pauli_definitions() {
        assert_eq!(pauli_matrix('Z').unwrap(), ComplexMatrix::from_real(2, 2, &[1., 0., 0., -1.]).unwrap());
        assert_eq!(pauli_matrix('X').unwrap(), ComplexMatrix::from_real(2, 2, &[0., 1., 1., 0.]).unwrap());
        let y = ComplexMatrix::new(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap();
        assert_eq!(pauli_matrix('Y').unwrap(), y);
        assert!(matches!(pauli_matrix('Q'), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pauli_string_examples() {
        let zi: PauliString = "ZI".parse().unwrap();
        let diag = ComplexMatrix::diagonal(&[c(1., 0.), c(1., 0.), c(-1., 0.), c(-1., 0.)]);
        assert_eq!(zi.matrix(), diag);

        let ii: PauliString = "II".parse().unwrap();
        assert_eq!(ii.matrix(), ComplexMatrix::identity(4));

        let xx: PauliString = "XX".parse().unwrap();
        let anti = ComplexMatrix::from_real(
            4,
            4,
            &[0., 0., 0., 1., 0., 0., 1., 0., 0., 1., 0., 0., 1., 0., 0., 0.],
        )
        .unwrap();
        assert_eq!(xx.matrix(), anti);

        assert!("XA".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn conjugate_transpose_examples() {
        let d = ComplexMatrix::from_real(2, 2, &[0.3, 0., 0., -2.]).unwrap();
        assert_eq!(conjugate_transpose(&d), d);

        let a = ComplexMatrix::new(2, 2, vec![c(0., 0.), c(0., 1.), c(0., 0.), c(0., 0.)]).unwrap();
        let expected = ComplexMatrix::new(2, 2, vec![c(0., 0.), c(0., 0.), c(0., -1.), c(0., 0.)]).unwrap();
        assert_eq!(conjugate_transpose(&a), expected);

        let r = ComplexMatrix::new(
            2,
            3,
            vec![c(1., 2.), c(-0.5, 0.1), c(3., 0.), c(0., -4.), c(2.5, 2.5), c(-1., -1.)],
        )
        .unwrap();
        let rt = conjugate_transpose(&r);
        assert_eq!((rt.rows(), rt.cols()), (3, 2));
        assert_eq!(rt.get(2, 1), c(-1., 1.));
        assert_eq!(conjugate_transpose(&rt), r);
    }

    #[test]
    fn rejects_bad_shapes_and_nonfinite() {
        assert!(ComplexMatrix::new(2, 2, vec![ZERO; 3]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.)]).is_err());
        assert!(ComplexMatrix::identity(2).matmul(&ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::ground(2).is_ok());
        assert!(DensityMatrix::ground(0).is_err());
        assert!(DensityMatrix::ground(MAX_QUBITS + 1).is_err());
        // trace 2
        assert!(DensityMatrix::new(1, ComplexMatrix::identity(2)).is_err());
        // non-Hermitian
        let m = ComplexMatrix::new(2, 2, vec![c(1., 0.), c(0.1, 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert!(DensityMatrix::new(1, m).is_err());
        // negative population
        let m = ComplexMatrix::from_real(2, 2, &[1.5, 0., 0., -0.5]).unwrap();
        assert!(DensityMatrix::new(1, m).is_err());
    }

    #[test]
    fn embed_single_places_factor() {
        let z0 = embed_single(&Pauli::Z.matrix(), 0, 2).unwrap();
        assert_eq!(z0, "ZI".parse::<PauliString>().unwrap().matrix());
        let z1 = embed_single(&Pauli::Z.matrix(), 1, 2).unwrap();
        assert_eq!(z1, "IZ".parse::<PauliString>().unwrap().matrix());
        assert!(embed_single(&Pauli::Z.matrix(), 2, 2).is_err());
    }
}
