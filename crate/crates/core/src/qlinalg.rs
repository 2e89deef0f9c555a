//! Dense complex linear algebra for multi-qubit operators.
//!
//! Basis index `k` of an `n`-qubit space stores qubit 1 in the most significant
//! bit, so qubit `q` lives at bit `n - q`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Default cap on the number of qubits of any dense object.
pub const DEFAULT_MAX_QUBITS: usize = 12;

/// Eigenvalues below `-NEGATIVITY_TOL` count as negative.
pub const NEGATIVITY_TOL: f64 = 1e-9;

/// Probability below which a projection branch is reported empty.
pub const EMPTY_BRANCH_TOL: f64 = 1e-12;

static MAX_QUBITS: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_QUBITS);

pub fn max_qubits() -> usize {
    MAX_QUBITS.load(Ordering::Relaxed)
}

/// Sets the process-wide qubit cap. Values below 1 are clamped to 1.
pub fn set_max_qubits(n: usize) {
    MAX_QUBITS.store(n.max(1), Ordering::Relaxed);
}

fn check_dim(dim: usize) -> Result<()> {
    let cap = max_qubits();
    if cap < usize::BITS as usize - 1 && dim > (1usize << cap) {
        return Err(Error::DimensionCap { dim, max_qubits: cap });
    }
    Ok(())
}

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub(crate) fn cis(phase: f64) -> C64 {
    C64::new(phase.cos(), phase.sin())
}

/// Bit position (from the least significant end) of 1-based `qubit`.
#[inline]
pub(crate) fn qubit_shift(n_qubits: usize, qubit: usize) -> usize {
    n_qubits - qubit
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::InvalidArgument(format!("expected {} entries for dimension {dim}, got {}", dim * dim, data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// `|v><v|` for a (not necessarily normalized) vector.
    pub fn outer(v: &[C64]) -> Self {
        Self::outer2(v, v)
    }

    /// `|u><v|`.
    pub fn outer2(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        let dim = u.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in u {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Number of qubits when `dim` is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        self.dim.is_power_of_two().then(|| self.dim.trailing_zeros() as usize)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn unitary_deviation(&self) -> f64 {
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.data[i * d + j] * other.data[j * d + i];
            }
        }
        acc
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|i| self.data[i * self.dim..(i + 1) * self.dim].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `<u|self|v>`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        let mv = self.mul_vec(v);
        u.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// Principal submatrix on the listed indices, in the given order.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        let mut m = Self::zeros(k);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Symmetrized copy `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
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
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = ComplexMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * d..(k + 1) * d];
                let dst = &mut out.data[i * d..(i + 1) * d];
                for (o, b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)] }
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)] }
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)] }
}

/// `n . sigma` for a real 3-vector.
pub fn sigma_dot(n: [f64; 3]) -> ComplexMatrix {
    ComplexMatrix { dim: 2, data: vec![c(n[2], 0.0), c(n[0], -n[1]), c(n[0], n[1]), c(-n[2], 0.0)] }
}

/// Kronecker product; `a` occupies the more significant bits.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = a.dim.checked_mul(b.dim).ok_or(Error::DimensionCap { dim: usize::MAX, max_qubits: max_qubits() })?;
    check_dim(dim)?;
    let mut out = ComplexMatrix::zeros(dim);
    let bd = b.dim;
    for i in 0..a.dim {
        for j in 0..a.dim {
            let x = a[(i, j)];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for k in 0..bd {
                for l in 0..bd {
                    out[(i * bd + k, j * bd + l)] = x * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` belongs to `values[i]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        (0..self.vectors.dim()).map(|r| self.vectors[(r, i)]).collect()
    }
}

pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    let dev = a.hermitian_deviation();
    if dev > 1e-10 * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let eig = SymmetricEigen::new(a.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..a.dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(a.dim);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..a.dim {
            vectors[(r, col)] = eig.eigenvectors[(r, src)];
        }
    }
    Ok(HermitianEig { values, vectors })
}

pub fn eigenvalues_hermitian(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let dev = a.hermitian_deviation();
    if dev > 1e-10 * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    let mut v: Vec<f64> = a.hermitian_part().to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Sign class of a smallest eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Negativity {
    Negative,
    Indeterminate,
    NonNegative,
}

impl Negativity {
    pub fn of(min_eigenvalue: f64) -> Self {
        if min_eigenvalue < -NEGATIVITY_TOL {
            Negativity::Negative
        } else if min_eigenvalue < 0.0 {
            Negativity::Indeterminate
        } else {
            Negativity::NonNegative
        }
    }
}

/// A set of qubits (1-based labels) of an `n`-qubit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitSubset {
    n_qubits: usize,
    /// Bit `n - q` is set when qubit `q` is a member.
    mask: usize,
}

impl QubitSubset {
    pub fn new(n_qubits: usize, qubits: &[usize]) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("register must have at least one qubit".into()));
        }
        let mut mask = 0usize;
        for &q in qubits {
            if q == 0 || q > n_qubits {
                return Err(Error::IndexOutOfRange { index: q, limit: n_qubits });
            }
            mask |= 1 << qubit_shift(n_qubits, q);
        }
        if mask == 0 {
            return Err(Error::InvalidArgument("qubit subset must be nonempty".into()));
        }
        Ok(Self { n_qubits, mask })
    }

    /// Builds a subset from its basis-index mask.
    pub fn from_mask(n_qubits: usize, mask: usize) -> Result<Self> {
        if mask == 0 || mask >= (1usize << n_qubits) {
            return Err(Error::InvalidArgument(format!("mask {mask:#b} is not a nonempty subset of {n_qubits} qubits")));
        }
        Ok(Self { n_qubits, mask })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Basis-index bits flipped by this subset.
    pub fn mask(&self) -> usize {
        self.mask
    }

    pub fn contains(&self, qubit: usize) -> bool {
        qubit >= 1 && qubit <= self.n_qubits && self.mask & (1 << qubit_shift(self.n_qubits, qubit)) != 0
    }

    pub fn members(&self) -> Vec<usize> {
        (1..=self.n_qubits).filter(|&q| self.contains(q)).collect()
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_proper(&self) -> bool {
        self.mask != (1usize << self.n_qubits) - 1
    }

    pub fn complement(&self) -> Option<Self> {
        let full = (1usize << self.n_qubits) - 1;
        let m = full & !self.mask;
        (m != 0).then_some(Self { n_qubits: self.n_qubits, mask: m })
    }

    /// All bipartition sides that exclude qubit 1, ordered by mask.
    pub fn canonical_bipartitions(n_qubits: usize) -> Vec<Self> {
        if n_qubits < 2 {
            return Vec::new();
        }
        (1..(1usize << (n_qubits - 1))).map(|mask| Self { n_qubits, mask }).collect()
    }
}

impl fmt::Display for QubitSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inside: Vec<String> = self.members().iter().map(|q| q.to_string()).collect();
        let outside: Vec<String> = (1..=self.n_qubits).filter(|&q| !self.contains(q)).map(|q| q.to_string()).collect();
        write!(f, "{{{}}}|{{{}}}", inside.join(","), outside.join(","))
    }
}

/// Density matrix of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates trace, hermiticity and positivity.
    pub fn new(n_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidState("zero qubits".into()));
        }
        if n_qubits > max_qubits() {
            return Err(Error::DimensionCap { dim: 1 << n_qubits.min(62), max_qubits: max_qubits() });
        }
        if matrix.dim() != 1 << n_qubits {
            return Err(Error::DimensionMismatch(matrix.dim(), 1 << n_qubits));
        }
        let dev = matrix.hermitian_deviation();
        if dev > 1e-12 {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidState(format!("trace {} + {}i differs from 1", tr.re, tr.im)));
        }
        let min = eigenvalues_hermitian(&matrix)?[0];
        if min < -1e-9 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Skips validation; for results of trace- and positivity-preserving maps.
    pub(crate) fn new_unchecked(n_qubits: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.dim(), 1 << n_qubits);
        Self { n_qubits, matrix }
    }

    /// Normalizes `matrix` by its trace and symmetrizes before validating.
    pub fn from_unnormalized(n_qubits: usize, matrix: &ComplexMatrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState(format!("non-positive trace {tr}")));
        }
        Self::new(n_qubits, matrix.hermitian_part().scale(1.0 / tr))
    }

    /// `|psi><psi|`, normalizing `psi`.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let n = psi.len();
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidState(format!("vector length {n} is not 2^N with N >= 1")));
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        let n_qubits = n.trailing_zeros() as usize;
        if n_qubits > max_qubits() {
            return Err(Error::DimensionCap { dim: n, max_qubits: max_qubits() });
        }
        Ok(Self { n_qubits, matrix: ComplexMatrix::outer(&v) })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        Self { n_qubits, matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64) }
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, w: f64, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("mixing weight {w} outside [0, 1]")));
        }
        Ok(Self::new_unchecked(self.n_qubits, &self.matrix.scale(w) + &other.matrix.scale(1.0 - w)))
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self::new_unchecked(self.n_qubits + other.n_qubits, kron(&self.matrix, &other.matrix)?))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `tr(rho * op)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        self.matrix.trace_product(op)
    }

    /// `<psi|rho|psi>` for a normalized vector.
    pub fn overlap(&self, psi: &[C64]) -> f64 {
        self.matrix.sandwich(psi, psi).re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_hermitian(&self.matrix).expect("density matrices are Hermitian")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

/// Partial transpose on the qubits of `a`, for any `2^n`-dimensional matrix.
pub fn partial_transpose_matrix(m: &ComplexMatrix, a: &QubitSubset) -> Result<ComplexMatrix> {
    if m.dim() != 1 << a.n_qubits() {
        return Err(Error::DimensionMismatch(m.dim(), 1 << a.n_qubits()));
    }
    let mask = a.mask();
    let d = m.dim();
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let src_i = (i & !mask) | (j & mask);
            let src_j = (j & !mask) | (i & mask);
            out[(i, j)] = m[(src_i, src_j)];
        }
    }
    Ok(out)
}

pub fn partial_transpose(rho: &DensityMatrix, a: &QubitSubset) -> Result<ComplexMatrix> {
    if a.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch(rho.n_qubits(), a.n_qubits()));
    }
    partial_transpose_matrix(rho.matrix(), a)
}

/// Smallest eigenvalue of `rho^{T_A}`.
pub fn min_pt_eigenvalue(m: &ComplexMatrix, a: &QubitSubset) -> Result<f64> {
    Ok(eigenvalues_hermitian(&partial_transpose_matrix(m, a)?)?[0])
}

/// `Tr_q[m (I (x) op_q (x) I)]` for a 2x2 `op` on 1-based `qubit`.
pub fn contract_qubit(m: &ComplexMatrix, n_qubits: usize, qubit: usize, op: &ComplexMatrix) -> ComplexMatrix {
    debug_assert_eq!(m.dim(), 1 << n_qubits);
    debug_assert_eq!(op.dim(), 2);
    let shift = qubit_shift(n_qubits, qubit);
    let low = (1usize << shift) - 1;
    let d_out = m.dim() / 2;
    let embed = |r: usize, bit: usize| ((r & !low) << 1) | (bit << shift) | (r & low);
    let mut out = ComplexMatrix::zeros(d_out);
    for i in 0..d_out {
        for j in 0..d_out {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    let s = op[(b, a)];
                    if s.re != 0.0 || s.im != 0.0 {
                        acc += s * m[(embed(i, a), embed(j, b))];
                    }
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Traces out one qubit.
pub fn partial_trace_qubit(rho: &DensityMatrix, qubit: usize) -> Result<DensityMatrix> {
    if rho.n_qubits() < 2 || qubit == 0 || qubit > rho.n_qubits() {
        return Err(Error::IndexOutOfRange { index: qubit, limit: rho.n_qubits() });
    }
    let m = contract_qubit(rho.matrix(), rho.n_qubits(), qubit, &ComplexMatrix::identity(2));
    Ok(DensityMatrix::new_unchecked(rho.n_qubits() - 1, m))
}

/// Outcome of measuring one qubit along a direction.
#[derive(Debug, Clone)]
pub struct Projection {
    /// `None` when the branch probability is below [`EMPTY_BRANCH_TOL`].
    pub state: Option<DensityMatrix>,
    pub probability: f64,
}

impl Projection {
    pub fn is_empty(&self) -> bool {
        self.state.is_none()
    }
}

/// Projects `qubit` onto the `outcome` eigenvector of `direction . sigma`.
pub fn project_qubit(rho: &DensityMatrix, qubit: usize, direction: [f64; 3], outcome: i8) -> Result<Projection> {
    let n = rho.n_qubits();
    if n < 2 {
        return Err(Error::Precondition("projection needs at least two qubits".into()));
    }
    if qubit == 0 || qubit > n {
        return Err(Error::IndexOutOfRange { index: qubit, limit: n });
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("direction has norm {norm}")));
    }
    let sign = match outcome {
        1 => 1.0,
        -1 => -1.0,
        _ => return Err(Error::InvalidArgument(format!("outcome must be +1 or -1, got {outcome}"))),
    };
    // (I + s n.sigma) / 2
    let proj = &ComplexMatrix::identity(2).scale(0.5) + &sigma_dot(direction).scale(0.5 * sign);
    let m = contract_qubit(rho.matrix(), n, qubit, &proj);
    let probability = m.trace().re.clamp(0.0, 1.0);
    let state = (probability > EMPTY_BRANCH_TOL).then(|| DensityMatrix::new_unchecked(n - 1, m.hermitian_part().scale(1.0 / probability)));
    Ok(Projection { state, probability })
}

/// Applies `u` to `qubit` from the left and `u^dagger` from the right, in place.
fn conjugate_qubit(m: &mut ComplexMatrix, n_qubits: usize, qubit: usize, u: &ComplexMatrix) {
    let shift = qubit_shift(n_qubits, qubit);
    let bit = 1usize << shift;
    let d = m.dim();
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    // rows: M <- U M
    for r0 in (0..d).filter(|r| r & bit == 0) {
        let r1 = r0 | bit;
        for col in 0..d {
            let a = m[(r0, col)];
            let b = m[(r1, col)];
            m[(r0, col)] = u00 * a + u01 * b;
            m[(r1, col)] = u10 * a + u11 * b;
        }
    }
    // columns: M <- M U^dagger
    let (v00, v01, v10, v11) = (u00.conj(), u10.conj(), u01.conj(), u11.conj());
    for row in 0..d {
        for c0 in (0..d).filter(|c| c & bit == 0) {
            let c1 = c0 | bit;
            let a = m[(row, c0)];
            let b = m[(row, c1)];
            m[(row, c0)] = a * v00 + b * v10;
            m[(row, c1)] = a * v01 + b * v11;
        }
    }
}

/// `(u_1 (x) ... (x) u_n) m (u_1 (x) ... (x) u_n)^dagger` without forming the product.
pub fn conjugate_local(m: &ComplexMatrix, us: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    if m.dim() != 1 << us.len() {
        return Err(Error::DimensionMismatch(m.dim(), 1 << us.len()));
    }
    let n = us.len();
    let mut out = m.clone();
    for (i, u) in us.iter().enumerate() {
        if u.dim() != 2 {
            return Err(Error::DimensionMismatch(u.dim(), 2));
        }
        conjugate_qubit(&mut out, n, i + 1, u);
    }
    Ok(out)
}

pub fn apply_local_unitaries(rho: &DensityMatrix, us: &[ComplexMatrix]) -> Result<DensityMatrix> {
    if us.len() != rho.n_qubits() {
        return Err(Error::DimensionMismatch(us.len(), rho.n_qubits()));
    }
    for u in us {
        if u.dim() != 2 {
            return Err(Error::DimensionMismatch(u.dim(), 2));
        }
        let dev = u.unitary_deviation();
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
    }
    Ok(DensityMatrix::new_unchecked(rho.n_qubits(), conjugate_local(rho.matrix(), us)?))
}

/// Reorders qubits: qubit `i + 1` of the result is qubit `order[i]` of the input.
pub fn permute_qubits(m: &ComplexMatrix, order: &[usize]) -> Result<ComplexMatrix> {
    let n = order.len();
    if m.dim() != 1 << n {
        return Err(Error::DimensionMismatch(m.dim(), 1 << n));
    }
    let mut seen = vec![false; n + 1];
    for &q in order {
        if q == 0 || q > n || seen[q] {
            return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 1..={n}")));
        }
        seen[q] = true;
    }
    let map = |idx: usize| -> usize {
        let mut src = 0usize;
        for (pos, &q) in order.iter().enumerate() {
            let bit = (idx >> qubit_shift(n, pos + 1)) & 1;
            src |= bit << qubit_shift(n, q);
        }
        src
    };
    let d = m.dim();
    let src: Vec<usize> = (0..d).map(map).collect();
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = m[(src[i], src[j])];
        }
    }
    Ok(out)
}

/// Basis vector `|k>` of dimension `dim`.
pub fn basis_vector(dim: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[k] = C64::new(1.0, 0.0);
    v
}
