//! Dense complex linear algebra for few-qubit operators.
//!
//! Composite indices are row-major over tensor factors: the leftmost factor
//! of a [`TensorLayout`] is the slowest-varying digit. Every operator in the
//! crate (states, unitaries, effects, process operators) follows this
//! convention.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tolerance for Hermiticity checks on inputs (max-abs entry difference).
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

/// Column vector of complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector<T> {
    data: Vec<Complex<T>>,
}

/// Subsystem dimensions of a composite space, slowest-varying first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TensorLayout {
    factor_dims: Vec<usize>,
}

impl TensorLayout {
    pub fn new(factor_dims: impl Into<Vec<usize>>) -> Result<Self> {
        let factor_dims = factor_dims.into();
        if factor_dims.is_empty() || factor_dims.contains(&0) {
            return Err(Error::Dimension(format!(
                "tensor layout needs positive factor dimensions, got {factor_dims:?}"
            )));
        }
        Ok(Self { factor_dims })
    }

    /// `n` qubits.
    pub fn qubits(n: usize) -> Self {
        Self {
            factor_dims: vec![2; n.max(1)],
        }
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.total_dim() != dim {
            return Err(Error::Dimension(format!(
                "layout {:?} describes dimension {}, matrix has dimension {}",
                self.factor_dims,
                self.total_dim(),
                dim
            )));
        }
        Ok(())
    }

    fn check_factor(&self, factor: usize) -> Result<()> {
        if factor >= self.factor_dims.len() {
            return Err(Error::Dimension(format!(
                "factor index {factor} out of range for layout {:?}",
                self.factor_dims
            )));
        }
        Ok(())
    }

    /// Splits a composite index into per-factor digits.
    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.factor_dims).rev() {
            *slot = index % d;
            index /= d;
        }
    }

    fn compose(dims: &[usize], digits: impl Iterator<Item = usize>) -> usize {
        digits.zip(dims).fold(0, |acc, (digit, &d)| acc * d + digit)
    }
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from rows of `(re, im)` pairs given in `f64`.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend(row.iter().map(|&(re, im)| Complex::new(T::lit(re), T::lit(im))));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    /// Rank-one projector-like operator `|v><v|`.
    pub fn outer(v: &ComplexVector<T>) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v.data[i] * v.data[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
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

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }

    /// `Re Tr(self * other)` without forming the product.
    pub fn trace_product_re(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim, other.dim);
        let mut acc = T::zero();
        for i in 0..self.dim {
            for k in 0..self.dim {
                acc = acc + (self[(i, k)] * other[(k, i)]).re;
            }
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "max_abs_diff on mismatched dimensions");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest deviation `|m_ij - conj(m_ji)|`.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Largest deviation of `U^dagger U` from the identity.
    pub fn unitarity_defect(&self) -> T {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &ComplexVector<T>) -> ComplexVector<T> {
        assert_eq!(self.dim, v.len(), "matrix-vector dimension mismatch");
        let data = (0..self.dim)
            .map(|i| {
                (0..self.dim).fold(Complex::zero(), |acc, j| acc + self[(i, j)] * v.data[j])
            })
            .collect();
        ComplexVector { data }
    }

    /// Checks that `self` is a density matrix (Hermitian, unit trace, PSD).
    pub fn validate_state(&self, tol: T) -> Result<()> {
        if self.hermiticity_defect() > tol {
            return Err(Error::Validation(format!(
                "state not Hermitian (defect {})",
                self.hermiticity_defect()
            )));
        }
        let tr = self.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::Validation(format!("state trace {tr} differs from 1")));
        }
        let min = herm_eigenvalues(self)?[0];
        if min < -tol {
            return Err(Error::Validation(format!(
                "state has negative eigenvalue {min}"
            )));
        }
        Ok(())
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix addition dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix subtraction dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: Real> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<T: fmt::Debug> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = &self.data[i * self.dim + j];
                    format!("{:+.4?}{:+.4?}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<T: Real> ComplexVector<T> {
    pub fn new(data: Vec<Complex<T>>) -> Self {
        Self { data }
    }

    /// Computational basis vector `|index>` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut data = vec![Complex::zero(); dim];
        data[index] = Complex::one();
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn norm_sqr(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self {
            data: self.data.iter().map(|z| z / n).collect(),
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .flat_map(|a| other.data.iter().map(move |b| a * b))
            .collect();
        Self { data }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm()))
    }
}

/// Kronecker product, `a` on the slowest-varying factor.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (da, db) = (a.dim, b.dim);
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n);
    for i1 in 0..da {
        for j1 in 0..da {
            let x = a[(i1, j1)];
            if x.is_zero() {
                continue;
            }
            for i2 in 0..db {
                for j2 in 0..db {
                    out.data[(i1 * db + i2) * n + j1 * db + j2] = x * b[(i2, j2)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<T: Real>(factors: &[&ComplexMatrix<T>]) -> ComplexMatrix<T> {
    factors
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Traces out the factors listed in `traced` (0-based factor indices).
pub fn partial_trace<T: Real>(
    m: &ComplexMatrix<T>,
    layout: &TensorLayout,
    traced: &[usize],
) -> Result<ComplexMatrix<T>> {
    layout.check(m.dim)?;
    for &f in traced {
        layout.check_factor(f)?;
    }
    let nf = layout.num_factors();
    let keep: Vec<usize> = (0..nf).filter(|f| !traced.contains(f)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&f| layout.factor_dims[f]).collect();
    let out_dim: usize = kept_dims.iter().product();
    let mut out = ComplexMatrix::zeros(out_dim);
    let mut di = vec![0; nf];
    let mut dj = vec![0; nf];
    for i in 0..m.dim {
        layout.digits(i, &mut di);
        for j in 0..m.dim {
            layout.digits(j, &mut dj);
            if traced.iter().any(|&f| di[f] != dj[f]) {
                continue;
            }
            let oi = TensorLayout::compose(&kept_dims, keep.iter().map(|&f| di[f]));
            let oj = TensorLayout::compose(&kept_dims, keep.iter().map(|&f| dj[f]));
            out[(oi, oj)] = out[(oi, oj)] + m[(i, j)];
        }
    }
    Ok(out)
}

/// Transposes the indices of one factor (0-based) and leaves the rest alone.
pub fn partial_transpose<T: Real>(
    m: &ComplexMatrix<T>,
    layout: &TensorLayout,
    factor: usize,
) -> Result<ComplexMatrix<T>> {
    layout.check(m.dim)?;
    layout.check_factor(factor)?;
    let nf = layout.num_factors();
    let dims = &layout.factor_dims;
    let mut out = ComplexMatrix::zeros(m.dim);
    let mut di = vec![0; nf];
    let mut dj = vec![0; nf];
    for i in 0..m.dim {
        layout.digits(i, &mut di);
        for j in 0..m.dim {
            layout.digits(j, &mut dj);
            std::mem::swap(&mut di[factor], &mut dj[factor]);
            let oi = TensorLayout::compose(dims, di.iter().copied());
            let oj = TensorLayout::compose(dims, dj.iter().copied());
            std::mem::swap(&mut di[factor], &mut dj[factor]);
            out[(oi, oj)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `order[k]` of the input becomes factor
/// `k` of the output.
pub fn permute_factors<T: Real>(
    m: &ComplexMatrix<T>,
    layout: &TensorLayout,
    order: &[usize],
) -> Result<ComplexMatrix<T>> {
    layout.check(m.dim)?;
    let nf = layout.num_factors();
    let mut seen = vec![false; nf];
    if order.len() != nf || order.iter().any(|&f| f >= nf || std::mem::replace(&mut seen[f], true)) {
        return Err(Error::Dimension(format!(
            "{order:?} is not a permutation of {nf} factors"
        )));
    }
    let new_dims: Vec<usize> = order.iter().map(|&f| layout.factor_dims[f]).collect();
    let mut out = ComplexMatrix::zeros(m.dim);
    let mut di = vec![0; nf];
    let mut dj = vec![0; nf];
    for i in 0..m.dim {
        layout.digits(i, &mut di);
        let oi = TensorLayout::compose(&new_dims, order.iter().map(|&f| di[f]));
        for j in 0..m.dim {
            layout.digits(j, &mut dj);
            let oj = TensorLayout::compose(&new_dims, order.iter().map(|&f| dj[f]));
            out[(oi, oj)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// `|U>> = (id ⊗ U) Σ_i |i>|i>`; component `(i, j)` equals `U[j][i]`.
pub fn vectorize<T: Real>(u: &ComplexMatrix<T>) -> ComplexVector<T> {
    let d = u.dim;
    let mut data = vec![Complex::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            data[i * d + j] = u[(j, i)];
        }
    }
    ComplexVector { data }
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Real>(v: &ComplexVector<T>) -> Result<ComplexMatrix<T>> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::Dimension(format!(
            "vector of length {} is not a vectorized square matrix",
            v.len()
        )));
    }
    let mut u = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            u[(j, i)] = v.data[i * d + j];
        }
    }
    Ok(u)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// The `n x n` Hermitian matrix `H = A + iB` is embedded as the real
/// symmetric `[[A, -B], [B, A]]`, whose spectrum is that of `H` with every
/// eigenvalue doubled; the embedding is diagonalised with cyclic Jacobi
/// rotations and the pairs are averaged.
pub fn herm_eigenvalues<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<T>> {
    let defect = m.hermiticity_defect();
    if defect > T::lit(HERMITIAN_TOL) {
        return Err(Error::Validation(format!(
            "eigenvalue solver requires a Hermitian matrix (defect {defect})"
        )));
    }
    let n = m.dim;
    let size = 2 * n;
    let mut a = vec![T::zero(); size * size];
    for i in 0..n {
        for j in 0..n {
            // symmetrise so rounding noise in the input cannot break the solver
            let z = (m[(i, j)] + m[(j, i)].conj()) / T::lit(2.0);
            a[i * size + j] = z.re;
            a[(i + n) * size + j + n] = z.re;
            a[i * size + j + n] = -z.im;
            a[(i + n) * size + j] = z.im;
        }
    }
    jacobi_symmetric(&mut a, size);
    let mut diag: Vec<T> = (0..size).map(|i| a[i * size + i]).collect();
    diag.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(diag
        .chunks(2)
        .map(|pair| (pair[0] + pair[1]) / T::lit(2.0))
        .collect())
}

fn jacobi_symmetric<T: Real>(a: &mut [T], n: usize) {
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut total = T::zero();
        for i in 0..n {
            for j in 0..n {
                let v = a[i * n + j] * a[i * n + j];
                total = total + v;
                if i != j {
                    off = off + v;
                }
            }
        }
        if off <= eps * eps * total || off == T::zero() {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
}

/// Pauli matrices and a few fixed gates.
pub mod gates {
    use super::*;

    fn real2<T: Real>(a: f64, b: f64, c: f64, d: f64) -> ComplexMatrix<T> {
        ComplexMatrix::from_rows(&[vec![(a, 0.0), (b, 0.0)], vec![(c, 0.0), (d, 0.0)]])
            .expect("2x2")
    }

    pub fn pauli_x<T: Real>() -> ComplexMatrix<T> {
        real2(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y<T: Real>() -> ComplexMatrix<T> {
        ComplexMatrix::from_rows(&[vec![(0.0, 0.0), (0.0, -1.0)], vec![(0.0, 1.0), (0.0, 0.0)]])
            .expect("2x2")
    }

    pub fn pauli_z<T: Real>() -> ComplexMatrix<T> {
        real2(1.0, 0.0, 0.0, -1.0)
    }

    pub fn hadamard<T: Real>() -> ComplexMatrix<T> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        real2(h, h, h, -h)
    }

    /// Two-qubit SWAP.
    pub fn swap<T: Real>() -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::zeros(4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[(i, j)] = Complex::one();
        }
        m
    }

    /// CNOT with the first qubit as control.
    pub fn cnot<T: Real>() -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::zeros(4);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(i, j)] = Complex::one();
        }
        m
    }

    /// `(x σ_x + y σ_y + z σ_z)`.
    pub fn bloch_operator<T: Real>(r: [T; 3]) -> ComplexMatrix<T> {
        let mut m = ComplexMatrix::zeros(2);
        m[(0, 0)] = Complex::new(r[2], T::zero());
        m[(1, 1)] = Complex::new(-r[2], T::zero());
        m[(0, 1)] = Complex::new(r[0], -r[1]);
        m[(1, 0)] = Complex::new(r[0], r[1]);
        m
    }
}
