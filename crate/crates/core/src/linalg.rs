//! Dense complex matrices and the spectral utilities everything else sits on.
//!
//! [`CMatrix`] is a square matrix of `Complex64` entries. Dimensions are
//! limited by a process-wide cap (default 4096, i.e. twelve qubits) that every
//! constructor producing a larger operator checks; see [`set_dim_cap`].

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Maximum entrywise deviation from `M = M†` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted in a density operator.
pub const PSD_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-10;

static DIM_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DIM_CAP);

pub fn dim_cap() -> usize {
    DIM_CAP.load(Ordering::Relaxed)
}

/// Raise or lower the dimension cap for the whole process.
pub fn set_dim_cap(cap: usize) {
    DIM_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    let cap = dim_cap();
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(())
}

/// Checked product of local dimensions against the cap.
pub fn total_dim(dims: &[usize]) -> Result<usize> {
    let mut total = 1usize;
    for &d in dims {
        total = total.checked_mul(d).ok_or(Error::DimensionCap {
            dim: usize::MAX,
            cap: dim_cap(),
        })?;
        check_dim(total)?;
    }
    Ok(total)
}

pub const fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Validation tolerances for Hermiticity, trace and positivity checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: HERMITIAN_TOL,
            trace: TRACE_TOL,
            psd: PSD_TOL,
        }
    }
}

/// Dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    inner: DMatrix<Complex64>,
}

impl CMatrix {
    /// Build from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(CMatrix {
            inner: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        CMatrix {
            inner: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { c(diag[i], 0.0) } else { c(0.0, 0.0) })
    }

    pub fn identity(dim: usize) -> Self {
        CMatrix {
            inner: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            inner: DMatrix::zeros(dim, dim),
        }
    }

    pub(crate) fn from_inner(inner: DMatrix<Complex64>) -> Self {
        debug_assert!(inner.is_square());
        CMatrix { inner }
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.inner[(i, j)]).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix {
            inner: self.inner.adjoint(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix {
            inner: &self.inner * s,
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff: dimension mismatch");
        self.inner
            .iter()
            .zip(other.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |M[i][j] - conj(M[j][i])|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.inner[(i, j)] - self.inner[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        CMatrix {
            inner: (&self.inner + self.inner.adjoint()) * c(0.5, 0.0),
        }
    }

    /// Anti-Hermitian part divided by `i`, i.e. `(M - M†)/(2i)`.
    pub fn skew_part(&self) -> Self {
        CMatrix {
            inner: (&self.inner - self.inner.adjoint()) * c(0.0, -0.5),
        }
    }

    pub fn commutator(&self, other: &CMatrix) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &CMatrix) -> Self {
        &(self * other) + &(other * self)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix({}x{}) ", self.dim(), self.dim())?;
        fmt::Debug::fmt(&self.rows(), f)
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        CMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix {
            inner: -&self.inner,
        }
    }
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 1) => c(0.0, -1.0),
        (1, 0) => c(0.0, 1.0),
        _ => c(0.0, 0.0),
    })
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_real_diagonal(&[1.0, -1.0])
}

/// `v · σ` for a real three-vector.
pub fn bloch(v: [f64; 3]) -> CMatrix {
    CMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => c(v[2], 0.0),
        (1, 1) => c(-v[2], 0.0),
        (0, 1) => c(v[0], -v[1]),
        _ => c(v[0], v[1]),
    })
}

/// `v · σ` for a complex three-vector.
pub fn bloch_complex(v: [Complex64; 3]) -> CMatrix {
    let i = c(0.0, 1.0);
    CMatrix::from_fn(2, |r, s| match (r, s) {
        (0, 0) => v[2],
        (1, 1) => -v[2],
        (0, 1) => v[0] - i * v[1],
        _ => v[0] + i * v[1],
    })
}

/// Kronecker product; `(a⊗b)[i1·db + i2, j1·db + j2] = a[i1,j1]·b[i2,j2]`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(Error::DimensionCap { dim: usize::MAX, cap: dim_cap() })?;
    check_dim(dim)?;
    Ok(CMatrix {
        inner: a.inner.kronecker(&b.inner),
    })
}

/// Left-to-right Kronecker product of a nonempty sequence.
pub fn tensor_all<'a, I>(factors: I) -> Result<CMatrix>
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    let mut iter = factors.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::Contract("tensor product of an empty list".into()))?;
    iter.try_fold(first.clone(), |acc, m| tensor(&acc, m))
}

fn require_hermitian(m: &CMatrix) -> Result<()> {
    let dev = m.hermitian_deviation();
    if !(dev <= HERMITIAN_TOL) {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (deviation {dev:e})"
        )));
    }
    Ok(())
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors as
/// columns of the returned matrix.
pub fn hermitian_eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    require_hermitian(m)?;
    let eig = SymmetricEigen::new(m.hermitian_part().inner);
    let mut order: Vec<usize> = (0..m.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.dim(), m.dim(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, CMatrix { inner: vectors }))
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigh(m).map(|(values, _)| values)
}

/// `V diag(values) V†`.
pub fn reconstruct(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let d = CMatrix::from_real_diagonal(values);
    &(vectors * &d) * &vectors.adjoint()
}

/// Largest singular value, from the spectrum of `M†M`.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    let gram = (&m.adjoint() * m).hermitian_part();
    let values = hermitian_eigenvalues(&gram)?;
    Ok(values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// `tr(a·b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.dim();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a.inner[(i, j)] * b.inner[(j, i)];
        }
    }
    acc
}

/// Density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMatrix, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::invalid("density", "non-finite entries"));
        }
        let dev = matrix.hermitian_deviation();
        if dev > tol.hermitian {
            return Err(Error::invalid(
                "density",
                format!("not Hermitian (deviation {dev:e})"),
            ));
        }
        let tr = matrix.trace();
        if (tr - c(1.0, 0.0)).norm() > tol.trace {
            return Err(Error::invalid(
                "density",
                format!("trace {} differs from 1", tr.re),
            ));
        }
        let matrix = matrix.hermitian_part();
        let values = hermitian_eigenvalues(&matrix)?;
        if values[0] < -tol.psd {
            return Err(Error::invalid(
                "density",
                format!("negative eigenvalue {:e}", values[0]),
            ));
        }
        Ok(DensityOperator { matrix })
    }

    /// Wrap a matrix already known to be a density operator.
    pub(crate) fn new_unchecked(matrix: CMatrix) -> Self {
        debug_assert!(matrix.hermitian_deviation() < 1e-8);
        DensityOperator { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(DensityOperator {
            matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64),
        })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(Error::invalid("state", "zero or non-finite vector"));
        }
        let d = amplitudes.len();
        let matrix = CMatrix::from_fn(d, |i, j| amplitudes[i] * amplitudes[j].conj() / norm2);
        Ok(DensityOperator { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }
}

/// Imaginary part of `tr(ρm)` tolerated before reporting a contract violation.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-7;

/// `tr(ρ m)` for Hermitian `m`.
pub fn expectation(rho: &DensityOperator, m: &CMatrix) -> Result<f64> {
    if rho.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: m.dim(),
        });
    }
    let value = trace_product(rho.matrix(), m);
    if value.im.abs() > IMAGINARY_RESIDUE_TOL {
        return Err(Error::Contract(format!(
            "expectation has imaginary residue {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// Reorder tensor factors. `labels[f]` is the site label carried by factor
/// `f` of `m` (whose factor dimensions are `dims[f]`); the result carries the
/// factors sorted by ascending label.
pub fn reorder_sites(m: &CMatrix, dims: &[usize], labels: &[usize]) -> Result<CMatrix> {
    if dims.len() != labels.len() {
        return Err(Error::Contract("reorder_sites: dims and labels differ in length".into()));
    }
    let total: usize = dims.iter().product();
    if total != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: m.dim(),
        });
    }
    let mut sorted: Vec<usize> = (0..labels.len()).collect();
    sorted.sort_by_key(|&f| labels[f]);
    if sorted.windows(2).any(|w| labels[w[0]] == labels[w[1]]) {
        return Err(Error::Contract("reorder_sites: repeated site label".into()));
    }
    let perm = index_permutation(dims, &sorted);
    Ok(CMatrix::from_fn(total, |i, j| m.get(perm[i], perm[j])))
}

/// For every output index (factors in `out_order`), the input index
/// (factors in natural order) holding the same multi-index.
fn index_permutation(dims: &[usize], out_order: &[usize]) -> Vec<usize> {
    let nf = dims.len();
    let mut in_stride = vec![1usize; nf];
    for f in (0..nf.saturating_sub(1)).rev() {
        in_stride[f] = in_stride[f + 1] * dims[f + 1];
    }
    let total: usize = dims.iter().product();
    let mut perm = Vec::with_capacity(total);
    let mut digits = vec![0usize; nf];
    for _ in 0..total {
        let idx = out_order
            .iter()
            .zip(&digits)
            .map(|(&f, &d)| d * in_stride[f])
            .sum();
        perm.push(idx);
        // increment the mixed-radix counter, last output factor fastest
        for pos in (0..nf).rev() {
            digits[pos] += 1;
            if digits[pos] < dims[out_order[pos]] {
                break;
            }
            digits[pos] = 0;
        }
    }
    perm
}

/// Partial trace keeping the factors listed in `keep` (ascending order).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if total != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: m.dim(),
        });
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Contract("partial_trace: factor index out of range".into()));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !keep_sorted.contains(f)).collect();
    // bring kept factors to the front, traced factors to the back
    let mut order = keep_sorted.clone();
    order.extend(&traced);
    let perm = index_permutation(dims, &order);
    let kd: usize = keep_sorted.iter().map(|&f| dims[f]).product();
    let td: usize = traced.iter().map(|&f| dims[f]).product();
    Ok(CMatrix::from_fn(kd, |i, j| {
        (0..td)
            .map(|t| m.get(perm[i * td + t], perm[j * td + t]))
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = CMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2).unwrap(), CMatrix::identity(4));
    }

    #[test]
    fn sigma_z_tensor_sigma_z_is_diagonal() {
        let zz = tensor(&sigma_z(), &sigma_z()).unwrap();
        assert_eq!(zz, CMatrix::from_real_diagonal(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn tensor_index_layout() {
        let a = CMatrix::from_fn(2, |i, j| c((i * 2 + j) as f64, 0.0));
        let b = CMatrix::from_fn(3, |i, j| c(0.0, (i * 3 + j) as f64));
        let ab = tensor(&a, &b).unwrap();
        for i1 in 0..2 {
            for j1 in 0..2 {
                for i2 in 0..3 {
                    for j2 in 0..3 {
                        assert_eq!(ab.get(i1 * 3 + i2, j1 * 3 + j2), a.get(i1, j1) * b.get(i2, j2));
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_respects_dim_cap() {
        let big = CMatrix::identity(64);
        assert_eq!(tensor(&big, &big).unwrap().dim(), 4096);
        let bigger = CMatrix::identity(65);
        assert!(matches!(
            tensor(&bigger, &big),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn pauli_spectra() {
        let ev = hermitian_eigenvalues(&sigma_x()).unwrap();
        assert!(approx(ev[0], -1.0, 1e-12) && approx(ev[1], 1.0, 1e-12));
        let ev = hermitian_eigenvalues(&CMatrix::from_real_diagonal(&[0.3, -0.7])).unwrap();
        assert!(approx(ev[0], -0.7, 1e-12) && approx(ev[1], 0.3, 1e-12));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_fn(2, |i, j| if i < j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn identity_norm_is_one() {
        assert!(approx(operator_norm(&CMatrix::identity(5)).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn expectation_basics() {
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        assert!(approx(expectation(&mixed, &sigma_z()).unwrap(), 0.0, 1e-15));
        let zero = DensityOperator::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(approx(expectation(&zero, &sigma_z()).unwrap(), 1.0, 1e-15));
        assert!(matches!(
            expectation(&zero, &CMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expectation_rejects_imaginary_residue() {
        let plus = DensityOperator::pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        // non-Hermitian probe with a large imaginary expectation
        let m = CMatrix::from_fn(2, |i, j| if i == 0 && j == 1 { c(0.0, 1.0) } else { c(0.0, 0.0) });
        assert!(matches!(expectation(&plus, &m), Err(Error::Contract(_))));
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(CMatrix::identity(2)).is_err());
        assert!(DensityOperator::new(CMatrix::from_real_diagonal(&[1.5, -0.5])).is_err());
        assert!(DensityOperator::new(CMatrix::from_real_diagonal(&[0.25, 0.75])).is_ok());
    }

    #[test]
    fn reorder_swaps_factors() {
        let a = sigma_x();
        let b = sigma_z();
        let ab = tensor(&a, &b).unwrap();
        let ba = tensor(&b, &a).unwrap();
        // factor 0 carries label 1, factor 1 carries label 0
        let swapped = reorder_sites(&ab, &[2, 2], &[1, 0]).unwrap();
        assert!(swapped.max_abs_diff(&ba) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let a = CMatrix::from_real_diagonal(&[0.2, 0.8]);
        let b = CMatrix::from_real_diagonal(&[0.1, 0.2, 0.7]);
        let ab = tensor(&a, &b).unwrap();
        assert!(partial_trace(&ab, &[2, 3], &[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(partial_trace(&ab, &[2, 3], &[1]).unwrap().max_abs_diff(&b) < 1e-15);
    }
}
