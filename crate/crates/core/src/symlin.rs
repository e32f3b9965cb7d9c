//! Dense symmetric linear algebra with canonical upper-triangular storage.

use nalgebra::{DMatrix, DVector};

use crate::error::{OedError, Result};

/// Machine epsilon used for rank cutoffs.
pub const MACHINE_EPS: f64 = 2.2e-16;

const JACOBI_REL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 50;

/// Number of upper-triangular entries of a `p x p` matrix.
pub fn tri_len(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Row-major upper-triangular position of the unordered pair `(i, j)`, `i <= j`.
pub fn tri_index(i: usize, j: usize, p: usize) -> Result<usize> {
    if i > j || j >= p {
        return Err(OedError::IndexOutOfRange { i, j, p });
    }
    Ok(tri_index_unchecked(i, j, p))
}

#[inline]
fn tri_index_unchecked(i: usize, j: usize, p: usize) -> usize {
    i * p - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Inverse of [`tri_index`]: the pair `(i, j)` stored at position `k`.
pub fn tri_pair(k: usize, p: usize) -> Result<(usize, usize)> {
    let mut start = 0;
    for i in 0..p {
        let row = p - i;
        if k < start + row {
            return Ok((i, i + k - start));
        }
        start += row;
    }
    Err(OedError::IndexOutOfRange { i: k, j: k, p })
}

/// All `(i, j)` pairs with `i <= j` in storage order.
pub fn tri_pairs(p: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(tri_len(p));
    for i in 0..p {
        for j in i..p {
            out.push((i, j));
        }
    }
    out
}

/// Symmetric `p x p` matrix holding only its upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(OedError::InvalidInput("matrix dimension must be positive".into()));
        }
        if entries.len() != tri_len(dim) {
            return Err(OedError::DimensionMismatch {
                what: "upper-triangular entries",
                expected: tri_len(dim),
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![0.0; tri_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Symmetric part `(A + A^T) / 2` of a square matrix.
    pub fn from_full(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(OedError::DimensionMismatch {
                what: "square matrix columns",
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let p = a.nrows();
        let mut m = Self::zeros(p);
        for (i, j) in tri_pairs(p) {
            m.set(i, j, 0.5 * (a[(i, j)] + a[(j, i)]));
        }
        Ok(m)
    }

    /// Build from row-major nested rows, requiring exact symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        for r in rows {
            if r.len() != p {
                return Err(OedError::DimensionMismatch {
                    what: "matrix row length",
                    expected: p,
                    found: r.len(),
                });
            }
        }
        let mut m = Self::zeros(p.max(1));
        if p == 0 {
            return Err(OedError::InvalidInput("empty matrix".into()));
        }
        for (i, j) in tri_pairs(p) {
            let (a, b) = (rows[i][j], rows[j][i]);
            let scale = a.abs().max(b.abs());
            if (a - b).abs() > 1e-12 * scale {
                return Err(OedError::InvalidInput(format!(
                    "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                )));
            }
            m.set(i, j, a);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.entries[tri_index_unchecked(a, b, self.dim)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let k = tri_index_unchecked(a, b, self.dim);
        self.entries[k] = value;
    }

    pub fn to_full(&self) -> DMatrix<f64> {
        expand_full(self)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        if other.dim != self.dim {
            return Err(OedError::DimensionMismatch {
                what: "matrix dimension",
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// `D M D` for diagonal `D = diag(d)`.
    pub fn congruence_diag(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, j) in tri_pairs(self.dim) {
            out.set(i, j, d[i] * self.get(i, j) * d[j]);
        }
        out
    }
}

/// Full symmetric `p x p` expansion.
pub fn expand_full(m: &SymMatrix) -> DMatrix<f64> {
    let p = m.dim;
    DMatrix::from_fn(p, p, |i, j| m.get(i, j))
}

/// Eigenvalues ascending with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc: f64, l| acc.max(l.abs()))
    }

    pub fn vector(&self, s: usize) -> DVector<f64> {
        self.eigenvectors.column(s).into_owned()
    }

    /// `sum_s f(lambda_s) v_s v_s^T`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let p = self.dim();
        let mut out = DMatrix::zeros(p, p);
        for s in 0..p {
            let w = f(self.eigenvalues[s]);
            if w == 0.0 {
                continue;
            }
            let v = self.eigenvectors.column(s);
            out += w * v * v.transpose();
        }
        out
    }

    /// Default rank cutoff `p * eps * max|lambda|`.
    pub fn default_rank_tol(&self) -> f64 {
        self.dim() as f64 * MACHINE_EPS * self.max_abs()
    }

    /// Pseudo-inverse with relative cutoff `rtol`.
    pub fn pseudo_inverse(&self, rtol: f64) -> DMatrix<f64> {
        let cutoff = rtol * self.max_abs();
        self.spectral_map(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 })
    }

    /// Count of eigenvalues above the relative cutoff.
    pub fn rank(&self, rtol: f64) -> usize {
        let cutoff = rtol * self.max_abs();
        self.eigenvalues.iter().filter(|l| l.abs() > cutoff).count()
    }
}

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(OedError::NonFinite("matrix entries"));
    }
    let n = m.dim();
    let mut a: Vec<f64> = (0..n * n).map(|k| m.get(k / n, k % n)).collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_REL_TOL * frob;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off.sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&s| a[s * n + s]));
    let mut eigenvectors = DMatrix::from_fn(n, n, |k, col| v[k * n + order[col]]);
    for col in 0..n {
        let mut best = 0;
        for k in 1..n {
            if eigenvectors[(k, col)].abs() > eigenvectors[(best, col)].abs() {
                best = k;
            }
        }
        if eigenvectors[(best, col)] < 0.0 {
            eigenvectors.column_mut(col).neg_mut();
        }
    }
    if eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(OedError::NonFinite("eigenvalues"));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Default relative cutoff for [`pseudo_inverse`].
pub fn default_rtol(p: usize) -> f64 {
    p as f64 * MACHINE_EPS
}

/// Moore-Penrose pseudo-inverse; eigenvalues with `|lambda| <= rtol * max|lambda|` are dropped.
pub fn pseudo_inverse(m: &SymMatrix, rtol: f64) -> Result<SymMatrix> {
    if !(rtol > 0.0) {
        return Err(OedError::InvalidInput(format!("rtol must be positive, got {rtol}")));
    }
    let eig = sym_eigen(m)?;
    SymMatrix::from_full(&eig.pseudo_inverse(rtol))
}

/// Sign and log of the absolute determinant; a zero eigenvalue gives sign 0 and `-inf`.
pub fn signed_log_det(m: &SymMatrix) -> Result<(i8, f64)> {
    let eig = sym_eigen(m)?;
    Ok(signed_log_det_from(&eig))
}

pub(crate) fn signed_log_det_from(eig: &EigenDecomposition) -> (i8, f64) {
    let mut sign = 1i8;
    let mut logabs = 0.0;
    for &l in eig.eigenvalues.iter() {
        if l == 0.0 {
            return (0, f64::NEG_INFINITY);
        }
        if l < 0.0 {
            sign = -sign;
        }
        logabs += l.abs().ln();
    }
    (sign, logabs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tri_index_small_cases() {
        assert_eq!(tri_index(0, 0, 2).unwrap(), 0);
        assert_eq!(tri_index(0, 1, 2).unwrap(), 1);
        assert_eq!(tri_index(1, 1, 2).unwrap(), 2);
        assert_eq!(tri_index(2, 2, 3).unwrap(), 5);
        assert!(matches!(
            tri_index(1, 0, 2),
            Err(OedError::IndexOutOfRange { .. })
        ));
        assert!(tri_index(0, 2, 2).is_err());
    }

    #[test]
    fn tri_index_roundtrip_up_to_20() {
        for p in 1..=20 {
            for k in 0..tri_len(p) {
                let (i, j) = tri_pair(k, p).unwrap();
                assert_eq!(tri_index(i, j, p).unwrap(), k);
            }
            assert_eq!(tri_pairs(p).len(), tri_len(p));
            assert!(tri_pair(tri_len(p), p).is_err());
        }
    }

    #[test]
    fn expand_two_by_two() {
        let m = SymMatrix::new(2, vec![1.0, 2.0, 3.0]).unwrap();
        let f = expand_full(&m);
        assert_eq!(f, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
        assert_eq!(f.transpose(), f);
        assert!(SymMatrix::new(2, vec![1.0]).is_err());
    }

    #[test]
    fn eigen_diagonal() {
        let e = sym_eigen(&SymMatrix::from_diagonal(&[2.0, 4.0])).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[2.0, 4.0]);
        assert_eq!(e.eigenvectors, DMatrix::identity(2, 2));
        let e = sym_eigen(&SymMatrix::from_diagonal(&[4.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[2.0, 4.0]);
        assert_eq!(e.vector(0).as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn eigen_identity() {
        let e = sym_eigen(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn eigen_two_by_two_sign_rule() {
        let m = SymMatrix::new(2, vec![2.0, 1.0, 2.0]).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert_relative_eq!(e.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvalues[1], 3.0, epsilon = 1e-14);
        let r = 0.5f64.sqrt();
        // Tie in magnitude: first index wins and is made positive.
        assert_relative_eq!(e.eigenvectors[(0, 0)], r, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvectors[(1, 0)], -r, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvectors[(0, 1)], r, epsilon = 1e-14);
        assert_relative_eq!(e.eigenvectors[(1, 1)], r, epsilon = 1e-14);
    }

    #[test]
    fn eigen_rejects_nan() {
        let m = SymMatrix::new(2, vec![1.0, f64::NAN, 1.0]).unwrap();
        assert_eq!(sym_eigen(&m), Err(OedError::NonFinite("matrix entries")));
    }

    #[test]
    fn pinv_examples() {
        let p = pseudo_inverse(&SymMatrix::from_diagonal(&[2.0, 4.0]), default_rtol(2)).unwrap();
        assert_relative_eq!(p.get(0, 0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.get(1, 1), 0.25, epsilon = 1e-15);
        assert_eq!(p.get(0, 1), 0.0);

        let p = pseudo_inverse(&SymMatrix::from_diagonal(&[1.0, 0.0]), 1e-12).unwrap();
        assert_eq!(p.entries(), &[1.0, 0.0, 0.0]);

        let m = SymMatrix::new(2, vec![5.0, 3.0, 2.0]).unwrap();
        let p = pseudo_inverse(&m, default_rtol(2)).unwrap();
        for (got, want) in p.entries().iter().zip([2.0, -3.0, 5.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn log_det_examples() {
        assert_eq!(signed_log_det(&SymMatrix::identity(4)).unwrap(), (1, 0.0));
        let (s, l) = signed_log_det(&SymMatrix::from_diagonal(&[2.0, 4.0])).unwrap();
        assert_eq!(s, 1);
        assert_relative_eq!(l, 8f64.ln(), epsilon = 1e-14);
        let (s, l) = signed_log_det(&SymMatrix::from_diagonal(&[3.0, -2.0])).unwrap();
        assert_eq!(s, -1);
        assert_relative_eq!(l, 6f64.ln(), epsilon = 1e-14);
        let (s, l) = signed_log_det(&SymMatrix::from_diagonal(&[3.0, 0.0])).unwrap();
        assert_eq!(s, 0);
        assert_eq!(l, f64::NEG_INFINITY);
    }

    #[test]
    fn eigen_is_deterministic() {
        let m = SymMatrix::new(3, vec![4.0, 1.0, -2.0, 3.0, 0.5, 1.0]).unwrap();
        assert_eq!(sym_eigen(&m).unwrap(), sym_eigen(&m).unwrap());
    }
}
