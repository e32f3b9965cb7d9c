//! Optimality criteria on a Fisher information matrix, with analytic first and
//! second derivatives in full-matrix space and in upper-triangular space.
//!
//! Full-space derivatives treat the criterion as a function of a general
//! `p x p` matrix: `G[i][j] = dPsi/dM_ij` and the Hessian element
//! `((i, j), (k, l))` lives at row `i*p + j`, column `k*p + l`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{OedError, Result};
use crate::symlin::{self, sym_eigen, tri_len, tri_pairs, EigenDecomposition, SymMatrix};

/// Relative eigenvalue separation below which an extreme eigenvalue counts as repeated.
pub const SEPARATION_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CriterionKind {
    A,
    D,
    E,
    ME,
    PseudoA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 5] = [
        CriterionKind::A,
        CriterionKind::D,
        CriterionKind::E,
        CriterionKind::ME,
        CriterionKind::PseudoA,
    ];

    pub fn sense(self) -> Sense {
        match self {
            CriterionKind::A | CriterionKind::ME => Sense::Minimize,
            CriterionKind::D | CriterionKind::E | CriterionKind::PseudoA => Sense::Maximize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::A => "A",
            CriterionKind::D => "D",
            CriterionKind::E => "E",
            CriterionKind::ME => "ME",
            CriterionKind::PseudoA => "pseudoA",
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionKind {
    type Err = OedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(CriterionKind::A),
            "D" | "d" => Ok(CriterionKind::D),
            "E" | "e" => Ok(CriterionKind::E),
            "ME" | "me" => Ok(CriterionKind::ME),
            "pseudoA" | "PseudoA" | "pseudoa" => Ok(CriterionKind::PseudoA),
            other => Err(OedError::InvalidInput(format!(
                "unknown criterion '{other}' (expected A, D, E, ME or pseudoA)"
            ))),
        }
    }
}

/// A criterion kind plus the positive multiplier applied to A-optimality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criterion {
    pub kind: CriterionKind,
    pub a_scale: f64,
}

impl Criterion {
    pub fn new(kind: CriterionKind) -> Self {
        Self { kind, a_scale: 1.0 }
    }

    pub fn with_a_scale(kind: CriterionKind, a_scale: f64) -> Self {
        Self { kind, a_scale }
    }

    pub fn sense(&self) -> Sense {
        self.kind.sense()
    }

    /// Map a reported value to the internal minimize convention.
    pub fn to_minimize(&self, value: f64) -> f64 {
        match self.sense() {
            Sense::Minimize => value,
            Sense::Maximize => -value,
        }
    }

    fn scale(&self) -> f64 {
        if self.kind == CriterionKind::A {
            self.a_scale
        } else {
            1.0
        }
    }
}

impl From<CriterionKind> for Criterion {
    fn from(kind: CriterionKind) -> Self {
        Criterion::new(kind)
    }
}

/// Value, tri-space gradient and tri-space Hessian of a criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct GreyBoxEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: DMatrix<f64>,
}

fn require_full_rank(eig: &EigenDecomposition) -> Result<()> {
    let tol = eig.default_rank_tol();
    if eig.lambda_min() <= tol {
        return Err(OedError::SingularFim {
            lambda_min: eig.lambda_min(),
            tol,
        });
    }
    Ok(())
}

fn require_positive_det(eig: &EigenDecomposition) -> Result<()> {
    let (sign, _) = symlin::signed_log_det_from(eig);
    if sign <= 0 {
        return Err(OedError::NonPositiveDeterminant { sign });
    }
    Ok(())
}

fn require_simple(eig: &EigenDecomposition, at_min: bool) -> Result<()> {
    let p = eig.dim();
    if p < 2 {
        return Ok(());
    }
    let (extreme, next) = if at_min {
        (eig.eigenvalues[0], eig.eigenvalues[1])
    } else {
        (eig.eigenvalues[p - 1], eig.eigenvalues[p - 2])
    };
    let separation = (extreme - next).abs();
    let tol = SEPARATION_RTOL * extreme.abs().max(1.0);
    if separation <= tol {
        return Err(OedError::RepeatedExtremeEigenvalue { separation, tol });
    }
    Ok(())
}

fn check_value_preconditions(eig: &EigenDecomposition, kind: CriterionKind) -> Result<()> {
    match kind {
        CriterionKind::A | CriterionKind::ME => require_full_rank(eig),
        CriterionKind::D => {
            require_positive_det(eig)?;
            require_full_rank(eig)
        }
        CriterionKind::E | CriterionKind::PseudoA => Ok(()),
    }
}

fn check_derivative_preconditions(eig: &EigenDecomposition, kind: CriterionKind) -> Result<()> {
    check_value_preconditions(eig, kind)?;
    match kind {
        CriterionKind::E => require_simple(eig, true),
        CriterionKind::ME => {
            require_simple(eig, true)?;
            require_simple(eig, false)
        }
        _ => Ok(()),
    }
}

/// Criterion value in its reported sense.
pub fn eval_criterion(m: &SymMatrix, c: &Criterion) -> Result<f64> {
    value_from_eigen(m, &sym_eigen(m)?, c)
}

/// Criterion value from an existing decomposition of `m`.
///
/// The trace is summed from the diagonal so that it stays exactly linear in `m`.
pub fn value_from_eigen(m: &SymMatrix, eig: &EigenDecomposition, c: &Criterion) -> Result<f64> {
    check_value_preconditions(eig, c.kind)?;
    let l = &eig.eigenvalues;
    let value = match c.kind {
        CriterionKind::A => c.scale() * l.iter().map(|x| 1.0 / x).sum::<f64>(),
        CriterionKind::D => symlin::signed_log_det_from(eig).1,
        CriterionKind::E => eig.lambda_min(),
        CriterionKind::ME => (eig.lambda_max() / eig.lambda_min()).ln(),
        CriterionKind::PseudoA => m.trace(),
    };
    if !value.is_finite() {
        return Err(OedError::NonFinite("criterion value"));
    }
    Ok(value)
}

fn outer(v: &DVector<f64>) -> DMatrix<f64> {
    v * v.transpose()
}

fn symmetrize(g: DMatrix<f64>) -> DMatrix<f64> {
    (&g + g.transpose()) * 0.5
}

/// Full-space gradient `dPsi/dM` (symmetric).
pub fn grad_criterion(m: &SymMatrix, c: &Criterion) -> Result<DMatrix<f64>> {
    grad_from_eigen(&sym_eigen(m)?, c)
}

pub fn grad_from_eigen(eig: &EigenDecomposition, c: &Criterion) -> Result<DMatrix<f64>> {
    check_derivative_preconditions(eig, c.kind)?;
    let p = eig.dim();
    let g = match c.kind {
        CriterionKind::A => {
            let s = c.scale();
            eig.spectral_map(|l| -s / (l * l))
        }
        CriterionKind::D => eig.spectral_map(|l| 1.0 / l),
        CriterionKind::E => outer(&eig.vector(0)),
        CriterionKind::ME => {
            outer(&eig.vector(p - 1)) / eig.lambda_max() - outer(&eig.vector(0)) / eig.lambda_min()
        }
        CriterionKind::PseudoA => DMatrix::identity(p, p),
    };
    Ok(symmetrize(g))
}

/// Full-space Hessian as a `p^2 x p^2` matrix.
pub fn hess_criterion(m: &SymMatrix, c: &Criterion) -> Result<DMatrix<f64>> {
    hess_from_eigen(&sym_eigen(m)?, c)
}

/// Second derivative of eigenvalue `m` with respect to the general-matrix entries.
fn eigenvalue_hessian(eig: &EigenDecomposition, m: usize) -> DMatrix<f64> {
    let p = eig.dim();
    let vm = eig.eigenvectors.column(m);
    let mut h = DMatrix::zeros(p * p, p * p);
    for s in 0..p {
        if s == m {
            continue;
        }
        let w = 1.0 / (eig.eigenvalues[m] - eig.eigenvalues[s]);
        let vs = eig.eigenvectors.column(s);
        for i in 0..p {
            for j in 0..p {
                for k in 0..p {
                    for l in 0..p {
                        h[(i * p + j, k * p + l)] += w
                            * (vs[l] * vm[k] * vs[i] * vm[j] + vm[i] * vs[k] * vm[l] * vs[j]);
                    }
                }
            }
        }
    }
    h
}

fn kron_outer(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let p = a.nrows();
    DMatrix::from_fn(p * p, p * p, |r, c| a[(r / p, r % p)] * b[(c / p, c % p)])
}

pub fn hess_from_eigen(eig: &EigenDecomposition, c: &Criterion) -> Result<DMatrix<f64>> {
    check_derivative_preconditions(eig, c.kind)?;
    let p = eig.dim();
    let n = p * p;
    let h = match c.kind {
        CriterionKind::A => {
            let s = c.scale();
            let inv = eig.spectral_map(|l| 1.0 / l);
            let inv2 = eig.spectral_map(|l| 1.0 / (l * l));
            DMatrix::from_fn(n, n, |r, col| {
                let (i, j, k, l) = (r / p, r % p, col / p, col % p);
                s * (inv[(i, l)] * inv2[(k, j)] + inv2[(i, l)] * inv[(k, j)])
            })
        }
        CriterionKind::D => {
            let inv = eig.spectral_map(|l| 1.0 / l);
            DMatrix::from_fn(n, n, |r, col| {
                let (i, j, k, l) = (r / p, r % p, col / p, col % p);
                -inv[(i, l)] * inv[(k, j)]
            })
        }
        CriterionKind::E => eigenvalue_hessian(eig, 0),
        CriterionKind::ME => {
            let (lmin, lmax) = (eig.lambda_min(), eig.lambda_max());
            let gmin = outer(&eig.vector(0));
            let gmax = outer(&eig.vector(p - 1));
            eigenvalue_hessian(eig, p - 1) / lmax - kron_outer(&gmax, &gmax) / (lmax * lmax)
                + kron_outer(&gmin, &gmin) / (lmin * lmin)
                - eigenvalue_hessian(eig, 0) / lmin
        }
        CriterionKind::PseudoA => DMatrix::zeros(n, n),
    };
    if h.iter().any(|x| !x.is_finite()) {
        return Err(OedError::NonFinite("criterion Hessian"));
    }
    Ok(h)
}

fn expansions(i: usize, j: usize) -> Vec<(usize, usize)> {
    if i == j {
        vec![(i, i)]
    } else {
        vec![(i, j), (j, i)]
    }
}

/// Contract a full-space gradient onto upper-triangular coordinates.
pub fn contract_gradient(g: &DMatrix<f64>) -> Vec<f64> {
    let p = g.nrows();
    tri_pairs(p)
        .into_iter()
        .map(|(i, j)| expansions(i, j).iter().map(|&(a, b)| g[(a, b)]).sum())
        .collect()
}

/// Contract a full-space `p^2 x p^2` Hessian onto upper-triangular coordinates.
pub fn contract_hessian(h: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let pairs = tri_pairs(p);
    let t = tri_len(p);
    let mut out = DMatrix::zeros(t, t);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        for (c, &(k, l)) in pairs.iter().enumerate() {
            let mut acc = 0.0;
            for (a, b) in expansions(i, j) {
                for (cc, d) in expansions(k, l) {
                    acc += h[(a * p + b, cc * p + d)];
                }
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// Value, gradient and Hessian over the upper-triangular FIM entries, from one decomposition.
pub fn greybox_evaluate(m: &SymMatrix, c: &Criterion) -> Result<GreyBoxEval> {
    let eig = sym_eigen(m)?;
    let value = value_from_eigen(m, &eig, c)?;
    let g = grad_from_eigen(&eig, c)?;
    let h = hess_from_eigen(&eig, c)?;
    let hessian = contract_hessian(&h, m.dim());
    let hessian = (&hessian + hessian.transpose()) * 0.5;
    Ok(GreyBoxEval {
        value,
        gradient: contract_gradient(&g),
        hessian,
    })
}

/// Value of every criterion in its reported sense; failures are kept per entry.
pub fn evaluate_all(m: &SymMatrix) -> Result<Vec<(CriterionKind, Result<f64>)>> {
    let eig = sym_eigen(m)?;
    Ok(CriterionKind::ALL
        .iter()
        .map(|&k| (k, value_from_eigen(m, &eig, &Criterion::new(k))))
        .collect())
}
