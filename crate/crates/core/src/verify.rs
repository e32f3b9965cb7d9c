//! Finite-difference verification of the analytic criterion derivatives.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::criteria::{
    eval_criterion, grad_criterion, greybox_evaluate, hess_criterion, Criterion, CriterionKind,
};
use crate::error::{OedError, Result};
use crate::experiment::FdScheme;
use crate::sampling;
use crate::symlin::{tri_pairs, SymMatrix};

/// Smallest relative error reported (log10 floor of -16).
pub const ERROR_FLOOR: f64 = 1e-16;
const MAX_REDRAWS: u64 = 1000;

/// `R R^T + 0.1 I` with `R` uniform on `[-1, 1]`, filled row-major from a SplitMix64 stream.
pub fn random_spd(p: usize, seed: u64) -> SymMatrix {
    let mut rng = sampling::rng(seed);
    let r = DMatrix::from_row_iterator(p, p, (0..p * p).map(|_| sampling::uniform_pm1(&mut rng)));
    let a = &r * r.transpose() + DMatrix::identity(p, p) * 0.1;
    SymMatrix::from_full(&a).expect("square")
}

/// Seed of sample `sample` for size `p`, redraw `attempt`.
pub fn sample_seed(base: u64, p: usize, sample: usize, attempt: u64) -> u64 {
    base.wrapping_add(10_000 * p as u64)
        .wrapping_add(sample as u64)
        .wrapping_add(1_000_000 * attempt)
}

/// `log10(|fd - an| / max(|an|, |fd|))`, floored at -16.
pub fn log10_rel_error(fd: f64, an: f64) -> f64 {
    let denom = an.abs().max(fd.abs());
    let rel = if denom == 0.0 { 0.0 } else { (fd - an).abs() / denom };
    rel.max(ERROR_FLOOR).log10()
}

fn pair_shift(m: &SymMatrix, i: usize, j: usize, delta: f64) -> SymMatrix {
    let mut out = m.clone();
    out.set(i, j, m.get(i, j) + delta);
    out
}

/// Number of full-matrix entries moved by a pair perturbation.
fn multiplicity(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        2.0
    }
}

/// Full-space gradient by perturbing `M_ij` and `M_ji` together and dividing by the total change.
pub fn fd_gradient(
    value: &dyn Fn(&SymMatrix) -> Result<f64>,
    m: &SymMatrix,
    h: f64,
    scheme: FdScheme,
) -> Result<DMatrix<f64>> {
    let p = m.dim();
    let mut g = DMatrix::zeros(p, p);
    let base = match scheme {
        FdScheme::Forward => Some(value(m)?),
        FdScheme::Central => None,
    };
    for (i, j) in tri_pairs(p) {
        let c = multiplicity(i, j);
        let up = value(&pair_shift(m, i, j, h))?;
        let d = match base {
            Some(f0) => (up - f0) / (c * h),
            None => (up - value(&pair_shift(m, i, j, -h))?) / (2.0 * c * h),
        };
        g[(i, j)] = d;
        g[(j, i)] = d;
    }
    Ok(g)
}

/// Full-space Hessian by central differences of the analytic gradient along pair perturbations.
/// Column `(k, l)` estimates `(H[.., (k,l)] + H[.., (l,k)]) / 2`.
pub fn fd_hessian_from_gradient(
    grad: &dyn Fn(&SymMatrix) -> Result<DMatrix<f64>>,
    m: &SymMatrix,
    h: f64,
) -> Result<DMatrix<f64>> {
    let p = m.dim();
    let mut out = DMatrix::zeros(p * p, p * p);
    for (k, l) in tri_pairs(p) {
        let c = multiplicity(k, l);
        let d = (grad(&pair_shift(m, k, l, h))? - grad(&pair_shift(m, k, l, -h))?) / (2.0 * c * h);
        for i in 0..p {
            for j in 0..p {
                out[(i * p + j, k * p + l)] = d[(i, j)];
                out[(i * p + j, l * p + k)] = d[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Full-space Hessian by four-point second differences of the value.
/// Element `((i,j),(k,l))` estimates the average over both symmetric expansions.
pub fn fd_hessian_from_value(
    value: &dyn Fn(&SymMatrix) -> Result<f64>,
    m: &SymMatrix,
    h: f64,
) -> Result<DMatrix<f64>> {
    let p = m.dim();
    let pairs = tri_pairs(p);
    let mut out = DMatrix::zeros(p * p, p * p);
    for &(i, j) in &pairs {
        for &(k, l) in &pairs {
            let shift = |a: f64, b: f64| pair_shift(&pair_shift(m, i, j, a), k, l, b);
            let d = (value(&shift(h, h))? - value(&shift(h, -h))? - value(&shift(-h, h))?
                + value(&shift(-h, -h))?)
                / (4.0 * h * h * multiplicity(i, j) * multiplicity(k, l));
            for (a, b) in [(i, j), (j, i)] {
                for (c, e) in [(k, l), (l, k)] {
                    out[(a * p + b, c * p + e)] = d;
                }
            }
        }
    }
    Ok(out)
}

/// Average over the `(k, l)` transposition, the quantity a gradient-based pair FD sees.
pub fn symmetrize_last_pair(h: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p * p, p * p, |r, c| {
        let (k, l) = (c / p, c % p);
        0.5 * (h[(r, c)] + h[(r, l * p + k)])
    })
}

/// Average over transpositions of both index pairs, the quantity a value-based pair FD sees.
pub fn symmetrize_both_pairs(h: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let once = symmetrize_last_pair(h, p);
    DMatrix::from_fn(p * p, p * p, |r, c| {
        let (i, j) = (r / p, r % p);
        0.5 * (once[(r, c)] + once[(j * p + i, c)])
    })
}

pub fn elementwise_log10_errors(fd: &DMatrix<f64>, analytic: &DMatrix<f64>) -> Vec<f64> {
    fd.iter().zip(analytic.iter()).map(|(f, a)| log10_rel_error(*f, *a)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondOrderScheme {
    /// Central differences of the analytic gradient.
    GradientCentral,
    /// Four-point central second differences of the value.
    ValueCentral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub check: &'static str,
    pub criterion: CriterionKind,
    pub p: usize,
    pub samples: usize,
    pub redrawn: usize,
    pub step: f64,
    pub scheme: &'static str,
    pub mean_log10: f64,
    pub std_err: f64,
    pub max_log10: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub rows: Vec<ReportRow>,
}

impl VerificationReport {
    pub fn row(&self, check: &str, kind: CriterionKind, p: usize) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.check == check && r.criterion == kind && r.p == p)
    }
}

fn summarize(sample_means: &[f64], all_max: f64) -> (f64, f64, f64) {
    let n = sample_means.len() as f64;
    let mean = sample_means.iter().sum::<f64>() / n;
    let var = if sample_means.len() > 1 {
        sample_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt(), all_max)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn vmax(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Draw a sample whose derivatives exist; returns the errors and the number of redraws.
fn with_redraw<T>(
    seed: u64,
    p: usize,
    sample: usize,
    f: impl Fn(&SymMatrix) -> Result<T>,
) -> Result<(T, usize)> {
    for attempt in 0..MAX_REDRAWS {
        let m = random_spd(p, sample_seed(seed, p, sample, attempt));
        match f(&m) {
            Ok(v) => return Ok((v, attempt as usize)),
            Err(OedError::RepeatedExtremeEigenvalue { .. }) => {
                log::info!("p={p} sample {sample}: repeated extreme eigenvalue, redrawing");
            }
            Err(e) => return Err(e),
        }
    }
    Err(OedError::InvalidInput(format!(
        "no admissible sample after {MAX_REDRAWS} draws"
    )))
}

fn scheme_name(s: FdScheme) -> &'static str {
    match s {
        FdScheme::Central => "central",
        FdScheme::Forward => "forward",
    }
}

#[allow(clippy::too_many_arguments)]
fn collect_rows<F>(
    check: &'static str,
    kinds: &[CriterionKind],
    sizes: &[usize],
    samples: usize,
    step: f64,
    scheme: &'static str,
    seed: u64,
    errors: F,
) -> Result<VerificationReport>
where
    F: Fn(&SymMatrix, &Criterion) -> Result<Vec<f64>> + Sync,
{
    if samples == 0 || !(step > 0.0) {
        return Err(OedError::InvalidInput("samples and step must be positive".into()));
    }
    let mut rows = Vec::new();
    for &kind in kinds {
        let c = Criterion::new(kind);
        for &p in sizes {
            let per: Vec<Result<(Vec<f64>, usize)>> = (0..samples)
                .into_par_iter()
                .map(|s| with_redraw(seed, p, s, |m| errors(m, &c)))
                .collect();
            let per = per.into_iter().collect::<Result<Vec<_>>>()?;
            let means: Vec<f64> = per.iter().map(|(e, _)| mean(e)).collect();
            let worst = per.iter().map(|(e, _)| vmax(e)).fold(f64::NEG_INFINITY, f64::max);
            let (mean_log10, std_err, max_log10) = summarize(&means, worst);
            rows.push(ReportRow {
                check,
                criterion: kind,
                p,
                samples,
                redrawn: per.iter().map(|(_, r)| r).sum(),
                step,
                scheme,
                mean_log10,
                std_err,
                max_log10,
            });
        }
    }
    Ok(VerificationReport { rows })
}

/// Analytic full-space gradients against pair-perturbation differences of the value.
pub fn check_first_derivatives(
    kinds: &[CriterionKind],
    sizes: &[usize],
    samples: usize,
    h: f64,
    scheme: FdScheme,
    seed: u64,
) -> Result<VerificationReport> {
    collect_rows("gradient", kinds, sizes, samples, h, scheme_name(scheme), seed, |m, c| {
        let an = grad_criterion(m, c)?;
        let fd = fd_gradient(&|x| eval_criterion(x, c), m, h, scheme)?;
        Ok(elementwise_log10_errors(&fd, &an))
    })
}

/// Analytic full-space Hessians against differences of the analytic gradient
/// (or of the value), every tensor element compared.
pub fn check_second_derivatives(
    kinds: &[CriterionKind],
    sizes: &[usize],
    samples: usize,
    h: f64,
    scheme: SecondOrderScheme,
    seed: u64,
) -> Result<VerificationReport> {
    let name = match scheme {
        SecondOrderScheme::GradientCentral => "central-gradient",
        SecondOrderScheme::ValueCentral => "central-value",
    };
    collect_rows("hessian", kinds, sizes, samples, h, name, seed, |m, c| {
        let p = m.dim();
        let an = hess_criterion(m, c)?;
        let (fd, target) = match scheme {
            SecondOrderScheme::GradientCentral => (
                fd_hessian_from_gradient(&|x| grad_criterion(x, c), m, h)?,
                symmetrize_last_pair(&an, p),
            ),
            SecondOrderScheme::ValueCentral => (
                fd_hessian_from_value(&|x| eval_criterion(x, c), m, h)?,
                symmetrize_both_pairs(&an, p),
            ),
        };
        Ok(elementwise_log10_errors(&fd, &target))
    })
}

fn tri_shift(m: &SymMatrix, t: usize, delta: f64) -> SymMatrix {
    let (i, j) = crate::symlin::tri_pair(t, m.dim()).expect("valid tri index");
    pair_shift(m, i, j, delta)
}

/// Grey-box gradient against central differences of the value over tri entries.
pub fn check_greybox_gradient(
    kinds: &[CriterionKind],
    sizes: &[usize],
    samples: usize,
    h: f64,
    seed: u64,
) -> Result<VerificationReport> {
    collect_rows("greybox-gradient", kinds, sizes, samples, h, "central", seed, |m, c| {
        let gb = greybox_evaluate(m, c)?;
        (0..gb.gradient.len())
            .map(|t| {
                let fd = (eval_criterion(&tri_shift(m, t, h), c)?
                    - eval_criterion(&tri_shift(m, t, -h), c)?)
                    / (2.0 * h);
                Ok(log10_rel_error(fd, gb.gradient[t]))
            })
            .collect()
    })
}

/// Grey-box Hessian against central differences of the grey-box gradient over tri entries.
pub fn check_greybox_hessian(
    kinds: &[CriterionKind],
    sizes: &[usize],
    samples: usize,
    h: f64,
    seed: u64,
) -> Result<VerificationReport> {
    collect_rows("greybox-hessian", kinds, sizes, samples, h, "central", seed, |m, c| {
        let gb = greybox_evaluate(m, c)?;
        let n = gb.gradient.len();
        let mut errs = Vec::with_capacity(n * n);
        for u in 0..n {
            let up = greybox_evaluate(&tri_shift(m, u, h), c)?.gradient;
            let down = greybox_evaluate(&tri_shift(m, u, -h), c)?.gradient;
            for t in 0..n {
                let fd = (up[t] - down[t]) / (2.0 * h);
                errs.push(log10_rel_error(fd, gb.hessian[(t, u)]));
            }
        }
        Ok(errs)
    })
}
