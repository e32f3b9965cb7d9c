//! Design-space search: objective composition, multistart Nelder-Mead, 1-D scans
//! and covariance reporting.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::criteria::{
    contract_gradient, eval_criterion, evaluate_all, grad_criterion, Criterion, CriterionKind,
};
use crate::error::{OedError, Result};
use crate::experiment::{design_fim, FimOptions, LabeledExperiment, PriorInformation};
use crate::sampling;
use crate::symlin::{sym_eigen, tri_pairs, SymMatrix};

/// Objective value substituted when the FIM is singular.
pub const SINGULAR_PENALTY: f64 = 1e12;

/// Extra cost added to the internal objective, e.g. an operating limit.
pub trait DesignPenalty: Send + Sync {
    fn name(&self) -> &str;
    fn penalty(&self, design: &[f64]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultistartOptions {
    pub starts: usize,
    pub seed: u64,
    /// Simplex size tolerance in bound-normalized coordinates.
    pub simplex_tol: f64,
    /// Objective evaluations per start; `None` picks `400 * (N_d + 1)`.
    pub max_evals: Option<usize>,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0,
            simplex_tol: 1e-6,
            max_evals: None,
        }
    }
}

#[derive(Clone)]
pub struct DesignProblem {
    pub experiment: LabeledExperiment,
    pub criterion: Criterion,
    pub prior: PriorInformation,
    pub theta_hat: Vec<f64>,
    pub fim_options: FimOptions,
    pub multistart: MultistartOptions,
    pub penalties: Vec<Arc<dyn DesignPenalty>>,
}

impl fmt::Debug for DesignProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DesignProblem")
            .field("experiment", &self.experiment.name)
            .field("criterion", &self.criterion)
            .field("theta_hat", &self.theta_hat)
            .field("multistart", &self.multistart)
            .field(
                "penalties",
                &self.penalties.iter().map(|p| p.name().to_string()).collect::<Vec<_>>(),
            )
            .finish()
    }
}

impl DesignProblem {
    /// Problem at the experiment's nominal parameters. The A-criterion multiplier
    /// defaults to the largest prior eigenvalue (1 for a zero prior).
    pub fn new(
        experiment: LabeledExperiment,
        kind: CriterionKind,
        prior: PriorInformation,
        fim_options: FimOptions,
    ) -> Result<Self> {
        let p = experiment.n_params();
        if prior.dim() != p {
            return Err(OedError::DimensionMismatch {
                what: "prior dimension",
                expected: p,
                found: prior.dim(),
            });
        }
        let lmax = sym_eigen(&prior.fim)?.lambda_max();
        let a_scale = if lmax > 0.0 { lmax } else { 1.0 };
        Ok(Self {
            theta_hat: experiment.nominal_parameters.clone(),
            experiment,
            criterion: Criterion::with_a_scale(kind, a_scale),
            prior,
            fim_options,
            multistart: MultistartOptions::default(),
            penalties: Vec::new(),
        })
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.experiment.input_bounds
    }

    pub fn with_penalty(mut self, penalty: Arc<dyn DesignPenalty>) -> Self {
        self.penalties.push(penalty);
        self
    }

    pub fn fim(&self, design: &[f64]) -> Result<SymMatrix> {
        design_fim(
            &self.experiment,
            design,
            &self.theta_hat,
            &self.fim_options,
            &self.prior,
        )
    }
}

fn is_rank_failure(e: &OedError) -> bool {
    matches!(
        e,
        OedError::SingularFim { .. } | OedError::NonPositiveDeterminant { .. }
    )
}

/// Internal minimize-sense objective and the FIM behind it.
pub fn design_objective(problem: &DesignProblem, design: &[f64]) -> Result<(f64, SymMatrix)> {
    if !problem.experiment.in_bounds(design) {
        return Err(OedError::InvalidInput(format!(
            "design {design:?} outside bounds {:?}",
            problem.bounds()
        )));
    }
    let m = problem.fim(design)?;
    let mut value = match eval_criterion(&m, &problem.criterion) {
        Ok(v) => problem.criterion.to_minimize(v),
        Err(e) if is_rank_failure(&e) => {
            log::warn!("{e} at design {design:?}; using penalty {SINGULAR_PENALTY:e}");
            SINGULAR_PENALTY
        }
        Err(e) => return Err(e),
    };
    for p in &problem.penalties {
        value += p.penalty(design)?;
    }
    Ok((value, m))
}

/// One criterion's value at a design, in reported and log10 form.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionAudit {
    pub kind: CriterionKind,
    pub value: Option<f64>,
    pub log10: Option<f64>,
}

/// Log10 of the underlying metric: trace of the inverse, determinant,
/// smallest eigenvalue, condition number, trace.
pub fn log10_metric(kind: CriterionKind, value: f64) -> Option<f64> {
    let out = match kind {
        CriterionKind::D | CriterionKind::ME => value / std::f64::consts::LN_10,
        CriterionKind::A | CriterionKind::E | CriterionKind::PseudoA => value.log10(),
    };
    out.is_finite().then_some(out)
}

pub fn audit(m: &SymMatrix) -> Result<Vec<CriterionAudit>> {
    Ok(evaluate_all(m)?
        .into_iter()
        .map(|(kind, v)| {
            let value = v.ok();
            CriterionAudit {
                kind,
                value,
                log10: value.and_then(|x| log10_metric(kind, x)),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartLog {
    pub start: Vec<f64>,
    pub end: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub phi_hat: Vec<f64>,
    pub criterion: Criterion,
    /// Criterion on `fim_at_opt` in its reported sense.
    pub criterion_value: f64,
    /// Internal minimize objective including penalties.
    pub objective_value: f64,
    pub fim_at_opt: SymMatrix,
    pub audit: Vec<CriterionAudit>,
    pub starts: Vec<StartLog>,
}

struct Scaled<'a> {
    problem: &'a DesignProblem,
}

impl Scaled<'_> {
    fn to_design(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.problem.bounds())
            .map(|(u, &(lo, hi))| lo + u.clamp(0.0, 1.0) * (hi - lo))
            .collect()
    }

    fn to_unit(&self, d: &[f64]) -> Vec<f64> {
        d.iter()
            .zip(self.problem.bounds())
            .map(|(v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    fn value(&self, x: &[f64]) -> f64 {
        match design_objective(self.problem, &self.to_design(x)) {
            Ok((v, _)) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    }
}

/// Nelder-Mead on the unit cube; points outside are evaluated at their projection.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], tol: f64, max_evals: usize) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i] + 0.1 <= 1.0 { 0.1 } else { -0.1 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;
    let order = |s: &mut Vec<Vec<f64>>, fv: &mut Vec<f64>| {
        let mut idx: Vec<usize> = (0..fv.len()).collect();
        idx.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        *s = idx.iter().map(|&i| s[i].clone()).collect();
        *fv = idx.iter().map(|&i| fv[i]).collect();
    };
    loop {
        order(&mut simplex, &mut values);
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < tol || evals >= max_evals {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let x = along(-0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = along(0.5);
            let v = f(&x);
            (x, v)
        };
        evals += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for k in 1..=n {
            simplex[k] = simplex[k]
                .iter()
                .zip(&best)
                .map(|(v, b)| b + 0.5 * (v - b))
                .collect();
            values[k] = f(&simplex[k]);
            evals += 1;
        }
    }
    order(&mut simplex, &mut values);
    (simplex.swap_remove(0), values[0], evals)
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        == Some(Ordering::Less)
}

fn better(cand: (f64, &[f64]), best: Option<(f64, &[f64])>) -> bool {
    match best {
        None => true,
        Some((bv, bx)) => cand.0 < bv || (cand.0 == bv && lex_less(cand.1, bx)),
    }
}

/// Multistart bounded Nelder-Mead; one-dimensional problems also get a
/// grid-bracketed golden-section pass.
pub fn optimize_design(problem: &DesignProblem) -> Result<DesignResult> {
    let ms = &problem.multistart;
    let nd = problem.experiment.n_inputs();
    let scaled = Scaled { problem };
    let starts = sampling::latin_hypercube(ms.starts.max(1), problem.bounds(), &mut sampling::rng(ms.seed));
    let max_evals = ms.max_evals.unwrap_or(400 * (nd + 1));
    let f = |x: &[f64]| scaled.value(x);

    let logs: Vec<StartLog> = starts
        .par_iter()
        .map(|s| {
            let x0 = scaled.to_unit(s);
            if !f(&x0).is_finite() {
                return StartLog {
                    start: s.clone(),
                    end: None,
                    value: None,
                    evaluations: 1,
                };
            }
            let (x, v, evals) = nelder_mead(&f, &x0, ms.simplex_tol, max_evals);
            StartLog {
                start: s.clone(),
                end: Some(scaled.to_design(&x)),
                value: v.is_finite().then_some(v),
                evaluations: evals,
            }
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for log in &logs {
        if let (Some(v), Some(x)) = (log.value, &log.end) {
            if better((v, x), best.as_ref().map(|(bv, bx)| (*bv, bx.as_slice()))) {
                best = Some((v, x.clone()));
            }
        }
    }

    if nd == 1 {
        let (lo, hi) = problem.bounds()[0];
        let n = 200;
        let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        let vals: Vec<f64> = grid.par_iter().map(|&x| scaled.value(&[(x - lo) / (hi - lo)])).collect();
        let k = (0..vals.len())
            .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .expect("nonempty grid");
        if vals[k].is_finite() {
            let a = grid[k.saturating_sub(1)];
            let b = grid[(k + 1).min(n)];
            let g = |x: f64| scaled.value(&[(x - lo) / (hi - lo)]);
            let (x, v) = golden_section(&g, a, b, 1e-10 * (hi - lo));
            let (x, v) = if vals[k] < v { (grid[k], vals[k]) } else { (x, v) };
            if better((v, &[x]), best.as_ref().map(|(bv, bx)| (*bv, bx.as_slice()))) {
                best = Some((v, vec![x]));
            }
        }
    }

    let (_, phi_hat) = best.ok_or(OedError::AllStartsFailed {
        starts: logs.len(),
    })?;
    let (objective_value, fim_at_opt) = design_objective(problem, &phi_hat)?;
    let criterion_value = eval_criterion(&fim_at_opt, &problem.criterion)?;
    Ok(DesignResult {
        phi_hat,
        criterion: problem.criterion,
        criterion_value,
        objective_value,
        audit: audit(&fim_at_opt)?,
        fim_at_opt,
        starts: logs,
    })
}

/// One row of a 1-D design scan; failed evaluations are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub phi: f64,
    pub values: Vec<Option<f64>>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub trace: Option<f64>,
}

/// Evaluate `kinds` (reported sense, unscaled) at every grid point.
pub fn scan_design_1d(
    problem: &DesignProblem,
    kinds: &[CriterionKind],
    grid: &[f64],
) -> Result<Vec<ScanRow>> {
    if problem.experiment.n_inputs() != 1 {
        return Err(OedError::InvalidInput(format!(
            "a 1-D scan needs a single design input; model '{}' has {}",
            problem.experiment.name,
            problem.experiment.n_inputs()
        )));
    }
    Ok(grid
        .par_iter()
        .map(|&phi| {
            let m = problem.fim(&[phi]).and_then(|m| sym_eigen(&m).map(|e| (m, e)));
            match m {
                Ok((m, eig)) => ScanRow {
                    phi,
                    values: kinds
                        .iter()
                        .map(|&k| crate::criteria::value_from_eigen(&m, &eig, &Criterion::new(k)).ok())
                        .collect(),
                    lambda_min: Some(eig.lambda_min()),
                    lambda_max: Some(eig.lambda_max()),
                    trace: Some(m.trace()),
                },
                Err(e) => {
                    log::warn!("scan point {phi}: {e}");
                    ScanRow {
                        phi,
                        values: vec![None; kinds.len()],
                        lambda_min: None,
                        lambda_max: None,
                        trace: None,
                    }
                }
            }
        })
        .collect())
}

/// Inclusive grid `lo, lo + step, ...` snapped to avoid drift.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(OedError::InvalidInput(format!(
            "invalid grid {lo}:{hi}:{step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// Best row of a scan column in the criterion's sense.
pub fn scan_argopt(rows: &[ScanRow], column: usize, kind: CriterionKind) -> Option<f64> {
    let sign = match kind.sense() {
        crate::criteria::Sense::Minimize => 1.0,
        crate::criteria::Sense::Maximize => -1.0,
    };
    rows.iter()
        .filter_map(|r| r.values[column].map(|v| (sign * v, r.phi)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, phi)| phi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    pub labels: Vec<String>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[s]` pairs with `eigenvalues[s]`.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Labels whose component magnitude is at least 0.5, per vector.
    pub dominant: Vec<Vec<String>>,
}

pub const DOMINANT_COMPONENT: f64 = 0.5;

pub fn eigenanalysis(v: &SymMatrix, labels: &[String]) -> Result<EigenReport> {
    if labels.len() != v.dim() {
        return Err(OedError::DimensionMismatch {
            what: "eigenanalysis labels",
            expected: v.dim(),
            found: labels.len(),
        });
    }
    let eig = sym_eigen(v)?;
    let p = v.dim();
    let order: Vec<usize> = (0..p).rev().collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&s| eig.eigenvectors.column(s).iter().copied().collect())
        .collect();
    let dominant = eigenvectors
        .iter()
        .map(|vec: &Vec<f64>| {
            vec.iter()
                .zip(labels)
                .filter(|(c, _)| c.abs() >= DOMINANT_COMPONENT)
                .map(|(_, l)| l.clone())
                .collect()
        })
        .collect();
    Ok(EigenReport {
        labels: labels.to_vec(),
        eigenvalues: order.iter().map(|&s| eig.eigenvalues[s]).collect(),
        eigenvectors,
        dominant,
    })
}

/// Confidence ellipse of parameters `(i, j)` centred at the estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipse {
    pub i: usize,
    pub j: usize,
    pub level: f64,
    pub chi2: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Angle of the major axis from the `i` axis, radians in `(-pi/2, pi/2]`.
    pub angle: f64,
}

impl Ellipse {
    /// Boundary offsets from the centre at `n` equally spaced angles.
    pub fn boundary(&self, n: usize) -> Vec<(f64, f64)> {
        let (s, c) = self.angle.sin_cos();
        (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let (x, y) = (self.semi_major * t.cos(), self.semi_minor * t.sin());
                (c * x - s * y, s * x + c * y)
            })
            .collect()
    }
}

/// Chi-square quantile with two degrees of freedom.
pub fn chi2_2dof_quantile(level: f64) -> f64 {
    -2.0 * (1.0 - level).ln()
}

pub const DEFAULT_ELLIPSE_LEVEL: f64 = 0.95;

pub fn confidence_ellipse(v: &SymMatrix, i: usize, j: usize, level: f64) -> Result<Ellipse> {
    let p = v.dim();
    if i == j || i >= p || j >= p {
        return Err(OedError::IndexOutOfRange { i, j, p });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(OedError::InvalidInput(format!("level must lie in (0, 1), got {level}")));
    }
    let sub = SymMatrix::new(2, vec![v.get(i, i), v.get(i, j), v.get(j, j)])?;
    let eig = sym_eigen(&sub)?;
    if eig.lambda_min() <= 0.0 {
        return Err(OedError::NonPositiveSubmatrix);
    }
    let chi2 = chi2_2dof_quantile(level);
    let major = eig.vector(1);
    let mut angle = major[1].atan2(major[0]);
    if angle <= -std::f64::consts::FRAC_PI_2 {
        angle += std::f64::consts::PI;
    } else if angle > std::f64::consts::FRAC_PI_2 {
        angle -= std::f64::consts::PI;
    }
    Ok(Ellipse {
        i,
        j,
        level,
        chi2,
        semi_major: (eig.lambda_max() * chi2).sqrt(),
        semi_minor: (eig.lambda_min() * chi2).sqrt(),
        angle,
    })
}

/// Chain-rule gradient of the reported criterion with respect to the design,
/// using central differences of the FIM with step `rel_step * (hi - lo)`.
pub fn design_gradient(problem: &DesignProblem, design: &[f64], rel_step: f64) -> Result<Vec<f64>> {
    let m = problem.fim(design)?;
    let jstar = contract_gradient(&grad_criterion(&m, &problem.criterion)?);
    let pairs = tri_pairs(m.dim());
    let mut out = Vec::with_capacity(design.len());
    for (k, &(lo, hi)) in problem.bounds().iter().enumerate() {
        let h = rel_step * (hi - lo);
        let (mut up, mut down) = (design.to_vec(), design.to_vec());
        up[k] = (design[k] + h).min(hi);
        down[k] = (design[k] - h).max(lo);
        let width = up[k] - down[k];
        let (mu, md) = (problem.fim(&up)?, problem.fim(&down)?);
        let d: f64 = pairs
            .iter()
            .enumerate()
            .map(|(t, &(a, b))| jstar[t] * (mu.get(a, b) - md.get(a, b)) / width)
            .sum();
        out.push(d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{LabeledExperiment, PriorInformation};
    use approx::assert_relative_eq;

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] - 0.7).powi(2);
        let (x, v, _) = nelder_mead(&f, &[0.9, 0.1], 1e-9, 10_000);
        assert!((x[0] - 0.3).abs() < 1e-6 && (x[1] - 0.7).abs() < 1e-6);
        assert!(v < 1e-12);
    }

    #[test]
    fn golden_section_on_parabola() {
        let (x, _) = golden_section(&|x| (x - 1.234).powi(2), 0.0, 3.0, 1e-12);
        assert!((x - 1.234).abs() < 1e-6);
    }

    #[test]
    fn grid_counts() {
        assert_eq!(grid(1.0, 10.0, 0.01).unwrap().len(), 901);
        assert!(grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn ellipse_examples() {
        let e = confidence_ellipse(&SymMatrix::identity(2), 0, 1, 0.95).unwrap();
        assert_relative_eq!(e.semi_major, 2.447746830680816, max_relative = 1e-12);
        assert_relative_eq!(e.semi_minor, e.semi_major, max_relative = 1e-15);
        let e = confidence_ellipse(&SymMatrix::from_diagonal(&[4.0, 1.0]), 0, 1, 0.95).unwrap();
        assert_eq!(e.semi_major / e.semi_minor, 2.0);
        assert_eq!(e.angle, 0.0);
        assert!(matches!(
            confidence_ellipse(&SymMatrix::from_diagonal(&[1.0, -1.0]), 0, 1, 0.9),
            Err(OedError::NonPositiveSubmatrix)
        ));
    }

    #[test]
    fn eigenanalysis_orders_descending() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let r = eigenanalysis(&SymMatrix::from_diagonal(&[1.0, 9.0]), &labels).unwrap();
        assert_eq!(r.eigenvalues, vec![9.0, 1.0]);
        assert_eq!(r.dominant, vec![vec!["b".to_string()], vec!["a".to_string()]]);
    }

    fn constant_model() -> LabeledExperiment {
        LabeledExperiment::new(
            "constant",
            Arc::new(|_: &[f64], _: &[f64]| Ok(vec![1.0])),
            &[("x", (0.0, 1.0))],
            &[("y", 1.0)],
            &[("a", 1.0), ("b", 2.0)],
        )
        .unwrap()
    }

    #[test]
    fn zero_information_returns_prior_value() {
        let prior = PriorInformation::from_fim(SymMatrix::new(2, vec![3.0, 1.0, 2.0]).unwrap()).unwrap();
        let pb = DesignProblem::new(constant_model(), CriterionKind::D, prior.clone(), FimOptions::default()).unwrap();
        let (v, m) = design_objective(&pb, &[0.5]).unwrap();
        assert_eq!(m, prior.fim);
        assert_eq!(v, -eval_criterion(&prior.fim, &CriterionKind::D.into()).unwrap());
        let rows = scan_design_1d(&pb, &CriterionKind::ALL, &[0.0, 0.5, 1.0]).unwrap();
        assert!(rows.windows(2).all(|w| w[0].values == w[1].values));
    }

    #[test]
    fn singular_fim_maps_to_penalty() {
        let pb = DesignProblem::new(constant_model(), CriterionKind::A, PriorInformation::zero(2), FimOptions::default()).unwrap();
        assert_eq!(design_objective(&pb, &[0.5]).unwrap().0, SINGULAR_PENALTY);
        assert!(design_objective(&pb, &[1.5]).is_err());
    }
}
