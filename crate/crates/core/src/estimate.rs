//! Weighted least-squares parameter estimation.
//!
//! The objective carries a factor one half, `wsse = 1/2 sum (y - f)^2 / sigma^2`,
//! so that the Gauss-Newton curvature `Q^T S^-1 Q` is the FIM and its inverse is
//! the parameter covariance without an extra factor of two.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{OedError, Result};
use crate::experiment::{
    assemble_fim, covariance_from_fim, sensitivity_matrix, FdScheme, FimOptions, LabeledExperiment,
    ParameterScaling, PriorInformation,
};
use crate::sampling;
use crate::symlin::SymMatrix;

/// One experiment: the design that was run and what was measured.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub design: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
}

impl Dataset {
    /// Validate records against the experiment's input and output counts.
    pub fn new(exp: &LabeledExperiment, records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(OedError::InvalidInput("dataset has no records".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if r.design.len() != exp.n_inputs() {
                return Err(OedError::InvalidInput(format!(
                    "record {i}: expected {} design values, found {}",
                    exp.n_inputs(),
                    r.design.len()
                )));
            }
            if r.y.len() != exp.n_outputs() {
                return Err(OedError::InvalidInput(format!(
                    "record {i}: expected {} measurements, found {}",
                    exp.n_outputs(),
                    r.y.len()
                )));
            }
            if r.design.iter().chain(&r.y).any(|v| !v.is_finite()) {
                return Err(OedError::InvalidInput(format!("record {i} has non-finite values")));
            }
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationOptions {
    /// Relative step of the central-difference residual Jacobian.
    pub rel_step: f64,
    pub tol: f64,
    pub max_iterations: usize,
    /// Coordinates of the reported FIM and covariance.
    pub scaling: ParameterScaling,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self {
            rel_step: 1e-6,
            tol: 1e-9,
            max_iterations: 500,
            scaling: ParameterScaling::Absolute,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub theta_hat: Vec<f64>,
    pub wsse: f64,
    pub covariance: SymMatrix,
    pub fim: SymMatrix,
    pub converged: bool,
    pub iterations: usize,
    pub scaling: ParameterScaling,
}

fn residuals(exp: &LabeledExperiment, data: &Dataset, theta: &[f64]) -> Result<Vec<f64>> {
    let mut r = Vec::with_capacity(data.len() * exp.n_outputs());
    for rec in &data.records {
        let y = exp.simulate(&rec.design, theta)?;
        for ((obs, pred), s) in rec.y.iter().zip(&y).zip(&exp.output_sigmas) {
            r.push((obs - pred) / s);
        }
    }
    Ok(r)
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Weighted sum of squared errors with the one-half factor.
pub fn wsse(exp: &LabeledExperiment, data: &Dataset, theta: &[f64]) -> Result<f64> {
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(OedError::NonFinite("parameters"));
    }
    Ok(half_sq(&residuals(exp, data, theta)?))
}

/// FIM of all records at `theta`, summed through [`assemble_fim`].
pub fn dataset_fim(
    exp: &LabeledExperiment,
    data: &Dataset,
    theta: &[f64],
    opts: &FimOptions,
) -> Result<SymMatrix> {
    let mut m = SymMatrix::zeros(exp.n_params());
    let zero = PriorInformation::zero(exp.n_params());
    for rec in &data.records {
        let q = crate::experiment::sensitivities(exp, &rec.design, theta, opts)?;
        m = m.add(&assemble_fim(&q, &exp.sigma(), &zero)?)?;
    }
    Ok(m)
}

fn residual_jacobian(
    exp: &LabeledExperiment,
    data: &Dataset,
    theta: &[f64],
    rel_step: f64,
) -> Result<DMatrix<f64>> {
    let n_out = exp.n_outputs();
    let mut jac = DMatrix::zeros(data.len() * n_out, exp.n_params());
    for (i, rec) in data.records.iter().enumerate() {
        let s = sensitivity_matrix(exp, &rec.design, theta, FdScheme::Central, rel_step)?;
        for r in 0..n_out {
            for j in 0..exp.n_params() {
                jac[(i * n_out + r, j)] = -s.q[(r, j)] / exp.output_sigmas[r];
            }
        }
    }
    Ok(jac)
}

fn check_bounds(theta: &[f64], bounds: &[(f64, f64)]) -> Result<()> {
    if theta.len() != bounds.len() {
        return Err(OedError::DimensionMismatch {
            what: "parameter bounds",
            expected: theta.len(),
            found: bounds.len(),
        });
    }
    for (j, (&t, &(lo, hi))) in theta.iter().zip(bounds).enumerate() {
        if !(lo <= hi) {
            return Err(OedError::InvalidInput(format!("parameter {j} bounds not ordered")));
        }
        if !(t >= lo && t <= hi) {
            return Err(OedError::InvalidInput(format!(
                "initial parameter {j} = {t} outside [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

fn solve_damped(a: &DMatrix<f64>, g: &DVector<f64>, mu: f64) -> DVector<f64> {
    let p = a.nrows();
    let dmax = (0..p).map(|j| a[(j, j)]).fold(0.0, f64::max);
    let mut lhs = a.clone();
    for j in 0..p {
        lhs[(j, j)] += mu * a[(j, j)].max(1e-12 * dmax).max(f64::MIN_POSITIVE);
    }
    match lhs.clone().cholesky() {
        Some(c) => -c.solve(g),
        None => {
            let sym = SymMatrix::from_full(&lhs).expect("square");
            let inv = crate::symlin::pseudo_inverse(&sym, crate::symlin::default_rtol(p))
                .map(|m| m.to_full())
                .unwrap_or_else(|_| DMatrix::zeros(p, p));
            -(inv * g)
        }
    }
}

/// Levenberg-Marquardt from `theta0` with box projection.
pub fn estimate_parameters(
    exp: &LabeledExperiment,
    data: &Dataset,
    theta0: &[f64],
    bounds: &[(f64, f64)],
    opts: &EstimationOptions,
) -> Result<EstimationResult> {
    check_bounds(theta0, bounds)?;
    let scale = |t: &[f64], j: usize| t[j].abs().max(crate::experiment::ABS_FLOOR);
    let mut theta = theta0.to_vec();
    let mut r = residuals(exp, data, &theta)?;
    let mut cost = half_sq(&r);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        let jac = residual_jacobian(exp, data, &theta, opts.rel_step)?;
        let rv = DVector::from_column_slice(&r);
        let g = jac.transpose() * &rv;
        let a = jac.transpose() * &jac;
        let gnorm = (0..theta.len())
            .map(|j| (g[j] * scale(&theta, j)).abs())
            .fold(0.0, f64::max);
        if gnorm < opts.tol {
            converged = true;
            break;
        }
        loop {
            let delta = solve_damped(&a, &g, mu);
            let trial: Vec<f64> = theta
                .iter()
                .zip(delta.iter())
                .zip(bounds)
                .map(|((t, d), &(lo, hi))| (t + d).clamp(lo, hi))
                .collect();
            let step = (0..theta.len())
                .map(|j| (trial[j] - theta[j]).abs() / scale(&theta, j))
                .fold(0.0, f64::max);
            if !step.is_finite() {
                mu *= 10.0;
                continue;
            }
            let accepted = match residuals(exp, data, &trial) {
                Ok(rt) => {
                    let ct = half_sq(&rt);
                    if ct < cost {
                        theta = trial;
                        r = rt;
                        cost = ct;
                        true
                    } else {
                        false
                    }
                }
                Err(e) if e.is_validation() => return Err(e),
                Err(_) => false,
            };
            if accepted {
                mu = (mu / 3.0).max(1e-12);
                if step < opts.tol {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            if step < opts.tol {
                converged = true;
                break 'outer;
            }
            mu *= 4.0;
            if mu > 1e20 {
                break 'outer;
            }
        }
    }
    if !converged {
        log::warn!(
            "{}",
            OedError::NotConverged {
                iterations
            }
        );
    }
    let fim_opts = FimOptions {
        scheme: FdScheme::Central,
        rel_step: opts.rel_step,
        scaling: opts.scaling,
    };
    let fim = dataset_fim(exp, data, &theta, &fim_opts)?;
    let covariance = covariance_from_fim(&fim)?.matrix;
    Ok(EstimationResult {
        theta_hat: theta,
        wsse: cost,
        covariance,
        fim,
        converged,
        iterations,
        scaling: opts.scaling,
    })
}

/// Run from `theta0` plus `starts` seeded Latin-hypercube points; keep the lowest WSSE.
pub fn estimate_multistart(
    exp: &LabeledExperiment,
    data: &Dataset,
    theta0: &[f64],
    bounds: &[(f64, f64)],
    opts: &EstimationOptions,
    starts: usize,
    seed: u64,
) -> Result<EstimationResult> {
    check_bounds(theta0, bounds)?;
    let mut points = vec![theta0.to_vec()];
    points.extend(sampling::latin_hypercube(starts, bounds, &mut sampling::rng(seed)));
    let results: Vec<Result<EstimationResult>> = points
        .par_iter()
        .map(|p| estimate_parameters(exp, data, p, bounds, opts))
        .collect();
    let mut best: Option<EstimationResult> = None;
    let mut first_err = None;
    for res in results {
        match res {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        r.wsse < b.wsse
                            || (r.wsse == b.wsse
                                && r.theta_hat
                                    .iter()
                                    .zip(&b.theta_hat)
                                    .map(|(x, y)| x.total_cmp(y))
                                    .find(|o| o.is_ne())
                                    == Some(std::cmp::Ordering::Less))
                    }
                };
                if better {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("at least one start"))
}
