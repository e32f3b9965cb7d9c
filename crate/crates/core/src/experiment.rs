//! Labeled experiments and Fisher information assembly.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{OedError, Result};
use crate::symlin::{default_rtol, sym_eigen, SymMatrix};

/// Smallest perturbation base used when a parameter is (near) zero.
pub const ABS_FLOOR: f64 = 1e-8;
/// Relative step for design-space FIM sweeps.
pub const DESIGN_REL_STEP: f64 = 1e-3;
/// Relative step for verification-grade sensitivities.
pub const VERIFY_REL_STEP: f64 = 1e-5;

/// A deterministic model `y = f(design, theta)`.
pub trait Simulator: Send + Sync {
    fn simulate(&self, design: &[f64], theta: &[f64]) -> Result<Vec<f64>>;
}

impl<F> Simulator for F
where
    F: Fn(&[f64], &[f64]) -> Result<Vec<f64>> + Send + Sync,
{
    fn simulate(&self, design: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        self(design, theta)
    }
}

/// A simulator tagged with its design inputs, measured outputs and unknown parameters.
#[derive(Clone)]
pub struct LabeledExperiment {
    pub name: String,
    simulator: Arc<dyn Simulator>,
    pub input_names: Vec<String>,
    pub input_bounds: Vec<(f64, f64)>,
    pub output_names: Vec<String>,
    pub output_sigmas: Vec<f64>,
    pub parameter_names: Vec<String>,
    pub nominal_parameters: Vec<f64>,
}

impl fmt::Debug for LabeledExperiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LabeledExperiment")
            .field("name", &self.name)
            .field("input_names", &self.input_names)
            .field("input_bounds", &self.input_bounds)
            .field("output_names", &self.output_names)
            .field("output_sigmas", &self.output_sigmas)
            .field("parameter_names", &self.parameter_names)
            .field("nominal_parameters", &self.nominal_parameters)
            .finish()
    }
}

fn names(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl LabeledExperiment {
    pub fn new(
        name: &str,
        simulator: Arc<dyn Simulator>,
        inputs: &[(&str, (f64, f64))],
        outputs: &[(&str, f64)],
        parameters: &[(&str, f64)],
    ) -> Result<Self> {
        let exp = Self {
            name: name.to_string(),
            simulator,
            input_names: names(&inputs.iter().map(|x| x.0).collect::<Vec<_>>()),
            input_bounds: inputs.iter().map(|x| x.1).collect(),
            output_names: names(&outputs.iter().map(|x| x.0).collect::<Vec<_>>()),
            output_sigmas: outputs.iter().map(|x| x.1).collect(),
            parameter_names: names(&parameters.iter().map(|x| x.0).collect::<Vec<_>>()),
            nominal_parameters: parameters.iter().map(|x| x.1).collect(),
        };
        exp.validate()?;
        Ok(exp)
    }

    fn validate(&self) -> Result<()> {
        for (name, &(lo, hi)) in self.input_names.iter().zip(&self.input_bounds) {
            if !(lo < hi) {
                return Err(OedError::InvalidInput(format!(
                    "bounds for input '{name}' are not ordered: [{lo}, {hi}]"
                )));
            }
        }
        MeasurementCovariance::new(self.output_sigmas.clone())?;
        if self.parameter_names.is_empty() {
            return Err(OedError::InvalidInput("experiment has no parameters".into()));
        }
        Ok(())
    }

    pub fn n_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_names.len()
    }

    pub fn n_params(&self) -> usize {
        self.parameter_names.len()
    }

    pub fn sigma(&self) -> MeasurementCovariance {
        MeasurementCovariance {
            sigmas: self.output_sigmas.clone(),
        }
    }

    /// Replace the design bounds (same input count).
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.len() != self.n_inputs() {
            return Err(OedError::DimensionMismatch {
                what: "design bounds",
                expected: self.n_inputs(),
                found: bounds.len(),
            });
        }
        self.input_bounds = bounds;
        self.validate()?;
        Ok(self)
    }

    pub fn with_sigmas(mut self, sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.len() != self.n_outputs() {
            return Err(OedError::DimensionMismatch {
                what: "output sigmas",
                expected: self.n_outputs(),
                found: sigmas.len(),
            });
        }
        self.output_sigmas = sigmas;
        self.validate()?;
        Ok(self)
    }

    pub fn with_nominal(mut self, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != self.n_params() {
            return Err(OedError::DimensionMismatch {
                what: "nominal parameters",
                expected: self.n_params(),
                found: theta.len(),
            });
        }
        self.nominal_parameters = theta;
        Ok(self)
    }

    /// Run the model with dimension and finiteness checks.
    pub fn simulate(&self, design: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        if design.len() != self.n_inputs() {
            return Err(OedError::DimensionMismatch {
                what: "design inputs",
                expected: self.n_inputs(),
                found: design.len(),
            });
        }
        if theta.len() != self.n_params() {
            return Err(OedError::DimensionMismatch {
                what: "parameters",
                expected: self.n_params(),
                found: theta.len(),
            });
        }
        let y = self.simulator.simulate(design, theta)?;
        if y.len() != self.n_outputs() {
            return Err(OedError::DimensionMismatch {
                what: "simulated outputs",
                expected: self.n_outputs(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(OedError::NonFinite("simulated outputs"));
        }
        Ok(y)
    }

    pub fn in_bounds(&self, design: &[f64]) -> bool {
        design.len() == self.n_inputs()
            && design
                .iter()
                .zip(&self.input_bounds)
                .all(|(x, &(lo, hi))| *x >= lo && *x <= hi)
    }
}

/// Diagonal measurement covariance `diag(sigma^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementCovariance {
    pub sigmas: Vec<f64>,
}

impl MeasurementCovariance {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(OedError::InvalidInput(format!(
                "measurement standard deviations must be positive, got {s}"
            )));
        }
        Ok(Self { sigmas })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Central,
    Forward,
}

/// Coordinates in which sensitivities, FIMs and covariances are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterScaling {
    /// Derivatives with respect to the parameters themselves.
    Absolute,
    /// Derivatives with respect to `theta_j / theta_hat_j`; column `j` is multiplied by `theta_hat_j`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimOptions {
    pub scheme: FdScheme,
    pub rel_step: f64,
    pub scaling: ParameterScaling,
}

impl Default for FimOptions {
    fn default() -> Self {
        Self {
            scheme: FdScheme::Central,
            rel_step: DESIGN_REL_STEP,
            scaling: ParameterScaling::Absolute,
        }
    }
}

impl FimOptions {
    pub fn relative(mut self) -> Self {
        self.scaling = ParameterScaling::Relative;
        self
    }

    pub fn with_step(mut self, rel_step: f64) -> Self {
        self.rel_step = rel_step;
        self
    }
}

/// Finite-difference sensitivities `dy/dtheta` at one design point.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    pub q: DMatrix<f64>,
    pub steps: Vec<f64>,
}

impl SensitivityMatrix {
    /// Multiply each column by the matching parameter value.
    pub fn to_relative(&self, theta: &[f64]) -> Self {
        let mut q = self.q.clone();
        for (j, t) in theta.iter().enumerate() {
            q.column_mut(j).scale_mut(*t);
        }
        Self {
            q,
            steps: self.steps.clone(),
        }
    }
}

/// Finite-difference sensitivity matrix with `h_j = rel_step * max(|theta_j|, ABS_FLOOR)`.
pub fn sensitivity_matrix(
    exp: &LabeledExperiment,
    design: &[f64],
    theta: &[f64],
    scheme: FdScheme,
    rel_step: f64,
) -> Result<SensitivityMatrix> {
    if !(rel_step > 0.0) {
        return Err(OedError::InvalidInput(format!(
            "rel_step must be positive, got {rel_step}"
        )));
    }
    let p = exp.n_params();
    let n = exp.n_outputs();
    let base = match scheme {
        FdScheme::Forward => Some(exp.simulate(design, theta)?),
        FdScheme::Central => None,
    };
    let mut q = DMatrix::zeros(n, p);
    let mut steps = Vec::with_capacity(p);
    let mut th = theta.to_vec();
    for j in 0..p {
        let h = rel_step * theta[j].abs().max(ABS_FLOOR);
        th[j] = theta[j] + h;
        let up = exp.simulate(design, &th)?;
        let col: Vec<f64> = match &base {
            Some(y0) => up.iter().zip(y0).map(|(a, b)| (a - b) / h).collect(),
            None => {
                th[j] = theta[j] - h;
                let down = exp.simulate(design, &th)?;
                up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            }
        };
        th[j] = theta[j];
        for (r, v) in col.into_iter().enumerate() {
            q[(r, j)] = v;
        }
        steps.push(h);
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(OedError::NonFinite("sensitivity matrix"));
    }
    Ok(SensitivityMatrix { q, steps })
}

/// Sensitivities in the coordinates requested by `opts`.
pub fn sensitivities(
    exp: &LabeledExperiment,
    design: &[f64],
    theta: &[f64],
    opts: &FimOptions,
) -> Result<SensitivityMatrix> {
    let s = sensitivity_matrix(exp, design, theta, opts.scheme, opts.rel_step)?;
    Ok(match opts.scaling {
        ParameterScaling::Absolute => s,
        ParameterScaling::Relative => s.to_relative(theta),
    })
}

/// Prior Fisher information carried into a new experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorInformation {
    pub fim: SymMatrix,
}

impl PriorInformation {
    pub fn zero(p: usize) -> Self {
        Self {
            fim: SymMatrix::zeros(p),
        }
    }

    /// Accept a FIM prior after checking it is positive semidefinite.
    pub fn from_fim(fim: SymMatrix) -> Result<Self> {
        let eig = sym_eigen(&fim)?;
        let floor = -1e-10 * eig.max_abs().max(1.0);
        if eig.lambda_min() < floor {
            return Err(OedError::InvalidInput(format!(
                "prior FIM is not positive semidefinite (smallest eigenvalue {:e})",
                eig.lambda_min()
            )));
        }
        Ok(Self { fim })
    }

    /// Prior FIM as the pseudo-inverse of a covariance matrix.
    pub fn from_covariance(cov: &SymMatrix) -> Result<Self> {
        Self::from_fim(fim_from_covariance(cov)?.matrix)
    }

    pub fn dim(&self) -> usize {
        self.fim.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.fim.entries().iter().all(|&x| x == 0.0)
    }
}

/// `M = sum_r q_r^T q_r / sigma_r^2 + prior`, symmetrized.
pub fn assemble_fim(
    q: &SensitivityMatrix,
    sigma: &MeasurementCovariance,
    prior: &PriorInformation,
) -> Result<SymMatrix> {
    let (n, p) = q.q.shape();
    if sigma.sigmas.len() != n {
        return Err(OedError::DimensionMismatch {
            what: "measurement sigmas",
            expected: n,
            found: sigma.sigmas.len(),
        });
    }
    if prior.dim() != p {
        return Err(OedError::DimensionMismatch {
            what: "prior dimension",
            expected: p,
            found: prior.dim(),
        });
    }
    let mut m = prior.fim.to_full();
    for r in 0..n {
        let w = 1.0 / (sigma.sigmas[r] * sigma.sigmas[r]);
        let row = q.q.row(r);
        m += w * row.transpose() * row;
    }
    SymMatrix::from_full(&m)
}

/// FIM of one experiment at `design` plus a prior.
pub fn design_fim(
    exp: &LabeledExperiment,
    design: &[f64],
    theta: &[f64],
    opts: &FimOptions,
    prior: &PriorInformation,
) -> Result<SymMatrix> {
    let q = sensitivities(exp, design, theta, opts)?;
    assemble_fim(&q, &exp.sigma(), prior)
}

/// Result of a pseudo-inversion with rank metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverted {
    pub matrix: SymMatrix,
    pub rank: usize,
    pub singular: bool,
}

fn invert(m: &SymMatrix, what: &str) -> Result<Inverted> {
    let eig = sym_eigen(m)?;
    let rtol = default_rtol(m.dim());
    let rank = eig.rank(rtol);
    let singular = rank < m.dim();
    if singular {
        log::warn!("{what} is rank deficient ({rank} of {}); using pseudo-inverse", m.dim());
    }
    Ok(Inverted {
        matrix: SymMatrix::from_full(&eig.pseudo_inverse(rtol))?,
        rank,
        singular,
    })
}

pub fn covariance_from_fim(m: &SymMatrix) -> Result<Inverted> {
    invert(m, "FIM")
}

pub fn fim_from_covariance(v: &SymMatrix) -> Result<Inverted> {
    invert(v, "covariance")
}

/// Convert a covariance between absolute and relative coordinates.
pub fn covariance_to_relative(v: &SymMatrix, theta: &[f64]) -> SymMatrix {
    v.congruence_diag(&theta.iter().map(|t| 1.0 / t).collect::<Vec<_>>())
}

pub fn covariance_to_absolute(v_rel: &SymMatrix, theta: &[f64]) -> SymMatrix {
    v_rel.congruence_diag(theta)
}
