//! Run configuration: a TOML file merged with command-line overrides.
//!
//! Relative paths inside the file resolve against the file's directory;
//! paths given on the command line resolve against the working directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use oedkit::estimate::EstimationOptions;
use oedkit::models::membrane::{MembraneModel, TRUE_PARAMETERS};
use oedkit::models::tclab::TclabModel;
use oedkit::models::bod;
use oedkit::{CriterionKind, FdScheme, FimOptions, LabeledExperiment, ParameterScaling};
use serde::Deserialize;

use crate::args::Overrides;
use crate::error::{CliError, CliResult};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    criterion: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    prior: PriorSection,
    #[serde(default)]
    parameters: ParameterSection,
    #[serde(default)]
    design: DesignSection,
    #[serde(default)]
    fd: FdSection,
    #[serde(default)]
    estimate: EstimateSection,
    #[serde(default)]
    scan: ScanSection,
    #[serde(default)]
    verify: VerifySection,
    #[serde(default)]
    membrane: MembraneSection,
    #[serde(default)]
    tclab: TclabSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorSection {
    covariance: Option<PathBuf>,
    fim: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterSection {
    theta: Option<Vec<f64>>,
    file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignSection {
    phi: Option<Vec<f64>>,
    bounds: Option<Vec<[f64; 2]>>,
    starts: Option<usize>,
    max_evals: Option<usize>,
    simplex_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdSection {
    scheme: Option<String>,
    rel_step: Option<f64>,
    scaling: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateSection {
    data: Option<PathBuf>,
    starts: Option<usize>,
    bounds: Option<Vec<[f64; 2]>>,
    rel_step: Option<f64>,
    tol: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanSection {
    grid: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifySection {
    samples: Option<usize>,
    sizes: Option<Vec<usize>>,
    second_order_sizes: Option<Vec<usize>>,
    greybox_sizes: Option<Vec<usize>>,
    first_step: Option<f64>,
    second_step: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MembraneSection {
    elements_per_stage: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TclabSection {
    ambient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelId {
    Bod,
    Tclab(TclabModel),
    Membrane(MembraneModel),
}

impl ModelId {
    fn parse(name: &str) -> CliResult<Self> {
        match name {
            "bod" => Ok(ModelId::Bod),
            "tclab" => Ok(ModelId::Tclab(TclabModel::default())),
            "membrane" => Ok(ModelId::Membrane(MembraneModel::default())),
            "external-table" => Err(CliError::Invalid(
                "model 'external-table' is not supported: sensitivities need a simulator, \
                 not interpolated data"
                    .into(),
            )),
            other => Err(CliError::Invalid(format!(
                "unknown model '{other}' (expected bod, tclab or membrane)"
            ))),
        }
    }

    pub fn experiment(&self) -> LabeledExperiment {
        match self {
            ModelId::Bod => bod::experiment(),
            ModelId::Tclab(m) => m.experiment(),
            ModelId::Membrane(m) => m.experiment(),
        }
    }

    /// Box used by parameter estimation when none is configured.
    pub fn default_parameter_bounds(&self) -> Vec<(f64, f64)> {
        match self {
            ModelId::Bod => vec![(1.0, 100.0), (0.01, 5.0)],
            ModelId::Membrane(_) => TRUE_PARAMETERS.iter().map(|t| (0.2 * t, 5.0 * t)).collect(),
            ModelId::Tclab(_) => self
                .experiment()
                .nominal_parameters
                .iter()
                .map(|b| {
                    let (lo, hi) = (0.1 * b, 10.0 * b);
                    (lo.min(hi), lo.max(hi))
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorSource {
    None,
    Covariance(PathBuf),
    Fim(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSource {
    Nominal,
    Values(Vec<f64>),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Invalid(format!("--grid expects lo:hi:step, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<_>>()?;
        if !(v[2] > 0.0) || !(v[1] >= v[0]) || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Invalid(format!(
                "--grid needs finite lo <= hi and step > 0, got '{s}'"
            )));
        }
        Ok(GridSpec {
            lo: v[0],
            hi: v[1],
            step: v[2],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub samples: usize,
    pub sizes: Vec<usize>,
    pub second_order_sizes: Vec<usize>,
    pub greybox_sizes: Vec<usize>,
    pub first_step: f64,
    pub second_step: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            samples: 100,
            sizes: (2..=10).collect(),
            second_order_sizes: vec![2],
            greybox_sizes: vec![2, 3, 4],
            first_step: 1e-4,
            second_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Option<ModelId>,
    pub criterion: Option<CriterionKind>,
    pub prior: PriorSource,
    pub theta: ThetaSource,
    pub phi: Option<Vec<f64>>,
    pub design_bounds: Option<Vec<(f64, f64)>>,
    pub seed: u64,
    pub design_starts: Option<usize>,
    pub max_evals: Option<usize>,
    pub simplex_tol: Option<f64>,
    pub fim: FimOptions,
    pub estimation: EstimationOptions,
    pub estimate_starts: usize,
    pub parameter_bounds: Option<Vec<(f64, f64)>>,
    pub data: Option<PathBuf>,
    pub grid: Option<GridSpec>,
    pub verify: VerifySettings,
    pub out: PathBuf,
}

pub const DEFAULT_ESTIMATE_STARTS: usize = 5;

fn parse_list(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim().parse::<f64>().map_err(|_| {
                CliError::Invalid(format!("{flag} expects comma-separated numbers, got '{s}'"))
            })
        })
        .collect()
}

fn pairs(v: Vec<[f64; 2]>) -> Vec<(f64, f64)> {
    v.into_iter().map(|[a, b]| (a, b)).collect()
}

fn parse_scaling(s: &str) -> CliResult<ParameterScaling> {
    match s {
        "absolute" => Ok(ParameterScaling::Absolute),
        "relative" => Ok(ParameterScaling::Relative),
        other => Err(CliError::Invalid(format!(
            "fd.scaling must be 'absolute' or 'relative', got '{other}'"
        ))),
    }
}

fn parse_scheme(s: &str) -> CliResult<FdScheme> {
    match s {
        "central" => Ok(FdScheme::Central),
        "forward" => Ok(FdScheme::Forward),
        other => Err(CliError::Invalid(format!(
            "fd.scheme must be 'central' or 'forward', got '{other}'"
        ))),
    }
}

fn existing(path: PathBuf, what: &str) -> CliResult<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::bad_file(path, format!("{what} file does not exist")))
    }
}

fn check_bounds(what: &str, bounds: &[(f64, f64)], expected: usize) -> CliResult<()> {
    if bounds.len() != expected {
        return Err(CliError::Invalid(format!(
            "{what} has {} pairs but the model needs {expected}",
            bounds.len()
        )));
    }
    if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(CliError::Invalid(format!("{what}: invalid pair [{lo}, {hi}]")));
    }
    Ok(())
}

impl RunConfig {
    pub fn resolve(flags: &Overrides) -> CliResult<Self> {
        let (file, base) = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::bad_file(path, e))?;
                let parsed: FileConfig =
                    toml::from_str(&text).map_err(|e| CliError::bad_file(path, e.message()))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (parsed, base)
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let rel = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let model = flags
            .model
            .clone()
            .or(file.model)
            .map(|m| ModelId::parse(&m))
            .transpose()?
            .map(|m| match m {
                ModelId::Membrane(mut mm) => {
                    if let Some(n) = file.membrane.elements_per_stage {
                        mm.elements_per_stage = n;
                    }
                    ModelId::Membrane(mm)
                }
                ModelId::Tclab(mut tm) => {
                    if let Some(a) = file.tclab.ambient {
                        tm.ambient = a;
                    }
                    ModelId::Tclab(tm)
                }
                other => other,
            });
        if let Some(ModelId::Membrane(m)) = &model {
            if m.elements_per_stage == 0 {
                return Err(CliError::Invalid("membrane.elements_per_stage must be positive".into()));
            }
        }

        let criterion = flags
            .criterion
            .clone()
            .or(file.criterion)
            .map(|c| CriterionKind::from_str(&c))
            .transpose()?;

        let prior = match (&flags.prior_cov, &flags.prior_fim) {
            (Some(p), _) => PriorSource::Covariance(existing(p.clone(), "--prior-cov")?),
            (_, Some(p)) => PriorSource::Fim(existing(p.clone(), "--prior-fim")?),
            (None, None) => match (file.prior.covariance, file.prior.fim) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Invalid(
                        "prior.covariance and prior.fim are mutually exclusive".into(),
                    ))
                }
                (Some(p), None) => PriorSource::Covariance(existing(rel(p), "prior.covariance")?),
                (None, Some(p)) => PriorSource::Fim(existing(rel(p), "prior.fim")?),
                (None, None) => PriorSource::None,
            },
        };

        let theta = if let Some(s) = &flags.theta {
            ThetaSource::Values(parse_list("--theta", s)?)
        } else if let Some(p) = &flags.theta_file {
            ThetaSource::File(existing(p.clone(), "--theta-file")?)
        } else if let Some(v) = file.parameters.theta {
            if file.parameters.file.is_some() {
                return Err(CliError::Invalid(
                    "parameters.theta and parameters.file are mutually exclusive".into(),
                ));
            }
            ThetaSource::Values(v)
        } else if let Some(p) = file.parameters.file {
            ThetaSource::File(existing(rel(p), "parameters.file")?)
        } else {
            ThetaSource::Nominal
        };

        let phi = match &flags.phi {
            Some(s) => Some(parse_list("--phi", s)?),
            None => file.design.phi,
        };

        let mut fim = FimOptions::default().relative();
        if let Some(s) = &file.fd.scheme {
            fim.scheme = parse_scheme(s)?;
        }
        if let Some(h) = file.fd.rel_step {
            if !(h > 0.0) {
                return Err(CliError::Invalid("fd.rel_step must be positive".into()));
            }
            fim.rel_step = h;
        }
        if let Some(s) = &file.fd.scaling {
            fim.scaling = parse_scaling(s)?;
        }

        let mut estimation = EstimationOptions {
            scaling: fim.scaling,
            ..Default::default()
        };
        if let Some(h) = file.estimate.rel_step {
            estimation.rel_step = h;
        }
        if let Some(t) = file.estimate.tol {
            estimation.tol = t;
        }
        if let Some(n) = file.estimate.max_iterations {
            estimation.max_iterations = n;
        }
        if !(estimation.rel_step > 0.0) || !(estimation.tol > 0.0) {
            return Err(CliError::Invalid("estimate.rel_step and estimate.tol must be positive".into()));
        }

        let data = match &flags.data {
            Some(p) => Some(existing(p.clone(), "--data")?),
            None => file.estimate.data.map(|p| existing(rel(p), "estimate.data")).transpose()?,
        };

        let grid = flags
            .grid
            .clone()
            .or(file.scan.grid)
            .map(|g| GridSpec::from_str(&g))
            .transpose()?;

        let defaults = VerifySettings::default();
        let verify = VerifySettings {
            samples: file.verify.samples.unwrap_or(defaults.samples),
            sizes: file.verify.sizes.unwrap_or(defaults.sizes),
            second_order_sizes: file.verify.second_order_sizes.unwrap_or(defaults.second_order_sizes),
            greybox_sizes: file.verify.greybox_sizes.unwrap_or(defaults.greybox_sizes),
            first_step: file.verify.first_step.unwrap_or(defaults.first_step),
            second_step: file.verify.second_step.unwrap_or(defaults.second_step),
        };
        if verify.samples == 0 || !(verify.first_step > 0.0) || !(verify.second_step > 0.0) {
            return Err(CliError::Invalid("verify needs samples > 0 and positive steps".into()));
        }

        let design_bounds = file.design.bounds.map(pairs);
        let parameter_bounds = file.estimate.bounds.map(pairs);
        if let Some(m) = &model {
            let exp = m.experiment();
            if let Some(b) = &design_bounds {
                check_bounds("design.bounds", b, exp.n_inputs())?;
            }
            if let Some(b) = &parameter_bounds {
                check_bounds("estimate.bounds", b, exp.n_params())?;
            }
        }

        Ok(RunConfig {
            model,
            criterion,
            prior,
            theta,
            phi,
            design_bounds,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            design_starts: flags.starts.or(file.design.starts),
            max_evals: file.design.max_evals,
            simplex_tol: file.design.simplex_tol,
            fim,
            estimation,
            estimate_starts: flags
                .starts
                .or(file.estimate.starts)
                .unwrap_or(DEFAULT_ESTIMATE_STARTS),
            parameter_bounds,
            data,
            grid,
            verify,
            out: flags
                .out
                .clone()
                .or(file.out.map(rel))
                .unwrap_or_else(|| PathBuf::from("oedkit-out")),
        })
    }

    pub fn model(&self) -> CliResult<&ModelId> {
        self.model.as_ref().ok_or(CliError::Missing {
            flag: "--model",
            hint: "choose bod, tclab or membrane",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parses() {
        let g: GridSpec = "1:10:0.01".parse().unwrap();
        assert_eq!((g.lo, g.hi, g.step), (1.0, 10.0, 0.01));
        assert!("1:10".parse::<GridSpec>().is_err());
        assert!("1:10:0".parse::<GridSpec>().is_err());
        assert!("10:1:0.1".parse::<GridSpec>().is_err());
    }

    #[test]
    fn external_table_is_rejected() {
        let err = ModelId::parse("external-table").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("external-table"));
    }

    #[test]
    fn file_sections_reject_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("design.bogus = 1").is_err());
        let ok: FileConfig = toml::from_str(
            "model = \"bod\"\ndesign.bounds = [[0.9, 10.0]]\n[fd]\nscaling = \"absolute\"\n",
        )
        .unwrap();
        assert_eq!(ok.design.bounds, Some(vec![[0.9, 10.0]]));
        assert_eq!(ok.fd.scaling.as_deref(), Some("absolute"));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "model = \"membrane\"\nseed = 4\nout = \"res\"\n").unwrap();
        let flags = Overrides {
            config: Some(path),
            seed: Some(9),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&flags).unwrap();
        assert_eq!(cfg.seed, 9);
        assert!(matches!(cfg.model, Some(ModelId::Membrane(_))));
        assert_eq!(cfg.out, dir.path().join("res"));
    }

    #[test]
    fn bounds_dimension_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "model = \"bod\"\ndesign.bounds = [[1.0, 2.0], [3.0, 4.0]]\n").unwrap();
        let flags = Overrides {
            config: Some(path),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(&flags).unwrap_err().exit_code(), 2);
    }
}
