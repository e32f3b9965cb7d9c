use std::path::PathBuf;
use std::sync::Arc;

use oedkit::criteria::CriterionKind;
use oedkit::design::{
    confidence_ellipse, eigenanalysis, grid, optimize_design, scan_design_1d, DesignProblem,
    DEFAULT_ELLIPSE_LEVEL,
};
use oedkit::estimate::{estimate_multistart, Dataset};
use oedkit::models::tclab::TemperatureCap;
use oedkit::verify::{
    check_first_derivatives, check_greybox_gradient, check_greybox_hessian,
    check_second_derivatives, ReportRow, SecondOrderScheme,
};
use oedkit::{FdScheme, LabeledExperiment, ParameterScaling, PriorInformation};

use crate::config::{ModelId, PriorSource, RunConfig, ThetaSource};
use crate::error::{CliError, CliResult};
use crate::table::{self, num, opt_num, write_csv};

fn experiment(cfg: &RunConfig) -> CliResult<LabeledExperiment> {
    let exp = cfg.model()?.experiment();
    Ok(match &cfg.design_bounds {
        Some(b) => exp.with_bounds(b.clone())?,
        None => exp,
    })
}

fn theta(cfg: &RunConfig, exp: &LabeledExperiment) -> CliResult<Vec<f64>> {
    let v = match &cfg.theta {
        ThetaSource::Nominal => return Ok(exp.nominal_parameters.clone()),
        ThetaSource::Values(v) => v.clone(),
        ThetaSource::File(p) => table::read_theta(p, &exp.parameter_names)?,
    };
    if v.len() != exp.n_params() {
        return Err(CliError::Invalid(format!(
            "model '{}' has {} parameters ({}), got {}",
            exp.name,
            exp.n_params(),
            exp.parameter_names.join(","),
            v.len()
        )));
    }
    Ok(v)
}

fn prior(cfg: &RunConfig, exp: &LabeledExperiment) -> CliResult<PriorInformation> {
    Ok(match &cfg.prior {
        PriorSource::None => PriorInformation::zero(exp.n_params()),
        PriorSource::Covariance(p) => {
            PriorInformation::from_covariance(&table::read_matrix(p, &exp.parameter_names)?)?
        }
        PriorSource::Fim(p) => PriorInformation::from_fim(table::read_matrix(p, &exp.parameter_names)?)?,
    })
}

fn scaling_name(s: ParameterScaling) -> &'static str {
    match s {
        ParameterScaling::Absolute => "absolute",
        ParameterScaling::Relative => "relative",
    }
}

pub fn simulate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let exp = experiment(cfg)?;
    if matches!(cfg.theta, ThetaSource::Nominal) {
        return Err(CliError::Missing {
            flag: "--theta",
            hint: "give the parameter values, comma separated",
        });
    }
    let th = theta(cfg, &exp)?;
    let phi = cfg.phi.clone().ok_or(CliError::Missing {
        flag: "--phi",
        hint: "give the design values, comma separated",
    })?;
    if phi.len() != exp.n_inputs() {
        return Err(CliError::Invalid(format!(
            "model '{}' has {} design inputs ({}), --phi gave {}",
            exp.name,
            exp.n_inputs(),
            exp.input_names.join(","),
            phi.len()
        )));
    }
    if !exp.in_bounds(&phi) {
        log::warn!("design {phi:?} lies outside the model's design bounds");
    }
    let y = exp.simulate(&phi, &th)?;
    let row: Vec<String> = y.iter().map(|&v| num(v)).collect();
    println!("{}", row.join(","));
    let path = cfg.out.join("outputs.csv");
    write_csv(&path, &exp.output_names, &[row])?;
    Ok(vec![path])
}

pub fn estimate(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let exp = experiment(cfg)?;
    let path = cfg.data.as_ref().ok_or(CliError::Missing {
        flag: "--data",
        hint: "give a CSV with one experiment per row",
    })?;
    let data = Dataset::new(&exp, table::read_dataset(path, &exp)?)?;
    let theta0 = theta(cfg, &exp)?;
    let bounds = cfg
        .parameter_bounds
        .clone()
        .unwrap_or_else(|| cfg.model.as_ref().map(ModelId::default_parameter_bounds).unwrap_or_default());
    let res = estimate_multistart(&exp, &data, &theta0, &bounds, &cfg.estimation, cfg.estimate_starts, cfg.seed)?;
    if !res.converged {
        log::warn!("estimation stopped after {} iterations without converging", res.iterations);
    }

    let labels = &exp.parameter_names;
    let out = &cfg.out;
    let mut written = Vec::new();
    let mut emit = |name: &str, header: Vec<String>, rows: Vec<Vec<String>>| -> CliResult<()> {
        let p = out.join(name);
        write_csv(&p, &header, &rows)?;
        written.push(p);
        Ok(())
    };

    emit(
        "theta_hat.csv",
        vec!["parameter".into(), "value".into()],
        labels.iter().zip(&res.theta_hat).map(|(l, v)| vec![l.clone(), num(*v)]).collect(),
    )?;
    emit("covariance.csv", labels.clone(), table::matrix_rows(&res.covariance))?;
    emit("fim.csv", labels.clone(), table::matrix_rows(&res.fim))?;

    let report = eigenanalysis(&res.covariance, labels)?;
    let mut header = vec!["index".to_string(), "eigenvalue".to_string()];
    header.extend(labels.iter().cloned());
    header.push("dominant".into());
    let rows = report
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, lam)| {
            let mut row = vec![k.to_string(), num(*lam)];
            row.extend(report.eigenvectors[k].iter().map(|&c| num(c)));
            row.push(report.dominant[k].join(";"));
            row
        })
        .collect();
    emit("eigenanalysis.csv", header, rows)?;

    let mut rows = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            match confidence_ellipse(&res.covariance, i, j, DEFAULT_ELLIPSE_LEVEL) {
                Ok(e) => rows.push(vec![
                    labels[i].clone(),
                    labels[j].clone(),
                    num(e.level),
                    num(e.chi2),
                    num(e.semi_major),
                    num(e.semi_minor),
                    num(e.angle),
                ]),
                Err(err) => log::warn!("ellipse {}/{}: {err}", labels[i], labels[j]),
            }
        }
    }
    emit(
        "ellipses.csv",
        ["param_i", "param_j", "level", "chi2", "semi_major", "semi_minor", "angle"]
            .map(String::from)
            .to_vec(),
        rows,
    )?;

    emit(
        "estimate.csv",
        ["wsse", "converged", "iterations", "scaling"].map(String::from).to_vec(),
        vec![vec![
            num(res.wsse),
            res.converged.to_string(),
            res.iterations.to_string(),
            scaling_name(res.scaling).into(),
        ]],
    )?;
    Ok(written)
}

fn design_problem(cfg: &RunConfig, kind: CriterionKind) -> CliResult<DesignProblem> {
    let exp = experiment(cfg)?;
    let th = theta(cfg, &exp)?;
    let pr = prior(cfg, &exp)?;
    let mut pb = DesignProblem::new(exp, kind, pr, cfg.fim)?;
    pb.theta_hat = th.clone();
    pb.multistart.seed = cfg.seed;
    if let Some(n) = cfg.design_starts {
        pb.multistart.starts = n;
    }
    pb.multistart.max_evals = cfg.max_evals.or(pb.multistart.max_evals);
    if let Some(t) = cfg.simplex_tol {
        pb.multistart.simplex_tol = t;
    }
    if let ModelId::Tclab(model) = cfg.model()? {
        pb = pb.with_penalty(Arc::new(TemperatureCap::new(model.clone(), th)));
    }
    Ok(pb)
}

pub fn design(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let kind = cfg.criterion.ok_or(CliError::Missing {
        flag: "--criterion",
        hint: "choose A, D, E, ME or pseudoA",
    })?;
    let pb = design_problem(cfg, kind)?;
    let res = optimize_design(&pb)?;
    let exp = &pb.experiment;
    let out = &cfg.out;

    let paths = ["design.csv", "audit.csv", "fim.csv", "starts.csv"].map(|n| out.join(n));
    write_csv(
        &paths[0],
        &["input", "value"],
        &exp.input_names
            .iter()
            .zip(&res.phi_hat)
            .map(|(n, v)| vec![n.clone(), num(*v)])
            .collect::<Vec<_>>(),
    )?;
    write_csv(
        &paths[1],
        &["criterion", "value", "log10", "optimized"],
        &res.audit
            .iter()
            .map(|a| {
                vec![
                    a.kind.name().to_string(),
                    opt_num(a.value),
                    opt_num(a.log10),
                    (a.kind == kind).to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    write_csv(&paths[2], &exp.parameter_names, &table::matrix_rows(&res.fim_at_opt))?;

    let mut header = vec!["start".to_string()];
    header.extend(exp.input_names.iter().map(|n| format!("{n}_initial")));
    header.extend(exp.input_names.iter().map(|n| format!("{n}_final")));
    header.extend(["objective".to_string(), "evaluations".to_string()]);
    let rows: Vec<Vec<String>> = res
        .starts
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut row = vec![k.to_string()];
            row.extend(s.start.iter().map(|&v| num(v)));
            match &s.end {
                Some(e) => row.extend(e.iter().map(|&v| num(v))),
                None => row.extend(std::iter::repeat_n(String::new(), exp.n_inputs())),
            }
            row.push(opt_num(s.value));
            row.push(s.evaluations.to_string());
            row
        })
        .collect();
    write_csv(&paths[3], &header, &rows)?;
    Ok(paths.to_vec())
}

pub fn scan(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let exp = experiment(cfg)?;
    if exp.n_inputs() != 1 {
        return Err(CliError::Invalid(format!(
            "scan is restricted to 1-D designs; model '{}' has {} design inputs",
            exp.name,
            exp.n_inputs()
        )));
    }
    let g = cfg.grid.ok_or(CliError::Missing {
        flag: "--grid",
        hint: "give the grid as lo:hi:step",
    })?;
    let pb = design_problem(cfg, cfg.criterion.unwrap_or(CriterionKind::D))?;
    let rows = scan_design_1d(&pb, &CriterionKind::ALL, &grid(g.lo, g.hi, g.step)?)?;
    let mut header = vec!["phi".to_string()];
    header.extend(CriterionKind::ALL.iter().map(|k| k.name().to_string()));
    header.extend(["lambda_min", "lambda_max", "trace"].map(String::from));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![num(r.phi)];
            row.extend(r.values.iter().map(|v| opt_num(*v)));
            row.extend([opt_num(r.lambda_min), opt_num(r.lambda_max), opt_num(r.trace)]);
            row
        })
        .collect();
    let path = cfg.out.join("scan.csv");
    write_csv(&path, &header, &body)?;
    Ok(vec![path])
}

/// Pass threshold on the statistic a verification row is judged by.
pub fn verify_threshold(row: &ReportRow) -> (&'static str, f64, f64) {
    match row.check {
        "gradient" | "greybox-gradient" => {
            let limit = if row.criterion == CriterionKind::D { -5.0 } else { -4.5 };
            ("mean_log10", row.mean_log10, limit)
        }
        _ => ("max_log10", row.max_log10, -3.0),
    }
}

pub fn verify(cfg: &RunConfig) -> CliResult<Vec<PathBuf>> {
    let v = &cfg.verify;
    let kinds = CriterionKind::ALL;
    let mut rows = check_first_derivatives(&kinds, &v.sizes, v.samples, v.first_step, FdScheme::Forward, cfg.seed)?.rows;
    rows.extend(
        check_second_derivatives(&kinds, &v.second_order_sizes, 1, v.second_step, SecondOrderScheme::GradientCentral, cfg.seed)?
            .rows,
    );
    rows.extend(check_greybox_gradient(&kinds, &v.greybox_sizes, v.samples, v.first_step, cfg.seed)?.rows);
    rows.extend(check_greybox_hessian(&kinds, &v.greybox_sizes, v.samples, v.second_step, cfg.seed)?.rows);

    let header = [
        "check", "criterion", "p", "samples", "redrawn", "step", "scheme", "mean_log10", "std_err",
        "max_log10", "judged_on", "threshold", "pass",
    ];
    let mut failures = 0;
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (stat, value, limit) = verify_threshold(r);
            let pass = value <= limit;
            if !pass {
                failures += 1;
            }
            vec![
                r.check.to_string(),
                r.criterion.name().to_string(),
                r.p.to_string(),
                r.samples.to_string(),
                r.redrawn.to_string(),
                num(r.step),
                r.scheme.to_string(),
                num(r.mean_log10),
                num(r.std_err),
                num(r.max_log10),
                stat.to_string(),
                num(limit),
                pass.to_string(),
            ]
        })
        .collect();
    println!("verify: {} of {} rows within threshold", rows.len() - failures, rows.len());
    let path = cfg.out.join("verify.csv");
    write_csv(&path, &header, &body)?;
    Ok(vec![path])
}
