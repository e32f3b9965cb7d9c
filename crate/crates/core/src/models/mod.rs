//! Case-study models packaged as labeled experiments.

pub mod bod;
pub mod membrane;
pub mod tclab;

use rand_distr::{Distribution, Normal};

use crate::error::{OedError, Result};
use crate::estimate::Record;
use crate::experiment::LabeledExperiment;
use crate::sampling;

/// Simulate every combination of `levels` (one level list per input) and add
/// Gaussian noise with the experiment's sigmas times `noise_scale`.
///
/// The first input varies slowest.
pub fn generate_factorial_data(
    exp: &LabeledExperiment,
    levels: &[Vec<f64>],
    theta_true: &[f64],
    seed: u64,
    noise_scale: f64,
) -> Result<Vec<Record>> {
    if levels.len() != exp.n_inputs() {
        return Err(OedError::DimensionMismatch {
            what: "factorial levels",
            expected: exp.n_inputs(),
            found: levels.len(),
        });
    }
    if levels.iter().any(|l| l.is_empty()) {
        return Err(OedError::InvalidInput("every input needs at least one level".into()));
    }
    if !(noise_scale >= 0.0) {
        return Err(OedError::InvalidInput("noise scale must be nonnegative".into()));
    }
    let mut designs: Vec<Vec<f64>> = vec![Vec::new()];
    for lv in levels {
        designs = designs
            .into_iter()
            .flat_map(|d| {
                lv.iter().map(move |&x| {
                    let mut e = d.clone();
                    e.push(x);
                    e
                })
            })
            .collect();
    }
    let mut rng = sampling::rng(seed);
    let mut out = Vec::with_capacity(designs.len());
    for design in designs {
        let mut y = exp.simulate(&design, theta_true)?;
        for (v, s) in y.iter_mut().zip(&exp.output_sigmas) {
            let noise = Normal::new(0.0, 1.0)
                .expect("unit normal")
                .sample(&mut rng);
            *v += noise_scale * s * noise;
        }
        out.push(Record { design, y });
    }
    Ok(out)
}
