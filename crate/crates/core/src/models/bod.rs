//! Batch biological oxygen demand: `y = theta1 * (1 - exp(-theta2 * t))`.

use std::sync::Arc;

use crate::error::{OedError, Result};
use crate::estimate::Record;
use crate::experiment::LabeledExperiment;
use crate::symlin::SymMatrix;

/// Nominal ultimate demand (mg/L) and rate constant (1/day).
pub const NOMINAL: [f64; 2] = [20.3, 0.53];
pub const SIGMA: f64 = 1.0;
pub const SAMPLE_BOUNDS: (f64, f64) = (1.0, 10.0);

pub fn simulate(design: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
    let t = design[0];
    if !(t >= 0.0) {
        return Err(OedError::InvalidInput(format!(
            "sample time must be nonnegative, got {t}"
        )));
    }
    Ok(vec![theta[0] * (1.0 - (-theta[1] * t).exp())])
}

pub fn experiment() -> LabeledExperiment {
    LabeledExperiment::new(
        "bod",
        Arc::new(simulate),
        &[("sample_time", SAMPLE_BOUNDS)],
        &[("bod", SIGMA)],
        &[("ultimate_demand", NOMINAL[0]), ("rate_constant", NOMINAL[1])],
    )
    .expect("static labels are valid")
}

/// Two preliminary measurements `(day, mg/L)`.
pub fn preliminary_data() -> Vec<Record> {
    vec![
        Record {
            design: vec![1.0],
            y: vec![8.3],
        },
        Record {
            design: vec![7.0],
            y: vec![19.8],
        },
    ]
}

/// Published parameter covariance in relative coordinates.
pub fn published_covariance() -> SymMatrix {
    SymMatrix::new(2, vec![4.03e-3, -8.27e-3, 42.8e-3]).expect("2x2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_values() {
        let y = simulate(&[1.0], &NOMINAL).unwrap()[0];
        assert_relative_eq!(y, 20.3 * (1.0 - (-0.53f64).exp()), max_relative = 1e-15);
        // Hand value 8.35131911552939; three-decimal quotes of it round to 8.351 or 8.352.
        assert_relative_eq!(y, 8.35131911552939, max_relative = 1e-13);
        assert!((y - 8.352).abs() < 1e-3);
        assert_eq!(simulate(&[0.0], &NOMINAL).unwrap()[0], 0.0);
        assert!((simulate(&[100.0], &NOMINAL).unwrap()[0] - 20.3).abs() < 1e-10);
        assert!(simulate(&[-1.0], &NOMINAL).is_err());
    }
}
