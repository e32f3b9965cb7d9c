//! Two-body heater/sensor model in lumped-coefficient form:
//!
//! ```text
//! dT_H/dt = b1 (T_amb - T_H) + b2 (T_S - T_H) + b4 u
//! dT_S/dt = b3 (T_H - T_S)
//! ```
//!
//! with `u` held piecewise constant and `T_S` sampled at the end of every interval.

use std::sync::Arc;

use crate::design::DesignPenalty;
use crate::error::{OedError, Result};
use crate::experiment::LabeledExperiment;

pub const HEATER_GAIN: f64 = 0.00016;
pub const HEATER_POWER: f64 = 200.0;
pub const SIGMA: f64 = 0.25;
pub const TEMPERATURE_CAP: f64 = 85.0;
pub const PENALTY_WEIGHT: f64 = 1e3;

/// Lumped coefficients from fitted conductances and heat capacities.
pub fn beta_from_physical(ua: f64, ub: f64, cp_heater: f64, cp_sensor: f64) -> [f64; 4] {
    [
        ua / cp_heater,
        ub / cp_heater,
        ub / cp_sensor,
        HEATER_GAIN * HEATER_POWER / cp_heater,
    ]
}

/// Coefficients from the published fitted values.
pub fn nominal_beta() -> [f64; 4] {
    beta_from_physical(0.0418, 0.0303, 5.487, 0.588)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TclabModel {
    pub ambient: f64,
    pub dt: f64,
    pub interval: f64,
    pub n_intervals: usize,
}

impl Default for TclabModel {
    fn default() -> Self {
        Self {
            ambient: 21.0,
            dt: 1.0,
            interval: 30.0,
            n_intervals: 30,
        }
    }
}

/// Heater and sensor temperatures after every integration step (including t = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub heater: Vec<f64>,
    pub sensor: Vec<f64>,
}

impl Trajectory {
    pub fn peak(&self) -> f64 {
        self.heater
            .iter()
            .chain(&self.sensor)
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }
}

impl TclabModel {
    fn steps_per_interval(&self) -> Result<usize> {
        let n = self.interval / self.dt;
        if !(self.dt > 0.0) || (n - n.round()).abs() > 1e-9 || n < 1.0 {
            return Err(OedError::InvalidInput(format!(
                "step {} must divide the control interval {}",
                self.dt, self.interval
            )));
        }
        Ok(n.round() as usize)
    }

    fn rhs(&self, state: [f64; 2], u: f64, b: &[f64]) -> [f64; 2] {
        let [th, ts] = state;
        [
            b[0] * (self.ambient - th) + b[1] * (ts - th) + b[3] * u,
            b[2] * (th - ts),
        ]
    }

    /// RK4 integration from the ambient cold start.
    pub fn trajectory(&self, u: &[f64], beta: &[f64]) -> Result<Trajectory> {
        if u.len() != self.n_intervals {
            return Err(OedError::DimensionMismatch {
                what: "control profile",
                expected: self.n_intervals,
                found: u.len(),
            });
        }
        if beta.len() != 4 {
            return Err(OedError::DimensionMismatch {
                what: "heater coefficients",
                expected: 4,
                found: beta.len(),
            });
        }
        let steps = self.steps_per_interval()?;
        let h = self.dt;
        let mut x = [self.ambient, self.ambient];
        let mut heater = vec![x[0]];
        let mut sensor = vec![x[1]];
        for &uk in u {
            for _ in 0..steps {
                let k1 = self.rhs(x, uk, beta);
                let k2 = self.rhs([x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]], uk, beta);
                let k3 = self.rhs([x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]], uk, beta);
                let k4 = self.rhs([x[0] + h * k3[0], x[1] + h * k3[1]], uk, beta);
                for d in 0..2 {
                    x[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
                }
                heater.push(x[0]);
                sensor.push(x[1]);
            }
        }
        if heater.iter().chain(&sensor).any(|v| !v.is_finite()) {
            return Err(OedError::NonFinite("temperature trajectory"));
        }
        Ok(Trajectory { heater, sensor })
    }

    /// Sensor temperature at the end of each control interval.
    pub fn simulate(&self, u: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
        let steps = self.steps_per_interval()?;
        let traj = self.trajectory(u, beta)?;
        Ok((1..=self.n_intervals).map(|k| traj.sensor[k * steps]).collect())
    }

    pub fn experiment(&self) -> LabeledExperiment {
        let model = self.clone();
        let input_names: Vec<String> = (1..=self.n_intervals).map(|k| format!("u_{k}")).collect();
        let output_names: Vec<String> = (1..=self.n_intervals)
            .map(|k| format!("T_S_{}", (k as f64 * self.interval) as i64))
            .collect();
        let inputs: Vec<(&str, (f64, f64))> =
            input_names.iter().map(|n| (n.as_str(), (0.0, 1.0))).collect();
        let outputs: Vec<(&str, f64)> = output_names.iter().map(|n| (n.as_str(), SIGMA)).collect();
        let beta = nominal_beta();
        LabeledExperiment::new(
            "tclab",
            Arc::new(move |u: &[f64], b: &[f64]| model.simulate(u, b)),
            &inputs,
            &outputs,
            &[
                ("beta_ambient", beta[0]),
                ("beta_exchange_heater", beta[1]),
                ("beta_exchange_sensor", beta[2]),
                ("beta_power", beta[3]),
            ],
        )
        .expect("static labels are valid")
    }

    fn interval_midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_intervals).map(move |k| (k as f64 + 0.5) * self.interval)
    }

    /// Sinusoidal excitation `0.5 + 0.5 sin(2 pi t / 300)` held per interval.
    pub fn sine_profile(&self) -> Vec<f64> {
        self.interval_midpoints()
            .map(|t| 0.5 + 0.5 * (2.0 * std::f64::consts::PI * t / 300.0).sin())
            .collect()
    }

    pub fn step_profile(&self, level: f64) -> Vec<f64> {
        vec![level; self.n_intervals]
    }
}

/// Quadratic penalty on the peak temperature above a cap.
#[derive(Debug, Clone)]
pub struct TemperatureCap {
    pub model: TclabModel,
    pub beta: Vec<f64>,
    pub cap: f64,
    pub weight: f64,
}

impl TemperatureCap {
    pub fn new(model: TclabModel, beta: Vec<f64>) -> Self {
        Self {
            model,
            beta,
            cap: TEMPERATURE_CAP,
            weight: PENALTY_WEIGHT,
        }
    }
}

impl DesignPenalty for TemperatureCap {
    fn name(&self) -> &str {
        "temperature_cap"
    }

    fn penalty(&self, design: &[f64]) -> Result<f64> {
        let peak = self.model.trajectory(design, &self.beta)?.peak();
        let excess = (peak - self.cap).max(0.0);
        Ok(self.weight * excess * excess)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_at_zero_input() {
        let m = TclabModel::default();
        let y = m.simulate(&vec![0.0; 30], &nominal_beta()).unwrap();
        assert!(y.iter().all(|&t| t == 21.0));
    }

    #[test]
    fn steady_state_matches_balance() {
        let b = nominal_beta();
        let long = TclabModel {
            n_intervals: 600,
            ..TclabModel::default()
        };
        let y = long.simulate(&vec![0.5; 600], &b).unwrap();
        let want = 21.0 + b[3] * 0.5 / b[0];
        assert!((y.last().unwrap() - want).abs() < 0.01);
    }

    #[test]
    fn step_response_is_monotone_and_bounded() {
        let m = TclabModel::default();
        let b = nominal_beta();
        let y = m.simulate(&vec![1.0; 30], &b).unwrap();
        let ceiling = 21.0 + b[3] / b[0];
        for w in y.windows(2) {
            assert!(w[1] >= w[0]);
        }
        assert!(*y.last().unwrap() <= ceiling);
    }

    #[test]
    fn step_must_divide_interval() {
        let m = TclabModel {
            dt: 7.0,
            ..TclabModel::default()
        };
        assert!(m.simulate(&vec![0.0; 30], &nominal_beta()).is_err());
    }

    #[test]
    fn cap_penalty_is_quadratic() {
        let m = TclabModel::default();
        let mut cap = TemperatureCap::new(m, nominal_beta().to_vec());
        assert_eq!(cap.penalty(&vec![1.0; 30]).unwrap(), 0.0);
        cap.cap = 21.0;
        let peak = cap.model.trajectory(&vec![1.0; 30], &cap.beta).unwrap().peak();
        let want = 1e3 * (peak - 21.0).powi(2);
        assert!((cap.penalty(&vec![1.0; 30]).unwrap() - want).abs() < 1e-9 * want);
    }
}
