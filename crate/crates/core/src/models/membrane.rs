//! Three-stage diafiltration cascade with two ions.
//!
//! Each stage is a chain of finite-volume elements. In an element the solvent
//! flux solves `J = L_p (dP - RT sum_k (1 - S_k) c_out_k)`, where the sieving
//! coefficient is affine in the inlet ionic strength,
//! `S_j = S0_j + delta_j * sum_k c_in_k z_k^2`, and the outlet concentration
//! follows from the ion balance `q_in c_in = q_out c_out + a J S c_out`.
//!
//! Flowsheet:
//! * stage 3: diafiltrate plus stage-2 permeate enter element 1; fresh feed joins before the last element
//! * stage 2: stage-3 retentate plus stage-1 permeate
//! * stage 1: stage-2 retentate
//!
//! Products are the stage-3 permeate and the stage-1 retentate. The stage-3
//! retentate and stage-1 permeate are torn and converged by damped successive
//! substitution.

use std::sync::Arc;

use crate::error::{OedError, Result};
use crate::experiment::LabeledExperiment;

pub const GAS_CONSTANT: f64 = 8.314;
pub const TEMPERATURE: f64 = 298.15;
pub const PRESSURE_DROP: f64 = 1e6;
pub const WIDTH: f64 = 1.5;
pub const LENGTH: f64 = 200.0;
pub const CHARGES: [f64; 2] = [1.0, 2.0];

/// Parameter values used to generate synthetic data.
pub const TRUE_PARAMETERS: [f64; 5] = [3e-7, 1.3, 0.5, 5e-4, 1.5e-4];
pub const FLOW_SIGMA: f64 = 2.0;
pub const CONC_SIGMA: f64 = 0.1;

pub const DAMPING: f64 = 0.5;
pub const TEAR_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 500;
const NEGATIVE_TOL: f64 = -1e-10;

/// Design bounds: diafiltrate flow, fresh feed flow, feed concentrations.
pub const DESIGN_BOUNDS: [(f64, f64); 4] = [(27.0, 33.0), (90.0, 110.0), (1.5, 2.0), (15.0, 20.0)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stream {
    pub flow: f64,
    pub conc: [f64; 2],
}

impl Stream {
    pub const EMPTY: Stream = Stream {
        flow: 0.0,
        conc: [0.0, 0.0],
    };

    fn mix(a: Stream, b: Stream) -> Stream {
        let flow = a.flow + b.flow;
        if flow <= 0.0 {
            return Stream { flow, conc: [0.0; 2] };
        }
        let conc = [0, 1].map(|j| (a.flow * a.conc[j] + b.flow * b.conc[j]) / flow);
        Stream { flow, conc }
    }

    fn as_vec(&self) -> [f64; 3] {
        [self.flow, self.conc[0], self.conc[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageOutput {
    pub permeate: Stream,
    pub retentate: Stream,
    /// Smallest sieving coefficient met in the stage.
    pub min_sieving: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSolution {
    pub stages: [StageOutput; 3],
    pub permeate_product: Stream,
    pub retentate_product: Stream,
    pub iterations: usize,
    pub residual: f64,
}

impl CascadeSolution {
    /// `(q_pp, c_pp1, c_pp2, q_rp, c_rp1, c_rp2)`.
    pub fn outputs(&self) -> Vec<f64> {
        let p = self.permeate_product;
        let r = self.retentate_product;
        vec![p.flow, p.conc[0], p.conc[1], r.flow, r.conc[0], r.conc[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Params {
    permeability: f64,
    sieving_base: [f64; 2],
    sieving_slope: [f64; 2],
}

impl Params {
    fn parse(theta: &[f64]) -> Result<Self> {
        if theta.len() != 5 {
            return Err(OedError::DimensionMismatch {
                what: "membrane parameters",
                expected: 5,
                found: theta.len(),
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(OedError::NonFinite("membrane parameters"));
        }
        Ok(Self {
            permeability: theta[0],
            sieving_base: [theta[1], theta[2]],
            sieving_slope: [theta[3], theta[4]],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembraneModel {
    pub elements_per_stage: usize,
}

impl Default for MembraneModel {
    fn default() -> Self {
        Self {
            elements_per_stage: 10,
        }
    }
}

fn check_nonnegative(what: impl FnOnce() -> String, value: f64) -> Result<()> {
    if value < NEGATIVE_TOL || value.is_nan() {
        return Err(OedError::NegativeState {
            what: what(),
            value,
        });
    }
    Ok(())
}

impl MembraneModel {
    pub fn element_area(&self) -> f64 {
        WIDTH * LENGTH / self.elements_per_stage as f64
    }

    /// Solve one element; returns (permeate flow, permeate conc, retentate, sieving).
    fn element(&self, inlet: Stream, prm: &Params) -> Result<(f64, [f64; 2], Stream, [f64; 2])> {
        let a = self.element_area();
        let strength: f64 = (0..2).map(|k| inlet.conc[k] * CHARGES[k] * CHARGES[k]).sum();
        let sieve = [0, 1].map(|j| prm.sieving_base[j] + prm.sieving_slope[j] * strength);
        let rt = GAS_CONSTANT * TEMPERATURE;
        let lp = prm.permeability;
        let q = inlet.flow;
        let c_out = |j: f64| -> [f64; 2] {
            [0, 1].map(|k| q * inlet.conc[k] / (q - a * j * (1.0 - sieve[k])))
        };
        let residual = |j: f64| -> (f64, f64) {
            let c = c_out(j);
            let mut osm = 0.0;
            let mut dosm = 0.0;
            for k in 0..2 {
                let denom = q - a * j * (1.0 - sieve[k]);
                osm += (1.0 - sieve[k]) * c[k];
                dosm += (1.0 - sieve[k]) * q * inlet.conc[k] * a * (1.0 - sieve[k]) / (denom * denom);
            }
            (j - lp * (PRESSURE_DROP - rt * osm), 1.0 + lp * rt * dosm)
        };

        let flux = if lp == 0.0 || q <= 0.0 {
            0.0
        } else {
            let (f0, _) = residual(0.0);
            if f0 >= 0.0 {
                0.0
            } else {
                let mut hi = q / a * (1.0 - 1e-12);
                let (fhi, _) = residual(hi);
                if !(fhi > 0.0) {
                    return Err(OedError::NegativeState {
                        what: "element retentate flow (element permeates its whole feed)".into(),
                        value: q - a * lp * PRESSURE_DROP,
                    });
                }
                let mut lo = 0.0;
                let mut j = (lp * PRESSURE_DROP).min(0.5 * hi);
                for _ in 0..200 {
                    let (f, df) = residual(j);
                    if f > 0.0 {
                        hi = j;
                    } else {
                        lo = j;
                    }
                    let mut next = j - f / df;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    let done = (next - j).abs() <= 1e-15 * j.abs().max(1e-300);
                    j = next;
                    if done || hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                j
            }
        };

        let permeate_flow = a * flux;
        let conc = c_out(flux);
        let retentate = Stream {
            flow: q - permeate_flow,
            conc,
        };
        let permeate_conc = [0, 1].map(|k| sieve[k] * conc[k]);
        Ok((permeate_flow, permeate_conc, retentate, sieve))
    }

    /// Run a stage; `side` joins the retentate entering element `index` (0-based).
    fn stage(
        &self,
        stage_no: usize,
        feed: Stream,
        side: Option<(usize, Stream)>,
        prm: &Params,
    ) -> Result<StageOutput> {
        let mut current = feed;
        let mut perm_flow = 0.0;
        let mut perm_mass = [0.0; 2];
        let mut min_sieving = f64::INFINITY;
        for e in 0..self.elements_per_stage {
            if let Some((idx, s)) = side {
                if idx == e {
                    current = Stream::mix(current, s);
                }
            }
            let (pf, pc, ret, sieve) = self.element(current, prm)?;
            check_nonnegative(|| format!("stage {stage_no} element {} retentate flow", e + 1), ret.flow)?;
            for k in 0..2 {
                check_nonnegative(
                    || format!("stage {stage_no} element {} concentration {}", e + 1, k + 1),
                    ret.conc[k],
                )?;
                perm_mass[k] += pf * pc[k];
            }
            min_sieving = min_sieving.min(sieve[0]).min(sieve[1]);
            perm_flow += pf;
            current = ret;
        }
        let conc = if perm_flow > 0.0 {
            perm_mass.map(|m| m / perm_flow)
        } else {
            [0.0; 2]
        };
        Ok(StageOutput {
            permeate: Stream {
                flow: perm_flow,
                conc,
            },
            retentate: current,
            min_sieving,
        })
    }

    /// Converge the cascade for design `(q_df, q_ff, c_ff1, c_ff2)`.
    pub fn solve(&self, design: &[f64], theta: &[f64]) -> Result<CascadeSolution> {
        if design.len() != 4 {
            return Err(OedError::DimensionMismatch {
                what: "membrane design",
                expected: 4,
                found: design.len(),
            });
        }
        if design.iter().any(|d| !(d.is_finite() && *d >= 0.0)) || design[0] + design[1] <= 0.0 {
            return Err(OedError::InvalidInput(format!(
                "membrane design must be nonnegative with positive total flow, got {design:?}"
            )));
        }
        let prm = Params::parse(theta)?;
        let diafiltrate = Stream {
            flow: design[0],
            conc: [0.0; 2],
        };
        let fresh = Stream {
            flow: design[1],
            conc: [design[2], design[3]],
        };
        let total = design[0] + design[1];
        let dilution = design[1] / total;
        let mixed_conc = [design[2] * dilution, design[3] * dilution];
        let nominal_permeate =
            self.elements_per_stage as f64 * self.element_area() * prm.permeability * PRESSURE_DROP;
        let mut retentate_3 = Stream {
            flow: total,
            conc: mixed_conc,
        };
        let mut permeate_1 = Stream {
            flow: nominal_permeate.max(0.0),
            conc: mixed_conc,
        };
        let side_index = self.elements_per_stage - 1;
        let mut residual = f64::INFINITY;
        for iteration in 1..=MAX_ITERATIONS {
            let s2 = self.stage(2, Stream::mix(retentate_3, permeate_1), None, &prm)?;
            let s1 = self.stage(1, s2.retentate, None, &prm)?;
            let s3 = self.stage(
                3,
                Stream::mix(diafiltrate, s2.permeate),
                Some((side_index, fresh)),
                &prm,
            )?;
            let old = [retentate_3.as_vec(), permeate_1.as_vec()].concat();
            let new = [s3.retentate.as_vec(), s1.permeate.as_vec()].concat();
            residual = old
                .iter()
                .zip(&new)
                .map(|(&o, &n)| relative_change(o, n))
                .fold(0.0, f64::max);
            if residual < TEAR_TOL {
                return Ok(CascadeSolution {
                    stages: [s1, s2, s3],
                    permeate_product: s3.permeate,
                    retentate_product: s1.retentate,
                    iterations: iteration,
                    residual,
                });
            }
            retentate_3 = damp(retentate_3, s3.retentate);
            permeate_1 = damp(permeate_1, s1.permeate);
        }
        Err(OedError::RecycleNotConverged {
            iterations: MAX_ITERATIONS,
            residual,
        })
    }

    pub fn simulate(&self, design: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve(design, theta)?.outputs())
    }

    pub fn experiment(&self) -> LabeledExperiment {
        let model = self.clone();
        let t = TRUE_PARAMETERS;
        LabeledExperiment::new(
            "membrane",
            Arc::new(move |d: &[f64], th: &[f64]| model.simulate(d, th)),
            &[
                ("q_df", DESIGN_BOUNDS[0]),
                ("q_ff", DESIGN_BOUNDS[1]),
                ("c_ff_1", DESIGN_BOUNDS[2]),
                ("c_ff_2", DESIGN_BOUNDS[3]),
            ],
            &[
                ("q_pp", FLOW_SIGMA),
                ("c_pp_1", CONC_SIGMA),
                ("c_pp_2", CONC_SIGMA),
                ("q_rp", FLOW_SIGMA),
                ("c_rp_1", CONC_SIGMA),
                ("c_rp_2", CONC_SIGMA),
            ],
            &[
                ("L_p", t[0]),
                ("S0_1", t[1]),
                ("S0_2", t[2]),
                ("delta_1", t[3]),
                ("delta_2", t[4]),
            ],
        )
        .expect("static labels are valid")
    }
}

/// Strict relative change; an exact zero target is only met by an exact zero.
fn relative_change(old: f64, new: f64) -> f64 {
    if new == old {
        0.0
    } else if new == 0.0 {
        f64::INFINITY
    } else {
        (new - old).abs() / new.abs()
    }
}

fn damp(old: Stream, new: Stream) -> Stream {
    let mix = |o: f64, n: f64| o + DAMPING * (n - o);
    Stream {
        flow: mix(old.flow, new.flow),
        conc: [mix(old.conc[0], new.conc[0]), mix(old.conc[1], new.conc[1])],
    }
}

/// Relative closure of the solvent and per-ion balances.
pub fn balance_errors(design: &[f64], sol: &CascadeSolution) -> [f64; 3] {
    let p = sol.permeate_product;
    let r = sol.retentate_product;
    let feed = design[0] + design[1];
    let solvent = (feed - p.flow - r.flow).abs() / feed;
    let ion = |k: usize| {
        let inflow = design[1] * design[2 + k];
        let out = p.flow * p.conc[k] + r.flow * r.conc[k];
        if inflow == 0.0 {
            out.abs()
        } else {
            (inflow - out).abs() / inflow
        }
    };
    [solvent, ion(0), ion(1)]
}
