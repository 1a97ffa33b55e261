//! Single runs, power sweeps and method comparisons over one shared batch.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{config_hash, ScenarioConfig};
use crate::capacity::{average_capacity, CapacityEstimate, SlotObjective};
use crate::error::{Error, Result};
use crate::optimizer::{amcmc_optimize, binomial, exhaustive_search, scheme1, scheme2, scheme3, TraceRecord};
use crate::population::{generate_batch, RealizationBatch};
use crate::rng::{substream, Stream};

/// Rotation decision procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Amcmc,
    Esm,
    Scheme1,
    Scheme2,
    Scheme3,
    /// Evaluate exactly these surface azimuths, radians.
    Fixed(Vec<f64>),
}

impl Method {
    /// Methods run by [`compare`], in output order.
    pub const COMPARED: [Method; 5] = [
        Method::Amcmc,
        Method::Esm,
        Method::Scheme1,
        Method::Scheme2,
        Method::Scheme3,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Amcmc => "amcmc",
            Method::Esm => "esm",
            Method::Scheme1 => "scheme1",
            Method::Scheme2 => "scheme2",
            Method::Scheme3 => "scheme3",
            Method::Fixed(_) => "fixed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Parses a label; `fixed` must be followed by a rotation list
    /// through [`Method::Fixed`] directly and is rejected here.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amcmc" => Ok(Method::Amcmc),
            "esm" => Ok(Method::Esm),
            "scheme1" => Ok(Method::Scheme1),
            "scheme2" => Ok(Method::Scheme2),
            "scheme3" => Ok(Method::Scheme3),
            "fixed" => Err(Error::InvalidArgument(
                "method `fixed` needs an explicit rotation list".into(),
            )),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}`; expected amcmc, esm, scheme1, scheme2, scheme3 or fixed"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub p0_w: f64,
    /// Surface azimuths, radians; empty for the sector-only scheme.
    pub rotations: Vec<f64>,
    /// Grid slots behind `rotations`, when they come from the grid.
    pub slots: Vec<usize>,
    pub estimate: CapacityEstimate,
    pub runtime_s: f64,
    pub seed: u64,
    pub config_hash: String,
    /// Per outer iteration records; only filled by AMCMC.
    pub trace: Vec<TraceRecord>,
    /// Distinct candidate evaluations, for the search methods.
    pub evaluations: Option<usize>,
}

/// A validated scenario with its realization batch. The slot objective is
/// built on first use and shared by the search methods.
pub struct Experiment {
    scenario: ScenarioConfig,
    batch: RealizationBatch,
    hash: String,
    objective: OnceLock<SlotObjective>,
}

impl Experiment {
    /// Validates `scenario` and samples its batch from the master seed.
    pub fn new(scenario: ScenarioConfig) -> Result<Self> {
        scenario.validate()?;
        let batch = generate_batch(
            &scenario.regions()?,
            &scenario.geometry,
            scenario.realizations,
            scenario.seed,
        )?;
        Self::with_batch(scenario, batch)
    }

    /// Uses a given batch instead of sampling one.
    pub fn with_batch(scenario: ScenarioConfig, batch: RealizationBatch) -> Result<Self> {
        scenario.validate()?;
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty realization batch".into()));
        }
        Ok(Self {
            hash: config_hash(&scenario),
            scenario,
            batch,
            objective: OnceLock::new(),
        })
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn batch(&self) -> &RealizationBatch {
        &self.batch
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn objective(&self) -> Result<&SlotObjective> {
        if let Some(o) = self.objective.get() {
            return Ok(o);
        }
        let built = SlotObjective::new(&self.scenario, &self.batch)?;
        Ok(self.objective.get_or_init(|| built))
    }

    pub fn run(&self, method: &Method) -> Result<RunReport> {
        let started = Instant::now();
        let sc = &self.scenario;
        let mut trace = Vec::new();
        let mut evaluations = None;
        let (rotations, slots, estimate) = match method {
            Method::Amcmc => {
                let objective = self.objective()?;
                let before = objective.evaluations();
                let mut proposal_rng = substream(sc.seed, Stream::Proposal);
                let mut chain_rng = substream(sc.seed, Stream::Chain);
                let out = amcmc_optimize(objective, &sc.optimizer, &mut proposal_rng, &mut chain_rng)?;
                evaluations = Some(objective.evaluations() - before);
                trace = out.trace;
                let support = out.best.support();
                (objective.rotations_of(&support), support, out.estimate)
            }
            Method::Esm => {
                // Refuse before paying for the slot precomputation.
                let candidates = binomial(sc.slots, sc.surfaces);
                if candidates > sc.search.enumeration_cap as u128 {
                    return Err(Error::EnumerationCap {
                        candidates,
                        cap: sc.search.enumeration_cap,
                    });
                }
                let objective = self.objective()?;
                let out = exhaustive_search(objective, sc.search.enumeration_cap)?;
                evaluations = Some(out.evaluated);
                let support = out.best.support();
                (objective.rotations_of(&support), support, out.estimate)
            }
            Method::Scheme1 | Method::Scheme2 | Method::Scheme3 => {
                let r = match method {
                    Method::Scheme1 => scheme1(sc, &self.batch)?,
                    Method::Scheme2 => scheme2(sc, &self.batch)?,
                    _ => scheme3(sc, &self.batch)?,
                };
                (r.rotations, r.slots, r.capacity)
            }
            Method::Fixed(rotations) => {
                let estimate = average_capacity(&self.batch, rotations, sc)?;
                (rotations.clone(), Vec::new(), estimate)
            }
        };
        Ok(RunReport {
            method: method.label().to_string(),
            p0_w: sc.rf.p0,
            rotations,
            slots,
            estimate,
            runtime_s: started.elapsed().as_secs_f64(),
            seed: sc.seed,
            config_hash: self.hash.clone(),
            trace,
            evaluations,
        })
    }
}

/// Samples the batch from the scenario seed and runs one method.
pub fn run_experiment(scenario: &ScenarioConfig, method: &Method) -> Result<RunReport> {
    Experiment::new(scenario.clone())?.run(method)
}

fn check_powers(powers_w: &[f64]) -> Result<()> {
    if powers_w.is_empty() {
        return Err(Error::InvalidArgument("power sweep needs at least one power".into()));
    }
    if let Some(p) = powers_w.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::InvalidArgument(format!("transmit power must be finite and > 0 W, got {p}")));
    }
    Ok(())
}

fn at_power(scenario: &ScenarioConfig, batch: &RealizationBatch, p0: f64) -> Result<Experiment> {
    let mut sc = scenario.clone();
    sc.rf.p0 = p0;
    Experiment::with_batch(sc, batch.clone())
}

/// Reruns `method` at every power (watts) on one batch; rows follow the
/// input order.
pub fn power_sweep(scenario: &ScenarioConfig, method: &Method, powers_w: &[f64]) -> Result<Vec<RunReport>> {
    check_powers(powers_w)?;
    let base = Experiment::new(scenario.clone())?;
    powers_w
        .iter()
        .map(|&p| at_power(scenario, base.batch(), p)?.run(method))
        .collect()
}

/// Runs every method at every power (the scenario's own power when `powers_w`
/// is `None`). Methods that do not apply, or exhaustive search above the
/// enumeration cap, are skipped with a warning. Rows are grouped by power.
pub fn compare(scenario: &ScenarioConfig, powers_w: Option<&[f64]>) -> Result<Vec<RunReport>> {
    let own = [scenario.rf.p0];
    let powers = powers_w.unwrap_or(&own);
    check_powers(powers)?;
    let base = Experiment::new(scenario.clone())?;
    let mut reports = Vec::new();
    for &p in powers {
        let exp = at_power(scenario, base.batch(), p)?;
        for method in &Method::COMPARED {
            match exp.run(method) {
                Ok(r) => reports.push(r),
                Err(e @ (Error::SchemeInapplicable(_) | Error::EnumerationCap { .. })) => {
                    log::warn!("skipping {method} at P0 = {p} W: {e}");
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ArrayShape;
    use crate::optimizer::Combinations;

    fn small() -> ScenarioConfig {
        let mut sc = ScenarioConfig::paper_default();
        sc.slots = 10;
        sc.surfaces = 3;
        sc.surface_shape = ArrayShape::new(2, 2);
        sc.fpa_shape = ArrayShape::new(2, 2);
        sc.users.mean_users = 12.0;
        sc.realizations = 3;
        sc.optimizer.inner_iterations = 5;
        sc.optimizer.outer_iterations = 3;
        sc
    }

    #[test]
    fn esm_matches_enumeration_oracle() {
        let mut sc = small();
        sc.surfaces = 2;
        let exp = Experiment::new(sc.clone()).unwrap();
        let report = exp.run(&Method::Esm).unwrap();
        let grid = sc.grid().unwrap();
        let mut best = (f64::NEG_INFINITY, vec![]);
        for support in Combinations::new(10, 2) {
            let c = average_capacity(exp.batch(), &grid.angles_of(&support), &sc).unwrap().mean_bps_hz;
            if c > best.0 {
                best = (c, support);
            }
        }
        assert_eq!(report.slots, best.1);
        assert!((report.estimate.mean_bps_hz - best.0).abs() < 1e-9 * best.0);
        assert_eq!(report.evaluations, Some(binomial(10, 2) as usize));
    }

    #[test]
    fn fixed_rotations_are_evaluated_verbatim() {
        let sc = small();
        let rot = vec![0.3, 2.0, 5.0];
        let report = run_experiment(&sc, &Method::Fixed(rot.clone())).unwrap();
        let batch = generate_batch(&sc.regions().unwrap(), &sc.geometry, sc.realizations, sc.seed).unwrap();
        assert_eq!(report.rotations, rot);
        assert_eq!(report.estimate, average_capacity(&batch, &rot, &sc).unwrap());
    }

    #[test]
    fn reruns_are_identical() {
        let sc = small();
        for m in [Method::Amcmc, Method::Scheme1] {
            let mut a = run_experiment(&sc, &m).unwrap();
            let mut b = run_experiment(&sc, &m).unwrap();
            a.runtime_s = 0.0;
            b.runtime_s = 0.0;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sweep_rows_follow_input() {
        let sc = small();
        let single = power_sweep(&sc, &Method::Scheme3, &[sc.rf.p0]).unwrap();
        assert_eq!(single[0].estimate, run_experiment(&sc, &Method::Scheme3).unwrap().estimate);
        let powers = [1e-4, 1e-3, 1e-2];
        let rows = power_sweep(&sc, &Method::Fixed(vec![1.0, 4.0]), &powers).unwrap();
        assert_eq!(rows.iter().map(|r| r.p0_w).collect::<Vec<_>>(), powers);
        assert!(rows.windows(2).all(|w| w[1].estimate.ase > w[0].estimate.ase));
        assert!(power_sweep(&sc, &Method::Scheme3, &[]).is_err());
    }

    #[test]
    fn compare_skips_inapplicable() {
        let mut sc = small();
        sc.search.enumeration_cap = 10;
        // Three surfaces split 1:2:3 is not integral, so scheme2 is skipped.
        let rows = compare(&sc, None).unwrap();
        let labels: Vec<_> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(labels, vec!["amcmc", "scheme1", "scheme3"]);
    }

    #[test]
    fn method_labels_parse() {
        for m in &Method::COMPARED {
            assert_eq!(&m.label().parse::<Method>().unwrap(), m);
        }
        assert!("fixed".parse::<Method>().is_err());
        assert!("bogus".parse::<Method>().is_err());
    }
}
