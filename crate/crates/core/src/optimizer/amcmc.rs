//! Adaptive MCMC with a Metropolized independence sampler.
//!
//! The target over feasible indicators is `xi(eps) ∝ exp(C(eps) / tau)`;
//! the proposal is the conditioned Bernoulli product of [`proposal_sample`],
//! whose probabilities are pulled toward the chain's slot occupancy after
//! every outer iteration with step `1 / (N_s + t)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{log_proposal_unnorm, proposal_sample, IndicatorVector};
use crate::capacity::{CapacityEstimate, SlotObjective};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmcmcParams {
    /// Rate constant of the target density, bps/Hz.
    pub tau: f64,
    /// Chain steps per outer iteration (`N_s`).
    pub inner_iterations: usize,
    /// Proposal updates (`T`).
    pub outer_iterations: usize,
    /// Proposal probabilities are clamped to `[p_floor, 1 - p_floor]`.
    pub p_floor: f64,
    pub max_proposal_retries: usize,
}

impl Default for AmcmcParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            inner_iterations: 20,
            outer_iterations: 10,
            p_floor: 0.01,
            max_proposal_retries: 1000,
        }
    }
}

impl AmcmcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::config("optimizer.tau", "must be finite and > 0"));
        }
        if self.inner_iterations == 0 {
            return Err(Error::config("optimizer.inner_iterations", "must be >= 1"));
        }
        if self.outer_iterations == 0 {
            return Err(Error::config("optimizer.outer_iterations", "must be >= 1"));
        }
        if !(self.p_floor > 0.0 && self.p_floor < 0.5) {
            return Err(Error::config("optimizer.p_floor", "must lie in (0, 0.5)"));
        }
        if self.max_proposal_retries == 0 {
            return Err(Error::config("optimizer.max_proposal_retries", "must be >= 1"));
        }
        Ok(())
    }
}

/// Log of the unnormalized target, `C(eps) / tau`.
pub fn log_xi(objective: &SlotObjective, eps: &IndicatorVector, tau: f64) -> Result<f64> {
    Ok(objective.capacity_of_indicator(eps)? / tau)
}

/// `min{1, xi(new) Gamma(cur) / (xi(cur) Gamma(new))}` from log quantities.
pub fn acceptance_ratio(log_xi_new: f64, log_xi_cur: f64, log_q_new: f64, log_q_cur: f64) -> f64 {
    let log_ratio = (log_xi_new - log_xi_cur) + (log_q_cur - log_q_new);
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

pub fn acceptance_probability(
    objective: &SlotObjective,
    tau: f64,
    eps_new: &IndicatorVector,
    eps_cur: &IndicatorVector,
    p: &[f64],
) -> Result<f64> {
    if eps_new == eps_cur {
        return Ok(1.0);
    }
    Ok(acceptance_ratio(
        log_xi(objective, eps_new, tau)?,
        log_xi(objective, eps_cur, tau)?,
        log_proposal_unnorm(eps_new, p),
        log_proposal_unnorm(eps_cur, p),
    ))
}

/// Step size used by the `outer`-th (1-based) proposal update.
pub fn step_size(outer: usize, inner_iterations: usize) -> f64 {
    1.0 / (inner_iterations + outer) as f64
}

/// Moves `p` toward the mean slot occupancy of `samples` (the `N_s` chain
/// states after the start state) and clamps. `t` is the 0-based index of the
/// outer iteration that produced the samples. Returns the step size used.
pub fn update_probabilities(p: &mut [f64], samples: &[IndicatorVector], t: usize, p_floor: f64) -> f64 {
    let n_s = samples.len();
    let alpha = step_size(t + 1, n_s);
    for (l, pl) in p.iter_mut().enumerate() {
        let occupancy = samples.iter().filter(|e| e.get(l)).count() as f64 / n_s as f64;
        *pl = (*pl + alpha * (occupancy - *pl)).clamp(p_floor, 1.0 - p_floor);
    }
    alpha
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// 1-based outer iteration.
    pub outer: usize,
    pub alpha: f64,
    pub best_capacity_bps_hz: f64,
    pub acceptance_rate: f64,
    pub fallback_draws: usize,
    /// Proposal probabilities after this iteration's update.
    pub p: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub p: Vec<f64>,
    pub current: IndicatorVector,
    pub best: IndicatorVector,
    pub best_score: f64,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct AmcmcOutcome {
    pub best: IndicatorVector,
    pub estimate: CapacityEstimate,
    pub trace: Vec<TraceRecord>,
}

/// Runs the adaptive chain. Proposals draw from `proposal_rng`, acceptance
/// uniforms from `chain_rng`.
pub fn amcmc_optimize<P: Rng + ?Sized, C: Rng + ?Sized>(
    objective: &SlotObjective,
    params: &AmcmcParams,
    proposal_rng: &mut P,
    chain_rng: &mut C,
) -> Result<AmcmcOutcome> {
    let slots = objective.slots();
    let surfaces = objective.surfaces();
    if surfaces >= slots {
        return Err(Error::config(
            "track.surfaces",
            format!("need fewer surfaces than slots, got {surfaces} of {slots}"),
        ));
    }

    let start = IndicatorVector::leading(slots, surfaces);
    let start_score = objective.capacity_of_indicator(&start)?;
    let mut state = OptimizerState {
        p: vec![0.5; slots],
        current: start.clone(),
        best: start,
        best_score: start_score,
        trace: Vec::with_capacity(params.outer_iterations),
    };

    for t in 0..params.outer_iterations {
        state.current = state.best.clone();
        let mut current_score = state.best_score;
        let mut current_log_q = log_proposal_unnorm(&state.current, &state.p);
        let mut samples = Vec::with_capacity(params.inner_iterations);
        let mut accepted = 0usize;
        let mut fallbacks = 0usize;

        for _ in 0..params.inner_iterations {
            let draw = proposal_sample(&state.p, surfaces, proposal_rng, params.max_proposal_retries);
            fallbacks += usize::from(draw.used_fallback);
            let candidate = draw.indicator;
            let candidate_score = objective.capacity_of_indicator(&candidate)?;
            let candidate_log_q = log_proposal_unnorm(&candidate, &state.p);
            let p_ac = acceptance_ratio(
                candidate_score / params.tau,
                current_score / params.tau,
                candidate_log_q,
                current_log_q,
            );
            let u: f64 = chain_rng.random();
            if u < p_ac {
                state.current = candidate;
                current_score = candidate_score;
                current_log_q = candidate_log_q;
                accepted += 1;
            }
            if current_score > state.best_score {
                state.best = state.current.clone();
                state.best_score = current_score;
            }
            samples.push(state.current.clone());
        }

        let alpha = update_probabilities(&mut state.p, &samples, t, params.p_floor);
        if fallbacks > 0 {
            log::debug!("outer iteration {}: {fallbacks} proposals used the conditional sampler", t + 1);
        }
        state.trace.push(TraceRecord {
            outer: t + 1,
            alpha,
            best_capacity_bps_hz: state.best_score,
            acceptance_rate: accepted as f64 / params.inner_iterations as f64,
            fallback_draws: fallbacks,
            p: state.p.clone(),
        });
    }

    let estimate = objective.estimate(&state.best.support())?;
    Ok(AmcmcOutcome {
        best: state.best,
        estimate,
        trace: state.trace,
    })
}
