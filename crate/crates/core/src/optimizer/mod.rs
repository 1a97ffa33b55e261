//! Search over which track slots host the rotatable surfaces.

mod amcmc;
mod exhaustive;
mod indicator;
mod proposal;
mod schemes;

pub use amcmc::{
    acceptance_probability, acceptance_ratio, amcmc_optimize, log_xi, step_size,
    update_probabilities, AmcmcOutcome, AmcmcParams, OptimizerState, TraceRecord,
};
pub use exhaustive::{binomial, exhaustive_search, Combinations, SearchOutcome};
pub use indicator::IndicatorVector;
pub use proposal::{log_proposal_unnorm, proposal_sample, Proposal};
pub use schemes::{
    nearest_slots, scheme1, scheme1_slots, scheme2, scheme2_slots, scheme3, scheme3_scenario,
    SchemeResult,
};
