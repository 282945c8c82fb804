//! Ground-state solvers: exact enumeration and simulated annealing, with
//! success-probability and time-to-solution estimates.

mod eliminate;
mod exhaustive;
mod model;
mod sa;
mod tts;

pub use eliminate::{eliminate, ELIMINATION_WIDTH_LIMIT};
pub use exhaustive::{
    exhaustive_ground_state, minimize_given, qubo_ground_state, GroundStates, EXHAUSTIVE_VARIABLE_LIMIT,
    GROUND_TOLERANCE,
};
pub use sa::{
    max_incremental_drift, scaled_betas, simulated_anneal, success_probability, AnnealRead, AnnealSchedule,
    MatchRule, SuccessEstimate, SweepOrder, DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_NUM_READS, ENERGY_MATCH_TOLERANCE,
};
pub use tts::{
    anneal_effort, tts, tts_from_estimate, tts_sweep, tts_with_error, TtsEstimate, TtsRow, TtsStatus, TtsSweep,
    TtsSweepConfig, DEFAULT_TARGET_PROBABILITY,
};
