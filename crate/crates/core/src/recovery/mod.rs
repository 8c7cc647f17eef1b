//! Sparse decoding by basis pursuit and the phase-transition harness.

mod bp;
mod phase;

pub use bp::{bp_solve, bp_solve_with, recovery_success, BpOptions, BpSolution};
pub use phase::{
    phase_transition, signal_seed, sparsifier, trial_mask, trial_sampling, trial_system, PhaseCell, PhaseTransitionConfig,
    PhaseTransitionResult, SamplingLevel, TrialSystem,
};
