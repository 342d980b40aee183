//! Two-scale pairings of `eps` trajectories against oscillating test
//! functions, convergence studies along `eps` ladders and the first-order
//! corrector.

mod battery;
mod pairing;
mod study;

pub use battery::{default_battery, FastFactor, SpaceFactor, TestFunction, TimeFactor};
pub use pairing::{
    pair_battery, pair_limit, pair_limit_battery, pair_sequence, LimitProfile, SequencePairing,
    MIN_LIMIT_THETA_STEPS, SAMPLES_PER_FAST_PERIOD,
};
pub use study::{
    convergence_from_runs, convergence_study, convergence_with_limit, corrector_from_runs, corrector_study,
    corrector_with_limit, synthetic_run, CorrectorPairingRow, CorrectorRow, InitialState, PairingRow,
    TwoScaleProblem, TwoScaleReport, CORRECTOR_RATIO_BOUND, MIN_LADDER,
};
