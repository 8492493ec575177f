//! Reading-progression tracking from noisy eye-gaze fixations.
//!
//! The pipeline has two stages: an HMM/Viterbi line detector assigns each
//! fixation to a text line from its y-coordinate, then a per-line least
//! squares batch estimator reconstructs a smooth horizontal trajectory
//! under a constant-acceleration motion model, removing false saccades.
//! A seeded simulator and an NRMSE evaluation harness round out the crate.

pub mod detect;
pub mod eval;
pub mod io;
pub mod sim;
pub mod track;
pub mod types;

pub use detect::{detect_lines, emission_logprob, HmmParams};
pub use eval::{evaluate_dataset, matched_indices, nrmse_page, EvalReport, PageResult};
pub use sim::{
    add_noise, canonical_sigma_levels, generate_dataset, generate_truth, SimConfig, SimulatedPage,
};
pub use track::{
    design_row, fit_batch, propagate, track_page, BatchEstimate, FitStatus, MotionModel,
    SaccadeState,
};
pub use types::{
    split_into_batches, Error, GazeSample, GroundTruth, LabeledSample, LineBatch, PageGeometry,
};
