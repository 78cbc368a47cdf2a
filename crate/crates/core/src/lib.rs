// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cs;
pub mod energy;
pub mod error;
pub mod field;
pub mod model;
pub mod recon;
pub mod scheduler;
pub mod simulator;
pub mod synth;

pub use error::{DassError, Result};
pub use field::{
    add_noise, add_noise_seeded, apply_pattern, rmse, rng_from_seed, rng_stream, FieldBlock,
    Measurement, SamplingPattern, SignalModel, SimRng,
};
