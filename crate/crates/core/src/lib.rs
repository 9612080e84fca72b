//! Weakly supervised video summarization with a two-level policy.
//!
//! A Manager LSTM reads each block of `n` frames and emits a subgoal plus a
//! prediction of whether the block holds a keyframe; it is trained from
//! block-level binary labels alone. A Worker LSTM, conditioned on the
//! subgoals, scores every frame and is trained with REINFORCE on a mix of a
//! diversity/representativeness reward and a sub-reward that ties its
//! per-block mean score to the Manager's prediction.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar for common use.

pub mod data;
pub mod error;
pub mod eval;
pub mod nn;
pub mod policy;
pub mod rewards;
pub mod scalar;
pub mod seeding;
pub mod segment;
pub mod summary;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset64 = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type Video64 = data::Video<f64>;
pub type Video32 = data::Video<f32>;
pub type Policy64 = policy::HierPolicy<f64>;
pub type Policy32 = policy::HierPolicy<f32>;
pub type Trainer64 = train::Trainer<f64>;
pub type Trainer32 = train::Trainer<f32>;
