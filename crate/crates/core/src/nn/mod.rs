//! Hand-written differentiable primitives with explicit backward passes.

mod activation;
mod dense;
mod gradcheck;
mod lstm;
mod optim;
mod params;

pub use activation::{
    bce, bce_grad, bernoulli_log_prob, bernoulli_log_prob_grad_logit, clamp_prob, sigmoid,
    sigmoid_grad, PROB_EPS,
};
pub use dense::Dense;
pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{Lstm, LstmState, LstmTape};
pub use optim::{Adam, AdamConfig};
pub use params::{Param, ParamId, ParamStore, Parameterized};
