use crate::error::{Error, Result};
use crate::scalar::Real;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

pub fn sigmoid<S: Real>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// Derivative of the sigmoid expressed through its output.
pub fn sigmoid_grad<S: Real>(y: S) -> S {
    y * (S::one() - y)
}

/// Returns the clamped probability and whether the clamp was active.
pub fn clamp_prob<S: Real>(p: S) -> (S, bool) {
    let lo = S::lit(PROB_EPS);
    let hi = S::one() - lo;
    if p < lo {
        (lo, true)
    } else if p > hi {
        (hi, true)
    } else {
        (p, false)
    }
}

/// Binary cross-entropy `-(y ln p + (1 - y) ln(1 - p))` on the clamped `p`.
pub fn bce<S: Real>(p: S, y: S) -> Result<S> {
    if !(p >= S::zero() && p <= S::one()) {
        return Err(Error::Numeric(format!("probability {p} outside [0, 1]")));
    }
    let (p, _) = clamp_prob(p);
    Ok(-(y * p.ln() + (S::one() - y) * (S::one() - p).ln()))
}

/// `d bce / d p`; zero where the clamp is active.
pub fn bce_grad<S: Real>(p: S, y: S) -> S {
    let (pc, clamped) = clamp_prob(p);
    if clamped {
        return S::zero();
    }
    -(y / pc) + (S::one() - y) / (S::one() - pc)
}

/// `ln P(a | p)` for a Bernoulli action, with clamping.
pub fn bernoulli_log_prob<S: Real>(p: S, action: bool) -> S {
    let (p, _) = clamp_prob(p);
    if action {
        p.ln()
    } else {
        (S::one() - p).ln()
    }
}

/// `d ln P(a | sigmoid(z)) / d z`, i.e. `a - p` away from the clamp.
pub fn bernoulli_log_prob_grad_logit<S: Real>(p: S, action: bool) -> S {
    if clamp_prob(p).1 {
        return S::zero();
    }
    if action {
        S::one() - p
    } else {
        -p
    }
}
