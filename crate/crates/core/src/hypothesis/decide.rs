use serde::{Deserialize, Serialize};

use crate::dist::{Decision, ThreeWayDecision};
use crate::error::{invalid, Error, Result};
use crate::samplers::InfimumDrawSet;

/// Fraction of draws whose infimum dissimilarity is strictly below `epsilon`.
pub fn posterior_pragmatic_probability(draws: &InfimumDrawSet, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", format!("must be positive, got {epsilon}")));
    }
    if draws.is_empty() {
        return Err(Error::Empty("infimum draw set"));
    }
    let inside = draws.values().iter().filter(|&&v| v < epsilon).count();
    Ok(inside as f64 / draws.n_draws() as f64)
}

/// Rejects when the posterior probability of the pragmatic hypothesis is at
/// most `alpha`.
pub fn protest_decide(prob: f64, alpha: f64) -> Decision {
    if prob <= alpha {
        Decision::Reject
    } else {
        Decision::NotReject
    }
}

pub fn three_way_decide(prob: f64, alpha1: f64, alpha2: f64) -> Result<ThreeWayDecision> {
    if !(0.0..=1.0).contains(&alpha1) || !(0.0..=1.0).contains(&alpha2) {
        return Err(invalid("alpha", "thresholds must lie in [0, 1]"));
    }
    if alpha1 > alpha2 {
        return Err(invalid("alpha2", format!("alpha1 = {alpha1} exceeds alpha2 = {alpha2}")));
    }
    Ok(if prob <= alpha1 {
        ThreeWayDecision::Reject
    } else if prob <= alpha2 {
        ThreeWayDecision::Undecided
    } else {
        ThreeWayDecision::Accept
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Verdict {
    TwoWay(Decision),
    ThreeWay(ThreeWayDecision),
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::TwoWay(d) => d.fmt(f),
            Verdict::ThreeWay(d) => d.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub infimum_draws: InfimumDrawSet,
    pub epsilon: f64,
    pub alpha: f64,
    /// Upper threshold of the three-way rule, when used.
    pub alpha2: Option<f64>,
    pub posterior_probability: f64,
    pub decision: Verdict,
}

impl TestReport {
    /// Aggregates the draws and applies the two-way rule, or the three-way
    /// rule when `alpha2` is given.
    pub fn decide(infimum_draws: InfimumDrawSet, epsilon: f64, alpha: f64, alpha2: Option<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        let prob = posterior_pragmatic_probability(&infimum_draws, epsilon)?;
        let decision = match alpha2 {
            Some(a2) => Verdict::ThreeWay(three_way_decide(prob, alpha, a2)?),
            None => Verdict::TwoWay(protest_decide(prob, alpha)),
        };
        Ok(Self {
            infimum_draws,
            epsilon,
            alpha,
            alpha2,
            posterior_probability: prob,
            decision,
        })
    }
}
