use serde::{Deserialize, Serialize};

use crate::dist::StepCdf;
use crate::error::{invalid, Result};

/// `H0: F^{-1}(p0) = x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileHypothesis {
    pub x0: f64,
    pub p0: f64,
}

impl QuantileHypothesis {
    pub fn new(x0: f64, p0: f64) -> Result<Self> {
        if !x0.is_finite() {
            return Err(invalid("x0", "must be finite"));
        }
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(invalid("p0", format!("must lie in (0, 1), got {p0}")));
        }
        Ok(Self { x0, p0 })
    }
}

/// L1 distance from `P` to the closest CDF whose `p0`-quantile is `x0`.
///
/// The closest such CDF agrees with `P` except that it is held at `p0`
/// between `P^{-1}(p0)` and `x0`, so the infimum is the area between `P`
/// and the level `p0` over that interval.
pub fn quantile_infimum(p: &StepCdf, hyp: &QuantileHypothesis) -> Result<f64> {
    let q = p.quantile(hyp.p0)?;
    let (a, b) = if q <= hyp.x0 { (q, hyp.x0) } else { (hyp.x0, q) };
    Ok(p.integrate_abs_deviation(hyp.p0, a, b))
}
