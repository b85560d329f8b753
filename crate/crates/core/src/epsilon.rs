//! Threshold calibration and decision-region curves.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dist::Decision;
use crate::error::{invalid, Error, Result};
use crate::samplers::InfimumDrawSet;

fn sorted_nonempty(draws: &InfimumDrawSet) -> Result<Vec<f64>> {
    if draws.is_empty() {
        return Err(Error::Empty("infimum draw set"));
    }
    Ok(draws.sorted())
}

/// Lower `delta`-quantile of the prior infimum draws: the `ceil(delta N)`-th
/// order statistic.
pub fn epsilon_from_prior(draws: &InfimumDrawSet, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1], got {delta}")));
    }
    let s = sorted_nonempty(draws)?;
    let n = s.len();
    // smallest k with k / N >= delta, evaluated in the same arithmetic as the
    // posterior probability so products like 0.3 * 10 do not round up
    let mut k = ((delta * n as f64).ceil() as usize).clamp(1, n);
    while k > 1 && (k - 1) as f64 / n as f64 >= delta {
        k -= 1;
    }
    while k < n && (k as f64 / n as f64) < delta {
        k += 1;
    }
    Ok(s[k - 1])
}

/// Boundary of rejection at level `alpha`: the `(floor(alpha N) + 1)`-th order
/// statistic. At that value the posterior probability is still at most
/// `alpha`; any larger threshold past the tie block gives non-rejection.
pub fn epsilon_from_reference(draws: &InfimumDrawSet, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("must lie in [0, 1), got {alpha}")));
    }
    let s = sorted_nonempty(draws)?;
    let n = s.len();
    // largest m with m / N <= alpha
    let mut m = ((alpha * n as f64).floor() as usize).min(n - 1);
    while m > 0 && m as f64 / n as f64 > alpha {
        m -= 1;
    }
    while m + 1 < n && ((m + 1) as f64 / n as f64) <= alpha {
        m += 1;
    }
    Ok(s[m])
}

/// Several reference studies: the largest of their thresholds.
pub fn epsilon_from_references(studies: &[InfimumDrawSet], alpha: f64) -> Result<f64> {
    if studies.is_empty() {
        return Err(Error::Empty("reference studies"));
    }
    studies
        .iter()
        .map(|d| epsilon_from_reference(d, alpha))
        .try_fold(f64::NEG_INFINITY, |acc, e| Ok(acc.max(e?)))
}

/// Largest dissimilarity over pairs judged practically equivalent.
pub fn epsilon_from_examples<T>(pairs: &[(T, T)], evaluate: impl Fn(&T, &T) -> Result<f64>) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("example pairs"));
    }
    let mut best = 0.0f64;
    for (index, (a, b)) in pairs.iter().enumerate() {
        let d = evaluate(a, b).map_err(|e| Error::ExamplePair {
            index,
            source: Box::new(e),
        })?;
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::ExamplePair {
                index,
                source: Box::new(invalid("dissimilarity", format!("evaluated to {d}"))),
            });
        }
        best = best.max(d);
    }
    Ok(best)
}

/// Gamma `(shape, rate)` with the same variance and mean moved by `shift`.
pub fn gamma_mean_shift(shape: f64, rate: f64, shift: f64) -> Result<(f64, f64)> {
    if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
        return Err(invalid("gamma", "shape and rate must be positive"));
    }
    let mean = shape / rate + shift;
    if !(mean > 0.0) {
        return Err(invalid("shift", format!("shifted mean {mean} is not positive")));
    }
    let var = shape / (rate * rate);
    Ok((mean * mean / var, mean / var))
}

/// Weighted majority over decisions; an exact tie does not reject.
pub fn vote_decision(decisions: &[Decision], weights: &[f64]) -> Result<Decision> {
    if decisions.len() != weights.len() {
        return Err(invalid(
            "weights",
            format!("{} weights for {} decisions", weights.len(), decisions.len()),
        ));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("weights", "must be finite and nonnegative"));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(invalid("weights", "all zero"));
    }
    let (mut reject, mut keep) = (0.0, 0.0);
    for (d, w) in decisions.iter().zip(weights) {
        match d {
            Decision::Reject => reject += w,
            Decision::NotReject => keep += w,
        }
    }
    Ok(if reject > keep {
        Decision::Reject
    } else {
        Decision::NotReject
    })
}

/// Weights falling linearly from 1 at `lo` to 0 at `hi`, clamped outside.
pub fn linear_weights(eps_grid: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(invalid("lo", "must be below hi"));
    }
    Ok(eps_grid
        .iter()
        .map(|&e| ((hi - e) / (hi - lo)).clamp(0.0, 1.0))
        .collect())
}

/// Converts a sup-norm tolerance to the matching threshold for the
/// root-mean-square distance over `n` grid points.
pub fn l2_from_linf(eps_inf: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if !(eps_inf >= 0.0) {
        return Err(invalid("eps_inf", "must be nonnegative"));
    }
    Ok(eps_inf / (n as f64).sqrt())
}

/// Largest threshold entailing rejection, as a function of the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonCurve {
    points: Vec<(f64, f64)>,
}

impl EpsilonCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("epsilon curve"));
        }
        for w in points.windows(2) {
            if !(w[0].0 < w[1].0) {
                return Err(invalid("alpha", "grid must be strictly increasing"));
            }
            if w[1].1 < w[0].1 {
                return Err(invalid("eps_star", "must be nondecreasing in alpha"));
            }
        }
        if points.iter().any(|&(a, e)| !(0.0..=1.0).contains(&a) || !(e >= 0.0)) {
            return Err(invalid("points", "alpha must lie in [0, 1] and eps_star be nonnegative"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `alpha,eps_star` table with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "alpha,eps_star")?;
        for &(a, e) in &self.points {
            writeln!(out, "{},{}", format_sig17(a), format_sig17(e))?;
        }
        Ok(())
    }
}

/// `%.17g`-style formatting.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let strip = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..17).contains(&exp) {
        strip(&format!("{:.*}", (16 - exp) as usize, x))
    } else {
        format!("{}e{}{:02}", strip(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

/// Rejection boundary at each level of `alpha_grid`.
pub fn decision_region(draws: &InfimumDrawSet, alpha_grid: &[f64]) -> Result<EpsilonCurve> {
    if alpha_grid.is_empty() {
        return Err(Error::Empty("alpha grid"));
    }
    let points = alpha_grid
        .iter()
        .map(|&a| Ok((a, epsilon_from_reference(draws, a)?)))
        .collect::<Result<Vec<_>>>()?;
    EpsilonCurve::new(points)
}
