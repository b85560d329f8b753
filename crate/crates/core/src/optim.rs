//! Derivative-free minimizers: multistart golden-section search in one
//! dimension and a bounded Nelder-Mead simplex for several.
//!
//! Both are deterministic. Ties between candidates resolve to the lowest
//! index, so the result does not depend on evaluation order.

use crate::error::{invalid, Error, Result};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartSpacing {
    Linear,
    /// Geometric spacing; needs a strictly positive bracket.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarProblem {
    pub bracket: (f64, f64),
    pub tol: f64,
    pub multistart: usize,
    pub spacing: StartSpacing,
}

impl ScalarProblem {
    /// Defaults: `tol = 1e-8`, 32 starts, log spacing when `lo > 0`.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("bracket", format!("need finite lo < hi, got ({lo}, {hi})")));
        }
        Ok(Self {
            bracket: (lo, hi),
            tol: 1e-8,
            multistart: 32,
            spacing: if lo > 0.0 {
                StartSpacing::Log
            } else {
                StartSpacing::Linear
            },
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_multistart(mut self, n: usize) -> Self {
        self.multistart = n;
        self
    }

    pub fn with_spacing(mut self, spacing: StartSpacing) -> Self {
        self.spacing = spacing;
        self
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("bracket", format!("need finite lo < hi, got ({lo}, {hi})")));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be > 0"));
        }
        if self.multistart == 0 {
            return Err(invalid("multistart", "must be >= 1"));
        }
        if self.spacing == StartSpacing::Log && lo <= 0.0 {
            return Err(invalid("bracket", "log spacing needs lo > 0"));
        }
        Ok(())
    }

    fn starts(&self) -> Vec<f64> {
        let (lo, hi) = self.bracket;
        let n = self.multistart.max(2);
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    StartSpacing::Linear => lo + t * (hi - lo),
                    StartSpacing::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                }
            })
            .map(|x: f64| x.clamp(lo, hi))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub value: f64,
    /// Final golden-section bracket around `x` (the whole start interval
    /// when `x` is a start point that no refinement beat).
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

fn checked(objective: &impl Fn(f64) -> f64, x: f64, evals: &mut usize) -> Result<f64> {
    *evals += 1;
    let v = objective(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteObjective {
            point: vec![x],
            value: v,
        })
    }
}

/// Golden-section search on `[lo, hi]` until the bracket is at most `tol`
/// wide. Returns the best point evaluated.
pub fn golden_section(
    objective: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<ScalarMinimum> {
    let mut evals = 0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = checked(&objective, c, &mut evals)?;
    let mut fd = checked(&objective, d, &mut evals)?;
    let (mut best_x, mut best_f) = if fd < fc { (d, fd) } else { (c, fc) };
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = checked(&objective, c, &mut evals)?;
            if fc < best_f {
                best_x = c;
                best_f = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = checked(&objective, d, &mut evals)?;
            if fd < best_f {
                best_x = d;
                best_f = fd;
            }
        }
        if evals > 10_000 {
            break;
        }
    }
    Ok(ScalarMinimum {
        x: best_x,
        value: best_f,
        bracket: (a, b),
        evaluations: evals,
    })
}

/// Multistart golden-section minimization.
///
/// The objective is evaluated on `multistart` start points spanning the
/// bracket; every start that is a local minimum of that sequence is refined
/// by golden-section search between its neighbours. The result is never
/// worse than the best start.
pub fn minimize_scalar(objective: impl Fn(f64) -> f64, problem: &ScalarProblem) -> Result<ScalarMinimum> {
    problem.validate()?;
    let (lo, hi) = problem.bracket;
    if problem.multistart == 1 {
        return golden_section(objective, lo, hi, problem.tol);
    }
    let starts = problem.starts();
    let mut evals = 0;
    let values = starts
        .iter()
        .map(|&x| checked(&objective, x, &mut evals))
        .collect::<Result<Vec<f64>>>()?;

    let last = starts.len() - 1;
    let mut best = ScalarMinimum {
        x: starts[0],
        value: values[0],
        bracket: (starts[0], starts[1]),
        evaluations: 0,
    };
    for (i, &v) in values.iter().enumerate() {
        if v < best.value {
            best = ScalarMinimum {
                x: starts[i],
                value: v,
                bracket: (starts[i.saturating_sub(1)], starts[(i + 1).min(last)]),
                evaluations: 0,
            };
        }
    }
    for i in 0..=last {
        let left_ok = i == 0 || values[i] <= values[i - 1];
        let right_ok = i == last || values[i] <= values[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let a = starts[i.saturating_sub(1)];
        let b = starts[(i + 1).min(last)];
        let refined = golden_section(&objective, a, b, problem.tol)?;
        evals += refined.evaluations;
        if refined.value < best.value {
            best = refined;
        }
    }
    best.evaluations = evals;
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexProblem {
    pub initial: Vec<f64>,
    pub steps: Vec<f64>,
    pub tol: f64,
    pub max_evals: usize,
    /// Optional box; trial points are projected onto it before evaluation.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl SimplexProblem {
    pub fn new(initial: Vec<f64>, steps: Vec<f64>) -> Self {
        let dim = initial.len();
        Self {
            initial,
            steps,
            tol: 1e-8,
            max_evals: 2000 * dim.max(1),
            bounds: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_evals(mut self, n: usize) -> Self {
        self.max_evals = n;
        self
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead with the standard coefficients (reflect 1, expand 2,
/// contract 1/2, shrink 1/2). Stops when every vertex lies within `tol`
/// (max-norm) of the best one, or after `max_evals` evaluations, in which
/// case the result is flagged as not converged. NaN objective values are
/// treated as `+inf`.
pub fn minimize_simplex(
    objective: impl Fn(&[f64]) -> f64,
    problem: &SimplexProblem,
) -> Result<SimplexMinimum> {
    let dim = problem.initial.len();
    if dim == 0 {
        return Err(invalid("initial", "empty starting point"));
    }
    if problem.steps.len() != dim {
        return Err(invalid("steps", format!("expected {dim} step sizes")));
    }
    if let Some(b) = &problem.bounds {
        if b.len() != dim || b.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(invalid("bounds", "one ordered (lo, hi) pair per dimension"));
        }
    }
    if problem.max_evals < dim + 1 {
        return Err(invalid("max_evals", format!("must be >= {}", dim + 1)));
    }
    if !(problem.tol > 0.0) {
        return Err(invalid("tol", "must be > 0"));
    }

    let project = |mut x: Vec<f64>| -> Vec<f64> {
        if let Some(bounds) = &problem.bounds {
            for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
                *v = v.clamp(*lo, *hi);
            }
        }
        x
    };
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let x0 = project(problem.initial.clone());
    let f0 = eval(&x0);
    if !f0.is_finite() {
        return Err(Error::NonFiniteObjective {
            point: x0,
            value: f0,
        });
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0, f0)];
    for i in 0..dim {
        let mut x = simplex[0].0.clone();
        x[i] += problem.steps[i];
        let mut x = project(x);
        if x == simplex[0].0 {
            // projection swallowed the step; go the other way
            x[i] -= problem.steps[i];
            x = project(x);
        }
        let f = eval(&x);
        if !f.is_finite() {
            return Err(Error::NonFiniteObjective { point: x, value: f });
        }
        simplex.push((x, f));
    }

    let point = |base: &[f64], dir: &[f64], t: f64| -> Vec<f64> {
        base.iter().zip(dir).map(|(b, d)| b + t * (d - b)).collect()
    };

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter <= problem.tol {
            converged = true;
            break;
        }
        if evals.get() >= problem.max_evals {
            break;
        }

        let worst = simplex[dim].clone();
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }

        let reflected = project(point(&centroid, &worst.0, -1.0));
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = project(point(&centroid, &worst.0, -2.0));
            let fe = eval(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let x = project(point(&centroid, &reflected, 0.5));
            let f = eval(&x);
            (x, f)
        } else {
            let x = project(point(&centroid, &worst.0, 0.5));
            let f = eval(&x);
            (x, f)
        };
        if fc < worst.1.min(fr) {
            simplex[dim] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = project(point(&anchor, &vertex.0, 0.5));
            let f = eval(&x);
            *vertex = (x, f);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Ok(SimplexMinimum {
        x,
        value,
        evaluations: evals.get(),
        converged,
    })
}
