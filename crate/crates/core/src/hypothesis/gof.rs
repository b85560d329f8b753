use serde::{Deserialize, Serialize};

use crate::dist::{l1_distance_to_parametric, linf_distance, ParametricCdf, StepCdf};
use crate::error::{invalid, Error, Result};
use crate::optim::{minimize_scalar, minimize_simplex, ScalarProblem, SimplexProblem, StartSpacing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Exponential,
    Normal,
    StudentT,
    Gamma,
    Uniform,
}

impl Family {
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            Family::Exponential => &["rate"],
            Family::Normal => &["mean", "sd"],
            Family::StudentT => &["df"],
            Family::Gamma => &["shape", "rate"],
            Family::Uniform => &["lo", "hi"],
        }
    }

    pub fn n_params(&self) -> usize {
        self.parameter_names().len()
    }

    pub fn build(&self, theta: &[f64]) -> Result<ParametricCdf> {
        if theta.len() != self.n_params() {
            return Err(invalid("theta", format!("{self:?} takes {} parameters", self.n_params())));
        }
        match self {
            Family::Exponential => ParametricCdf::exponential(theta[0]),
            Family::Normal => ParametricCdf::normal(theta[0], theta[1]),
            Family::StudentT => ParametricCdf::student_t(theta[0]),
            Family::Gamma => ParametricCdf::gamma(theta[0], theta[1]),
            Family::Uniform => ParametricCdf::uniform(theta[0], theta[1]),
        }
    }

    /// Full parameter space of the family.
    pub fn natural_box(&self) -> Vec<(f64, f64)> {
        let inf = f64::INFINITY;
        match self {
            Family::Exponential => vec![(0.0, inf)],
            Family::Normal => vec![(-inf, inf), (0.0, inf)],
            Family::StudentT => vec![(0.0, inf)],
            Family::Gamma => vec![(0.0, inf), (0.0, inf)],
            Family::Uniform => vec![(-inf, inf), (-inf, inf)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GofDistance {
    Linf,
    L1,
}

/// `H0: X ~ F_theta, theta in box`.
#[derive(Debug, Clone, PartialEq)]
pub struct GofHypothesis {
    pub family: Family,
    pub param_box: Vec<(f64, f64)>,
    pub distance: GofDistance,
}

impl GofHypothesis {
    pub fn new(family: Family, param_box: Vec<(f64, f64)>, distance: GofDistance) -> Result<Self> {
        if param_box.len() != family.n_params() {
            return Err(invalid(
                "param_box",
                format!("{family:?} needs {} parameter bounds", family.n_params()),
            ));
        }
        let natural = family.natural_box();
        if param_box
            .iter()
            .zip(&natural)
            .any(|((lo, hi), (nlo, nhi))| !(lo < hi) || lo < nlo || hi > nhi)
        {
            return Err(invalid("param_box", "bounds must be ordered and inside the family domain"));
        }
        Ok(Self {
            family,
            param_box,
            distance,
        })
    }

    /// The whole family.
    pub fn over_family(family: Family, distance: GofDistance) -> Self {
        Self {
            family,
            param_box: family.natural_box(),
            distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofFit {
    pub theta: Vec<f64>,
    pub distance: f64,
}

/// Distance from a fixed distribution `F` to `P`.
pub fn simple_gof_distance(f: &ParametricCdf, p: &StepCdf, distance: GofDistance) -> f64 {
    match distance {
        GofDistance::Linf => linf_distance(f, p),
        GofDistance::L1 => l1_distance_to_parametric(f, p).unwrap_or(f64::INFINITY),
    }
}

fn objective<'a>(p: &'a StepCdf, hyp: &'a GofHypothesis) -> impl Fn(&[f64]) -> f64 + 'a {
    move |theta| match hyp.family.build(theta) {
        Ok(f) => simple_gof_distance(&f, p, hyp.distance),
        Err(_) => f64::INFINITY,
    }
}

/// Bracket for a one-parameter family. A finite, positive box bound is used
/// as given; open sides fall back to a data-driven range.
fn scalar_bracket(p: &StepCdf, hyp: &GofHypothesis) -> Result<(f64, f64)> {
    let (blo, bhi) = hyp.param_box[0];
    let (dlo, dhi) = match hyp.family {
        Family::Exponential => {
            let mean = p.mean();
            if !(mean > 0.0) {
                return Err(invalid("P", "exponential fit needs a positive mean"));
            }
            (1.0 / (100.0 * mean), 100.0 / mean)
        }
        Family::StudentT => (0.1, 1000.0),
        _ => unreachable!("two-parameter family"),
    };
    let lo = if blo.is_finite() && blo > 0.0 { blo } else { dlo };
    let hi = if bhi.is_finite() { bhi } else { dhi };
    if !(lo < hi) {
        return Err(invalid("param_box", format!("empty search bracket ({lo}, {hi})")));
    }
    Ok((lo, hi))
}

fn moment_start(p: &StepCdf, family: Family) -> (Vec<f64>, Vec<f64>) {
    let m = p.mean();
    let s = p.variance().sqrt().max(1e-6 * (1.0 + m.abs()));
    match family {
        Family::Normal => (vec![m, s], vec![0.1 * s, 0.1 * s]),
        Family::Gamma => {
            let m = m.max(1e-12);
            let v = s * s;
            let (shape, rate) = (m * m / v, m / v);
            (vec![shape, rate], vec![0.1 * shape, 0.1 * rate])
        }
        Family::Uniform => {
            let (lo, hi) = (p.min_location(), p.max_location());
            let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - s, hi + s) };
            (vec![lo, hi], vec![0.1 * (hi - lo); 2])
        }
        _ => unreachable!("one-parameter family"),
    }
}

/// `inf_{theta in box} d(F_theta, P)`.
///
/// One-parameter families use 32 log-spaced starts refined by golden-section
/// search; the others run Nelder-Mead from the moment estimates, restarted
/// from the incumbent until a restart stops improving.
pub fn gof_family_infimum(p: &StepCdf, hyp: &GofHypothesis) -> Result<GofFit> {
    let obj = objective(p, hyp);
    if hyp.family.n_params() == 1 {
        let (lo, hi) = scalar_bracket(p, hyp)?;
        let problem = ScalarProblem::new(lo, hi)?
            .with_multistart(32)
            .with_spacing(StartSpacing::Log);
        let best = minimize_scalar(|x| obj(&[x]), &problem)?;
        return Ok(GofFit {
            theta: vec![best.x],
            distance: best.value,
        });
    }

    // keep strictly positive parameters off their open boundary
    let bounds: Vec<(f64, f64)> = hyp
        .param_box
        .iter()
        .zip(hyp.family.natural_box())
        .map(|(&(lo, hi), (nlo, _))| if lo == 0.0 && nlo == 0.0 { (1e-12, hi) } else { (lo, hi) })
        .collect();
    let (mut start, mut steps) = moment_start(p, hyp.family);
    for (x, (lo, hi)) in start.iter_mut().zip(&bounds) {
        *x = x.clamp(*lo, *hi);
    }
    if !obj(&start).is_finite() {
        // moment start infeasible under the box; fall back to a box point
        for (x, (lo, hi)) in start.iter_mut().zip(&bounds) {
            *x = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo + 1.0,
                (false, true) => hi - 1.0,
                (false, false) => *x,
            };
        }
        steps = start.iter().map(|x| 0.1 * x.abs().max(1e-3)).collect();
    }

    let mut best: Option<crate::optim::SimplexMinimum> = None;
    for _ in 0..8 {
        let problem = SimplexProblem::new(start.clone(), steps.clone())
            .with_tol(1e-10)
            .with_max_evals(4000)
            .with_bounds(bounds.clone());
        let run = minimize_simplex(&obj, &problem)?;
        let improved = best.as_ref().is_none_or(|b| run.value < b.value - 1e-12);
        let converged = run.converged;
        if best.as_ref().is_none_or(|b| run.value <= b.value) {
            best = Some(run);
        }
        let b = best.as_ref().unwrap();
        if !improved && converged {
            return Ok(GofFit {
                theta: b.x.clone(),
                distance: b.value,
            });
        }
        start = b.x.clone();
        steps = start.iter().map(|x| 0.05 * x.abs().max(1e-3)).collect();
    }
    let b = best.unwrap();
    Err(Error::NotConverged {
        best_point: b.x,
        best_value: b.value,
    })
}
