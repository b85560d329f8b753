use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{Grid, GridFunction};
use crate::error::{invalid, Error, Result};

use super::draw_rng;

const MAX_JITTER: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    SquaredExponential,
    Exponential,
    Matern32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub signal_sd: f64,
    pub length_scale: f64,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
            / self.length_scale;
        let s2 = self.signal_sd * self.signal_sd;
        match self.kind {
            KernelKind::SquaredExponential => s2 * (-0.5 * r * r).exp(),
            KernelKind::Exponential => s2 * (-r).exp(),
            KernelKind::Matern32 => {
                let t = 3f64.sqrt() * r;
                s2 * (1.0 + t) * (-t).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpSpec {
    pub kernel: Kernel,
    pub noise_sd: f64,
    pub jitter: f64,
}

impl GpSpec {
    /// Fixed hyperparameters from a scalar design: unit signal sd, length
    /// scale a quarter of the covariate span, noise a tenth of the response
    /// sd.
    pub fn with_defaults(kind: KernelKind, x: &[f64], y: &[f64]) -> Self {
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let n = y.len().max(2) as f64;
        let mean = y.iter().sum::<f64>() / y.len().max(1) as f64;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        Self {
            kernel: Kernel {
                kind,
                signal_sd: 1.0,
                length_scale: span / 4.0,
            },
            noise_sd: if sd > 0.0 { 0.1 * sd } else { 0.1 },
            jitter: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.kernel.signal_sd.is_finite() && self.kernel.signal_sd > 0.0) {
            return Err(invalid("signal_sd", "must be finite and > 0"));
        }
        if !(self.kernel.length_scale.is_finite() && self.kernel.length_scale > 0.0) {
            return Err(invalid("length_scale", "must be finite and > 0"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(invalid("noise_sd", "must be finite and >= 0"));
        }
        if !(self.jitter > 0.0 && self.jitter <= MAX_JITTER) {
            return Err(invalid("jitter", format!("must lie in (0, {MAX_JITTER}]")));
        }
        Ok(())
    }
}

/// Cholesky of `m + jitter I`, multiplying the jitter by ten until the
/// factorization succeeds or the jitter would exceed `1e-4`.
fn factor_with_jitter(m: &DMatrix<f64>, start: f64) -> Result<Cholesky<f64, Dyn>> {
    let mut jitter = start;
    loop {
        let mut shifted = m.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Ok(c);
        }
        if jitter * 10.0 > MAX_JITTER * (1.0 + 1e-12) {
            return Err(Error::Factorization { jitter });
        }
        jitter *= 10.0;
    }
}

/// Joint Gaussian process posterior of the regression function on a grid.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    grid: Arc<Grid>,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl GpPosterior {
    pub fn new(x: &[Vec<f64>], y: &[f64], grid: Arc<Grid>, spec: &GpSpec) -> Result<Self> {
        spec.validate()?;
        if x.len() != y.len() {
            return Err(invalid("y", format!("{} covariates but {} responses", x.len(), y.len())));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData { index: i, value: y[i] });
        }
        if x.iter().any(|p| p.len() != grid.dim()) {
            return Err(invalid("x", "covariate dimension differs from the grid"));
        }
        let k = &spec.kernel;
        let pts = grid.points();
        let m = pts.len();
        let kss = DMatrix::from_fn(m, m, |i, j| k.eval(&pts[i], &pts[j]));

        let (mean, mut covariance) = if x.is_empty() {
            (DVector::zeros(m), kss)
        } else {
            let n = x.len();
            let noise = spec.noise_sd * spec.noise_sd;
            let kxx = DMatrix::from_fn(n, n, |i, j| {
                k.eval(&x[i], &x[j]) + if i == j { noise } else { 0.0 }
            });
            let chol = factor_with_jitter(&kxx, spec.jitter)?;
            let kxs = DMatrix::from_fn(n, m, |i, j| k.eval(&x[i], &pts[j]));
            let alpha = chol.solve(&DVector::from_column_slice(y));
            let mean = kxs.transpose() * alpha;
            let v = chol.solve(&kxs);
            (mean, kss - kxs.transpose() * v)
        };
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (covariance[(i, j)] + covariance[(j, i)]);
                covariance[(i, j)] = s;
                covariance[(j, i)] = s;
            }
        }
        let factor = factor_with_jitter(&covariance, spec.jitter)?.l();
        Ok(Self {
            grid,
            mean,
            covariance,
            factor,
        })
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.covariance[(i, j)]
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> GridFunction {
        let m = self.mean.len();
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let values = &self.mean + &self.factor * z;
        GridFunction::new(self.grid.clone(), values.as_slice().to_vec())
            .expect("finite posterior draw")
    }
}

pub fn gp_posterior_draws(
    x: &[Vec<f64>],
    y: &[f64],
    grid: Arc<Grid>,
    spec: &GpSpec,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<GridFunction>> {
    if n_draws == 0 {
        return Err(invalid("n_draws", "must be >= 1"));
    }
    let post = GpPosterior::new(x, y, grid, spec)?;
    Ok((0..n_draws as u64)
        .into_par_iter()
        .map(|i| post.draw(&mut draw_rng(seed, i)))
        .collect())
}
