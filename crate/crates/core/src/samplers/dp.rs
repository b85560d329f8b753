use rand::Rng;
use rayon::prelude::*;

use crate::dist::{ParametricCdf, StepCdf};
use crate::error::{invalid, Error, Result};

use super::draw_rng;

/// Hard cap on stick-breaking atoms per draw.
pub const MAX_ATOMS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Exactly this many sticks; the last one takes the residual mass.
    Fixed(usize),
    /// Break sticks until the residual mass drops below `tail_tol`, capped
    /// at [`MAX_ATOMS`].
    Adaptive { tail_tol: f64 },
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Adaptive { tail_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpSpec {
    pub concentration: f64,
    pub base: ParametricCdf,
    pub truncation: Truncation,
}

impl DpSpec {
    pub fn new(concentration: f64, base: ParametricCdf) -> Self {
        Self {
            concentration,
            base,
            truncation: Truncation::default(),
        }
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.concentration.is_finite() && self.concentration > 0.0) {
            return Err(invalid("concentration", "must be finite and > 0"));
        }
        self.base.validated()?;
        match self.truncation {
            Truncation::Fixed(0) => Err(invalid("truncation", "must be >= 1")),
            Truncation::Adaptive { tail_tol } if !(tail_tol > 0.0 && tail_tol < 1.0) => {
                Err(invalid("truncation", "tail tolerance must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }
}

/// Posterior `DP(c + n, (c G0 + sum delta_xi) / (c + n))`.
#[derive(Debug, Clone)]
pub struct DpPosterior {
    spec: DpSpec,
    data: Vec<f64>,
    total_mass: f64,
    base_prob: f64,
}

impl DpPosterior {
    pub fn new(data: &[f64], spec: &DpSpec) -> Result<Self> {
        spec.validate()?;
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteData {
                index: i,
                value: data[i],
            });
        }
        let n = data.len() as f64;
        let total_mass = spec.concentration + n;
        Ok(Self {
            spec: *spec,
            data: data.to_vec(),
            total_mass,
            base_prob: spec.concentration / total_mass,
        })
    }

    fn location<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.data.is_empty() || rng.random::<f64>() < self.base_prob {
            self.spec.base.sample(rng)
        } else {
            self.data[rng.random_range(0..self.data.len())]
        }
    }

    /// `Beta(1, c + n)` by inversion, `1 - U^(1 / (c + n))`.
    fn stick<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        -(u.ln() / self.total_mass).exp_m1()
    }

    /// One truncated stick-breaking draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> StepCdf {
        let (cap, tail_tol) = match self.spec.truncation {
            Truncation::Fixed(k) => (k, 0.0),
            Truncation::Adaptive { tail_tol } => (MAX_ATOMS, tail_tol),
        };
        let mut atoms = Vec::new();
        let mut remaining = 1.0;
        for k in 0..cap {
            let x = self.location(rng);
            if k + 1 == cap {
                if remaining > 1e-3 && cap == MAX_ATOMS {
                    log::warn!("stick-breaking hit {MAX_ATOMS} atoms with residual mass {remaining:.3e}");
                }
                atoms.push((x, remaining));
                break;
            }
            let w = self.stick(rng) * remaining;
            remaining -= w;
            atoms.push((x, w));
            if remaining < tail_tol {
                atoms.last_mut().unwrap().1 += remaining;
                break;
            }
        }
        StepCdf::from_atoms(atoms).expect("stick-breaking weights form a distribution")
    }

    pub fn draw_indexed(&self, seed: u64, index: u64) -> StepCdf {
        self.draw(&mut draw_rng(seed, index))
    }
}

/// `n_draws` posterior draws, ordered by draw index.
pub fn dp_posterior_draws(
    data: &[f64],
    spec: &DpSpec,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<StepCdf>> {
    if n_draws == 0 {
        return Err(invalid("n_draws", "must be >= 1"));
    }
    let post = DpPosterior::new(data, spec)?;
    Ok((0..n_draws as u64)
        .into_par_iter()
        .map(|i| post.draw_indexed(seed, i))
        .collect())
}
