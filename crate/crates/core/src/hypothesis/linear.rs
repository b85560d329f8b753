use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::dist::{weighted_l2_distance, Grid, GridFunction};
use crate::error::{invalid, Error, Result};

/// Largest accepted condition number of the Gram matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Monomial basis terms on a covariate grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTerm {
    Constant,
    /// `x[coord]^power`
    Power { coord: usize, power: u32 },
}

impl BasisTerm {
    fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            BasisTerm::Constant => 1.0,
            BasisTerm::Power { coord, power } => x[coord].powi(power as i32),
        }
    }
}

/// `H0: R(x) = b(x) beta` for a linearly independent basis `b` on a grid.
#[derive(Debug, Clone)]
pub struct LinearHypothesis {
    basis: Vec<GridFunction>,
    grid: Arc<Grid>,
    gram: Cholesky<f64, Dyn>,
    condition: f64,
}

impl LinearHypothesis {
    pub fn new(basis: Vec<GridFunction>) -> Result<Self> {
        let first = basis.first().ok_or(Error::Empty("linear hypothesis needs a basis"))?;
        if basis.iter().any(|b| !b.shares_grid(first)) {
            return Err(Error::GridMismatch);
        }
        let grid = first.grid().clone();
        let k = basis.len();
        let gram = DMatrix::from_fn(k, k, |i, j| grid.inner(basis[i].values(), basis[j].values()));
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v.abs())));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let gram = Cholesky::new(gram).ok_or(Error::IllConditioned { condition })?;
        Ok(Self {
            basis,
            grid,
            gram,
            condition,
        })
    }

    pub fn from_terms(grid: Arc<Grid>, terms: &[BasisTerm]) -> Result<Self> {
        for t in terms {
            if let BasisTerm::Power { coord, .. } = t {
                if *coord >= grid.dim() {
                    return Err(invalid("basis", format!("covariate {coord} not on the grid")));
                }
            }
        }
        let basis = terms
            .iter()
            .map(|t| GridFunction::from_fn(grid.clone(), |x| t.eval(x)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(basis)
    }

    /// `1, t, ..., t^degree` on a scalar grid.
    pub fn polynomial(grid: Arc<Grid>, degree: u32) -> Result<Self> {
        let terms: Vec<BasisTerm> = (0..=degree)
            .map(|p| match p {
                0 => BasisTerm::Constant,
                p => BasisTerm::Power { coord: 0, power: p },
            })
            .collect();
        Self::from_terms(grid, &terms)
    }

    pub fn basis(&self) -> &[GridFunction] {
        &self.basis
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }
}

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub beta: Vec<f64>,
    pub fitted: GridFunction,
    pub distance: f64,
}

/// Projects `g` onto the span of the basis under the grid measure.
///
/// Solves the normal equations `A beta = g_b` with `A[i][j] = E[b_i b_j]`
/// and `g_b[i] = E[g b_i]`; the infimum over the hypothesis is the weighted
/// L2 distance from `g` to the fitted combination. With empirical weights
/// this is ordinary least squares.
pub fn linear_infimum(g: &GridFunction, hyp: &LinearHypothesis) -> Result<LinearFit> {
    if !g.shares_grid(&hyp.basis[0]) {
        return Err(Error::GridMismatch);
    }
    let rhs = DVector::from_iterator(
        hyp.basis.len(),
        hyp.basis.iter().map(|b| hyp.grid.inner(g.values(), b.values())),
    );
    let beta = hyp.gram.solve(&rhs);
    let mut fitted = vec![0.0; g.values().len()];
    for (b, coef) in hyp.basis.iter().zip(beta.iter()) {
        for (f, v) in fitted.iter_mut().zip(b.values()) {
            *f += coef * v;
        }
    }
    let fitted = GridFunction::new(g.grid().clone(), fitted)?;
    let distance = weighted_l2_distance(&fitted, g)?;
    Ok(LinearFit {
        beta: beta.as_slice().to_vec(),
        fitted,
        distance,
    })
}

/// Inverse link applied before a linear-predictor test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Logit,
    Cloglog,
}

/// Maps a probability function onto the linear-predictor scale. Values at
/// exactly 0 or 1 are rejected; clamping is the caller's choice.
pub fn link_transform(g: &GridFunction, link: Link) -> Result<GridFunction> {
    if let Some(p) = g.values().iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(invalid("values", format!("{p} is not strictly inside (0, 1)")));
    }
    g.map(|p| match link {
        Link::Logit => (p / (1.0 - p)).ln(),
        Link::Cloglog => (-(-p).ln_1p()).ln(),
    })
}
