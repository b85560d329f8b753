use std::sync::Arc;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;

use crate::dist::{CellProbabilities, LeafPartition, ParametricCdf};
use crate::error::{invalid, Error, Result};

use super::draw_rng;

pub const MAX_DEPTH: u32 = 20;

/// Default number of tree levels for a sample of size `n`:
/// `ceil(log2 n)`, clamped to `[1, 14]`.
pub fn default_depth(n: usize) -> u32 {
    let d = (n.max(2) as f64).log2().ceil() as u32;
    d.clamp(1, 14)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtSpec {
    pub hyper_c: f64,
    pub depth: u32,
    pub centering: ParametricCdf,
}

impl PtSpec {
    fn validate(&self) -> Result<()> {
        if !(self.hyper_c.is_finite() && self.hyper_c > 0.0) {
            return Err(invalid("hyper_c", "must be finite and > 0"));
        }
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(invalid("depth", format!("must lie in [1, {MAX_DEPTH}]")));
        }
        self.centering.validated()?;
        Ok(())
    }

    pub fn partition(&self) -> Result<Arc<LeafPartition>> {
        self.validate()?;
        Ok(Arc::new(LeafPartition::dyadic(&self.centering, self.depth)?))
    }
}

/// Conjugate posterior of a finite-depth Polya tree.
///
/// The branch probability at a level-`j` node (the root split is level 1)
/// has a `Beta(c j^2 + n_left, c j^2 + n_right)` posterior, where the counts
/// are the observations falling in the two children.
#[derive(Debug, Clone)]
pub struct PolyaTreePosterior {
    partition: Arc<LeafPartition>,
    hyper_c: f64,
    depth: u32,
    /// `level_counts[j][k]`: observations in node `k` of level `j`.
    level_counts: Vec<Vec<u32>>,
    clamped: usize,
}

impl PolyaTreePosterior {
    pub fn new(data: &[f64], spec: &PtSpec) -> Result<Self> {
        Self::with_partition(data, spec.hyper_c, spec.partition()?)
    }

    /// Posterior on an existing dyadic partition, so several samples can
    /// share one set of cells.
    pub fn with_partition(data: &[f64], hyper_c: f64, partition: Arc<LeafPartition>) -> Result<Self> {
        if !(hyper_c.is_finite() && hyper_c > 0.0) {
            return Err(invalid("hyper_c", "must be finite and > 0"));
        }
        let depth = partition
            .depth()
            .ok_or_else(|| invalid("partition", "Polya tree needs a dyadic partition"))?;
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteData {
                index: i,
                value: data[i],
            });
        }
        let mut leaf = vec![0u32; partition.n_cells()];
        let mut clamped = 0;
        for &x in data {
            let (cell, outside) = partition.locate(x);
            leaf[cell] += 1;
            clamped += outside as usize;
        }
        if clamped > 0 {
            log::warn!(
                "{clamped} observation(s) outside the partition range assigned to boundary cells"
            );
        }
        let mut level_counts = vec![leaf];
        for _ in 0..depth {
            let below = level_counts.last().unwrap();
            let up = below.chunks(2).map(|c| c[0] + c[1]).collect();
            level_counts.push(up);
        }
        level_counts.reverse();
        Ok(Self {
            partition,
            hyper_c,
            depth,
            level_counts,
            clamped,
        })
    }

    pub fn partition(&self) -> &Arc<LeafPartition> {
        &self.partition
    }

    /// Observations that fell outside the partition range.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    /// Node probabilities of one draw, level by level: entry `j` holds the
    /// `2^j` probabilities of level `j`, starting with the root `[1.0]`.
    pub fn draw_levels<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        let mut levels = Vec::with_capacity(self.depth as usize + 1);
        levels.push(vec![1.0]);
        for j in 1..=self.depth as usize {
            let prior = self.hyper_c * (j * j) as f64;
            let counts = &self.level_counts[j];
            let parent = &levels[j - 1];
            let mut next = Vec::with_capacity(parent.len() * 2);
            for (node, &p) in parent.iter().enumerate() {
                let a = prior + counts[2 * node] as f64;
                let b = prior + counts[2 * node + 1] as f64;
                let y = Beta::new(a, b).expect("positive beta parameters").sample(rng);
                let left = p * y;
                next.push(left);
                next.push(p - left);
            }
            levels.push(next);
        }
        levels
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CellProbabilities {
        let leaves = self.draw_levels(rng).pop().unwrap();
        CellProbabilities::from_parts_unchecked(self.partition.clone(), leaves)
    }
}

/// Two samples sharing one leaf partition.
#[derive(Debug, Clone)]
pub struct PtPairPosterior {
    pub x: PolyaTreePosterior,
    pub y: PolyaTreePosterior,
}

impl PtPairPosterior {
    pub fn new(data_x: &[f64], data_y: &[f64], spec: &PtSpec) -> Result<Self> {
        let partition = spec.partition()?;
        Ok(Self {
            x: PolyaTreePosterior::with_partition(data_x, spec.hyper_c, partition.clone())?,
            y: PolyaTreePosterior::with_partition(data_y, spec.hyper_c, partition)?,
        })
    }

    /// Draw `index` of the pair; the two trees use disjoint streams.
    pub fn draw_pair(&self, seed: u64, index: u64) -> (CellProbabilities, CellProbabilities) {
        let px = self.x.draw(&mut draw_rng(seed, 2 * index));
        let py = self.y.draw(&mut draw_rng(seed, 2 * index + 1));
        (px, py)
    }
}

/// Paired independent posterior draws for a two-sample problem.
pub fn pt_posterior_draws(
    data_x: &[f64],
    data_y: &[f64],
    spec: &PtSpec,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<(CellProbabilities, CellProbabilities)>> {
    if n_draws == 0 {
        return Err(invalid("n_draws", "must be >= 1"));
    }
    let post = PtPairPosterior::new(data_x, data_y, spec)?;
    Ok((0..n_draws as u64)
        .into_par_iter()
        .map(|i| post.draw_pair(seed, i))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(c: f64, depth: u32) -> PtSpec {
        PtSpec {
            hyper_c: c,
            depth,
            centering: ParametricCdf::normal(0.0, 1.0).unwrap(),
        }
    }

    fn mean_and_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    }

    #[test]
    fn prior_left_cell_is_symmetric() {
        for c in [0.5, 1.0, 7.0] {
            let draws = pt_posterior_draws(&[], &[], &spec(c, 1), 4000, 2).unwrap();
            let left: Vec<f64> = draws.iter().map(|(x, _)| x.probs()[0]).collect();
            let (m, se) = mean_and_se(&left);
            assert!((m - 0.5).abs() < 3.0 * se, "c={c}: {m} +- {se}");
        }
    }

    #[test]
    fn conjugate_update_one_observation() {
        let draws = pt_posterior_draws(&[-0.3], &[], &spec(1.0, 1), 4000, 8).unwrap();
        let left: Vec<f64> = draws.iter().map(|(x, _)| x.probs()[0]).collect();
        let (m, se) = mean_and_se(&left);
        // Beta(2, 1) mean
        assert!((m - 2.0 / 3.0).abs() < 3.0 * se, "{m} +- {se}");
    }

    #[test]
    fn levels_sum_up_to_parents() {
        let post = PolyaTreePosterior::new(&[0.1, -1.0, 2.0, 0.4], &spec(1.0, 6)).unwrap();
        let levels = post.draw_levels(&mut draw_rng(1, 0));
        for j in 1..levels.len() {
            for (k, parent) in levels[j - 1].iter().enumerate() {
                let sum = levels[j][2 * k] + levels[j][2 * k + 1];
                assert!((sum - parent).abs() <= 2.0 * f64::EPSILON * parent, "level {j}");
            }
        }
    }

    #[test]
    fn leaves_are_probability_vectors() {
        let draws = pt_posterior_draws(&[0.3, 0.2], &[1.0], &spec(4.0, 10), 20, 3).unwrap();
        for (x, y) in &draws {
            assert!(x.comparable(y));
            assert_eq!(x.probs().len(), 1024);
            let total: f64 = x.probs().iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(y.probs().iter().all(|p| *p >= 0.0));
        }
        let again = pt_posterior_draws(&[0.3, 0.2], &[1.0], &spec(4.0, 10), 20, 3).unwrap();
        assert_eq!(draws, again);
    }

    #[test]
    fn observations_outside_support_are_clamped() {
        let s = PtSpec {
            hyper_c: 1.0,
            depth: 3,
            centering: ParametricCdf::exponential(1.0).unwrap(),
        };
        let post = PolyaTreePosterior::new(&[-2.0, 0.5], &s).unwrap();
        assert_eq!(post.clamped(), 1);
    }

    #[test]
    fn spec_validation() {
        assert!(pt_posterior_draws(&[], &[], &spec(0.0, 3), 1, 0).is_err());
        assert!(pt_posterior_draws(&[], &[], &spec(1.0, 0), 1, 0).is_err());
        assert!(pt_posterior_draws(&[], &[], &spec(1.0, 21), 1, 0).is_err());
        assert_eq!(default_depth(100), 7);
        assert_eq!(default_depth(1), 1);
        assert_eq!(default_depth(1_000_000), 14);
    }
}
