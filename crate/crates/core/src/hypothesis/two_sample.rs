use serde::{Deserialize, Serialize};

use crate::dist::{
    classification_dissimilarity, classification_dissimilarity_atoms, ks_distance, l1_distance,
    CellProbabilities, StepCdf,
};
use crate::error::{Error, Result};

/// A posterior draw of one sample's distribution.
#[derive(Debug, Clone, Copy)]
pub enum DrawRef<'a> {
    Step(&'a StepCdf),
    Cells(&'a CellProbabilities),
}

impl<'a> From<&'a StepCdf> for DrawRef<'a> {
    fn from(p: &'a StepCdf) -> Self {
        DrawRef::Step(p)
    }
}

impl<'a> From<&'a CellProbabilities> for DrawRef<'a> {
    fn from(p: &'a CellProbabilities) -> Self {
        DrawRef::Cells(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSampleDistance {
    L1,
    LinfPair,
    /// Classification dissimilarity shifted so identical inputs score 0.
    ClassificationCentered,
}

/// Infimum of `d*(P0, P_X) + d*(P0, P_Y)` over the null of equal
/// distributions. For a metric `d*` the infimum is attained at `P0 = P_X`,
/// so it reduces to `d*(P_X, P_Y)`; the centered classification
/// dissimilarity is given the same treatment.
pub fn two_sample_infimum(x: DrawRef<'_>, y: DrawRef<'_>, dstar: TwoSampleDistance) -> Result<f64> {
    use TwoSampleDistance::*;
    match (x, y, dstar) {
        (DrawRef::Step(f), DrawRef::Step(g), L1) => Ok(l1_distance(f, g)),
        (DrawRef::Step(f), DrawRef::Step(g), LinfPair) => Ok(ks_distance(f, g)),
        (DrawRef::Step(f), DrawRef::Step(g), ClassificationCentered) => {
            Ok((classification_dissimilarity_atoms(f, g) - 0.5).max(0.0))
        }
        (DrawRef::Cells(f), DrawRef::Cells(g), ClassificationCentered) => {
            Ok((classification_dissimilarity(f, g)? - 0.5).max(0.0))
        }
        (DrawRef::Cells(_), DrawRef::Cells(_), other) => Err(Error::RepresentationMismatch(format!(
            "{other:?} is not defined on cell probabilities"
        ))),
        _ => Err(Error::RepresentationMismatch(
            "both samples must use the same representation".into(),
        )),
    }
}
