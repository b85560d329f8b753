//! Per-draw infimum dissimilarities for the four test families, and the
//! decision rules that turn a set of them into a verdict.

mod decide;
mod gof;
mod linear;
mod quantile;
mod two_sample;

pub use decide::{
    posterior_pragmatic_probability, protest_decide, three_way_decide, TestReport, Verdict,
};
pub use gof::{gof_family_infimum, simple_gof_distance, Family, GofDistance, GofFit, GofHypothesis};
pub use linear::{link_transform, linear_infimum, BasisTerm, LinearFit, LinearHypothesis, Link};
pub use quantile::{quantile_infimum, QuantileHypothesis};
pub use two_sample::{two_sample_infimum, DrawRef, TwoSampleDistance};
