//! Ratio-product-ratio estimation of a finite population mean under simple
//! random sampling without replacement.
//!
//! The estimator blends a generalised ratio term and its reciprocal with
//! weight `alpha` and mixing parameter `beta`. [`estimators`] evaluates it
//! and the classical competitors on sample summaries, [`theory`] holds the
//! first-order bias and MSE algebra, [`sampling`] draws samples and plans
//! sample sizes, [`simulation`] compares estimators by Monte Carlo and by
//! exhaustive enumeration, and [`synthetic`] builds test populations.

pub mod error;
pub mod estimators;
pub mod sampling;
pub mod simulation;
pub mod stats;
pub mod surface;
pub mod synthetic;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{estimate, EstimatorSpec, SampleSummary};
pub use stats::{make_design, summarize, Population, SamplingDesign, SummaryStats};
