//! Fractional scientific strength (FSS) of researchers, institution means,
//! and funnel-plot assessment of those means with confidence bands.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, with `*32` variants for `f32`.
//! Fractional author weights are also available in exact rational form
//! through [`ExactWeights`].

// `!(x > 0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod funnel;
pub mod indicator;
pub mod model;
pub mod render;
pub mod scalar;
pub mod transform;

pub use funnel::{Classification, FunnelError, Group, QqPoint, RANKING_CAVEAT};
pub use indicator::{IndicatorError, WeightingScheme};
pub use model::{
    AuthorSlot, GrandMeanMode, ModelError, PublicationRecord, Rank, ResearcherRecord,
    SkewnessTarget, ValidationError,
};
pub use scalar::Scalar;
pub use transform::TransformError;

pub type AssessmentConfig = model::AssessmentConfig<f64>;
pub type CitationBaseline = model::CitationBaseline<f64>;
pub type ValidatedDataset = model::ValidatedDataset<f64>;
pub type AssessablePopulation = model::AssessablePopulation<f64>;
pub type FractionalWeights = indicator::FractionalWeights<f64>;
pub type ExactWeights = indicator::FractionalWeights<num_rational::Rational64>;
pub type ResearcherScore = indicator::ResearcherScore<f64>;
pub type InstitutionAggregate = indicator::InstitutionAggregate<f64>;
pub type TransformSpec = transform::TransformSpec<f64>;
pub type PooledFit = funnel::PooledFit<f64>;
pub type BandPoint = funnel::BandPoint<f64>;
pub type SlopeFit = funnel::SlopeFit<f64>;
pub type InstitutionSummary = funnel::InstitutionSummary<f64>;
pub type FunnelReport = funnel::FunnelReport<f64>;

pub type AssessmentConfig32 = model::AssessmentConfig<f32>;
pub type TransformSpec32 = transform::TransformSpec<f32>;
pub type PooledFit32 = funnel::PooledFit<f32>;
pub type BandPoint32 = funnel::BandPoint<f32>;
pub type FunnelReport32 = funnel::FunnelReport<f32>;
