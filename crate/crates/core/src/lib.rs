//! Boundary representations of free groups from hyperbolic metrics.

pub mod boundary;
pub mod classify;
pub mod error;
pub mod exact;
pub mod group;
pub mod metric;
pub mod representation;
pub mod scalar;
pub mod shadows;

pub use boundary::{ps_measure, Cylinder, MarkovMeasure};
pub use error::{Error, Result};
pub use exact::QuadSurd;
pub use group::{Alphabet, BoundaryPoint, Letter, ReducedWord};
pub use metric::{EpsPolicy, Metric, MetricSpec, MetricVariant};
pub use scalar::Scalar;

/// Exact scalar for the standard metric.
pub type Exact = QuadSurd;
pub type Real = f64;
pub type ExactMeasure = MarkovMeasure<QuadSurd>;
pub type Measure = MarkovMeasure<f64>;
