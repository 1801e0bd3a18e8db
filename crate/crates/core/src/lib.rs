//! Uplink PHY telemetry toolkit: CSV ingestion and cleaning, feature/target
//! assembly, five from-scratch regressors (linear, CART, random forest and two
//! gradient-boosting variants), evaluation metrics, gain importance and a
//! synthetic data generator.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod importance;
pub mod ingest;
pub mod metrics;
pub mod numeric;
pub mod pipeline;
pub mod regressors;
pub mod synthgen;
