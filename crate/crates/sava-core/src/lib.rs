//! Data valuation for labeled embedding datasets via optimal transport.
//!
//! The crate assigns a value to every point of a training set by measuring how
//! sensitive an optimal-transport distance to a clean validation set is to
//! that point's mass. Two methods are provided:
//!
//! - [`lava::lava_values`]: one OT problem over the full train x validation
//!   cost matrix; memory grows with `N * N'`.
//! - [`sava::sava_values`]: the training and validation sets are partitioned
//!   into batches, every batch pair is solved independently, and an outer OT
//!   problem over batch distances weights the per-pair results. Peak memory is
//!   bounded by one batch-pair matrix plus the batch-distance table.
//!
//! Supporting modules: [`dataset`] (data model, file formats, synthesis,
//! corruption, partitioning), [`ot`] (entropic and exact solvers, calibrated
//! gradients, plan recovery, the consistency diagnostic), [`label_geometry`]
//! (label-aware ground cost and the label-to-label distance cache), [`eval`]
//! (rankings, detection rates, pruning), [`report`] and [`config`]
//! (serializable run artifacts).

// `!(x >= 0.0)`-style guards are deliberate: they reject NaN along with the
// out-of-range values, which the suggested `x < 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod label_geometry;
pub mod lava;
pub mod ot;
pub mod report;
pub mod sava;

mod float;

pub use error::{Error, Result};
pub use float::Float;

/// Scalar type used by the valuation pipeline.
///
/// The solvers in [`ot`] are generic over [`Float`]; everything downstream of
/// the data model runs on 64-bit reals because the log-domain updates are
/// sensitive to cancellation at the small regularization strengths the
/// gradients need.
pub type Real = f64;
