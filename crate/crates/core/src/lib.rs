//! Simulation, planning and reconstruction toolkit for vision-guided tactile
//! crack inspection.
//!
//! The pipeline stages are:
//!
//! 1. **Scene** – parametric cracked plates with grooved and painted cracks,
//!    rendered to an overhead intensity image and a height image.
//! 2. **Segmentation** – a pluggable crack segmenter with a threshold and
//!    morphology baseline.
//! 3. **Skeleton** – Zhang–Suen thinning and keypoint/minimal-edge graph
//!    extraction.
//! 4. **Planner** – greedy farthest-admissible contact selection per minimal
//!    edge and yaw assignment toward the nearest contact.
//! 5. **Tactile** – simulated GelSight presses and false-positive rejection.
//! 6. **Reconstruction** – lifting tactile crack boundaries to the world frame
//!    through the pinhole sensor model, plus vision baselines.
//! 7. **Evaluation** – pixel accuracy, IoU, shortest-distance statistics and
//!    the benchmark harness.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod planner;
pub mod raster;
pub mod reconstruction;
pub mod scene;
pub mod segmentation;
pub mod skeleton;
pub mod tactile;

pub use error::{Error, Result};
