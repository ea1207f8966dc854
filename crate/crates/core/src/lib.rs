//! Prostate volume estimation from binary segmentation mask sweeps.
//!
//! The pipeline takes one axial and one sagittal sweep of per-frame masks,
//! picks the frame with the largest prostate cross-section in each, fits an
//! ellipse through the outer boundary of that frame and reads three
//! diameters off the fits. The volume follows from the ellipsoid formula
//! `D_frontal * D_longitudinal * D_sagittal * pi / 6`.
//!
//! Alongside the estimator the crate carries the evaluation tooling:
//! segmentation metrics ([`metrics`]), cohort agreement statistics and
//! dataset partitioning ([`stats`]) and an analytic ellipsoid phantom
//! generator ([`phantom`]) used to verify the whole chain end to end.

pub mod ellipse;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod model;
pub mod phantom;
pub mod raster;
pub mod seed;
pub mod stats;
pub mod volumetry;

pub use error::{Error, Result};
pub use model::{FrameMask, PixelSpacing, PlaneKind, Sweep, SweepSource};
