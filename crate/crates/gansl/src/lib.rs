//! Cross-domain retinal layer segmentation, trained without target-domain
//! labels.
//!
//! A translation GAN (attention-guided, CAM-based) is nested inside a
//! supervised U-Net segmenter and the whole stack is trained end-to-end:
//! the segmenter sees the labeled source images, their translations into
//! the target style, and optionally the cycle reconstructions, all under
//! the source labels. A synthetic two-domain layered phantom stands in for
//! scanner data so the whole pipeline can run at desk scale.
//!
//! Crate layout follows the processing chain:
//!
//! - [`phantom`] — synthetic two-domain layered images with shared masks
//! - [`pipeline`] — tiling, patient-level splits, manifests, batch loading
//! - [`nets`] — generators, discriminators, U-Net segmenter
//! - [`losses`] — adversarial / cycle / identity / CAM / CE / NFL terms
//! - [`trainer`] — alternating optimization, validation, checkpointing
//! - [`metrics`] — per-class IOU, aggregation, report emission
//! - [`plots`] — deterministic PNG charts and overlays

pub mod config;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod nets;
pub mod phantom;
pub mod pipeline;
pub mod plots;
pub mod rng;
pub mod trainer;
pub mod types;

pub use error::{Error, Result};
pub use types::{FloatImage, LabelMask, CLASS_DISPLAY_NAMES, CLASS_NAMES, N_CLASSES};
