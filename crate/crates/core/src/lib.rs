//! Turns rasterized catalog pages into a paired image/caption dataset.
//!
//! Stages, in pipeline order:
//!
//! * [`localization`]: prompt-driven detection of image and text blocks.
//! * [`comprehension`]: vision-language description of each block as an
//!   attribute record.
//! * [`matching`]: foreign-key pairing plus distance-based assignment for
//!   ambiguous groups.
//! * [`annotation`]: dataset rows, statistics and charts.
//! * [`evaluation`]: AP at a fixed IoU threshold.
//!
//! [`review`] holds the human-correction overlay and [`pipeline`] wires the
//! stages into the batch commands.

pub mod annotation;
pub mod artifacts;
pub mod comprehension;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod localization;
pub mod manifest;
pub mod matching;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod review;
pub mod transport;

pub use error::{Error, Result};
pub use geometry::{center_distance, iou, BoundingBox};
pub use model::{AttributeRecord, Block, MatchPair, MatchStage, Modality, Page, ParseStatus};
pub use par::Execution;
