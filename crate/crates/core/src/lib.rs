//! First quantization estimation for aligned double-compressed JPEG images.
//!
//! The crate compares the luminance DCT coefficient histograms of a JPEG file
//! against a reference dataset built by simulating double compression with
//! constant quantization matrices, then smooths the per-coefficient answers by
//! scoring triplets of neighbouring factors jointly.
//!
//! Pipeline: [`jpeg::parse_jpeg`] -> [`estimator::distance_matrix`] ->
//! [`estimator::raw_estimates`] -> [`estimator::regularize`], all wrapped by
//! [`estimator::estimate`]. Reference data comes from
//! [`refdata::build_reference`].

pub mod dct;
pub mod estimator;
pub mod eval;
pub mod grid;
pub mod image;
pub mod jpeg;
pub mod quant;
pub mod refdata;
pub mod sim;
pub mod stats;
pub mod synth;

pub use estimator::{Estimate, EstimationParams, EstimationResult, RegVariant};
pub use grid::CoeffGrid;
pub use image::GrayImage;
pub use quant::{constant_table, standard_table, QuantTable};
pub use refdata::ReferenceDataset;
pub use stats::{CoeffHistogram, LaplacianParams};
