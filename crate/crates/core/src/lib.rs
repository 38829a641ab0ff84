//! Ultrasound transducer misalignment analysis.
//!
//! Computes a mean image per utterance of a tongue-imaging session, compares
//! every pair of utterances with MSE, SSIM and CW-SSIM, and summarizes the
//! resulting similarity matrices as statistics, change-point flags, heatmaps
//! and reports.

pub mod ingest;
pub mod metrics;
pub mod analysis;
pub mod render;
pub mod cli;
