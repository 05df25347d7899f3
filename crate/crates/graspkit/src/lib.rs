//! Gripper-aware grasp annotation, planning, and evaluation.
//!
//! The toolkit relabels rectangle-annotated grasp scenes for arbitrary
//! parametric grippers using a mask+path action representation and a
//! three-rule geometric graspability test, trains a triplet-loss embedding
//! over the resulting labels, and plans grasps on full scenes either by
//! brute-force rule search or by embedding-based action selection.

pub mod cli;
pub mod dataset;
pub mod embedding;
pub mod eval;
pub mod graspability;
pub mod gripper;
pub mod manifest;
pub mod pgm;
pub mod planner;
pub mod raster;

pub use raster::{BinaryRaster, Polygon2D, RasterError};
