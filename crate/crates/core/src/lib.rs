//! Phase-field grain-growth dataset factory and microstructure toolkit.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`seeding`] builds periodic Voronoi polycrystals and evens out their
//!    grain areas with Lloyd relaxation.
//! 2. [`sim`] evolves one order parameter per grain under Allen-Cahn
//!    dynamics on a periodic grid.
//! 3. [`rendering`] turns a state into the composite field image, a
//!    thresholded boundary mask and an instance map; [`appearance`] dresses
//!    the clean render up as an SEM-like micrograph.
//! 4. [`dataset`] cuts, augments and splits image/mask pairs, while
//!    [`metrics`] and [`morphometry`] score and characterize the results.
//!
//! Data-parallel loops go through [`Exec`]; with the `parallel` feature
//! disabled every path runs sequentially and produces identical output.

pub mod appearance;
pub mod dataset;
mod error;
mod exec;
pub mod io;
pub mod metrics;
pub mod morphometry;
mod raster;
pub mod rendering;
pub mod seeding;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Exec;
pub use raster::{InstanceMap, Micrograph, SegmentationMask};
