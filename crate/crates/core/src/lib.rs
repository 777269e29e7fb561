//! Redundancy-coded structured light.
//!
//! Codebooks with verified minimum distance, projector pattern cubes, a camera
//! channel simulator, soft/hard/list decoders, CRC error detection with an
//! adaptive reprojection loop, and chip-code source multiplexing.

pub mod channel;
pub mod codebook;
pub mod decoder;
pub mod edc;
pub mod error;
pub mod gf;
pub mod grid;
pub mod imageio;
mod par;
pub mod patterns;
pub mod source_mux;

pub use error::{Error, Result};
pub use grid::{DisparityMap, Grid, Mask};
