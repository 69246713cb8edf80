//! Frequency-domain transformer network for video prediction.
//!
//! Motion between two frames is encoded as per-bin phase differences of their
//! spectra; future frames are predicted by rotating the latest spectrum with
//! that field. Small learned networks adjust the field between steps
//! (mirroring velocities at walls, denoising) and sharpen the spatial output.

pub mod data;
pub mod error;
pub mod fft;
pub mod grid;
pub mod model;
pub mod nn;
pub mod phase;
pub mod rng;

pub use error::{FdtnError, Result};
pub use fft::{dft_reference, fft_forward, fft_inverse};
pub use grid::{ComplexGrid, RealGrid};
pub use model::{Fdtn, FdtnConfig, TransformVariant};
pub use phase::{
    apply_transform, blend_variants, encode_transform, encode_transform_multi, flip, flip_variants,
    higher_order, BlendWeights, Mirror, PhaseField,
};
