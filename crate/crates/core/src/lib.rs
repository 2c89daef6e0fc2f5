//! Physics-based lens flare synthesis.
//!
//! Scattering flares come from Fraunhofer diffraction at a contaminated
//! entrance pupil ([`pupil`], [`diffraction`]); because every field angle
//! sees the same pupil, one kernel translated per light source covers a
//! whole multi-source scene ([`scene`]). Reflective ghosts are laid out on
//! the line through the source and the image center ([`reflective`]).
//! [`composite`] blends both onto clean plates in linear light to produce
//! training pairs, and [`pipeline`] generates and validates whole dataset
//! variants. [`radiance`] is a small voxel radiance field showing that
//! multi-view fitting discards view-inconsistent ghosts, and [`metrics`]
//! scores restorations.

pub mod composite;
pub mod diffraction;
pub mod error;
pub mod fft;
pub mod metrics;
pub mod pipeline;
pub mod pupil;
pub mod radiance;
pub mod raster;
pub mod reflective;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
