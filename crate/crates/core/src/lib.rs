//! Numerical toolkit for the one-dimensional parabolic Anderson model
//! `du/dt = 1/2 u'' + u W'` driven by spatial fractional noise with Hurst
//! index `H < 1/2`.
//!
//! Three independent routes to the same quantities are provided:
//! PDE time stepping ([`heat`]), Feynman-Kac Monte Carlo ([`fk`]) and
//! principal-eigenvalue analysis ([`eigen`], [`variational`]). The
//! [`lpblocks`] module checks the Besov regularity of the synthesized noise
//! and [`harness`] holds the sweep and fit routines used by the CLI.

pub mod eigen;
pub mod error;
pub mod fk;
pub mod grid;
pub mod harness;
pub mod heat;
pub mod io;
pub mod lpblocks;
pub mod noise;
pub mod par;
pub mod rng;
pub mod stats;
pub mod variational;

pub use error::{Error, Result};
pub use grid::{GridFunction, GridSpec};
pub use noise::{MollifiedField, NoiseParams, SpectralNoise};
