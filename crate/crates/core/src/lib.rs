//! Local synchronization analysis for small-world networks of coupled
//! oscillators.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`msf`] finds the coupling range `(0, σ_max)` where the master
//!    stability function of the node dynamics is negative.
//! 2. [`spectral`] gives the first three Laplacian moments, either exactly
//!    from degrees and triangles or in closed form from the model
//!    parameters `(k, r)`.
//! 3. [`triangle`] turns three moments into a triangular density whose
//!    support `[x1, x3]` estimates the Laplacian spectrum.
//! 4. [`predictor`] combines both into the coupling interval
//!    `(0, σ_max / x3)`, and [`netsim`] checks it by direct simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cubic;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod msf;
pub mod netsim;
pub mod predictor;
pub mod spectral;
pub mod triangle;

pub use dynamics::{LimitCycle, Linearization, Oscillator, Rossler};
pub use error::{Error, Result};
pub use graph::{Graph, SmallWorldParams};
pub use linalg::Matrix;
pub use msf::{MsfCurve, StabilityInterval};
pub use netsim::{SimTrace, Verdict};
pub use predictor::{MomentSource, Prediction};
pub use spectral::{EigenSpectrum, MomentVariant, SpectralMoments};
pub use triangle::TriangularFit;
