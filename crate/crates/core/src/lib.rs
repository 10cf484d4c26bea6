//! Equal-weight cubature on the torus built by Averaging Search and Greedy
//! Averaging Search, with a certified worst-case error chain for the class
//! `W^F₁` of an admissible periodic kernel `F`.
//!
//! * [`kernel`]: admissible kernels given by finite nonnegative spectra.
//! * [`pointset`]: knot sequences and the `avgsearch-points v1` format.
//! * [`search`]: the two construction algorithms.
//! * [`analysis`]: energies, exponential sums and the error bounds.
//! * [`config`] and [`commands`]: the experiment driver behind the CLI.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod grid;
pub mod kernel;
pub mod pointset;
pub mod rng;
pub mod search;
pub mod sum;

pub use analysis::ErrorReport;
pub use kernel::{FourierKernel, FrequencyIndex};
pub use pointset::{PointSet, Provenance};
pub use search::{SearchConfig, SearchTrace, Variant};
