//! In-situ hyperspectral water-quality retrieval for tidal estuaries.
//!
//! The library covers the full chain from raw radiometric scans to
//! probabilistic constituent estimates:
//!
//! - [`spectral`] — reflectance computation, geometry normalization, and
//!   automated quality control of hyperspectral scans.
//! - [`ingest`] — sensor stream parsing, drift calibration, cross-stream
//!   pairing, and train/test splitting.
//! - [`estuary`] — a synthetic two-end-member tidal mixing simulator with a
//!   semi-analytical bio-optical forward model, used as a ground-truth oracle.
//! - [`ddpm`] — a conditional denoising diffusion model over the
//!   (nitrate, TSS, CDOM) target vector, trained from scratch with
//!   hand-rolled reverse-mode gradients.
//! - [`eval`] — accuracy metrics, salinity-stratified scatter export, and a
//!   least-squares periodogram for irregular time series.
//! - [`pipeline`] — end-to-end orchestration shared by the CLI.
//!
//! All randomness derives from a single root seed via [`seed::derive_seed`],
//! so every artifact is reproducible from one integer.

pub mod config;
pub mod ddpm;
pub mod estuary;
pub mod eval;
pub mod grid;
pub mod header;
pub mod ingest;
pub mod pipeline;
pub mod seed;
pub mod spectral;

pub use grid::WavelengthGrid;
