//! Continuous-time Monte Carlo simulation and analysis for narrow-band
//! photon-pair experiments: CW SPDC sources, fibre Bragg filter cascades,
//! realistic single-photon detectors, coincidence electronics, and
//! two-source postselected Hong-Ou-Mandel interference.
//!
//! The crate is organized around the stages of a bench experiment:
//!
//! - [`radiometry`] — closed-form source budget: energy conservation,
//!   coherence time, mode counting, spectral radiance and brightness.
//! - [`spectra`] — line shapes, filter-cascade transfer functions, and
//!   energy-correlated joint spectral sampling.
//! - [`engine`] — seeded event-stream generation: Poisson pair emission,
//!   per-photon loss, detector response (jitter, dark counts, dead time).
//! - [`coincidence`] — time-difference histograms, gaussian peak fits,
//!   and jitter deconvolution.
//! - [`hom`] — two-source beamsplitter interference with four-fold
//!   postselection, dip histogram, and visibility extraction.
//!
//! All timestamps are continuous 64-bit floating picoseconds from the
//! simulation origin; wavelengths are nanometres unless a field name says
//! otherwise. Every stochastic routine takes an explicit [`RandomStream`]
//! so that identical seeds reproduce identical event streams.

pub mod coincidence;
pub mod constants;
pub mod engine;
pub mod fit;
pub mod hom;
pub mod radiometry;
pub mod spectra;
pub mod stats;

pub use coincidence::{CoincidenceHistogram, PeakFit};
pub use engine::{
    DetectionRecord, DetectorConfig, DetectorKind, Origin, PhotonEvent, RandomStream, Role,
};
pub use radiometry::{PumpConfig, RadiometryReport, SourceConfig};
pub use spectra::{FilterChain, FilterMode, FilterStage, LineShape, SpectralProfile};
