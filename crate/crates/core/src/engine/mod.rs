//! Continuous-time Monte Carlo generation of photon-pair events and
//! detector response.
//!
//! The stages compose: [`generate_pairs`] emits time-ordered pair events at
//! the in-band created rate, [`apply_loss`] thins photons independently,
//! and [`detect`] turns surviving photons into timestamped detector clicks
//! with wave-packet spread, gaussian jitter, dark counts and dead time.
//! Long runs go through [`pipeline`], which splits the timeline into fixed
//! chunks with independent derived random streams so generation
//! parallelizes while dark/dead-time state is carried forward sequentially.

mod detect;
mod generate;
pub mod pipeline;
mod stream;

pub use detect::{detect, realize_arrivals, Arrival, DeadTimeGate};
pub use generate::{apply_loss, generate_pairs, GeneratedChunk, PairGenerator};
pub use stream::RandomStream;

pub(crate) use detect::{clicks_from_arrivals, dark_candidates};
pub(crate) use stream::ids;

use crate::spectra::LineShape;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("{name} must lie in [0, 1], got {value}")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error(transparent)]
    Radiometry(#[from] crate::radiometry::RadiometryError),
    #[error(transparent)]
    Spectra(#[from] crate::spectra::SpectraError),
}

/// Which photon of a pair this is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Signal,
    Idler,
}

/// One emitted photon. Signal and idler of a pair share `pair_id` and
/// `emission_time_ps`; the pair's relative timing uncertainty is carried by
/// `coherence_fwhm_ps` and realized as a wave-packet draw at detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonEvent {
    pub source_id: u32,
    /// Unique per source and strictly increasing with emission time.
    pub pair_id: u64,
    pub role: Role,
    pub emission_time_ps: f64,
    pub wavelength_nm: f64,
    /// Intensity FWHM of the photon wave packet after joint filtering.
    pub coherence_fwhm_ps: f64,
    /// Line-shape family of the wave packet (from the narrowest stage).
    pub wavepacket_shape: LineShape,
    /// True when no other pair from the same source was created within the
    /// multipair window on either side; trials involving non-isolated
    /// pairs are demoted to distinguishable statistics.
    pub isolated: bool,
}

/// Detector technology presets differ only through the numbers below; the
/// kind tag keeps configs self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Upconversion,
    Sspd,
    IngaasGated,
    Tes,
}

/// Phenomenological single-photon detector model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_fwhm_ps: f64,
    pub dead_time_ns: f64,
    /// Gated detectors are modeled as free-running at their quoted
    /// efficiency (the heralding arms only postselect); the flag is
    /// carried for configuration fidelity.
    pub gated: bool,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(EngineError::NotAProbability {
                name: "efficiency",
                value: self.efficiency,
            });
        }
        for (name, value) in [
            ("dark_rate_hz", self.dark_rate_hz),
            ("jitter_fwhm_ps", self.jitter_fwhm_ps),
            ("dead_time_ns", self.dead_time_ns),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(EngineError::Negative { name, value });
            }
        }
        Ok(())
    }

    /// Copy with efficiency scaled for statistics runs, capped at 1.
    pub fn boosted(&self, factor: f64) -> DetectorConfig {
        DetectorConfig {
            efficiency: (self.efficiency * factor).min(1.0),
            ..*self
        }
    }

    pub fn dead_time_ps(&self) -> f64 {
        self.dead_time_ns * 1e3
    }
}

/// Provenance of a detector click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Photon {
        pair_id: u64,
        source_id: u32,
        role: Role,
    },
    Dark,
}

/// One accepted detector click. Within a detector stream timestamps are
/// strictly increasing and consecutive clicks differ by at least the dead
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub detector_id: u32,
    pub timestamp_ps: f64,
    pub origin: Origin,
}

impl DetectionRecord {
    /// Total order used everywhere a stream is sorted: timestamp, then a
    /// stable origin key so exact ties break deterministically.
    pub fn sort_key(&self) -> (f64, u64) {
        let tie = match self.origin {
            Origin::Photon { pair_id, .. } => pair_id,
            Origin::Dark => u64::MAX,
        };
        (self.timestamp_ps, tie)
    }
}

pub(crate) fn sort_records(records: &mut [DetectionRecord]) {
    records.sort_unstable_by(|a, b| {
        let (ta, ka) = a.sort_key();
        let (tb, kb) = b.sort_key();
        ta.total_cmp(&tb).then(ka.cmp(&kb))
    });
}
