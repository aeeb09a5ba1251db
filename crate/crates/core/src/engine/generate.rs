//! Poisson pair emission with importance-sampled wavelengths.

use super::{EngineError, PhotonEvent, RandomStream, Role};
use crate::constants::S_PER_PS;
use crate::radiometry::{coherence_time, radiometry_report, PairTransmissionMode, SourceConfig};
use crate::spectra::{effective_pair_bandwidth, FilterChain, LineShape, PairSampler};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Fraction of the coherence FWHM used as the default multipair half-window:
/// a pair counts as crowded when another pair from the same source is
/// created within ±0.75 τ_c of it.
pub const DEFAULT_MULTIPAIR_WINDOW_COHERENCE: f64 = 0.75;

/// Prepared generator for one source behind its signal/idler chains.
///
/// Construction resolves the in-band created-pair rate from the radiometric
/// budget, the joint-filtered coherence time, and the wavelength sampler;
/// generation is then O(1) per pair.
#[derive(Debug, Clone)]
pub struct PairGenerator {
    source_id: u32,
    source: SourceConfig,
    sampler: PairSampler,
    rate_per_ps: f64,
    coherence_fwhm_ps: f64,
    wavepacket_shape: LineShape,
    multipair_halfwidth_ps: f64,
}

impl PairGenerator {
    pub fn new(
        source_id: u32,
        source: &SourceConfig,
        signal_chain: &FilterChain,
        idler_chain: &FilterChain,
        multipair_halfwidth_ps: Option<f64>,
    ) -> Result<Self, EngineError> {
        source.validate()?;
        let band_nm = source.spdc_bandwidth_fwhm_nm;
        let filter_fwhm_nm = signal_chain
            .nominal_fwhm_nm()
            .unwrap_or(band_nm)
            .min(band_nm);
        let report = radiometry_report(source, filter_fwhm_nm, 1.0, PairTransmissionMode::Heralded)?;
        let sampler = PairSampler::new(
            source.pump.wavelength_nm,
            source.spdc_center_nm,
            band_nm,
            signal_chain,
            idler_chain,
        )?;
        let effective_bw_nm = effective_pair_bandwidth(
            signal_chain,
            idler_chain,
            source.pump.wavelength_nm,
            source.spdc_center_nm,
            band_nm,
        )?;
        let coherence_fwhm_ps = coherence_time(source.spdc_center_nm, effective_bw_nm)?;
        let wavepacket_shape = match (
            signal_chain.narrowest_stage(),
            idler_chain.narrowest_stage(),
        ) {
            (Some(s), Some(i)) => {
                if s.profile.fwhm_pm <= i.profile.fwhm_pm {
                    s.profile.shape
                } else {
                    i.profile.shape
                }
            }
            (Some(s), None) => s.profile.shape,
            (None, Some(i)) => i.profile.shape,
            // Unfiltered SPDC: the band itself is the (rectangular) spectrum.
            (None, None) => LineShape::Rectangular,
        };
        Ok(Self {
            source_id,
            source: *source,
            sampler,
            rate_per_ps: report.created_pair_rate_in_band * S_PER_PS,
            coherence_fwhm_ps,
            wavepacket_shape,
            multipair_halfwidth_ps: multipair_halfwidth_ps
                .unwrap_or(DEFAULT_MULTIPAIR_WINDOW_COHERENCE * coherence_fwhm_ps),
        })
    }

    pub fn source_id(&self) -> u32 {
        self.source_id
    }

    pub fn source(&self) -> &SourceConfig {
        &self.source
    }

    pub fn in_band_rate_per_s(&self) -> f64 {
        self.rate_per_ps / S_PER_PS
    }

    pub fn coherence_fwhm_ps(&self) -> f64 {
        self.coherence_fwhm_ps
    }

    pub fn wavepacket_shape(&self) -> LineShape {
        self.wavepacket_shape
    }

    pub fn mean_idler_acceptance(&self) -> f64 {
        self.sampler.mean_acceptance()
    }

    pub fn multipair_halfwidth_ps(&self) -> f64 {
        self.multipair_halfwidth_ps
    }

    /// Expected created pairs for a duration, for work estimates.
    pub fn expected_pairs(&self, duration_ps: f64) -> f64 {
        self.rate_per_ps * duration_ps
    }

    /// Emission time of the first pair of the window starting at `t0_ps`,
    /// with the window's own stream. Lets a neighbouring chunk resolve its
    /// edge isolation without replaying this window.
    pub(crate) fn first_emission_in_window(&self, rng: &mut RandomStream, t0_ps: f64) -> f64 {
        let gap: f64 = Exp1.sample(rng);
        t0_ps + gap / self.rate_per_ps
    }

    /// Generates all pairs emitted in [t0, t0 + duration), time-ordered.
    ///
    /// Emission times form a homogeneous Poisson process at the in-band
    /// created-pair rate; each emission always yields the signal photon,
    /// and the idler photon survives its chain with the joint acceptance
    /// probability. `first_pair_id` offsets the pair ids.
    pub fn generate(
        &self,
        rng: &mut RandomStream,
        t0_ps: f64,
        duration_ps: f64,
        first_pair_id: u64,
    ) -> GeneratedChunk {
        let mut chunk = GeneratedChunk {
            t0_ps,
            t1_ps: t0_ps + duration_ps,
            events: Vec::new(),
            pair_count: 0,
            first_emission_ps: None,
            last_emission_ps: None,
            first_pair_id,
        };
        if self.rate_per_ps <= 0.0 || duration_ps <= 0.0 {
            return chunk;
        }
        let t_end = t0_ps + duration_ps;
        let expected = (self.rate_per_ps * duration_ps * 1.75) as usize + 16;
        chunk.events.reserve(expected.min(1 << 24));

        let window = self.multipair_halfwidth_ps;
        let mut t = t0_ps;
        let mut prev_emission = f64::NEG_INFINITY;
        // Index of the previous pair's first event, for retroactive
        // isolation updates once the next emission lands too close.
        let mut prev_pair_start = usize::MAX;

        loop {
            let gap: f64 = Exp1.sample(rng);
            t += gap / self.rate_per_ps;
            if t >= t_end {
                break;
            }
            let pair = self.sampler.sample_pair_wavelengths(rng);
            let keep_idler = rng.gen::<f64>() < pair.acceptance;

            let crowded_left = t - prev_emission <= window;
            if crowded_left && prev_pair_start != usize::MAX {
                for event in &mut chunk.events[prev_pair_start..] {
                    event.isolated = false;
                }
            }

            let pair_id = first_pair_id + chunk.pair_count;
            let start = chunk.events.len();
            let base = PhotonEvent {
                source_id: self.source_id,
                pair_id,
                role: Role::Signal,
                emission_time_ps: t,
                wavelength_nm: pair.signal_nm,
                coherence_fwhm_ps: self.coherence_fwhm_ps,
                wavepacket_shape: self.wavepacket_shape,
                isolated: !crowded_left,
            };
            chunk.events.push(base);
            if keep_idler {
                chunk.events.push(PhotonEvent {
                    role: Role::Idler,
                    wavelength_nm: pair.idler_nm,
                    ..base
                });
            }

            chunk.pair_count += 1;
            if chunk.first_emission_ps.is_none() {
                chunk.first_emission_ps = Some(t);
            }
            chunk.last_emission_ps = Some(t);
            prev_emission = t;
            prev_pair_start = start;
        }
        chunk
    }
}

/// One generated window of pair events with the bookkeeping needed to
/// resolve isolation across window boundaries.
#[derive(Debug, Clone)]
pub struct GeneratedChunk {
    pub t0_ps: f64,
    pub t1_ps: f64,
    pub events: Vec<PhotonEvent>,
    pub pair_count: u64,
    pub first_emission_ps: Option<f64>,
    pub last_emission_ps: Option<f64>,
    pub first_pair_id: u64,
}

impl GeneratedChunk {
    /// Clears the isolation flag of the first pair (its left neighbour
    /// turned out to be close).
    pub fn mark_first_pair_crowded(&mut self) {
        let first = self.first_pair_id;
        for event in &mut self.events {
            if event.pair_id != first {
                break;
            }
            event.isolated = false;
        }
    }

    /// Clears the isolation flag of the last pair (its right neighbour,
    /// known from the next window, is close).
    pub fn mark_last_pair_crowded(&mut self) {
        if self.pair_count == 0 {
            return;
        }
        let last = self.first_pair_id + self.pair_count - 1;
        for event in self.events.iter_mut().rev() {
            if event.pair_id != last {
                break;
            }
            event.isolated = false;
        }
    }
}

/// Spec-level convenience: all pairs of one source over [0, duration),
/// pair ids dense from zero.
pub fn generate_pairs(
    rng: &mut RandomStream,
    source: &SourceConfig,
    signal_chain: &FilterChain,
    idler_chain: &FilterChain,
    duration_ps: f64,
) -> Result<Vec<PhotonEvent>, EngineError> {
    let generator = PairGenerator::new(0, source, signal_chain, idler_chain, None)?;
    Ok(generator.generate(rng, 0.0, duration_ps, 0).events)
}

/// Independent per-photon survival: each event passes with probability
/// `per_photon_transmission`. Pairs stay correlated only when both photons
/// survive; lone survivors remain in the stream so heralding statistics
/// stay correct.
pub fn apply_loss(
    rng: &mut RandomStream,
    events: &[PhotonEvent],
    per_photon_transmission: f64,
) -> Result<Vec<PhotonEvent>, EngineError> {
    if !(0.0..=1.0).contains(&per_photon_transmission) {
        return Err(EngineError::NotAProbability {
            name: "per_photon_transmission",
            value: per_photon_transmission,
        });
    }
    if per_photon_transmission == 1.0 {
        return Ok(events.to_vec());
    }
    Ok(events
        .iter()
        .filter(|_| rng.gen::<f64>() < per_photon_transmission)
        .copied()
        .collect())
}
