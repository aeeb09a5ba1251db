//! Detector response: wave-packet arrival spread, efficiency thinning,
//! gaussian timing jitter, dark counts, and dead-time enforcement.

use super::{sort_records, DetectionRecord, DetectorConfig, EngineError, Origin, PhotonEvent, RandomStream};
use crate::constants::fwhm_to_sigma;
use crate::spectra::{LineShape, TemporalEnvelope};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// A photon with its realized arrival time at the end of its path: the
/// shared pair emission instant plus this photon's wave-packet draw.
#[derive(Debug, Clone, Copy)]
pub struct Arrival {
    pub event: PhotonEvent,
    pub arrival_ps: f64,
}

/// Caches the temporal envelope across consecutive events; streams from one
/// source share a single (shape, FWHM) and tabulated envelopes are costly
/// to rebuild per photon.
#[derive(Default)]
pub(crate) struct EnvelopeCache {
    cached: Option<(LineShape, u64, TemporalEnvelope)>,
}

impl EnvelopeCache {
    pub(crate) fn get(&mut self, shape: LineShape, fwhm_ps: f64) -> &TemporalEnvelope {
        let bits = fwhm_ps.to_bits();
        let stale = !matches!(&self.cached, Some((s, b, _)) if *s == shape && *b == bits);
        if stale {
            self.cached = Some((shape, bits, TemporalEnvelope::new(shape, fwhm_ps)));
        }
        &self.cached.as_ref().unwrap().2
    }
}

/// Realizes arrival times for every event: emission time plus an
/// independent wave-packet draw per photon.
pub fn realize_arrivals(rng: &mut RandomStream, events: &[PhotonEvent]) -> Vec<Arrival> {
    let mut cache = EnvelopeCache::default();
    events
        .iter()
        .map(|&event| {
            let env = cache.get(event.wavepacket_shape, event.coherence_fwhm_ps);
            Arrival {
                event,
                arrival_ps: event.emission_time_ps + env.sample(rng),
            }
        })
        .collect()
}

/// Efficiency-first candidate clicks for a photon stream: the wave-packet
/// and jitter draws are spent only on photons that fire the detector.
pub(crate) fn photon_click_candidates(
    rng: &mut RandomStream,
    events: &[PhotonEvent],
    detector: &DetectorConfig,
    detector_id: u32,
) -> Vec<DetectionRecord> {
    let mut cache = EnvelopeCache::default();
    let jitter_sigma = fwhm_to_sigma(detector.jitter_fwhm_ps);
    let mut out = Vec::with_capacity((events.len() as f64 * detector.efficiency) as usize + 8);
    for event in events {
        if rng.gen::<f64>() >= detector.efficiency {
            continue;
        }
        let env = cache.get(event.wavepacket_shape, event.coherence_fwhm_ps);
        let mut t = event.emission_time_ps + env.sample(rng);
        if jitter_sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            t += z * jitter_sigma;
        }
        out.push(DetectionRecord {
            detector_id,
            timestamp_ps: t,
            origin: Origin::Photon {
                pair_id: event.pair_id,
                source_id: event.source_id,
                role: event.role,
            },
        });
    }
    out
}

/// Candidate clicks for pre-realized arrivals (the beamsplitter path, where
/// the arrival time was already drawn for routing).
pub(crate) fn clicks_from_arrivals(
    rng: &mut RandomStream,
    arrivals: impl Iterator<Item = (f64, Origin)>,
    detector: &DetectorConfig,
    detector_id: u32,
) -> Vec<DetectionRecord> {
    let jitter_sigma = fwhm_to_sigma(detector.jitter_fwhm_ps);
    let mut out = Vec::new();
    for (arrival_ps, origin) in arrivals {
        if rng.gen::<f64>() >= detector.efficiency {
            continue;
        }
        let mut t = arrival_ps;
        if jitter_sigma > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            t += z * jitter_sigma;
        }
        out.push(DetectionRecord {
            detector_id,
            timestamp_ps: t,
            origin,
        });
    }
    out
}

/// Dark-count candidates: a Poisson number of uniform timestamps over the
/// window, sorted.
pub(crate) fn dark_candidates(
    rng: &mut RandomStream,
    detector: &DetectorConfig,
    detector_id: u32,
    t0_ps: f64,
    t1_ps: f64,
) -> Vec<DetectionRecord> {
    let mean = detector.dark_rate_hz * (t1_ps - t0_ps) * crate::constants::S_PER_PS;
    if mean <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut out: Vec<DetectionRecord> = (0..count)
        .map(|_| DetectionRecord {
            detector_id,
            timestamp_ps: t0_ps + rng.gen::<f64>() * (t1_ps - t0_ps),
            origin: Origin::Dark,
        })
        .collect();
    sort_records(&mut out);
    out
}

/// Non-paralyzable dead time: a click is accepted only if it follows the
/// previous accepted click by at least the dead time, and timestamps stay
/// strictly increasing. State survives across chunk boundaries.
#[derive(Debug, Clone)]
pub struct DeadTimeGate {
    dead_ps: f64,
    last_accepted_ps: Option<f64>,
}

impl DeadTimeGate {
    pub fn new(dead_ps: f64) -> Self {
        Self {
            dead_ps,
            last_accepted_ps: None,
        }
    }

    #[inline]
    pub fn admit(&mut self, timestamp_ps: f64) -> bool {
        let ok = match self.last_accepted_ps {
            None => true,
            Some(last) => timestamp_ps > last && timestamp_ps - last >= self.dead_ps,
        };
        if ok {
            self.last_accepted_ps = Some(timestamp_ps);
        }
        ok
    }

    /// Filters a time-sorted candidate stream in place of the output vec.
    pub fn filter_sorted(
        &mut self,
        candidates: impl IntoIterator<Item = DetectionRecord>,
        out: &mut Vec<DetectionRecord>,
    ) {
        for record in candidates {
            if self.admit(record.timestamp_ps) {
                out.push(record);
            }
        }
    }
}

/// Full detector response for a time-ordered event stream over
/// [0, duration): efficiency thinning, wave-packet and jitter spread,
/// merged dark counts, and dead-time enforcement. Output is time-ordered
/// with strictly increasing timestamps.
pub fn detect(
    rng: &mut RandomStream,
    events: &[PhotonEvent],
    detector: &DetectorConfig,
    detector_id: u32,
    duration_ps: f64,
) -> Result<Vec<DetectionRecord>, EngineError> {
    detector.validate()?;
    let mut candidates = photon_click_candidates(rng, events, detector, detector_id);
    candidates.extend(dark_candidates(rng, detector, detector_id, 0.0, duration_ps));
    sort_records(&mut candidates);
    let mut out = Vec::with_capacity(candidates.len());
    DeadTimeGate::new(detector.dead_time_ps()).filter_sorted(candidates, &mut out);
    Ok(out)
}
