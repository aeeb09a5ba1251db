//! Chunked, data-parallel event pipeline.
//!
//! The timeline is split into fixed windows (default 100 ms). Each chunk is
//! generated, thinned and turned into candidate clicks by an independent
//! worker with its own derived random streams, so workers parallelize
//! freely; the dead-time gates and any cross-chunk bookkeeping run in a
//! sequential fold over the chunks in time order. Pair ids encode
//! (chunk index, within-chunk index) and stay strictly increasing with
//! emission time.
//!
//! A worker resolves its last pair's right-edge isolation by peeking the
//! first emission of the next window (one draw on that window's own
//! stream); the left edge of a window's first pair is resolved by the
//! sequential consumer, which knows the previous window's last emission.

use super::detect::{dark_candidates, photon_click_candidates, DeadTimeGate};
use super::generate::GeneratedChunk;
use super::stream::ids;
use super::{
    apply_loss, sort_records, DetectionRecord, DetectorConfig, EngineError, PairGenerator,
    RandomStream, Role,
};
use rayon::prelude::*;

/// Default chunk length: 100 ms of simulated time.
pub const DEFAULT_CHUNK_PS: f64 = 1e11;

/// Number of chunks covering a duration.
pub fn chunk_count(duration_ps: f64, chunk_ps: f64) -> u64 {
    if duration_ps <= 0.0 {
        0
    } else {
        (duration_ps / chunk_ps).ceil() as u64
    }
}

/// Runs `worker` over chunk indices in parallel batches and hands results
/// to `consume` strictly in chunk order. Memory stays bounded by one batch
/// of results.
pub(crate) fn drive_chunks<T: Send>(
    n_chunks: u64,
    worker: impl Fn(u64) -> T + Sync,
    mut consume: impl FnMut(u64, T),
) {
    let batch = (rayon::current_num_threads().max(1) * 2) as u64;
    let mut next = 0u64;
    while next < n_chunks {
        let hi = (next + batch).min(n_chunks);
        let results: Vec<T> = (next..hi).into_par_iter().map(&worker).collect();
        for (offset, result) in results.into_iter().enumerate() {
            consume(next + offset as u64, result);
        }
        next = hi;
    }
}

/// Generates one chunk with its canonical streams and resolves the right
/// edge of its isolation flags against the next window.
pub(crate) fn generate_chunk(
    generator: &PairGenerator,
    seed: u64,
    chunk_index: u64,
    n_chunks: u64,
    chunk_ps: f64,
    duration_ps: f64,
) -> GeneratedChunk {
    let t0 = chunk_index as f64 * chunk_ps;
    let t1 = (t0 + chunk_ps).min(duration_ps);
    let source = generator.source_id();
    let mut rng = RandomStream::new(seed, ids::stream_id(ids::PURPOSE_GENERATE, source, chunk_index));
    let mut chunk = generator.generate(&mut rng, t0, t1 - t0, chunk_index << 32);
    if chunk_index + 1 < n_chunks {
        if let Some(last) = chunk.last_emission_ps {
            let mut peek = RandomStream::new(
                seed,
                ids::stream_id(ids::PURPOSE_GENERATE, source, chunk_index + 1),
            );
            let next_first = generator.first_emission_in_window(&mut peek, t1);
            if next_first - last <= generator.multipair_halfwidth_ps() {
                chunk.mark_last_pair_crowded();
            }
        }
    }
    chunk
}

/// Totals accumulated over a pipeline run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunStats {
    pub created_pairs: u64,
    pub surviving_photons: u64,
}

/// Detector click streams for the two-arm coincidence experiment:
/// source → loss → signal/idler detectors, chunk-parallel.
pub struct TwoDetectorResult {
    pub signal_records: Vec<DetectionRecord>,
    pub idler_records: Vec<DetectionRecord>,
    pub stats: RunStats,
}

/// Runs generate → loss → detect over the full duration with chunked
/// parallel workers, returning both detectors' accepted click streams.
pub fn run_two_detector(
    generator: &PairGenerator,
    signal_detector: &DetectorConfig,
    idler_detector: &DetectorConfig,
    per_photon_transmission: f64,
    seed: u64,
    duration_ps: f64,
    chunk_ps: f64,
) -> Result<TwoDetectorResult, EngineError> {
    signal_detector.validate()?;
    idler_detector.validate()?;
    if !(0.0..=1.0).contains(&per_photon_transmission) {
        return Err(EngineError::NotAProbability {
            name: "per_photon_transmission",
            value: per_photon_transmission,
        });
    }
    const SIGNAL_DET: u32 = 0;
    const IDLER_DET: u32 = 1;
    let n_chunks = chunk_count(duration_ps, chunk_ps);

    struct ChunkOut {
        signal_candidates: Vec<DetectionRecord>,
        idler_candidates: Vec<DetectionRecord>,
        created_pairs: u64,
        surviving_photons: u64,
    }

    let worker = |k: u64| -> ChunkOut {
        let chunk = generate_chunk(generator, seed, k, n_chunks, chunk_ps, duration_ps);
        let source = generator.source_id();
        let mut loss_rng =
            RandomStream::new(seed, ids::stream_id(ids::PURPOSE_LOSS, source, k));
        let surviving = apply_loss(&mut loss_rng, &chunk.events, per_photon_transmission)
            .expect("transmission validated");
        let (signal_events, idler_events): (Vec<_>, Vec<_>) =
            surviving.iter().partition(|e| e.role == Role::Signal);

        let mut out = ChunkOut {
            signal_candidates: Vec::new(),
            idler_candidates: Vec::new(),
            created_pairs: chunk.pair_count,
            surviving_photons: surviving.len() as u64,
        };
        for (events, detector, det_id, sink) in [
            (
                &signal_events,
                signal_detector,
                SIGNAL_DET,
                &mut out.signal_candidates,
            ),
            (
                &idler_events,
                idler_detector,
                IDLER_DET,
                &mut out.idler_candidates,
            ),
        ] {
            let mut click_rng =
                RandomStream::new(seed, ids::stream_id(ids::PURPOSE_CLICKS, det_id, k));
            let mut candidates = photon_click_candidates(&mut click_rng, events, detector, det_id);
            let mut dark_rng =
                RandomStream::new(seed, ids::stream_id(ids::PURPOSE_DARKS, det_id, k));
            candidates.extend(dark_candidates(
                &mut dark_rng,
                detector,
                det_id,
                chunk.t0_ps,
                chunk.t1_ps,
            ));
            sort_records(&mut candidates);
            *sink = candidates;
        }
        out
    };

    let mut signal_records = Vec::new();
    let mut idler_records = Vec::new();
    let mut stats = RunStats::default();
    let mut signal_gate = DeadTimeGate::new(signal_detector.dead_time_ps());
    let mut idler_gate = DeadTimeGate::new(idler_detector.dead_time_ps());

    drive_chunks(n_chunks, worker, |_, out: ChunkOut| {
        stats.created_pairs += out.created_pairs;
        stats.surviving_photons += out.surviving_photons;
        signal_gate.filter_sorted(out.signal_candidates, &mut signal_records);
        idler_gate.filter_sorted(out.idler_candidates, &mut idler_records);
    });

    Ok(TwoDetectorResult {
        signal_records,
        idler_records,
        stats,
    })
}
