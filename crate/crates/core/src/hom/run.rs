//! Streaming execution of the two-source HOM experiment.
//!
//! Chunk workers generate, thin and realize both sources' photons in
//! parallel; a sequential pass forms beamsplitter trials, routes ports,
//! applies detector response, and scans for four-fold coincidences. All
//! cross-chunk couplings (multipair edges, trial pairing, dead time,
//! coincidence windows) ride in small carry buffers, so memory stays flat
//! at any duration.

use super::{beamsplit, wavepacket_overlap, BsOutcome, DipResult, HomConfig, HomError};
use crate::coincidence::CoincidenceHistogram;
use crate::constants::fwhm_to_sigma;
use crate::engine::pipeline::{chunk_count, drive_chunks, generate_chunk};
use crate::engine::{
    apply_loss, clicks_from_arrivals, dark_candidates, ids, realize_arrivals, sort_records,
    DeadTimeGate, DetectionRecord, DetectorConfig, Origin, PairGenerator, RandomStream, Role,
};
use crate::spectra::SpectralProfile;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::VecDeque;

/// Trial pairing horizon in units of the larger coherence FWHM; beyond it
/// the overlap is ≲ e⁻⁵⁰ and routing is indistinguishable from classical.
const PAIRING_WINDOW_COHERENCE_UNITS: f64 = 6.0;

/// One signal photon at the beamsplitter input.
#[derive(Debug, Clone, Copy)]
struct BsArrival {
    arrival_ps: f64,
    pair_id: u64,
    source_id: u32,
    isolated: bool,
}

/// Precomputed overlap against |δt| on a fixed grid; each trial costs one
/// interpolation instead of a quadrature.
struct OverlapTable {
    step_ps: f64,
    values: Vec<f64>,
}

impl OverlapTable {
    fn new(profile_a: &SpectralProfile, profile_b: &SpectralProfile, span_ps: f64) -> Self {
        const POINTS: usize = 2049;
        let span = span_ps.max(1.0);
        let step_ps = span / (POINTS - 1) as f64;
        let values = (0..POINTS)
            .map(|k| wavepacket_overlap(profile_a, profile_b, step_ps * k as f64))
            .collect();
        Self { step_ps, values }
    }

    #[inline]
    fn eval(&self, dt_abs_ps: f64) -> f64 {
        let pos = dt_abs_ps / self.step_ps;
        let k = pos as usize;
        if k + 1 >= self.values.len() {
            return 0.0;
        }
        let frac = pos - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StreamTag {
    Port(usize),
    Herald(usize),
}

/// Window join over the four gated click streams: counts beamsplitter
/// two-folds within the range, qualifies them by herald clicks around the
/// pair, and bins the measured delay.
struct FourFoldScanner {
    range_ps: f64,
    herald_window_ps: f64,
    ports: [VecDeque<f64>; 2],
    heralds: [VecDeque<f64>; 2],
    /// (t at port 0, t at port 1), ordered by the later click.
    pending: VecDeque<(f64, f64)>,
    hist: CoincidenceHistogram,
    twofold: u64,
    fourfold: u64,
}

impl FourFoldScanner {
    fn new(range_ps: f64, herald_window_ps: f64, bin_ps: f64) -> Self {
        Self {
            range_ps,
            herald_window_ps,
            ports: [VecDeque::new(), VecDeque::new()],
            heralds: [VecDeque::new(), VecDeque::new()],
            pending: VecDeque::new(),
            hist: CoincidenceHistogram::new(bin_ps, -range_ps, range_ps)
                .expect("validated binning"),
            twofold: 0,
            fourfold: 0,
        }
    }

    /// Clicks must arrive in global time order across all four streams.
    fn push(&mut self, tag: StreamTag, t: f64) {
        match tag {
            StreamTag::Port(p) => {
                let opp = 1 - p;
                for &t_opp in self.ports[opp].iter().rev() {
                    if t - t_opp > self.range_ps {
                        break;
                    }
                    let pair = if p == 1 { (t_opp, t) } else { (t, t_opp) };
                    let tau = pair.1 - pair.0;
                    if tau >= -self.range_ps && tau < self.range_ps {
                        self.twofold += 1;
                        self.pending.push_back(pair);
                    }
                }
                self.ports[p].push_back(t);
                while let Some(&front) = self.ports[p].front() {
                    if t - front > self.range_ps {
                        self.ports[p].pop_front();
                    } else {
                        break;
                    }
                }
            }
            StreamTag::Herald(h) => self.heralds[h].push_back(t),
        }
    }

    fn herald_in(&self, h: usize, lo: f64, hi: f64) -> bool {
        self.heralds[h].iter().any(|&t| t >= lo && t <= hi)
    }

    /// Evaluates pending pairs whose herald windows close before the
    /// watermark and trims stale herald history.
    fn advance(&mut self, watermark_ps: f64) {
        while let Some(&(t0, t1)) = self.pending.front() {
            let hi = t0.max(t1);
            if hi + self.herald_window_ps > watermark_ps {
                break;
            }
            let lo = t0.min(t1);
            let window = (lo - self.herald_window_ps, hi + self.herald_window_ps);
            if self.herald_in(0, window.0, window.1) && self.herald_in(1, window.0, window.1) {
                self.fourfold += 1;
                self.hist.record(t1 - t0);
            }
            self.pending.pop_front();
        }
        let keep_from = self
            .pending
            .front()
            .map(|&(t0, t1)| t0.min(t1))
            .unwrap_or(watermark_ps)
            - self.herald_window_ps
            - self.range_ps;
        for heralds in &mut self.heralds {
            while let Some(&front) = heralds.front() {
                if front < keep_from {
                    heralds.pop_front();
                } else {
                    break;
                }
            }
        }
    }
}

struct HomChunkOut {
    bs: [Vec<BsArrival>; 2],
    herald_candidates: [Vec<DetectionRecord>; 2],
    first_emission: [Option<f64>; 2],
    last_emission: [Option<f64>; 2],
    created: [u64; 2],
}

/// Sequential state: pairing automaton, staging buffers, gates, scanner.
struct Stitch<'a> {
    config: &'a HomConfig,
    sspd: [DetectorConfig; 2],
    jitter_sigma: [f64; 2],
    table: &'a OverlapTable,
    pairing_window_ps: f64,
    routing_rng: RandomStream,
    arrivals: [Vec<BsArrival>; 2],
    pending: [VecDeque<BsArrival>; 2],
    port_stage: [Vec<DetectionRecord>; 2],
    herald_stage: [Vec<DetectionRecord>; 2],
    port_gates: [DeadTimeGate; 2],
    herald_gates: [DeadTimeGate; 2],
    scanner: FourFoldScanner,
    trials: u64,
    contaminated_trials: u64,
    wing_trials: u64,
    wing_trials_different_port: u64,
}

impl<'a> Stitch<'a> {
    #[inline]
    fn emit_click(&mut self, port: usize, arrival_ps: f64, origin: Origin) {
        if self.routing_rng.gen::<f64>() >= self.sspd[port].efficiency {
            return;
        }
        let mut t = arrival_ps;
        if self.jitter_sigma[port] > 0.0 {
            let z: f64 = StandardNormal.sample(&mut self.routing_rng);
            t += z * self.jitter_sigma[port];
        }
        self.port_stage[port].push(DetectionRecord {
            detector_id: port as u32,
            timestamp_ps: t,
            origin,
        });
    }

    fn route_single(&mut self, source: usize, arr: BsArrival) {
        // Input a reflects to port 0, input b to port 1.
        let reflected = self.routing_rng.gen::<f64>() < self.config.bs_reflectivity;
        let port = if reflected { source } else { 1 - source };
        self.emit_click(
            port,
            arr.arrival_ps,
            Origin::Photon {
                pair_id: arr.pair_id,
                source_id: arr.source_id,
                role: Role::Signal,
            },
        );
    }

    fn process_trial(&mut self, a: BsArrival, b: BsArrival) {
        self.trials += 1;
        let delta_ps = (b.arrival_ps - a.arrival_ps).abs();
        let overlap = if a.isolated && b.isolated {
            self.table.eval(delta_ps)
        } else {
            self.contaminated_trials += 1;
            0.0
        };
        let outcome = beamsplit(&mut self.routing_rng, overlap, self.config.bs_reflectivity);
        // Routing statistics far out on the trial window, where the
        // packets no longer overlap: the classical ½ limit.
        if delta_ps >= 0.75 * self.pairing_window_ps {
            self.wing_trials += 1;
            if matches!(outcome, BsOutcome::DifferentPorts { .. }) {
                self.wing_trials_different_port += 1;
            }
        }
        let (port_a, port_b) = match outcome {
            BsOutcome::DifferentPorts { swapped: false } => (0, 1),
            BsOutcome::DifferentPorts { swapped: true } => (1, 0),
            BsOutcome::SamePort { port } => (port as usize, port as usize),
        };
        for (arr, port) in [(a, port_a), (b, port_b)] {
            self.emit_click(
                port,
                arr.arrival_ps,
                Origin::Photon {
                    pair_id: arr.pair_id,
                    source_id: arr.source_id,
                    role: Role::Signal,
                },
            );
        }
    }

    fn feed(&mut self, source: usize, arr: BsArrival) {
        let t = arr.arrival_ps;
        for q in 0..2 {
            while let Some(front) = self.pending[q].front() {
                if front.arrival_ps < t - self.pairing_window_ps {
                    let expired = self.pending[q].pop_front().unwrap();
                    self.route_single(q, expired);
                } else {
                    break;
                }
            }
        }
        let opposite = 1 - source;
        if let Some(partner) = self.pending[opposite].pop_front() {
            let (a, b) = if source == 0 {
                (arr, partner)
            } else {
                (partner, arr)
            };
            self.process_trial(a, b);
        } else {
            self.pending[source].push_back(arr);
        }
    }

    /// Runs the pairing automaton over staged arrivals up to the watermark.
    fn process_arrivals(&mut self, watermark_ps: f64) {
        let limits = [
            self.arrivals[0].partition_point(|a| a.arrival_ps < watermark_ps),
            self.arrivals[1].partition_point(|a| a.arrival_ps < watermark_ps),
        ];
        let (mut i, mut j) = (0usize, 0usize);
        while i < limits[0] || j < limits[1] {
            let take_a = j >= limits[1]
                || (i < limits[0]
                    && self.arrivals[0][i].arrival_ps <= self.arrivals[1][j].arrival_ps);
            if take_a {
                let arr = self.arrivals[0][i];
                i += 1;
                self.feed(0, arr);
            } else {
                let arr = self.arrivals[1][j];
                j += 1;
                self.feed(1, arr);
            }
        }
        self.arrivals[0].drain(..limits[0]);
        self.arrivals[1].drain(..limits[1]);
    }

    fn flush_pending(&mut self) {
        for q in 0..2 {
            while let Some(arr) = self.pending[q].pop_front() {
                self.route_single(q, arr);
            }
        }
    }

    /// Sorts staged clicks, gates everything below the watermark through
    /// dead time, and feeds the scanner in global time order.
    fn emit_clicks(&mut self, watermark_ps: f64) {
        let mut batch: Vec<(f64, StreamTag)> = Vec::new();
        for port in 0..2 {
            let stage = &mut self.port_stage[port];
            sort_records(stage);
            let cut = stage.partition_point(|r| r.timestamp_ps < watermark_ps);
            let mut accepted = Vec::new();
            self.port_gates[port].filter_sorted(stage.drain(..cut), &mut accepted);
            batch.extend(
                accepted
                    .into_iter()
                    .map(|r| (r.timestamp_ps, StreamTag::Port(port))),
            );
        }
        for h in 0..2 {
            let stage = &mut self.herald_stage[h];
            sort_records(stage);
            let cut = stage.partition_point(|r| r.timestamp_ps < watermark_ps);
            let mut accepted = Vec::new();
            self.herald_gates[h].filter_sorted(stage.drain(..cut), &mut accepted);
            batch.extend(
                accepted
                    .into_iter()
                    .map(|r| (r.timestamp_ps, StreamTag::Herald(h))),
            );
        }
        batch.sort_unstable_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                let key = |t: StreamTag| match t {
                    StreamTag::Port(p) => p,
                    StreamTag::Herald(h) => 2 + h,
                };
                key(a.1).cmp(&key(b.1))
            })
        });
        for (t, tag) in batch {
            self.scanner.push(tag, t);
        }
        self.scanner.advance(watermark_ps);
    }
}

/// Merges a sorted batch into a sorted carry buffer. The carry is small
/// (everything below the previous watermark was drained), so the common
/// case is a plain append.
fn merge_sorted_arrivals(dst: &mut Vec<BsArrival>, mut add: Vec<BsArrival>) {
    if add.is_empty() {
        return;
    }
    if dst.is_empty() {
        *dst = add;
        return;
    }
    if dst.last().unwrap().arrival_ps <= add.first().unwrap().arrival_ps {
        dst.append(&mut add);
        return;
    }
    let mut merged = Vec::with_capacity(dst.len() + add.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < dst.len() && j < add.len() {
        if dst[i].arrival_ps <= add[j].arrival_ps {
            merged.push(dst[i]);
            i += 1;
        } else {
            merged.push(add[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&dst[i..]);
    merged.extend_from_slice(&add[j..]);
    *dst = merged;
}

/// Expected created pairs over the run (both sources), for work estimates.
pub fn estimated_created_pairs(config: &HomConfig, duration_ps: f64) -> Result<f64, HomError> {
    let gen_a = arm_generator(0, config, &config.source_a)?;
    let gen_b = arm_generator(1, config, &config.source_b)?;
    Ok(gen_a.expected_pairs(duration_ps) + gen_b.expected_pairs(duration_ps))
}

fn arm_generator(
    source_id: u32,
    config: &HomConfig,
    arm: &super::SourceArm,
) -> Result<PairGenerator, HomError> {
    Ok(PairGenerator::new(
        source_id,
        &arm.source,
        &arm.signal_chain,
        &arm.idler_chain,
        config.multipair_window_ps,
    )?)
}

fn photon_profile(generator: &PairGenerator, arm: &super::SourceArm) -> SpectralProfile {
    let center = arm
        .signal_chain
        .nominal_center_nm()
        .unwrap_or(arm.source.spdc_center_nm);
    // Invert τ_c = 0.44 λ²/(c Δλ) to express the joint-filtered packet as
    // an equivalent spectral width for the overlap integral.
    let fwhm_nm = crate::constants::TIME_BANDWIDTH_GAUSSIAN * center * center
        / (crate::constants::SPEED_OF_LIGHT * 1e-3 * generator.coherence_fwhm_ps());
    SpectralProfile {
        center_nm: center,
        fwhm_pm: fwhm_nm * crate::constants::PM_PER_NM,
        shape: generator.wavepacket_shape(),
    }
}

/// Runs the full two-source HOM experiment for a simulated duration and
/// extracts the dip.
pub fn run_hom(seed: u64, config: &HomConfig, duration_ps: f64) -> Result<DipResult, HomError> {
    config.validate()?;
    let boost = config.efficiency_boost;
    let sspd = [
        config.signal_detectors[0].boosted(boost),
        config.signal_detectors[1].boosted(boost),
    ];
    let herald_det = [
        config.herald_detectors[0].boosted(boost),
        config.herald_detectors[1].boosted(boost),
    ];

    let generators = [
        arm_generator(0, config, &config.source_a)?,
        arm_generator(1, config, &config.source_b)?,
    ];
    let arms = [&config.source_a, &config.source_b];
    let max_coh = generators[0]
        .coherence_fwhm_ps()
        .max(generators[1].coherence_fwhm_ps());
    let max_jitter = sspd
        .iter()
        .chain(&herald_det)
        .map(|d| d.jitter_fwhm_ps)
        .fold(0.0f64, f64::max);
    let pairing_window = PAIRING_WINDOW_COHERENCE_UNITS * max_coh;
    let spill_margin = 4.0 * max_coh + 500.0;
    let click_lag = spill_margin + pairing_window + 4.0 * max_jitter + 500.0;

    let profiles = [
        photon_profile(&generators[0], arms[0]),
        photon_profile(&generators[1], arms[1]),
    ];
    let table = OverlapTable::new(&profiles[0], &profiles[1], pairing_window);

    let n_chunks = chunk_count(duration_ps, config.chunk_ps);
    let chunk_ps = config.chunk_ps;

    let worker = |k: u64| -> HomChunkOut {
        let t0 = k as f64 * chunk_ps;
        let t1 = (t0 + chunk_ps).min(duration_ps);
        let mut out = HomChunkOut {
            bs: [Vec::new(), Vec::new()],
            herald_candidates: [Vec::new(), Vec::new()],
            first_emission: [None, None],
            last_emission: [None, None],
            created: [0, 0],
        };
        for s in 0..2usize {
            let generator = &generators[s];
            let chunk = generate_chunk(generator, seed, k, n_chunks, chunk_ps, duration_ps);
            out.first_emission[s] = chunk.first_emission_ps;
            out.last_emission[s] = chunk.last_emission_ps;
            out.created[s] = chunk.pair_count;

            let mut loss_rng = RandomStream::new(
                seed,
                ids::stream_id(ids::PURPOSE_LOSS, s as u32, k),
            );
            let surviving = apply_loss(
                &mut loss_rng,
                &chunk.events,
                arms[s].per_photon_transmission,
            )
            .expect("transmission validated");
            drop(chunk);

            let mut wp_rng = RandomStream::new(
                seed,
                ids::stream_id(ids::PURPOSE_WAVEPACKET, s as u32, k),
            );
            let arrivals = realize_arrivals(&mut wp_rng, &surviving);
            drop(surviving);

            let mut idler_arrivals: Vec<(f64, Origin)> = Vec::new();
            for a in &arrivals {
                match a.event.role {
                    Role::Signal => out.bs[s].push(BsArrival {
                        arrival_ps: a.arrival_ps,
                        pair_id: a.event.pair_id,
                        source_id: a.event.source_id,
                        isolated: a.event.isolated,
                    }),
                    Role::Idler => idler_arrivals.push((
                        a.arrival_ps,
                        Origin::Photon {
                            pair_id: a.event.pair_id,
                            source_id: a.event.source_id,
                            role: Role::Idler,
                        },
                    )),
                }
            }
            out.bs[s].sort_unstable_by(|x, y| x.arrival_ps.total_cmp(&y.arrival_ps));
            idler_arrivals.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));

            let herald_id = (2 + s) as u32;
            let mut click_rng =
                RandomStream::new(seed, ids::stream_id(ids::PURPOSE_CLICKS, herald_id, k));
            let mut candidates = clicks_from_arrivals(
                &mut click_rng,
                idler_arrivals.into_iter(),
                &herald_det[s],
                herald_id,
            );
            let mut dark_rng =
                RandomStream::new(seed, ids::stream_id(ids::PURPOSE_DARKS, herald_id, k));
            candidates.extend(dark_candidates(&mut dark_rng, &herald_det[s], herald_id, t0, t1));
            sort_records(&mut candidates);
            out.herald_candidates[s] = candidates;
        }
        out
    };

    let mut stitch = Stitch {
        config,
        sspd,
        jitter_sigma: [
            fwhm_to_sigma(sspd[0].jitter_fwhm_ps),
            fwhm_to_sigma(sspd[1].jitter_fwhm_ps),
        ],
        table: &table,
        pairing_window_ps: pairing_window,
        routing_rng: RandomStream::new(seed, ids::stream_id(ids::PURPOSE_ROUTING, 0, 0)),
        arrivals: [Vec::new(), Vec::new()],
        pending: [VecDeque::new(), VecDeque::new()],
        port_stage: [Vec::new(), Vec::new()],
        herald_stage: [Vec::new(), Vec::new()],
        port_gates: [
            DeadTimeGate::new(sspd[0].dead_time_ps()),
            DeadTimeGate::new(sspd[1].dead_time_ps()),
        ],
        herald_gates: [
            DeadTimeGate::new(herald_det[0].dead_time_ps()),
            DeadTimeGate::new(herald_det[1].dead_time_ps()),
        ],
        scanner: FourFoldScanner::new(
            config.coincidence_range_ps,
            config.herald_window_ps,
            config.histogram_bin_ps,
        ),
        trials: 0,
        contaminated_trials: 0,
        wing_trials: 0,
        wing_trials_different_port: 0,
    };

    let mut created = [0u64; 2];
    let mut prev_last_emission: [Option<f64>; 2] = [None, None];

    drive_chunks(n_chunks, worker, |k, mut out: HomChunkOut| {
        let t1 = ((k + 1) as f64 * chunk_ps).min(duration_ps);
        for s in 0..2usize {
            // Left-edge multipair fix: the first pair of this chunk is
            // crowded when the previous chunk ended close to it.
            if let (Some(first), Some(prev_last)) = (out.first_emission[s], prev_last_emission[s])
            {
                if first - prev_last <= generators[s].multipair_halfwidth_ps() {
                    let first_id = k << 32;
                    for arr in out.bs[s].iter_mut() {
                        if arr.pair_id == first_id {
                            arr.isolated = false;
                        }
                    }
                }
            }
            prev_last_emission[s] = out.last_emission[s].or(prev_last_emission[s]);
            created[s] += out.created[s];

            // Stage arrivals: merge the sorted carry with the sorted chunk.
            merge_sorted_arrivals(&mut stitch.arrivals[s], std::mem::take(&mut out.bs[s]));
            stitch.herald_stage[s].extend(out.herald_candidates[s].drain(..));
        }
        stitch.process_arrivals(t1 - spill_margin);
        for port in 0..2usize {
            let mut dark_rng =
                RandomStream::new(seed, ids::stream_id(ids::PURPOSE_DARKS, port as u32, k));
            let darks = dark_candidates(
                &mut dark_rng,
                &stitch.sspd[port],
                port as u32,
                k as f64 * chunk_ps,
                t1,
            );
            stitch.port_stage[port].extend(darks);
        }
        stitch.emit_clicks(t1 - click_lag);
    });

    // Final drain: no future arrivals or clicks can appear.
    stitch.process_arrivals(f64::INFINITY);
    stitch.flush_pending();
    stitch.emit_clicks(f64::INFINITY);
    stitch.scanner.advance(f64::INFINITY);

    let scanner = stitch.scanner;
    debug_assert!(scanner.fourfold <= scanner.twofold);
    let hist = scanner.hist;

    // Statistics gate before fitting: the wings must carry enough events.
    let wing_events: u64 = hist
        .counts
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let center = hist.bin_center_ps(*i);
            center.abs() > 0.5 * config.coincidence_range_ps
        })
        .map(|(_, &c)| c)
        .sum();
    if wing_events < config.min_wing_events {
        return Err(HomError::InsufficientStatistics {
            wing_events,
            needed: config.min_wing_events,
        });
    }

    let sspd_jitter_sq: f64 = sspd.iter().map(|d| d.jitter_fwhm_ps.powi(2)).sum();
    let width_hint = (2.0 * max_coh * max_coh + sspd_jitter_sq).sqrt();
    let curve = super::dip_profile(&hist, width_hint)?;
    let v_max = curve.baseline;
    let v_min = (v_max * (1.0 - curve.visibility)).max(0.0);
    let hours = duration_ps * crate::constants::S_PER_PS / 3600.0;

    Ok(DipResult {
        visibility: curve.visibility,
        v_max,
        v_min,
        dip_width_fwhm_ps: curve.width_fwhm_ps,
        fourfold_rate_per_hour: scanner.fourfold as f64 / hours,
        fourfold_count: scanner.fourfold,
        twofold_count: scanner.twofold,
        trials: stitch.trials,
        contaminated_trials: stitch.contaminated_trials,
        wing_trials: stitch.wing_trials,
        wing_trials_different_port: stitch.wing_trials_different_port,
        created_pairs: created,
        duration_ps,
        histogram: hist,
    })
}
