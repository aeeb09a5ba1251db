//! Two-source Hong-Ou-Mandel interference with four-fold postselection.
//!
//! Signal photons from two autonomous CW sources meet on a beamsplitter;
//! idlers herald their pairs. Interference is semi-quantum: a trial of two
//! lone photons bunches according to the spectral-amplitude overlap at
//! their realized arrival-time difference, while trials contaminated by
//! multipair emission are demoted to distinguishable statistics (overlap
//! zero). Dark counts can complete heralds or beamsplitter coincidences
//! and feed the flat background.

mod run;

pub use run::{estimated_created_pairs, run_hom};

use crate::coincidence::CoincidenceHistogram;
use crate::constants::SPEED_OF_LIGHT;
use crate::engine::{DetectorConfig, EngineError};
use crate::fit::{fit_gaussian, FitError, GaussianGuess};
use crate::radiometry::SourceConfig;
use crate::spectra::{FilterChain, SpectraError, SpectralProfile};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HomError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(
        "insufficient four-fold statistics: {wing_events} wing events < {needed}; simulate longer or raise efficiency_boost"
    )]
    InsufficientStatistics { wing_events: u64, needed: u64 },
    #[error("dip fit did not converge: {0}")]
    Fit(#[from] FitError),
    #[error("{name} must lie in [0, 1], got {value}")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// One source arm: the pair source, its two filter chains, and the
/// per-photon optical transmission of that arm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceArm {
    pub source: SourceConfig,
    pub signal_chain: FilterChain,
    pub idler_chain: FilterChain,
    pub per_photon_transmission: f64,
}

/// Full two-source experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HomConfig {
    pub source_a: SourceArm,
    pub source_b: SourceArm,
    /// Beamsplitter reflectivity (0.5 for the balanced splitter).
    pub bs_reflectivity: f64,
    /// The two detectors on the beamsplitter output ports.
    pub signal_detectors: [DetectorConfig; 2],
    /// The two heralding detectors on the idler arms.
    pub herald_detectors: [DetectorConfig; 2],
    /// Histogram range: measured delays τ ∈ [−range, +range).
    pub coincidence_range_ps: f64,
    /// A herald click must fall within this window of the beamsplitter
    /// coincidence to qualify the event.
    pub herald_window_ps: f64,
    /// Multiplies all detector efficiencies (capped at 1) for statistics
    /// runs; the physics path is identical.
    pub efficiency_boost: f64,
    /// Half-width of the multipair demotion window; defaults to
    /// 0.75 × coherence FWHM per source.
    pub multipair_window_ps: Option<f64>,
    pub histogram_bin_ps: f64,
    /// Minimum four-fold events in the wings before the dip is fitted.
    pub min_wing_events: u64,
    pub chunk_ps: f64,
}

impl HomConfig {
    pub fn validate(&self) -> Result<(), HomError> {
        for (name, value) in [
            ("bs_reflectivity", self.bs_reflectivity),
            (
                "source_a.per_photon_transmission",
                self.source_a.per_photon_transmission,
            ),
            (
                "source_b.per_photon_transmission",
                self.source_b.per_photon_transmission,
            ),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(HomError::NotAProbability { name, value });
            }
        }
        for (name, value) in [
            ("coincidence_range_ps", self.coincidence_range_ps),
            ("herald_window_ps", self.herald_window_ps),
            ("efficiency_boost", self.efficiency_boost),
            ("histogram_bin_ps", self.histogram_bin_ps),
            ("chunk_ps", self.chunk_ps),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(HomError::NonPositive { name, value });
            }
        }
        for d in self.signal_detectors.iter().chain(&self.herald_detectors) {
            d.validate()?;
        }
        Ok(())
    }
}

/// Dip measurement summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DipResult {
    /// Four-fold coincidences versus measured delay τ.
    pub histogram: CoincidenceHistogram,
    pub visibility: f64,
    pub v_max: f64,
    pub v_min: f64,
    pub dip_width_fwhm_ps: f64,
    pub fourfold_rate_per_hour: f64,
    pub fourfold_count: u64,
    /// Beamsplitter two-fold coincidences inside the range (herald
    /// requirement not yet applied); always ≥ the four-fold count.
    pub twofold_count: u64,
    pub trials: u64,
    pub contaminated_trials: u64,
    /// Beamsplitter trials far out on the pairing window (no packet
    /// overlap) and how many of them split to different ports; the ratio
    /// converges to the classical ½.
    pub wing_trials: u64,
    pub wing_trials_different_port: u64,
    pub created_pairs: [u64; 2],
    pub duration_ps: f64,
}

/// |∫ Ã*(ν) B̃(ν) e^{i2πνδt} dν|² for unit-normalized spectral amplitudes,
/// by trapezoid quadrature on a shared frequency grid.
///
/// The common carrier phase is removed before integrating (it cancels in
/// the modulus), so the quadrature stays accurate at large delays.
pub fn wavepacket_overlap(
    profile_a: &SpectralProfile,
    profile_b: &SpectralProfile,
    delay_ps: f64,
) -> f64 {
    const POINTS: usize = crate::spectra::GRID_POINTS;
    // Work in THz so that ν·δt[ps] is O(1).
    let c_nm_thz = SPEED_OF_LIGHT * 1e-3;
    let nu_a = c_nm_thz / profile_a.center_nm;
    let nu_b = c_nm_thz / profile_b.center_nm;
    let fw_a = c_nm_thz * profile_a.fwhm_nm() / (profile_a.center_nm * profile_a.center_nm);
    let fw_b = c_nm_thz * profile_b.fwhm_nm() / (profile_b.center_nm * profile_b.center_nm);
    let lo = (nu_a - 5.0 * fw_a).min(nu_b - 5.0 * fw_b);
    let hi = (nu_a + 5.0 * fw_a).max(nu_b + 5.0 * fw_b);
    let step = (hi - lo) / (POINTS - 1) as f64;
    let nu_ref = 0.5 * (nu_a + nu_b);

    // Normalizations ∫|Ã|² dν with the same rule as the overlap integral.
    let mut norm_a = 0.0f64;
    let mut norm_b = 0.0f64;
    let mut re = 0.0f64;
    let mut im = 0.0f64;
    for k in 0..POINTS {
        let nu = lo + step * k as f64;
        let w = if k == 0 || k == POINTS - 1 { 0.5 } else { 1.0 };
        let sa = profile_a.shape.value(nu - nu_a, fw_a);
        let sb = profile_b.shape.value(nu - nu_b, fw_b);
        norm_a += w * sa;
        norm_b += w * sb;
        let amp = (sa * sb).sqrt();
        if amp > 0.0 {
            let phase = std::f64::consts::TAU * (nu - nu_ref) * delay_ps;
            re += w * amp * phase.cos();
            im += w * amp * phase.sin();
        }
    }
    if norm_a <= 0.0 || norm_b <= 0.0 {
        return 0.0;
    }
    (((re * re + im * im) / (norm_a * norm_b)).abs()).min(1.0)
}

/// Output-port assignment of a beamsplitter trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsOutcome {
    /// Photon a exits one port and photon b the other; `swapped` says
    /// whether a took port 1 instead of port 0.
    DifferentPorts { swapped: bool },
    /// Both photons bunch into `port`.
    SamePort { port: u8 },
}

/// Routes a two-photon trial through the beamsplitter.
///
/// For reflectivity R and overlap V the different-port probability is
/// R² + T² − 2RT·V: ½(1 − V) on a balanced splitter, the ½ classical
/// limit at V = 0, and 0 at V = 1.
pub fn beamsplit<R: Rng + ?Sized>(rng: &mut R, overlap: f64, reflectivity: f64) -> BsOutcome {
    let r = reflectivity;
    let t = 1.0 - r;
    let p_diff = (r * r + t * t - 2.0 * r * t * overlap).clamp(0.0, 1.0);
    if rng.gen::<f64>() < p_diff {
        BsOutcome::DifferentPorts {
            swapped: rng.gen::<f64>() < 0.5,
        }
    } else {
        BsOutcome::SamePort {
            port: (rng.gen::<f64>() < 0.5) as u8,
        }
    }
}

/// Fitted dip curve R(τ) = R₀·(1 − V·exp(−τ²·4ln2/w²)).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DipCurve {
    pub center_ps: f64,
    pub visibility: f64,
    pub width_fwhm_ps: f64,
    pub baseline: f64,
    pub residual_sse: f64,
}

/// Fits the dip profile of a four-fold histogram. `width_hint_ps` seeds the
/// fit (the photon coherence FWHM convolved with jitter is a good hint).
pub fn dip_profile(
    histogram: &CoincidenceHistogram,
    width_hint_ps: f64,
) -> Result<DipCurve, HomError> {
    let bins = histogram.counts.len();
    if bins < 8 {
        return Err(HomError::Fit(FitError::NotEnoughPoints {
            needed: 8,
            got: bins,
        }));
    }
    let xs: Vec<f64> = histogram.bin_centers().collect();
    let ys: Vec<f64> = histogram.counts.iter().map(|&c| c as f64).collect();
    // Wing level from the outer quarter of the range on both sides.
    let quarter = bins / 4;
    let wing_mean = (ys[..quarter].iter().sum::<f64>() + ys[bins - quarter..].iter().sum::<f64>())
        / (2 * quarter) as f64;
    // Deepest bin near the center seeds the dip.
    let central = &ys[quarter..bins - quarter];
    let (min_off, min_val) = central
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("non-empty");
    let guess = GaussianGuess {
        center: xs[quarter + min_off],
        fwhm: width_hint_ps.max(4.0 * histogram.bin_width_ps),
        amplitude: min_val - wing_mean,
        baseline: wing_mean.max(1.0),
    };
    let fit = fit_gaussian(&xs, &ys, guess)?;
    let baseline = fit.baseline;
    let visibility = if baseline > 0.0 {
        (-fit.amplitude / baseline).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(DipCurve {
        center_ps: fit.center,
        visibility,
        width_fwhm_ps: fit.fwhm.abs(),
        baseline,
        residual_sse: fit.sse,
    })
}
