//! Time-difference histograms between detector streams, gaussian peak
//! fitting, and two-detector jitter deconvolution.
//!
//! Matching is all-pairs within the window: every (start, stop) click pair
//! whose difference falls inside the range is binned, mirroring a TDC that
//! records all arrival-time differences in parallel rather than
//! first-stop-only.

use crate::fit::{fit_gaussian, FitError, GaussianGuess};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoincidenceError {
    #[error("bin width must be positive, got {0}")]
    BadBinWidth(f64),
    #[error("range must satisfy min < max and be finite, got [{min}, {max})")]
    BadRange { min: f64, max: f64 },
    #[error(
        "no dominant peak: max bin {peak} < 5 × median bin {median} over {bins} bins ({total} counts)"
    )]
    NoDominantPeak { peak: u64, median: u64, bins: usize, total: u64 },
    #[error("rebin factor must be ≥ 1")]
    BadRebinFactor,
    #[error("peak fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("measured width {measured_ps} ps does not exceed the jitter {jitter_ps} ps")]
    NothingToDeconvolve { measured_ps: f64, jitter_ps: f64 },
}

/// Binned time-difference counts over a half-open range [min, max).
///
/// When the range is not a whole number of bins the top bin is partial
/// (it covers less than `bin_width_ps`); pick a commensurate range when
/// per-bin rates are compared directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width_ps: f64,
    pub min_ps: f64,
    pub max_ps: f64,
    pub counts: Vec<u64>,
    /// Number of (start, stop) pairs recorded: Σ counts.
    pub total_events: u64,
}

impl CoincidenceHistogram {
    pub fn new(bin_width_ps: f64, min_ps: f64, max_ps: f64) -> Result<Self, CoincidenceError> {
        if !(bin_width_ps > 0.0) || !bin_width_ps.is_finite() {
            return Err(CoincidenceError::BadBinWidth(bin_width_ps));
        }
        if !(min_ps < max_ps) || !min_ps.is_finite() || !max_ps.is_finite() {
            return Err(CoincidenceError::BadRange {
                min: min_ps,
                max: max_ps,
            });
        }
        let bins = ((max_ps - min_ps) / bin_width_ps).ceil() as usize;
        Ok(Self {
            bin_width_ps,
            min_ps,
            max_ps,
            counts: vec![0; bins],
            total_events: 0,
        })
    }

    /// Records one time difference if it falls inside the range.
    #[inline]
    pub fn record(&mut self, delta_ps: f64) {
        if delta_ps >= self.min_ps && delta_ps < self.max_ps {
            let idx = ((delta_ps - self.min_ps) / self.bin_width_ps) as usize;
            let idx = idx.min(self.counts.len() - 1);
            self.counts[idx] += 1;
            self.total_events += 1;
        }
    }

    pub fn bin_center_ps(&self, index: usize) -> f64 {
        self.min_ps + (index as f64 + 0.5) * self.bin_width_ps
    }

    pub fn bin_centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.counts.len()).map(|i| self.bin_center_ps(i))
    }

    /// Elementwise merge of a partial histogram with identical binning.
    /// Partial histograms from partitioned start streams add exactly.
    pub fn merge(&mut self, other: &CoincidenceHistogram) {
        assert_eq!(self.counts.len(), other.counts.len(), "binning mismatch");
        assert_eq!(self.bin_width_ps, other.bin_width_ps, "binning mismatch");
        assert_eq!(self.min_ps, other.min_ps, "binning mismatch");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_events += other.total_events;
    }

    /// Coarsens by an integer factor; counts are conserved exactly.
    pub fn rebin(&self, factor: usize) -> Result<CoincidenceHistogram, CoincidenceError> {
        if factor == 0 {
            return Err(CoincidenceError::BadRebinFactor);
        }
        let counts: Vec<u64> = self
            .counts
            .chunks(factor)
            .map(|chunk| chunk.iter().sum())
            .collect();
        Ok(CoincidenceHistogram {
            bin_width_ps: self.bin_width_ps * factor as f64,
            min_ps: self.min_ps,
            max_ps: self.min_ps + self.bin_width_ps * factor as f64 * counts.len() as f64,
            counts,
            total_events: self.total_events,
        })
    }
}

/// All-pairs coincidence histogram between two time-ordered click streams.
///
/// For each start click, every stop click with a difference inside
/// [min, max) is binned at floor((Δt − min)/bin_width).
pub fn histogram(
    start_ps: &[f64],
    stop_ps: &[f64],
    bin_width_ps: f64,
    range_ps: (f64, f64),
) -> Result<CoincidenceHistogram, CoincidenceError> {
    let mut hist = CoincidenceHistogram::new(bin_width_ps, range_ps.0, range_ps.1)?;
    debug_assert!(start_ps.windows(2).all(|w| w[0] <= w[1]), "start stream unordered");
    debug_assert!(stop_ps.windows(2).all(|w| w[0] <= w[1]), "stop stream unordered");
    let mut lo = 0usize;
    for &t in start_ps {
        while lo < stop_ps.len() && stop_ps[lo] - t < range_ps.0 {
            lo += 1;
        }
        for &s in &stop_ps[lo..] {
            let delta = s - t;
            if delta >= range_ps.1 {
                break;
            }
            hist.record(delta);
        }
    }
    Ok(hist)
}

/// Gaussian peak parameters extracted from a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub center_ps: f64,
    pub fwhm_ps: f64,
    pub fwhm_stderr_ps: f64,
    pub amplitude: f64,
    pub baseline: f64,
}

/// Least-squares gaussian fit with a constant baseline.
///
/// Requires a dominant peak (max bin at least 5× the median bin).
pub fn fit_peak(hist: &CoincidenceHistogram) -> Result<PeakFit, CoincidenceError> {
    let bins = hist.counts.len();
    let peak_idx = hist
        .counts
        .iter()
        .enumerate()
        .max_by_key(|(_, &c)| c)
        .map(|(i, _)| i)
        .unwrap_or(0);
    let peak = *hist.counts.get(peak_idx).unwrap_or(&0);
    let mut sorted = hist.counts.clone();
    sorted.sort_unstable();
    let median = sorted[bins / 2];
    if peak == 0 || peak < 5 * median.max(1) {
        return Err(CoincidenceError::NoDominantPeak {
            peak,
            median,
            bins,
            total: hist.total_events,
        });
    }

    // Initial width from half-max crossings around the peak bin.
    let half = (peak as f64 + median as f64) / 2.0;
    let mut left = peak_idx;
    while left > 0 && hist.counts[left - 1] as f64 > half {
        left -= 1;
    }
    let mut right = peak_idx;
    while right + 1 < bins && hist.counts[right + 1] as f64 > half {
        right += 1;
    }
    let fwhm_guess = ((right - left + 1) as f64 * hist.bin_width_ps).max(hist.bin_width_ps);

    let xs: Vec<f64> = hist.bin_centers().collect();
    let ys: Vec<f64> = hist.counts.iter().map(|&c| c as f64).collect();
    let fit = fit_gaussian(
        &xs,
        &ys,
        GaussianGuess {
            center: hist.bin_center_ps(peak_idx),
            fwhm: fwhm_guess,
            amplitude: peak as f64 - median as f64,
            baseline: median as f64,
        },
    )?;
    Ok(PeakFit {
        center_ps: fit.center,
        fwhm_ps: fit.fwhm,
        fwhm_stderr_ps: fit.fwhm_stderr,
        amplitude: fit.amplitude,
        baseline: fit.baseline,
    })
}

/// Removes the two-detector jitter from a measured coincidence width and
/// splits the remainder equally between the two photons' wave packets:
/// sqrt((measured² − jitter²)/2), all gaussian.
pub fn deconvolve_photon_width(
    measured_fwhm_ps: f64,
    jitter_fwhm_ps: f64,
) -> Result<f64, CoincidenceError> {
    if measured_fwhm_ps <= jitter_fwhm_ps {
        return Err(CoincidenceError::NothingToDeconvolve {
            measured_ps: measured_fwhm_ps,
            jitter_ps: jitter_fwhm_ps,
        });
    }
    Ok(((measured_fwhm_ps * measured_fwhm_ps - jitter_fwhm_ps * jitter_fwhm_ps) / 2.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    #[test]
    fn identical_streams_peak_at_zero() {
        let stream: Vec<f64> = (0..1000).map(|i| i as f64 * 1e6).collect();
        let hist = histogram(&stream, &stream, 45.5, (-1000.0, 1000.0)).unwrap();
        let zero_bin = ((0.0 - hist.min_ps) / hist.bin_width_ps) as usize;
        assert_eq!(hist.counts[zero_bin], 1000);
        assert_eq!(hist.total_events, 1000);
        assert_eq!(hist.counts.iter().sum::<u64>(), 1000);
    }

    #[test]
    fn empty_streams_give_zero_histogram() {
        let hist = histogram(&[], &[1.0, 2.0], 45.5, (-1000.0, 1000.0)).unwrap();
        assert!(hist.counts.iter().all(|&c| c == 0));
        assert_eq!(hist.total_events, 0);
    }

    #[test]
    fn bin_count_matches_range() {
        let hist = CoincidenceHistogram::new(45.5, -10_000.0, 10_000.0).unwrap();
        assert_eq!(hist.counts.len(), (20_000.0f64 / 45.5).ceil() as usize);
    }

    #[test]
    fn rebin_conserves_counts() {
        let mut hist = CoincidenceHistogram::new(10.0, -500.0, 500.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            hist.record(rng.gen_range(-500.0..500.0));
        }
        for factor in [2, 3, 7, 100] {
            let rebinned = hist.rebin(factor).unwrap();
            assert_eq!(
                rebinned.counts.iter().sum::<u64>(),
                hist.counts.iter().sum::<u64>(),
                "factor {factor}"
            );
        }
    }

    #[test]
    fn swap_mirrors_histogram() {
        // Bin-exact mirroring needs the symmetric range to hold a whole
        // number of bins.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a: Vec<f64> = (0..20_000).map(|_| rng.gen_range(0.0..1e9)).collect();
        let mut b: Vec<f64> = (0..20_000).map(|_| rng.gen_range(0.0..1e9)).collect();
        a.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
        let fwd = histogram(&a, &b, 50.0, (-10_000.0, 10_000.0)).unwrap();
        let rev = histogram(&b, &a, 50.0, (-10_000.0, 10_000.0)).unwrap();
        let n = fwd.counts.len();
        assert_eq!(n, 400);
        for i in 0..n {
            assert_eq!(fwd.counts[i], rev.counts[n - 1 - i], "bin {i}");
        }
    }

    #[test]
    fn independent_poisson_streams_are_flat() {
        // Two independent exponential-gap streams: chi-square against
        // uniform at α = 0.01.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rate_per_ps = 1e-6; // 1 MHz
        let mut make = |rng: &mut ChaCha8Rng| {
            let mut t = 0.0f64;
            let mut out = Vec::new();
            while t < 1e12 {
                t += -rng.gen::<f64>().ln() / rate_per_ps;
                out.push(t);
            }
            out
        };
        let a = make(&mut rng);
        let b = make(&mut rng);
        let hist = histogram(&a, &b, 45.5, (-10_000.0, 10_000.0)).unwrap();
        let stat = crate::stats::chi2_uniform(&hist.counts);
        let crit = crate::stats::chi2_critical_1pct(hist.counts.len() - 1);
        assert!(stat < crit, "chi2 = {stat:.1}, critical = {crit:.1}");
    }

    fn synthetic_peak(
        center: f64,
        fwhm: f64,
        amplitude: f64,
        baseline: f64,
        noise_rng: Option<&mut ChaCha8Rng>,
    ) -> CoincidenceHistogram {
        let mut hist = CoincidenceHistogram::new(45.5, -10_000.0, 10_000.0).unwrap();
        let ln2_4 = 4.0 * std::f64::consts::LN_2;
        let mut noise = noise_rng;
        let centers: Vec<f64> = hist.bin_centers().collect();
        hist.counts = centers
            .iter()
            .map(|&x| {
                let u = (x - center) / fwhm;
                let mean = baseline + amplitude * (-ln2_4 * u * u).exp();
                match noise.as_deref_mut() {
                    Some(rng) if mean > 0.0 => {
                        Poisson::new(mean).map(|p| p.sample(rng) as u64).unwrap_or(0)
                    }
                    _ => mean.round() as u64,
                }
            })
            .collect();
        hist.total_events = hist.counts.iter().sum();
        hist
    }

    #[test]
    fn fit_recovers_noiseless_peak() {
        let hist = synthetic_peak(0.0, 400.0, 5000.0, 10.0, None);
        let fit = fit_peak(&hist).unwrap();
        assert_relative_eq!(fit.fwhm_ps, 400.0, max_relative = 0.01);
        assert_relative_eq!(fit.center_ps, 0.0, epsilon = 5.0);
    }

    #[test]
    fn fit_recovers_poisson_noisy_peak_over_seeds() {
        // Paper-like counts: ~1e4 coincidences in the peak on a small
        // baseline; FWHM recovered within 5% for 20 seeds.
        let mut worst: f64 = 0.0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let hist = synthetic_peak(100.0, 400.0, 1200.0, 50.0, Some(&mut rng));
            let fit = fit_peak(&hist).unwrap();
            worst = worst.max((fit.fwhm_ps - 400.0).abs() / 400.0);
        }
        assert!(worst < 0.05, "worst relative FWHM error {worst}");
    }

    #[test]
    fn flat_histogram_is_rejected() {
        let mut hist = CoincidenceHistogram::new(45.5, -10_000.0, 10_000.0).unwrap();
        hist.counts.fill(120);
        hist.total_events = hist.counts.iter().sum();
        assert!(matches!(
            fit_peak(&hist),
            Err(CoincidenceError::NoDominantPeak { .. })
        ));
        let zero = CoincidenceHistogram::new(45.5, -10_000.0, 10_000.0).unwrap();
        assert!(fit_peak(&zero).is_err());
    }

    #[test]
    fn deconvolve_paper_point() {
        // sqrt((400² − 80²)/2) = 277.1 ps; quoted deconvolved width 285 ps.
        let w = deconvolve_photon_width(400.0, 80.0).unwrap();
        assert_relative_eq!(w, 277.128, max_relative = 1e-4);
        assert!((w - 285.0).abs() / 285.0 < 0.05);
    }

    #[test]
    fn deconvolve_limits() {
        let w = deconvolve_photon_width(80.0, 80.0 - 1e-9).unwrap();
        assert!(w < 1e-3);
        let w2 = deconvolve_photon_width(2f64.sqrt() * 123.0, 0.0).unwrap();
        assert_relative_eq!(w2, 123.0, max_relative = 1e-12);
        assert!(matches!(
            deconvolve_photon_width(80.0, 80.0),
            Err(CoincidenceError::NothingToDeconvolve { .. })
        ));
    }

    #[test]
    fn merge_adds_partials() {
        let mut a = CoincidenceHistogram::new(10.0, -100.0, 100.0).unwrap();
        let mut b = CoincidenceHistogram::new(10.0, -100.0, 100.0).unwrap();
        a.record(5.0);
        b.record(5.0);
        b.record(-50.0);
        a.merge(&b);
        assert_eq!(a.total_events, 3);
        assert_eq!(a.counts.iter().sum::<u64>(), 3);
    }
}
