//! Joint spectral sampling and post-cascade bandwidth measurement.
//!
//! Photon pairs are importance-sampled inside the filter passband: the
//! signal wavelength is drawn from the signal chain's normalized
//! transmission restricted to the SPDC band, the idler follows exactly from
//! energy conservation, and the idler chain contributes a peak-normalized
//! acceptance probability. Generating the full SPDC band and rejecting
//! would cost ~Δλ_0/Δλ_f (thousands) times the work for identical
//! statistics; the emission rate is pre-scaled by r = Δλ_f/Δλ_0 in the
//! radiometry budget instead.
//!
//! All numerical integration runs on a fixed wavelength grid of
//! [`GRID_POINTS`] samples spanning ±[`GRID_SPAN_FWHM`] FWHM of the
//! narrowest stage, for reproducibility.

use super::{FilterChain, LineShape, SpectraError};
use crate::constants::fwhm_to_sigma;
use crate::radiometry::idler_wavelength;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const GRID_POINTS: usize = 2001;
pub const GRID_SPAN_FWHM: f64 = 5.0;

/// Number of intervals in the precomputed inverse-CDF quantile tables.
const QUANTILE_INTERVALS: usize = 2048;

/// One sampled signal/idler pair with its joint acceptance probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledPair {
    pub signal_nm: f64,
    pub idler_nm: f64,
    /// Probability that the idler passes its chain, relative to a
    /// perfectly aligned chain (insertion loss excluded — that belongs to
    /// the per-photon transmission budget).
    pub acceptance: f64,
}

#[derive(Debug, Clone, Copy)]
struct Window {
    lo: f64,
    hi: f64,
}

impl Window {
    fn intersect(self, other: Window) -> Option<Window> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Window { lo, hi })
    }
}

fn band_window(band_center_nm: f64, band_fwhm_nm: f64) -> Window {
    Window {
        lo: band_center_nm - 0.5 * band_fwhm_nm,
        hi: band_center_nm + 0.5 * band_fwhm_nm,
    }
}

fn chain_window(chain: &FilterChain) -> Option<Window> {
    let stage = chain.narrowest_stage()?;
    let half = GRID_SPAN_FWHM * stage.profile.fwhm_nm();
    Some(Window {
        lo: stage.profile.center_nm - half,
        hi: stage.profile.center_nm + half,
    })
}

/// Maps an idler-axis window onto the signal axis through energy
/// conservation (monotone decreasing, so the bounds swap).
fn map_idler_window(pump_nm: f64, w: Window) -> Option<Window> {
    let lo = idler_wavelength(pump_nm, w.hi).ok()?;
    let hi = idler_wavelength(pump_nm, w.lo).ok()?;
    (lo < hi).then_some(Window { lo, hi })
}

fn linspace(w: Window, n: usize) -> Vec<f64> {
    let step = (w.hi - w.lo) / (n - 1) as f64;
    (0..n).map(|i| w.lo + step * i as f64).collect()
}

/// Piecewise-linear CDF inversion: builds a table of `QUANTILE_INTERVALS+1`
/// equal-probability quantiles from a density sampled on a uniform grid.
fn quantile_table(grid: &[f64], density: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(grid.len(), density.len());
    let n = grid.len();
    let mut cdf = vec![0.0f64; n];
    for i in 1..n {
        cdf[i] = cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    }
    let total = cdf[n - 1];
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let mut table = Vec::with_capacity(QUANTILE_INTERVALS + 1);
    let mut seg = 1usize;
    table.push(grid[0]);
    for k in 1..QUANTILE_INTERVALS {
        let target = total * (k as f64 / QUANTILE_INTERVALS as f64);
        while seg < n - 1 && cdf[seg] < target {
            seg += 1;
        }
        let (c0, c1) = (cdf[seg - 1], cdf[seg]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        table.push(grid[seg - 1] + frac * (grid[seg] - grid[seg - 1]));
    }
    table.push(grid[n - 1]);
    Some(table)
}

#[inline]
fn sample_from_quantiles<R: Rng + ?Sized>(table: &[f64], rng: &mut R) -> f64 {
    let u: f64 = rng.gen::<f64>();
    let pos = u * QUANTILE_INTERVALS as f64;
    let k = (pos as usize).min(QUANTILE_INTERVALS - 1);
    let frac = pos - k as f64;
    table[k] + frac * (table[k + 1] - table[k])
}

/// Precomputed importance sampler for one source's signal/idler chains.
///
/// Construction fixes the wavelength grid; sampling is O(1) per pair.
#[derive(Debug, Clone)]
pub struct PairSampler {
    pump_nm: f64,
    quantiles: Vec<f64>,
    /// Idler-chain acceptance tabulated against the *signal* wavelength.
    accept_grid: Vec<f64>,
    window: Window,
    mean_acceptance: f64,
}

impl PairSampler {
    pub fn new(
        pump_nm: f64,
        band_center_nm: f64,
        band_fwhm_nm: f64,
        signal_chain: &FilterChain,
        idler_chain: &FilterChain,
    ) -> Result<Self, SpectraError> {
        if !(pump_nm > 0.0) {
            return Err(SpectraError::NonPositive {
                name: "pump_nm",
                value: pump_nm,
            });
        }
        let band = band_window(band_center_nm, band_fwhm_nm);
        let window = match chain_window(signal_chain) {
            Some(w) => w.intersect(band).ok_or(SpectraError::OutsideEmissionBand)?,
            None => band,
        };
        let grid = linspace(window, GRID_POINTS);
        let density: Vec<f64> = grid
            .iter()
            .map(|&l| signal_chain.shape_transmission(l))
            .collect();
        let quantiles =
            quantile_table(&grid, &density).ok_or(SpectraError::OutsideEmissionBand)?;
        let accept_grid: Vec<f64> = grid
            .iter()
            .map(|&l| match idler_wavelength(pump_nm, l) {
                Ok(idler) => idler_chain.shape_transmission(idler),
                Err(_) => 0.0,
            })
            .collect();
        let total: f64 = density.iter().sum();
        let mean_acceptance = if total > 0.0 {
            density
                .iter()
                .zip(&accept_grid)
                .map(|(d, a)| d * a)
                .sum::<f64>()
                / total
        } else {
            0.0
        };
        Ok(Self {
            pump_nm,
            quantiles,
            accept_grid,
            window,
            mean_acceptance,
        })
    }

    /// Draws a signal wavelength from the normalized chain profile, sets
    /// the idler by energy conservation, and attaches the idler-chain
    /// acceptance. Uses exactly one uniform draw.
    #[inline]
    pub fn sample_pair_wavelengths<R: Rng + ?Sized>(&self, rng: &mut R) -> SampledPair {
        let signal_nm = sample_from_quantiles(&self.quantiles, rng);
        let idler_nm = 1.0 / (1.0 / self.pump_nm - 1.0 / signal_nm);
        SampledPair {
            signal_nm,
            idler_nm,
            acceptance: self.acceptance_at(signal_nm),
        }
    }

    /// Idler-chain acceptance for a given signal wavelength, interpolated
    /// on the fixed grid.
    #[inline]
    pub fn acceptance_at(&self, signal_nm: f64) -> f64 {
        let n = self.accept_grid.len();
        let step = (self.window.hi - self.window.lo) / (n - 1) as f64;
        let pos = (signal_nm - self.window.lo) / step;
        if pos <= 0.0 {
            return self.accept_grid[0];
        }
        if pos >= (n - 1) as f64 {
            return self.accept_grid[n - 1];
        }
        let k = pos as usize;
        let frac = pos - k as f64;
        self.accept_grid[k] + frac * (self.accept_grid[k + 1] - self.accept_grid[k])
    }

    /// Density-weighted mean acceptance over the sampling window.
    pub fn mean_acceptance(&self) -> f64 {
        self.mean_acceptance
    }

    pub fn pump_nm(&self) -> f64 {
        self.pump_nm
    }
}

/// FWHM of the signal-arm marginal spectral density after joint filtering,
/// in nanometres, by numerical integration on the fixed grid.
///
/// The marginal is the signal chain's normalized transmission multiplied by
/// the idler chain's normalized transmission evaluated at the
/// energy-conserving partner wavelength.
pub fn effective_pair_bandwidth(
    signal_chain: &FilterChain,
    idler_chain: &FilterChain,
    pump_nm: f64,
    band_center_nm: f64,
    band_fwhm_nm: f64,
) -> Result<f64, SpectraError> {
    let band = band_window(band_center_nm, band_fwhm_nm);
    let mut window = band;
    if let Some(w) = chain_window(signal_chain) {
        window = window.intersect(w).ok_or(SpectraError::NoSupportOverlap)?;
    }
    if let Some(w) = chain_window(idler_chain) {
        let mapped = map_idler_window(pump_nm, w).ok_or(SpectraError::NoSupportOverlap)?;
        window = window
            .intersect(mapped)
            .ok_or(SpectraError::NoSupportOverlap)?;
    }
    let grid = linspace(window, GRID_POINTS);
    let marginal: Vec<f64> = grid
        .iter()
        .map(|&l| {
            let s = signal_chain.shape_transmission(l);
            let i = match idler_wavelength(pump_nm, l) {
                Ok(idler) => idler_chain.shape_transmission(idler),
                Err(_) => 0.0,
            };
            s * i
        })
        .collect();
    fwhm_on_grid(&grid, &marginal).ok_or(SpectraError::NoSupportOverlap)
}

/// Half-max crossing FWHM with linear interpolation; falls back to the
/// grid edge when the density never drops below half maximum (rectangular
/// profiles).
fn fwhm_on_grid(grid: &[f64], values: &[f64]) -> Option<f64> {
    let (peak_idx, &peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite density"))?;
    if !(peak > 0.0) {
        return None;
    }
    let half = 0.5 * peak;
    let mut left = grid[0];
    for i in (1..=peak_idx).rev() {
        if values[i - 1] < half && values[i] >= half {
            let frac = (half - values[i - 1]) / (values[i] - values[i - 1]);
            left = grid[i - 1] + frac * (grid[i] - grid[i - 1]);
            break;
        }
    }
    let mut right = grid[grid.len() - 1];
    for i in peak_idx..grid.len() - 1 {
        if values[i] >= half && values[i + 1] < half {
            let frac = (values[i] - half) / (values[i] - values[i + 1]);
            right = grid[i] + frac * (grid[i + 1] - grid[i]);
            break;
        }
    }
    Some(right - left)
}

/// Temporal intensity envelope of a photon wave packet.
///
/// The envelope family follows the spectral line shape of the dominant
/// filter stage: gaussian spectra give gaussian packets (sampled in closed
/// form), lorentzian spectra give two-sided exponential packets, and
/// rectangular spectra give sinc² packets; the non-gaussian families are
/// sampled by inverse-CDF on a fixed grid. All envelopes are parameterized
/// by their intensity FWHM in picoseconds.
#[derive(Debug, Clone)]
pub enum TemporalEnvelope {
    Gaussian { sigma_ps: f64 },
    Tabulated { fwhm_ps: f64, quantiles: Vec<f64> },
}

impl TemporalEnvelope {
    pub fn new(shape: LineShape, fwhm_ps: f64) -> Self {
        assert!(fwhm_ps > 0.0, "envelope FWHM must be positive");
        match shape {
            LineShape::Gaussian => TemporalEnvelope::Gaussian {
                sigma_ps: fwhm_to_sigma(fwhm_ps),
            },
            LineShape::Lorentzian => {
                // Fourier pair of a lorentzian line: two-sided exponential
                // intensity, extent ±12 FWHM (3e-8 tail mass truncated).
                let rate = 2.0 * std::f64::consts::LN_2 / fwhm_ps;
                Self::tabulated(fwhm_ps, 12.0, 4001, |t| (-rate * t.abs()).exp())
            }
            LineShape::Rectangular => {
                // sinc² envelope of a hard-edged spectrum. The 1/t² tails
                // are truncated at ±40 FWHM (~0.5% of the mass).
                let nu = 0.885_893_8 / fwhm_ps;
                Self::tabulated(fwhm_ps, 40.0, 16001, |t| {
                    let x = std::f64::consts::PI * t * nu;
                    if x.abs() < 1e-12 {
                        1.0
                    } else {
                        let s = x.sin() / x;
                        s * s
                    }
                })
            }
        }
    }

    fn tabulated(fwhm_ps: f64, span_fwhm: f64, points: usize, density: impl Fn(f64) -> f64) -> Self {
        let half = span_fwhm * fwhm_ps;
        let grid = linspace(Window { lo: -half, hi: half }, points);
        let dens: Vec<f64> = grid.iter().map(|&t| density(t)).collect();
        let quantiles = quantile_table(&grid, &dens).expect("envelope density has mass");
        TemporalEnvelope::Tabulated { fwhm_ps, quantiles }
    }

    pub fn fwhm_ps(&self) -> f64 {
        match self {
            TemporalEnvelope::Gaussian { sigma_ps } => {
                sigma_ps * crate::constants::FWHM_PER_SIGMA
            }
            TemporalEnvelope::Tabulated { fwhm_ps, .. } => *fwhm_ps,
        }
    }

    /// Draws an arrival-time offset (ps) within the packet.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            TemporalEnvelope::Gaussian { sigma_ps } => {
                let z: f64 = StandardNormal.sample(rng);
                z * sigma_ps
            }
            TemporalEnvelope::Tabulated { quantiles, .. } => {
                sample_from_quantiles(quantiles, rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::NM_PER_PM;
    use crate::spectra::{FilterMode, FilterStage, SpectralProfile};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn narrow_chain(center_nm: f64, fwhm_pm: f64, shape: LineShape) -> FilterChain {
        FilterChain::new(vec![FilterStage {
            profile: SpectralProfile::new(center_nm, fwhm_pm, shape).unwrap(),
            mode: FilterMode::TransmitBand,
            rejection_db: 45.0,
            insertion_loss_db: 2.5,
        }])
        .unwrap()
    }

    fn sampler(signal: &FilterChain, idler: &FilterChain) -> PairSampler {
        PairSampler::new(780.0, 1560.0, 80.0, signal, idler).unwrap()
    }

    #[test]
    fn sampled_pairs_conserve_energy() {
        let s = narrow_chain(1558.0, 10.0, LineShape::Gaussian);
        let i = narrow_chain(1562.0, 10.0, LineShape::Gaussian);
        let sampler = sampler(&s, &i);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let pair = sampler.sample_pair_wavelengths(&mut rng);
            let lhs = 1.0 / 780.0;
            let rhs = 1.0 / pair.signal_nm + 1.0 / pair.idler_nm;
            assert!((lhs - rhs).abs() / lhs < 1e-12);
        }
    }

    #[test]
    fn idler_samples_center_on_energy_match() {
        // Signal chain at 1558 nm projects idlers near 1562.005 nm.
        let s = narrow_chain(1558.0, 10.0, LineShape::Gaussian);
        let i = narrow_chain(1562.005, 10.0, LineShape::Gaussian);
        let sampler = sampler(&s, &i);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let mean_idler: f64 = (0..n)
            .map(|_| sampler.sample_pair_wavelengths(&mut rng).idler_nm)
            .sum::<f64>()
            / n as f64;
        assert!((mean_idler - 1562.005).abs() < 0.001, "mean idler {mean_idler}");
    }

    #[test]
    fn signal_marginal_matches_analytic_profile_ks() {
        // One-sample KS against an independent fine-grid CDF of the chain
        // shape, n = 1e5, α = 0.01.
        let chain = narrow_chain(1560.0, 10.0, LineShape::Gaussian);
        let sampler = sampler(&chain, &FilterChain::identity());
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 100_000usize;
        let mut samples: Vec<f64> = (0..n)
            .map(|_| sampler.sample_pair_wavelengths(&mut rng).signal_nm)
            .collect();
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

        // Independent oracle: 20001-point Simpson-free cumulative trapezoid.
        let m = 20_001usize;
        let lo = 1560.0 - 0.05 * GRID_SPAN_FWHM;
        let hi = 1560.0 + 0.05 * GRID_SPAN_FWHM;
        let step = (hi - lo) / (m - 1) as f64;
        let xs: Vec<f64> = (0..m).map(|k| lo + step * k as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|&x| chain.shape_transmission(x)).collect();
        let mut cdf = vec![0.0f64; m];
        for k in 1..m {
            cdf[k] = cdf[k - 1] + 0.5 * (fs[k] + fs[k - 1]) * step;
        }
        let total = cdf[m - 1];
        let eval_cdf = |x: f64| -> f64 {
            if x <= lo {
                return 0.0;
            }
            if x >= hi {
                return 1.0;
            }
            let pos = (x - lo) / step;
            let k = pos as usize;
            let frac = pos - k as f64;
            (cdf[k] + frac * (cdf[k + 1] - cdf[k])) / total
        };

        let mut d = 0.0f64;
        for (i, &x) in samples.iter().enumerate() {
            let f = eval_cdf(x);
            let hi_dev = ((i + 1) as f64 / n as f64 - f).abs();
            let lo_dev = (f - i as f64 / n as f64).abs();
            d = d.max(hi_dev).max(lo_dev);
        }
        let d_crit = 1.62762 / (n as f64).sqrt();
        assert!(d < d_crit, "KS D = {d}, critical = {d_crit}");
    }

    #[test]
    fn degenerate_chains_give_symmetric_marginals() {
        // For identical chains at degeneracy the signal and idler marginals
        // of completed pairs coincide; two-sample KS at α = 0.01.
        let chain = narrow_chain(1560.0, 10.0, LineShape::Gaussian);
        let sampler = PairSampler::new(780.0, 1560.0, 80.0, &chain, &chain).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut signal = Vec::new();
        let mut idler = Vec::new();
        while signal.len() < 30_000 {
            let p = sampler.sample_pair_wavelengths(&mut rng);
            if rng.gen::<f64>() < p.acceptance {
                signal.push(p.signal_nm);
                idler.push(p.idler_nm);
            }
        }
        signal.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        idler.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let n = signal.len() as f64;
        let mut d = 0.0f64;
        let (mut i, mut j) = (0usize, 0usize);
        while i < signal.len() && j < idler.len() {
            if signal[i] <= idler[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / n - j as f64 / n).abs());
        }
        let d_crit = 1.62762 * (2.0 / n).sqrt();
        assert!(d < d_crit, "two-sample KS D = {d}, critical = {d_crit}");
    }

    #[test]
    fn detuned_idler_chain_kills_acceptance() {
        let s = narrow_chain(1560.0, 10.0, LineShape::Gaussian);
        let matched = narrow_chain(1560.0, 10.0, LineShape::Gaussian);
        // 100 pm detuning on 10 pm filters.
        let detuned = narrow_chain(1560.1, 10.0, LineShape::Gaussian);
        let matched_mean = sampler(&s, &matched).mean_acceptance();
        let detuned_mean = sampler(&s, &detuned).mean_acceptance();
        assert!(matched_mean > 0.5, "matched mean {matched_mean}");
        assert!(
            detuned_mean < 1e-3 * matched_mean,
            "detuned {detuned_mean} vs matched {matched_mean}"
        );
    }

    #[test]
    fn matched_mean_acceptance_is_inverse_sqrt2() {
        // ∫ g² / ∫ g for equal gaussians = 1/√2.
        let chain = narrow_chain(1560.0, 10.0, LineShape::Gaussian);
        let sampler = PairSampler::new(780.0, 1560.0, 80.0, &chain, &chain).unwrap();
        assert_relative_eq!(
            sampler.mean_acceptance(),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-3
        );
    }

    #[test]
    fn empty_chain_samples_whole_band() {
        let sampler = PairSampler::new(
            780.0,
            1560.0,
            80.0,
            &FilterChain::identity(),
            &FilterChain::identity(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut min = f64::MAX;
        let mut max = f64::MIN;
        for _ in 0..50_000 {
            let p = sampler.sample_pair_wavelengths(&mut rng);
            assert!(p.acceptance == 1.0);
            min = min.min(p.signal_nm);
            max = max.max(p.signal_nm);
        }
        assert!(min < 1521.0 && max > 1599.0, "range [{min}, {max}]");
    }

    #[test]
    fn effective_bandwidth_matched_gaussians() {
        let chain = narrow_chain(1560.0, 10.0, LineShape::Gaussian);
        let bw = effective_pair_bandwidth(&chain, &chain, 780.0, 1560.0, 80.0).unwrap();
        assert_relative_eq!(bw / NM_PER_PM, 10.0 / 2f64.sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn effective_bandwidth_identity_idler() {
        let chain = narrow_chain(1560.0, 10.0, LineShape::Gaussian);
        let bw =
            effective_pair_bandwidth(&chain, &FilterChain::identity(), 780.0, 1560.0, 80.0)
                .unwrap();
        assert_relative_eq!(bw / NM_PER_PM, 10.0, max_relative = 1e-3);
    }

    #[test]
    fn effective_bandwidth_matched_rectangles() {
        let chain = narrow_chain(1560.0, 10.0, LineShape::Rectangular);
        let bw = effective_pair_bandwidth(&chain, &chain, 780.0, 1560.0, 80.0).unwrap();
        assert_relative_eq!(bw / NM_PER_PM, 10.0, max_relative = 2e-3);
    }

    #[test]
    fn effective_bandwidth_unfiltered_is_band() {
        let bw = effective_pair_bandwidth(
            &FilterChain::identity(),
            &FilterChain::identity(),
            780.0,
            1560.0,
            80.0,
        )
        .unwrap();
        assert_relative_eq!(bw, 80.0, max_relative = 1e-6);
    }

    #[test]
    fn disjoint_rectangles_error() {
        let s = narrow_chain(1558.0, 10.0, LineShape::Rectangular);
        let i = narrow_chain(1558.0, 10.0, LineShape::Rectangular);
        // Both chains at 1558 on the *same* axis means the idler passband
        // maps to ~1562 on the signal axis: no overlap with the signal band.
        assert_eq!(
            effective_pair_bandwidth(&s, &i, 780.0, 1560.0, 80.0),
            Err(SpectraError::NoSupportOverlap)
        );
    }

    #[test]
    fn chain_outside_band_is_rejected() {
        let s = narrow_chain(1700.0, 10.0, LineShape::Gaussian);
        assert_eq!(
            PairSampler::new(780.0, 1560.0, 80.0, &s, &FilterChain::identity()).unwrap_err(),
            SpectraError::OutsideEmissionBand
        );
    }

    #[test]
    fn gaussian_envelope_fwhm_roundtrip() {
        let env = TemporalEnvelope::new(LineShape::Gaussian, 357.0);
        assert_relative_eq!(env.fwhm_ps(), 357.0, max_relative = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 200_000;
        let var: f64 = (0..n).map(|_| env.sample(&mut rng).powi(2)).sum::<f64>() / n as f64;
        let sigma = fwhm_to_sigma(357.0);
        assert!((var.sqrt() - sigma).abs() / sigma < 0.01);
    }

    #[test]
    fn lorentzian_envelope_matches_two_sided_exponential() {
        // Grid-sampled envelope against the closed-form CDF of the
        // two-sided exponential: F(t) = ½ e^{at} (t<0), 1 − ½ e^{−at}.
        let fwhm = 300.0;
        let env = TemporalEnvelope::new(LineShape::Lorentzian, fwhm);
        let rate = 2.0 * std::f64::consts::LN_2 / fwhm;
        let cdf = |t: f64| {
            if t < 0.0 {
                0.5 * (rate * t).exp()
            } else {
                1.0 - 0.5 * (-rate * t).exp()
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let n = 100_000usize;
        let mut samples: Vec<f64> = (0..n).map(|_| env.sample(&mut rng)).collect();
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d = 0.0f64;
        for (i, &t) in samples.iter().enumerate() {
            let f = cdf(t);
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
            d = d.max((f - i as f64 / n as f64).abs());
        }
        let d_crit = 1.62762 / (n as f64).sqrt();
        assert!(d < d_crit, "KS D = {d}, critical = {d_crit}");
    }

    #[test]
    fn sinc2_envelope_half_max_at_half_fwhm() {
        let env = TemporalEnvelope::new(LineShape::Rectangular, 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        // 72.4% of the (±40 FWHM truncated) sinc² mass lies inside
        // ±FWHM/2; reference value from direct quadrature of the density.
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| env.sample(&mut rng)).collect();
        let inside = samples.iter().filter(|t| t.abs() <= 50.0).count() as f64 / n as f64;
        assert!((inside - 0.7242).abs() < 0.01, "inside fraction {inside}");
        let mean: f64 = samples.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 2.0, "mean {mean}");
    }
}
