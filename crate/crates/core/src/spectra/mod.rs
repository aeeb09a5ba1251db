//! Spectral line shapes, filter-cascade transfer functions, and
//! energy-correlated joint spectral sampling for photon pairs.
//!
//! A [`FilterChain`] is an ordered list of [`FilterStage`]s; its
//! transmission at any wavelength is the product of the per-stage
//! transmissions. Reflect-band stages (standard FBGs read out through a
//! circulator) act as band-passes in the photon path, so both modes share
//! the same transfer function; the `mode` field documents the physical
//! routing.

mod sampler;

pub use sampler::{
    effective_pair_bandwidth, PairSampler, SampledPair, TemporalEnvelope, GRID_POINTS,
    GRID_SPAN_FWHM,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("signal and idler passbands have no spectral overlap")]
    NoSupportOverlap,
    #[error("chain passband lies outside the SPDC emission band")]
    OutsideEmissionBand,
    #[error(transparent)]
    Radiometry(#[from] crate::radiometry::RadiometryError),
}

/// Line-shape family for filters and photon wave packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    Gaussian,
    Lorentzian,
    Rectangular,
}

impl LineShape {
    /// Peak-normalized shape value at a detuning `x` from center for the
    /// given FWHM (same units for both).
    #[inline]
    pub fn value(self, x: f64, fwhm: f64) -> f64 {
        match self {
            LineShape::Gaussian => {
                let u = x / fwhm;
                (-4.0 * std::f64::consts::LN_2 * u * u).exp()
            }
            LineShape::Lorentzian => {
                let u = 2.0 * x / fwhm;
                1.0 / (1.0 + u * u)
            }
            LineShape::Rectangular => {
                if x.abs() <= 0.5 * fwhm {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// A normalized line shape: peak transmission is 1 at `center_nm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    pub center_nm: f64,
    pub fwhm_pm: f64,
    pub shape: LineShape,
}

impl SpectralProfile {
    pub fn new(center_nm: f64, fwhm_pm: f64, shape: LineShape) -> Result<Self, SpectraError> {
        if !(center_nm > 0.0) {
            return Err(SpectraError::NonPositive {
                name: "center_nm",
                value: center_nm,
            });
        }
        if !(fwhm_pm > 0.0) {
            return Err(SpectraError::NonPositive {
                name: "fwhm_pm",
                value: fwhm_pm,
            });
        }
        Ok(Self {
            center_nm,
            fwhm_pm,
            shape,
        })
    }

    pub fn fwhm_nm(&self) -> f64 {
        self.fwhm_pm * crate::constants::NM_PER_PM
    }

    /// Peak-normalized shape at an absolute wavelength.
    #[inline]
    pub fn shape_at(&self, wavelength_nm: f64) -> f64 {
        self.shape
            .value(wavelength_nm - self.center_nm, self.fwhm_nm())
    }
}

/// Physical role of a grating stage in the photon path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    TransmitBand,
    ReflectBand,
}

/// One grating stage: a passband shape plus its out-of-band rejection and
/// in-band insertion loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterStage {
    pub profile: SpectralProfile,
    pub mode: FilterMode,
    pub rejection_db: f64,
    pub insertion_loss_db: f64,
}

impl FilterStage {
    pub fn validate(&self) -> Result<(), SpectraError> {
        SpectralProfile::new(self.profile.center_nm, self.profile.fwhm_pm, self.profile.shape)?;
        if self.rejection_db < 0.0 {
            return Err(SpectraError::Negative {
                name: "rejection_db",
                value: self.rejection_db,
            });
        }
        if self.insertion_loss_db < 0.0 {
            return Err(SpectraError::Negative {
                name: "insertion_loss_db",
                value: self.insertion_loss_db,
            });
        }
        Ok(())
    }

    /// Transmission at the passband center: 10^(−insertion_loss/10).
    #[inline]
    pub fn peak_transmission(&self) -> f64 {
        10f64.powf(-self.insertion_loss_db / 10.0)
    }

    /// Transmission far outside the band: 10^(−rejection/10).
    #[inline]
    pub fn floor_transmission(&self) -> f64 {
        10f64.powf(-self.rejection_db / 10.0)
    }

    /// Absolute transmission, blending the shaped passband into the
    /// rejection floor.
    #[inline]
    pub fn transmission(&self, wavelength_nm: f64) -> f64 {
        let peak = self.peak_transmission();
        let floor = self.floor_transmission();
        floor + (peak - floor) * self.profile.shape_at(wavelength_nm)
    }

    /// Transmission normalized to 1 at the passband center; this is the
    /// spectral shape with the insertion loss divided out.
    #[inline]
    pub fn shape_transmission(&self, wavelength_nm: f64) -> f64 {
        let rel_floor = self.floor_transmission() / self.peak_transmission();
        rel_floor + (1.0 - rel_floor) * self.profile.shape_at(wavelength_nm)
    }
}

/// An ordered cascade of grating stages. The empty chain is the identity
/// (transmission 1 everywhere).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterChain {
    pub stages: Vec<FilterStage>,
}

impl FilterChain {
    pub fn new(stages: Vec<FilterStage>) -> Result<Self, SpectraError> {
        for stage in &stages {
            stage.validate()?;
        }
        Ok(Self { stages })
    }

    pub fn identity() -> Self {
        Self { stages: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.stages.is_empty()
    }

    /// Absolute chain transmission: product of stage transmissions.
    pub fn transmission(&self, wavelength_nm: f64) -> f64 {
        self.stages
            .iter()
            .map(|s| s.transmission(wavelength_nm))
            .product()
    }

    /// Peak-normalized chain transmission (insertion losses divided out).
    pub fn shape_transmission(&self, wavelength_nm: f64) -> f64 {
        self.stages
            .iter()
            .map(|s| s.shape_transmission(wavelength_nm))
            .product()
    }

    /// Product of the stage peak transmissions.
    pub fn peak_transmission(&self) -> f64 {
        self.stages.iter().map(|s| s.peak_transmission()).product()
    }

    /// The narrowest stage sets the passband geometry of the cascade.
    pub fn narrowest_stage(&self) -> Option<&FilterStage> {
        self.stages.iter().min_by(|a, b| {
            a.profile
                .fwhm_pm
                .partial_cmp(&b.profile.fwhm_pm)
                .expect("finite FWHM")
        })
    }

    /// Passband center of the narrowest stage, if any.
    pub fn nominal_center_nm(&self) -> Option<f64> {
        self.narrowest_stage().map(|s| s.profile.center_nm)
    }

    /// FWHM of the narrowest stage in nanometres, if any.
    pub fn nominal_fwhm_nm(&self) -> Option<f64> {
        self.narrowest_stage().map(|s| s.profile.fwhm_nm())
    }

    /// Dominant line-shape family: the narrowest stage's shape.
    pub fn dominant_shape(&self) -> LineShape {
        self.narrowest_stage()
            .map(|s| s.profile.shape)
            .unwrap_or(LineShape::Rectangular)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// The bench cascade: a 1 nm reflect-band FBG routed via circulator
    /// followed by a 10 pm transmit-band PSFBG; 45 dB rejection and 2.5 dB
    /// total insertion loss.
    pub(crate) fn bench_chain(center_nm: f64, narrow_fwhm_pm: f64) -> FilterChain {
        FilterChain::new(vec![
            FilterStage {
                profile: SpectralProfile::new(center_nm, 1000.0, LineShape::Gaussian).unwrap(),
                mode: FilterMode::ReflectBand,
                rejection_db: 45.0,
                insertion_loss_db: 1.25,
            },
            FilterStage {
                profile: SpectralProfile::new(center_nm, narrow_fwhm_pm, LineShape::Gaussian)
                    .unwrap(),
                mode: FilterMode::TransmitBand,
                rejection_db: 45.0,
                insertion_loss_db: 1.25,
            },
        ])
        .unwrap()
    }

    #[test]
    fn bench_chain_center_transmission() {
        // 10^(−2.5/10) = 0.5623
        let chain = bench_chain(1558.0, 10.0);
        assert_relative_eq!(chain.transmission(1558.0), 0.5623, max_relative = 1e-3);
    }

    #[test]
    fn bench_chain_rejection_far_from_band() {
        let chain = bench_chain(1558.0, 10.0);
        for lambda in [1553.0, 1563.0] {
            assert!(chain.transmission(lambda) <= 10f64.powf(-4.5));
        }
    }

    #[test]
    fn empty_chain_is_identity() {
        let chain = FilterChain::identity();
        for lambda in [1.0, 1558.0, 1e4] {
            assert_eq!(chain.transmission(lambda), 1.0);
        }
    }

    #[test]
    fn stage_floor_and_peak() {
        let stage = FilterStage {
            profile: SpectralProfile::new(1560.0, 10.0, LineShape::Gaussian).unwrap(),
            mode: FilterMode::TransmitBand,
            rejection_db: 45.0,
            insertion_loss_db: 2.5,
        };
        assert_relative_eq!(stage.transmission(1560.0), 10f64.powf(-0.25), max_relative = 1e-12);
        assert_relative_eq!(stage.transmission(1400.0), 10f64.powf(-4.5), max_relative = 1e-12);
        assert_relative_eq!(stage.shape_transmission(1560.0), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn rectangular_shape_has_hard_edges() {
        let p = SpectralProfile::new(1560.0, 10.0, LineShape::Rectangular).unwrap();
        assert_eq!(p.shape_at(1560.0049), 1.0);
        assert_eq!(p.shape_at(1560.0051), 0.0);
    }

    #[test]
    fn lorentzian_half_max_at_half_fwhm() {
        let p = SpectralProfile::new(1560.0, 10.0, LineShape::Lorentzian).unwrap();
        // Tolerance limited by the absolute-wavelength subtraction.
        assert_relative_eq!(p.shape_at(1560.0 + 0.005), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn narrowest_stage_selects_psfbg() {
        let chain = bench_chain(1558.0, 10.0);
        assert_relative_eq!(chain.nominal_fwhm_nm().unwrap(), 0.010, max_relative = 1e-12);
    }

    #[test]
    fn rejects_invalid_stage() {
        let mut stage = bench_chain(1558.0, 10.0).stages[0];
        stage.rejection_db = -1.0;
        assert!(FilterChain::new(vec![stage]).is_err());
    }
}
