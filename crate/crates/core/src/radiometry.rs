//! Closed-form radiometric relations for a CW SPDC pair source: energy
//! conservation, coherence time, temporal mode counting, mean photon number
//! per mode, spectral radiance, and emitted spectral brightness.
//!
//! All functions here are pure and safe to call from any thread.

use crate::constants::{
    photon_energy_j, M_PER_NM, PLANCK_H, PM_PER_NM, PS_PER_S, SPEED_OF_LIGHT, S_PER_PS,
    TIME_BANDWIDTH_GAUSSIAN, W_PER_MW,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RadiometryError {
    #[error("signal wavelength {signal_nm} nm must be strictly above the pump {pump_nm} nm")]
    NoPhysicalIdler { pump_nm: f64, signal_nm: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must lie in [0, 1], got {value}")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("filter FWHM {filter_nm} nm exceeds the SPDC bandwidth {spdc_nm} nm")]
    FilterWiderThanBand { filter_nm: f64, spdc_nm: f64 },
    #[error("comparison table entry {index} has an empty label")]
    EmptyLabel { index: usize },
    #[error("comparison table has no entries")]
    EmptyTable,
}

/// CW pump laser parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    pub wavelength_nm: f64,
    pub power_mw: f64,
}

/// One SPDC pair source: pump, crystal conversion, emission band, and the
/// fixed per-photon loss contributions quoted for the bench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub pump: PumpConfig,
    /// Probability that a pump photon converts to a pair (measured, ~1e-5).
    pub conversion_efficiency: f64,
    /// Degeneracy wavelength of the SPDC emission.
    pub spdc_center_nm: f64,
    /// Full emission bandwidth, treated as rectangular for rate bookkeeping.
    pub spdc_bandwidth_fwhm_nm: f64,
    /// Fibre coupling efficiency.
    pub coupling_efficiency: f64,
    /// Transmission of the pump-blocking silicon filter at the SPDC band.
    pub si_filter_transmission: f64,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<(), RadiometryError> {
        require_positive("pump.wavelength_nm", self.pump.wavelength_nm)?;
        if self.pump.power_mw < 0.0 {
            return Err(RadiometryError::NonPositive {
                name: "pump.power_mw",
                value: self.pump.power_mw,
            });
        }
        require_positive("spdc_center_nm", self.spdc_center_nm)?;
        require_positive("spdc_bandwidth_fwhm_nm", self.spdc_bandwidth_fwhm_nm)?;
        require_probability("conversion_efficiency", self.conversion_efficiency)?;
        require_probability("coupling_efficiency", self.coupling_efficiency)?;
        require_probability("si_filter_transmission", self.si_filter_transmission)?;
        Ok(())
    }
}

/// Whether the emitted-brightness column counts per-photon survival once
/// (heralded bookkeeping, the bench's own arithmetic) or squared for whole
/// pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairTransmissionMode {
    #[default]
    Heralded,
    Pair,
}

/// Forward-computed source budget.
///
/// Two temporal-mode conventions are reported side by side: the gaussian
/// coherence time τ_c = 0.44 λ²/(c Δλ), and the plain inverse bandwidth
/// 1/Δν. The primary fields use τ_c; the `inverse_bandwidth` fields carry
/// the alternative so reports can print both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiometryReport {
    pub pump_photon_flux_per_s: f64,
    pub created_pair_rate_full_band: f64,
    pub created_pair_rate_in_band: f64,
    pub filter_fwhm_pm: f64,
    pub coherence_time_ps: f64,
    pub modes_per_second: f64,
    pub mean_photons_per_mode: f64,
    pub inverse_bandwidth_mode_time_ps: f64,
    pub modes_per_second_inverse_bandwidth: f64,
    pub mean_photons_per_mode_inverse_bandwidth: f64,
    /// h c² ⟨n⟩ / λ⁵ in W m⁻³ sr⁻¹ (SI), using the τ_c convention.
    pub spectral_radiance_si: f64,
    /// Pairs s⁻¹ pm⁻¹ delivered into the single-mode fibre.
    pub emitted_spectral_brightness_per_s_pm: f64,
    pub overall_transmission: f64,
    pub pair_transmission_mode: PairTransmissionMode,
}

fn require_positive(name: &'static str, value: f64) -> Result<(), RadiometryError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(RadiometryError::NonPositive { name, value })
    }
}

fn require_probability(name: &'static str, value: f64) -> Result<(), RadiometryError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(RadiometryError::NotAProbability { name, value })
    }
}

/// Idler wavelength from energy conservation, 1/λ_p = 1/λ_s + 1/λ_i.
///
/// The signal must carry less energy than the pump (λ_s > λ_p), otherwise
/// there is no physical idler.
pub fn idler_wavelength(pump_nm: f64, signal_nm: f64) -> Result<f64, RadiometryError> {
    require_positive("pump_nm", pump_nm)?;
    if signal_nm <= pump_nm {
        return Err(RadiometryError::NoPhysicalIdler {
            pump_nm,
            signal_nm,
        });
    }
    Ok(1.0 / (1.0 / pump_nm - 1.0 / signal_nm))
}

/// Coherence time τ_c = 0.44 λ² / (c Δλ), in picoseconds.
///
/// The factor of c is dimensionally required (the shorthand τ_c = 0.44 λ²/Δλ
/// seen in lab write-ups leaves it implicit) and restores the quoted 43 fs /
/// 350 ps values for the 80 nm and 10 pm bandwidths.
pub fn coherence_time(center_nm: f64, fwhm_nm: f64) -> Result<f64, RadiometryError> {
    require_positive("center_nm", center_nm)?;
    require_positive("fwhm_nm", fwhm_nm)?;
    let lambda_m = center_nm * M_PER_NM;
    let dlambda_m = fwhm_nm * M_PER_NM;
    let tau_s = TIME_BANDWIDTH_GAUSSIAN * lambda_m * lambda_m / (SPEED_OF_LIGHT * dlambda_m);
    Ok(tau_s * PS_PER_S)
}

/// Intensity bandwidth in hertz for a wavelength FWHM: Δν = c Δλ / λ².
pub fn bandwidth_hz(center_nm: f64, fwhm_nm: f64) -> Result<f64, RadiometryError> {
    require_positive("center_nm", center_nm)?;
    require_positive("fwhm_nm", fwhm_nm)?;
    let lambda_m = center_nm * M_PER_NM;
    Ok(SPEED_OF_LIGHT * fwhm_nm * M_PER_NM / (lambda_m * lambda_m))
}

/// Mean created pairs per temporal mode, ⟨n⟩ = N τ_c.
///
/// Invariant under simultaneous rescaling N → N r, τ_c → τ_c / r: filtering
/// a source narrows the rate and stretches the mode in exact compensation.
pub fn mean_photons_per_mode(
    created_rate_in_band_per_s: f64,
    coherence_time_ps: f64,
) -> Result<f64, RadiometryError> {
    if created_rate_in_band_per_s < 0.0 {
        return Err(RadiometryError::NonPositive {
            name: "created_rate_in_band_per_s",
            value: created_rate_in_band_per_s,
        });
    }
    if coherence_time_ps < 0.0 {
        return Err(RadiometryError::NonPositive {
            name: "coherence_time_ps",
            value: coherence_time_ps,
        });
    }
    Ok(created_rate_in_band_per_s * (coherence_time_ps * S_PER_PS))
}

/// Spectral radiance L_λ = h c² ⟨n⟩ / λ⁵ in W m⁻³ sr⁻¹.
pub fn spectral_radiance(
    mean_photons_per_mode: f64,
    wavelength_nm: f64,
) -> Result<f64, RadiometryError> {
    if mean_photons_per_mode < 0.0 {
        return Err(RadiometryError::NonPositive {
            name: "mean_photons_per_mode",
            value: mean_photons_per_mode,
        });
    }
    require_positive("wavelength_nm", wavelength_nm)?;
    let lambda_m = wavelength_nm * M_PER_NM;
    Ok(PLANCK_H * SPEED_OF_LIGHT * SPEED_OF_LIGHT * mean_photons_per_mode / lambda_m.powi(5))
}

/// Full forward budget for one source behind a spectral filter of the given
/// FWHM.
///
/// The created rate over the full band is pump photon flux × conversion
/// efficiency; the in-band rate scales it by r = Δλ_f / Δλ_0 (rectangular
/// band bookkeeping). Emitted brightness applies the per-photon transmission
/// once in `Heralded` mode and squared in `Pair` mode.
pub fn radiometry_report(
    source: &SourceConfig,
    filter_fwhm_nm: f64,
    per_photon_transmission: f64,
    mode: PairTransmissionMode,
) -> Result<RadiometryReport, RadiometryError> {
    source.validate()?;
    require_positive("filter_fwhm_nm", filter_fwhm_nm)?;
    require_probability("per_photon_transmission", per_photon_transmission)?;
    if filter_fwhm_nm > source.spdc_bandwidth_fwhm_nm {
        return Err(RadiometryError::FilterWiderThanBand {
            filter_nm: filter_fwhm_nm,
            spdc_nm: source.spdc_bandwidth_fwhm_nm,
        });
    }

    let pump_photon_flux =
        source.pump.power_mw * W_PER_MW / photon_energy_j(source.pump.wavelength_nm);
    let created_full = pump_photon_flux * source.conversion_efficiency;
    let band_fraction = filter_fwhm_nm / source.spdc_bandwidth_fwhm_nm;
    let created_in_band = created_full * band_fraction;

    let tau_c_ps = coherence_time(source.spdc_center_nm, filter_fwhm_nm)?;
    let modes_per_second = 1.0 / (tau_c_ps * S_PER_PS);
    let mean_n = created_in_band / modes_per_second;

    let dnu_hz = bandwidth_hz(source.spdc_center_nm, filter_fwhm_nm)?;
    let inv_bw_mode_time_ps = (1.0 / dnu_hz) * PS_PER_S;
    let mean_n_inv_bw = created_in_band / dnu_hz;

    let survival = match mode {
        PairTransmissionMode::Heralded => per_photon_transmission,
        PairTransmissionMode::Pair => per_photon_transmission * per_photon_transmission,
    };
    let brightness = created_in_band * survival / (filter_fwhm_nm * PM_PER_NM);

    Ok(RadiometryReport {
        pump_photon_flux_per_s: pump_photon_flux,
        created_pair_rate_full_band: created_full,
        created_pair_rate_in_band: created_in_band,
        filter_fwhm_pm: filter_fwhm_nm * PM_PER_NM,
        coherence_time_ps: tau_c_ps,
        modes_per_second,
        mean_photons_per_mode: mean_n,
        inverse_bandwidth_mode_time_ps: inv_bw_mode_time_ps,
        modes_per_second_inverse_bandwidth: dnu_hz,
        mean_photons_per_mode_inverse_bandwidth: mean_n_inv_bw,
        spectral_radiance_si: spectral_radiance(mean_n, source.spdc_center_nm)?,
        emitted_spectral_brightness_per_s_pm: brightness,
        overall_transmission: survival,
        pair_transmission_mode: mode,
    })
}

/// One row of the source-comparison table.
///
/// Cells are verbatim strings: published comparisons mix numerals with
/// entries like "N.A." and "<1", and this table is pass-through — no
/// physics is recomputed from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub process: String,
    pub mean_photons_per_mode: String,
    pub bandwidth_pm: String,
    pub transmission_pct: String,
    pub brightness_per_s_pm: String,
}

fn validate_entries(entries: &[TableEntry]) -> Result<(), RadiometryError> {
    if entries.is_empty() {
        return Err(RadiometryError::EmptyTable);
    }
    for (index, e) in entries.iter().enumerate() {
        if e.process.trim().is_empty() {
            return Err(RadiometryError::EmptyLabel { index });
        }
    }
    Ok(())
}

fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// RFC-4180 CSV rendering of the comparison table, header row included.
pub fn comparison_table_csv(entries: &[TableEntry]) -> Result<String, RadiometryError> {
    validate_entries(entries)?;
    let mut out = String::from(
        "process,mean_photons_per_mode,bandwidth_pm,transmission_pct,brightness_per_s_pm\r\n",
    );
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{},{}\r\n",
            csv_field(&e.process),
            csv_field(&e.mean_photons_per_mode),
            csv_field(&e.bandwidth_pm),
            csv_field(&e.transmission_pct),
            csv_field(&e.brightness_per_s_pm),
        ));
    }
    Ok(out)
}

/// Aligned plain-text rendering of the comparison table.
pub fn comparison_table_text(entries: &[TableEntry]) -> Result<String, RadiometryError> {
    validate_entries(entries)?;
    let headers = ["Process", "<n> [1/tau_c]", "dlambda [pm]", "T [%]", "E [1/(s pm)]"];
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    let rows: Vec<[&str; 5]> = entries
        .iter()
        .map(|e| {
            [
                e.process.as_str(),
                e.mean_photons_per_mode.as_str(),
                e.bandwidth_pm.as_str(),
                e.transmission_pct.as_str(),
                e.brightness_per_s_pm.as_str(),
            ]
        })
        .collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let render = |cells: &[&str; 5], widths: &[usize]| -> String {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&render(
        &[headers[0], headers[1], headers[2], headers[3], headers[4]],
        &widths,
    ));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in &rows {
        out.push_str(&render(row, &widths));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paper_source() -> SourceConfig {
        SourceConfig {
            pump: PumpConfig {
                wavelength_nm: 780.0,
                power_mw: 7.0,
            },
            conversion_efficiency: 1e-5,
            spdc_center_nm: 1560.0,
            spdc_bandwidth_fwhm_nm: 80.0,
            coupling_efficiency: 0.30,
            si_filter_transmission: 0.90,
        }
    }

    #[test]
    fn idler_degenerate() {
        assert_relative_eq!(idler_wavelength(780.0, 1560.0).unwrap(), 1560.0, max_relative = 1e-12);
    }

    #[test]
    fn idler_matches_filter_pairing() {
        // 780·1558/(1558−780) = 1562.005… nm: the 1558/1562 filter pairing.
        let idler = idler_wavelength(780.0, 1558.0).unwrap();
        assert_relative_eq!(idler, 780.0 * 1558.0 / 778.0, max_relative = 1e-12);
        assert!((idler - 1562.0).abs() < 0.1, "got {idler}");
    }

    #[test]
    fn idler_rejects_energy_violation() {
        assert!(matches!(
            idler_wavelength(780.0, 779.0),
            Err(RadiometryError::NoPhysicalIdler { .. })
        ));
        assert!(matches!(
            idler_wavelength(780.0, 780.0),
            Err(RadiometryError::NoPhysicalIdler { .. })
        ));
    }

    #[test]
    fn coherence_time_unfiltered_band() {
        // 0.44 · (1560 nm)² / (c · 80 nm) = 44.65 fs; quoted as 43 fs.
        let tau_ps = coherence_time(1560.0, 80.0).unwrap();
        assert_relative_eq!(tau_ps, 4.46468e-2, max_relative = 1e-4);
        assert!((tau_ps - 0.043).abs() / 0.043 < 0.10);
    }

    #[test]
    fn coherence_time_filtered_band() {
        // 10 pm → 357.17 ps; quoted as 350 ps.
        let tau_ps = coherence_time(1560.0, 0.010).unwrap();
        assert_relative_eq!(tau_ps, 357.174, max_relative = 1e-4);
        assert!((tau_ps - 350.0).abs() / 350.0 < 0.05);
    }

    #[test]
    fn coherence_time_inverse_linear_in_bandwidth() {
        let a = coherence_time(1560.0, 0.020).unwrap();
        let b = coherence_time(1560.0, 0.010).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn coherence_time_rejects_nonpositive() {
        assert!(coherence_time(0.0, 1.0).is_err());
        assert!(coherence_time(1560.0, 0.0).is_err());
        assert!(coherence_time(1560.0, -1.0).is_err());
    }

    #[test]
    fn mean_photons_back_solved_point() {
        // 2.24e8 pairs/s over a 357 ps mode ⇒ ⟨n⟩ ≈ 0.080.
        let n = mean_photons_per_mode(2.24e8, 357.174).unwrap();
        assert!((n - 0.080).abs() < 0.0005, "got {n}");
    }

    #[test]
    fn mean_photons_zero_rate() {
        assert_eq!(mean_photons_per_mode(0.0, 357.0).unwrap(), 0.0);
    }

    #[test]
    fn mean_photons_filtering_invariance_at_r8000() {
        let r = 8000.0;
        let base = mean_photons_per_mode(2.24e8, 357.174).unwrap();
        let scaled = mean_photons_per_mode(2.24e8 * r, 357.174 / r).unwrap();
        assert_relative_eq!(base, scaled, max_relative = 1e-12);
    }

    #[test]
    fn spectral_radiance_paper_point() {
        // Independent route: L = (hc/λ) · c · ⟨n⟩ / λ⁴ evaluated stepwise.
        let lambda_m = 1560.0e-9_f64;
        let independent =
            photon_energy_j(1560.0) * SPEED_OF_LIGHT * 0.08 / lambda_m.powi(4);
        let l = spectral_radiance(0.08, 1560.0).unwrap();
        assert_relative_eq!(l, independent, max_relative = 1e-12);
        assert_relative_eq!(l, 5.1566e11, max_relative = 1e-4);
    }

    #[test]
    fn spectral_radiance_trivials() {
        assert_eq!(spectral_radiance(0.0, 1560.0).unwrap(), 0.0);
        let l1 = spectral_radiance(0.04, 1560.0).unwrap();
        let l2 = spectral_radiance(0.08, 1560.0).unwrap();
        assert_relative_eq!(l2, 2.0 * l1, max_relative = 1e-12);
        assert!(spectral_radiance(0.08, 0.0).is_err());
    }

    #[test]
    fn report_paper_budget() {
        // Every value below is frozen from the hand-computed chain:
        //   flux = 7 mW / (hc/780 nm)            = 2.74863e16 /s
        //   full = flux · 1e-5                   = 2.74863e11 /s
        //   in-band = full · (10 pm / 80 nm)     = 3.43578e7 /s
        //   τ_c(1560 nm, 10 pm)                  = 357.174 ps
        //   ⟨n⟩ = in-band · τ_c                  = 1.22716e-2
        //   ⟨n⟩_1/Δν = in-band / 1.23187 GHz     = 2.78907e-2
        //   E_λ = in-band · 0.13 / 10 pm         = 4.46652e5 /(s·pm)
        let report = radiometry_report(
            &paper_source(),
            0.010,
            0.13,
            PairTransmissionMode::Heralded,
        )
        .unwrap();
        assert_relative_eq!(report.pump_photon_flux_per_s, 2.74863e16, max_relative = 1e-4);
        assert_relative_eq!(report.created_pair_rate_in_band, 3.43578e7, max_relative = 1e-4);
        assert_relative_eq!(report.coherence_time_ps, 357.174, max_relative = 1e-4);
        assert_relative_eq!(report.mean_photons_per_mode, 1.22716e-2, max_relative = 1e-4);
        assert_relative_eq!(
            report.mean_photons_per_mode_inverse_bandwidth,
            2.78907e-2,
            max_relative = 1e-4
        );
        assert_relative_eq!(
            report.emitted_spectral_brightness_per_s_pm,
            4.46652e5,
            max_relative = 1e-4
        );
        // Within a factor of 3 of the quoted 3.9e5 (it is within 15%).
        let ratio = report.emitted_spectral_brightness_per_s_pm / 3.9e5;
        assert!(ratio < 3.0 && ratio > 1.0 / 3.0);
    }

    #[test]
    fn report_mean_n_is_rate_over_modes() {
        let report = radiometry_report(
            &paper_source(),
            0.010,
            0.13,
            PairTransmissionMode::Heralded,
        )
        .unwrap();
        assert_relative_eq!(
            report.mean_photons_per_mode,
            report.created_pair_rate_in_band / report.modes_per_second,
            max_relative = 1e-14
        );
    }

    #[test]
    fn report_zero_transmission_zeroes_brightness() {
        let report =
            radiometry_report(&paper_source(), 0.010, 0.0, PairTransmissionMode::Heralded)
                .unwrap();
        assert_eq!(report.emitted_spectral_brightness_per_s_pm, 0.0);
    }

    #[test]
    fn report_unfiltered_keeps_full_rate() {
        let report =
            radiometry_report(&paper_source(), 80.0, 0.13, PairTransmissionMode::Heralded)
                .unwrap();
        assert_relative_eq!(
            report.created_pair_rate_in_band,
            report.created_pair_rate_full_band,
            max_relative = 1e-12
        );
    }

    #[test]
    fn report_pair_mode_squares_transmission() {
        let heralded =
            radiometry_report(&paper_source(), 0.010, 0.13, PairTransmissionMode::Heralded)
                .unwrap();
        let pair = radiometry_report(&paper_source(), 0.010, 0.13, PairTransmissionMode::Pair)
            .unwrap();
        assert_relative_eq!(
            pair.emitted_spectral_brightness_per_s_pm,
            heralded.emitted_spectral_brightness_per_s_pm * 0.13,
            max_relative = 1e-12
        );
    }

    #[test]
    fn report_rejects_wide_filter() {
        assert!(matches!(
            radiometry_report(&paper_source(), 81.0, 0.13, PairTransmissionMode::Heralded),
            Err(RadiometryError::FilterWiderThanBand { .. })
        ));
    }

    #[test]
    fn report_all_fields_nonnegative() {
        let report = radiometry_report(
            &paper_source(),
            0.010,
            0.13,
            PairTransmissionMode::Heralded,
        )
        .unwrap();
        for value in [
            report.pump_photon_flux_per_s,
            report.created_pair_rate_full_band,
            report.created_pair_rate_in_band,
            report.coherence_time_ps,
            report.modes_per_second,
            report.mean_photons_per_mode,
            report.spectral_radiance_si,
            report.emitted_spectral_brightness_per_s_pm,
            report.overall_transmission,
        ] {
            assert!(value >= 0.0);
        }
    }

    #[test]
    fn table_renders_rows_verbatim() {
        let entries = vec![
            TableEntry {
                process: "Filtered SPDC".into(),
                mean_photons_per_mode: "0.08".into(),
                bandwidth_pm: "10".into(),
                transmission_pct: "13".into(),
                brightness_per_s_pm: "3.9e5".into(),
            },
            TableEntry {
                process: "Cavity SPDC".into(),
                mean_photons_per_mode: "0.012".into(),
                bandwidth_pm: "0.02".into(),
                transmission_pct: "14".into(),
                brightness_per_s_pm: "7.6e4".into(),
            },
        ];
        let csv = comparison_table_csv(&entries).unwrap();
        assert!(csv.contains("Filtered SPDC,0.08,10,13,3.9e5"));
        assert!(csv.contains("Cavity SPDC,0.012,0.02,14,7.6e4"));
        let text = comparison_table_text(&entries).unwrap();
        assert!(text.contains("Filtered SPDC"));
        assert!(text.contains("3.9e5"));
    }

    #[test]
    fn table_rejects_empty_label_and_empty_list() {
        let entries = vec![TableEntry {
            process: "  ".into(),
            mean_photons_per_mode: "0.08".into(),
            bandwidth_pm: "10".into(),
            transmission_pct: "13".into(),
            brightness_per_s_pm: "3.9e5".into(),
        }];
        assert!(matches!(
            comparison_table_csv(&entries),
            Err(RadiometryError::EmptyLabel { index: 0 })
        ));
        assert!(matches!(comparison_table_csv(&[]), Err(RadiometryError::EmptyTable)));
    }

    #[test]
    fn csv_quoting_handles_commas() {
        let entries = vec![TableEntry {
            process: "4-wave-mixing, pulsed".into(),
            mean_photons_per_mode: "0.025".into(),
            bandwidth_pm: "200".into(),
            transmission_pct: "14".into(),
            brightness_per_s_pm: "2e4".into(),
        }];
        let csv = comparison_table_csv(&entries).unwrap();
        assert!(csv.contains("\"4-wave-mixing, pulsed\""));
    }
}
