//! Excitation, ionization and thermal line-density rate laws.

use std::f64::consts::{LN_2, PI};

use nalgebra::Vector3;

use super::beam::{BeamConfig, BeamRole};
use super::constants::{BOLTZMANN, HBAR};
use crate::error::{Error, Result};

/// Reference rates of the two-step ionization scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    /// Peak two-photon rate on resonance at `two_photon_ref_intensity`, s⁻¹.
    pub two_photon_peak_rate_ref: f64,
    /// W/m²
    pub two_photon_ref_intensity: f64,
    /// 5D → continuum rate at `ionization_ref_intensity`, s⁻¹.
    pub ionization_rate_ref: f64,
    /// W/m²
    pub ionization_ref_intensity: f64,
    /// 5D decay back to the ground state, s⁻¹.
    pub spontaneous_decay_rate: f64,
    /// Probability that an ion is registered by the detector.
    pub detection_efficiency: f64,
}

/// Center intensity of a Gaussian beam, W/m².
pub fn central_intensity(power: f64, waist: f64) -> f64 {
    2.0 * power / (PI * waist * waist)
}

impl Default for RateModel {
    fn default() -> Self {
        RateModel {
            two_photon_peak_rate_ref: 2250.0,
            two_photon_ref_intensity: central_intensity(0.5e-3, 34e-6),
            ionization_rate_ref: 1.0 / 70e-9,
            ionization_ref_intensity: central_intensity(1.6, 26e-6),
            spontaneous_decay_rate: 1.0 / 240e-9,
            detection_efficiency: 0.5,
        }
    }
}

impl RateModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("two_photon_peak_rate_ref", self.two_photon_peak_rate_ref),
            ("two_photon_ref_intensity", self.two_photon_ref_intensity),
            ("ionization_rate_ref", self.ionization_rate_ref),
            ("ionization_ref_intensity", self.ionization_ref_intensity),
            ("spontaneous_decay_rate", self.spontaneous_decay_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.detection_efficiency) {
            return Err(Error::invalid("detection_efficiency", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Resonant two-photon rate at the diode beam center, s⁻¹. Quadratic in
    /// intensity.
    #[inline]
    pub fn two_photon_peak(&self, diode: &BeamConfig) -> f64 {
        let s = diode.peak_intensity() / self.two_photon_ref_intensity;
        self.two_photon_peak_rate_ref * s * s
    }

    /// Photoionization rate at the fiber beam center, s⁻¹. Linear in intensity.
    #[inline]
    pub fn ionization_peak(&self, fiber: &BeamConfig) -> f64 {
        self.ionization_rate_ref * fiber.peak_intensity() / self.ionization_ref_intensity
    }

    /// Branching ratio into the continuum for a given local ionization rate.
    #[inline]
    pub fn branching_for_rate(&self, ionization_rate: f64) -> f64 {
        ionization_rate / (ionization_rate + self.spontaneous_decay_rate)
    }

    /// Two-photon excitation rate at `pos`, s⁻¹.
    pub fn two_photon_rate(
        &self,
        pos: &Vector3<f64>,
        diode: &BeamConfig,
        detuning: f64,
        spectrum: &HyperfineSpectrum,
        fiber_power: f64,
    ) -> Result<f64> {
        if diode.role != BeamRole::Diode778 {
            return Err(Error::Contract(
                "two-photon excitation requires the 778 nm diode beam".into(),
            ));
        }
        let e = diode.envelope(pos);
        Ok(self.two_photon_peak(diode) * e * e * spectrum.line_factor(detuning, fiber_power))
    }

    /// Probability that an excited atom is ionized rather than decaying.
    pub fn ionization_branching(&self, pos: &Vector3<f64>, fiber: &BeamConfig) -> Result<f64> {
        if fiber.role != BeamRole::Fiber1080 {
            return Err(Error::Contract(
                "ionization branching requires the 1080 nm fiber beam".into(),
            ));
        }
        Ok(self.branching_for_rate(self.ionization_peak(fiber) * fiber.envelope(pos)))
    }
}

/// The four resolved hyperfine lines on the diode-detuning axis with their
/// linear dependence on fiber power.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperfineSpectrum {
    /// Hz, strictly increasing.
    pub line_offsets: Vec<f64>,
    pub line_weights: Vec<f64>,
    /// Zero-power FWHM, Hz.
    pub base_linewidth_fwhm: f64,
    /// Line shift per watt of fiber power, Hz/W.
    pub shift_slope: f64,
    /// FWHM increase per watt of fiber power, Hz/W.
    pub broadening_slope: f64,
}

impl Default for HyperfineSpectrum {
    fn default() -> Self {
        HyperfineSpectrum {
            line_offsets: vec![0.0, 7.73e6, 18.59e6, 32.08e6],
            line_weights: vec![1.0; 4],
            base_linewidth_fwhm: 2.6e6,
            shift_slope: 2.4e6,
            broadening_slope: 3.0e6,
        }
    }
}

/// Unit-peak Gaussian of the given FWHM.
#[inline]
pub fn unit_gaussian(x: f64, fwhm: f64) -> f64 {
    (-4.0 * LN_2 * x * x / (fwhm * fwhm)).exp()
}

impl HyperfineSpectrum {
    pub fn validate(&self) -> Result<()> {
        if self.line_offsets.is_empty() {
            return Err(Error::invalid("line_offsets", "at least one line required"));
        }
        if self.line_offsets.len() != self.line_weights.len() {
            return Err(Error::invalid(
                "line_weights",
                "one weight per line offset required",
            ));
        }
        if self.line_offsets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "line_offsets",
                "must be strictly increasing",
            ));
        }
        if self.line_weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("line_weights", "must be positive"));
        }
        if !(self.base_linewidth_fwhm > 0.0) {
            return Err(Error::invalid("base_linewidth_fwhm", "must be positive"));
        }
        Ok(())
    }

    #[inline]
    pub fn fwhm(&self, fiber_power: f64) -> f64 {
        self.base_linewidth_fwhm + self.broadening_slope * fiber_power
    }

    /// Light-shifted line centers, Hz.
    pub fn centers(&self, fiber_power: f64) -> Vec<f64> {
        let shift = self.shift_slope * fiber_power;
        self.line_offsets.iter().map(|o| o + shift).collect()
    }

    /// Σ weight·G(detuning − center; fwhm), dimensionless.
    pub fn line_factor(&self, detuning: f64, fiber_power: f64) -> f64 {
        let fwhm = self.fwhm(fiber_power);
        let shift = self.shift_slope * fiber_power;
        self.line_offsets
            .iter()
            .zip(&self.line_weights)
            .map(|(o, w)| w * unit_gaussian(detuning - o - shift, fwhm))
            .sum()
    }
}

/// Thermal distribution of atoms over the microwave detuning,
/// `exp(-2ħΔω/(3k_B T)) / √Δω`, unnormalized.
pub fn line_density_thermal(delta_omega: f64, temperature: f64) -> Result<f64> {
    if !(delta_omega > 0.0) {
        return Err(Error::invalid(
            "delta_omega",
            "thermal line density is singular at and below the trap bottom",
        ));
    }
    if !(temperature > 0.0) {
        return Err(Error::invalid("temperature", "must be positive"));
    }
    Ok(thermal_density_unchecked(delta_omega, temperature))
}

#[inline]
pub(crate) fn thermal_density_unchecked(delta_omega: f64, temperature: f64) -> f64 {
    (-thermal_exponent_per_rad(temperature) * delta_omega).exp() / delta_omega.sqrt()
}

/// 2ħ/(3k_B T): magnitude of the log-slope of n·√Δω versus Δω, s/rad.
#[inline]
pub fn thermal_exponent_per_rad(temperature: f64) -> f64 {
    2.0 * HBAR / (3.0 * BOLTZMANN * temperature)
}
