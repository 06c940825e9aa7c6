//! The shared bosonic reservoir.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant, J s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    /// Reservoir temperature in kelvin.
    pub temperature: f64,
    /// Spin precession frequency ω_s / 2π in hertz.
    pub spin_frequency: f64,
    /// Damping rate γ in s⁻¹, the prefactor of both dissipators.
    pub damping_rate: f64,
}

impl ReservoirSpec {
    pub fn new(temperature: f64, spin_frequency: f64, damping_rate: f64) -> Result<Self> {
        if !(temperature >= 0.0) || !temperature.is_finite() {
            return Err(Error::validation("temperature", "must be a finite value >= 0"));
        }
        if !(spin_frequency > 0.0) || !spin_frequency.is_finite() {
            return Err(Error::validation("spin_frequency", "must be a finite value > 0"));
        }
        if !(damping_rate > 0.0) || !damping_rate.is_finite() {
            return Err(Error::validation("damping_rate", "must be a finite value > 0"));
        }
        Ok(ReservoirSpec { temperature, spin_frequency, damping_rate })
    }

    /// Zero-temperature reservoir with the given rate.
    pub fn zero_temperature(spin_frequency: f64, damping_rate: f64) -> Self {
        ReservoirSpec { temperature: 0.0, spin_frequency, damping_rate }
    }

    /// `ħ ω_s / k_B T`; infinite at T = 0.
    pub fn beta_hbar_omega(&self) -> f64 {
        if self.temperature == 0.0 {
            f64::INFINITY
        } else {
            PLANCK * self.spin_frequency / (BOLTZMANN * self.temperature)
        }
    }

    /// Bose–Einstein occupation of the resonant mode, exactly zero at T = 0.
    pub fn nbar(&self) -> f64 {
        if self.temperature == 0.0 {
            0.0
        } else {
            1.0 / self.beta_hbar_omega().exp_m1()
        }
    }

    /// `n̄ / (n̄ + 1) = exp(-ħω_s / k_B T)`, the up/down rate ratio.
    pub fn boltzmann_ratio(&self) -> f64 {
        (-self.beta_hbar_omega()).exp()
    }

    /// Emission rate coefficient `n̄ + 1` in units of γ.
    pub fn down_rate(&self) -> f64 {
        self.nbar() + 1.0
    }

    /// Absorption rate coefficient `n̄` in units of γ.
    pub fn up_rate(&self) -> f64 {
        self.nbar()
    }
}
