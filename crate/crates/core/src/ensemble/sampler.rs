//! Boltzmann sampling of atom positions in an arbitrary trapping potential.
//!
//! Each atom is the end point of its own Metropolis chain. The chain mixes two
//! kernels: a random walk whose per-axis step follows the harmonic reference
//! widths, scaled by a factor adapted towards 50 % acceptance during the
//! first half of burn-in, and an independence proposal drawn from the
//! harmonic reference Gaussian. The latter lets chains find narrow, deep
//! features such as an optical dimple. Velocities are drawn exactly from the
//! Maxwell–Boltzmann distribution.

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::cloud::{AtomRecord, CloudState};
use crate::error::{Error, Result};
use crate::physics::constants::BOLTZMANN;
use crate::physics::landscape::{thermal_velocity, thermal_width, Potential};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub burn_in_sweeps: usize,
    pub target_acceptance: f64,
    /// Every n-th move is an independence proposal from the reference Gaussian.
    pub global_move_every: usize,
    /// Run the chain even when the potential is exactly harmonic.
    pub force_chain: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in_sweeps: 2000,
            target_acceptance: 0.5,
            global_move_every: 8,
            force_chain: false,
        }
    }
}

/// Acceptance statistics of the random-walk kernel after adaptation stopped.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChainStats {
    pub accepted: u64,
    pub proposed: u64,
}

impl ChainStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            return f64::NAN;
        }
        self.accepted as f64 / self.proposed as f64
    }

    fn merge(self, other: ChainStats) -> ChainStats {
        ChainStats {
            accepted: self.accepted + other.accepted,
            proposed: self.proposed + other.proposed,
        }
    }
}

struct Reference {
    center: Vector3<f64>,
    sigma: Vector3<f64>,
}

impl Reference {
    fn new<P: Potential>(potential: &P, temperature: f64) -> Self {
        let (center, omega) = potential.reference();
        Reference {
            center,
            sigma: omega.map(|w| thermal_width(w, temperature)),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vector3<f64> {
        self.center + self.sigma.component_mul(&gaussian3(rng))
    }

    fn log_density(&self, x: &Vector3<f64>) -> f64 {
        let d = (x - self.center).component_div(&self.sigma);
        -0.5 * d.norm_squared()
    }
}

#[inline]
fn gaussian3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

pub struct ThermalSampler {
    pub config: SamplerConfig,
}

impl Default for ThermalSampler {
    fn default() -> Self {
        ThermalSampler {
            config: SamplerConfig::default(),
        }
    }
}

impl ThermalSampler {
    pub fn new(config: SamplerConfig) -> Self {
        ThermalSampler { config }
    }

    fn chain<P: Potential>(
        &self,
        potential: &P,
        reference: &Reference,
        beta: f64,
        start: Vector3<f64>,
        rng: &mut ChaCha8Rng,
    ) -> (Vector3<f64>, ChainStats) {
        let cfg = &self.config;
        // one-dimensional updates, each axis with its own adapted scale: a
        // shared scale collapses to the stiffest direction and freezes the
        // soft ones
        let base = reference.sigma * 2.38;
        let mut x = start;
        let mut u = potential.energy(&x);
        let mut log_scale: Vector3<f64> = Vector3::zeros();
        let adapt_until = cfg.burn_in_sweeps / 2;
        let mut stats = ChainStats::default();

        for sweep in 0..cfg.burn_in_sweeps {
            let global = cfg.global_move_every > 0
                && sweep % cfg.global_move_every == cfg.global_move_every - 1;
            if global {
                let y = reference.draw(rng);
                let uy = potential.energy(&y);
                let log_a =
                    -beta * (uy - u) + reference.log_density(&x) - reference.log_density(&y);
                if log_a >= 0.0 || rng.random::<f64>() < log_a.exp() {
                    x = y;
                    u = uy;
                }
                continue;
            }
            for axis in 0..3 {
                let mut y = x;
                y[axis] +=
                    base[axis] * log_scale[axis].exp() * rng.sample::<f64, _>(StandardNormal);
                let uy = potential.energy(&y);
                let log_a = -beta * (uy - u);
                let accepted = log_a >= 0.0 || rng.random::<f64>() < log_a.exp();
                if accepted {
                    x = y;
                    u = uy;
                }
                if sweep < adapt_until {
                    let gain = 1.0 / (1.0 + sweep as f64 / 20.0).powf(0.6);
                    let hit = if accepted { 1.0 } else { 0.0 };
                    log_scale[axis] += gain * (hit - cfg.target_acceptance);
                } else {
                    stats.proposed += 1;
                    stats.accepted += u64::from(accepted);
                }
            }
        }
        (x, stats)
    }

    fn check(stats: ChainStats) -> Result<()> {
        let rate = stats.rate();
        if stats.proposed > 0 && !(0.1..=0.9).contains(&rate) {
            return Err(Error::SamplerDiverged { rate });
        }
        Ok(())
    }

    /// Equilibrium cloud of `n_sim` atoms representing `n_phys` physical atoms.
    pub fn sample<P: Potential>(
        &self,
        n_sim: usize,
        n_phys: f64,
        temperature: f64,
        potential: &P,
        seed: u64,
    ) -> Result<(CloudState, ChainStats)> {
        if n_sim == 0 {
            return Err(Error::invalid(
                "n_sim",
                "at least one simulated atom required",
            ));
        }
        if !(temperature > 0.0) {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        if !(n_phys > 0.0) {
            return Err(Error::invalid("n_phys", "must be positive"));
        }
        let reference = Reference::new(potential, temperature);
        let beta = 1.0 / (BOLTZMANN * temperature);
        let sigma_v = thermal_velocity(temperature);
        let weight = n_phys / n_sim as f64;
        let exact = potential.is_harmonic() && !self.config.force_chain;

        let drawn: Vec<(AtomRecord, ChainStats)> = (0..n_sim)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, Purpose::Sampling, i as u64);
                let start = reference.draw(&mut rng);
                let (position, stats) = if exact {
                    (start, ChainStats::default())
                } else {
                    self.chain(potential, &reference, beta, start, &mut rng)
                };
                let velocity = gaussian3(&mut rng) * sigma_v;
                let atom = AtomRecord {
                    position,
                    velocity,
                    alive: true,
                    weight,
                };
                (atom, stats)
            })
            .collect();

        let stats = drawn
            .iter()
            .fold(ChainStats::default(), |s, (_, c)| s.merge(*c));
        Self::check(stats)?;
        let atoms = drawn.into_iter().map(|(a, _)| a).collect();
        Ok((CloudState::new(atoms, temperature)?, stats))
    }

    /// Redraw the phase space of every alive atom from the Boltzmann
    /// distribution of `potential` at `temperature`. Each chain starts at
    /// the atom's current position; weights are kept.
    pub fn resample<P: Potential>(
        &self,
        cloud: &CloudState,
        potential: &P,
        temperature: f64,
        seed: u64,
    ) -> Result<(CloudState, ChainStats)> {
        if cloud.is_empty() {
            return Err(Error::invalid("cloud", "cannot resample an empty cloud"));
        }
        if !(temperature > 0.0) {
            return Err(Error::invalid("temperature", "must be positive"));
        }
        let reference = Reference::new(potential, temperature);
        let beta = 1.0 / (BOLTZMANN * temperature);
        let sigma_v = thermal_velocity(temperature);
        let exact = potential.is_harmonic() && !self.config.force_chain;

        let drawn: Vec<(AtomRecord, ChainStats)> = cloud
            .atoms
            .par_iter()
            .enumerate()
            .map(|(i, atom)| {
                if !atom.alive {
                    return (*atom, ChainStats::default());
                }
                let mut rng = substream(seed, Purpose::Resampling, i as u64);
                let (position, stats) = if exact {
                    (reference.draw(&mut rng), ChainStats::default())
                } else {
                    self.chain(potential, &reference, beta, atom.position, &mut rng)
                };
                let velocity = gaussian3(&mut rng) * sigma_v;
                (
                    AtomRecord {
                        position,
                        velocity,
                        ..*atom
                    },
                    stats,
                )
            })
            .collect();

        let stats = drawn
            .iter()
            .fold(ChainStats::default(), |s, (_, c)| s.merge(*c));
        Self::check(stats)?;
        let atoms = drawn.into_iter().map(|(a, _)| a).collect();
        Ok((CloudState::new(atoms, temperature)?, stats))
    }
}

/// Equilibrium cloud with the default sampler settings.
pub fn sample_thermal_cloud<P: Potential>(
    n_sim: usize,
    n_phys: f64,
    temperature: f64,
    potential: &P,
    seed: u64,
) -> Result<CloudState> {
    ThermalSampler::default()
        .sample(n_sim, n_phys, temperature, potential, seed)
        .map(|(c, _)| c)
}

/// Instantaneous re-thermalization into `potential` with default settings.
pub fn resample_equilibrium<P: Potential>(
    cloud: &CloudState,
    potential: &P,
    temperature: f64,
    seed: u64,
) -> Result<CloudState> {
    ThermalSampler::default()
        .resample(cloud, potential, temperature, seed)
        .map(|(c, _)| c)
}
