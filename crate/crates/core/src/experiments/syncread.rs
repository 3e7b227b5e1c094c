//! Synchronized readout: the same sensing block repeated every `T_L` on a
//! continuous signal, read out as photon counts.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    analytic_state, dephase, initial_state, propagate_bruteforce, survival_probability,
    AnalyticResponse, Basis, Engine, EngineConfig, SensorState,
};
use crate::error::{usage, Result};
use crate::sequence::{Scheme, SequenceParams};
use crate::signal::{wrap_phase, SignalSpec};

/// Optical readout time appended to each sensing block.
pub const DEFAULT_READOUT_TIME: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncReadout {
    pub omega_scan: f64,
    /// Sampling interval `T_L`.
    pub interval: f64,
    pub samples: usize,
    /// Mean photons per readout `C`.
    pub gain: f64,
    pub contrast: f64,
    /// Common phase offset `φ0` added to every tone.
    #[serde(default)]
    pub phase0: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_readout_time")]
    pub readout_time: f64,
}

fn default_readout_time() -> f64 {
    DEFAULT_READOUT_TIME
}

impl SyncReadout {
    /// Operating point with `T_L = 71 μs`, `C = 0.09`, contrast 0.3 and a
    /// trace of roughly `duration` seconds.
    pub fn desk_scale(omega_scan: f64, interval: f64, duration: f64, seed: u64) -> Self {
        SyncReadout {
            omega_scan,
            interval,
            samples: (duration / interval).round() as usize,
            gain: 0.09,
            contrast: 0.3,
            phase0: 0.0,
            seed,
            readout_time: DEFAULT_READOUT_TIME,
        }
    }

    pub fn validate(&self, sensing_time: f64) -> Result<()> {
        if !(self.gain > 0.0) {
            return Err(usage(format!("readout gain C must be > 0, got {}", self.gain)));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(usage(format!("contrast must lie in [0, 1], got {}", self.contrast)));
        }
        if self.samples < 2 {
            return Err(usage("a photon trace needs at least 2 samples"));
        }
        if !(self.readout_time >= 0.0) {
            return Err(usage("readout time must be >= 0"));
        }
        let needed = sensing_time + self.readout_time;
        if !(self.interval >= needed) {
            return Err(usage(format!(
                "sampling interval {:e} s is shorter than sensing plus readout ({needed:e} s)",
                self.interval
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhotonTrace {
    pub scheme: Scheme,
    pub interval: f64,
    pub counts: Vec<u32>,
    /// Readout probability of each sample before the Bernoulli draw.
    pub probability: Vec<f64>,
    pub gain: f64,
    pub contrast: f64,
    pub seed: u64,
}

impl PhotonTrace {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.counts.len() as f64 * self.interval
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Noise-free expectation `C (1 − ε P_m)` of each sample.
    pub fn expected_counts(&self) -> Vec<f64> {
        self.probability
            .iter()
            .map(|p| self.gain * (1.0 - self.contrast * p))
            .collect()
    }
}

/// `φ_m = ω m T_L + φ0`, reduced to `[0, 2π)`.
pub fn sample_phase(omega: f64, interval: f64, m: usize, phase0: f64) -> f64 {
    wrap_phase(omega * m as f64 * interval + phase0)
}

/// Smallest `p ≤ max_period` for which `f p T_L` is an integer, evaluated in
/// rational arithmetic on the shortest decimal form of the configured values.
pub fn phase_period(frequency_hz: f64, interval: f64, max_period: u64) -> Option<u64> {
    let cycles = decimal_ratio(frequency_hz)? * decimal_ratio(interval)?;
    (1..=max_period).find(|&p| (cycles * Ratio::from_integer(p as i128)).is_integer())
}

/// Exact value of the shortest round-trip decimal representation of `x`.
fn decimal_ratio(x: f64) -> Option<Ratio<i128>> {
    if !x.is_finite() {
        return None;
    }
    let text = format!("{x}");
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: i128 = format!("{int}{frac}").parse().ok()?;
    let scale = 10i128.checked_pow(frac.len() as u32)?;
    Some(Ratio::new(digits, scale))
}

/// Rotation applied before the optical readout, and the probability it
/// reports: `P(|0⟩)` after the rotation.
fn readout(scheme: Scheme, psi: &SensorState) -> f64 {
    let rotated = match scheme {
        Scheme::Xy | Scheme::GdParallel => psi.rotate([1.0, 0.0, 0.0], FRAC_PI_2),
        Scheme::Cpmg => psi.rotate([0.0, 1.0, 0.0], 3.0 * FRAC_PI_2),
        Scheme::GdPerp => *psi,
    };
    survival_probability(&rotated, Basis::Zero)
}

/// Generates a seeded photon-count trace. Sample `m` senses the signal
/// advanced by `m T_L` (plus `φ0`), applies the readout rotation, draws a
/// Bernoulli outcome with the resulting probability and then a Poisson count
/// with mean `C (1 − ε · outcome)`.
pub fn run_synchronized_readout(
    scheme: Scheme,
    spec: &SignalSpec,
    params: &SequenceParams,
    cfg: &SyncReadout,
    engine: &EngineConfig,
) -> Result<PhotonTrace> {
    engine.validate()?;
    let seq = params.build(scheme, cfg.omega_scan)?;
    let t_s = seq.total_duration();
    cfg.validate(t_s)?;

    let response = match engine.engine {
        Engine::Analytic => Some(AnalyticResponse::new(&seq, spec, t_s)?),
        Engine::BruteForce => None,
    };
    let mut probability = Vec::with_capacity(cfg.samples);
    for m in 0..cfg.samples {
        let delay = m as f64 * cfg.interval;
        let psi = match &response {
            Some(r) => {
                let phases = r
                    .tones()
                    .iter()
                    .map(|t| t.phase() + cfg.phase0 + (t.frequency() * delay) % TAU);
                analytic_state(scheme, r.phase_with(phases))
            }
            None => {
                let spec_m = spec.delayed(delay).phase_shifted(cfg.phase0);
                propagate_bruteforce(&seq, &spec_m, initial_state(scheme), engine)?
            }
        };
        probability.push(dephase(readout(scheme, &psi), t_s, engine.dephasing_t2star));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut counts = Vec::with_capacity(cfg.samples);
    for &p in &probability {
        let outcome = if rng.gen_bool(p.clamp(0.0, 1.0)) { 1.0 } else { 0.0 };
        let mean = cfg.gain * (1.0 - cfg.contrast * outcome);
        let n = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| usage(format!("poisson sampler: {e}")))?
                .sample(&mut rng) as u32
        } else {
            0
        };
        counts.push(n);
    }
    Ok(PhotonTrace {
        scheme,
        interval: cfg.interval,
        counts,
        probability,
        gain: cfg.gain,
        contrast: cfg.contrast,
        seed: cfg.seed,
    })
}
