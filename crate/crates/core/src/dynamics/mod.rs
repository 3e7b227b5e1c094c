//! Sensor dynamics: the analytic toggling-frame engine and a brute-force
//! propagator, both in the rotating frame with the rotating-wave
//! approximation applied.

pub mod analytic;
pub mod bruteforce;
pub mod modulation;
pub mod state;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::sequence::{PulseSequence, Scheme};
use crate::signal::SignalSpec;

pub use analytic::{accumulated_phase_analytic, analytic_state, AnalyticResponse};
pub use bruteforce::{propagate_bruteforce, propagate_bruteforce_until, propagator_bruteforce_until};
pub use modulation::{toggling_modulation, ModulationFunction, Segment};
pub use state::{state_fidelity, survival_probability, Basis, Operator, SensorState};

/// Every Hamiltonian here is already in the rotating-wave form.
pub const RWA: bool = true;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    #[default]
    Analytic,
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub engine: Engine,
    pub steps_per_pulse: usize,
    /// Steps per period of the fastest signal tone during free evolution.
    pub steps_per_gap_cycle: usize,
    /// Optional T2* contrast envelope, in seconds.
    pub dephasing_t2star: Option<f64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            engine: Engine::Analytic,
            steps_per_pulse: 32,
            steps_per_gap_cycle: 128,
            dephasing_t2star: None,
        }
    }
}

impl EngineConfig {
    pub fn analytic() -> Self {
        EngineConfig::default()
    }

    pub fn brute_force() -> Self {
        EngineConfig {
            engine: Engine::BruteForce,
            ..EngineConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_pulse < 8 {
            return Err(usage(format!(
                "steps_per_pulse must be >= 8, got {}",
                self.steps_per_pulse
            )));
        }
        if self.steps_per_gap_cycle < 16 {
            return Err(usage(format!(
                "steps_per_gap_cycle must be >= 16, got {}",
                self.steps_per_gap_cycle
            )));
        }
        if let Some(t2) = self.dephasing_t2star {
            if !(t2 > 0.0) {
                return Err(usage(format!("T2* must be > 0, got {t2}")));
            }
        }
        Ok(())
    }
}

/// Result of one sensing run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Outcome {
    /// Survival probability in the scheme's readout basis.
    pub probability: f64,
    /// Accumulated phase; only the analytic engine reports it.
    pub phase: Option<f64>,
    pub final_state: SensorState,
}

pub fn initial_state(scheme: Scheme) -> SensorState {
    match scheme {
        Scheme::Xy | Scheme::GdParallel => SensorState::plus(),
        Scheme::Cpmg => SensorState::zero(),
        Scheme::GdPerp => SensorState::l(),
    }
}

pub fn readout_basis(scheme: Scheme) -> Basis {
    match scheme {
        Scheme::Xy | Scheme::GdParallel => Basis::Plus,
        Scheme::Cpmg => Basis::Zero,
        Scheme::GdPerp => Basis::L,
    }
}

/// Parallel schemes read lab-frame fields; heterodyne schemes need the
/// rotating frame.
pub(crate) fn check_frame(scheme: Scheme, spec: &SignalSpec) -> Result<()> {
    let want_rotating = scheme.is_perpendicular();
    if spec.is_rotating() != want_rotating {
        return Err(Error::FrameMismatch {
            expected: if want_rotating { "rotating" } else { "lab" },
            found: spec.frame().name(),
        });
    }
    Ok(())
}

pub(crate) fn check_upto(seq: &PulseSequence, upto: f64) -> Result<()> {
    let t_s = seq.total_duration();
    if !(upto >= 0.0) || upto > t_s * (1.0 + 1e-12) {
        return Err(usage(format!(
            "evaluation time {upto:e} s outside the sequence window [0, {t_s:e}] s"
        )));
    }
    Ok(())
}

/// `P → ½ + (P − ½) e^{−T/T2*}`
pub fn dephase(probability: f64, duration: f64, t2star: Option<f64>) -> f64 {
    match t2star {
        Some(t2) => 0.5 + (probability - 0.5) * (-duration / t2).exp(),
        None => probability,
    }
}

/// Runs the scheme's full protocol: prepare, evolve, read out.
pub fn simulate(seq: &PulseSequence, spec: &SignalSpec, cfg: &EngineConfig) -> Result<Outcome> {
    cfg.validate()?;
    let scheme = seq.scheme();
    let t_s = seq.total_duration();
    let (final_state, phase) = match cfg.engine {
        Engine::Analytic => {
            let phi = accumulated_phase_analytic(seq, spec, t_s)?;
            (analytic_state(scheme, phi), Some(phi))
        }
        Engine::BruteForce => (
            propagate_bruteforce(seq, spec, initial_state(scheme), cfg)?,
            None,
        ),
    };
    let p = survival_probability(&final_state, readout_basis(scheme));
    Ok(Outcome {
        probability: dephase(p, t_s, cfg.dephasing_t2star),
        phase,
        final_state,
    })
}
