use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{initial_state, simulate, state_fidelity, EngineConfig};
use crate::error::{usage, Result};
use crate::sequence::{Scheme, SequenceParams};
use crate::signal::{SignalSpec, Tone};

/// Nominal qubit splitting used to label the rotating frame of noise-only
/// perpendicular runs; it does not enter the dynamics.
const NOMINAL_OMEGA0: f64 = std::f64::consts::TAU * 1.47e9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessCurve {
    pub scheme: Scheme,
    pub harmonic: u32,
    pub omega_scan: f64,
    pub amplitude: Vec<f64>,
    pub fidelity: Vec<f64>,
}

/// Fidelity of the final state with the prepared state when a single noise
/// tone sits at `k ω_scan`. Amplitudes are lab-frame values; perpendicular
/// schemes see half of them in the rotating frame.
pub fn run_robustness(
    scheme: Scheme,
    harmonic: u32,
    amplitudes: &[f64],
    omega_scan: f64,
    params: &SequenceParams,
    engine: &EngineConfig,
) -> Result<RobustnessCurve> {
    if harmonic < 3 || harmonic.is_multiple_of(2) {
        return Err(usage(format!("harmonic order must be odd and >= 3, got {harmonic}")));
    }
    engine.validate()?;
    let seq = params.build(scheme, omega_scan)?;
    let omega_n = harmonic as f64 * omega_scan;
    let psi0 = initial_state(scheme);
    let fidelity = amplitudes
        .par_iter()
        .map(|&b| {
            let spec = if scheme.is_perpendicular() {
                SignalSpec::rotating(NOMINAL_OMEGA0, vec![], vec![Tone::new(0.5 * b, omega_n, 0.0)?])?
            } else {
                SignalSpec::lab(vec![Tone::new(b, omega_n, 0.0)?], vec![])
            };
            let out = simulate(&seq, &spec, engine)?;
            Ok(state_fidelity(&out.final_state, &psi0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RobustnessCurve {
        scheme,
        harmonic,
        omega_scan,
        amplitude: amplitudes.to_vec(),
        fidelity,
    })
}
