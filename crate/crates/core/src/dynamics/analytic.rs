//! Closed-form accumulated phase from the toggling-frame modulation function.

use num_complex::Complex64 as C64;

use crate::dynamics::modulation::{toggling_modulation, ModulationFunction};
use crate::dynamics::state::SensorState;
use crate::dynamics::{check_frame, check_upto};
use crate::error::Result;
use crate::sequence::{PulseSequence, Scheme};
use crate::signal::{SignalSpec, Tone};

/// Linear response of one sequence to a fixed set of tones.
///
/// The accumulated phase is `Φ = Σ_k Re[c_k e^{iφ_k}]`, so re-evaluating it
/// for new tone phases costs one complex multiply per tone.
#[derive(Clone, Debug)]
pub struct AnalyticResponse {
    scheme: Scheme,
    tones: Vec<Tone>,
    coefficients: Vec<C64>,
}

impl AnalyticResponse {
    pub fn new(seq: &PulseSequence, spec: &SignalSpec, upto: f64) -> Result<Self> {
        check_frame(seq.scheme(), spec)?;
        check_upto(seq, upto)?;
        let modulation = toggling_modulation(seq);
        Ok(Self::from_modulation(&modulation, spec, upto))
    }

    pub(crate) fn from_modulation(f: &ModulationFunction, spec: &SignalSpec, upto: f64) -> Self {
        let tones: Vec<Tone> = match f.scheme {
            Scheme::Xy | Scheme::GdParallel => spec.parallel().to_vec(),
            Scheme::Cpmg | Scheme::GdPerp => spec.perpendicular().to_vec(),
        };
        let coefficients = tones
            .iter()
            .map(|tone| {
                let b = tone.amplitude();
                let z = f.transform(tone.frequency(), upto);
                match f.scheme {
                    // ∫ F b cos(ωt + φ)
                    Scheme::Xy | Scheme::GdParallel => b * z,
                    // 2 ∫ F b sin(Δt + φ)
                    Scheme::Cpmg => C64::new(0.0, -2.0 * b) * z,
                    // 2 ∫ b [F cos(Δt + φ) + Q sin(Δt + φ)]
                    Scheme::GdPerp => {
                        let q = f.quadrature_transform(tone.frequency(), upto);
                        2.0 * b * (z - C64::i() * q)
                    }
                }
            })
            .collect();
        AnalyticResponse {
            scheme: f.scheme,
            tones,
            coefficients,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    /// Phase for the tones as given.
    pub fn phase(&self) -> f64 {
        self.phase_with(self.tones.iter().map(Tone::phase))
    }

    /// Phase when every tone starts `dt` seconds later in its own cycle.
    pub fn phase_delayed(&self, dt: f64) -> f64 {
        self.phase_with(
            self.tones
                .iter()
                .map(|t| t.phase() + t.frequency() * dt),
        )
    }

    /// Phase for explicit tone phases, in tone order.
    pub fn phase_with(&self, phases: impl IntoIterator<Item = f64>) -> f64 {
        self.coefficients
            .iter()
            .zip(phases)
            .map(|(c, phi)| (c * C64::from_polar(1.0, phi)).re)
            .sum()
    }
}

/// `Φ(upto)` for the scheme of `seq`, in closed form per segment.
pub fn accumulated_phase_analytic(seq: &PulseSequence, spec: &SignalSpec, upto: f64) -> Result<f64> {
    Ok(AnalyticResponse::new(seq, spec, upto)?.phase())
}

/// Final state after accumulating `phi` from the scheme's initial state.
pub fn analytic_state(scheme: Scheme, phi: f64) -> SensorState {
    match scheme {
        // exp(−iΦσz/2)|+⟩
        Scheme::Xy | Scheme::GdParallel => SensorState::plus().rotate([0.0, 0.0, 1.0], phi),
        // exp(+iΦσy/2)|0⟩
        Scheme::Cpmg => SensorState::zero().rotate([0.0, 1.0, 0.0], -phi),
        // exp(−iΦσx/2)|L⟩
        Scheme::GdPerp => SensorState::l().rotate([1.0, 0.0, 0.0], phi),
    }
}
