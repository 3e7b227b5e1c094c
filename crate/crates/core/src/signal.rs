//! Multi-tone AC signals and the heterodyne (rotating-frame) transform.
//!
//! Amplitudes and frequencies are angular quantities in rad/s throughout; a
//! field quoted as "2π × 24 kHz" is stored as `2.0 * PI * 24e3`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::Serialize;

use crate::error::{usage, Error, Result};

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// One sinusoidal component `b cos(ωt + φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tone {
    amplitude: f64,
    frequency: f64,
    phase: f64,
}

impl Tone {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(usage(format!("tone amplitude must be >= 0, got {amplitude}")));
        }
        if !frequency.is_finite() || frequency <= 0.0 {
            return Err(usage(format!("tone frequency must be > 0, got {frequency}")));
        }
        if !phase.is_finite() {
            return Err(usage("tone phase must be finite"));
        }
        Ok(Tone {
            amplitude,
            frequency,
            phase: wrap_phase(phase),
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).cos()
    }

    #[inline]
    pub fn quadrature(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).sin()
    }

    /// The same tone observed `dt` seconds later: `φ → φ + ω dt`.
    pub fn delayed(&self, dt: f64) -> Tone {
        Tone {
            phase: wrap_phase(self.phase + self.frequency * dt),
            ..*self
        }
    }

    pub fn with_phase(&self, phase: f64) -> Tone {
        Tone {
            phase: wrap_phase(phase),
            ..*self
        }
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Result<Tone> {
        Tone::new(amplitude, self.frequency, self.phase)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Frame {
    Lab,
    /// Frame co-rotating at the qubit splitting `omega0` (rad/s). Perpendicular
    /// tone frequencies are detunings `Δ = ω − ω0`.
    Rotating { omega0: f64 },
}

impl Frame {
    pub fn name(&self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::Rotating { .. } => "rotating",
        }
    }
}

/// Field components along (parallel) and across (perpendicular) the sensor axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalSpec {
    parallel: Vec<Tone>,
    perpendicular: Vec<Tone>,
    frame: Frame,
}

impl SignalSpec {
    pub fn lab(parallel: Vec<Tone>, perpendicular: Vec<Tone>) -> Self {
        SignalSpec {
            parallel,
            perpendicular,
            frame: Frame::Lab,
        }
    }

    /// A rotating-frame signal given directly by its detuned tones. The tone
    /// amplitudes are rotating-frame amplitudes (half the lab amplitude).
    pub fn rotating(omega0: f64, parallel: Vec<Tone>, perpendicular: Vec<Tone>) -> Result<Self> {
        if !omega0.is_finite() || omega0 <= 0.0 {
            return Err(usage(format!("omega0 must be > 0, got {omega0}")));
        }
        Ok(SignalSpec {
            parallel,
            perpendicular,
            frame: Frame::Rotating { omega0 },
        })
    }

    pub fn zero() -> Self {
        SignalSpec::lab(Vec::new(), Vec::new())
    }

    pub fn parallel(&self) -> &[Tone] {
        &self.parallel
    }

    pub fn perpendicular(&self) -> &[Tone] {
        &self.perpendicular
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn is_rotating(&self) -> bool {
        matches!(self.frame, Frame::Rotating { .. })
    }

    /// Tones of both specs summed into one field. Frames must agree.
    pub fn concat(&self, other: &SignalSpec) -> Result<SignalSpec> {
        if self.frame != other.frame {
            return Err(Error::FrameMismatch {
                expected: self.frame.name(),
                found: other.frame.name(),
            });
        }
        let mut out = self.clone();
        out.parallel.extend_from_slice(&other.parallel);
        out.perpendicular.extend_from_slice(&other.perpendicular);
        Ok(out)
    }

    /// The field seen by a measurement that starts `dt` seconds later.
    pub fn delayed(&self, dt: f64) -> SignalSpec {
        SignalSpec {
            parallel: self.parallel.iter().map(|t| t.delayed(dt)).collect(),
            perpendicular: self.perpendicular.iter().map(|t| t.delayed(dt)).collect(),
            frame: self.frame,
        }
    }

    /// Every tone shifted by a common extra phase.
    pub fn phase_shifted(&self, dphi: f64) -> SignalSpec {
        let shift = |t: &Tone| t.with_phase(t.phase() + dphi);
        SignalSpec {
            parallel: self.parallel.iter().map(shift).collect(),
            perpendicular: self.perpendicular.iter().map(shift).collect(),
            frame: self.frame,
        }
    }

    /// Largest angular frequency present in the channels the dynamics sees.
    pub(crate) fn max_frequency(&self) -> f64 {
        let perp = if self.is_rotating() {
            self.perpendicular.iter().map(Tone::frequency).fold(0.0, f64::max)
        } else {
            0.0
        };
        self.parallel
            .iter()
            .map(Tone::frequency)
            .fold(perp, f64::max)
    }

    #[inline]
    pub(crate) fn parallel_unchecked(&self, t: f64) -> f64 {
        self.parallel.iter().map(|tone| tone.value(t)).sum()
    }

    #[inline]
    pub(crate) fn rotating_unchecked(&self, t: f64) -> (f64, f64) {
        self.perpendicular.iter().fold((0.0, 0.0), |(x, y), tone| {
            let arg = tone.frequency * t + tone.phase;
            (x + tone.amplitude * arg.cos(), y + tone.amplitude * arg.sin())
        })
    }
}

/// `B∥(t) = Σ b cos(ωt + φ)` over the parallel tones of a lab-frame spec.
pub fn field_parallel(spec: &SignalSpec, t: f64) -> Result<f64> {
    if spec.frame != Frame::Lab {
        return Err(Error::FrameMismatch {
            expected: "lab",
            found: spec.frame.name(),
        });
    }
    if !(t >= 0.0) {
        return Err(usage(format!("time must be >= 0, got {t}")));
    }
    Ok(spec.parallel_unchecked(t))
}

/// Rotating-frame quadratures `(B_X, B_Y) = Σ b (cos, sin)(Δt + φ)`.
///
/// The rotating-frame Hamiltonian of the perpendicular channel is
/// `B_X σx − B_Y σy`.
pub fn field_rotating(spec: &SignalSpec, t: f64) -> Result<(f64, f64)> {
    if !spec.is_rotating() {
        return Err(Error::FrameMismatch {
            expected: "rotating",
            found: spec.frame.name(),
        });
    }
    if !(t >= 0.0) {
        return Err(usage(format!("time must be >= 0, got {t}")));
    }
    Ok(spec.rotating_unchecked(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum Strictness {
    #[default]
    Warn,
    Strict,
}

/// Thresholds for `b ≪ |Δ| ≪ ω + ω0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeterodyneLimits {
    pub max_amplitude_ratio: f64,
    pub max_detuning_ratio: f64,
}

impl Default for HeterodyneLimits {
    fn default() -> Self {
        HeterodyneLimits {
            max_amplitude_ratio: 0.2,
            max_detuning_ratio: 0.01,
        }
    }
}

/// Converts the perpendicular lab-frame tones into rotating-frame detuned
/// tones of half amplitude. Parallel tones pass through unchanged.
///
/// Returns the converted spec and any validity warnings (empty in strict mode,
/// where a violation is an error instead).
pub fn to_rotating_frame(
    spec: &SignalSpec,
    omega0: f64,
    limits: HeterodyneLimits,
    strictness: Strictness,
) -> Result<(SignalSpec, Vec<String>)> {
    if spec.frame != Frame::Lab {
        return Err(Error::FrameMismatch {
            expected: "lab",
            found: spec.frame.name(),
        });
    }
    if !omega0.is_finite() || omega0 <= 0.0 {
        return Err(usage(format!("omega0 must be > 0, got {omega0}")));
    }
    let mut warnings = Vec::new();
    let mut perpendicular = Vec::with_capacity(spec.perpendicular.len());
    for (i, tone) in spec.perpendicular.iter().enumerate() {
        let detuning = tone.frequency - omega0;
        if detuning == 0.0 {
            return Err(Error::Heterodyne(format!(
                "perpendicular tone {i} sits exactly at omega0 (zero detuning)"
            )));
        }
        if detuning < 0.0 {
            return Err(Error::Heterodyne(format!(
                "perpendicular tone {i} has negative detuning {detuning:e} rad/s"
            )));
        }
        let amp_ratio = tone.amplitude / detuning;
        let det_ratio = detuning / (tone.frequency + omega0);
        let mut problems = Vec::new();
        if amp_ratio > limits.max_amplitude_ratio {
            problems.push(format!(
                "b/|Δ| = {amp_ratio:.4} exceeds {}",
                limits.max_amplitude_ratio
            ));
        }
        if det_ratio > limits.max_detuning_ratio {
            problems.push(format!(
                "|Δ|/(ω+ω0) = {det_ratio:.4} exceeds {}",
                limits.max_detuning_ratio
            ));
        }
        if !problems.is_empty() {
            let msg = format!("perpendicular tone {i}: {}", problems.join("; "));
            match strictness {
                Strictness::Strict => return Err(Error::Heterodyne(msg)),
                Strictness::Warn => warnings.push(msg),
            }
        }
        perpendicular.push(Tone::new(tone.amplitude / 2.0, detuning, tone.phase)?);
    }
    Ok((
        SignalSpec {
            parallel: spec.parallel.clone(),
            perpendicular,
            frame: Frame::Rotating { omega0 },
        },
        warnings,
    ))
}

/// Uniform draw from `{2πk/grid_size : k = 0..grid_size}`.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R, grid_size: usize) -> Result<f64> {
    if grid_size == 0 {
        return Err(usage("phase grid size must be >= 1"));
    }
    let k = rng.gen_range(0..grid_size);
    Ok(2.0 * PI * k as f64 / grid_size as f64)
}
