//! Fourier components of modulation functions and their Monte-Carlo
//! reconstruction from random-phase sensing runs.
//!
//! For a random-phase tone `b cos(ωt + θ)` the accumulated phase is
//! `Φ = b Re[κ(ω) e^{iθ}]` with `κ = ∫F e^{iωt} dt`, so the phase average is
//! `⟨Φ²⟩ = b² |κ|² / 2 = π b² |f|²`, where `|f| = |κ| / √(2π)`. The
//! reconstruction therefore reports `√(⟨Φ²⟩/π) / b`.

use std::f64::consts::{PI, TAU};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    simulate, toggling_modulation, AnalyticResponse, Engine, EngineConfig, ModulationFunction,
};
use crate::error::{usage, Result};
use crate::sequence::{PulseSequence, Scheme};
use crate::signal::{random_phase, SignalSpec, Tone};

const KHZ: f64 = TAU * 1e3;
const MHZ: f64 = TAU * 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FilterSource {
    Exact,
    Reconstructed { ensemble: usize },
}

impl FilterSource {
    pub fn label(&self) -> &'static str {
        match self {
            FilterSource::Exact => "exact",
            FilterSource::Reconstructed { .. } => "reconstructed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterCurve {
    pub omega: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub source: FilterSource,
    /// Samples dropped per point because the phase left the readout branch.
    pub excluded: Vec<usize>,
}

impl FilterCurve {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }
}

/// `|f(ω, T)| = |∫₀^T F(t) e^{−iωt} dt| / √(2π)`.
pub fn exact_fourier_component(f: &ModulationFunction, omega: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) || t > f.duration() * (1.0 + 1e-12) {
        return Err(usage(format!(
            "window {t:e} s exceeds the modulation domain {:e} s",
            f.duration()
        )));
    }
    // |conj| is the same magnitude
    Ok(f.transform(omega, t).norm() / TAU.sqrt())
}

/// Factor by which a scheme's phase exceeds `b Re[κ e^{iθ}]` near resonance.
/// The perpendicular geodesic scheme picks up both rotating-frame
/// quadratures, doubling its secular response.
pub fn response_gain(scheme: Scheme) -> f64 {
    match scheme {
        Scheme::GdPerp => 2.0,
        _ => 1.0,
    }
}

/// Filter magnitude that a noiseless, fully averaged reconstruction returns.
/// Identical to [`exact_fourier_component`] except for the perpendicular
/// geodesic scheme, whose quadrature staircase also contributes.
pub fn effective_fourier_component(seq: &PulseSequence, omega: f64) -> Result<f64> {
    let spec = probe_spec(seq.scheme(), 1.0, omega, 0.0)?;
    let r = AnalyticResponse::new(seq, &spec, seq.total_duration())?;
    Ok(r.coefficients()[0].norm() / (response_gain(seq.scheme()) * TAU.sqrt()))
}

pub fn exact_filter(seq: &PulseSequence, grid: &[f64]) -> Result<FilterCurve> {
    check_grid(grid)?;
    let f = toggling_modulation(seq);
    let t = seq.total_duration();
    let magnitude = grid
        .iter()
        .map(|&w| exact_fourier_component(&f, w, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterCurve {
        omega: grid.to_vec(),
        magnitude,
        source: FilterSource::Exact,
        excluded: vec![0; grid.len()],
    })
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(usage("filter grid frequencies must be finite and > 0"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("filter grid must be strictly increasing"));
    }
    Ok(())
}

/// One probing tone in the channel the scheme senses. `amplitude` is the
/// lab-frame amplitude; perpendicular channels get the rotating-frame half.
fn probe_spec(scheme: Scheme, amplitude: f64, omega: f64, phase: f64) -> Result<SignalSpec> {
    if scheme.is_perpendicular() {
        let tone = Tone::new(0.5 * amplitude, omega, phase)?;
        SignalSpec::rotating(1.0, vec![], vec![tone])
    } else {
        Ok(SignalSpec::lab(vec![Tone::new(amplitude, omega, phase)?], vec![]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeBand {
    pub omega_min: f64,
    pub omega_max: f64,
    pub amplitude: f64,
}

/// Probe amplitude per frequency band, raised with frequency so that the
/// weaker high-order response still gives a measurable phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSchedule {
    pub bands: Vec<AmplitudeBand>,
}

impl AmplitudeSchedule {
    /// Reference probe bands for each scheme (amplitudes in 2π×kHz):
    /// 24/72/120/168 for XY and GD∥ on 0.17 to 2.36 MHz, 39/117/195/273 for
    /// CPMG and 25/75/125/175 for GD⊥ on 0.118 to 2.352 MHz.
    pub fn reference(scheme: Scheme) -> Self {
        let ranges: [(f64, f64); 4] = if scheme.is_perpendicular() {
            [(0.118, 0.558), (0.642, 1.104), (1.2, 1.752), (1.85, 2.352)]
        } else {
            [(0.17, 0.56), (0.64, 1.24), (1.32, 1.76), (1.85, 2.36)]
        };
        let amplitudes: [f64; 4] = match scheme {
            Scheme::Xy | Scheme::GdParallel => [24.0, 72.0, 120.0, 168.0],
            Scheme::Cpmg => [39.0, 117.0, 195.0, 273.0],
            Scheme::GdPerp => [25.0, 75.0, 125.0, 175.0],
        };
        AmplitudeSchedule {
            bands: ranges
                .iter()
                .zip(amplitudes)
                .map(|(&(lo, hi), b)| AmplitudeBand {
                    omega_min: lo * MHZ,
                    omega_max: hi * MHZ,
                    amplitude: b * KHZ,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.bands {
            if !(b.amplitude > 0.0) {
                return Err(usage("probe amplitude b_R must be > 0"));
            }
            if !(b.omega_min > 0.0 && b.omega_max >= b.omega_min) {
                return Err(usage("amplitude band bounds must satisfy 0 < min <= max"));
            }
        }
        Ok(())
    }

    /// Scales every band amplitude.
    pub fn scaled(&self, factor: f64) -> Self {
        AmplitudeSchedule {
            bands: self
                .bands
                .iter()
                .map(|b| AmplitudeBand {
                    amplitude: b.amplitude * factor,
                    ..*b
                })
                .collect(),
        }
    }

    pub fn amplitude_for(&self, omega: f64) -> Option<f64> {
        self.bands
            .iter()
            .find(|b| omega >= b.omega_min && omega <= b.omega_max)
            .map(|b| b.amplitude)
    }

    /// `points_per_band` evenly spaced frequencies per band, paired with the
    /// band amplitude, in increasing frequency.
    pub fn grid(&self, points_per_band: usize) -> Vec<(f64, f64)> {
        let mut bands = self.bands.clone();
        bands.sort_by(|a, b| a.omega_min.total_cmp(&b.omega_min));
        let mut out = Vec::new();
        for b in &bands {
            for i in 0..points_per_band {
                let w = if points_per_band == 1 {
                    0.5 * (b.omega_min + b.omega_max)
                } else {
                    b.omega_min + (b.omega_max - b.omega_min) * i as f64 / (points_per_band - 1) as f64
                };
                if out.last().is_none_or(|&(last, _)| w > last) {
                    out.push((w, b.amplitude));
                }
            }
        }
        out
    }
}

/// How the random phases of one ensemble are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseSampling {
    /// Every procedure draws its phase independently.
    Independent,
    /// Each consecutive batch of `phase_grid` procedures visits every grid
    /// phase once, in shuffled order.
    #[default]
    Stratified,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionConfig {
    /// Procedures per frequency point.
    pub ensemble: usize,
    pub phase_grid: usize,
    pub sampling: PhaseSampling,
    pub engine: EngineConfig,
    pub seed: u64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            ensemble: 72,
            phase_grid: 6,
            sampling: PhaseSampling::Stratified,
            engine: EngineConfig::default(),
            seed: 0,
        }
    }
}

/// Below this survival probability the arcsine inversion is at its branch
/// limit and the sample cannot be trusted.
const BRANCH_FLOOR: f64 = 1e-12;

/// Reconstructs `|f(ω_R)|` at each `(ω_R, b_R)` point by averaging the
/// squared phase read out from `ensemble` random-phase runs.
pub fn reconstruct_filter(
    seq: &PulseSequence,
    points: &[(f64, f64)],
    cfg: &ReconstructionConfig,
) -> Result<FilterCurve> {
    if cfg.ensemble == 0 {
        return Err(usage("ensemble size M must be >= 1"));
    }
    if cfg.phase_grid == 0 {
        return Err(usage("phase grid size must be >= 1"));
    }
    cfg.engine.validate()?;
    let grid: Vec<f64> = points.iter().map(|p| p.0).collect();
    check_grid(&grid)?;
    if let Some(&(w, _)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(usage(format!("probe amplitude b_R must be > 0 (at ω = {w:e} rad/s)")));
    }

    let results: Vec<(f64, usize)> = points
        .par_iter()
        .enumerate()
        .map(|(idx, &(omega, b))| reconstruct_point(seq, omega, b, cfg, idx as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterCurve {
        omega: grid,
        magnitude: results.iter().map(|r| r.0).collect(),
        source: FilterSource::Reconstructed {
            ensemble: cfg.ensemble,
        },
        excluded: results.iter().map(|r| r.1).collect(),
    })
}

fn reconstruct_point(
    seq: &PulseSequence,
    omega: f64,
    b: f64,
    cfg: &ReconstructionConfig,
    stream: u64,
) -> Result<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let phases = draw_phases(&mut rng, cfg)?;
    let scheme = seq.scheme();
    let response = match cfg.engine.engine {
        Engine::Analytic => Some(AnalyticResponse::new(
            seq,
            &probe_spec(scheme, b, omega, 0.0)?,
            seq.total_duration(),
        )?),
        Engine::BruteForce => None,
    };

    let mut sum = 0.0;
    let mut kept = 0usize;
    for &theta in &phases {
        let (p, true_phase) = match &response {
            Some(r) => {
                let phi = r.phase_with([theta]);
                let p = crate::dynamics::dephase(
                    0.5 * (1.0 + phi.cos()),
                    seq.total_duration(),
                    cfg.engine.dephasing_t2star,
                );
                (p, Some(phi))
            }
            None => (
                simulate(seq, &probe_spec(scheme, b, omega, theta)?, &cfg.engine)?.probability,
                None,
            ),
        };
        if true_phase.is_some_and(|phi| phi.abs() >= PI) || p <= BRANCH_FLOOR {
            continue;
        }
        let phi = extract_phase(p);
        sum += phi * phi;
        kept += 1;
    }
    let excluded = phases.len() - kept;
    if kept == 0 {
        return Ok((f64::NAN, excluded));
    }
    let mean_sq = sum / kept as f64;
    Ok(((mean_sq / PI).sqrt() / (response_gain(scheme) * b), excluded))
}

/// `Φ = π/2 − arcsin(2P − 1)`, the inverse of `P = (1 + cos Φ)/2` on `[0, π]`.
pub fn extract_phase(p: f64) -> f64 {
    PI / 2.0 - (2.0 * p - 1.0).clamp(-1.0, 1.0).asin()
}

fn draw_phases(rng: &mut ChaCha8Rng, cfg: &ReconstructionConfig) -> Result<Vec<f64>> {
    let n = cfg.phase_grid;
    match cfg.sampling {
        PhaseSampling::Independent => (0..cfg.ensemble).map(|_| random_phase(rng, n)).collect(),
        PhaseSampling::Stratified => {
            let mut out = Vec::with_capacity(cfg.ensemble);
            let mut perm: Vec<usize> = (0..n).collect();
            while out.len() < cfg.ensemble {
                perm.shuffle(rng);
                for &k in perm.iter().take(cfg.ensemble - out.len()) {
                    out.push(TAU * k as f64 / n as f64);
                }
            }
            Ok(out)
        }
    }
}

/// Phase-grid average of `B(t) B(t + Δt)` for `B = b cos(ωt + θ)`.
pub fn ensemble_correlation(b: f64, omega: f64, t: f64, dt: f64, grid: usize) -> Result<f64> {
    if grid == 0 {
        return Err(usage("phase grid size must be >= 1"));
    }
    let sum: f64 = (0..grid)
        .map(|k| {
            let theta = TAU * k as f64 / grid as f64;
            b * (omega * t + theta).cos() * b * (omega * (t + dt) + theta).cos()
        })
        .sum();
    Ok(sum / grid as f64)
}
