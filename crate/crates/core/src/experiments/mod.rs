//! Experiment drivers: frequency scans, heterodyne scans, robustness sweeps
//! and synchronized readout.

mod robustness;
mod syncread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{simulate, Engine, EngineConfig};
use crate::error::{usage, Result};
use crate::sequence::{Scheme, SequenceParams};
use crate::signal::{to_rotating_frame, HeterodyneLimits, SignalSpec, Strictness};

pub use robustness::{run_robustness, RobustnessCurve};
pub use syncread::{
    phase_period, run_synchronized_readout, sample_phase, PhotonTrace, SyncReadout,
    DEFAULT_READOUT_TIME,
};

/// Grid point that could not be simulated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanFailure {
    pub omega_scan: f64,
    pub reason: String,
}

/// Readout probability against scan frequency.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub scheme: Scheme,
    pub omega_scan: Vec<f64>,
    pub probability: Vec<f64>,
    /// Accumulated phase per point (analytic engine only).
    pub phase: Option<Vec<f64>>,
    pub engine: Engine,
    /// Points skipped because the sequence could not be built there.
    pub failures: Vec<ScanFailure>,
}

impl ScanResult {
    pub fn len(&self) -> usize {
        self.omega_scan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_scan.is_empty()
    }

    /// Index of the lowest probability.
    pub fn argmin(&self) -> Option<usize> {
        self.probability
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }
}

/// `n` evenly spaced points over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn check_scan_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(usage("scan grid is empty"));
    }
    if grid.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(usage("scan frequencies must be finite and > 0"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(usage("scan grid must be strictly increasing"));
    }
    Ok(())
}

/// Probability, phase and lab frequency at one grid point, or why it failed.
type PointOutcome = std::result::Result<(f64, f64, Option<f64>), ScanFailure>;

/// Rebuilds the sequence at every grid point and records the survival
/// probability in the scheme's readout basis.
pub fn run_frequency_scan(
    scheme: Scheme,
    spec: &SignalSpec,
    grid: &[f64],
    params: &SequenceParams,
    engine: &EngineConfig,
) -> Result<ScanResult> {
    check_scan_grid(grid)?;
    engine.validate()?;
    let points: Vec<PointOutcome> = grid
        .par_iter()
        .map(|&w| {
            let fail = |e: crate::Error| ScanFailure {
                omega_scan: w,
                reason: e.to_string(),
            };
            let seq = params.build(scheme, w).map_err(fail)?;
            let out = simulate(&seq, spec, engine).map_err(fail)?;
            Ok((w, out.probability, out.phase))
        })
        .collect();

    // a frame mismatch fails every point; report it instead of an empty scan
    if let Some(Err(f)) = points.first() {
        if points.iter().all(|p| p.is_err()) {
            return Err(usage(format!("scan failed at every point: {}", f.reason)));
        }
    }

    let mut omega = Vec::with_capacity(grid.len());
    let mut probability = Vec::with_capacity(grid.len());
    let mut phase = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for p in points {
        match p {
            Ok((w, prob, phi)) => {
                omega.push(w);
                probability.push(prob);
                phase.push(phi);
            }
            Err(f) => failures.push(f),
        }
    }
    let phase = phase.into_iter().collect::<Option<Vec<f64>>>();
    Ok(ScanResult {
        scheme,
        omega_scan: omega,
        probability,
        phase,
        engine: engine.engine,
        failures,
    })
}

/// Converts a lab-frame perpendicular signal to detunings from `omega0` and
/// scans the detuning grid. Returns the scan and any validity warnings.
#[allow(clippy::too_many_arguments)]
pub fn run_heterodyne_scan(
    scheme: Scheme,
    lab: &SignalSpec,
    omega0: f64,
    grid: &[f64],
    params: &SequenceParams,
    engine: &EngineConfig,
    limits: HeterodyneLimits,
    strictness: Strictness,
) -> Result<(ScanResult, Vec<String>)> {
    if !scheme.is_perpendicular() {
        return Err(usage(format!(
            "heterodyne scans need a perpendicular scheme (cpmg or gd-perp), got {scheme}"
        )));
    }
    let (rotating, warnings) = to_rotating_frame(lab, omega0, limits, strictness)?;
    Ok((run_frequency_scan(scheme, &rotating, grid, params, engine)?, warnings))
}

/// Replaces every probability by a binomial estimate from `shots` readouts.
pub fn apply_shot_noise(scan: &ScanResult, shots: u64, seed: u64) -> Result<ScanResult> {
    if shots == 0 {
        return Err(usage("shots per point must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probability = scan
        .probability
        .iter()
        .map(|&p| {
            let dist = Binomial::new(shots, p.clamp(0.0, 1.0))
                .map_err(|e| usage(format!("binomial sampler: {e}")))?;
            Ok(dist.sample(&mut rng) as f64 / shots as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        probability,
        ..scan.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Tone;
    use std::f64::consts::TAU;

    const KHZ: f64 = TAU * 1e3;
    const MHZ: f64 = TAU * 1e6;

    #[test]
    fn zero_signal_scan_is_flat() {
        for scheme in Scheme::ALL {
            let spec = if scheme.is_perpendicular() {
                SignalSpec::rotating(TAU * 1.47e9, vec![], vec![]).unwrap()
            } else {
                SignalSpec::zero()
            };
            let grid = linear_grid(0.24 * MHZ, 0.36 * MHZ, 13);
            let scan = run_frequency_scan(
                scheme,
                &spec,
                &grid,
                &SequenceParams::reference(scheme),
                &EngineConfig::default(),
            )
            .unwrap();
            assert!(scan.probability.iter().all(|&p| p == 1.0));
        }
    }

    #[test]
    fn overlapping_points_are_reported_not_fatal() {
        let spec = SignalSpec::lab(vec![Tone::new(24.0 * KHZ, 0.3 * MHZ, 0.0).unwrap()], vec![]);
        let grid = [0.3 * MHZ, 5.0 * MHZ];
        let scan = run_frequency_scan(
            Scheme::GdParallel,
            &spec,
            &grid,
            &SequenceParams::reference(Scheme::GdParallel),
            &EngineConfig::default(),
        )
        .unwrap();
        assert_eq!(scan.len(), 1);
        assert_eq!(scan.failures.len(), 1);
        assert_eq!(scan.failures[0].omega_scan, 5.0 * MHZ);
    }

    fn single_tone_specs(ws: f64) -> [(Scheme, SignalSpec); 2] {
        let lab = SignalSpec::lab(vec![Tone::new(24.0 * KHZ, ws, 0.0).unwrap()], vec![]);
        let rot = SignalSpec::rotating(1.0, vec![], vec![Tone::new(15.0 * KHZ, ws, 0.0).unwrap()])
            .unwrap();
        [(Scheme::GdParallel, lab), (Scheme::GdPerp, rot)]
    }

    #[test]
    fn single_tone_minimum_sits_on_resonance() {
        // 5 kHz steps: coarse next to the sensing-time shift below
        let ws = 0.3 * MHZ;
        let grid = linear_grid(0.24 * MHZ, 0.36 * MHZ, 25);
        for (scheme, spec) in single_tone_specs(ws) {
            let mut params = SequenceParams::reference(scheme);
            params.t_pi = 1e-12;
            let scan = run_frequency_scan(scheme, &spec, &grid, &params, &EngineConfig::default())
                .unwrap();
            let i = scan.argmin().unwrap();
            assert!((scan.omega_scan[i] - ws).abs() < 1e-6 * ws, "{scheme}");
        }
    }

    /// The sensing time `T = N_s 2π/ω_scan` shrinks along the scan, so the
    /// phase maximum sits below `ω_s`. Expanding `sin(δT)/δ` to second order
    /// gives a shift of `3/(ω_s T²)`.
    #[test]
    fn phase_maximum_shift_scales_with_sensing_time() {
        let ws = 0.3 * MHZ;
        let grid = linear_grid(ws - 4.0 * KHZ, ws + 1.0 * KHZ, 2001);
        for (scheme, spec) in single_tone_specs(ws) {
            for blocks in [4, 8, 16] {
                let mut params = SequenceParams::reference(scheme);
                params.t_pi = 1e-12;
                params.blocks = blocks;
                let scan = run_frequency_scan(scheme, &spec, &grid, &params, &EngineConfig::default())
                    .unwrap();
                let phase = scan.phase.as_ref().unwrap();
                let i = (0..phase.len())
                    .max_by(|&a, &b| phase[a].abs().total_cmp(&phase[b].abs()))
                    .unwrap();
                let t = blocks as f64 * TAU / ws;
                let predicted = 3.0 / (ws * t * t);
                let shift = ws - scan.omega_scan[i];
                let ratio = shift / predicted;
                // the lab-frame staircase adds a counter-rotating correction
                let band = if scheme.is_perpendicular() { 0.9..1.1 } else { 0.9..1.6 };
                assert!(band.contains(&ratio), "{scheme} N_s={blocks}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn heterodyne_matches_direct_detuning() {
        let omega0 = TAU * 1.47e9;
        let lab = SignalSpec::lab(
            vec![],
            vec![Tone::new(30.0 * KHZ, omega0 + 0.3 * MHZ, 0.0).unwrap()],
        );
        let direct = SignalSpec::rotating(
            omega0,
            vec![],
            vec![Tone::new(15.0 * KHZ, 0.3 * MHZ, 0.0).unwrap()],
        )
        .unwrap();
        let grid = linear_grid(0.24 * MHZ, 0.36 * MHZ, 25);
        for scheme in [Scheme::Cpmg, Scheme::GdPerp] {
            let params = SequenceParams::reference(scheme);
            let cfg = EngineConfig::default();
            let (het, _) = run_heterodyne_scan(
                scheme,
                &lab,
                omega0,
                &grid,
                &params,
                &cfg,
                HeterodyneLimits::default(),
                Strictness::Warn,
            )
            .unwrap();
            let dir = run_frequency_scan(scheme, &direct, &grid, &params, &cfg).unwrap();
            for (a, b) in het.probability.iter().zip(&dir.probability) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shot_noise_is_seeded() {
        let spec = SignalSpec::lab(vec![Tone::new(24.0 * KHZ, 0.3 * MHZ, 0.0).unwrap()], vec![]);
        let grid = linear_grid(0.28 * MHZ, 0.32 * MHZ, 9);
        let scan = run_frequency_scan(
            Scheme::GdParallel,
            &spec,
            &grid,
            &SequenceParams::reference(Scheme::GdParallel),
            &EngineConfig::default(),
        )
        .unwrap();
        let a = apply_shot_noise(&scan, 500, 3).unwrap();
        let b = apply_shot_noise(&scan, 500, 3).unwrap();
        assert_eq!(a, b);
        for (n, p) in a.probability.iter().zip(&scan.probability) {
            let sigma = (p * (1.0 - p) / 500.0).sqrt().max(1e-3);
            assert!((n - p).abs() <= 5.0 * sigma);
        }
    }
}
