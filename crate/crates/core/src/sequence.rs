//! Timed π-pulse programs: XY, CPMG and the two geodesic schemes.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::signal::wrap_phase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Xy,
    Cpmg,
    GdParallel,
    GdPerp,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Xy, Scheme::Cpmg, Scheme::GdParallel, Scheme::GdPerp];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Xy => "xy",
            Scheme::Cpmg => "cpmg",
            Scheme::GdParallel => "gd-parallel",
            Scheme::GdPerp => "gd-perp",
        }
    }

    /// Schemes that sense the perpendicular field through the heterodyne
    /// (rotating-frame) channel.
    pub fn is_perpendicular(&self) -> bool {
        matches!(self, Scheme::Cpmg | Scheme::GdPerp)
    }

    pub fn is_geodesic(&self) -> bool {
        matches!(self, Scheme::GdParallel | Scheme::GdPerp)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Plane containing the rotation axis of a pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    /// Axis `(sin φ, 0, −cos φ)`.
    XZ,
    /// Axis `(cos φ, −sin φ, 0)`.
    XY,
}

impl Plane {
    pub fn axis(&self, phase: f64) -> [f64; 3] {
        let (s, c) = phase.sin_cos();
        match self {
            Plane::XZ => [s, 0.0, -c],
            Plane::XY => [c, -s, 0.0],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Plane::XZ => "XZ",
            Plane::XY => "XY",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Pulse {
    pub center: f64,
    pub duration: f64,
    /// Rabi rate Ω in rad/s.
    pub rabi: f64,
    pub phase: f64,
    pub plane: Plane,
}

impl Pulse {
    fn pi(center: f64, duration: f64, phase: f64, plane: Plane) -> Self {
        Pulse {
            center,
            duration,
            rabi: PI / duration,
            phase: wrap_phase(phase),
            plane,
        }
    }

    pub fn start(&self) -> f64 {
        self.center - 0.5 * self.duration
    }

    pub fn end(&self) -> f64 {
        self.center + 0.5 * self.duration
    }

    pub fn axis(&self) -> [f64; 3] {
        self.plane.axis(self.phase)
    }
}

/// How the CPMG free interval is derived from the scan frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CpmgTiming {
    /// `ω_scan = π/(τ + 3t_π/4)`.
    #[default]
    AsPrinted,
    /// `ω_scan = π/(τ + t_π)`, matching the uniform centre spacing.
    Naive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PulseSequence {
    scheme: Scheme,
    pulses: Vec<Pulse>,
    block_length: f64,
    pulses_per_block: usize,
    blocks: usize,
    scan_frequency: f64,
    total_duration: f64,
    cpmg_timing: CpmgTiming,
}

impl PulseSequence {
    /// Assemble a sequence without checking it; see [`validate`].
    pub fn from_parts(
        scheme: Scheme,
        pulses: Vec<Pulse>,
        block_length: f64,
        pulses_per_block: usize,
        blocks: usize,
        scan_frequency: f64,
    ) -> Self {
        PulseSequence {
            scheme,
            pulses,
            block_length,
            pulses_per_block,
            blocks,
            scan_frequency,
            total_duration: blocks as f64 * block_length,
            cpmg_timing: CpmgTiming::AsPrinted,
        }
    }

    pub fn with_cpmg_timing(mut self, timing: CpmgTiming) -> Self {
        self.cpmg_timing = timing;
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    /// `T_scan` for the geodesic schemes, the repeated block for XY/CPMG.
    pub fn block_length(&self) -> f64 {
        self.block_length
    }

    pub fn pulses_per_block(&self) -> usize {
        self.pulses_per_block
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn scan_frequency(&self) -> f64 {
        self.scan_frequency
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    pub fn cpmg_timing(&self) -> CpmgTiming {
        self.cpmg_timing
    }

    /// Pulse duration shared by every pulse of a builder-made sequence.
    pub fn pulse_width(&self) -> f64 {
        self.pulses.first().map_or(0.0, |p| p.duration)
    }

    /// Free-evolution interval between adjacent pulses.
    pub fn free_interval(&self) -> f64 {
        let t_pi = self.pulse_width();
        match self.scheme {
            Scheme::GdParallel | Scheme::GdPerp => {
                self.block_length / self.pulses_per_block as f64 - t_pi
            }
            Scheme::Xy => PI / self.scan_frequency - t_pi,
            Scheme::Cpmg => cpmg_interval(self.scan_frequency, t_pi, self.cpmg_timing),
        }
    }

    /// Number of pulses centred at or before `t`.
    pub fn pulses_before(&self, t: f64) -> usize {
        self.pulses.partition_point(|p| p.center <= t)
    }
}

fn check_common(omega_scan: f64, blocks: usize, t_pi: f64) -> Result<()> {
    if !omega_scan.is_finite() || omega_scan <= 0.0 {
        return Err(usage(format!("scan frequency must be > 0, got {omega_scan}")));
    }
    if blocks == 0 {
        return Err(usage("block repetitions N_s must be >= 1"));
    }
    if !t_pi.is_finite() || t_pi <= 0.0 {
        return Err(usage(format!("pulse width must be > 0, got {t_pi}")));
    }
    Ok(())
}

/// Geodesic sequence: `N_s` repetitions of `N` π pulses per scan period.
///
/// The number of pulses per block must be even so that each block composes
/// to the identity (up to a global phase) and the readout relations hold.
pub fn build_gd(
    plane: Plane,
    omega_scan: f64,
    pulses_per_block: usize,
    blocks: usize,
    t_pi: f64,
) -> Result<PulseSequence> {
    check_common(omega_scan, blocks, t_pi)?;
    if pulses_per_block < 2 {
        return Err(usage("geodesic blocks need N >= 2 pulses"));
    }
    if !pulses_per_block.is_multiple_of(2) {
        return Err(usage(format!(
            "geodesic blocks need an even number of pulses, got N = {pulses_per_block}"
        )));
    }
    let t_scan = TAU / omega_scan;
    let n = pulses_per_block as f64;
    let interval = t_scan / n - t_pi;
    if interval <= 0.0 {
        return Err(Error::Overlap { interval });
    }
    let scheme = match plane {
        Plane::XZ => Scheme::GdParallel,
        Plane::XY => Scheme::GdPerp,
    };
    let mut pulses = Vec::with_capacity(pulses_per_block * blocks);
    for b in 0..blocks {
        let offset = b as f64 * t_scan;
        for j in 1..=pulses_per_block {
            let odd = (2 * j - 1) as f64;
            let center = t_scan * odd / (2.0 * n);
            pulses.push(Pulse::pi(offset + center, t_pi, PI * odd / n, plane));
        }
    }
    Ok(PulseSequence::from_parts(
        scheme,
        pulses,
        t_scan,
        pulses_per_block,
        blocks,
        omega_scan,
    ))
}

/// XY block `τ/2 − π_x − τ − π_y − τ − π_y − τ − π_x − τ/2`, with
/// `ω_scan = π/(τ + t_π)`.
pub fn build_xy(omega_scan: f64, blocks: usize, t_pi: f64) -> Result<PulseSequence> {
    check_common(omega_scan, blocks, t_pi)?;
    let period = PI / omega_scan;
    let interval = period - t_pi;
    if interval <= 0.0 {
        return Err(Error::Overlap { interval });
    }
    let block = 4.0 * period;
    let half = 0.5 * period;
    let phases = [0.0, -FRAC_PI_2, -FRAC_PI_2, 0.0];
    let mut pulses = Vec::with_capacity(4 * blocks);
    for b in 0..blocks {
        let offset = b as f64 * block;
        for (m, &phase) in phases.iter().enumerate() {
            let center = (2 * m + 1) as f64 * half;
            pulses.push(Pulse::pi(offset + center, t_pi, phase, Plane::XY));
        }
    }
    Ok(PulseSequence::from_parts(Scheme::Xy, pulses, block, 4, blocks, omega_scan))
}

fn cpmg_interval(omega_scan: f64, t_pi: f64, timing: CpmgTiming) -> f64 {
    match timing {
        CpmgTiming::AsPrinted => PI / omega_scan - 0.75 * t_pi,
        CpmgTiming::Naive => PI / omega_scan - t_pi,
    }
}

/// CPMG block `τ − π_x − τ − π_x`.
pub fn build_cpmg(
    omega_scan: f64,
    blocks: usize,
    t_pi: f64,
    timing: CpmgTiming,
) -> Result<PulseSequence> {
    check_common(omega_scan, blocks, t_pi)?;
    let tau = cpmg_interval(omega_scan, t_pi, timing);
    if tau <= 0.0 {
        return Err(Error::Overlap { interval: tau });
    }
    let block = 2.0 * tau + 2.0 * t_pi;
    let mut pulses = Vec::with_capacity(2 * blocks);
    for b in 0..blocks {
        let offset = b as f64 * block;
        pulses.push(Pulse::pi(offset + tau + 0.5 * t_pi, t_pi, 0.0, Plane::XY));
        pulses.push(Pulse::pi(offset + 2.0 * tau + 1.5 * t_pi, t_pi, 0.0, Plane::XY));
    }
    Ok(
        PulseSequence::from_parts(Scheme::Cpmg, pulses, block, 2, blocks, omega_scan)
            .with_cpmg_timing(timing),
    )
}

/// Builder-independent parameters of a sequence, shared by scans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceParams {
    /// Pulses per geodesic block `N`; ignored by XY and CPMG.
    pub pulses_per_block: usize,
    /// Block repetitions `N_s`.
    pub blocks: usize,
    pub t_pi: f64,
    #[serde(default)]
    pub cpmg_timing: CpmgTiming,
}

impl SequenceParams {
    /// Configuration used in the experiments: 50 ns pulses, `N = 10`,
    /// `N_s = 8` for the MHz schemes and `N_s = 4` for the heterodyne ones.
    pub fn reference(scheme: Scheme) -> Self {
        let blocks = if scheme.is_perpendicular() { 4 } else { 8 };
        SequenceParams {
            pulses_per_block: 10,
            blocks,
            t_pi: 50e-9,
            cpmg_timing: CpmgTiming::AsPrinted,
        }
    }

    pub fn build(&self, scheme: Scheme, omega_scan: f64) -> Result<PulseSequence> {
        match scheme {
            Scheme::Xy => build_xy(omega_scan, self.blocks, self.t_pi),
            Scheme::Cpmg => build_cpmg(omega_scan, self.blocks, self.t_pi, self.cpmg_timing),
            Scheme::GdParallel => {
                build_gd(Plane::XZ, omega_scan, self.pulses_per_block, self.blocks, self.t_pi)
            }
            Scheme::GdPerp => {
                build_gd(Plane::XY, omega_scan, self.pulses_per_block, self.blocks, self.t_pi)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Overlap { index: usize, gap: f64 },
    NegativeStart { index: usize, start: f64 },
    PiArea { index: usize, area: f64 },
    Ordering { index: usize },
    PulseCount { expected: usize, found: usize },
    Duration { expected: f64, found: f64 },
    Timing { index: usize, expected: f64, found: f64 },
    Phase { index: usize, expected: f64, found: f64 },
    Plane { index: usize, expected: Plane },
    OutOfWindow { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap { index, gap } => {
                write!(f, "pulse {index} overlaps its successor (gap {gap:e} s)")
            }
            Violation::NegativeStart { index, start } => {
                write!(f, "pulse {index} starts before t = 0 ({start:e} s)")
            }
            Violation::PiArea { index, area } => {
                write!(f, "pulse {index} has area {:.9}π, not π", area / PI)
            }
            Violation::Ordering { index } => write!(f, "pulse {index} is out of time order"),
            Violation::PulseCount { expected, found } => {
                write!(f, "expected {expected} pulses, found {found}")
            }
            Violation::Duration { expected, found } => {
                write!(f, "total duration {found:e} s, expected {expected:e} s")
            }
            Violation::Timing { index, expected, found } => {
                write!(f, "pulse {index} centred at {found:e} s, expected {expected:e} s")
            }
            Violation::Phase { index, expected, found } => {
                write!(f, "pulse {index} phase {found} rad, expected {expected} rad")
            }
            Violation::Plane { index, expected } => {
                write!(f, "pulse {index} should rotate in the {} plane", expected.name())
            }
            Violation::OutOfWindow { index } => {
                write!(f, "pulse {index} extends past the end of the sequence")
            }
        }
    }
}

const AREA_TOL: f64 = 1e-9;
const TIMING_TOL: f64 = 1e-12;
const PHASE_TOL: f64 = 1e-10;

fn phase_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(TAU - d)
}

/// Checks non-overlap, π area, ordering and the scheme's timing and phase
/// formulas. Returns every violation found.
pub fn validate(seq: &PulseSequence) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let pulses = seq.pulses();

    for (i, p) in pulses.iter().enumerate() {
        let area = p.rabi * p.duration;
        if !((area - PI).abs() <= AREA_TOL * PI) {
            out.push(Violation::PiArea { index: i, area });
        }
        if p.start() < 0.0 {
            out.push(Violation::NegativeStart { index: i, start: p.start() });
        }
        if p.end() > seq.total_duration() * (1.0 + TIMING_TOL) {
            out.push(Violation::OutOfWindow { index: i });
        }
    }
    for (i, w) in pulses.windows(2).enumerate() {
        if w[1].center < w[0].center {
            out.push(Violation::Ordering { index: i + 1 });
        }
        let gap = w[1].start() - w[0].end();
        if gap < 0.0 {
            out.push(Violation::Overlap { index: i, gap });
        }
    }

    let expected_total = seq.blocks() as f64 * seq.block_length();
    if (seq.total_duration() - expected_total).abs() > TIMING_TOL * expected_total {
        out.push(Violation::Duration {
            expected: expected_total,
            found: seq.total_duration(),
        });
    }

    let expected_count = seq.blocks() * seq.pulses_per_block();
    if pulses.len() != expected_count {
        out.push(Violation::PulseCount {
            expected: expected_count,
            found: pulses.len(),
        });
    } else {
        check_schedule(seq, &mut out);
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn check_schedule(seq: &PulseSequence, out: &mut Vec<Violation>) {
    let n = seq.pulses_per_block();
    let block = seq.block_length();
    let t_pi = seq.pulse_width();
    for (i, p) in seq.pulses().iter().enumerate() {
        let b = (i / n) as f64;
        let j = i % n;
        let (local_center, phase, plane) = match seq.scheme() {
            Scheme::GdParallel | Scheme::GdPerp => {
                let odd = (2 * j + 1) as f64;
                let plane = if seq.scheme() == Scheme::GdParallel {
                    Plane::XZ
                } else {
                    Plane::XY
                };
                (block * odd / (2.0 * n as f64), PI * odd / n as f64, plane)
            }
            Scheme::Xy => {
                let half = 0.5 * PI / seq.scan_frequency();
                let phase = if j == 1 || j == 2 { -FRAC_PI_2 } else { 0.0 };
                ((2 * j + 1) as f64 * half, phase, Plane::XY)
            }
            Scheme::Cpmg => {
                let tau = cpmg_interval(seq.scan_frequency(), t_pi, seq.cpmg_timing());
                let c = if j == 0 { tau + 0.5 * t_pi } else { 2.0 * tau + 1.5 * t_pi };
                (c, 0.0, Plane::XY)
            }
        };
        let expected = b * block + local_center;
        if (p.center - expected).abs() > TIMING_TOL * block.max(expected) {
            out.push(Violation::Timing {
                index: i,
                expected,
                found: p.center,
            });
        }
        if phase_distance(p.phase, phase) > PHASE_TOL {
            out.push(Violation::Phase {
                index: i,
                expected: wrap_phase(phase),
                found: p.phase,
            });
        }
        if p.plane != plane {
            out.push(Violation::Plane { index: i, expected: plane });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MHZ: f64 = 2.0 * PI * 1e6;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs())
    }

    #[test]
    fn gd_reference_timing() {
        let seq = build_gd(Plane::XZ, 0.3 * MHZ, 10, 8, 50e-9).unwrap();
        assert_eq!(seq.scheme(), Scheme::GdParallel);
        assert_eq!(seq.pulses().len(), 80);
        assert!(close(seq.block_length(), 3.333_333_333_333e-6, 1e-9));
        assert!(close(seq.free_interval(), 0.283_333_333_333e-6, 1e-9));
        let first = seq.pulses()[0];
        assert!(close(first.center, 0.166_666_666_667e-6, 1e-9));
        assert!(close(first.phase, PI / 10.0, 1e-12));
        assert!(close(first.rabi, 2.0 * PI * 10e6, 1e-12));
        assert_eq!(first.plane, Plane::XZ);
        assert!(validate(&seq).is_ok());
    }

    #[test]
    fn gd_two_pulse_block() {
        let seq = build_gd(Plane::XY, 0.3 * MHZ, 2, 1, 10e-9).unwrap();
        let t = seq.block_length();
        let p = seq.pulses();
        assert!(close(p[0].center, t / 4.0, 1e-14));
        assert!(close(p[1].center, 3.0 * t / 4.0, 1e-14));
        assert!(close(p[0].phase, FRAC_PI_2, 1e-14));
        assert!(close(p[1].phase, 3.0 * FRAC_PI_2, 1e-14));
    }

    #[test]
    fn gd_overlap_is_rejected() {
        let err = build_gd(Plane::XZ, 10.0 * MHZ, 10, 8, 50e-9).unwrap_err();
        assert!(matches!(err, Error::Overlap { .. }));
    }

    #[test]
    fn gd_odd_block_is_rejected() {
        assert!(build_gd(Plane::XZ, 0.3 * MHZ, 9, 1, 50e-9).is_err());
        assert!(build_gd(Plane::XZ, 0.3 * MHZ, 1, 1, 50e-9).is_err());
    }

    #[test]
    fn xy_reference_timing() {
        let seq = build_xy(0.3 * MHZ, 8, 50e-9).unwrap();
        assert!(close(seq.free_interval(), 1.616_666_666_667e-6, 1e-9));
        assert_eq!(seq.pulses().len(), 32);
        // 8 blocks of 4 (τ + t_π)
        assert!(close(seq.total_duration(), 53.333_333_333_333e-6, 1e-9));
        let phases: Vec<f64> = seq.pulses()[..4].iter().map(|p| p.phase).collect();
        assert_eq!(phases, vec![0.0, 1.5 * PI, 1.5 * PI, 0.0]);
        assert!(validate(&seq).is_ok());
    }

    #[test]
    fn xy_instantaneous_limit() {
        let omega = 0.3 * MHZ;
        let t_pi = 1e-15;
        let seq = build_xy(omega, 1, t_pi).unwrap();
        let tau = seq.free_interval();
        for (m, p) in seq.pulses().iter().enumerate() {
            let expected = (2 * m + 1) as f64 * tau / 2.0;
            assert!(close(p.center, expected, 1e-8));
        }
    }

    #[test]
    fn cpmg_reference_timing() {
        let seq = build_cpmg(0.3 * MHZ, 4, 50e-9, CpmgTiming::AsPrinted).unwrap();
        assert!(close(seq.free_interval(), 1.629_166_666_667e-6, 1e-9));
        assert_eq!(seq.pulses().len(), 8);
        assert!(validate(&seq).is_ok());
        let naive = build_cpmg(0.3 * MHZ, 4, 50e-9, CpmgTiming::Naive).unwrap();
        assert!(close(naive.free_interval(), 1.616_666_666_667e-6, 1e-9));
        assert!(validate(&naive).is_ok());
    }

    #[test]
    fn cpmg_instantaneous_limit() {
        let omega = 0.3 * MHZ;
        let seq = build_cpmg(omega, 3, 1e-15, CpmgTiming::AsPrinted).unwrap();
        let tau = seq.free_interval();
        assert!(close(tau, PI / omega, 1e-8));
        for w in seq.pulses().windows(2) {
            assert!(close(w[1].center - w[0].center, tau, 1e-8));
        }
    }

    #[test]
    fn xy_overlap_is_rejected() {
        assert!(matches!(
            build_xy(20.0 * MHZ, 1, 50e-9),
            Err(Error::Overlap { .. })
        ));
        assert!(matches!(
            build_cpmg(20.0 * MHZ, 1, 50e-9, CpmgTiming::AsPrinted),
            Err(Error::Overlap { .. })
        ));
    }

    #[test]
    fn validate_flags_coincident_pulses() {
        let p = Pulse::pi(1e-6, 50e-9, 0.0, Plane::XY);
        let seq = PulseSequence::from_parts(Scheme::Cpmg, vec![p, p], 4e-6, 2, 1, 0.3 * MHZ);
        let v = validate(&seq).unwrap_err();
        assert!(v.iter().any(|v| matches!(v, Violation::Overlap { .. })));
    }

    #[test]
    fn validate_flags_short_area() {
        let mut seq = build_cpmg(0.3 * MHZ, 1, 50e-9, CpmgTiming::AsPrinted).unwrap();
        seq.pulses[0].rabi = 0.9 * PI / 50e-9;
        let v = validate(&seq).unwrap_err();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::PiArea { index: 0, .. }));
    }

    #[test]
    fn validate_reports_all_problems() {
        let mut seq = build_gd(Plane::XZ, 0.3 * MHZ, 4, 2, 50e-9).unwrap();
        seq.pulses[1].phase = 0.0;
        seq.pulses[2].rabi *= 2.0;
        seq.pulses[5].center += 1e-8;
        let v = validate(&seq).unwrap_err();
        assert!(v.iter().any(|v| matches!(v, Violation::Phase { index: 1, .. })));
        assert!(v.iter().any(|v| matches!(v, Violation::PiArea { index: 2, .. })));
        assert!(v.iter().any(|v| matches!(v, Violation::Timing { index: 5, .. })));
    }

    fn any_scheme() -> impl Strategy<Value = Scheme> {
        prop::sample::select(Scheme::ALL.to_vec())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn builders_always_validate(
            scheme in any_scheme(),
            f_mhz in 0.05..3.0f64,
            half_n in 1usize..12,
            blocks in 1usize..10,
            width_frac in 1e-4..0.9f64,
            naive in any::<bool>(),
        ) {
            let omega = f_mhz * MHZ;
            let n = 2 * half_n;
            // pulse width as a fraction of the tightest spacing the scheme allows
            let spacing = match scheme {
                Scheme::GdParallel | Scheme::GdPerp => TAU / omega / n as f64,
                _ => PI / omega,
            };
            let params = SequenceParams {
                pulses_per_block: n,
                blocks,
                t_pi: width_frac * spacing,
                cpmg_timing: if naive { CpmgTiming::Naive } else { CpmgTiming::AsPrinted },
            };
            let seq = params.build(scheme, omega).unwrap();
            prop_assert!(validate(&seq).is_ok(), "{:?}", validate(&seq));
            // determinism
            prop_assert_eq!(&seq, &params.build(scheme, omega).unwrap());
        }

        #[test]
        fn gd_phase_steps_by_two_pi_over_n(half_n in 1usize..20, f_mhz in 0.05..1.0f64) {
            let n = 2 * half_n;
            let seq = build_gd(Plane::XZ, f_mhz * MHZ, n, 2, 1e-9).unwrap();
            for w in seq.pulses().windows(2) {
                let step = wrap_phase(w[1].phase - w[0].phase);
                prop_assert!(phase_distance(step, TAU / n as f64) < 1e-12);
            }
        }

        #[test]
        fn xy_block_is_symmetric(f_mhz in 0.05..3.0f64, width_frac in 1e-4..0.9f64) {
            let omega = f_mhz * MHZ;
            let seq = build_xy(omega, 3, width_frac * PI / omega).unwrap();
            let block = seq.block_length();
            for b in 0..3 {
                let p = &seq.pulses()[4 * b..4 * b + 4];
                let offset = b as f64 * block;
                for m in 0..4 {
                    let sum = (p[m].center - offset) + (p[3 - m].center - offset);
                    prop_assert!((sum - block).abs() <= 1e-12 * block);
                }
            }
        }
    }
}
