//! TOML experiment configuration.
//!
//! Every physical quantity carries its unit in the key name. Angular
//! frequencies and amplitudes are written as plain numbers `x` meaning
//! `2π × x` in the named unit; the `2π` is applied exactly once, here.

use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::experiments::{linear_grid, SyncReadout, DEFAULT_READOUT_TIME};
use crate::filter::{AmplitudeBand, AmplitudeSchedule, PhaseSampling, ReconstructionConfig};
use crate::sequence::{validate, CpmgTiming, Scheme, SequenceParams};
use crate::signal::{SignalSpec, Strictness, Tone};

const KHZ: f64 = TAU * 1e3;
const MHZ: f64 = TAU * 1e6;
const GHZ: f64 = TAU * 1e9;

/// Qubit splitting assumed when `signal.omega0_ghz_times_2pi` is absent.
pub const DEFAULT_OMEGA0_GHZ: f64 = 1.47;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Scan,
    Robustness,
    Filter,
    Heterodyne,
    Syncread,
    DumpSequence,
    DumpModulation,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Scan => "scan",
            Kind::Robustness => "robustness",
            Kind::Filter => "filter",
            Kind::Heterodyne => "heterodyne",
            Kind::Syncread => "syncread",
            Kind::DumpSequence => "dump-sequence",
            Kind::DumpModulation => "dump-modulation",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    #[serde(default)]
    sequence: RawSequence,
    #[serde(default)]
    engine: RawEngine,
    #[serde(default)]
    signal: RawSignal,
    grid: Option<RawGrid>,
    robustness: Option<RawRobustness>,
    filter: Option<RawFilter>,
    syncread: Option<RawSyncread>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: Option<Kind>,
    scheme: Scheme,
    #[serde(default)]
    seed: u64,
    /// Binomial shots per scan point; absent means exact probabilities.
    shots: Option<u64>,
    /// Reference frequency for the reported bias. Defaults to the first tone
    /// seen by the scheme.
    target_mhz_times_2pi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSequence {
    pulses_per_block: Option<usize>,
    blocks: Option<usize>,
    t_pi_ns: Option<f64>,
    #[serde(default)]
    cpmg_naive_spacing: bool,
    omega_scan_mhz_times_2pi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEngine {
    #[serde(default)]
    kind: Engine,
    steps_per_pulse: Option<usize>,
    steps_per_gap_cycle: Option<usize>,
    t2star_us: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    omega0_ghz_times_2pi: Option<f64>,
    #[serde(default)]
    heterodyne_strict: bool,
    #[serde(default)]
    parallel: Vec<RawTone>,
    #[serde(default)]
    perpendicular: Vec<RawTone>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTone {
    amplitude_khz_times_2pi: f64,
    frequency_mhz_times_2pi: Option<f64>,
    /// Perpendicular tones only: offset from the qubit splitting.
    detuning_mhz_times_2pi: Option<f64>,
    #[serde(default)]
    phase_rad: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    start_mhz_times_2pi: f64,
    stop_mhz_times_2pi: f64,
    points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobustness {
    harmonics: Vec<u32>,
    max_amplitude_khz_times_2pi: f64,
    points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    #[serde(default = "default_ensemble")]
    ensemble: usize,
    #[serde(default = "default_phase_grid")]
    phase_grid: usize,
    #[serde(default)]
    sampling: PhaseSampling,
    #[serde(default = "default_points_per_band")]
    points_per_band: usize,
    #[serde(default)]
    band: Vec<RawBand>,
}

fn default_ensemble() -> usize {
    72
}

fn default_phase_grid() -> usize {
    6
}

fn default_points_per_band() -> usize {
    40
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBand {
    min_mhz_times_2pi: f64,
    max_mhz_times_2pi: f64,
    amplitude_khz_times_2pi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSyncread {
    interval_us: f64,
    duration_s: f64,
    #[serde(default = "default_gain")]
    photons_per_readout: f64,
    #[serde(default = "default_contrast")]
    contrast: f64,
    #[serde(default)]
    phase0_rad: f64,
    #[serde(default = "default_readout_us")]
    readout_us: f64,
    #[serde(default = "default_pad")]
    zero_padding: usize,
}

fn default_gain() -> f64 {
    0.09
}

fn default_contrast() -> f64 {
    0.3
}

fn default_readout_us() -> f64 {
    DEFAULT_READOUT_TIME * 1e6
}

fn default_pad() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_dir")]
    dir: PathBuf,
}

impl Default for RawOutput {
    fn default() -> Self {
        RawOutput { dir: default_dir() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessSettings {
    pub harmonics: Vec<u32>,
    /// Lab-frame noise amplitudes, rad/s.
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterSettings {
    pub reconstruction: ReconstructionConfig,
    pub schedule: AmplitudeSchedule,
    pub points_per_band: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyncSettings {
    pub readout: SyncReadout,
    pub zero_padding: usize,
}

/// A validated experiment with every quantity in rad/s and seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub scheme: Scheme,
    pub seed: u64,
    pub shots: Option<u64>,
    pub params: SequenceParams,
    /// Single operating point for robustness, filter, syncread and dumps.
    pub omega_scan: Option<f64>,
    pub grid: Option<Vec<f64>>,
    pub engine: EngineConfig,
    /// Lab-frame signal; perpendicular tones hold absolute frequencies.
    pub signal: SignalSpec,
    pub omega0: f64,
    pub strictness: Strictness,
    /// In the units the scan runs in: lab frequency for parallel schemes,
    /// detuning for perpendicular ones.
    pub target: Option<f64>,
    pub robustness: Option<RobustnessSettings>,
    pub filter: Option<FilterSettings>,
    pub syncread: Option<SyncSettings>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// The scan frequency used by single-point experiments: the configured
    /// value, else the grid centre.
    pub fn operating_point(&self) -> Option<f64> {
        self.omega_scan.or_else(|| {
            self.grid
                .as_ref()
                .map(|g| 0.5 * (g[0] + g[g.len() - 1]))
        })
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, None)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Parses and validates a configuration. `kind` overrides the file's
/// `experiment.kind`.
pub fn parse_config(text: &str, kind: Option<Kind>) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    Validator::default().finish(raw, kind)
}

#[derive(Default)]
struct Validator {
    problems: Vec<String>,
}

impl Validator {
    fn fail(&mut self, msg: impl Into<String>) {
        self.problems.push(msg.into());
    }

    fn positive(&mut self, key: &str, v: f64) -> bool {
        let ok = v.is_finite() && v > 0.0;
        if !ok {
            self.fail(format!("{key} must be a finite value > 0, got {v}"));
        }
        ok
    }

    fn non_negative(&mut self, key: &str, v: f64) -> bool {
        let ok = v.is_finite() && v >= 0.0;
        if !ok {
            self.fail(format!("{key} must be a finite value >= 0, got {v}"));
        }
        ok
    }

    fn finish(mut self, raw: RawConfig, kind_override: Option<Kind>) -> Result<ExperimentConfig> {
        let scheme = raw.experiment.scheme;
        let kind = match kind_override.or(raw.experiment.kind) {
            Some(k) => k,
            None => {
                self.fail("experiment.kind is required when the subcommand is `run`");
                Kind::Scan
            }
        };

        let params = self.sequence(&raw.sequence, scheme);
        let engine = self.engine(&raw.engine);

        let omega_scan = raw.sequence.omega_scan_mhz_times_2pi.and_then(|v| {
            self.positive("sequence.omega_scan_mhz_times_2pi", v).then_some(v * MHZ)
        });
        let grid = raw.grid.as_ref().and_then(|g| self.grid(g));

        let omega0 = match raw.signal.omega0_ghz_times_2pi {
            Some(v) if self.positive("signal.omega0_ghz_times_2pi", v) => v * GHZ,
            Some(_) => 1.0,
            None => DEFAULT_OMEGA0_GHZ * GHZ,
        };
        let signal = self.signal(&raw.signal, omega0);
        let strictness = if raw.signal.heterodyne_strict {
            Strictness::Strict
        } else {
            Strictness::Warn
        };

        let target = match raw.experiment.target_mhz_times_2pi {
            Some(v) => self
                .positive("experiment.target_mhz_times_2pi", v)
                .then_some(v * MHZ),
            None if scheme.is_perpendicular() => {
                signal.perpendicular().first().map(|t| t.frequency() - omega0)
            }
            None => signal.parallel().first().map(|t| t.frequency()),
        };

        if let Some(0) = raw.experiment.shots {
            self.fail("experiment.shots must be >= 1 when given");
        }

        let needs_grid = matches!(kind, Kind::Scan | Kind::Heterodyne);
        let needs_point = matches!(kind, Kind::Robustness | Kind::Filter | Kind::Syncread);
        if needs_grid && grid.is_none() && raw.grid.is_none() {
            self.fail(format!("a {kind} experiment needs a [grid] section"));
        }
        if needs_point && omega_scan.is_none() && raw.sequence.omega_scan_mhz_times_2pi.is_none() {
            self.fail(format!("a {kind} experiment needs sequence.omega_scan_mhz_times_2pi"));
        }
        if matches!(kind, Kind::DumpSequence | Kind::DumpModulation)
            && raw.sequence.omega_scan_mhz_times_2pi.is_none()
            && raw.grid.is_none()
        {
            self.fail(format!(
                "a {kind} needs sequence.omega_scan_mhz_times_2pi or a [grid] section"
            ));
        }
        if kind == Kind::Heterodyne && !scheme.is_perpendicular() {
            self.fail(format!("heterodyne experiments need cpmg or gd-perp, got {scheme}"));
        }
        if matches!(kind, Kind::Scan | Kind::Heterodyne | Kind::Syncread) {
            let tones = if scheme.is_perpendicular() {
                signal.perpendicular().len()
            } else {
                signal.parallel().len()
            };
            if tones == 0 {
                let which = if scheme.is_perpendicular() { "perpendicular" } else { "parallel" };
                self.fail(format!("{scheme} senses {which} tones but none are configured"));
            }
        }

        let robustness = match (&raw.robustness, kind) {
            (Some(r), _) => self.robustness(r),
            (None, Kind::Robustness) => {
                self.fail("a robustness experiment needs a [robustness] section");
                None
            }
            _ => None,
        };
        let filter = match (&raw.filter, kind) {
            (Some(f), _) => self.filter(f, scheme, engine, raw.experiment.seed),
            (None, Kind::Filter) => Some(FilterSettings {
                reconstruction: ReconstructionConfig {
                    engine,
                    seed: raw.experiment.seed,
                    ..Default::default()
                },
                schedule: AmplitudeSchedule::reference(scheme),
                points_per_band: default_points_per_band(),
            }),
            _ => None,
        };
        let syncread = match (&raw.syncread, kind) {
            (Some(s), _) => self.syncread(s, omega_scan.unwrap_or(1.0), raw.experiment.seed),
            (None, Kind::Syncread) => {
                self.fail("a syncread experiment needs a [syncread] section");
                None
            }
            _ => None,
        };

        // physics checks only make sense once the units are sound
        let sound = self.problems.is_empty();
        if let Some(w) = omega_scan.filter(|_| sound && (needs_point || matches!(kind, Kind::DumpSequence | Kind::DumpModulation))) {
            self.buildable(&params, scheme, w);
        }
        if let (Some(g), true) = (&grid, sound && needs_grid) {
            if g.iter().all(|&w| params.build(scheme, w).is_err()) {
                self.fail("no grid point admits a valid pulse sequence (pulses overlap everywhere)");
            }
        }
        if let (Some(s), Some(w), true) = (&syncread, omega_scan, sound) {
            if let Ok(seq) = params.build(scheme, w) {
                if let Err(e) = s.readout.validate(seq.total_duration()) {
                    self.fail(format!("syncread: {e}"));
                }
            }
        }

        if !self.problems.is_empty() {
            let list: Vec<String> = self.problems.iter().map(|p| format!("  - {p}")).collect();
            return Err(Error::Config(format!(
                "invalid configuration ({} problem{}):\n{}",
                self.problems.len(),
                if self.problems.len() == 1 { "" } else { "s" },
                list.join("\n")
            )));
        }

        Ok(ExperimentConfig {
            kind,
            scheme,
            seed: raw.experiment.seed,
            shots: raw.experiment.shots,
            params,
            omega_scan,
            grid,
            engine,
            signal,
            omega0,
            strictness,
            target,
            robustness,
            filter,
            syncread,
            out_dir: raw.output.dir,
        })
    }

    fn sequence(&mut self, raw: &RawSequence, scheme: Scheme) -> SequenceParams {
        let mut p = SequenceParams::reference(scheme);
        if let Some(n) = raw.pulses_per_block {
            if scheme.is_geodesic() && (n < 2 || n % 2 != 0) {
                self.fail(format!("sequence.pulses_per_block must be even and >= 2, got {n}"));
            }
            p.pulses_per_block = n;
        }
        if let Some(n) = raw.blocks {
            if n == 0 {
                self.fail("sequence.blocks must be >= 1");
            }
            p.blocks = n;
        }
        if let Some(t) = raw.t_pi_ns {
            if self.positive("sequence.t_pi_ns", t) {
                p.t_pi = t * 1e-9;
            }
        }
        if raw.cpmg_naive_spacing {
            p.cpmg_timing = CpmgTiming::Naive;
        }
        p
    }

    fn engine(&mut self, raw: &RawEngine) -> EngineConfig {
        let mut e = EngineConfig {
            engine: raw.kind,
            ..EngineConfig::default()
        };
        if let Some(n) = raw.steps_per_pulse {
            e.steps_per_pulse = n;
        }
        if let Some(n) = raw.steps_per_gap_cycle {
            e.steps_per_gap_cycle = n;
        }
        if let Some(t) = raw.t2star_us {
            if self.positive("engine.t2star_us", t) {
                e.dephasing_t2star = Some(t * 1e-6);
            }
        }
        if let Err(err) = e.validate() {
            self.fail(format!("engine: {err}"));
        }
        e
    }

    fn grid(&mut self, g: &RawGrid) -> Option<Vec<f64>> {
        let a = self.positive("grid.start_mhz_times_2pi", g.start_mhz_times_2pi);
        let b = self.positive("grid.stop_mhz_times_2pi", g.stop_mhz_times_2pi);
        if g.points < 2 {
            self.fail(format!("grid.points must be >= 2, got {}", g.points));
            return None;
        }
        if a && b && g.stop_mhz_times_2pi <= g.start_mhz_times_2pi {
            self.fail("grid.stop_mhz_times_2pi must exceed grid.start_mhz_times_2pi");
            return None;
        }
        (a && b).then(|| {
            linear_grid(g.start_mhz_times_2pi * MHZ, g.stop_mhz_times_2pi * MHZ, g.points)
        })
    }

    fn tone(&mut self, key: &str, t: &RawTone, omega0: Option<f64>) -> Option<Tone> {
        let amp = self.non_negative(&format!("{key}.amplitude_khz_times_2pi"), t.amplitude_khz_times_2pi);
        if !t.phase_rad.is_finite() {
            self.fail(format!("{key}.phase_rad must be finite"));
            return None;
        }
        let freq = match (t.frequency_mhz_times_2pi, t.detuning_mhz_times_2pi, omega0) {
            (Some(f), None, _) => self
                .positive(&format!("{key}.frequency_mhz_times_2pi"), f)
                .then_some(f * MHZ),
            (None, Some(d), Some(w0)) => self
                .positive(&format!("{key}.detuning_mhz_times_2pi"), d)
                .then_some(w0 + d * MHZ),
            (None, Some(_), None) => {
                self.fail(format!("{key}.detuning_mhz_times_2pi is only valid for perpendicular tones"));
                None
            }
            (Some(_), Some(_), _) => {
                self.fail(format!("{key}: give frequency_mhz_times_2pi or detuning_mhz_times_2pi, not both"));
                None
            }
            (None, None, _) => {
                self.fail(format!("{key}: missing frequency_mhz_times_2pi"));
                None
            }
        };
        match (amp, freq) {
            (true, Some(f)) => match Tone::new(t.amplitude_khz_times_2pi * KHZ, f, t.phase_rad) {
                Ok(tone) => Some(tone),
                Err(e) => {
                    self.fail(format!("{key}: {e}"));
                    None
                }
            },
            _ => None,
        }
    }

    fn signal(&mut self, raw: &RawSignal, omega0: f64) -> SignalSpec {
        let parallel = raw
            .parallel
            .iter()
            .enumerate()
            .filter_map(|(i, t)| self.tone(&format!("signal.parallel[{i}]"), t, None))
            .collect();
        let perpendicular = raw
            .perpendicular
            .iter()
            .enumerate()
            .filter_map(|(i, t)| self.tone(&format!("signal.perpendicular[{i}]"), t, Some(omega0)))
            .collect();
        SignalSpec::lab(parallel, perpendicular)
    }

    fn robustness(&mut self, r: &RawRobustness) -> Option<RobustnessSettings> {
        if r.harmonics.is_empty() {
            self.fail("robustness.harmonics must list at least one order");
        }
        for &k in &r.harmonics {
            if k < 3 || k % 2 == 0 {
                self.fail(format!("robustness.harmonics: order must be odd and >= 3, got {k}"));
            }
        }
        if r.points < 1 {
            self.fail("robustness.points must be >= 1");
            return None;
        }
        if !self.non_negative("robustness.max_amplitude_khz_times_2pi", r.max_amplitude_khz_times_2pi) {
            return None;
        }
        let max = r.max_amplitude_khz_times_2pi * KHZ;
        let amplitudes = if r.points == 1 {
            vec![max]
        } else {
            linear_grid(0.0, max, r.points)
        };
        Some(RobustnessSettings {
            harmonics: r.harmonics.clone(),
            amplitudes,
        })
    }

    fn filter(
        &mut self,
        f: &RawFilter,
        scheme: Scheme,
        engine: EngineConfig,
        seed: u64,
    ) -> Option<FilterSettings> {
        if f.ensemble == 0 {
            self.fail("filter.ensemble must be >= 1");
        }
        if f.phase_grid == 0 {
            self.fail("filter.phase_grid must be >= 1");
        }
        if f.points_per_band == 0 {
            self.fail("filter.points_per_band must be >= 1");
        }
        let schedule = if f.band.is_empty() {
            AmplitudeSchedule::reference(scheme)
        } else {
            AmplitudeSchedule {
                bands: f
                    .band
                    .iter()
                    .map(|b| AmplitudeBand {
                        omega_min: b.min_mhz_times_2pi * MHZ,
                        omega_max: b.max_mhz_times_2pi * MHZ,
                        amplitude: b.amplitude_khz_times_2pi * KHZ,
                    })
                    .collect(),
            }
        };
        if let Err(e) = schedule.validate() {
            self.fail(format!("filter.band: {e}"));
        }
        Some(FilterSettings {
            reconstruction: ReconstructionConfig {
                ensemble: f.ensemble,
                phase_grid: f.phase_grid,
                sampling: f.sampling,
                engine,
                seed,
            },
            schedule,
            points_per_band: f.points_per_band,
        })
    }

    fn syncread(&mut self, s: &RawSyncread, omega_scan: f64, seed: u64) -> Option<SyncSettings> {
        let ok = [
            self.positive("syncread.interval_us", s.interval_us),
            self.positive("syncread.duration_s", s.duration_s),
            self.positive("syncread.photons_per_readout", s.photons_per_readout),
            self.non_negative("syncread.readout_us", s.readout_us),
        ];
        if !(0.0..=1.0).contains(&s.contrast) {
            self.fail(format!("syncread.contrast must lie in [0, 1], got {}", s.contrast));
        }
        if !s.phase0_rad.is_finite() {
            self.fail("syncread.phase0_rad must be finite");
        }
        if s.zero_padding == 0 {
            self.fail("syncread.zero_padding must be >= 1");
        }
        if ok.iter().any(|v| !v) {
            return None;
        }
        let interval = s.interval_us * 1e-6;
        let samples = (s.duration_s / interval).round() as usize;
        if samples < 16 {
            self.fail(format!("syncread: {samples} samples is too short for a spectrum (need 16)"));
        }
        Some(SyncSettings {
            readout: SyncReadout {
                omega_scan,
                interval,
                samples,
                gain: s.photons_per_readout,
                contrast: s.contrast,
                phase0: s.phase0_rad,
                seed,
                readout_time: s.readout_us * 1e-6,
            },
            zero_padding: s.zero_padding,
        })
    }

    fn buildable(&mut self, params: &SequenceParams, scheme: Scheme, omega: f64) {
        match params.build(scheme, omega) {
            Ok(seq) => {
                if let Err(v) = validate(&seq) {
                    for item in v {
                        self.fail(format!("sequence: {item}"));
                    }
                }
            }
            Err(e) => self.fail(format!("sequence at the operating point: {e}")),
        }
    }
}
