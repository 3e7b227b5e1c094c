//! Command-line runner: one experiment per invocation, configured by a TOML
//! file, writing CSV tables and a JSON summary.

pub mod config;
mod output;

use std::ffi::OsString;
use std::f64::consts::TAU;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::dynamics::toggling_modulation;
use crate::error::{Error, Result};
use crate::estimation::{
    find_extrema, fit_scan, peak_fwhm, predict_alias, spectrum, ExtremumKind,
};
use crate::experiments::{
    apply_shot_noise, run_frequency_scan, run_heterodyne_scan, run_robustness,
    run_synchronized_readout, ScanResult,
};
use crate::filter::{effective_fourier_component, reconstruct_filter};
use crate::signal::{to_rotating_frame, HeterodyneLimits, SignalSpec};

pub use config::{load_config, parse_config, ExperimentConfig, Kind};
pub use output::{
    parse_pulse_table, write_all, Cell, DipSummary, FilterSummary, PeakSummary,
    RobustnessSummary, Summary, SyncSummary, Table,
};

/// Minimum prominence for a scan minimum to count as a dip.
pub const DIP_PROMINENCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Scan,
    Robustness,
    Filter,
    Heterodyne,
    Syncread,
    DumpSequence,
    DumpModulation,
    /// Run whatever `experiment.kind` the config names.
    Run,
}

impl Subcommand {
    fn kind(self) -> Option<Kind> {
        match self {
            Subcommand::Scan => Some(Kind::Scan),
            Subcommand::Robustness => Some(Kind::Robustness),
            Subcommand::Filter => Some(Kind::Filter),
            Subcommand::Heterodyne => Some(Kind::Heterodyne),
            Subcommand::Syncread => Some(Kind::Syncread),
            Subcommand::DumpSequence => Some(Kind::DumpSequence),
            Subcommand::DumpModulation => Some(Kind::DumpModulation),
            Subcommand::Run => None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gdsense", version, about = "Geodesic-control frequency sensing simulator")]
pub struct Args {
    pub subcommand: Subcommand,
    pub config: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Caps the worker thread count.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Everything a run produces, before it touches the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: Summary,
    pub line: String,
}

/// Parses arguments, runs the experiment and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = args.threads {
        // only the first call in a process can size the global pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match execute(&args) {
        Ok((report, _)) => {
            println!("{}", report.line);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Loads, runs and writes. Returns the report and the files written.
pub fn execute(args: &Args) -> Result<(Report, Vec<PathBuf>)> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = parse_config(&text, args.subcommand.kind())
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    let report = run(&cfg)?;
    let files = write_all(&cfg.out_dir, &report.tables, &report.summary)?;
    Ok((report, files))
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.kind {
        Kind::Scan | Kind::Heterodyne => run_scan(cfg),
        Kind::Robustness => run_robustness_sweep(cfg),
        Kind::Filter => run_filter(cfg),
        Kind::Syncread => run_syncread(cfg),
        Kind::DumpSequence => dump_sequence(cfg),
        Kind::DumpModulation => dump_modulation(cfg),
    }
}

fn khz(omega: f64) -> f64 {
    omega / (TAU * 1e3)
}

/// The signal as seen by the scheme: parallel tones in the lab frame, or the
/// heterodyne rotating frame for perpendicular schemes.
fn sensed_signal(cfg: &ExperimentConfig) -> Result<(SignalSpec, Vec<String>)> {
    if cfg.scheme.is_perpendicular() {
        to_rotating_frame(&cfg.signal, cfg.omega0, HeterodyneLimits::default(), cfg.strictness)
    } else {
        Ok((SignalSpec::lab(cfg.signal.parallel().to_vec(), vec![]), Vec::new()))
    }
}

fn point(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.operating_point()
        .ok_or_else(|| Error::Config("no operating point configured".into()))
}

fn run_scan(cfg: &ExperimentConfig) -> Result<Report> {
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::Config("scan without a grid".into()))?;
    let (mut scan, warnings) = if cfg.scheme.is_perpendicular() {
        run_heterodyne_scan(
            cfg.scheme,
            &cfg.signal,
            cfg.omega0,
            grid,
            &cfg.params,
            &cfg.engine,
            HeterodyneLimits::default(),
            cfg.strictness,
        )?
    } else {
        let (spec, w) = sensed_signal(cfg)?;
        (run_frequency_scan(cfg.scheme, &spec, grid, &cfg.params, &cfg.engine)?, w)
    };
    if let Some(shots) = cfg.shots {
        scan = apply_shot_noise(&scan, shots, cfg.seed)?;
    }

    let heterodyne = cfg.kind == Kind::Heterodyne;
    let mut table = if heterodyne {
        Table::new("scan", &["omega_scan_rad_s", "omega_lab_rad_s", "probability", "phase_rad"])
    } else {
        Table::new("scan", &["omega_scan_rad_s", "probability", "phase_rad"])
    };
    for i in 0..scan.len() {
        let w = scan.omega_scan[i];
        let phase = scan.phase.as_ref().map_or(Cell::Empty, |p| Cell::F(p[i]));
        if heterodyne {
            table.row(&[Cell::F(w), Cell::F(cfg.omega0 + w), Cell::F(scan.probability[i]), phase]);
        } else {
            table.row(&[Cell::F(w), Cell::F(scan.probability[i]), phase]);
        }
    }

    let mut summary = Summary::new(cfg.kind, cfg.scheme, cfg.seed);
    summary.warnings = warnings;
    summary.failures = scan.failures.clone();
    summary.dips = dips(&scan);
    let line = match fit_scan(&scan) {
        Ok(fit) => {
            summary.omega_c_rad_s = Some(fit.center);
            summary.gamma_rad_s = Some(fit.half_width);
            summary.converged = Some(fit.converged);
            summary.bias_rad_s = cfg.target.map(|t| fit.center - t);
            if heterodyne {
                summary.omega_lab_rad_s = Some(cfg.omega0 + fit.center);
            }
            let bias = summary
                .bias_rad_s
                .map_or(String::new(), |b| format!(", bias 2π×{:+.3} kHz", khz(b)));
            format!(
                "{} {}: centre 2π×{:.3} kHz{bias}, FWHM 2π×{:.3} kHz, {} dip(s){}",
                cfg.scheme,
                cfg.kind,
                khz(fit.center),
                khz(fit.fwhm()),
                summary.dips.len(),
                if fit.converged { "" } else { " (fit not converged)" }
            )
        }
        Err(e) => format!("{} {}: {e}; {} dip(s)", cfg.scheme, cfg.kind, summary.dips.len()),
    };
    Ok(Report {
        tables: vec![table],
        summary,
        line,
    })
}

fn dips(scan: &ScanResult) -> Vec<DipSummary> {
    find_extrema(&scan.probability, ExtremumKind::Minima, DIP_PROMINENCE)
        .into_iter()
        .map(|d| DipSummary {
            omega_rad_s: scan.omega_scan[d.index],
            probability: d.value,
            prominence: d.prominence,
        })
        .collect()
}

fn run_robustness_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    let settings = cfg
        .robustness
        .as_ref()
        .ok_or_else(|| Error::Config("robustness settings missing".into()))?;
    let w = point(cfg)?;
    let mut table = Table::new("robustness", &["harmonic", "amplitude_rad_s", "fidelity"]);
    let mut summary = Summary::new(cfg.kind, cfg.scheme, cfg.seed);
    for &k in &settings.harmonics {
        let curve = run_robustness(cfg.scheme, k, &settings.amplitudes, w, &cfg.params, &cfg.engine)?;
        for (a, f) in curve.amplitude.iter().zip(&curve.fidelity) {
            table.row(&[Cell::U(k as u64), Cell::F(*a), Cell::F(*f)]);
        }
        summary.robustness.push(RobustnessSummary {
            harmonic: k,
            min_fidelity: curve.fidelity.iter().cloned().fold(f64::INFINITY, f64::min),
            fidelity_at_max_amplitude: *curve.fidelity.last().unwrap_or(&f64::NAN),
        });
    }
    let parts: Vec<String> = summary
        .robustness
        .iter()
        .map(|r| format!("k={} min {:.4}", r.harmonic, r.min_fidelity))
        .collect();
    let line = format!("{} robustness: {}", cfg.scheme, parts.join(", "));
    Ok(Report {
        tables: vec![table],
        summary,
        line,
    })
}

fn run_filter(cfg: &ExperimentConfig) -> Result<Report> {
    let settings = cfg
        .filter
        .as_ref()
        .ok_or_else(|| Error::Config("filter settings missing".into()))?;
    let seq = cfg.params.build(cfg.scheme, point(cfg)?)?;
    let points = settings.schedule.grid(settings.points_per_band);
    let rec = reconstruct_filter(&seq, &points, &settings.reconstruction)?;
    let exact = rec
        .omega
        .iter()
        .map(|&w| effective_fourier_component(&seq, w))
        .collect::<Result<Vec<f64>>>()?;

    let m = settings.reconstruction.ensemble;
    let mut table = Table::new("filter", &["omega_rad_s", "f_abs", "source", "M"]);
    for i in 0..rec.len() {
        table.row(&[
            Cell::F(rec.omega[i]),
            Cell::F(rec.magnitude[i]),
            Cell::S(rec.source.label()),
            Cell::U((m - rec.excluded[i]) as u64),
        ]);
    }
    for (w, f) in rec.omega.iter().zip(&exact) {
        table.row(&[Cell::F(*w), Cell::F(*f), Cell::S("exact"), Cell::U(0)]);
    }

    let top = exact.iter().cloned().fold(0.0, f64::max);
    let max_rel = (0..rec.len())
        .filter(|&i| exact[i] >= 0.1 * top)
        .map(|i| (rec.magnitude[i] - exact[i]).abs() / exact[i])
        .fold(0.0, f64::max);
    let mut summary = Summary::new(cfg.kind, cfg.scheme, cfg.seed);
    summary.filter = Some(FilterSummary {
        points: rec.len(),
        ensemble: m,
        excluded_samples: rec.excluded.iter().sum(),
        max_relative_error: max_rel,
    });
    let line = format!(
        "{} filter: {} points, max relative error {:.3}% where |f| >= 10% of max",
        cfg.scheme,
        rec.len(),
        100.0 * max_rel
    );
    Ok(Report {
        tables: vec![table],
        summary,
        line,
    })
}

fn run_syncread(cfg: &ExperimentConfig) -> Result<Report> {
    let settings = cfg
        .syncread
        .as_ref()
        .ok_or_else(|| Error::Config("syncread settings missing".into()))?;
    let (spec, warnings) = sensed_signal(cfg)?;
    let trace = run_synchronized_readout(cfg.scheme, &spec, &cfg.params, &settings.readout, &cfg.engine)?;
    let counts = trace.counts_f64();
    let spec_out = spectrum(&counts, trace.interval, settings.zero_padding)?;

    let mut trace_table = Table::new("trace", &["index", "time_s", "counts", "probability"]);
    for (m, (&c, &p)) in trace.counts.iter().zip(&trace.probability).enumerate() {
        trace_table.row(&[
            Cell::U(m as u64),
            Cell::F(m as f64 * trace.interval),
            Cell::U(c as u64),
            Cell::F(p),
        ]);
    }
    let mut spectrum_table = Table::new("spectrum", &["freq_hz", "magnitude"]);
    for (f, m) in spec_out.freq_hz.iter().zip(&spec_out.magnitude) {
        spectrum_table.row(&[Cell::F(*f), Cell::F(*m)]);
    }

    let alias = cfg.target.map(|t| predict_alias(t / TAU, trace.interval));
    let target_bin = alias.map(|a| spec_out.bin_of(a));
    let dominant = spec_out.dominant();
    let mut summary = Summary::new(cfg.kind, cfg.scheme, cfg.seed);
    summary.warnings = warnings;
    summary.peaks = spec_out
        .peaks
        .iter()
        .map(|p| PeakSummary {
            freq_hz: p.freq_hz,
            mag: p.magnitude,
            snr: p.snr,
        })
        .collect();
    summary.syncread = Some(SyncSummary {
        samples: trace.len(),
        total_duration_s: trace.total_duration(),
        predicted_alias_hz: alias,
        bin_width_hz: spec_out.bin_width,
        dominant_fwhm_hz: dominant.map(|d| peak_fwhm(&counts, trace.interval, d.freq_hz)),
        target_bin_snr: target_bin.map(|b| spec_out.snr(b)),
        dominant_is_target: match (dominant, target_bin) {
            (Some(d), Some(b)) => Some(d.bin.abs_diff(b) <= settings.zero_padding),
            _ => None,
        },
    });
    let line = match dominant {
        Some(d) => format!(
            "{} syncread: dominant peak {:.4} Hz (SNR {:.1}){}",
            cfg.scheme,
            d.freq_hz,
            d.snr,
            alias.map_or(String::new(), |a| format!(", predicted alias {a:.4} Hz"))
        ),
        None => format!("{} syncread: no spectral peak", cfg.scheme),
    };
    Ok(Report {
        tables: vec![trace_table, spectrum_table],
        summary,
        line,
    })
}

fn dump_sequence(cfg: &ExperimentConfig) -> Result<Report> {
    let seq = cfg.params.build(cfg.scheme, point(cfg)?)?;
    let mut table = Table::new(
        "sequence",
        &["center_s", "duration_s", "rabi_rad_s", "phase_rad", "plane"],
    );
    for p in seq.pulses() {
        table.row(&[
            Cell::F(p.center),
            Cell::F(p.duration),
            Cell::F(p.rabi),
            Cell::F(p.phase),
            Cell::S(p.plane.name()),
        ]);
    }
    let line = format!(
        "{} sequence: {} pulses over {:.6} µs",
        cfg.scheme,
        seq.pulses().len(),
        seq.total_duration() * 1e6
    );
    Ok(Report {
        tables: vec![table],
        summary: Summary::new(cfg.kind, cfg.scheme, cfg.seed),
        line,
    })
}

fn dump_modulation(cfg: &ExperimentConfig) -> Result<Report> {
    let seq = cfg.params.build(cfg.scheme, point(cfg)?)?;
    let f = toggling_modulation(&seq);
    let mut table = Table::new("modulation", &["start_s", "end_s", "value", "quadrature"]);
    for s in &f.segments {
        table.row(&[Cell::F(s.start), Cell::F(s.end), Cell::F(s.value), Cell::F(s.quadrature)]);
    }
    let line = format!("{} modulation: {} segments", cfg.scheme, f.segments.len());
    Ok(Report {
        tables: vec![table],
        summary: Summary::new(cfg.kind, cfg.scheme, cfg.seed),
        line,
    })
}

impl ExperimentConfig {
    /// Replaces the master seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let Some(f) = &mut self.filter {
            f.reconstruction.seed = seed;
        }
        if let Some(s) = &mut self.syncread {
            s.readout.seed = seed;
        }
        self
    }
}
