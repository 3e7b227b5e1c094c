//! CSV tables and the JSON run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cli::config::Kind;
use crate::error::{Error, Result};
use crate::experiments::ScanFailure;
use crate::sequence::{Plane, Pulse, Scheme};

/// Header plus rows, written with `,` separators and shortest round-trip
/// float formatting (full double precision).
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    header: Vec<&'static str>,
    body: String,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.to_vec(),
            body: String::new(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.header.len());
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            match c {
                Cell::F(v) => write!(self.body, "{v}"),
                Cell::U(v) => write!(self.body, "{v}"),
                Cell::S(v) => write!(self.body, "{v}"),
                Cell::Empty => Ok(()),
            }
            .expect("writing to a String cannot fail");
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }
}

pub enum Cell {
    F(f64),
    U(u64),
    S(&'static str),
    Empty,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakSummary {
    pub freq_hz: f64,
    pub mag: f64,
    pub snr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DipSummary {
    pub omega_rad_s: f64,
    pub probability: f64,
    pub prominence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyncSummary {
    pub samples: usize,
    pub total_duration_s: f64,
    pub predicted_alias_hz: Option<f64>,
    pub bin_width_hz: f64,
    pub dominant_fwhm_hz: Option<f64>,
    pub target_bin_snr: Option<f64>,
    pub dominant_is_target: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterSummary {
    pub points: usize,
    pub ensemble: usize,
    pub excluded_samples: usize,
    /// Over points where the exact value is at least 10% of its maximum.
    pub max_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessSummary {
    pub harmonic: u32,
    pub min_fidelity: f64,
    pub fidelity_at_max_amplitude: f64,
}

/// Machine-readable result of one run. The first eight keys are present for
/// every experiment (null where they do not apply); the trailing sections
/// appear only for their experiment kind.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub kind: Kind,
    pub scheme: Scheme,
    pub seed: u64,
    pub omega_c_rad_s: Option<f64>,
    pub gamma_rad_s: Option<f64>,
    pub bias_rad_s: Option<f64>,
    pub converged: Option<bool>,
    pub peaks: Vec<PeakSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dips: Vec<DipSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<ScanFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_lab_rad_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub syncread: Option<SyncSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub robustness: Vec<RobustnessSummary>,
}

impl Summary {
    pub fn new(kind: Kind, scheme: Scheme, seed: u64) -> Self {
        Summary {
            kind,
            scheme,
            seed,
            omega_c_rad_s: None,
            gamma_rad_s: None,
            bias_rad_s: None,
            converged: None,
            peaks: Vec::new(),
            dips: Vec::new(),
            warnings: Vec::new(),
            failures: Vec::new(),
            omega_lab_rad_s: None,
            syncread: None,
            filter: None,
            robustness: Vec::new(),
        }
    }
}

/// Writes every table plus `summary.json` into `dir`. If any write fails,
/// the files already written are removed before the error is returned.
pub fn write_all(dir: &Path, tables: &[Table], summary: &Summary) -> Result<Vec<PathBuf>> {
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Config(format!("cannot encode summary: {e}")))?;
    let created_dir = !dir.exists();
    let mut written = Vec::new();
    let attempt = || -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for t in tables {
            let path = dir.join(format!("{}.csv", t.name));
            written.push(path.clone());
            fs::write(&path, t.render())?;
        }
        let path = dir.join("summary.json");
        written.push(path.clone());
        fs::write(&path, json + "\n")
    };
    match attempt() {
        Ok(()) => Ok(written),
        Err(e) => {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
            Err(Error::Io(e))
        }
    }
}

/// Parses the pulse table written by `dump-sequence`.
pub fn parse_pulse_table(text: &str) -> Result<Vec<Pulse>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "center_s,duration_s,rabi_rad_s,phase_rad,plane" {
        return Err(Error::Config(format!("unexpected pulse table header `{header}`")));
    }
    let bad = |n: usize, what: &str| Error::Config(format!("pulse table line {}: {what}", n + 2));
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(n, "expected 5 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "not a number"));
            let plane = match f[4] {
                "XZ" => Plane::XZ,
                "XY" => Plane::XY,
                other => return Err(bad(n, &format!("unknown plane `{other}`"))),
            };
            Ok(Pulse {
                center: num(f[0])?,
                duration: num(f[1])?,
                rabi: num(f[2])?,
                phase: num(f[3])?,
                plane,
            })
        })
        .collect()
}
