//! Frequency estimation: Lorentzian dip fits, spectra of photon traces,
//! extremum search and alias prediction.

mod lorentzian;
mod spectrum;

use serde::Serialize;

pub use lorentzian::{fit_lorentzian, fit_scan, lorentzian_dip, LorentzianFit};
pub use spectrum::{
    dft_spectrum, dtft_magnitude, parseval_residual, peak_fwhm, spectrum, SpectralPeak,
    SpectrumResult,
};

/// Apparent frequency of a tone at `f_s` Hz sampled every `T_L` seconds.
pub fn predict_alias(f_s: f64, interval: f64) -> f64 {
    (f_s - (f_s * interval).round() / interval).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremumKind {
    Minima,
    Maxima,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extremum {
    pub index: usize,
    pub value: f64,
    pub prominence: f64,
}

/// Strict local extrema whose topographic prominence reaches `threshold`,
/// sorted by decreasing prominence.
///
/// Plateaus of equal values count once, at their first index. Prominence is
/// measured as for peaks: the height above the higher of the two lowest
/// points separating it from a taller peak on either side (or the series end).
pub fn find_extrema(series: &[f64], kind: ExtremumKind, threshold: f64) -> Vec<Extremum> {
    let n = series.len();
    if n < 3 {
        return Vec::new();
    }
    let y: Vec<f64> = match kind {
        ExtremumKind::Maxima => series.to_vec(),
        ExtremumKind::Minima => series.iter().map(|v| -v).collect(),
    };
    let mut out = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if y[i] > y[i - 1] {
            // extend across a plateau
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let prominence = prominence(&y, i, j);
                if prominence >= threshold {
                    out.push(Extremum {
                        index: i,
                        value: series[i],
                        prominence,
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    out
}

fn prominence(y: &[f64], start: usize, end: usize) -> f64 {
    let h = y[start];
    let mut left_min = h;
    for k in (0..start).rev() {
        if y[k] > h {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = h;
    for &v in &y[end + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}
