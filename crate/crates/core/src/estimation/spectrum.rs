use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{usage, Result};
use crate::estimation::{find_extrema, ExtremumKind};
use crate::experiments::PhotonTrace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralPeak {
    pub bin: usize,
    pub freq_hz: f64,
    pub magnitude: f64,
    pub snr: f64,
}

/// One-sided magnitude spectrum of a uniformly sampled series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub freq_hz: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Spacing of the un-padded bins, `1/(M T_L)`.
    pub bin_width: f64,
    pub interval: f64,
    /// Strongest local maxima, in decreasing magnitude.
    pub peaks: Vec<SpectralPeak>,
}

impl SpectrumResult {
    pub fn dominant(&self) -> Option<&SpectralPeak> {
        self.peaks.first()
    }

    /// Bin nearest to `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> usize {
        let step = self.freq_hz.get(1).copied().unwrap_or(self.bin_width);
        ((freq_hz / step).round() as usize).min(self.freq_hz.len().saturating_sub(1))
    }

    /// Peak magnitude over the median of all bins outside `bin ± 3`.
    pub fn snr(&self, bin: usize) -> f64 {
        let mut rest: Vec<f64> = self
            .magnitude
            .iter()
            .enumerate()
            .filter(|(i, _)| i.abs_diff(bin) > 3)
            .map(|(_, &m)| m)
            .collect();
        if rest.is_empty() {
            return f64::INFINITY;
        }
        let mid = rest.len() / 2;
        let (_, median, _) = rest.select_nth_unstable_by(mid, f64::total_cmp);
        self.magnitude[bin] / *median
    }
}

/// Number of peaks kept in a [`SpectrumResult`].
const KEPT_PEAKS: usize = 8;

pub fn dft_spectrum(trace: &PhotonTrace) -> Result<SpectrumResult> {
    spectrum(&trace.counts_f64(), trace.interval, 1)
}

/// Mean-subtracted, rectangular-window magnitude spectrum on bins
/// `j/(pad M T_L)`, `j = 0..=pad M/2`.
pub fn spectrum(samples: &[f64], interval: f64, pad: usize) -> Result<SpectrumResult> {
    let m = samples.len();
    if m < 16 {
        return Err(usage(format!("spectrum needs at least 16 samples, got {m}")));
    }
    if !(interval > 0.0) {
        return Err(usage("sampling interval must be > 0"));
    }
    if pad == 0 {
        return Err(usage("zero-padding factor must be >= 1"));
    }
    let n = m * pad;
    let mut buf = centred(samples);
    buf.resize(n, C64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let magnitude: Vec<f64> = buf[..=half].iter().map(|c| c.norm()).collect();
    let df = 1.0 / (n as f64 * interval);
    let freq_hz = (0..=half).map(|j| j as f64 * df).collect();

    let mut out = SpectrumResult {
        freq_hz,
        magnitude,
        bin_width: 1.0 / (m as f64 * interval),
        interval,
        peaks: Vec::new(),
    };
    let mut maxima = find_extrema(&out.magnitude, ExtremumKind::Maxima, 0.0);
    maxima.sort_by(|a, b| b.value.total_cmp(&a.value));
    out.peaks = maxima
        .iter()
        .take(KEPT_PEAKS)
        .map(|e| SpectralPeak {
            bin: e.index,
            freq_hz: out.freq_hz[e.index],
            magnitude: e.value,
            snr: out.snr(e.index),
        })
        .collect();
    Ok(out)
}

fn centred(samples: &[f64]) -> Vec<C64> {
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    samples.iter().map(|&x| C64::new(x - mean, 0.0)).collect()
}

/// `Σ_j |X_j|² − M Σ_m (x_m − x̄)²` over the full (two-sided) DFT, relative
/// to the second term.
pub fn parseval_residual(samples: &[f64]) -> f64 {
    let m = samples.len();
    let mut buf = centred(samples);
    let energy: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let spectral: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let expect = m as f64 * energy;
    if expect == 0.0 {
        return spectral;
    }
    (spectral - expect).abs() / expect
}

/// `|Σ_m (x_m − x̄) e^{−2πi f m T_L}|`
pub fn dtft_magnitude(samples: &[f64], interval: f64, freq_hz: f64) -> f64 {
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let w = TAU * freq_hz * interval;
    // phasor recursion keeps this O(M) without repeated sin/cos
    let step = C64::from_polar(1.0, -w);
    let mut z = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for (i, &x) in samples.iter().enumerate() {
        if i % 4096 == 0 {
            z = C64::from_polar(1.0, -w * i as f64);
        }
        acc += (x - mean) * z;
        z *= step;
    }
    acc.norm()
}

/// Full width at half maximum (in Hz) of the magnitude peak near
/// `freq_hz`, measured on the continuous DTFT so the result is not limited
/// to bin spacing.
pub fn peak_fwhm(samples: &[f64], interval: f64, freq_hz: f64) -> f64 {
    let bin = 1.0 / (samples.len() as f64 * interval);
    let f = |x: f64| dtft_magnitude(samples, interval, x);
    // refine the maximum within ±1 bin
    let mut best = (freq_hz, f(freq_hz));
    for i in -32..=32 {
        let x = freq_hz + bin * i as f64 / 32.0;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let half = 0.5 * best.1;
    let edge = |dir: f64| -> f64 {
        let (mut inside, mut outside) = (0.0, 0.0);
        let mut found = false;
        for i in 1..=128 {
            let d = bin * i as f64 / 32.0;
            if f(best.0 + dir * d) < half {
                outside = d;
                found = true;
                break;
            }
            inside = d;
        }
        if !found {
            return 4.0 * bin;
        }
        for _ in 0..40 {
            let mid = 0.5 * (inside + outside);
            if f(best.0 + dir * mid) < half {
                outside = mid;
            } else {
                inside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    edge(-1.0) + edge(1.0)
}
