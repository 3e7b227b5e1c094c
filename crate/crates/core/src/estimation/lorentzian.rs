use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::ScanResult;

/// Dip model `P(ω) = baseline − A / (1 + (ω − ω_c)²/γ²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LorentzianFit {
    pub center: f64,
    /// Half width at half depth; the full width is `2γ`.
    pub half_width: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LorentzianFit {
    pub fn eval(&self, omega: f64) -> f64 {
        lorentzian_dip(omega, self.baseline, self.amplitude, self.center, self.half_width)
    }

    pub fn fwhm(&self) -> f64 {
        2.0 * self.half_width
    }
}

pub fn lorentzian_dip(omega: f64, baseline: f64, amplitude: f64, center: f64, half_width: f64) -> f64 {
    let u = (omega - center) / half_width;
    baseline - amplitude / (1.0 + u * u)
}

const MAX_ITER: usize = 200;
const REL_STEP: f64 = 1e-8;

pub fn fit_scan(scan: &ScanResult) -> Result<LorentzianFit> {
    fit_lorentzian(&scan.omega_scan, &scan.probability)
}

/// Damped Gauss–Newton least-squares fit of a Lorentzian dip.
///
/// Frequencies are centred and scaled to the grid span internally so the
/// normal equations stay well conditioned for rad/s inputs.
pub fn fit_lorentzian(x: &[f64], y: &[f64]) -> Result<LorentzianFit> {
    if x.len() != y.len() {
        return Err(Error::NoDip("abscissa and ordinate lengths differ".into()));
    }
    if x.len() < 7 {
        return Err(Error::NoDip(format!("need at least 7 points, got {}", x.len())));
    }
    let imin = argmin(y);
    let imax = argmax(y);
    if imin == 0 || imin == y.len() - 1 || y[imin] >= y[imax] {
        return Err(Error::NoDip("minimum is not strictly inside the grid".into()));
    }

    let x0 = x[imin];
    let scale = (x[x.len() - 1] - x[0]).abs();
    let xs: Vec<f64> = x.iter().map(|v| (v - x0) / scale).collect();

    let baseline = y[imax];
    let depth = baseline - y[imin];
    let half = baseline - 0.5 * depth;
    let left = crossing(&xs, y, imin, half, -1).unwrap_or(xs[0]);
    let right = crossing(&xs, y, imin, half, 1).unwrap_or(xs[xs.len() - 1]);
    let gamma = (0.5 * (right - left)).max(1e-6);

    // p = [baseline, amplitude, centre, γ]
    let mut p = [baseline, depth, 0.0, gamma];
    let mut cost = sum_sq(&xs, y, &p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITER {
        iterations += 1;
        let (jtj, jtr) = normal_equations(&xs, y, &p);
        let mut accepted = false;
        let mut rel = f64::INFINITY;
        for _ in 0..30 {
            let mut a = jtj;
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(step) = solve4(a, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            if !(trial[3] > 0.0) {
                lambda *= 10.0;
                continue;
            }
            let c = sum_sq(&xs, y, &trial);
            if c <= cost {
                rel = (0..4)
                    .map(|i| step[i].abs() / p[i].abs().max(1e-12))
                    .fold(0.0, f64::max);
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: at a minimum if the gradient
            // vanishes, otherwise stuck
            converged = jtr.iter().all(|g| g.abs() <= 1e-12 * (1.0 + cost));
            break;
        }
        if rel < REL_STEP {
            converged = true;
            break;
        }
    }

    Ok(LorentzianFit {
        center: x0 + p[2] * scale,
        half_width: p[3].abs() * scale,
        amplitude: p[1],
        baseline: p[0],
        residual_norm: cost.sqrt(),
        iterations,
        converged,
    })
}

fn argmin(y: &[f64]) -> usize {
    (0..y.len()).min_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0)
}

fn argmax(y: &[f64]) -> usize {
    (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0)
}

/// Linear interpolation of the first crossing of `level` walking from `from`.
fn crossing(x: &[f64], y: &[f64], from: usize, level: f64, dir: isize) -> Option<f64> {
    let mut i = from as isize;
    loop {
        let j = i + dir;
        if j < 0 || j as usize >= y.len() {
            return None;
        }
        let (a, b) = (i as usize, j as usize);
        if y[b] >= level {
            let t = (level - y[a]) / (y[b] - y[a]);
            return Some(x[a] + t * (x[b] - x[a]));
        }
        i = j;
    }
}

fn sum_sq(x: &[f64], y: &[f64], p: &[f64; 4]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - lorentzian_dip(xi, p[0], p[1], p[2], p[3])).powi(2))
        .sum()
}

fn normal_equations(x: &[f64], y: &[f64], p: &[f64; 4]) -> ([[f64; 4]; 4], [f64; 4]) {
    let mut jtj = [[0.0; 4]; 4];
    let mut jtr = [0.0; 4];
    for (&xi, &yi) in x.iter().zip(y) {
        let u = (xi - p[2]) / p[3];
        let d = 1.0 + u * u;
        let r = yi - (p[0] - p[1] / d);
        let g = [
            1.0,
            -1.0 / d,
            -2.0 * p[1] * u / (p[3] * d * d),
            -2.0 * p[1] * u * u / (p[3] * d * d),
        ];
        for a in 0..4 {
            jtr[a] += g[a] * r;
            for b in 0..4 {
                jtj[a][b] += g[a] * g[b];
            }
        }
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut out = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * out[k]).sum();
        out[row] = (b[row] - s) / a[row][row];
    }
    out.iter().all(|v| v.is_finite()).then_some(out)
}
