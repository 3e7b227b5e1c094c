//! Piecewise-constant toggling-frame modulation functions.
//!
//! Pulses are treated as instantaneous at their centres. For each scheme the
//! stored value is the coefficient that multiplies the sensed field component
//! after the pulses seen so far:
//!
//! * XY, GD∥: coefficient of σz,
//! * CPMG: coefficient of σy,
//! * GD⊥: coefficient of σx; the companion `quadrature` holds `sin φ̄_j`,
//!   the weight with which the second rotating-frame quadrature enters σx.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::sequence::{PulseSequence, Scheme};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
    pub quadrature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulationFunction {
    pub scheme: Scheme,
    pub segments: Vec<Segment>,
}

impl ModulationFunction {
    pub fn duration(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Value of F at `t` (right-continuous at pulse centres).
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.end <= t);
        self.segments
            .get(idx)
            .or(self.segments.last())
            .map_or(0.0, |s| s.value)
    }

    /// `∫₀^upto F(t) e^{iωt} dt`, closed form per segment.
    pub fn transform(&self, omega: f64, upto: f64) -> C64 {
        self.integrate(omega, upto, |s| s.value)
    }

    /// Same as [`transform`](Self::transform) for the quadrature companion.
    pub fn quadrature_transform(&self, omega: f64, upto: f64) -> C64 {
        self.integrate(omega, upto, |s| s.quadrature)
    }

    fn integrate(&self, omega: f64, upto: f64, weight: impl Fn(&Segment) -> f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for seg in &self.segments {
            if seg.start >= upto {
                break;
            }
            let w = weight(seg);
            if w == 0.0 {
                continue;
            }
            let end = seg.end.min(upto);
            acc += w * exp_integral(omega, seg.start, end);
        }
        acc
    }
}

/// `∫_a^b e^{iωt} dt` without cancellation for small `ω (b − a)`.
#[inline]
pub(crate) fn exp_integral(omega: f64, a: f64, b: f64) -> C64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let x = omega * half;
    // 2 sin(ωh)/ω = 2h sinc(ωh)
    let weight = if x.abs() < 1e-8 {
        2.0 * half * (1.0 - x * x / 6.0)
    } else {
        2.0 * (x.sin() / omega)
    };
    C64::from_polar(weight, omega * mid)
}

/// Toggling-frame modulation of a sequence in the instantaneous-pulse limit.
pub fn toggling_modulation(seq: &PulseSequence) -> ModulationFunction {
    let n = seq.pulses_per_block().max(1);
    let level = |k: usize| -> (f64, f64) {
        match seq.scheme() {
            Scheme::Xy | Scheme::Cpmg => (if k.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0),
            Scheme::GdParallel => ((TAU * (k % n) as f64 / n as f64).cos(), 0.0),
            Scheme::GdPerp => {
                let phi = TAU * (k % n) as f64 / n as f64;
                (phi.cos(), phi.sin())
            }
        }
    };
    let mut segments = Vec::with_capacity(seq.pulses().len() + 1);
    let mut start = 0.0;
    for (k, p) in seq.pulses().iter().enumerate() {
        let (value, quadrature) = level(k);
        segments.push(Segment {
            start,
            end: p.center,
            value,
            quadrature,
        });
        start = p.center;
    }
    let (value, quadrature) = level(seq.pulses().len());
    segments.push(Segment {
        start,
        end: seq.total_duration(),
        value,
        quadrature,
    });
    ModulationFunction {
        scheme: seq.scheme(),
        segments,
    }
}
