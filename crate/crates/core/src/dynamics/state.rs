use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::Serialize;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Sensor qubit state `c0 |0⟩ + c1 |1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SensorState {
    pub c0: C64,
    pub c1: C64,
}

impl SensorState {
    pub const fn new(c0: C64, c1: C64) -> Self {
        SensorState { c0, c1 }
    }

    pub const fn zero() -> Self {
        SensorState::new(ONE, ZERO)
    }

    pub const fn one() -> Self {
        SensorState::new(ZERO, ONE)
    }

    /// `(|0⟩ + |1⟩)/√2`
    pub fn plus() -> Self {
        SensorState::new(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0))
    }

    /// `(|0⟩ − |1⟩)/√2`
    pub fn minus() -> Self {
        SensorState::new(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0))
    }

    /// `(|0⟩ + i|1⟩)/√2`
    pub fn l() -> Self {
        SensorState::new(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2))
    }

    /// `(|0⟩ − i|1⟩)/√2`
    pub fn r() -> Self {
        SensorState::new(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, -FRAC_1_SQRT_2))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.c0.is_finite() && self.c1.is_finite()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &SensorState) -> C64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    /// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
    pub fn bloch(&self) -> [f64; 3] {
        let cross = self.c0.conj() * self.c1;
        [
            2.0 * cross.re,
            2.0 * cross.im,
            self.c0.norm_sqr() - self.c1.norm_sqr(),
        ]
    }

    /// Applies `exp(−i θ n̂·σ / 2)`; `axis` need not be normalised, its
    /// length scales the angle.
    #[inline]
    pub fn rotate(&self, axis: [f64; 3], angle: f64) -> SensorState {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let theta = angle * norm;
        if theta == 0.0 {
            return *self;
        }
        let (s, c) = (0.5 * theta).sin_cos();
        let (nx, ny, nz) = (axis[0] / norm, axis[1] / norm, axis[2] / norm);
        // (n·σ) ψ
        let s0 = self.c0 * nz + self.c1 * C64::new(nx, -ny);
        let s1 = self.c0 * C64::new(nx, ny) - self.c1 * nz;
        let mis = C64::new(0.0, -s);
        SensorState::new(self.c0 * c + mis * s0, self.c1 * c + mis * s1)
    }
}

/// Projective readout bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Basis {
    Plus,
    L,
    Zero,
}

impl Basis {
    pub fn state(&self) -> SensorState {
        match self {
            Basis::Plus => SensorState::plus(),
            Basis::L => SensorState::l(),
            Basis::Zero => SensorState::zero(),
        }
    }
}

/// `|⟨basis|ψ⟩|²`
pub fn survival_probability(psi: &SensorState, basis: Basis) -> f64 {
    state_fidelity(psi, &basis.state())
}

/// `|⟨target|ψ⟩|²`, clamped to `[0, 1]`.
pub fn state_fidelity(psi: &SensorState, target: &SensorState) -> f64 {
    target.inner(psi).norm_sqr().clamp(0.0, 1.0)
}

/// 2×2 unitary as column images of `|0⟩` and `|1⟩`.
#[derive(Clone, Copy, Debug)]
pub struct Operator {
    pub col0: SensorState,
    pub col1: SensorState,
}

impl Operator {
    pub fn identity() -> Self {
        Operator {
            col0: SensorState::zero(),
            col1: SensorState::one(),
        }
    }

    pub fn from_rows(m: [[C64; 2]; 2]) -> Self {
        Operator {
            col0: SensorState::new(m[0][0], m[1][0]),
            col1: SensorState::new(m[0][1], m[1][1]),
        }
    }

    /// Phase-insensitive distance `sqrt(1 − |Tr(A†B)/2|²)`.
    pub fn distance(&self, other: &Operator) -> f64 {
        let tr = self.col0.inner(&other.col0) + self.col1.inner(&other.col1);
        (1.0 - (tr.norm() / 2.0).powi(2)).max(0.0).sqrt()
    }
}
