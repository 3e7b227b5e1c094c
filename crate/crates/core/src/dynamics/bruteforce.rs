//! Piecewise midpoint-exponential propagator for `H(t) = ½ h(t)·σ`.

use std::f64::consts::TAU;

use crate::dynamics::state::{Operator, SensorState};
use crate::dynamics::{check_frame, check_upto, EngineConfig};
use crate::error::{Error, Result};
use crate::sequence::PulseSequence;
use crate::signal::SignalSpec;

/// Signal part of `h(t)`. Parallel tones drive σz; rotating-frame
/// perpendicular tones enter as `B_X σx − B_Y σy`, i.e. `h = 2(B_X, −B_Y, 0)`.
#[inline]
fn signal_vector(spec: &SignalSpec, rotating: bool, t: f64) -> [f64; 3] {
    let z = spec.parallel_unchecked(t);
    if rotating {
        let (bx, by) = spec.rotating_unchecked(t);
        [2.0 * bx, -2.0 * by, z]
    } else {
        [0.0, 0.0, z]
    }
}

struct Interval {
    start: f64,
    end: f64,
    control: [f64; 3],
    steps: usize,
}

fn intervals(seq: &PulseSequence, spec: &SignalSpec, cfg: &EngineConfig, upto: f64) -> Vec<Interval> {
    let f_max = spec.max_frequency();
    let gap_steps = |len: f64| -> usize {
        let n = (len * cfg.steps_per_gap_cycle as f64 * f_max / TAU).ceil();
        if n.is_finite() && n >= 1.0 {
            n as usize
        } else {
            1
        }
    };
    let mut out = Vec::with_capacity(2 * seq.pulses().len() + 1);
    let mut push = |start: f64, end: f64, control: [f64; 3], steps: usize| {
        let end = end.min(upto);
        if end > start {
            out.push(Interval { start, end, control, steps });
        }
    };
    let mut cursor = 0.0;
    for p in seq.pulses() {
        if p.start() >= upto {
            break;
        }
        push(cursor, p.start(), [0.0; 3], gap_steps(p.start() - cursor));
        let axis = p.axis();
        let control = [axis[0] * p.rabi, axis[1] * p.rabi, axis[2] * p.rabi];
        // partial pulses keep the per-pulse step density
        let frac = ((upto.min(p.end()) - p.start()) / p.duration).clamp(0.0, 1.0);
        let steps = ((cfg.steps_per_pulse as f64 * frac).ceil() as usize).max(1);
        push(p.start(), p.end(), control, steps);
        cursor = p.end();
    }
    if cursor < upto {
        push(cursor, upto, [0.0; 3], gap_steps(upto - cursor));
    }
    out
}

/// Propagates `psi0` through the whole sequence.
pub fn propagate_bruteforce(
    seq: &PulseSequence,
    spec: &SignalSpec,
    psi0: SensorState,
    cfg: &EngineConfig,
) -> Result<SensorState> {
    propagate_bruteforce_until(seq, spec, psi0, cfg, seq.total_duration())
}

/// Propagates `psi0` over `[0, upto]`.
pub fn propagate_bruteforce_until(
    seq: &PulseSequence,
    spec: &SignalSpec,
    psi0: SensorState,
    cfg: &EngineConfig,
    upto: f64,
) -> Result<SensorState> {
    cfg.validate()?;
    check_frame(seq.scheme(), spec)?;
    check_upto(seq, upto)?;
    let upto = upto.min(seq.total_duration());
    let rotating = spec.is_rotating();
    let mut psi = psi0;
    let mut step = 0usize;
    for iv in intervals(seq, spec, cfg, upto) {
        let dt = (iv.end - iv.start) / iv.steps as f64;
        for i in 0..iv.steps {
            let t = iv.start + (i as f64 + 0.5) * dt;
            let s = signal_vector(spec, rotating, t);
            let h = [iv.control[0] + s[0], iv.control[1] + s[1], iv.control[2] + s[2]];
            psi = psi.rotate(h, dt);
            step += 1;
        }
        if !psi.is_finite() {
            return Err(Error::Numerical {
                step,
                time: iv.end,
                detail: "state amplitude became non-finite".into(),
            });
        }
    }
    Ok(psi)
}

/// Propagator over `[0, upto]` as an operator.
pub fn propagator_bruteforce_until(
    seq: &PulseSequence,
    spec: &SignalSpec,
    cfg: &EngineConfig,
    upto: f64,
) -> Result<Operator> {
    Ok(Operator {
        col0: propagate_bruteforce_until(seq, spec, SensorState::zero(), cfg, upto)?,
        col1: propagate_bruteforce_until(seq, spec, SensorState::one(), cfg, upto)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::state::{state_fidelity, survival_probability};
    use crate::dynamics::{initial_state, readout_basis, simulate, Engine};
    use crate::sequence::{build_gd, build_xy, Plane, Pulse, Scheme};
    use crate::signal::Tone;
    use num_complex::Complex64 as C64;
    use std::f64::consts::PI;

    const KHZ: f64 = 2.0 * PI * 1e3;
    const MHZ: f64 = 2.0 * PI * 1e6;

    fn three_tone() -> SignalSpec {
        SignalSpec::lab(
            vec![
                Tone::new(24.0 * KHZ, 0.3 * MHZ, 0.0).unwrap(),
                Tone::new(48.0 * KHZ, 0.903 * MHZ, 0.0).unwrap(),
                Tone::new(48.0 * KHZ, 1.497 * MHZ, 0.0).unwrap(),
            ],
            vec![],
        )
    }

    #[test]
    fn empty_sequence_is_identity() {
        let seq = PulseSequence::from_parts(Scheme::Xy, vec![], 1e-6, 0, 1, 1.0);
        let psi = propagate_bruteforce(&seq, &SignalSpec::zero(), SensorState::plus(), &EngineConfig::default())
            .unwrap();
        assert!((state_fidelity(&psi, &SensorState::plus()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_pi_pulse_flips() {
        let pulse = Pulse {
            center: 0.5e-6,
            duration: 50e-9,
            rabi: PI / 50e-9,
            phase: 0.0,
            plane: Plane::XY,
        };
        let seq = PulseSequence::from_parts(Scheme::Xy, vec![pulse], 1e-6, 1, 1, 1.0);
        let psi = propagate_bruteforce(&seq, &SignalSpec::zero(), SensorState::zero(), &EngineConfig::default())
            .unwrap();
        assert!(state_fidelity(&psi, &SensorState::one()) >= 1.0 - 1e-8);
    }

    #[test]
    fn xy_toggling_operators() {
        let seq = build_xy(0.3 * MHZ, 1, 1e-10).unwrap();
        let cfg = EngineConfig::brute_force();
        let (z, o) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        let i = C64::i();
        let expected = [
            Operator::from_rows([[z, -i], [-i, z]]),
            Operator::from_rows([[i, z], [z, -i]]),
            Operator::from_rows([[z, i], [i, z]]),
            Operator::from_rows([[o, z], [z, o]]),
        ];
        for (j, target) in expected.iter().enumerate() {
            let p = &seq.pulses()[j];
            let upto = 0.5 * (p.end() + seq.pulses().get(j + 1).map_or(seq.total_duration(), |q| q.start()));
            let u = propagator_bruteforce_until(&seq, &SignalSpec::zero(), &cfg, upto).unwrap();
            assert!(u.distance(target) <= 1e-3, "j = {}: {}", j + 1, u.distance(target));
        }
    }

    #[test]
    fn norm_is_conserved() {
        let spec = three_tone();
        let cfg = EngineConfig::brute_force();
        for scheme in [Scheme::Xy, Scheme::GdParallel] {
            let seq = crate::sequence::SequenceParams::reference(scheme)
                .build(scheme, 0.3 * MHZ)
                .unwrap();
            let psi = propagate_bruteforce(&seq, &spec, initial_state(scheme), &cfg).unwrap();
            assert!((psi.norm_sqr() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn step_halving_converges() {
        let spec = three_tone();
        let coarse = EngineConfig::brute_force();
        let fine = EngineConfig {
            steps_per_pulse: 2 * coarse.steps_per_pulse,
            steps_per_gap_cycle: 2 * coarse.steps_per_gap_cycle,
            ..coarse
        };
        let seq = build_gd(Plane::XZ, 0.29 * MHZ, 10, 8, 50e-9).unwrap();
        let a = simulate(&seq, &spec, &coarse).unwrap().probability;
        let b = simulate(&seq, &spec, &fine).unwrap().probability;
        assert!((a - b).abs() <= 1e-4, "{a} vs {b}");
    }

    #[test]
    fn gd_near_instantaneous_matches_analytic() {
        let spec = three_tone();
        let seq = build_gd(Plane::XZ, 0.3 * MHZ, 10, 8, 0.5e-9).unwrap();
        let bf = simulate(&seq, &spec, &EngineConfig::brute_force()).unwrap();
        let an = simulate(&seq, &spec, &EngineConfig { engine: Engine::Analytic, ..Default::default() })
            .unwrap();
        assert!((bf.probability - an.probability).abs() <= 1e-3, "{} vs {}", bf.probability, an.probability);
        let p = survival_probability(&bf.final_state, readout_basis(Scheme::GdParallel));
        assert_eq!(p, bf.probability);
    }
}
