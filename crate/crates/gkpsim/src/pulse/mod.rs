//! Hardware-level pulse primitives: quench squeezing, tune-out-beam
//! conditional displacements, and their closed-form unitaries.
//!
//! A trap-depth quench from `ω` to `ω′` evolves the mode as
//!
//! `V(T) = S(−r) S(r e^{−2iω′T}) R(ω′T)`, `r = ½ ln(ω/ω′)`,
//!
//! which at `T = π/(2ω′)` collapses to `S(ln(ω′/ω)) R(π/2)` — maximal
//! squeezing after a quarter period in the shallow trap.
//!
//! A constant force `f` applied for a time `t` realizes
//!
//! `U(t) = D(α_d [1 − e^{−iωt}]) R(ωt) e^{iθ(t)}`,
//! `α_d = f/√(ħmω³)`, `θ(t) = ½α_d²(ωt − sin ωt)`;
//!
//! flanked by idles so the whole operation spans one oscillator period it
//! becomes a pure displacement `D(−2iα_d sin(ωt/2)) e^{iθ(t)}` whose
//! direction is set by the start time alone.

mod lattice;
mod quench;

pub use lattice::{
    run_lattice_preparation, BranchMixture, DisplacementMode, LatticePrepConfig, LatticePrepOutcome,
};
pub use quench::{build_lattice_hamiltonian, simulate_quench, QuenchConfig, QuenchOutcome};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{GkpError, Result};
use crate::fock::{self, FockOperator};

/// One beam of a tune-out pulse: only atoms in `target_state` feel it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneoutBeam {
    /// Peak potential depth, J.
    pub peak_u1: f64,
    /// Beam waist, m.
    pub waist_w1: f64,
    /// Signed beam-center offset along the grid mode, m.
    pub offset: f64,
    /// Ancilla basis state (0 or 1) coupled to the beam.
    pub target_state: u8,
}

/// Ancilla rotation axes used in the preparation circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationAxis {
    X,
    /// Rotation about `(x + z)/√2` — a Hadamard for angle π.
    Hadamard,
    /// Phase rotation about z (used for phase-feedback compensation).
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SegmentKind {
    /// Linear intensity ramp of the trap to `target_factor` of full depth.
    DepthRamp { target_factor: f64 },
    /// Free evolution at the current depth.
    Idle,
    /// Tune-out beams switched on at constant intensity.
    TuneoutPulse { beams: Vec<TuneoutBeam> },
    /// Ideal ancilla rotation; duration is accounted as `angle/rabi`.
    AncillaRotation { axis: RotationAxis, angle: f64, rabi: f64 },
    /// Trace-out-and-replace reset of the ancilla to `|0⟩` (instantaneous).
    AncillaReset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub kind: SegmentKind,
    /// Seconds; zero for instantaneous operations.
    pub duration: f64,
}

/// Ancilla phase acquired during one tune-out pulse:
/// `θ(t) + e^{−1/2} U₁ t / ħ` per beam, recorded for compensation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub segment_index: usize,
    /// Branch the phase applies to (the beam's target state).
    pub target_state: u8,
    /// Geometric part θ(t).
    pub theta: f64,
    /// Energy-shift part `e^{−1/2} U₁ t/ħ`.
    pub energy_phase: f64,
}

impl PhaseRecord {
    pub fn total(&self) -> f64 {
        self.theta + self.energy_phase
    }
}

/// Time-ordered hardware schedule with the accumulated-phase bookkeeping.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub segments: Vec<PulseSegment>,
    pub phase_records: Vec<PhaseRecord>,
}

impl PulseSchedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration >= 0.0) || !s.duration.is_finite() {
                return Err(GkpError::InvalidParameters(format!(
                    "segment {i}: duration must be finite and non-negative"
                )));
            }
            if let SegmentKind::DepthRamp { target_factor } = s.kind {
                if !(target_factor > 0.0 && target_factor <= 1.0) {
                    return Err(GkpError::InvalidParameters(format!(
                        "segment {i}: ramp target factor must lie in (0, 1]"
                    )));
                }
            }
            if let SegmentKind::TuneoutPulse { ref beams } = s.kind {
                for b in beams {
                    if !(b.offset.abs() > 0.0) {
                        return Err(GkpError::InvalidParameters(format!(
                            "segment {i}: beam offset must be nonzero"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Recorded time series of a hardware run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub delta_x: Vec<f64>,
    pub delta_z: Vec<f64>,
    pub spectator_ground_pop: Vec<f64>,
    pub leakage: Vec<f64>,
    /// Reduced state of the grid mode at the end of the run.
    pub final_state: fock::OscState,
    pub warnings: Vec<crate::warn::SimWarning>,
}

impl Trajectory {
    pub fn push_sample(&mut self, t: f64, dx: f64, dz: f64, pop: f64, leak: f64) {
        self.times.push(t);
        self.delta_x.push(dx);
        self.delta_z.push(dz);
        self.spectator_ground_pop.push(pop);
        self.leakage.push(leak);
    }
}

/// Force and potential-energy shift of a tune-out beam parked at half its
/// waist from the trap center (where the beam curvature vanishes):
/// `f = 2 e^{−1/2} U₁ / w₁`, shift `e^{−1/2} U₁`.
pub fn tuneout_force(peak_u1: f64, waist_w1: f64) -> Result<(f64, f64)> {
    if !(peak_u1 > 0.0 && waist_w1 > 0.0) {
        return Err(GkpError::InvalidParameters(
            "tuneout_force: inputs must be positive".into(),
        ));
    }
    let e_half = (-0.5f64).exp();
    Ok((2.0 * e_half * peak_u1 / waist_w1, e_half * peak_u1))
}

/// Phase-space displacement of the trap center under a constant force:
/// `α_d = f / √(ħ m ω³)`.
pub fn displacement_amplitude(force: f64, mass: f64, omega: f64) -> Result<f64> {
    if !(mass > 0.0 && omega > 0.0) {
        return Err(GkpError::InvalidParameters(
            "displacement_amplitude: mass and omega must be positive".into(),
        ));
    }
    Ok(force / (HBAR * mass * omega.powi(3)).sqrt())
}

/// Geometric phase `θ(t) = ½ α_d² (ωt − sin ωt)` of a force pulse.
pub fn displacement_phase(alpha_d: f64, omega: f64, t: f64) -> f64 {
    0.5 * alpha_d * alpha_d * (omega * t - (omega * t).sin())
}

/// Closed-form unitary of a trap-depth quench held for time `t`.
pub fn quench_squeeze_unitary(omega: f64, omega_prime: f64, t: f64, dim: usize) -> Result<FockOperator> {
    if !(omega > 0.0 && omega_prime > 0.0) {
        return Err(GkpError::InvalidParameters(
            "quench_squeeze_unitary: frequencies must be positive".into(),
        ));
    }
    let r = 0.5 * (omega / omega_prime).ln();
    let phase = C64::from_polar(1.0, -2.0 * omega_prime * t);
    let s1 = fock::squeeze(C64::new(-r, 0.0), dim)?;
    let s2 = fock::squeeze(C64::new(r, 0.0) * phase, dim)?;
    let rot = fock::rotation(omega_prime * t, dim)?;
    s1.mul(&s2)?.mul(&rot)
}

/// Closed-form unitary of a constant-force pulse of duration `t`.
pub fn pulsed_displacement_unitary(alpha_d: f64, omega: f64, t: f64, dim: usize) -> Result<FockOperator> {
    let wt = omega * t;
    let amp = C64::new(alpha_d, 0.0) * (C64::new(1.0, 0.0) - C64::from_polar(1.0, -wt));
    let d = fock::displacement(amp, dim)?;
    let rot = fock::rotation(wt, dim)?;
    let phase = C64::from_polar(1.0, displacement_phase(alpha_d, omega, t));
    Ok(d.mul(&rot)?.scale(phase))
}

/// Closed-form unitary of the idle–force–idle sandwich spanning one full
/// oscillator period: `D(−2i α_d sin(ωt/2)) e^{iθ(t)}`.
pub fn sandwiched_displacement(alpha_d: f64, omega: f64, t: f64, dim: usize) -> Result<FockOperator> {
    let amp = C64::new(0.0, -2.0 * alpha_d * (omega * t / 2.0).sin());
    let d = fock::displacement(amp, dim)?;
    let phase = C64::from_polar(1.0, displacement_phase(alpha_d, omega, t));
    Ok(d.scale(phase))
}

/// Smallest positive pulse duration with `2 α_d sin(ωt/2) = target`.
pub fn solve_pulse_duration(target_distance: f64, alpha_d: f64, omega: f64) -> Result<f64> {
    if !(target_distance >= 0.0) {
        return Err(GkpError::InvalidParameters(
            "solve_pulse_duration: target must be non-negative".into(),
        ));
    }
    let reach = 2.0 * alpha_d.abs();
    if target_distance > reach {
        return Err(GkpError::Unreachable(format!(
            "target distance {target_distance:.4} exceeds 2|alpha_d| = {reach:.4}"
        )));
    }
    Ok(2.0 * (target_distance / reach).asin() / omega)
}
