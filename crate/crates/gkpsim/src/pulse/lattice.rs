//! End-to-end grid-state preparation in the lattice: ramped quench
//! squeezing, stroboscopic alignment, then corrective displacement rounds
//! driven by tune-out beams, with the ancilla reset after every round.
//!
//! After the pure squeeze stage the simulation switches to a mixed stage
//! at reduced transverse cutoffs. The mixed state is propagated as an
//! exact branch expansion: each ancilla reset splits every branch vector
//! in two, so `r` rounds produce `2^r` deterministic branches whose sum of
//! outer products is the density matrix. Constant-Hamiltonian segments are
//! applied through cached eigendecompositions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::constants::HBAR;
use crate::error::{GkpError, Result};
use crate::fock::evolve::EvolutionConfig;
use crate::fock::{self, OscState};
use crate::gkp::{self, GkpCode};
use crate::linalg;
use crate::protocols::{DeltaSchedule, RoundRecord};
use crate::trap::{LatticeSpec, OscillatorParams};
use crate::warn::SimWarning;

use super::quench::{
    beam_tensor_op, build_lattice_hamiltonian, grid_mode_metrics, population_leakage,
    simulate_quench, spectator_ground_pop, QuenchConfig,
};
use super::{
    displacement_amplitude, displacement_phase, solve_pulse_duration, tuneout_force, PhaseRecord,
    PulseSchedule, PulseSegment, RotationAxis, SegmentKind, Trajectory, TuneoutBeam,
};

/// How conditional displacements are realized in the mixed stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DisplacementMode {
    /// Tune-out beams added to the trap potential: all anharmonic orders
    /// of beam and trap are included.
    ExactBeam,
    /// Ideal sandwich unitaries `D(−2iα_d sin(ωt/2)) e^{iθ}` per branch,
    /// with the trap still evolving during idles and gates.
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct LatticePrepConfig {
    pub trap: LatticeSpec,
    /// Cutoffs of the pure squeeze stage `[x, y, z]`.
    pub dims_squeeze: [usize; 3],
    /// Cutoffs of the mixed displacement stage `[x, y, z]`.
    pub dims_mixed: [usize; 3],
    pub schedule: DeltaSchedule,
    pub depth_factor: f64,
    pub ramp_duration: f64,
    /// Shallow-phase hold; `None` = quarter period of the shallow mode.
    pub hold: Option<f64>,
    /// Tune-out beam peak depth, J.
    pub beam_u1: f64,
    /// Tune-out beam waist, m.
    pub beam_waist: f64,
    /// Ancilla Rabi frequency, rad/s.
    pub rabi: f64,
    pub displacement_mode: DisplacementMode,
    /// Replace the exact trap potential by the harmonic basis potential
    /// (anharmonicity and coupling switched off).
    pub harmonic_override: bool,
    /// Skip the quench and start the mixed stage from an ideal
    /// position-squeezed grid mode with this effective squeezing.
    pub initial_z_squeeze: Option<f64>,
    pub evo: EvolutionConfig,
    pub sample_dt: f64,
}

impl Default for LatticePrepConfig {
    fn default() -> Self {
        Self {
            trap: LatticeSpec::sr88_default(),
            dims_squeeze: [8, 8, 36],
            dims_mixed: [3, 3, 36],
            schedule: DeltaSchedule::preparation(vec![1.0, 0.5, 0.303]),
            depth_factor: 0.1,
            ramp_duration: 20e-6,
            hold: None,
            beam_u1: HBAR * 2.0 * PI * 2e6,
            beam_waist: 20e-6,
            rabi: 2.0 * PI * 100e3,
            displacement_mode: DisplacementMode::ExactBeam,
            harmonic_override: false,
            initial_z_squeeze: None,
            evo: EvolutionConfig {
                leak_warn: 1e-3,
                ..EvolutionConfig::default()
            },
            sample_dt: 2e-6,
        }
    }
}

/// Exact branch expansion of the mixed state: the density matrix is
/// `Σ_b |v_b⟩⟨v_b|` (branch norms carry the weights, `Σ‖v_b‖² = 1`).
#[derive(Debug, Clone)]
pub struct BranchMixture {
    pub shape: Vec<usize>,
    pub branches: Vec<DVector<C64>>,
}

impl BranchMixture {
    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.norm_squared()).sum()
    }

    /// Reduced density matrix of the grid mode (last axis).
    pub fn grid_mode_density(&self) -> DMatrix<C64> {
        let dz = *self.shape.last().unwrap();
        let mut rho = DMatrix::<C64>::zeros(dz, dz);
        for v in &self.branches {
            let chunks = v.len() / dz;
            for c in 0..chunks {
                let base = c * dz;
                for i in 0..dz {
                    let vi = v[base + i];
                    if vi == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..dz {
                        rho[(i, j)] += vi * v[base + j].conj();
                    }
                }
            }
        }
        rho
    }

    fn populations(&self) -> Vec<f64> {
        let n = self.branches[0].len();
        let mut pops = vec![0.0; n];
        for v in &self.branches {
            for (i, z) in v.iter().enumerate() {
                pops[i] += z.norm_sqr();
            }
        }
        pops
    }
}

/// Propagator of a constant Hamiltonian from one eigendecomposition.
struct Propagator {
    evals: DVector<f64>,
    evecs: DMatrix<C64>,
}

impl Propagator {
    fn new(h: &DMatrix<C64>) -> Self {
        let (evals, evecs) = linalg::eigh(h);
        Self { evals, evecs }
    }

    fn apply(&self, v: &DVector<C64>, t: f64) -> DVector<C64> {
        let mut coeffs = self.evecs.adjoint() * v;
        for k in 0..coeffs.len() {
            coeffs[k] *= C64::from_polar(1.0, -self.evals[k] * t);
        }
        &self.evecs * coeffs
    }
}

pub struct LatticePrepOutcome {
    pub trajectory: Trajectory,
    pub schedule: PulseSchedule,
    pub round_records: Vec<RoundRecord>,
    pub mixture: BranchMixture,
    pub params: OscillatorParams,
    /// Conditional trap-center displacement of the tune-out beams.
    pub alpha_d: f64,
    /// Stroboscopic reference period `2π/ω̃_z`.
    pub period: f64,
}

/// Apply a 2×2 ancilla gate to a branch vector (ancilla is axis 0).
fn apply_ancilla_gate(v: &DVector<C64>, g: &[[C64; 2]; 2]) -> DVector<C64> {
    let half = v.len() / 2;
    let mut out = DVector::zeros(v.len());
    for i in 0..half {
        let a = v[i];
        let b = v[half + i];
        out[i] = g[0][0] * a + g[0][1] * b;
        out[half + i] = g[1][0] * a + g[1][1] * b;
    }
    out
}

/// Apply per-ancilla-branch operators on the grid mode (last axis).
fn apply_conditional_grid(v: &DVector<C64>, d0: &DMatrix<C64>, d1: &DMatrix<C64>, dz: usize) -> DVector<C64> {
    let half = v.len() / 2;
    let chunks = half / dz;
    let mut out = DVector::zeros(v.len());
    for (anc, d) in [(0usize, d0), (1usize, d1)] {
        let offset = anc * half;
        for c in 0..chunks {
            let base = offset + c * dz;
            for i in 0..dz {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..dz {
                    acc += d[(i, j)] * v[base + j];
                }
                out[base + i] = acc;
            }
        }
    }
    out
}

fn covariance_sharp_axis(rho_z: &DMatrix<C64>, dz: usize) -> Result<f64> {
    let (q, p) = fock::quadratures(dz)?;
    let q2 = linalg::matmul(q.matrix(), q.matrix());
    let p2 = linalg::matmul(p.matrix(), p.matrix());
    let qp = linalg::matmul(q.matrix(), p.matrix());
    let pq = linalg::matmul(p.matrix(), q.matrix());
    let tr = |m: &DMatrix<C64>| linalg::trace_of_product(m, rho_z).re;
    let mq = tr(q.matrix());
    let mp = tr(p.matrix());
    let cqq = tr(&q2) - mq * mq;
    let cpp = tr(&p2) - mp * mp;
    let cqp = 0.5 * (tr(&qp) + tr(&pq)) - mq * mp;
    // major-axis angle of the covariance ellipse; sharp axis is orthogonal
    let theta_major = 0.5 * (2.0 * cqp).atan2(cqq - cpp);
    Ok(theta_major + PI / 2.0)
}

/// Run the full preparation: quench squeeze, alignment, then the
/// corrective rounds of the schedule.
pub fn run_lattice_preparation(cfg: &LatticePrepConfig) -> Result<LatticePrepOutcome> {
    cfg.schedule.validate()?;
    cfg.evo.validate()?;
    let dz = cfg.dims_mixed[2];
    if cfg.dims_squeeze[2] != dz {
        return Err(GkpError::InvalidParameters(
            "squeeze and mixed stages must share the grid-mode cutoff".into(),
        ));
    }

    let code = GkpCode::square();
    let code_ops = gkp::stabilizers(&code, dz)?;
    let mut schedule = PulseSchedule::default();
    let mut traj = Trajectory {
        times: Vec::new(),
        delta_x: Vec::new(),
        delta_z: Vec::new(),
        spectator_ground_pop: Vec::new(),
        leakage: Vec::new(),
        final_state: OscState::vacuum(dz)?,
        warnings: Vec::new(),
    };

    // ---------------- stage A: squeeze + alignment ----------------
    let lh_squeeze = build_lattice_hamiltonian(
        &cfg.trap,
        cfg.dims_squeeze,
        false,
        cfg.harmonic_override,
    )?;
    let omega = lh_squeeze.basis_omega[2];
    let period = 2.0 * PI / omega;

    let (mut mixture, mut t_cursor) = if let Some(delta0) = cfg.initial_z_squeeze {
        // idealized entry point: position-squeezed grid mode, transverse
        // vacuum, ancilla |0⟩
        let base = fock::squeezed_vacuum_amplitudes(-delta0.ln(), dz);
        let nrm = base.norm();
        let base = base / C64::new(nrm, 0.0);
        let [dx, dy, _] = cfg.dims_mixed;
        let mut v = DVector::<C64>::zeros(2 * dx * dy * dz);
        for i in 0..dz {
            v[i] = base[i]; // ancilla 0, x = y = 0
        }
        let shape = vec![2, dx, dy, dz];
        let (dxm, dzm) = grid_mode_metrics(&v, &shape, &code_ops);
        traj.push_sample(0.0, dxm, dzm, 1.0, 0.0);
        (
            BranchMixture {
                shape,
                branches: vec![v],
            },
            0.0,
        )
    } else {
        let qcfg = QuenchConfig {
            trap: cfg.trap,
            dims: cfg.dims_squeeze,
            depth_factor: cfg.depth_factor,
            ramp_duration: cfg.ramp_duration,
            hold: cfg.hold,
            harmonic_override: cfg.harmonic_override,
            sample_dt: cfg.sample_dt,
            evo: cfg.evo,
        };
        schedule.segments.push(PulseSegment {
            kind: SegmentKind::DepthRamp {
                target_factor: cfg.depth_factor,
            },
            duration: cfg.ramp_duration,
        });
        schedule.segments.push(PulseSegment {
            kind: SegmentKind::Idle,
            duration: qcfg
                .hold
                .unwrap_or(PI / (2.0 * omega * cfg.depth_factor.sqrt())),
        });
        schedule.segments.push(PulseSegment {
            kind: SegmentKind::DepthRamp { target_factor: 1.0 },
            duration: cfg.ramp_duration,
        });
        let out = simulate_quench(&qcfg)?;
        for (i, &t) in out.trajectory.times.iter().enumerate() {
            traj.push_sample(
                t,
                out.trajectory.delta_x[i],
                out.trajectory.delta_z[i],
                out.trajectory.spectator_ground_pop[i],
                out.trajectory.leakage[i],
            );
        }
        traj.warnings.extend(out.trajectory.warnings.iter().cloned());

        // stroboscopic alignment: rotate the compressed axis onto q
        let rho_z = out.trajectory.final_state.density_matrix();
        let phi = covariance_sharp_axis(&rho_z, dz)?;
        let mut t_align = (phi.rem_euclid(PI)) / omega;
        if t_align < 1e-12 {
            t_align = 0.0;
        }
        let h_full = {
            let mut h = lh_squeeze.kinetic.to_dense().matrix().clone();
            h += lh_squeeze.potential.to_dense().matrix();
            h
        };
        // dims_squeeze dense H is large; evolve by Lanczos on the tensor op
        let aligned = if t_align > 0.0 {
            schedule.segments.push(PulseSegment {
                kind: SegmentKind::Idle,
                duration: t_align,
            });
            let mut th = crate::fock::evolve::TensorHamiltonian::new(lh_squeeze.shape.clone());
            th.add_part(crate::fock::evolve::TimeProfile::Constant(1.0), lh_squeeze.kinetic.clone())?;
            th.add_part(crate::fock::evolve::TimeProfile::Constant(1.0), lh_squeeze.potential.clone())?;
            let _ = h_full;
            fock::evolve::evolve_time_dep(
                &out.final_full_state,
                &th,
                out.duration,
                t_align,
                &cfg.evo,
                |_, _| {},
            )?
        } else {
            out.final_full_state.clone()
        };
        let t_now = out.duration + t_align;
        {
            let v = aligned.pure_vector().unwrap();
            let (dxm, dzm) = grid_mode_metrics(v, &lh_squeeze.shape, &code_ops);
            let pop = spectator_ground_pop(v, &lh_squeeze.shape);
            traj.push_sample(t_now, dxm, dzm, pop, 0.0);
        }

        // truncate to the mixed-stage cutoffs and attach the ancilla
        let [dxs, dys, _] = cfg.dims_squeeze;
        let [dxm, dym, _] = cfg.dims_mixed;
        if dxm > dxs || dym > dys {
            return Err(GkpError::InvalidParameters(
                "mixed-stage cutoffs exceed squeeze-stage cutoffs".into(),
            ));
        }
        let v_big = aligned.pure_vector().unwrap();
        let mut v_small = DVector::<C64>::zeros(2 * dxm * dym * dz);
        for x in 0..dxm {
            for y in 0..dym {
                for z in 0..dz {
                    let src = (x * dys + y) * dz + z;
                    let dst = ((0 * dxm + x) * dym + y) * dz + z;
                    v_small[dst] = v_big[src];
                }
            }
        }
        let kept = v_small.norm_squared();
        if 1.0 - kept > 1e-6 {
            traj.warnings.push(SimWarning::TruncatedWeight {
                context: "squeeze → mixed stage handoff".into(),
                lost: 1.0 - kept,
            });
        }
        v_small /= C64::new(kept.sqrt(), 0.0);
        (
            BranchMixture {
                shape: vec![2, dxm, dym, dz],
                branches: vec![v_small],
            },
            t_now,
        )
    };

    // ---------------- stage B: corrective rounds ----------------
    let lh_mixed = build_lattice_hamiltonian(&cfg.trap, cfg.dims_mixed, true, cfg.harmonic_override)?;
    let shape_mixed = lh_mixed.shape.clone();
    let length_z = (HBAR / (cfg.trap.mass * omega)).sqrt();

    let (force, energy_shift) = tuneout_force(cfg.beam_u1, cfg.beam_waist)?;
    let alpha_d = displacement_amplitude(force, cfg.trap.mass, omega)?;
    let beams = vec![
        TuneoutBeam {
            peak_u1: cfg.beam_u1,
            waist_w1: cfg.beam_waist,
            offset: -cfg.beam_waist / 2.0,
            target_state: 0,
        },
        TuneoutBeam {
            peak_u1: cfg.beam_u1,
            waist_w1: cfg.beam_waist,
            offset: cfg.beam_waist / 2.0,
            target_state: 1,
        },
    ];

    let h_trap_dense = {
        let mut h = lh_mixed.kinetic.to_dense().matrix().clone();
        h += lh_mixed.potential.to_dense().matrix();
        h
    };
    let prop_trap = Propagator::new(&h_trap_dense);
    let prop_beams = if cfg.displacement_mode == DisplacementMode::ExactBeam {
        let mut h = h_trap_dense.clone();
        for b in &beams {
            h += beam_tensor_op(b, &shape_mixed, 3, length_z)?.to_dense().matrix();
        }
        Some(Propagator::new(&h))
    } else {
        None
    };

    let t_ref = t_cursor;
    let phase_of = |t: f64| (omega * (t - t_ref)).rem_euclid(2.0 * PI);

    let hadamard = {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        [[s, s], [s, -s]]
    };
    let rx_m90 = {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let is = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        [[s, is], [is, s]]
    };

    let t_stab = solve_pulse_duration(PI.sqrt(), alpha_d.abs(), omega)?;
    let guard = cfg.evo.guard_band;

    let mut evolve_all = |mixture: &mut BranchMixture, prop: &Propagator, dt: f64| {
        if dt <= 0.0 {
            return;
        }
        for b in mixture.branches.iter_mut() {
            *b = prop.apply(b, dt);
        }
    };

    let sample = |traj: &mut Trajectory, mixture: &BranchMixture, t: f64| {
        let mut rho = mixture.grid_mode_density();
        let tr = rho.trace().re;
        if tr > 0.0 {
            rho /= C64::new(tr, 0.0);
        }
        let ex = linalg::trace_of_product(code_ops.0.matrix(), &rho).norm();
        let ez = linalg::trace_of_product(code_ops.1.matrix(), &rho).norm();
        let to_delta = |m: f64| {
            if m < 1e-12 {
                f64::INFINITY
            } else {
                ((1.0 / (m * m)).ln() / (2.0 * PI)).max(0.0).sqrt()
            }
        };
        let pop: f64 = mixture
            .branches
            .iter()
            .map(|v| spectator_ground_pop(v, &mixture.shape))
            .sum();
        let leak = population_leakage(&mixture.populations(), &mixture.shape, guard);
        traj.push_sample(t, to_delta(ex), to_delta(ez), pop, leak);
        (to_delta(ex), to_delta(ez), leak)
    };

    let mut round_records = Vec::new();
    let root_pi = PI.sqrt();

    for (k, (&delta_k, &eps_k)) in cfg
        .schedule
        .deltas
        .iter()
        .zip(cfg.schedule.epsilons.iter())
        .enumerate()
    {
        let t_corr = solve_pulse_duration(delta_k * root_pi / 4.0, alpha_d.abs(), omega)?;
        let t_eps = if eps_k > 0.0 {
            Some(solve_pulse_duration(eps_k * root_pi / 4.0, alpha_d.abs(), omega)?)
        } else {
            None
        };

        // Hadamard gate: trap evolution flanks the ideal rotation
        let t_gate_h = PI / cfg.rabi;
        evolve_all(&mut mixture, &prop_trap, t_gate_h / 2.0);
        for b in mixture.branches.iter_mut() {
            *b = apply_ancilla_gate(b, &hadamard);
        }
        evolve_all(&mut mixture, &prop_trap, t_gate_h / 2.0);
        t_cursor += t_gate_h;
        schedule.segments.push(PulseSegment {
            kind: SegmentKind::AncillaRotation {
                axis: RotationAxis::Hadamard,
                angle: PI,
                rabi: cfg.rabi,
            },
            duration: t_gate_h,
        });

        // optional conditional pre-rotation pulse (momentum direction)
        if let Some(t_e) = t_eps {
            run_pulse(
                &mut mixture,
                &mut t_cursor,
                &mut schedule,
                0.0,
                t_e,
                omega,
                period,
                alpha_d,
                energy_shift,
                &phase_of,
                &prop_trap,
                prop_beams.as_ref(),
                &beams,
                cfg.displacement_mode,
                dz,
                &mut evolve_all,
            )?;
        }

        // conditional stabilizer halves: position direction, start phase 3π/2
        run_pulse(
            &mut mixture,
            &mut t_cursor,
            &mut schedule,
            1.5 * PI,
            t_stab,
            omega,
            period,
            alpha_d,
            energy_shift,
            &phase_of,
            &prop_trap,
            prop_beams.as_ref(),
            &beams,
            cfg.displacement_mode,
            dz,
            &mut evolve_all,
        )?;

        // R_X(−π/2)
        let t_gate_rx = (PI / 2.0) / cfg.rabi;
        evolve_all(&mut mixture, &prop_trap, t_gate_rx / 2.0);
        for b in mixture.branches.iter_mut() {
            *b = apply_ancilla_gate(b, &rx_m90);
        }
        evolve_all(&mut mixture, &prop_trap, t_gate_rx / 2.0);
        t_cursor += t_gate_rx;
        schedule.segments.push(PulseSegment {
            kind: SegmentKind::AncillaRotation {
                axis: RotationAxis::X,
                angle: -PI / 2.0,
                rabi: cfg.rabi,
            },
            duration: t_gate_rx,
        });

        // conditional correction: momentum direction, start phase 0
        run_pulse(
            &mut mixture,
            &mut t_cursor,
            &mut schedule,
            0.0,
            t_corr,
            omega,
            period,
            alpha_d,
            energy_shift,
            &phase_of,
            &prop_trap,
            prop_beams.as_ref(),
            &beams,
            cfg.displacement_mode,
            dz,
            &mut evolve_all,
        )?;

        // ancilla reset: split every branch, renormalize truncation loss
        let mut children = Vec::with_capacity(mixture.branches.len() * 2);
        let half = mixture.branches[0].len() / 2;
        for v in &mixture.branches {
            for anc in 0..2usize {
                let mut child = DVector::<C64>::zeros(v.len());
                for i in 0..half {
                    child[i] = v[anc * half + i];
                }
                if child.norm_squared() > 1e-14 {
                    children.push(child);
                }
            }
        }
        mixture.branches = children;
        schedule.segments.push(PulseSegment {
            kind: SegmentKind::AncillaReset,
            duration: 0.0,
        });
        let weight = mixture.total_weight();
        if (1.0 - weight).abs() > 1e-6 {
            traj.warnings.push(SimWarning::TruncatedWeight {
                context: format!("round {} channel", k + 1),
                lost: 1.0 - weight,
            });
        }
        let scale = C64::new(1.0 / weight.sqrt(), 0.0);
        for b in mixture.branches.iter_mut() {
            *b *= scale;
        }

        let (dxm, dzm, leak) = sample(&mut traj, &mixture, t_cursor);
        round_records.push(RoundRecord {
            round: k + 1,
            delta: delta_k,
            epsilon: eps_k,
            delta_x: dxm,
            delta_z: dzm,
            trace: weight,
            leakage: leak,
            branch_prob: 1.0,
        });
    }

    let mut rho = mixture.grid_mode_density();
    let tr = rho.trace().re;
    rho /= C64::new(tr, 0.0);
    traj.final_state = OscState::mixed(rho, vec![dz])?;

    Ok(LatticePrepOutcome {
        trajectory: traj,
        schedule,
        round_records,
        mixture,
        params: lh_mixed.params,
        alpha_d,
        period,
    })
}

/// One conditional displacement pulse: idle to the start phase, then the
/// full-period sandwich (exact beams or the closed-form unitary), then the
/// compensating ancilla-phase rotation from the bookkeeping records.
#[allow(clippy::too_many_arguments)]
fn run_pulse(
    mixture: &mut BranchMixture,
    t_cursor: &mut f64,
    schedule: &mut PulseSchedule,
    start_phase: f64,
    t_pulse: f64,
    omega: f64,
    period: f64,
    alpha_d: f64,
    energy_shift: f64,
    phase_of: &impl Fn(f64) -> f64,
    prop_trap: &Propagator,
    prop_beams: Option<&Propagator>,
    beams: &[TuneoutBeam],
    mode: DisplacementMode,
    dz: usize,
    evolve_all: &mut impl FnMut(&mut BranchMixture, &Propagator, f64),
) -> Result<()> {
    // idle onto the stroboscopic start phase
    let cur = phase_of(*t_cursor);
    let mut dt_align = (start_phase - cur).rem_euclid(2.0 * PI) / omega;
    if dt_align < 1e-12 || (2.0 * PI / omega - dt_align) < 1e-12 {
        dt_align = 0.0;
    }
    if dt_align > 0.0 {
        evolve_all(mixture, prop_trap, dt_align);
        *t_cursor += dt_align;
        schedule.segments.push(PulseSegment {
            kind: SegmentKind::Idle,
            duration: dt_align,
        });
    }

    let theta = displacement_phase(alpha_d, omega, t_pulse);
    match mode {
        DisplacementMode::ExactBeam => {
            let pad = period / 2.0 - t_pulse / 2.0;
            evolve_all(mixture, prop_trap, pad);
            let prop = prop_beams.expect("beam propagator prepared in ExactBeam mode");
            evolve_all(mixture, prop, t_pulse);
            evolve_all(mixture, prop_trap, pad);
            schedule.segments.push(PulseSegment {
                kind: SegmentKind::Idle,
                duration: pad,
            });
            schedule.segments.push(PulseSegment {
                kind: SegmentKind::TuneoutPulse {
                    beams: beams.to_vec(),
                },
                duration: t_pulse,
            });
            schedule.segments.push(PulseSegment {
                kind: SegmentKind::Idle,
                duration: pad,
            });
        }
        DisplacementMode::ClosedForm => {
            // a full idle period, then the net sandwich displacement. The
            // sandwich is a lab-frame operator: its amplitude carries no
            // start-phase factor — the direction control lives entirely in
            // the stroboscopic scheduling of the start time.
            evolve_all(mixture, prop_trap, period);
            let amp1 = C64::new(0.0, -2.0 * alpha_d * (omega * t_pulse / 2.0).sin());
            let amp0 = -amp1;
            let phase = C64::from_polar(1.0, theta);
            let d0 = fock::displacement(amp0, dz)?.scale(phase);
            let d1 = fock::displacement(amp1, dz)?.scale(phase);
            for b in mixture.branches.iter_mut() {
                *b = apply_conditional_grid(b, d0.matrix(), d1.matrix(), dz);
            }
            schedule.segments.push(PulseSegment {
                kind: SegmentKind::TuneoutPulse {
                    beams: beams.to_vec(),
                },
                duration: period,
            });
        }
    }
    *t_cursor += period;

    // phase bookkeeping: θ(t) + e^{−1/2}U₁ t/ħ per beam, compensated by a
    // qubit-only rotation of the branch-phase difference
    let seg_idx = schedule.segments.len() - 1;
    let mut branch_phase = [0.0f64; 2];
    for b in beams {
        let rec = PhaseRecord {
            segment_index: seg_idx,
            target_state: b.target_state,
            theta,
            energy_phase: energy_shift * t_pulse / HBAR,
        };
        branch_phase[b.target_state as usize] += rec.total();
        schedule.phase_records.push(rec);
    }
    let relative = branch_phase[1] - branch_phase[0];
    if relative != 0.0 {
        let comp = [
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::from_polar(1.0, relative)],
        ];
        for b in mixture.branches.iter_mut() {
            *b = apply_ancilla_gate(b, &comp);
        }
        schedule.segments.push(PulseSegment {
            kind: SegmentKind::AncillaRotation {
                axis: RotationAxis::Z,
                angle: relative,
                rabi: f64::INFINITY,
            },
            duration: 0.0,
        });
    }
    Ok(())
}
