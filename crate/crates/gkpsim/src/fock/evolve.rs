//! Time evolution of states under constant or time-dependent Hamiltonians.
//!
//! Hamiltonians are expressed in angular-frequency units (`H/ħ`, rad/s), so
//! `evolve` integrates `i dψ/dt = (H/ħ) ψ`. Time-dependent Hamiltonians are
//! handled by piecewise-constant midpoint sampling with step halving until
//! the local error meets `step_tol`; each frozen step is propagated by the
//! Lanczos scheme from [`super::krylov`].
//!
//! Large multi-mode Hamiltonians are kept as sums of tensor-product terms
//! ([`TensorOp`]), applied mode by mode; the composite matrix is never
//! formed during propagation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{GkpError, Result};
use crate::fock::{leakage, FockOperator, KrylovOptions, OscState, StateData};
use crate::linalg;
use crate::warn::SimWarning;

#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    /// Local error target per accepted step.
    pub step_tol: f64,
    /// Upper bound on the outer step, seconds.
    pub max_step: f64,
    /// Number of top Fock levels monitored for truncation leakage.
    pub guard_band: usize,
    /// Leakage level above which a truncation warning is attached.
    pub leak_warn: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            step_tol: 1e-9,
            max_step: f64::INFINITY,
            guard_band: 5,
            leak_warn: 1e-6,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_tol > 0.0) {
            return Err(GkpError::InvalidParameters("step_tol must be > 0".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(GkpError::InvalidParameters("max_step must be > 0".into()));
        }
        if self.guard_band < 1 {
            return Err(GkpError::InvalidParameters("guard_band must be >= 1".into()));
        }
        if !(self.leak_warn > 0.0 && self.leak_warn < 1.0) {
            return Err(GkpError::InvalidParameters("leak_warn must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn krylov(&self) -> KrylovOptions {
        KrylovOptions {
            tol: self.step_tol.min(1e-12),
            ..KrylovOptions::default()
        }
    }
}

/// One tensor-product term `coeff · M₀ ⊗ M₁ ⊗ …` with `None` standing for
/// the identity on that subsystem.
#[derive(Debug, Clone)]
pub struct TensorTerm {
    pub coeff: f64,
    pub factors: Vec<Option<DMatrix<C64>>>,
}

/// Sum of tensor-product terms over a fixed mode shape. Factors must be
/// Hermitian and coefficients real, so the sum is Hermitian by construction.
#[derive(Debug, Clone)]
pub struct TensorOp {
    shape: Vec<usize>,
    terms: Vec<TensorTerm>,
}

impl TensorOp {
    pub fn new(shape: Vec<usize>) -> Self {
        Self {
            shape,
            terms: Vec::new(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn add_term(&mut self, coeff: f64, factors: Vec<Option<DMatrix<C64>>>) -> Result<()> {
        if factors.len() != self.shape.len() {
            return Err(GkpError::ShapeMismatch(format!(
                "term has {} factors for {} subsystems",
                factors.len(),
                self.shape.len()
            )));
        }
        for (k, f) in factors.iter().enumerate() {
            if let Some(m) = f {
                if m.nrows() != self.shape[k] || m.ncols() != self.shape[k] {
                    return Err(GkpError::ShapeMismatch(format!(
                        "factor {k} is {}x{}, subsystem dim is {}",
                        m.nrows(),
                        m.ncols(),
                        self.shape[k]
                    )));
                }
                if linalg::hermiticity_defect(m) > 1e-9 {
                    return Err(GkpError::InvalidInput(format!(
                        "factor {k} is not Hermitian"
                    )));
                }
            }
        }
        self.terms.push(TensorTerm { coeff, factors });
        Ok(())
    }

    /// `out += scale · (Σ terms) · v`
    pub fn apply_add(&self, v: &DVector<C64>, scale: f64, out: &mut DVector<C64>) {
        let mut buf_a = DVector::<C64>::zeros(v.len());
        let mut buf_b = DVector::<C64>::zeros(v.len());
        for term in &self.terms {
            // 0: still reading from v; 1: current in buf_a; 2: in buf_b
            let mut loc = 0u8;
            for (k, f) in term.factors.iter().enumerate() {
                if let Some(m) = f {
                    match loc {
                        0 => {
                            apply_mode(m, v, &self.shape, k, &mut buf_a);
                            loc = 1;
                        }
                        1 => {
                            apply_mode(m, &buf_a, &self.shape, k, &mut buf_b);
                            loc = 2;
                        }
                        _ => {
                            apply_mode(m, &buf_b, &self.shape, k, &mut buf_a);
                            loc = 1;
                        }
                    }
                }
            }
            let c = C64::new(scale * term.coeff, 0.0);
            match loc {
                0 => out.axpy(c, v, C64::new(1.0, 0.0)),
                1 => out.axpy(c, &buf_a, C64::new(1.0, 0.0)),
                _ => out.axpy(c, &buf_b, C64::new(1.0, 0.0)),
            }
        }
    }

    /// Dense matrix form (for small shapes, tests and the mixed stage).
    pub fn to_dense(&self) -> FockOperator {
        let d = self.dim();
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for term in &self.terms {
            let mut kron = DMatrix::<C64>::identity(1, 1);
            for (k, f) in term.factors.iter().enumerate() {
                let m = match f {
                    Some(m) => m.clone(),
                    None => DMatrix::identity(self.shape[k], self.shape[k]),
                };
                kron = kron.kronecker(&m);
            }
            acc += kron * C64::new(term.coeff, 0.0);
        }
        FockOperator::new(acc, self.shape.clone()).expect("shape consistent by construction")
    }
}

/// Apply a single-mode matrix to axis `k` of the row-major state vector.
fn apply_mode(m: &DMatrix<C64>, v: &DVector<C64>, shape: &[usize], k: usize, out: &mut DVector<C64>) {
    let d = shape[k];
    let inner: usize = shape[k + 1..].iter().product();
    let outer: usize = shape[..k].iter().product();
    out.fill(C64::new(0.0, 0.0));
    for o in 0..outer {
        let block = o * d * inner;
        for c in 0..d {
            let src = block + c * inner;
            for r in 0..d {
                let mrc = m[(r, c)];
                if mrc == C64::new(0.0, 0.0) {
                    continue;
                }
                let dst = block + r * inner;
                for i in 0..inner {
                    out[dst + i] += mrc * v[src + i];
                }
            }
        }
    }
}

/// Time profile multiplying a [`TensorOp`] part.
#[derive(Debug, Clone)]
pub enum TimeProfile {
    Constant(f64),
    /// Linear interpolation through `(t, value)` knots, clamped outside.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => *c,
            TimeProfile::PiecewiseLinear(knots) => {
                if knots.is_empty() {
                    return 0.0;
                }
                if t <= knots[0].0 {
                    return knots[0].1;
                }
                for w in knots.windows(2) {
                    let (t0, v0) = w[0];
                    let (t1, v1) = w[1];
                    if t <= t1 {
                        if t1 == t0 {
                            return v1;
                        }
                        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                    }
                }
                knots.last().unwrap().1
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, TimeProfile::Constant(_))
    }
}

/// `H(t)/ħ = Σ profileₖ(t) · opₖ`, each op a sum of tensor-product terms.
#[derive(Debug, Clone)]
pub struct TensorHamiltonian {
    shape: Vec<usize>,
    parts: Vec<(TimeProfile, TensorOp)>,
}

impl TensorHamiltonian {
    pub fn new(shape: Vec<usize>) -> Self {
        Self {
            shape,
            parts: Vec::new(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn add_part(&mut self, profile: TimeProfile, op: TensorOp) -> Result<()> {
        if op.shape() != self.shape.as_slice() {
            return Err(GkpError::ShapeMismatch(format!(
                "part shape {:?} vs hamiltonian shape {:?}",
                op.shape(),
                self.shape
            )));
        }
        self.parts.push((profile, op));
        Ok(())
    }

    pub fn is_time_independent(&self) -> bool {
        self.parts.iter().all(|(p, _)| p.is_constant())
    }

    pub fn apply_at(&self, t: f64, v: &DVector<C64>, out: &mut DVector<C64>) {
        out.fill(C64::new(0.0, 0.0));
        for (profile, op) in &self.parts {
            let s = profile.value(t);
            if s != 0.0 {
                op.apply_add(v, s, out);
            }
        }
    }

    /// Dense `H(t)/ħ` at a fixed time.
    pub fn to_dense_at(&self, t: f64) -> FockOperator {
        let d = self.dim();
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for (profile, op) in &self.parts {
            let s = profile.value(t);
            if s != 0.0 {
                acc += op.to_dense().matrix() * C64::new(s, 0.0);
            }
        }
        FockOperator::new(acc, self.shape.clone()).expect("shape consistent")
    }
}

fn check_hermitian(h: &FockOperator) -> Result<()> {
    if linalg::hermiticity_defect(h.matrix()) > 1e-8 {
        return Err(GkpError::InvalidInput(
            "evolve: Hamiltonian is not Hermitian".into(),
        ));
    }
    Ok(())
}

fn attach_leak_warning(state: &mut OscState, cfg: &EvolutionConfig, context: &str, max_leak: f64) {
    if max_leak > cfg.leak_warn {
        state.push_warning(SimWarning::Truncation {
            context: context.to_string(),
            leakage: max_leak,
            threshold: cfg.leak_warn,
        });
    }
}

/// Evolution under a constant Hamiltonian `H/ħ` (rad/s) for `duration`
/// seconds. Pure states go through the Lanczos propagator; mixed states
/// through one Hermitian eigendecomposition.
pub fn evolve_const(
    state: &OscState,
    h: &FockOperator,
    duration: f64,
    cfg: &EvolutionConfig,
) -> Result<OscState> {
    cfg.validate()?;
    if h.dim() != state.dim() {
        return Err(GkpError::ShapeMismatch(format!(
            "hamiltonian dim {} vs state dim {}",
            h.dim(),
            state.dim()
        )));
    }
    check_hermitian(h)?;
    let mut out = match state.data() {
        StateData::Pure(v) => {
            let hm = h.matrix();
            let apply = |x: &DVector<C64>, y: &mut DVector<C64>| {
                y.copy_from(&(hm * x));
            };
            let w = super::krylov::expm_multiply_hermitian(apply, v, duration, &cfg.krylov());
            OscState::pure(w, state.mode_shape().to_vec())?
        }
        StateData::Mixed(rho) => {
            let (evals, evecs) = linalg::eigh(h.matrix());
            let phases = DMatrix::from_diagonal(&evals.map(|w| C64::from_polar(1.0, -w * duration)));
            let u = linalg::matmul(&linalg::matmul(&evecs, &phases), &evecs.adjoint());
            OscState::mixed(linalg::sandwich(&u, rho), state.mode_shape().to_vec())?
        }
    };
    for w in state.warnings() {
        out.push_warning(w.clone());
    }
    let leak = leakage(&out, cfg.guard_band);
    attach_leak_warning(&mut out, cfg, "evolve_const", leak);
    Ok(out)
}

/// Evolution of a pure state under a time-dependent tensor Hamiltonian over
/// `[t0, t0 + duration]`. `sample` is called at every accepted step with the
/// current time and (normalized-by-construction) state vector.
pub fn evolve_time_dep<F>(
    state: &OscState,
    h: &TensorHamiltonian,
    t0: f64,
    duration: f64,
    cfg: &EvolutionConfig,
    mut sample: F,
) -> Result<OscState>
where
    F: FnMut(f64, &DVector<C64>),
{
    cfg.validate()?;
    if h.dim() != state.dim() {
        return Err(GkpError::ShapeMismatch(format!(
            "hamiltonian dim {} vs state dim {}",
            h.dim(),
            state.dim()
        )));
    }
    let v0 = state
        .pure_vector()
        .ok_or_else(|| GkpError::InvalidInput("evolve_time_dep requires a pure state".into()))?;

    let kry = cfg.krylov();
    let propagate = |t_mid: f64, dt: f64, v: &DVector<C64>| -> DVector<C64> {
        let apply = |x: &DVector<C64>, y: &mut DVector<C64>| h.apply_at(t_mid, x, y);
        super::krylov::expm_multiply_hermitian(apply, v, dt, &kry)
    };

    let mut v = v0.clone();
    let mut max_leak = 0.0f64;

    if h.is_time_independent() {
        // constant H: one Lanczos chain, no midpoint control needed
        v = propagate(t0, duration, &v);
        sample(t0 + duration, &v);
    } else {
        let t_end = t0 + duration;
        let mut t = t0;
        let mut dt = (cfg.max_step).min(duration / 8.0).min(duration);
        let mut guard = 0usize;
        while t < t_end - 1e-18 * duration.max(1.0) && guard < 2_000_000 {
            guard += 1;
            let step = dt.min(t_end - t);
            // one full step against two half steps, both midpoint-frozen
            let coarse = propagate(t + 0.5 * step, step, &v);
            let half1 = propagate(t + 0.25 * step, 0.5 * step, &v);
            let fine = propagate(t + 0.75 * step, 0.5 * step, &half1);
            let err = (&coarse - &fine).norm();
            if err <= cfg.step_tol || step <= 1e-15 {
                v = fine;
                t += step;
                sample(t, &v);
                let probe = OscState::pure_normalized(v.clone(), state.mode_shape().to_vec())?.0;
                max_leak = max_leak.max(leakage(&probe, cfg.guard_band));
                if err < 0.1 * cfg.step_tol {
                    dt *= 1.5;
                }
            } else {
                dt = 0.5 * step;
            }
        }
    }

    let mut out = OscState::pure(v, state.mode_shape().to_vec())?;
    for w in state.warnings() {
        out.push_warning(w.clone());
    }
    let final_leak = leakage(&out, cfg.guard_band).max(max_leak);
    attach_leak_warning(&mut out, cfg, "evolve_time_dep", final_leak);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn stationary_fock_state_returns_after_full_period() {
        let dim = 12;
        let omega = 2.0 * PI * 5.0e3;
        let h = fock::number(dim).unwrap().scale(C64::new(omega, 0.0));
        let h = FockOperator::new(h.matrix().clone(), vec![dim]).unwrap();
        let s = OscState::fock(dim, 1).unwrap();
        let t = 2.0 * PI / omega;
        let out = evolve_const(&s, &h, t, &EvolutionConfig::default()).unwrap();
        let f = fock::fidelity(&s, &out).unwrap();
        assert!(f >= 1.0 - 1e-8, "fidelity {f}");
    }

    #[test]
    fn non_hermitian_rejected() {
        let (a, _) = fock::ladder(5).unwrap();
        let s = OscState::vacuum(5).unwrap();
        assert!(matches!(
            evolve_const(&s, &a, 1.0, &EvolutionConfig::default()),
            Err(GkpError::InvalidInput(_))
        ));
    }

    #[test]
    fn coherent_state_traces_a_circle() {
        // Ehrenfest oracle: under H = ω n the centroid ⟨q⟩+i⟨p⟩ rotates
        // clockwise on a circle of fixed radius.
        let dim = 40;
        let omega = 1.0;
        let alpha = C64::new(1.2, 0.4);
        let d = fock::displacement(alpha, dim).unwrap();
        let s = OscState::vacuum(dim).unwrap().apply_matrix(d.matrix()).unwrap();
        let h = fock::number(dim).unwrap();
        let (q, p) = fock::quadratures(dim).unwrap();
        let centroid = |st: &OscState| {
            let eq = fock::expectation(st, &q).unwrap().re;
            let ep = fock::expectation(st, &p).unwrap().re;
            C64::new(eq, ep)
        };
        let c0 = centroid(&s);
        assert!((c0 - alpha).norm() < 1e-9);
        for &t in &[0.4f64, 1.1, 2.9] {
            let out = evolve_const(&s, &h, t, &EvolutionConfig::default()).unwrap();
            let c = centroid(&out);
            let expect = alpha * C64::from_polar(1.0, -t);
            assert!((c - expect).norm() < 1e-7, "t={t}: {c} vs {expect}");
        }
    }

    #[test]
    fn tensor_op_apply_matches_dense() {
        let shape = vec![2, 3, 4];
        let (q2, _) = fock::quadratures(3).unwrap();
        let (q3, _) = fock::quadratures(4).unwrap();
        let mut op = TensorOp::new(shape.clone());
        let pauli_z = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        op.add_term(0.7, vec![Some(pauli_z), Some(q2.matrix().clone()), None])
            .unwrap();
        op.add_term(-1.3, vec![None, None, Some(q3.matrix().clone())])
            .unwrap();
        let dense = op.to_dense();
        let dim: usize = shape.iter().product();
        let v = DVector::from_fn(dim, |i, _| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.15).cos()));
        let mut fast = DVector::zeros(dim);
        op.apply_add(&v, 1.0, &mut fast);
        let slow = dense.matrix() * &v;
        assert!((fast - slow).norm() < 1e-12);
    }

    #[test]
    fn time_dep_matches_const_when_profile_constant() {
        let dim = 16;
        let (q, _) = fock::quadratures(dim).unwrap();
        let mut op = TensorOp::new(vec![dim]);
        op.add_term(1.0, vec![Some(q.matrix().clone())]).unwrap();
        let mut h = TensorHamiltonian::new(vec![dim]);
        h.add_part(TimeProfile::Constant(2.0), op).unwrap();

        let s = OscState::vacuum(dim).unwrap();
        let out_td = evolve_time_dep(&s, &h, 0.0, 0.8, &EvolutionConfig::default(), |_, _| {}).unwrap();

        let dense = h.to_dense_at(0.0);
        let out_c = evolve_const(&s, &dense, 0.8, &EvolutionConfig::default()).unwrap();
        let f = fock::fidelity(&out_td, &out_c).unwrap();
        assert!(f > 1.0 - 1e-10, "fidelity {f}");
    }

    #[test]
    fn ramped_frequency_phase_is_integral() {
        // H(t) = ω(t) n with a linear ramp: |1⟩ picks up phase ∫ω dt.
        let dim = 5;
        let mut op = TensorOp::new(vec![dim]);
        op.add_term(1.0, vec![Some(fock::number(dim).unwrap().matrix().clone())])
            .unwrap();
        let mut h = TensorHamiltonian::new(vec![dim]);
        h.add_part(
            TimeProfile::PiecewiseLinear(vec![(0.0, 1.0), (1.0, 3.0)]),
            op,
        )
        .unwrap();
        let s = OscState::fock(dim, 1).unwrap();
        let out = evolve_time_dep(&s, &h, 0.0, 1.0, &EvolutionConfig::default(), |_, _| {}).unwrap();
        let expect = C64::from_polar(1.0, -2.0); // ∫₀¹ (1+2t) dt = 2
        let amp = out.pure_vector().unwrap()[1];
        assert!((amp - expect).norm() < 1e-7, "amp {amp} vs {expect}");
    }

    #[test]
    fn trace_preserved_for_mixed_states() {
        let dim = 10;
        let h = fock::number(dim).unwrap();
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        rho[(0, 0)] = C64::new(0.5, 0.0);
        rho[(1, 1)] = C64::new(0.5, 0.0);
        rho[(0, 1)] = C64::new(0.25, 0.0);
        rho[(1, 0)] = C64::new(0.25, 0.0);
        let s = OscState::mixed(rho, vec![dim]).unwrap();
        let out = evolve_const(&s, &h, 1.7, &EvolutionConfig::default()).unwrap();
        assert_relative_eq!(out.trace(), 1.0, epsilon = 1e-12);
    }
}
