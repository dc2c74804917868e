//! Pure and mixed states over a tensor product of an optional two-level
//! ancilla and one or more oscillator modes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{GkpError, Result};
use crate::linalg;
use crate::warn::SimWarning;

pub const DEFAULT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscState {
    data: StateData,
    mode_shape: Vec<usize>,
    norm_tol: f64,
    warnings: Vec<SimWarning>,
}

impl OscState {
    /// Pure state from an amplitude vector. Checks normalization against
    /// `DEFAULT_NORM_TOL`.
    pub fn pure(amplitudes: DVector<C64>, mode_shape: Vec<usize>) -> Result<Self> {
        let prod: usize = mode_shape.iter().product();
        if prod != amplitudes.len() || mode_shape.is_empty() {
            return Err(GkpError::ShapeMismatch(format!(
                "mode shape {mode_shape:?} vs vector length {}",
                amplitudes.len()
            )));
        }
        let n = amplitudes.norm();
        if (n - 1.0).abs() > DEFAULT_NORM_TOL {
            return Err(GkpError::InvalidInput(format!(
                "pure state norm {n} deviates from 1 beyond tolerance"
            )));
        }
        Ok(Self {
            data: StateData::Pure(amplitudes),
            mode_shape,
            norm_tol: DEFAULT_NORM_TOL,
            warnings: Vec::new(),
        })
    }

    /// Pure state from an unnormalized vector; normalizes and returns the
    /// original norm alongside.
    pub fn pure_normalized(mut amplitudes: DVector<C64>, mode_shape: Vec<usize>) -> Result<(Self, f64)> {
        let n = amplitudes.norm();
        if n == 0.0 {
            return Err(GkpError::InvalidInput("cannot normalize the zero vector".into()));
        }
        amplitudes /= C64::new(n, 0.0);
        Ok((Self::pure(amplitudes, mode_shape)?, n))
    }

    /// Mixed state from a density matrix. Checks trace, Hermiticity and
    /// (cheaply, via Gershgorin-free diagonal sampling) positivity of the
    /// diagonal; full positivity checks are left to callers that need them.
    pub fn mixed(rho: DMatrix<C64>, mode_shape: Vec<usize>) -> Result<Self> {
        let prod: usize = mode_shape.iter().product();
        if rho.nrows() != rho.ncols() || prod != rho.nrows() || mode_shape.is_empty() {
            return Err(GkpError::ShapeMismatch(format!(
                "mode shape {mode_shape:?} vs density matrix {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > DEFAULT_NORM_TOL || tr.im.abs() > DEFAULT_NORM_TOL {
            return Err(GkpError::InvalidInput(format!(
                "density matrix trace {tr} deviates from 1 beyond tolerance"
            )));
        }
        if linalg::hermiticity_defect(&rho) > 1e-8 {
            return Err(GkpError::InvalidInput("density matrix is not Hermitian".into()));
        }
        if rho.diagonal().iter().any(|d| d.re < -DEFAULT_NORM_TOL) {
            return Err(GkpError::InvalidInput(
                "density matrix has a negative diagonal entry".into(),
            ));
        }
        Ok(Self {
            data: StateData::Mixed(rho),
            mode_shape,
            norm_tol: DEFAULT_NORM_TOL,
            warnings: Vec::new(),
        })
    }

    /// The vacuum of a single mode.
    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(dim, 0)
    }

    /// Fock state `|n⟩` of a single mode.
    pub fn fock(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(GkpError::InvalidDimension(format!(
                "fock level {n} does not fit in dim {dim}"
            )));
        }
        let mut v = DVector::zeros(dim);
        v[n] = C64::new(1.0, 0.0);
        Self::pure(v, vec![dim])
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn mode_shape(&self) -> &[usize] {
        &self.mode_shape
    }

    pub fn dim(&self) -> usize {
        self.mode_shape.iter().product()
    }

    pub fn norm_tol(&self) -> f64 {
        self.norm_tol
    }

    pub fn warnings(&self) -> &[SimWarning] {
        &self.warnings
    }

    pub fn push_warning(&mut self, w: SimWarning) {
        self.warnings.push(w);
    }

    pub fn take_warnings(&mut self) -> Vec<SimWarning> {
        std::mem::take(&mut self.warnings)
    }

    /// Density matrix view (built on demand for pure states).
    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.data {
            StateData::Pure(v) => {
                let mut rho = DMatrix::zeros(v.len(), v.len());
                for i in 0..v.len() {
                    for j in 0..v.len() {
                        rho[(i, j)] = v[i] * v[j].conj();
                    }
                }
                rho
            }
            StateData::Mixed(rho) => rho.clone(),
        }
    }

    pub fn pure_vector(&self) -> Option<&DVector<C64>> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Mixed(_) => None,
        }
    }

    /// Trace (mixed) or squared norm (pure).
    pub fn trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared(),
            StateData::Mixed(rho) => rho.trace().re,
        }
    }

    /// Tensor product with another state. Pure ⊗ pure stays pure.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut mode_shape = self.mode_shape.clone();
        mode_shape.extend_from_slice(&other.mode_shape);
        let data = match (&self.data, &other.data) {
            (StateData::Pure(a), StateData::Pure(b)) => StateData::Pure(a.kronecker(b)),
            _ => StateData::Mixed(self.density_matrix().kronecker(&other.density_matrix())),
        };
        let mut warnings = self.warnings.clone();
        warnings.extend_from_slice(&other.warnings);
        Self {
            data,
            mode_shape,
            norm_tol: self.norm_tol.min(other.norm_tol),
            warnings,
        }
    }

    /// Apply a unitary (or Kraus) matrix; pure stays pure, mixed is
    /// conjugated `U ρ U†`.
    pub fn apply_matrix(&self, u: &DMatrix<C64>) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(GkpError::ShapeMismatch(format!(
                "operator {}x{} vs state dim {}",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        let data = match &self.data {
            StateData::Pure(v) => StateData::Pure(u * v),
            StateData::Mixed(rho) => StateData::Mixed(linalg::sandwich(u, rho)),
        };
        Ok(Self {
            data,
            mode_shape: self.mode_shape.clone(),
            norm_tol: self.norm_tol,
            warnings: self.warnings.clone(),
        })
    }
}

/// Expectation value `⟨O⟩`; complex so non-Hermitian observables (e.g.
/// stabilizer displacements) are supported.
pub fn expectation(state: &OscState, op: &crate::fock::FockOperator) -> Result<C64> {
    if op.dim() != state.dim() {
        return Err(GkpError::ShapeMismatch(format!(
            "operator dim {} vs state dim {}",
            op.dim(),
            state.dim()
        )));
    }
    Ok(match state.data() {
        StateData::Pure(v) => {
            let ov = op.matrix() * v;
            v.dotc(&ov)
        }
        StateData::Mixed(rho) => linalg::trace_of_product(op.matrix(), rho),
    })
}

/// Partial trace keeping the listed subsystems (0-indexed into the mode
/// shape, ascending order enforced for a predictable output shape).
pub fn partial_trace(state: &OscState, keep: &[usize]) -> Result<OscState> {
    let shape = state.mode_shape().to_vec();
    let m = shape.len();
    if keep.is_empty() || keep.iter().any(|&k| k >= m) {
        return Err(GkpError::InvalidInput(format!(
            "keep indices {keep:?} out of range for {m} subsystems"
        )));
    }
    let mut sorted = keep.to_vec();
    sorted.dedup();
    if sorted.len() != keep.len() || !keep.windows(2).all(|w| w[0] < w[1]) {
        return Err(GkpError::InvalidInput(
            "keep indices must be strictly ascending".into(),
        ));
    }

    let keep_shape: Vec<usize> = keep.iter().map(|&k| shape[k]).collect();
    let keep_dim: usize = keep_shape.iter().product();
    let trace_idx: Vec<usize> = (0..m).filter(|i| !keep.contains(i)).collect();
    let trace_dim: usize = trace_idx.iter().map(|&i| shape[i]).product();

    // Strides of each subsystem in the flat (row-major over mode_shape) index.
    let mut strides = vec![1usize; m];
    for i in (0..m - 1).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }

    let flat_index = |keep_multi: usize, trace_multi: usize| -> usize {
        let mut idx = 0;
        let mut rem_k = keep_multi;
        for (pos, &k) in keep.iter().enumerate().rev() {
            let d = shape[k];
            idx += (rem_k % d) * strides[k];
            rem_k /= d;
            let _ = pos;
        }
        let mut rem_t = trace_multi;
        for &t in trace_idx.iter().rev() {
            let d = shape[t];
            idx += (rem_t % d) * strides[t];
            rem_t /= d;
        }
        idx
    };

    let mut out = DMatrix::<C64>::zeros(keep_dim, keep_dim);
    match state.data() {
        StateData::Pure(v) => {
            for t in 0..trace_dim {
                for i in 0..keep_dim {
                    let vi = v[flat_index(i, t)];
                    if vi == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..keep_dim {
                        out[(i, j)] += vi * v[flat_index(j, t)].conj();
                    }
                }
            }
        }
        StateData::Mixed(rho) => {
            for t in 0..trace_dim {
                for i in 0..keep_dim {
                    let fi = flat_index(i, t);
                    for j in 0..keep_dim {
                        out[(i, j)] += rho[(fi, flat_index(j, t))];
                    }
                }
            }
        }
    }
    OscState::mixed(out, keep_shape)
}

/// Uhlmann fidelity in `[0, 1]`; `|⟨a|b⟩|²` for two pure states.
pub fn fidelity(a: &OscState, b: &OscState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(GkpError::ShapeMismatch(format!(
            "state dims differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let f = match (a.data(), b.data()) {
        (StateData::Pure(u), StateData::Pure(v)) => u.dotc(v).norm_sqr(),
        (StateData::Pure(u), StateData::Mixed(rho)) | (StateData::Mixed(rho), StateData::Pure(u)) => {
            let rv = rho * u;
            u.dotc(&rv).re
        }
        (StateData::Mixed(r1), StateData::Mixed(r2)) => {
            // F = (tr √(√ρ σ √ρ))²
            let sqrt_r1 = psd_sqrt(r1);
            let inner = linalg::matmul(&linalg::matmul(&sqrt_r1, r2), &sqrt_r1);
            let (w, _) = linalg::eigh(&inner);
            w.iter().map(|x| x.max(0.0).sqrt()).sum::<f64>().powi(2)
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

fn psd_sqrt(rho: &DMatrix<C64>) -> DMatrix<C64> {
    let (w, v) = linalg::eigh(rho);
    let sqrt_diag = DMatrix::from_diagonal(&w.map(|x| C64::new(x.max(0.0).sqrt(), 0.0)));
    linalg::matmul(&linalg::matmul(&v, &sqrt_diag), &v.adjoint())
}

/// Population of the top `guard_band` Fock levels, evaluated per oscillator
/// mode, reporting the worst mode. Two-level subsystems (the ancilla by
/// convention) are skipped.
pub fn leakage(state: &OscState, guard_band: usize) -> f64 {
    let shape = state.mode_shape().to_vec();
    let m = shape.len();
    let mut strides = vec![1usize; m];
    for i in (0..m - 1).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    let populations: Vec<f64> = match state.data() {
        StateData::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
        StateData::Mixed(rho) => rho.diagonal().iter().map(|z| z.re).collect(),
    };
    let mut worst = 0.0f64;
    for k in 0..m {
        if shape[k] <= 2 {
            continue;
        }
        let cutoff = shape[k].saturating_sub(guard_band);
        let mut pop = 0.0;
        for (idx, &p) in populations.iter().enumerate() {
            if (idx / strides[k]) % shape[k] >= cutoff {
                pop += p;
            }
        }
        worst = worst.max(pop);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_expectation_of_number_is_zero() {
        let v = OscState::vacuum(10).unwrap();
        let n = fock::number(10).unwrap();
        let e = expectation(&v, &n).unwrap();
        assert_relative_eq!(e.re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn fidelity_self_is_one() {
        let v = OscState::fock(8, 3).unwrap();
        assert_relative_eq!(fidelity(&v, &v).unwrap(), 1.0, epsilon = 1e-12);
        let rho = v.density_matrix();
        let m = OscState::mixed(rho, vec![8]).unwrap();
        assert_relative_eq!(fidelity(&m, &m).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(fidelity(&m, &v).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_product_state() {
        // Tr over the first factor of |0⟩⊗|ψ⟩ gives |ψ⟩⟨ψ|.
        let zero = OscState::vacuum(3).unwrap();
        let mut psi_vec = DVector::zeros(4);
        psi_vec[0] = C64::new(0.6, 0.0);
        psi_vec[2] = C64::new(0.0, 0.8);
        let psi = OscState::pure(psi_vec.clone(), vec![4]).unwrap();
        let joint = zero.tensor(&psi);
        let reduced = partial_trace(&joint, &[1]).unwrap();
        let expect = psi.density_matrix();
        let diff = crate::linalg::fro_norm(&(reduced.density_matrix() - expect));
        assert!(diff < 1e-12);
        assert_relative_eq!(fidelity(&reduced, &psi).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_entangled_pair_is_maximally_mixed() {
        let mut bell = DVector::zeros(4);
        bell[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        bell[3] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = OscState::pure(bell, vec![2, 2]).unwrap();
        let reduced = partial_trace(&s, &[0]).unwrap();
        let rho = reduced.density_matrix();
        assert_relative_eq!(rho[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(rho[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(rho[(0, 1)].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn leakage_endpoints() {
        let v = OscState::vacuum(12).unwrap();
        assert_relative_eq!(leakage(&v, 3), 0.0, epsilon = 1e-15);
        let top = OscState::fock(12, 11).unwrap();
        assert_relative_eq!(leakage(&top, 1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn leakage_skips_ancilla() {
        // ancilla excited state should not count as leakage
        let anc = OscState::fock(2, 1).unwrap();
        let osc = OscState::vacuum(10).unwrap();
        let joint = anc.tensor(&osc);
        assert_relative_eq!(leakage(&joint, 1), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn displaced_vacuum_leakage_poisson_tail() {
        // D(2√π)|0⟩ is coherent with mean occupation |α|²/2 = 2π. The
        // population above level 54 is bounded by the Poisson tail, which
        // at dim 60 / guard 5 sits far below 1e−6.
        let dim = 60;
        let alpha = C64::new(2.0 * std::f64::consts::PI.sqrt(), 0.0);
        let d = fock::displacement(alpha, dim).unwrap();
        let v = OscState::vacuum(dim).unwrap().apply_matrix(d.matrix()).unwrap();
        let leak = leakage(&v, 5);

        // independent Poisson-tail oracle with mean 2π
        let mean = 2.0 * std::f64::consts::PI;
        let mut log_term = -mean; // ln P(0)
        let mut tail = 0.0;
        for n in 1..=80 {
            log_term += mean.ln() - (n as f64).ln();
            if n >= 55 {
                tail += log_term.exp();
            }
        }
        assert!(leak < 1e-6, "leakage {leak}");
        assert!(leak <= tail * 10.0, "leakage {leak} vs oracle tail {tail}");
    }

    #[test]
    fn mixed_rejects_bad_trace() {
        let rho = DMatrix::<C64>::identity(4, 4);
        assert!(OscState::mixed(rho, vec![4]).is_err());
    }
}
