//! Lanczos propagation `exp(−i t H)|v⟩` for Hermitian `H` given only a
//! matrix-vector product. This keeps large tensor-product Hamiltonians out
//! of dense storage entirely.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Target on the standard Lanczos residual estimate per substep.
    pub tol: f64,
    /// Maximum Krylov dimension before the substep is shortened.
    pub m_max: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            m_max: 40,
        }
    }
}

/// `exp(−i t H) v` for Hermitian `H` provided as `apply(x, out)` (meaning
/// `out = H x`). Substeps adaptively until the whole interval is covered.
pub fn expm_multiply_hermitian<F>(apply: F, v: &DVector<C64>, t: f64, opts: &KrylovOptions) -> DVector<C64>
where
    F: Fn(&DVector<C64>, &mut DVector<C64>),
{
    let beta0 = v.norm();
    if beta0 == 0.0 || t == 0.0 {
        return v.clone();
    }
    let n = v.len();
    let mut state = v.clone();
    let mut remaining = t;
    let mut h = t; // first attempt: the whole interval
    let sign = t.signum();

    let mut scratch = DVector::<C64>::zeros(n);
    let mut guard = 0usize;
    while remaining.abs() > 1e-300 && guard < 100_000 {
        guard += 1;
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        match lanczos_step(&apply, &state, h, opts, &mut scratch) {
            Some(next) => {
                state = next;
                remaining -= h;
                // gentle growth for the next substep
                h *= 1.5;
                if h.signum() != sign {
                    h = remaining;
                }
            }
            None => {
                h *= 0.5;
                if h.abs() < 1e-300 {
                    break;
                }
            }
        }
    }
    state
}

/// One Lanczos substep; returns `None` when the residual estimate misses
/// `opts.tol` at `m_max`, signalling the caller to shorten the step.
fn lanczos_step<F>(
    apply: &F,
    v: &DVector<C64>,
    h: f64,
    opts: &KrylovOptions,
    scratch: &mut DVector<C64>,
) -> Option<DVector<C64>>
where
    F: Fn(&DVector<C64>, &mut DVector<C64>),
{
    let beta0 = v.norm();
    if beta0 == 0.0 {
        return Some(v.clone());
    }
    let n = v.len();
    let m_max = opts.m_max.min(n);
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(m_max);
    basis.push(v / C64::new(beta0, 0.0));
    let mut alphas: Vec<f64> = Vec::with_capacity(m_max);
    let mut betas: Vec<f64> = Vec::with_capacity(m_max);

    for j in 0..m_max {
        apply(&basis[j], scratch);
        let mut w = scratch.clone();
        if j > 0 {
            w.axpy(C64::new(-betas[j - 1], 0.0), &basis[j - 1], C64::new(1.0, 0.0));
        }
        let alpha = basis[j].dotc(&w).re;
        w.axpy(C64::new(-alpha, 0.0), &basis[j], C64::new(1.0, 0.0));
        // full reorthogonalization: m is small, orthogonality is cheap insurance
        for b in &basis {
            let c = b.dotc(&w);
            w.axpy(-c, b, C64::new(1.0, 0.0));
        }
        alphas.push(alpha);
        let beta = w.norm();

        // convergence / breakdown checks on the small problem
        let m = j + 1;
        let u = tridiag_expv(&alphas, &betas, h, m);
        let happy = beta < 1e-13 * beta0.max(1.0);
        let err = beta * u[m - 1].norm() * h.abs();
        if happy || err < opts.tol {
            let mut out = DVector::<C64>::zeros(n);
            for (k, b) in basis.iter().enumerate() {
                out.axpy(u[k] * C64::new(beta0, 0.0), b, C64::new(1.0, 0.0));
            }
            return Some(out);
        }
        if m == m_max {
            return None;
        }
        betas.push(beta);
        basis.push(w / C64::new(beta, 0.0));
    }
    None
}

/// `exp(−i h T) e₁` for the real symmetric tridiagonal `T` defined by
/// `alphas` (diagonal) and `betas` (off-diagonal), truncated to size `m`.
fn tridiag_expv(alphas: &[f64], betas: &[f64], h: f64, m: usize) -> DVector<C64> {
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let se = nalgebra::SymmetricEigen::new(t);
    // u = Q exp(−i h Λ) Qᵀ e₁
    let q = &se.eigenvectors;
    let mut u = DVector::<C64>::zeros(m);
    for k in 0..m {
        let phase = C64::from_polar(1.0, -h * se.eigenvalues[k]);
        let w = q[(0, k)];
        for i in 0..m {
            u[i] += C64::new(q[(i, k)] * w, 0.0) * phase;
        }
    }
    u
}

/// Apply `D(α)` to a state vector via Lanczos on the Hermitian generator
/// `i(α a† − α* a)/√2`, never forming the matrix. Useful at working
/// dimensions far beyond what dense exponentials tolerate.
pub fn displace_vector(v: &DVector<C64>, alpha: C64) -> DVector<C64> {
    let n = v.len();
    let c = alpha / C64::new(std::f64::consts::SQRT_2, 0.0);
    let cc = c.conj();
    let i = C64::new(0.0, 1.0);
    // H = i G, G = c a† − c* a
    let apply = move |x: &DVector<C64>, out: &mut DVector<C64>| {
        for k in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            if k > 0 {
                acc += i * c * C64::new((k as f64).sqrt(), 0.0) * x[k - 1];
            }
            if k + 1 < n {
                acc -= i * cc * C64::new(((k + 1) as f64).sqrt(), 0.0) * x[k + 1];
            }
            out[k] = acc;
        }
    };
    // D(α) = exp(G) = exp(−i · 1 · H)
    expm_multiply_hermitian(apply, v, 1.0, &KrylovOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock;

    #[test]
    fn matches_dense_displacement() {
        let dim = 80;
        let alpha = C64::new(1.3, -0.7);
        let d = fock::displacement(alpha, dim).unwrap();
        let mut v = DVector::<C64>::zeros(dim);
        v[0] = C64::new(1.0, 0.0);
        v[3] = C64::new(0.0, 0.0);
        let dense = d.matrix() * &v;
        let kry = displace_vector(&v, alpha);
        assert!((dense - kry).norm() < 1e-10);
    }

    #[test]
    fn rotation_phase_on_fock_state() {
        // H = ω n on |2⟩ for time t gives phase e^{−2iωt}
        let dim = 6;
        let omega = 2.5;
        let apply = |x: &DVector<C64>, out: &mut DVector<C64>| {
            for k in 0..dim {
                out[k] = C64::new(omega * k as f64, 0.0) * x[k];
            }
        };
        let mut v = DVector::<C64>::zeros(dim);
        v[2] = C64::new(1.0, 0.0);
        let t = 0.77;
        let w = expm_multiply_hermitian(apply, &v, t, &KrylovOptions::default());
        let expect = C64::from_polar(1.0, -2.0 * omega * t);
        assert!((w[2] - expect).norm() < 1e-12);
    }

    #[test]
    fn long_time_norm_preserved() {
        let dim = 30;
        let (q, _) = fock::quadratures(dim).unwrap();
        let h = q.matrix().clone() * C64::new(3.0, 0.0);
        let apply = move |x: &DVector<C64>, out: &mut DVector<C64>| {
            out.copy_from(&(&h * x));
        };
        let mut v = DVector::<C64>::zeros(dim);
        v[0] = C64::new(1.0, 0.0);
        let w = expm_multiply_hermitian(apply, &v, 50.0, &KrylovOptions::default());
        assert!((w.norm() - 1.0).abs() < 1e-10);
    }
}
