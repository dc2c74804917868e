//! Truncated-Fock-space operators.
//!
//! Conventions used everywhere in this crate:
//!
//! * quadratures `q = (a† + a)/√2`, `p = i(a† − a)/√2`, so `[q, p] = i`;
//! * displacement `D(α) = exp[(α a† − α* a)/√2]`, which shifts
//!   `q ↦ q + Re α`, `p ↦ p + Im α` (and `a ↦ a + α/√2`);
//! * squeeze `S(z) = exp[½(z* a² − z a†²)]`; for real `r > 0` the state
//!   `S(r)|0⟩` has position variance `e^{−2r}/2`;
//! * rotation `R(θ) = exp(−iθ a†a)`.
//!
//! Operators live on a truncated basis `|0⟩ … |dim−1⟩`. Exponentials of
//! anti-Hermitian generators are unitary on the retained subspace up to
//! truncation effects concentrated in the top "guard band" of levels;
//! [`FockOperator::unitarity_defect`] measures the residue on the interior.

mod krylov;
mod state;

pub mod evolve;

pub use krylov::{displace_vector, expm_multiply_hermitian, KrylovOptions};
pub use state::{expectation, fidelity, leakage, partial_trace, OscState, StateData};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{GkpError, Result};
use crate::linalg;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense operator on a truncated oscillator (or composite) basis.
///
/// `mode_shape` lists the subsystem dimensions for composite operators,
/// ancilla (dimension 2) first by convention; single-mode operators have a
/// one-element shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    mat: DMatrix<C64>,
    mode_shape: Vec<usize>,
}

impl FockOperator {
    pub fn new(mat: DMatrix<C64>, mode_shape: Vec<usize>) -> Result<Self> {
        let prod: usize = mode_shape.iter().product();
        if mat.nrows() != mat.ncols() {
            return Err(GkpError::ShapeMismatch(format!(
                "operator matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if prod != mat.nrows() || mode_shape.is_empty() {
            return Err(GkpError::ShapeMismatch(format!(
                "mode shape {mode_shape:?} does not match matrix side {}",
                mat.nrows()
            )));
        }
        Ok(Self { mat, mode_shape })
    }

    pub fn single_mode(mat: DMatrix<C64>) -> Self {
        let d = mat.nrows();
        Self {
            mat,
            mode_shape: vec![d],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::single_mode(DMatrix::identity(dim, dim))
    }

    /// Total matrix side (product of the mode shape).
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mode_shape(&self) -> &[usize] {
        &self.mode_shape
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
            mode_shape: self.mode_shape.clone(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            mat: &self.mat * c,
            mode_shape: self.mode_shape.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            mat: &self.mat + &other.mat,
            mode_shape: self.mode_shape.clone(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            mat: linalg::matmul(&self.mat, &other.mat),
            mode_shape: self.mode_shape.clone(),
        })
    }

    /// Tensor product; mode shapes concatenate.
    pub fn tensor(&self, other: &Self) -> Self {
        let mat = self.mat.kronecker(&other.mat);
        let mut mode_shape = self.mode_shape.clone();
        mode_shape.extend_from_slice(&other.mode_shape);
        Self { mat, mode_shape }
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(GkpError::ShapeMismatch(format!(
                "operator dim {} vs vector len {}",
                self.dim(),
                v.len()
            )));
        }
        Ok(&self.mat * v)
    }

    /// Frobenius norm of `(U†U − 1)` restricted to interior columns, i.e.
    /// with the top `guard_band` levels of every mode masked out.
    pub fn unitarity_defect(&self, guard_band: usize) -> f64 {
        let gram = linalg::matmul(&self.mat.adjoint(), &self.mat);
        let d = self.dim();
        let interior = interior_mask(&self.mode_shape, guard_band);
        let mut acc = 0.0;
        for j in 0..d {
            if !interior[j] {
                continue;
            }
            for i in 0..d {
                let g = gram[(i, j)] - if i == j { ONE } else { ZERO };
                acc += g.norm_sqr();
            }
        }
        acc.sqrt()
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.mode_shape != other.mode_shape {
            return Err(GkpError::ShapeMismatch(format!(
                "mode shapes differ: {:?} vs {:?}",
                self.mode_shape, other.mode_shape
            )));
        }
        Ok(())
    }
}

/// Boolean mask selecting basis states whose per-mode index stays below
/// `dim_mode − guard_band` for every mode of dimension > 2 (two-level
/// subsystems are ancillas by convention and are not masked).
pub(crate) fn interior_mask(mode_shape: &[usize], guard_band: usize) -> Vec<bool> {
    let total: usize = mode_shape.iter().product();
    let mut mask = vec![true; total];
    let mut stride_after = 1usize;
    for (k, &dm) in mode_shape.iter().enumerate().rev() {
        if dm > 2 {
            let cutoff = dm.saturating_sub(guard_band);
            for (idx, m) in mask.iter_mut().enumerate() {
                let i_k = (idx / stride_after) % dm;
                if i_k >= cutoff {
                    *m = false;
                }
            }
        }
        stride_after *= dm;
        let _ = k;
    }
    mask
}

/// Annihilation and creation operators: `a|n⟩ = √n |n−1⟩` and its adjoint.
pub fn ladder(dim: usize) -> Result<(FockOperator, FockOperator)> {
    if dim < 2 {
        return Err(GkpError::InvalidDimension(format!(
            "ladder operators need dim >= 2, got {dim}"
        )));
    }
    let mut a = DMatrix::<C64>::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    let adag = a.adjoint();
    Ok((FockOperator::single_mode(a), FockOperator::single_mode(adag)))
}

/// Number operator `a†a` (diagonal `0..dim−1`).
pub fn number(dim: usize) -> Result<FockOperator> {
    if dim < 1 {
        return Err(GkpError::InvalidDimension("number needs dim >= 1".into()));
    }
    let n = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| C64::new(i as f64, 0.0)));
    Ok(FockOperator::single_mode(n))
}

/// Quadratures `q = (a† + a)/√2`, `p = i(a† − a)/√2`.
pub fn quadratures(dim: usize) -> Result<(FockOperator, FockOperator)> {
    let (a, adag) = ladder(dim)?;
    let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let q = (adag.matrix() + a.matrix()) * inv_sqrt2;
    let p = (adag.matrix() - a.matrix()) * C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    Ok((FockOperator::single_mode(q), FockOperator::single_mode(p)))
}

/// Anti-Hermitian generator of `D(α)`: `(α a† − α* a)/√2`.
pub fn displacement_generator(alpha: C64, dim: usize) -> Result<FockOperator> {
    let (a, adag) = ladder(dim)?;
    let c = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let g = adag.matrix() * (alpha * c) - a.matrix() * (alpha.conj() * c);
    Ok(FockOperator::single_mode(g))
}

/// Displacement operator `D(α) = exp[(α a† − α* a)/√2]`.
pub fn displacement(alpha: C64, dim: usize) -> Result<FockOperator> {
    let g = displacement_generator(alpha, dim)?;
    matrix_exp(&g)
}

/// Squeeze operator `S(z) = exp[½(z* a² − z a†²)]`.
pub fn squeeze(z: C64, dim: usize) -> Result<FockOperator> {
    let (a, adag) = ladder(dim)?;
    let a2 = linalg::matmul(a.matrix(), a.matrix());
    let adag2 = linalg::matmul(adag.matrix(), adag.matrix());
    let half = C64::new(0.5, 0.0);
    let g = a2 * (z.conj() * half) - adag2 * (z * half);
    matrix_exp(&FockOperator::single_mode(g))
}

/// Phase-space rotation `R(θ) = exp(−iθ a†a)`, diagonal `e^{−iθn}`.
pub fn rotation(theta: f64, dim: usize) -> Result<FockOperator> {
    if dim < 1 {
        return Err(GkpError::InvalidDimension("rotation needs dim >= 1".into()));
    }
    let d = DVector::from_fn(dim, |n, _| C64::from_polar(1.0, -theta * n as f64));
    Ok(FockOperator::single_mode(DMatrix::from_diagonal(&d)))
}

/// Matrix exponential `e^A` (degree-13 Padé with scaling and squaring).
pub fn matrix_exp(op: &FockOperator) -> Result<FockOperator> {
    if op.mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(GkpError::InvalidInput(
            "matrix_exp: non-finite entries".into(),
        ));
    }
    Ok(FockOperator {
        mat: linalg::expm(&op.mat),
        mode_shape: op.mode_shape.clone(),
    })
}

/// Fock amplitudes of the squeezed vacuum `S(r)|0⟩` for real `r`, from the
/// closed form `(sech r)^{1/2} Σ_m (−tanh r)^m √((2m)!)/(2^m m!) |2m⟩`.
pub fn squeezed_vacuum_amplitudes(r: f64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    if dim == 0 {
        return v;
    }
    let t = r.tanh();
    let pref = (1.0 / r.cosh()).sqrt();
    v[0] = C64::new(pref, 0.0);
    // c_m / c_{m−1} = (−tanh r) √((2m)(2m−1)) / (2m); the ratio stays < 1
    let mut coeff = pref;
    for m in 1..=dim.saturating_sub(1) / 2 {
        let tm = 2.0 * m as f64;
        coeff *= -t * (tm * (tm - 1.0)).sqrt() / tm;
        v[2 * m] = C64::new(coeff, 0.0);
    }
    v
}

/// Displacement family sharing one eigendecomposition: `D(t·α₀)` for any
/// real `t` from a single Hermitian diagonalization of `i·G(α₀)`.
pub struct DisplacementFamily {
    evals: DVector<f64>,
    evecs: DMatrix<C64>,
    dim: usize,
}

impl DisplacementFamily {
    pub fn new(alpha_unit: C64, dim: usize) -> Result<Self> {
        let g = displacement_generator(alpha_unit, dim)?;
        let h = g.matrix() * C64::new(0.0, 1.0); // Hermitian
        let (evals, evecs) = linalg::eigh(&h);
        Ok(Self { evals, evecs, dim })
    }

    /// `D(t · α₀)` as a dense matrix.
    pub fn at(&self, t: f64) -> FockOperator {
        let phase = DMatrix::from_diagonal(&self.evals.map(|w| C64::from_polar(1.0, -t * w)));
        let m = linalg::matmul(&linalg::matmul(&self.evecs, &phase), &self.evecs.adjoint());
        FockOperator {
            mat: m,
            mode_shape: vec![self.dim],
        }
    }
}
