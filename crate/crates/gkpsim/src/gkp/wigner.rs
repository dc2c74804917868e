//! Wigner function on a rectangular phase-space grid.
//!
//! Convention: `W(q, p) = (1/π) Tr[ρ D_c(α) Π D_c(α)†]` with the
//! quantum-optics displacement `D_c` at `α = (q + ip)/√2` and the parity
//! operator `Π = (−1)^{a†a}`, normalized so that `∬ W dq dp = 1`. For the
//! vacuum `W(0,0) = 1/π`; for the single-boson Fock state it is `−1/π`.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{GkpError, Result};
use crate::fock::{displace_vector, OscState, StateData};
use crate::linalg;

/// Wigner values plus the metadata that fixes the convention.
#[derive(Debug, Clone)]
pub struct WignerResult {
    pub q_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    /// `values[iq][ip] = W(q_grid[iq], p_grid[ip])`.
    pub values: Vec<Vec<f64>>,
    pub meta: WignerMeta,
}

#[derive(Debug, Clone, Serialize)]
pub struct WignerMeta {
    /// Human-readable statement of the convention.
    pub convention: String,
    /// Fock cutoff of the source state.
    pub dim: usize,
    /// Eigenvalue cutoff used when expanding a mixed state.
    pub eigenvalue_cutoff: f64,
    /// Number of pure components the state was expanded into.
    pub rank: usize,
}

impl WignerResult {
    /// Trapezoidal integral over the grid window.
    pub fn grid_integral(&self) -> f64 {
        let mut total = 0.0;
        for iq in 0..self.q_grid.len().saturating_sub(1) {
            let dq = self.q_grid[iq + 1] - self.q_grid[iq];
            for ip in 0..self.p_grid.len().saturating_sub(1) {
                let dp = self.p_grid[ip + 1] - self.p_grid[ip];
                let corners = self.values[iq][ip]
                    + self.values[iq + 1][ip]
                    + self.values[iq][ip + 1]
                    + self.values[iq + 1][ip + 1];
                total += 0.25 * corners * dq * dp;
            }
        }
        total
    }
}

/// Evaluate the Wigner function of a single-mode state on the given grids.
///
/// Mixed states are eigendecomposed and the displaced-parity sum is taken
/// over eigenvectors with weight above `1e−10`.
pub fn wigner(state: &OscState, q_grid: &[f64], p_grid: &[f64]) -> Result<WignerResult> {
    if state.mode_shape().len() != 1 {
        return Err(GkpError::ShapeMismatch(
            "wigner expects a single-mode state".into(),
        ));
    }
    if q_grid.is_empty() || p_grid.is_empty() {
        return Err(GkpError::InvalidParameters("empty grid".into()));
    }
    for g in [q_grid, p_grid] {
        if g.iter().any(|x| !x.is_finite()) {
            return Err(GkpError::InvalidParameters("non-finite grid value".into()));
        }
        if g.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GkpError::InvalidParameters(
                "grids must be strictly increasing".into(),
            ));
        }
    }

    const EIG_CUTOFF: f64 = 1e-10;
    let dim = state.dim();
    let components: Vec<(f64, DVector<C64>)> = match state.data() {
        StateData::Pure(v) => vec![(1.0, v.clone())],
        StateData::Mixed(rho) => {
            let (w, vmat) = linalg::eigh(rho);
            let mut comps = Vec::new();
            for k in 0..w.len() {
                if w[k] > EIG_CUTOFF {
                    comps.push((w[k], DVector::from_column_slice(vmat.column(k).as_slice())));
                }
            }
            comps
        }
    };

    let parity: Vec<f64> = (0..dim).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut values = vec![vec![0.0f64; p_grid.len()]; q_grid.len()];
    for (iq, &q) in q_grid.iter().enumerate() {
        for (ip, &p) in p_grid.iter().enumerate() {
            // displaced parity: (1/π) Σ_n (−1)^n |⟨n|D(−α)|ψ⟩|²,
            // with the grid-code amplitude α = q + ip
            let alpha = C64::new(-q, -p);
            let mut w = 0.0;
            for (weight, v) in &components {
                let d = displace_vector(v, alpha);
                let mut s = 0.0;
                for n in 0..dim {
                    s += parity[n] * d[n].norm_sqr();
                }
                w += weight * s;
            }
            values[iq][ip] = w / std::f64::consts::PI;
        }
    }

    Ok(WignerResult {
        q_grid: q_grid.to_vec(),
        p_grid: p_grid.to_vec(),
        values,
        meta: WignerMeta {
            convention:
                "W(q,p) = (1/pi) Tr[rho D(alpha) Pi D(alpha)^dag], alpha=(q+ip)/sqrt2 (quantum-optics D), \
                 normalized so that the (q,p) integral is 1; [q,p] = i"
                    .into(),
            dim,
            eigenvalue_cutoff: EIG_CUTOFF,
            rank: components.len(),
        },
    })
}

/// Uniform grid helper.
pub fn linear_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![min];
    }
    (0..n)
        .map(|i| min + (max - min) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn vacuum_wigner_peak_and_normalization() {
        let v = OscState::vacuum(40).unwrap();
        let g = linear_grid(-4.0, 4.0, 41);
        let w = wigner(&v, &g, &g).unwrap();
        // W(0,0) = 1/π
        let mid = g.len() / 2;
        assert_relative_eq!(w.values[mid][mid], 1.0 / std::f64::consts::PI, epsilon = 1e-6);
        // isotropy: W(q,0) = W(0,q)
        assert_relative_eq!(w.values[mid + 5][mid], w.values[mid][mid + 5], epsilon = 1e-9);
        assert_relative_eq!(w.grid_integral(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn fock_one_is_negative_at_origin() {
        let s = OscState::fock(40, 1).unwrap();
        let g = linear_grid(-1.0, 1.0, 3);
        let w = wigner(&s, &g, &g).unwrap();
        assert_relative_eq!(w.values[1][1], -1.0 / std::f64::consts::PI, epsilon = 1e-8);
    }

    #[test]
    fn mixed_state_wigner_averages_components() {
        let dim = 30;
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        rho[(0, 0)] = C64::new(0.5, 0.0);
        rho[(1, 1)] = C64::new(0.5, 0.0);
        let s = OscState::mixed(rho, vec![dim]).unwrap();
        let g = linear_grid(-0.5, 0.5, 3);
        let w = wigner(&s, &g, &g).unwrap();
        // (1/2)(1/π) + (1/2)(−1/π) = 0 at the origin
        assert_relative_eq!(w.values[1][1], 0.0, epsilon = 1e-9);
        assert_eq!(w.meta.rank, 2);
    }
}
