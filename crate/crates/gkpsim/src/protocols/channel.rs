//! Closed-form channel algebra over sums of displacement operators.
//!
//! A channel Kraus operator assembled from conditional displacements is a
//! linear combination `Σ c_j D(α_j)`. Products reduce by the composition
//! law `D(α)D(β) = e^{−iA(α,β)/2} D(α+β)` with
//! `A(α,β) = Re α Im β − Im α Re β`, so whole multi-round channels can be
//! composed symbolically and only materialized once at the end.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::Result;
use crate::fock::{self, FockOperator};
use crate::gkp::braiding_phase;
use crate::linalg;

/// `Σ c_j D(α_j)` with exact composition of displacement products.
#[derive(Debug, Clone)]
pub struct DisplacementSum {
    terms: Vec<(C64, C64)>, // (coefficient, amplitude)
}

impl DisplacementSum {
    pub fn identity() -> Self {
        Self {
            terms: vec![(C64::new(1.0, 0.0), C64::new(0.0, 0.0))],
        }
    }

    pub fn displacement(coeff: C64, alpha: C64) -> Self {
        Self {
            terms: vec![(coeff, alpha)],
        }
    }

    pub fn from_terms(terms: Vec<(C64, C64)>) -> Self {
        let mut s = Self { terms };
        s.merge();
        s
    }

    pub fn terms(&self) -> &[(C64, C64)] {
        &self.terms
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(c0, a)| (c0 * c, a)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(terms)
    }

    /// Operator product `self · other` via the composition law.
    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(c1, a) in &self.terms {
            for &(c2, b) in &other.terms {
                let phase = C64::from_polar(1.0, -0.5 * braiding_phase(a, b));
                terms.push((c1 * c2 * phase, a + b));
            }
        }
        Self::from_terms(terms)
    }

    fn merge(&mut self) {
        let mut merged: Vec<(C64, C64)> = Vec::new();
        'outer: for &(c, a) in &self.terms {
            for entry in merged.iter_mut() {
                if (entry.1 - a).norm() < 1e-12 {
                    entry.0 += c;
                    continue 'outer;
                }
            }
            merged.push((c, a));
        }
        merged.retain(|&(c, _)| c.norm() > 1e-15);
        self.terms = merged;
    }

    /// Materialize as a dense operator at the given cutoff.
    pub fn to_operator(&self, dim: usize) -> Result<FockOperator> {
        let mut acc = nalgebra::DMatrix::<C64>::zeros(dim, dim);
        for &(c, a) in &self.terms {
            let d = fock::displacement(a, dim)?;
            acc += d.matrix() * c;
        }
        FockOperator::new(acc, vec![dim])
    }

    /// Term-by-term equality after canonical merging.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.terms.len() != other.terms.len() {
            return false;
        }
        'outer: for &(c, a) in &self.terms {
            for &(c2, a2) in &other.terms {
                if (a - a2).norm() < 1e-9 && (c - c2).norm() < tol {
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

/// `(−1)^ξ = e^{iπξ}` shorthand of the braiding algebra.
pub fn phase_pow(xi: f64) -> C64 {
    C64::from_polar(1.0, PI * xi)
}

/// Half-stabilizer displacement `D(2ξ√π)` as a symbolic term.
pub fn stab_pow(xi: f64) -> DisplacementSum {
    DisplacementSum::displacement(C64::new(1.0, 0.0), C64::new(2.0 * xi * PI.sqrt(), 0.0))
}

/// Corrective momentum displacement `D(iξ√π/2)` as a symbolic term.
pub fn corr_pow(xi: f64) -> DisplacementSum {
    DisplacementSum::displacement(C64::new(1.0, 0.0), C64::new(0.0, xi * PI.sqrt() / 2.0))
}

/// The closed-form Kraus pair of one corrective round with parameter `δ`,
/// pre-braided so the correction sits to the right:
/// `M₊ = [(−1)^{δ/4} S^{1/2} + i(−1)^{−δ/4} S^{−1/2}]/2 · C^{δ/2}` and the
/// sign-flipped partner.
pub fn closed_form_round(delta: f64) -> (DisplacementSum, DisplacementSum) {
    let half = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 1.0);
    let m_plus = stab_pow(0.5)
        .scale(phase_pow(delta / 4.0) * half)
        .add(&stab_pow(-0.5).scale(i * phase_pow(-delta / 4.0) * half))
        .mul(&corr_pow(delta / 2.0));
    let m_minus = stab_pow(0.5)
        .scale(phase_pow(-delta / 4.0) * half)
        .add(&stab_pow(-0.5).scale(-i * phase_pow(delta / 4.0) * half))
        .mul(&corr_pow(-delta / 2.0));
    (m_plus, m_minus)
}

/// Closed-form Kraus set for a sequence of corrective rounds (2^r
/// operators), composed entirely in the displacement algebra.
pub fn closed_form_channel(deltas: &[f64]) -> Vec<DisplacementSum> {
    let mut kraus = vec![DisplacementSum::identity()];
    for &delta in deltas {
        let (mp, mm) = closed_form_round(delta);
        let mut next = Vec::with_capacity(kraus.len() * 2);
        for k in &kraus {
            next.push(mp.mul(k));
            next.push(mm.mul(k));
        }
        kraus = next;
    }
    kraus
}

/// Kraus set of the first `deltas.len()` corrective rounds evaluated as
/// interior blocks: each operator is built at `dim + pad` and truncated to
/// the leading `dim × dim` block, so block entries are free of shared
/// cutoff junk.
pub fn closed_form_channel_ops(deltas: &[f64], dim: usize, pad: usize) -> Result<Vec<FockOperator>> {
    let sums = closed_form_channel(deltas);
    sums.iter()
        .map(|s| {
            let big = s.to_operator(dim + pad)?;
            Ok(truncate_operator(&big, dim))
        })
        .collect()
}

/// Leading `dim × dim` block of a single-mode operator.
pub fn truncate_operator(op: &FockOperator, dim: usize) -> FockOperator {
    let m = op.matrix().view((0, 0), (dim, dim)).into_owned();
    FockOperator::new(m, vec![dim]).expect("square block")
}

/// Frobenius distance between the Choi matrices of two channels given by
/// Kraus sets, computed from pairwise Hilbert-Schmidt inner products so the
/// `d² × d²` Choi matrices are never formed.
pub fn choi_distance(kraus_a: &[FockOperator], kraus_b: &[FockOperator]) -> f64 {
    let d = kraus_a
        .first()
        .map(|k| k.dim())
        .or_else(|| kraus_b.first().map(|k| k.dim()))
        .unwrap_or(1);
    let gram = |xs: &[FockOperator], ys: &[FockOperator]| -> f64 {
        let mut acc = 0.0;
        for x in xs {
            for y in ys {
                acc += linalg::fro_inner(x.matrix(), y.matrix()).norm_sqr();
            }
        }
        acc
    };
    let aa = gram(kraus_a, kraus_a);
    let bb = gram(kraus_b, kraus_b);
    let ab = gram(kraus_a, kraus_b);
    ((aa + bb - 2.0 * ab).max(0.0)).sqrt() / d as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn composition_law_matches_matrices() {
        let dim = 90;
        let a = C64::new(1.1, 0.4);
        let b = C64::new(-0.3, 0.9);
        let prod = DisplacementSum::displacement(C64::new(1.0, 0.0), a)
            .mul(&DisplacementSum::displacement(C64::new(1.0, 0.0), b));
        assert_eq!(prod.terms().len(), 1);
        let (c, amp) = prod.terms()[0];
        assert_relative_eq!((amp - (a + b)).norm(), 0.0, epsilon = 1e-14);

        let lhs = fock::displacement(a, dim)
            .unwrap()
            .mul(&fock::displacement(b, dim).unwrap())
            .unwrap();
        let rhs = fock::displacement(a + b, dim).unwrap().scale(c);
        // compare interior blocks; the residue is truncation of the
        // product of two cutoff exponentials (braiding-level, ≤ 1e−6)
        let mut diff = 0.0f64;
        for i in 0..dim - 30 {
            for j in 0..dim - 30 {
                diff += (lhs.matrix()[(i, j)] - rhs.matrix()[(i, j)]).norm_sqr();
            }
        }
        assert!(diff.sqrt() < 1e-6, "diff {}", diff.sqrt());
    }

    #[test]
    fn round_one_delta_one_has_common_pair_factor() {
        // at δ = 1 the round factorizes into the symmetric pair
        // (S^{1/2}+S^{−1/2})/2 times (−1)^{±1/4} C^{±1/2}
        let (mp, mm) = closed_form_round(1.0);
        let half = C64::new(0.5, 0.0);
        let pair = stab_pow(0.5).scale(half).add(&stab_pow(-0.5).scale(half));
        let target_p = pair.mul(&corr_pow(0.5).scale(phase_pow(0.25)));
        let target_m = pair.mul(&corr_pow(-0.5).scale(phase_pow(-0.25)));
        assert!(mp.approx_eq(&target_p, 1e-12));
        assert!(mm.approx_eq(&target_m, 1e-12));
    }

    #[test]
    fn round_two_delta_half_gives_three_positions() {
        // composing δ₂ = 1/2 after δ₁ = 1: stabilizer part
        // (S + √2 + S^{−1})/4 times phased corrections
        let kraus = closed_form_channel(&[1.0, 0.5]);
        assert_eq!(kraus.len(), 4);
        let half = C64::new(0.5, 0.0);
        let quarter = half * half;
        let sqrt2 = C64::new(std::f64::consts::SQRT_2, 0.0);
        let three = stab_pow(1.0)
            .scale(quarter)
            .add(&DisplacementSum::identity().scale(quarter * sqrt2))
            .add(&stab_pow(-1.0).scale(quarter));
        // the (+,+) branch: C^{1/4} from round 2 after C^{1/2} from round 1
        let corr = corr_pow(0.25).mul(&corr_pow(0.5));
        let target = three
            .mul(&corr)
            .scale(phase_pow(0.25) * phase_pow(0.25));
        let found = kraus.iter().any(|k| k.approx_eq(&target, 1e-9));
        assert!(found, "no branch matches the three-position closed form");
    }

    #[test]
    fn channel_is_trace_preserving_symbolically() {
        // Σ M†M = 1 for each round count
        for rounds in 1..=3usize {
            let deltas: Vec<f64> = [1.0, 0.5, 0.31][..rounds].to_vec();
            let kraus = closed_form_channel(&deltas);
            let mut acc: Option<DisplacementSum> = None;
            for k in kraus {
                // adjoint of Σ c D(α) = Σ c* D(−α)
                let adj = DisplacementSum::from_terms(
                    k.terms().iter().map(|&(c, a)| (c.conj(), -a)).collect(),
                );
                let prod = adj.mul(&k);
                acc = Some(match acc {
                    None => prod,
                    Some(s) => s.add(&prod),
                });
            }
            let total = acc.unwrap();
            assert!(
                total.approx_eq(&DisplacementSum::identity(), 1e-10),
                "rounds {rounds}: Σ M†M = {:?}",
                total.terms()
            );
        }
    }
}
