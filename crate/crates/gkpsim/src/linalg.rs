//! Dense complex linear-algebra helpers.
//!
//! nalgebra's generic matmul is too slow for the larger density-matrix and
//! Padé workloads, so matrix products go through matrixmultiply's zgemm
//! kernels. Matrices are column-major throughout (nalgebra's layout).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// `alpha * a * b + beta * c`, written into `c`.
pub fn gemm_into(alpha: C64, a: &DMatrix<C64>, b: &DMatrix<C64>, beta: C64, c: &mut DMatrix<C64>) {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "gemm: inner dimensions differ");
    assert_eq!(c.shape(), (m, n), "gemm: output shape");
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a.as_slice().as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_slice().as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [beta.re, beta.im],
            c.as_mut_slice().as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

/// `a * b` using the zgemm kernel.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let mut c = DMatrix::zeros(a.nrows(), b.ncols());
    gemm_into(C64::new(1.0, 0.0), a, b, C64::new(0.0, 0.0), &mut c);
    c
}

/// `a * rho * a^dagger`; the workhorse of Kraus-channel application.
pub fn sandwich(a: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let tmp = matmul(a, rho);
    matmul(&tmp, &a.adjoint())
}

/// Eigendecomposition of a Hermitian matrix: `(eigenvalues, eigenvectors)`
/// with `h = V diag(w) V^dagger`.
pub fn eigh(h: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let se = nalgebra::SymmetricEigen::new(h.clone());
    (se.eigenvalues, se.eigenvectors)
}

/// Matrix exponential by degree-13 Padé approximation with scaling and
/// squaring, on the zgemm kernels.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;

    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm: matrix must be square");
    // 1-norm based scaling
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * C64::new(0.5f64.powi(s), 0.0);

    let id = DMatrix::<C64>::identity(n, n);
    let a2 = matmul(&scaled, &scaled);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a2, &a4);

    let b = |k: usize| C64::new(B[k], 0.0);
    let u_inner = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u_poly = matmul(&a6, &u_inner) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = matmul(&scaled, &u_poly);
    let v_inner = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = matmul(&a6, &v_inner) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .expect("expm: Padé denominator is singular");
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}

/// Hermiticity defect `max |h - h^dagger|` entrywise.
pub fn hermiticity_defect(h: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in i..h.ncols() {
            let d = (h[(i, j)] - h[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Frobenius norm.
pub fn fro_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Trace of a product `tr(a b)` without forming the product.
pub fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    assert_eq!(a.ncols(), b.nrows());
    assert_eq!(a.nrows(), b.ncols());
    let mut t = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

/// `tr(a^dagger b)`, the Frobenius inner product.
pub fn fro_inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn randish(n: usize, seed: u64) -> DMatrix<C64> {
        // deterministic filler; quality is irrelevant here
        let mut s = seed;
        DMatrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let re = ((s >> 33) as f64) / (u32::MAX as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let im = ((s >> 33) as f64) / (u32::MAX as f64) - 0.5;
            C64::new(re, im)
        })
    }

    #[test]
    fn gemm_matches_nalgebra() {
        let a = randish(17, 1);
        let b = randish(17, 2);
        let fast = matmul(&a, &b);
        let slow = &a * &b;
        assert!(fro_norm(&(fast - slow)) < 1e-12);
    }

    #[test]
    fn eigh_reconstructs() {
        let g = randish(12, 3);
        let h = &g + g.adjoint();
        let (w, v) = eigh(&h);
        let rebuilt = &v * DMatrix::from_diagonal(&w.map(|x| C64::new(x, 0.0))) * v.adjoint();
        assert!(fro_norm(&(rebuilt - h)) < 1e-10);
    }

    #[test]
    fn trace_product_matches() {
        let a = randish(9, 4);
        let b = randish(9, 5);
        let direct = (&a * &b).trace();
        assert!((trace_of_product(&a, &b) - direct).norm() < 1e-12);
    }

    #[test]
    fn expm_agrees_with_nalgebra() {
        let a = randish(23, 7) * C64::new(3.0, 0.0);
        let ours = expm(&a);
        let theirs = a.exp();
        let rel = fro_norm(&(&ours - &theirs)) / fro_norm(&theirs);
        assert!(rel < 1e-12, "rel {rel}");
    }
}
