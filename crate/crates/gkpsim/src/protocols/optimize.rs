//! Deterministic scalar minimization for the corrective-distance schedule.

use crate::error::{GkpError, Result};

/// Golden-section search for the minimum of `f` on `[a, b]` to absolute
/// tolerance `tol` in the argument. Returns `(x_min, f_min)`.
pub fn golden_section_min<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanDiagnostics {
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// True when the coarse bracket failed and a dense grid scan was used.
    pub grid_fallback: bool,
}

/// Bracket a minimum by a coarse scan, then refine by golden section; falls
/// back to a 200-point grid scan when no interior minimum brackets.
pub fn bracketed_minimize<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    diagnostics: &mut ScanDiagnostics,
) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !(hi > lo) {
        return Err(GkpError::InvalidParameters("empty search interval".into()));
    }
    const COARSE: usize = 21;
    let xs: Vec<f64> = (0..COARSE)
        .map(|i| lo + (hi - lo) * i as f64 / (COARSE - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    diagnostics.evaluations += COARSE;
    let (imin, _) = fs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();

    if imin == 0 || imin == COARSE - 1 {
        // monotone over the scan: no interior bracket
        diagnostics.grid_fallback = true;
        const GRID: usize = 200;
        let mut best = (lo, f64::INFINITY);
        for i in 0..GRID {
            let x = lo + (hi - lo) * i as f64 / (GRID - 1) as f64;
            let y = f(x);
            if y < best.1 {
                best = (x, y);
            }
        }
        diagnostics.evaluations += GRID;
        return Ok(best);
    }

    let a = xs[imin - 1];
    let b = xs[imin + 1];
    let mut gs_evals = 0usize;
    let (x, y) = golden_section_min(
        |x| {
            gs_evals += 1;
            f(x)
        },
        a,
        b,
        tol,
    );
    diagnostics.evaluations += gs_evals;
    Ok((x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_minimum() {
        let (x, y) = golden_section_min(|x| (x - 1.3) * (x - 1.3) + 2.0, 0.0, 2.0, 1e-6);
        assert_relative_eq!(x, 1.3, epsilon = 1e-5);
        assert_relative_eq!(y, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn bracketed_finds_interior_min() {
        let mut diag = ScanDiagnostics::default();
        let (x, _) = bracketed_minimize(|x| (x - 0.77).powi(2), 0.05, 2.0, 1e-3, &mut diag).unwrap();
        assert!((x - 0.77).abs() < 1e-3);
        assert!(!diag.grid_fallback);
    }

    #[test]
    fn monotone_objective_falls_back_to_grid() {
        let mut diag = ScanDiagnostics::default();
        let (x, _) = bracketed_minimize(|x| x, 0.0, 1.0, 1e-3, &mut diag).unwrap();
        assert!(diag.grid_fallback);
        assert!(x < 1e-6);
    }
}
