//! Optical dipole trap models: tweezer and 2D-lattice potentials and the
//! oscillator parameters extracted from them.
//!
//! Two extraction routes exist and are held to agree: closed forms from
//! the quartic Taylor expansion of each potential, and a numerical
//! Richardson-extrapolated finite-difference expansion of the exact
//! potential (also used for lattice geometries away from 45°).
//!
//! The anharmonicities and couplings are dimensionless and can be read as
//! an inverse boson capacity, `η, ε ∝ ħω / U₀`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::constants::{ATOMIC_MASS_UNIT, HBAR, KB};
use crate::error::{GkpError, Result};
use crate::fock::{self, FockOperator};
use crate::linalg;
use crate::warn::SimWarning;

/// Gaussian-beam tweezer: radial confinement from the beam waist, axial
/// from the Rayleigh length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TweezerSpec {
    /// Trap depth, J.
    pub depth: f64,
    /// Beam waist, m.
    pub waist_w0: f64,
    /// Trap-light wavelength, m.
    pub wavelength: f64,
    /// Atomic mass, kg.
    pub mass: f64,
}

impl TweezerSpec {
    pub fn new(depth: f64, waist_w0: f64, wavelength: f64, mass: f64) -> Result<Self> {
        let s = Self {
            depth,
            waist_w0,
            wavelength,
            mass,
        };
        s.validate()?;
        Ok(s)
    }

    /// Lab-unit constructor: depth in mK (via k_B), mass in u.
    pub fn from_lab_units(depth_mk: f64, waist_w0: f64, wavelength: f64, mass_u: f64) -> Result<Self> {
        Self::new(
            depth_mk * 1e-3 * KB,
            waist_w0,
            wavelength,
            mass_u * ATOMIC_MASS_UNIT,
        )
    }

    /// The strontium-88 example: 1.5 mK depth, 500 nm waist, 1040 nm light.
    pub fn sr88_default() -> Self {
        Self::from_lab_units(1.5, 500e-9, 1040e-9, crate::constants::DEFAULT_MASS_U)
            .expect("default spec is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if [self.depth, self.waist_w0, self.wavelength, self.mass]
            .iter()
            .any(|&x| !(x > 0.0) || !x.is_finite())
        {
            return Err(GkpError::InvalidParameters(
                "tweezer spec entries must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    /// Rayleigh length `z_R = π w₀² / λ`.
    pub fn rayleigh_length(&self) -> f64 {
        PI * self.waist_w0 * self.waist_w0 / self.wavelength
    }

    /// Tight foci push the paraxial description to its limits; flag specs
    /// with `z_R < 2 w₀`.
    pub fn paraxial_warning(&self) -> Option<SimWarning> {
        let zr = self.rayleigh_length();
        if zr < 2.0 * self.waist_w0 {
            Some(SimWarning::Assumption {
                context: "tweezer paraxial model".into(),
                detail: format!(
                    "z_R = {:.3e} m < 2 w0 = {:.3e} m: paraxial Gaussian is an estimate",
                    zr,
                    2.0 * self.waist_w0
                ),
            })
        } else {
            None
        }
    }
}

/// Rectangular folded 2D lattice with a Gaussian envelope along `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Trap depth, J.
    pub depth: f64,
    /// Beam waist setting the out-of-plane (z) confinement, m.
    pub beam_waist_w0: f64,
    /// Lattice-light wavelength, m.
    pub wavelength: f64,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Lattice geometry angle, rad; 45° gives the square lattice.
    pub theta: f64,
}

impl LatticeSpec {
    pub fn new(depth: f64, beam_waist_w0: f64, wavelength: f64, mass: f64, theta: f64) -> Result<Self> {
        let s = Self {
            depth,
            beam_waist_w0,
            wavelength,
            mass,
            theta,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_lab_units(depth_mk: f64, beam_waist_w0: f64, wavelength: f64, mass_u: f64) -> Result<Self> {
        Self::new(
            depth_mk * 1e-3 * KB,
            beam_waist_w0,
            wavelength,
            mass_u * ATOMIC_MASS_UNIT,
            PI / 4.0,
        )
    }

    /// The strontium-88 example: 1.5 mK depth, 20 μm beam waist, 1040 nm
    /// light, square geometry.
    pub fn sr88_default() -> Self {
        Self::from_lab_units(1.5, 20e-6, 1040e-9, crate::constants::DEFAULT_MASS_U)
            .expect("default spec is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if [self.depth, self.beam_waist_w0, self.wavelength, self.mass]
            .iter()
            .any(|&x| !(x > 0.0) || !x.is_finite())
        {
            return Err(GkpError::InvalidParameters(
                "lattice spec entries must be positive and finite".into(),
            ));
        }
        if !(self.theta > 0.0 && self.theta < PI / 2.0) {
            return Err(GkpError::InvalidParameters(
                "lattice angle must lie in (0, π/2)".into(),
            ));
        }
        Ok(())
    }

    pub fn is_square(&self) -> bool {
        (self.theta - PI / 4.0).abs() < 1e-12
    }
}

/// Oscillator frequencies, anharmonicities and couplings of a trap.
///
/// The grid-code mode is `z` with anharmonicity `η_z`, coupled with
/// strength `ε_zx` (and by x↔y symmetry `ε_zy = ε_zx`) to the transverse
/// modes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OscillatorParams {
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
    pub eta_z: f64,
    pub eta_x: f64,
    pub eps_zx: f64,
    pub eps_xy: f64,
    /// Trap depth the parameters were derived from, J.
    pub depth: f64,
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        if [self.omega_x, self.omega_y, self.omega_z]
            .iter()
            .any(|&w| !(w > 0.0))
        {
            return Err(GkpError::InvalidParameters(
                "oscillator frequencies must be positive".into(),
            ));
        }
        if [self.eta_z, self.eta_x, self.eps_zx, self.eps_xy]
            .iter()
            .any(|&e| !(e > 0.0 && e < 1.0))
        {
            return Err(GkpError::InvalidParameters(
                "anharmonicities and couplings must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Coupling-corrected grid-mode frequency
    /// `ω̃_z = ω_z √(1 − ε_zx − ε_zy)`, absorbing the transverse vacuum
    /// fluctuations of the cross terms into the harmonic part.
    pub fn corrected_omega_z(&self) -> f64 {
        self.omega_z * (1.0 - 2.0 * self.eps_zx).sqrt()
    }
}

/// Tweezer oscillator parameters (quartic expansion of the Gaussian beam):
/// `ω_z² = 2U₀/(m z_R²)`, `ω_x² = 4U₀/(m w₀²)`, `η_z = ħω_z/4U₀`,
/// `η_x = ħω_x/8U₀`, `ε_zx = ħω_x/2U₀`, `ε_xy = ħω_x/4U₀`.
pub fn tweezer_params(spec: &TweezerSpec) -> Result<OscillatorParams> {
    spec.validate()?;
    let zr = spec.rayleigh_length();
    let omega_z = (2.0 * spec.depth / (spec.mass * zr * zr)).sqrt();
    let omega_x = (4.0 * spec.depth / (spec.mass * spec.waist_w0 * spec.waist_w0)).sqrt();
    let params = OscillatorParams {
        omega_x,
        omega_y: omega_x,
        omega_z,
        eta_z: HBAR * omega_z / (4.0 * spec.depth),
        eta_x: HBAR * omega_x / (8.0 * spec.depth),
        eps_zx: HBAR * omega_x / (2.0 * spec.depth),
        eps_xy: HBAR * omega_x / (4.0 * spec.depth),
        depth: spec.depth,
    };
    params.validate()?;
    Ok(params)
}

/// Lattice oscillator parameters. At 45° the closed forms apply
/// (`ω_z² = 4U₀/(m w₀²)`, `ω_x² = 4π²U₀/(m λ²)`, `η_z = ħω_z/8U₀`,
/// `η_x = ħω_x/12U₀`, `ε = ħω_x/4U₀`); other angles go through the
/// numerical expansion of the exact potential.
pub fn lattice_params(spec: &LatticeSpec) -> Result<OscillatorParams> {
    spec.validate()?;
    if spec.is_square() {
        let w0 = spec.beam_waist_w0;
        let omega_z = (4.0 * spec.depth / (spec.mass * w0 * w0)).sqrt();
        let omega_x =
            (4.0 * PI * PI * spec.depth / (spec.mass * spec.wavelength * spec.wavelength)).sqrt();
        let params = OscillatorParams {
            omega_x,
            omega_y: omega_x,
            omega_z,
            eta_z: HBAR * omega_z / (8.0 * spec.depth),
            eta_x: HBAR * omega_x / (12.0 * spec.depth),
            eps_zx: HBAR * omega_x / (4.0 * spec.depth),
            eps_xy: HBAR * omega_x / (4.0 * spec.depth),
            depth: spec.depth,
        };
        params.validate()?;
        Ok(params)
    } else {
        let spec_copy = *spec;
        let scale_x = spec.wavelength / (4.0 * PI * spec.theta.cos());
        let scale_y = spec.wavelength / (4.0 * PI * spec.theta.sin());
        let scale_z = spec.beam_waist_w0 / 4.0;
        extract_params_numeric(
            |x, y, z| lattice_potential(&spec_copy, x, y, z),
            spec.mass,
            spec.depth,
            [scale_x, scale_y, scale_z],
        )
    }
}

/// Exact tweezer potential: Lorentzian along the axis, Gaussian radially,
/// `U = −U₀ (1+z²/z_R²)^{−1} exp[−2(x²+y²)/(w₀²(1+z²/z_R²))]`.
pub fn tweezer_potential(spec: &TweezerSpec, x: f64, y: f64, z: f64) -> f64 {
    let zr = spec.rayleigh_length();
    let expand = 1.0 + (z / zr) * (z / zr);
    let r2 = x * x + y * y;
    -spec.depth / expand * (-2.0 * r2 / (spec.waist_w0 * spec.waist_w0 * expand)).exp()
}

/// Exact folded-lattice potential with the Gaussian z-envelope:
/// `U = −(U₀/8) e^{−2z²/w₀²} [2 + cos(k(xc+ys)) + cos(k(xc−ys))
///      + 2cos(k y s) + 2cos(k x c)]`, `k = 4π/λ`.
pub fn lattice_potential(spec: &LatticeSpec, x: f64, y: f64, z: f64) -> f64 {
    let k = 4.0 * PI / spec.wavelength;
    let c = spec.theta.cos();
    let s = spec.theta.sin();
    let bracket = 2.0
        + (k * (x * c + y * s)).cos()
        + (k * (x * c - y * s)).cos()
        + 2.0 * (k * y * s).cos()
        + 2.0 * (k * x * c).cos();
    let envelope = (-2.0 * z * z / (spec.beam_waist_w0 * spec.beam_waist_w0)).exp();
    -spec.depth / 8.0 * envelope * bracket
}

// ---------------------------------------------------------------------
// numerical Taylor expansion of an exact potential

fn richardson_d2(f: &impl Fn(f64) -> f64, h: f64) -> f64 {
    let d2 = |h: f64| (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    let r1 = |h: f64| (4.0 * d2(h / 2.0) - d2(h)) / 3.0;
    (16.0 * r1(h / 2.0) - r1(h)) / 15.0
}

fn richardson_d4(f: &impl Fn(f64) -> f64, h: f64) -> f64 {
    let d4 = |h: f64| {
        (f(2.0 * h) - 4.0 * f(h) + 6.0 * f(0.0) - 4.0 * f(-h) + f(-2.0 * h)) / (h * h * h * h)
    };
    let r1 = |h: f64| (4.0 * d4(h / 2.0) - d4(h)) / 3.0;
    (16.0 * r1(h / 2.0) - r1(h)) / 15.0
}

fn richardson_d2d2(f: &impl Fn(f64, f64) -> f64, h1: f64, h2: f64) -> f64 {
    let d22 = |h1: f64, h2: f64| {
        let mut acc = 0.0;
        for (i, wi) in [(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)] {
            for (j, wj) in [(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)] {
                acc += wi * wj * f(i * h1, j * h2);
            }
        }
        acc / (h1 * h1 * h2 * h2)
    };
    let r1 = |s: f64| (4.0 * d22(h1 * s / 2.0, h2 * s / 2.0) - d22(h1 * s, h2 * s)) / 3.0;
    (16.0 * r1(0.5) - r1(1.0)) / 15.0
}

/// Extract oscillator parameters from an exact potential by
/// finite-difference Taylor expansion at the trap bottom. `scales` sets
/// the stencil widths per axis (a small fraction is used internally).
pub fn extract_params_numeric(
    potential: impl Fn(f64, f64, f64) -> f64,
    mass: f64,
    depth: f64,
    scales: [f64; 3],
) -> Result<OscillatorParams> {
    let h: Vec<f64> = scales.iter().map(|s| s * 0.2).collect();

    let along = |axis: usize| {
        let p = &potential;
        move |t: f64| match axis {
            0 => p(t, 0.0, 0.0),
            1 => p(0.0, t, 0.0),
            _ => p(0.0, 0.0, t),
        }
    };

    let curv = [
        richardson_d2(&along(0), h[0]),
        richardson_d2(&along(1), h[1]),
        richardson_d2(&along(2), h[2]),
    ];
    if curv.iter().any(|&c| !(c > 0.0)) {
        return Err(GkpError::InvalidParameters(
            "potential is not confining at the origin".into(),
        ));
    }
    let omega: Vec<f64> = curv.iter().map(|&c| (c / mass).sqrt()).collect();

    let quart = [
        richardson_d4(&along(0), h[0]) / 24.0,
        richardson_d4(&along(1), h[1]) / 24.0,
        richardson_d4(&along(2), h[2]) / 24.0,
    ];
    // η_j from the real-space quartic coefficient: c₄ = −η_j m² ω_j³ / ħ
    let eta = |j: usize| -quart[j] * HBAR / (mass * mass * omega[j].powi(3));

    let c_zx = richardson_d2d2(&|z, x| potential(x, 0.0, z), h[2], h[0]) / 4.0;
    let c_xy = richardson_d2d2(&|x, y| potential(x, y, 0.0), h[0], h[1]) / 4.0;
    let eps_zx = -c_zx * HBAR / (mass * mass * omega[2] * omega[2] * omega[0]);
    let eps_xy = -c_xy * HBAR / (mass * mass * omega[0] * omega[0] * omega[1]);

    let params = OscillatorParams {
        omega_x: omega[0],
        omega_y: omega[1],
        omega_z: omega[2],
        eta_z: eta(2),
        eta_x: eta(0),
        eps_zx,
        eps_xy,
        depth,
    };
    params.validate()?;
    Ok(params)
}

// ---------------------------------------------------------------------
// Hamiltonians

fn quad_powers(dim: usize) -> Result<(DMatrix<C64>, DMatrix<C64>, DMatrix<C64>)> {
    // (n, q², q⁴); a frozen mode (dim 1) contributes zeros
    if dim == 1 {
        let z = DMatrix::<C64>::zeros(1, 1);
        return Ok((z.clone(), z.clone(), z));
    }
    let n = fock::number(dim)?.into_matrix();
    let (q, _) = fock::quadratures(dim)?;
    let q2 = linalg::matmul(q.matrix(), q.matrix());
    let q4 = linalg::matmul(&q2, &q2);
    Ok((n, q2, q4))
}

/// Multi-mode anharmonic trap Hamiltonian `H/ħ` (rad/s) on modes ordered
/// `[x, y, z]`:
///
/// `H/ħ = Σ_j ω_j n_j − η_z ω_z q_z⁴ − η_x ω_x (q_x⁴ + q_y⁴)
///        − ε_zx ω_z q_z²(q_x² + q_y²) − ε_xy ω_x q_x² q_y²`.
///
/// With `corrected = true` the grid mode is rewritten in the rescaled
/// basis of `ω̃_z = ω_z √(1−2ε_zx)`: the transverse vacuum fluctuations of
/// the cross terms move into the harmonic part and only the
/// normal-ordered residue `q_z²(q_x² − ½)` remains.
pub fn anharmonic_hamiltonian(
    params: &OscillatorParams,
    dims: [usize; 3],
    corrected: bool,
) -> Result<FockOperator> {
    params.validate()?;
    let [dx, dy, dz] = dims;
    let (nx, qx2, qx4) = quad_powers(dx)?;
    let (ny, qy2, qy4) = quad_powers(dy)?;
    let (nz, qz2, qz4) = quad_powers(dz)?;

    let idm = |d: usize| DMatrix::<C64>::identity(d, d);
    let kron3 = |a: &DMatrix<C64>, b: &DMatrix<C64>, c: &DMatrix<C64>| a.kronecker(b).kronecker(c);

    let p = params;
    let mut h = kron3(&nx, &idm(dy), &idm(dz)) * C64::new(p.omega_x, 0.0)
        + kron3(&idm(dx), &ny, &idm(dz)) * C64::new(p.omega_y, 0.0);
    // quartic anharmonicities on the transverse modes
    h -= kron3(&qx4, &idm(dy), &idm(dz)) * C64::new(p.eta_x * p.omega_x, 0.0);
    h -= kron3(&idm(dx), &qy4, &idm(dz)) * C64::new(p.eta_x * p.omega_y, 0.0);
    // transverse-transverse coupling
    h -= kron3(&qx2, &qy2, &idm(dz)) * C64::new(p.eps_xy * p.omega_x, 0.0);

    if corrected {
        let kappa2 = 1.0 - 2.0 * p.eps_zx; // (ω̃_z/ω_z)²
        let omega_zt = p.omega_z * kappa2.sqrt();
        h += kron3(&idm(dx), &idm(dy), &nz) * C64::new(omega_zt, 0.0);
        // q_z⁴ picks up 1/κ² from the basis rescaling
        h -= kron3(&idm(dx), &idm(dy), &qz4) * C64::new(p.eta_z * p.omega_z / kappa2, 0.0);
        // normal-ordered residual coupling q̃_z²(q_j² − ½)/κ
        let kappa = kappa2.sqrt();
        let half_x = &qx2 - idm(dx) * C64::new(0.5, 0.0);
        let half_y = &qy2 - idm(dy) * C64::new(0.5, 0.0);
        h -= kron3(&half_x, &idm(dy), &qz2) * C64::new(p.eps_zx * p.omega_z / kappa, 0.0);
        h -= kron3(&idm(dx), &half_y, &qz2) * C64::new(p.eps_zx * p.omega_z / kappa, 0.0);
    } else {
        h += kron3(&idm(dx), &idm(dy), &nz) * C64::new(p.omega_z, 0.0);
        h -= kron3(&idm(dx), &idm(dy), &qz4) * C64::new(p.eta_z * p.omega_z, 0.0);
        h -= kron3(&qx2, &idm(dy), &qz2) * C64::new(p.eps_zx * p.omega_z, 0.0);
        h -= kron3(&idm(dx), &qy2, &qz2) * C64::new(p.eps_zx * p.omega_z, 0.0);
    }

    FockOperator::new(h, vec![dx, dy, dz])
}

/// Single-mode anharmonic oscillator `H/ħ = ω (n − η q⁴)`.
pub fn single_mode_anharmonic(omega: f64, eta: f64, dim: usize) -> Result<FockOperator> {
    let n = fock::number(dim)?;
    let (q, _) = fock::quadratures(dim)?;
    let q2 = linalg::matmul(q.matrix(), q.matrix());
    let q4 = linalg::matmul(&q2, &q2);
    let h = n.matrix() * C64::new(omega, 0.0) - q4 * C64::new(omega * eta, 0.0);
    FockOperator::new(h, vec![dim])
}

/// Intensity-dependent AC-Stark depth `ħ Ω²/(4δ)` of a far-detuned beam
/// (positive for red detuning by the sign convention used here). A
/// warning accompanies the value when `δ/Ω < 10`.
pub fn ac_stark_depth(rabi: f64, detuning: f64) -> Result<(f64, Option<SimWarning>)> {
    if detuning == 0.0 {
        return Err(GkpError::InvalidParameters(
            "ac_stark_depth: zero detuning".into(),
        ));
    }
    if !(rabi >= 0.0) {
        return Err(GkpError::InvalidParameters(
            "ac_stark_depth: Rabi frequency must be non-negative".into(),
        ));
    }
    let depth = HBAR * rabi * rabi / (4.0 * detuning);
    let warning = if rabi > 0.0 && detuning.abs() / rabi < 10.0 {
        Some(SimWarning::Assumption {
            context: "ac_stark_depth".into(),
            detail: format!(
                "detuning/rabi = {:.2} < 10: perturbative far-detuned form is inaccurate",
                detuning.abs() / rabi
            ),
        })
    } else {
        None
    };
    Ok((depth, warning))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tw() -> TweezerSpec {
        TweezerSpec::sr88_default()
    }

    fn lat() -> LatticeSpec {
        LatticeSpec::sr88_default()
    }

    #[test]
    fn tweezer_reference_column() {
        let p = tweezer_params(&tw()).unwrap();
        let two_pi = 2.0 * PI;
        assert_relative_eq!(p.omega_z / two_pi, 112e3, max_relative = 0.02);
        assert_relative_eq!(p.omega_x / two_pi, 240e3, max_relative = 0.02);
        assert_relative_eq!(p.eta_z, 90e-5, max_relative = 0.02);
        assert_relative_eq!(p.eps_zx, 3.8e-3, max_relative = 0.02);
    }

    #[test]
    fn lattice_reference_column() {
        let p = lattice_params(&lat()).unwrap();
        let two_pi = 2.0 * PI;
        assert_relative_eq!(p.omega_z / two_pi, 6e3, max_relative = 0.02);
        assert_relative_eq!(p.omega_x / two_pi, 362e3, max_relative = 0.02);
        assert_relative_eq!(p.eta_z, 2.4e-5, max_relative = 0.02);
        assert_relative_eq!(p.eps_zx, 2.9e-3, max_relative = 0.02);
    }

    #[test]
    fn rayleigh_length_formula() {
        // z_R = πw₀²/λ gives 755 nm at 500 nm / 1040 nm; the often-quoted
        // 966 nm corresponds to the 813 nm magic wavelength instead.
        let zr = tw().rayleigh_length();
        assert_relative_eq!(zr, 755e-9, max_relative = 0.01);
        let sneaky = TweezerSpec::from_lab_units(1.5, 500e-9, 813e-9, 87.906).unwrap();
        assert_relative_eq!(sneaky.rayleigh_length(), 966e-9, max_relative = 0.001);
        // tight focus flags the paraxial assumption
        assert!(tw().paraxial_warning().is_some());
    }

    #[test]
    fn trap_bottom_depth() {
        assert_relative_eq!(tweezer_potential(&tw(), 0.0, 0.0, 0.0), -tw().depth);
        assert_relative_eq!(lattice_potential(&lat(), 0.0, 0.0, 0.0), -lat().depth);
    }

    #[test]
    fn numeric_expansion_matches_closed_forms_tweezer() {
        let spec = tw();
        let p_closed = tweezer_params(&spec).unwrap();
        let p_num = extract_params_numeric(
            |x, y, z| tweezer_potential(&spec, x, y, z),
            spec.mass,
            spec.depth,
            [spec.waist_w0 / 4.0, spec.waist_w0 / 4.0, spec.rayleigh_length() / 4.0],
        )
        .unwrap();
        assert_relative_eq!(p_num.omega_x, p_closed.omega_x, max_relative = 1e-6);
        assert_relative_eq!(p_num.omega_z, p_closed.omega_z, max_relative = 1e-6);
        assert_relative_eq!(p_num.eta_z, p_closed.eta_z, max_relative = 1e-6);
        assert_relative_eq!(p_num.eta_x, p_closed.eta_x, max_relative = 1e-6);
        assert_relative_eq!(p_num.eps_zx, p_closed.eps_zx, max_relative = 1e-6);
        assert_relative_eq!(p_num.eps_xy, p_closed.eps_xy, max_relative = 1e-6);
    }

    #[test]
    fn numeric_expansion_matches_closed_forms_lattice() {
        let spec = lat();
        let p_closed = lattice_params(&spec).unwrap();
        let scale_x = spec.wavelength / (4.0 * PI * spec.theta.cos());
        let p_num = extract_params_numeric(
            |x, y, z| lattice_potential(&spec, x, y, z),
            spec.mass,
            spec.depth,
            [scale_x, scale_x, spec.beam_waist_w0 / 4.0],
        )
        .unwrap();
        assert_relative_eq!(p_num.omega_x, p_closed.omega_x, max_relative = 1e-6);
        assert_relative_eq!(p_num.omega_z, p_closed.omega_z, max_relative = 1e-6);
        assert_relative_eq!(p_num.eta_z, p_closed.eta_z, max_relative = 1e-6);
        assert_relative_eq!(p_num.eta_x, p_closed.eta_x, max_relative = 1e-6);
        assert_relative_eq!(p_num.eps_zx, p_closed.eps_zx, max_relative = 1e-6);
        assert_relative_eq!(p_num.eps_xy, p_closed.eps_xy, max_relative = 1e-6);
    }

    #[test]
    fn eta_ratio_lattice_to_tweezer_at_matched_frequency() {
        // η_z(lattice)/η_z(tweezer) = 1/2 at equal ω_z and U₀
        let t = tweezer_params(&tw()).unwrap();
        // build a lattice with the same ω_z: ω_z = 2√(U₀/m)/w₀ ⇒ match w₀
        let w0 = 2.0 * (tw().depth / tw().mass).sqrt() / t.omega_z;
        let l = LatticeSpec::new(tw().depth, w0, 1040e-9, tw().mass, PI / 4.0).unwrap();
        let lp = lattice_params(&l).unwrap();
        assert_relative_eq!(lp.omega_z, t.omega_z, max_relative = 1e-12);
        assert_relative_eq!(lp.eta_z / t.eta_z, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn depth_scaling() {
        // doubling U₀ scales frequencies by √2 and leaves η·U₀/ω invariant
        let a = tweezer_params(&tw()).unwrap();
        let mut spec2 = tw();
        spec2.depth *= 2.0;
        let b = tweezer_params(&spec2).unwrap();
        assert_relative_eq!(b.omega_z / a.omega_z, 2f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(
            b.eta_z * spec2.depth / b.omega_z,
            a.eta_z * tw().depth / a.omega_z,
            max_relative = 1e-12
        );
    }

    #[test]
    fn harmonic_limit_of_hamiltonian() {
        let mut p = lattice_params(&lat()).unwrap();
        p.eta_z = f64::MIN_POSITIVE;
        p.eta_x = f64::MIN_POSITIVE;
        p.eps_zx = f64::MIN_POSITIVE;
        p.eps_xy = f64::MIN_POSITIVE;
        let h = anharmonic_hamiltonian(&p, [2, 1, 3], false).unwrap();
        // spectrum is ω_x n_x + ω_z n_z
        let (w, _) = linalg::eigh(h.matrix());
        let mut expect: Vec<f64> = (0..2)
            .flat_map(|nx| (0..3).map(move |nz| p.omega_x * nx as f64 + p.omega_z * nz as f64))
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in w.iter().zip(expect.iter()) {
            assert_relative_eq!(got, want, max_relative = 1e-9, epsilon = 1e-3);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let p = lattice_params(&lat()).unwrap();
        for corrected in [false, true] {
            let h = anharmonic_hamiltonian(&p, [3, 3, 8], corrected).unwrap();
            assert!(linalg::hermiticity_defect(h.matrix()) < 1e-12);
        }
    }

    #[test]
    fn ground_state_energy_first_order_perturbation() {
        // E₀ ≈ ω(1/2 − 3η/4) from ⟨0|q⁴|0⟩ = 3/4, here with the n-form
        // (E₀ = −3ηω/4 relative to the harmonic ladder offset)
        let omega = 1.0;
        for &eta in &[1e-4, 5e-4, 1e-3] {
            let h = single_mode_anharmonic(omega, eta, 40).unwrap();
            let (w, _) = linalg::eigh(h.matrix());
            let e0 = w.min();
            let perturbative = -3.0 * eta * omega / 4.0;
            assert_relative_eq!(e0, perturbative, max_relative = 0.01);
        }
    }

    #[test]
    fn corrected_quadratic_spectrum_matches_rescaled_frequency() {
        // ω_z(p² + q²(1−2ε))/2 has the spectrum ω̃_z(n + ½)
        let p = lattice_params(&lat()).unwrap();
        let dim = 40;
        let (q, pp) = fock::quadratures(dim).unwrap();
        let q2 = linalg::matmul(q.matrix(), q.matrix());
        let p2 = linalg::matmul(pp.matrix(), pp.matrix());
        let kappa2 = 1.0 - 2.0 * p.eps_zx;
        let hquad = (&p2 + &q2 * C64::new(kappa2, 0.0)) * C64::new(0.5 * p.omega_z, 0.0);
        let (w, _) = linalg::eigh(&hquad);
        let mut ws: Vec<f64> = w.iter().cloned().collect();
        ws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let omega_t = p.corrected_omega_z();
        // truncation artifacts set in near dim/2; the interior spectrum is
        // exact to solver precision
        for n in 0..16 {
            let expect = omega_t * (n as f64 + 0.5);
            assert_relative_eq!(ws[n], expect, max_relative = 1e-10);
        }
    }

    #[test]
    fn ac_stark_basics() {
        let (d0, _) = ac_stark_depth(0.0, 2.0 * PI * 1e12).unwrap();
        assert_eq!(d0, 0.0);
        let rabi = 2.0 * PI * 1e6;
        let det = 2.0 * PI * 1e9;
        let (d1, w1) = ac_stark_depth(rabi, det).unwrap();
        let (d2, _) = ac_stark_depth(2.0 * rabi, det).unwrap();
        let (d3, _) = ac_stark_depth(rabi, 2.0 * det).unwrap();
        assert!(w1.is_none());
        assert_relative_eq!(d2 / d1, 4.0, max_relative = 1e-12);
        assert_relative_eq!(d3 / d1, 0.5, max_relative = 1e-12);
        assert!(ac_stark_depth(rabi, 0.0).is_err());
        let (_, warn) = ac_stark_depth(rabi, 5.0 * rabi).unwrap();
        assert!(warn.is_some());
    }
}
