//! Physical constants (SI). All dimensionful inputs are converted to SI at
//! the boundary; oscillator-frame computations use dimensionless quadratures
//! with `[q, p] = i`.

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J / K.
pub const KB: f64 = 1.380_649e-23;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_068_92e-27;

/// Default atomic mass used throughout the examples (strontium-88), in u.
pub const DEFAULT_MASS_U: f64 = 87.906;
