//! CODATA 2018 physical constants, SI units.

use std::f64::consts::PI;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Characteristic impedance of free space, Ω.
pub const VACUUM_IMPEDANCE: f64 = 376.730_313_668;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Debye, C·m.
pub const DEBYE: f64 = 3.335_640_952e-30;

/// Atomic unit of electric dipole moment, e·a0 in C·m.
pub const ATOMIC_DIPOLE: f64 = ELEMENTARY_CHARGE * BOHR_RADIUS;

pub const TWO_PI: f64 = 2.0 * PI;
