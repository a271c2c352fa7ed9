//! Physical constants (CODATA 2018, SI exact where defined).

use std::f64::consts::PI;

pub const H: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = H / (2.0 * PI);
pub const C: f64 = 299_792_458.0;
pub const KB: f64 = 1.380_649e-23;
pub const EPS0: f64 = 8.854_187_812_8e-12;
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Cs-133 atomic mass.
pub const CS_MASS: f64 = 132.905_451_961 * AMU;

/// 1 torr in Pa.
pub const TORR: f64 = 101_325.0 / 760.0;

pub const TWO_PI: f64 = 2.0 * PI;

/// mW/mm^2 to W/m^2.
pub const MW_PER_MM2: f64 = 1.0e3;

pub const ZERO_CELSIUS: f64 = 273.15;
