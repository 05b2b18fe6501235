//! Physical constants and conversions between laboratory quantities and the
//! dimensionless internal units.
//!
//! Internal units: every transverse length is measured in Bohr radii, the
//! mean-field potential `U` is dimensionless (it multiplies `1/a0^2`), and the
//! propagation distance is the scaled variable `zeta = z / (2 k a0^2)`, for
//! which the paraxial Schrödinger-Poisson system reads
//!
//! ```text
//! i d(psi)/d(zeta) = -lap(psi) + U psi,      lap(U) = -gamma |psi|^2
//! ```
//!
//! with `gamma = 8 pi n a0` and `n` the number of electrons per unit length.
//! Kinematics are nonrelativistic throughout.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// CODATA 2018.

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Electron rest mass (kg).
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr radius (m).
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Rounded electron Compton wavelength used for the spin-interaction estimate (m).
pub const COMPTON_WAVELENGTH_ESTIMATE: f64 = 2.4e-12;

/// Name/value table of every constant, echoed into output headers.
pub fn constants_table() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("elementary_charge_C", ELEMENTARY_CHARGE),
        ("electron_mass_kg", ELECTRON_MASS),
        ("planck_Js", PLANCK),
        ("hbar_Js", HBAR),
        ("bohr_radius_m", BOHR_RADIUS),
        ("speed_of_light_m_s", SPEED_OF_LIGHT),
        ("compton_wavelength_estimate_m", COMPTON_WAVELENGTH_ESTIMATE),
    ])
}

/// Laboratory description of a beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Acceleration voltage (V).
    pub voltage: f64,
    /// Beam current (A). Zero selects the single-electron (linear) regime.
    pub current: f64,
    /// Orbital angular momentum charge.
    pub oam_l: u32,
    /// Aperture radius (m).
    pub aperture_radius: f64,
    /// Transverse wavenumber of the shape-invariant family (1/m).
    #[serde(default)]
    pub kt: f64,
    /// Reserved: relativistic mass correction. Only `false` is supported.
    #[serde(default)]
    pub relativistic: bool,
}

impl PhysParams {
    pub fn new(voltage: f64, current: f64, oam_l: u32, aperture_radius: f64) -> Result<Self> {
        let params = Self {
            voltage,
            current,
            oam_l,
            aperture_radius,
            kt: 0.0,
            relativistic: false,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_kt(mut self, kt: f64) -> Result<Self> {
        self.kt = kt;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voltage > 0.0 && self.voltage.is_finite()) {
            return Err(Error::domain(format!("voltage must be > 0, got {}", self.voltage)));
        }
        if !(self.current >= 0.0 && self.current.is_finite()) {
            return Err(Error::domain(format!("current must be >= 0, got {}", self.current)));
        }
        if !(self.aperture_radius > 0.0 && self.aperture_radius.is_finite()) {
            return Err(Error::domain(format!(
                "aperture radius must be > 0, got {}",
                self.aperture_radius
            )));
        }
        if !(self.kt >= 0.0 && self.kt.is_finite()) {
            return Err(Error::domain(format!("kT must be >= 0, got {}", self.kt)));
        }
        if self.relativistic {
            return Err(Error::domain("relativistic correction is not implemented"));
        }
        Ok(())
    }

    pub fn derived(&self) -> Result<DerivedScales> {
        self.validate()?;
        Ok(DerivedScales {
            velocity: electron_velocity(self.voltage)?,
            wavenumber: de_broglie_wavenumber(self.voltage)?,
            line_density: line_density(self.current, self.voltage)?,
            gamma: nonlinear_coefficient(self)?,
        })
    }

    /// Aperture radius in Bohr radii.
    pub fn aperture_bohr(&self) -> f64 {
        meters_to_bohr(self.aperture_radius)
    }

    /// kT in inverse Bohr radii.
    pub fn kt_bohr(&self) -> f64 {
        self.kt * BOHR_RADIUS
    }
}

/// Scales derived from [`PhysParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    /// Electron velocity (m/s).
    pub velocity: f64,
    /// de Broglie wavenumber (1/m).
    pub wavenumber: f64,
    /// Electrons per meter along the beam.
    pub line_density: f64,
    /// Poisson source strength `8 pi n a0`.
    pub gamma: f64,
}

fn check_voltage(voltage: f64) -> Result<()> {
    if voltage > 0.0 && voltage.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("voltage must be > 0, got {voltage}")))
    }
}

/// Nonrelativistic electron velocity `sqrt(2 e V / m)` (m/s).
pub fn electron_velocity(voltage: f64) -> Result<f64> {
    check_voltage(voltage)?;
    Ok((2.0 * ELEMENTARY_CHARGE * voltage / ELECTRON_MASS).sqrt())
}

/// Electrons per meter, `I / (e v)`.
pub fn line_density(current: f64, voltage: f64) -> Result<f64> {
    if !(current >= 0.0 && current.is_finite()) {
        return Err(Error::domain(format!("current must be >= 0, got {current}")));
    }
    Ok(current / (ELEMENTARY_CHARGE * electron_velocity(voltage)?))
}

/// de Broglie wavelength `h / sqrt(2 m e V)` (m).
pub fn de_broglie_wavelength(voltage: f64) -> Result<f64> {
    check_voltage(voltage)?;
    Ok(PLANCK / (2.0 * ELECTRON_MASS * ELEMENTARY_CHARGE * voltage).sqrt())
}

/// de Broglie wavenumber `2 pi / lambda` (1/m).
pub fn de_broglie_wavenumber(voltage: f64) -> Result<f64> {
    Ok(2.0 * PI / de_broglie_wavelength(voltage)?)
}

/// Ratio of Coulomb to spin-interaction energy, `(L / lambda_C)^2`.
pub fn spin_negligibility_ratio(typical_length: f64) -> Result<f64> {
    if !(typical_length > 0.0 && typical_length.is_finite()) {
        return Err(Error::domain(format!(
            "typical length must be > 0, got {typical_length}"
        )));
    }
    let r = typical_length / COMPTON_WAVELENGTH_ESTIMATE;
    Ok(r * r)
}

/// `gamma = 8 pi n a0`, the source strength of the transverse Poisson equation
/// when lengths are measured in Bohr radii.
pub fn nonlinear_coefficient(params: &PhysParams) -> Result<f64> {
    params.validate()?;
    Ok(8.0 * PI * line_density(params.current, params.voltage)? * BOHR_RADIUS)
}

pub fn meters_to_bohr(x: f64) -> f64 {
    x / BOHR_RADIUS
}

pub fn bohr_to_meters(x: f64) -> f64 {
    x * BOHR_RADIUS
}

/// Meters of propagation per unit of the scaled distance `zeta`.
pub fn zeta_unit(wavenumber: f64) -> f64 {
    2.0 * wavenumber * BOHR_RADIUS * BOHR_RADIUS
}

pub fn z_to_zeta(z: f64, wavenumber: f64) -> f64 {
    z / zeta_unit(wavenumber)
}

pub fn zeta_to_z(zeta: f64, wavenumber: f64) -> f64 {
    zeta * zeta_unit(wavenumber)
}
