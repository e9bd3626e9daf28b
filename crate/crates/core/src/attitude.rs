//! Nonlinear attitude observer on SO(3).
//!
//! The observer integrates `Ṙ̂ = R̂ ω× − σ× R̂` where the innovation `σ` aligns
//! the estimated gravity direction `R̂ ẑ` with `e3` and the horizontal part of
//! the measured magnetic field with the reference field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::so3::{exp_so3, reg_projector, RotationMatrix, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttitudeGains {
    pub k_z: f64,
    pub k_m: f64,
}

impl AttitudeGains {
    pub fn new(k_z: f64, k_m: f64) -> Result<Self> {
        if !(k_z > 0.0 && k_z.is_finite()) || !(k_m >= 0.0 && k_m.is_finite()) {
            return Err(Error::Config(format!(
                "attitude gains require k_z > 0 and k_m >= 0 (got k_z = {k_z}, k_m = {k_m})"
            )));
        }
        Ok(Self { k_z, k_m })
    }
}

impl Default for AttitudeGains {
    fn default() -> Self {
        Self { k_z: 2.0, k_m: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeState {
    pub rotation: RotationMatrix,
    /// Magnetometer part of the innovation, held between magnetometer samples.
    pub mag_correction: Vec3,
}

impl AttitudeState {
    pub fn new(rotation: RotationMatrix) -> Self {
        Self {
            rotation,
            mag_correction: Vec3::zeros(),
        }
    }
}

/// Tilt part of the innovation: `k_z (e3 × R̂ ẑ)`.
pub fn tilt_correction(rotation: &RotationMatrix, tilt: &Vec3, k_z: f64) -> Vec3 {
    k_z * Vec3::z().cross(&(rotation * tilt))
}

/// Magnetometer part: `k_m (π̄_e3 m_I × R̂ π̄_ẑ m_B)`.
pub fn mag_correction(rotation: &RotationMatrix, tilt: &Vec3, mag_body: &Vec3, mag_inertial: &Vec3, k_m: f64) -> Vec3 {
    let inertial = reg_projector(&Vec3::z()) * mag_inertial;
    let body = reg_projector(tilt) * mag_body;
    k_m * inertial.cross(&(rotation * body))
}

/// Full innovation `σ_R`. The tilt estimate need not be unit norm.
pub fn correction(
    rotation: &RotationMatrix,
    tilt: &Vec3,
    mag_body: &Vec3,
    mag_inertial: &Vec3,
    gains: &AttitudeGains,
) -> Vec3 {
    tilt_correction(rotation, tilt, gains.k_z) + mag_correction(rotation, tilt, mag_body, mag_inertial, gains.k_m)
}

/// Exponential-Euler step `R̂ exp((ω − R̂ᵀσ)× Ts)`. The magnetometer hold is carried over.
pub fn step(state: &AttitudeState, omega: &Vec3, sigma: &Vec3, ts: f64) -> AttitudeState {
    let body_rate = omega - state.rotation.transpose() * sigma;
    AttitudeState {
        rotation: state.rotation * exp_so3(&(body_rate * ts)),
        mag_correction: state.mag_correction,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equilibrium {
    /// Near the identity error.
    Stable,
    /// Near a half-turn error `U diag(1, -1, -1) Uᵀ`.
    Unstable,
    Neither,
}

/// Classifies an attitude error `R̃ = R̂ Rᵀ` relative to the two equilibrium sets.
pub fn classify_equilibrium(error: &RotationMatrix, tol: f64) -> Equilibrium {
    let m = error.matrix();
    if 3.0 - m.trace() < tol {
        Equilibrium::Stable
    } else if (m - m.transpose()).norm() < tol && (m.trace() + 1.0).abs() < tol {
        Equilibrium::Unstable
    } else {
        Equilibrium::Neither
    }
}
