//! Splitting the propagator of two non-commuting torques.
//!
//! For `dv/dt = −(Ω₁ + Ω₂) × v` the exact propagator is a single rotation about
//! `Ω₁ + Ω₂`. The splits below replace it by products of single-torque
//! rotations, useful when the two contributions have different physical
//! origin (a magnetic field and the planetary rotation, say).

use thiserror::Error;

use crate::dynamics::Particle;
use crate::vec3::Vec3;
use crate::vop::{rodrigues_propagate, Vop};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DisentangleError {
    #[error("particle charge is zero")]
    ZeroCharge,
    #[error("field is zero")]
    ZeroField,
}

/// Two angular-velocity vectors acting as `dv/dt = −(Ω₁ + Ω₂) × v`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TorquePair {
    pub omega1: Vec3,
    pub omega2: Vec3,
}

impl TorquePair {
    pub const fn new(omega1: Vec3, omega2: Vec3) -> Self {
        Self { omega1, omega2 }
    }

    /// `Ω₁ × Ω₂`, the commutator torque of the two VOPs `−Ω̂₁`, `−Ω̂₂`.
    pub fn commutator(&self) -> Vec3 {
        self.omega1.cross(self.omega2)
    }
}

/// Exact propagator `exp(−t(Ω̂₁ + Ω̂₂)) v0`.
pub fn exact(pair: &TorquePair, t: f64, v0: Vec3) -> Vec3 {
    rodrigues_propagate(&Vop::new(-(pair.omega1 + pair.omega2)), t, v0)
}

/// First-order Zassenhaus product `e^{−tΩ̂₁} e^{−tΩ̂₂} e^{Ẑ₁} v0`.
///
/// `Ẑ₁ = −½[−tΩ̂₁, −tΩ̂₂]` is the VOP with torque `−(t²/2) Ω₁ × Ω₂`; it acts
/// first, then the `Ω₂` rotation, then the `Ω₁` rotation. Local error O(t³).
pub fn zassenhaus_first_order(pair: &TorquePair, t: f64, v0: Vec3) -> Vec3 {
    let z1 = Vop::new(pair.commutator() * (-0.5 * t * t));
    let s = rodrigues_propagate(&z1, 1.0, v0);
    let s = rodrigues_propagate(&Vop::new(-pair.omega2), t, s);
    rodrigues_propagate(&Vop::new(-pair.omega1), t, s)
}

/// Symmetric split `e^{−(t/2)Ω̂₁} e^{−tΩ̂₂} e^{−(t/2)Ω̂₁} v0`.
pub fn symmetric_split(pair: &TorquePair, t: f64, v0: Vec3) -> Vec3 {
    let half = Vop::new(-pair.omega1);
    let s = rodrigues_propagate(&half, 0.5 * t, v0);
    let s = rodrigues_propagate(&Vop::new(-pair.omega2), t, s);
    rodrigues_propagate(&half, 0.5 * t, s)
}

/// `t² |Ω₁ × Ω₂|`; the first-order split is meaningful while this is ≪ 1.
pub fn validity_margin(pair: &TorquePair, t: f64) -> f64 {
    t * t * pair.commutator().norm()
}

/// Linearised commutator correction `v0 − (t²/2)(Ω₁ × Ω₂) × v0`.
pub fn first_order_kick(pair: &TorquePair, t: f64, v0: Vec3) -> Vec3 {
    v0 - pair.commutator().cross(v0) * (0.5 * t * t)
}

/// Effective field `B* = B_T + 2(m/e) ω` combining a magnetic field with the
/// Coriolis term of a rotating frame.
pub fn equivalent_field(b_t: Vec3, omega: Vec3, p: &Particle) -> Result<Vec3, DisentangleError> {
    if p.charge == 0.0 {
        return Err(DisentangleError::ZeroCharge);
    }
    Ok(b_t + omega * (2.0 * p.mass / p.charge))
}

/// Drift `(m/e)(g × B*)/B*²` of a charge under gravity and the equivalent field.
pub fn gravito_magnetic_drift(g: Vec3, b_star: Vec3, p: &Particle) -> Result<Vec3, DisentangleError> {
    if p.charge == 0.0 {
        return Err(DisentangleError::ZeroCharge);
    }
    let b2 = b_star.norm_squared();
    if b2 == 0.0 {
        return Err(DisentangleError::ZeroField);
    }
    Ok(g.cross(b_star) * (p.mass / p.charge / b2))
}

/// Relative size `ω_{c,T} ω t² sin λ sin χ` of the combined-field correction,
/// where `λ` is the angle between field and rotation axis and `χ` the angle
/// between their cross product and the velocity.
pub fn correction_ratio(omega_c_t: f64, omega: f64, t: f64, lambda_angle: f64, chi_angle: f64) -> f64 {
    omega_c_t * omega * t * t * lambda_angle.sin() * chi_angle.sin()
}
