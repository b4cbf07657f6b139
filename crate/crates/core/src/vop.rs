//! The vector evolution operator `T̂: v ↦ T × v` and its exponentials.
//!
//! `T̂` is cyclic on the plane orthogonal to the torque: `T̂³ = −T² T̂`, so every
//! analytic function of `T̂` collapses onto three eigen-directions with
//! eigenvalues `{0, +iT, −iT}`. The exponential gives the Rodrigues rotation;
//! [`analytic_function_apply`] exposes the general spectral calculus that the
//! damped, second-order and radiation-reaction propagators are built from.

use num_complex::Complex64;
use thiserror::Error;

use crate::vec3::Vec3;

/// Failure to evaluate a user-supplied scalar function on the VOP spectrum.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("function is not finite at z = {point}")]
    NonFinite { point: Complex64 },
    #[error("function value at z = 0 must be real, got {value}")]
    NotReal { value: Complex64 },
}

/// Vector evolution operator with torque vector `T` (rad/s).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vop {
    pub torque: Vec3,
}

impl Vop {
    pub const fn new(torque: Vec3) -> Self {
        Self { torque }
    }

    /// `T = |T|`.
    pub fn magnitude(&self) -> f64 {
        self.torque.norm()
    }

    /// Rotation axis `n = T/|T|`; undefined (None) for the zero operator.
    pub fn axis(&self) -> Option<Vec3> {
        self.torque.normalized()
    }

    /// `T̂ v = T × v`.
    #[inline]
    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.torque.cross(v)
    }

    pub fn is_zero(&self) -> bool {
        self.torque == Vec3::ZERO
    }
}

/// Small-angle-safe auxiliary functions of the rotation angle `θ`.
///
/// Each is entire in `θ`; the direct formulas cancel catastrophically near 0,
/// so series are used below a per-function threshold.
pub mod small_angle {
    /// Below this the first-order functions switch to their Taylor series.
    pub const GUARD: f64 = 1e-6;
    /// Threshold for the higher-order remainders (`cyc3`, `cyc4`), whose
    /// direct formulas lose digits long before `GUARD`.
    const HIGH_ORDER_GUARD: f64 = 0.5;

    /// `sin θ / θ`.
    #[inline]
    pub fn sinc(theta: f64) -> f64 {
        if theta.abs() < GUARD {
            let t2 = theta * theta;
            1.0 - t2 / 6.0 + t2 * t2 / 120.0
        } else {
            theta.sin() / theta
        }
    }

    /// `1 − cos θ`, via `2 sin²(θ/2)`.
    #[inline]
    pub fn one_minus_cos(theta: f64) -> f64 {
        let s = (0.5 * theta).sin();
        2.0 * s * s
    }

    /// `(1 − cos θ) / θ²`.
    #[inline]
    pub fn versc(theta: f64) -> f64 {
        if theta.abs() < GUARD {
            let t2 = theta * theta;
            0.5 - t2 / 24.0 + t2 * t2 / 720.0
        } else {
            let s = sinc(0.5 * theta);
            0.5 * s * s
        }
    }

    /// `(θ − sin θ) / θ³`.
    pub fn cyc3(theta: f64) -> f64 {
        if theta.abs() < HIGH_ORDER_GUARD {
            // Σ (−θ²)^k / (2k+3)!
            taylor_tail(theta * theta, 3)
        } else {
            (theta - theta.sin()) / (theta * theta * theta)
        }
    }

    /// `(cos θ − 1 + θ²/2) / θ⁴`.
    pub fn cyc4(theta: f64) -> f64 {
        if theta.abs() < HIGH_ORDER_GUARD {
            taylor_tail(theta * theta, 4)
        } else {
            let t2 = theta * theta;
            (0.5 * t2 - one_minus_cos(theta)) / (t2 * t2)
        }
    }

    /// `Σ_{k≥0} (−x)^k / (2k + first)!` summed to double precision for x < 0.25.
    fn taylor_tail(x: f64, first: u32) -> f64 {
        let mut fact = (1..=first).map(f64::from).product::<f64>();
        let mut sum = 0.0;
        let mut power = 1.0;
        for k in 0..10u32 {
            sum += power / fact;
            power *= -x;
            let m = f64::from(2 * k + first);
            fact *= (m + 1.0) * (m + 2.0);
        }
        sum
    }
}

/// `T̂ⁿ s0`: `n` nested left cross products (`n = 0` is the identity).
pub fn vop_power_apply(op: &Vop, n: u32, s0: Vec3) -> Vec3 {
    (0..n).fold(s0, |acc, _| op.apply(acc))
}

/// Truncated exponential series `Σ_{k<n_terms} tᵏ/k! T̂ᵏ s0`.
///
/// Kept as a reference evaluator for the closed-form rotation.
pub fn series_propagate(op: &Vop, t: f64, s0: Vec3, n_terms: u32) -> Vec3 {
    let mut term = s0;
    let mut sum = Vec3::ZERO;
    for k in 0..n_terms {
        sum += term;
        term = op.apply(term) * (t / f64::from(k + 1));
    }
    sum
}

/// Exact propagator `exp(t T̂) s0` as a Rodrigues rotation about `n` by `T t`.
pub fn rodrigues_propagate(op: &Vop, t: f64, s0: Vec3) -> Vec3 {
    let Some(n) = op.axis() else {
        return s0;
    };
    let theta = op.magnitude() * t;
    let (s, c) = theta.sin_cos();
    s0 * c + n.cross(s0) * s + n * (n.dot(s0) * small_angle::one_minus_cos(theta))
}

/// Solution of `dS/dt = T × S + N` with constant `N`:
/// `Û(t) s0 + ∫₀ᵗ Û(τ) N dτ`, the integral in closed form.
pub fn inhomogeneous_propagate(op: &Vop, n_vec: Vec3, t: f64, s0: Vec3) -> Vec3 {
    let homogeneous = rodrigues_propagate(op, t, s0);
    if op.is_zero() {
        return homogeneous + n_vec * t;
    }
    let theta = op.magnitude() * t;
    let tn = op.apply(n_vec);
    let ttn = op.apply(tn);
    homogeneous
        + n_vec * t
        + tn * (t * t * small_angle::versc(theta))
        + ttn * (t * t * t * small_angle::cyc3(theta))
}

/// Evaluates `f(T̂) v` for a scalar function analytic on the VOP spectrum.
///
/// Returns `f(0)(n·v)n + Re f(iT) (v − (n·v)n) + Im f(iT) (n × v)`. `f` must
/// have real Taylor coefficients (so `f(−iT) = conj f(iT)`); multivalued
/// functions are taken on their principal branch by the caller.
pub fn analytic_function_apply<F>(f: F, op: &Vop, v: Vec3) -> Result<Vec3, EvalError>
where
    F: Fn(Complex64) -> Complex64,
{
    let at_zero = eval_checked(&f, Complex64::new(0.0, 0.0))?;
    if at_zero.im.abs() > 1e-12 * at_zero.re.abs().max(1.0) {
        return Err(EvalError::NotReal { value: at_zero });
    }
    let Some(n) = op.axis() else {
        return Ok(v * at_zero.re);
    };
    let at_eig = eval_checked(&f, Complex64::new(0.0, op.magnitude()))?;
    let along = v.parallel_to(n);
    Ok(along * at_zero.re + (v - along) * at_eig.re + n.cross(v) * at_eig.im)
}

fn eval_checked<F: Fn(Complex64) -> Complex64>(f: &F, z: Complex64) -> Result<Complex64, EvalError> {
    let value = f(z);
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite { point: z })
    }
}
