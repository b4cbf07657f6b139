//! Operator-method propagators for Lorentz-type vector equations
//! `dS/dt = T × S + N` and their damped, time-dependent and second-order
//! variants, with a brute-force Runge–Kutta oracle for cross-checking.

pub mod disentangle;
pub mod dynamics;
pub mod oracle;
pub mod quad;
pub mod radiation;
pub mod secondorder;
pub mod special;
pub mod stepping;
pub mod timedep;
pub mod trajectory;
pub mod vec3;
pub mod vop;

pub use vec3::{cross, CVec3, ComplexScalar, Vec3};
pub use vop::{
    analytic_function_apply, inhomogeneous_propagate, rodrigues_propagate, series_propagate, vop_power_apply,
    EvalError, Vop,
};
