//! Motion in static uniform fields, with and without linear damping.
//!
//! Sign convention: `dv/dt = −Ω × v + Q` with `Ω = (e/m)B`, `Q = (e/m)E` and
//! signed charge `e`. The Coriolis problem `dv/dt = −2ω × v − ηv + g` has the
//! same structure with `Ω → 2ω`, `Q → g` and a friction rate `η`.

use num_complex::Complex64;
use thiserror::Error;

use crate::trajectory::TimedState;
use crate::vec3::Vec3;
use crate::vop::{analytic_function_apply, small_angle, EvalError, Vop};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DynamicsError {
    #[error("magnetic field is zero")]
    ZeroField,
    #[error("no limit velocity without friction (eta = 0)")]
    NoLimit,
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Electron rest mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
/// Proton rest mass, kg.
pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    /// kg
    pub mass: f64,
    /// C, signed
    pub charge: f64,
}

impl Particle {
    pub const fn new(mass: f64, charge: f64) -> Self {
        Self { mass, charge }
    }

    pub const fn electron() -> Self {
        Self { mass: ELECTRON_MASS, charge: -ELEMENTARY_CHARGE }
    }

    pub const fn proton() -> Self {
        Self { mass: PROTON_MASS, charge: ELEMENTARY_CHARGE }
    }

    pub fn charge_to_mass(&self) -> f64 {
        self.charge / self.mass
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UniformFields {
    /// V/m
    pub e: Vec3,
    /// T
    pub b: Vec3,
}

impl UniformFields {
    pub const fn new(e: Vec3, b: Vec3) -> Self {
        Self { e, b }
    }

    /// `Ω = (e/m) B`, rad/s.
    pub fn omega(&self, p: &Particle) -> Vec3 {
        self.b * p.charge_to_mass()
    }

    /// `Q = (e/m) E`, m/s².
    pub fn q(&self, p: &Particle) -> Vec3 {
        self.e * p.charge_to_mass()
    }

    /// Signed cyclotron frequency `ω_c = e|B|/m`.
    pub fn cyclotron_frequency(&self, p: &Particle) -> f64 {
        p.charge_to_mass() * self.b.norm()
    }

    /// Gyration period `2π/|ω_c|`; `None` without a magnetic field.
    pub fn gyro_period(&self, p: &Particle) -> Option<f64> {
        let w = self.cyclotron_frequency(p).abs();
        (w > 0.0).then(|| std::f64::consts::TAU / w)
    }

    /// Larmor radius `|v⊥|/|ω_c|` for a velocity `v`.
    pub fn larmor_radius(&self, p: &Particle, v: Vec3) -> Option<f64> {
        let n = self.b.normalized()?;
        let v_perp = v - v.parallel_to(n);
        Some(v_perp.norm() / self.cyclotron_frequency(p).abs())
    }
}

/// Rotating-frame environment for a falling body.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CoriolisEnv {
    /// Planetary angular velocity, rad/s.
    pub omega: Vec3,
    /// Gravitational acceleration, m/s².
    pub g: Vec3,
    /// Linear friction rate, 1/s.
    pub eta: f64,
}

impl CoriolisEnv {
    /// Earth-like environment at a given latitude (rad), in a local frame with
    /// x east, y north, z up. A negative `eta` is rejected.
    pub fn at_latitude(latitude: f64, omega_mag: f64, g_mag: f64, eta: f64) -> Result<Self, DynamicsError> {
        if !(eta >= 0.0) {
            return Err(DynamicsError::InvalidParameter { name: "eta", reason: "must be non-negative" });
        }
        let omega = Vec3::new(0.0, latitude.cos(), latitude.sin()) * omega_mag;
        Ok(Self { omega, g: Vec3::new(0.0, 0.0, -g_mag), eta })
    }

    /// `a = η/(η²+4ω²)`.
    pub fn a(&self) -> f64 {
        self.eta / (self.eta * self.eta + 4.0 * self.omega.norm_squared())
    }

    /// `b = 2ω/(η²+4ω²)`.
    pub fn b(&self) -> f64 {
        2.0 * self.omega.norm() / (self.eta * self.eta + 4.0 * self.omega.norm_squared())
    }

    /// Friction rate with the near-zero regime snapped to zero (see
    /// [`coriolis_velocity`]).
    fn effective_eta(&self) -> f64 {
        if self.eta < 1e-10 * 2.0 * self.omega.norm() {
            0.0
        } else {
            self.eta
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParticleState {
    /// s
    pub t: f64,
    /// m
    pub r: Vec3,
    /// m/s
    pub v: Vec3,
}

impl ParticleState {
    pub const fn new(t: f64, r: Vec3, v: Vec3) -> Self {
        Self { t, r, v }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.r.is_finite() && self.v.is_finite()
    }
}

impl TimedState for ParticleState {
    fn time(&self) -> f64 {
        self.t
    }

    fn to_flat(&self) -> Vec<f64> {
        vec![self.r.x, self.r.y, self.r.z, self.v.x, self.v.y, self.v.z]
    }
}

/// Scalar coefficients of the uniform-field solution for rotation angle
/// `θ = ω_c t`, each evaluated without cancellation.
struct GyroCoefficients {
    /// sin(θ)/ω
    s1: f64,
    /// (1 − cos θ)/ω
    c1: f64,
    /// t − sin(θ)/ω
    s2: f64,
    /// (1 − cos θ)/ω²
    c2: f64,
    /// t²/2 − (1 − cos θ)/ω²
    c3: f64,
    cos: f64,
    sin: f64,
}

impl GyroCoefficients {
    fn new(w: f64, t: f64) -> Self {
        let th = w * t;
        let (sin, cos) = th.sin_cos();
        let t2 = t * t;
        Self {
            s1: t * small_angle::sinc(th),
            c1: w * t2 * small_angle::versc(th),
            s2: w * w * t2 * t * small_angle::cyc3(th),
            c2: t2 * small_angle::versc(th),
            c3: w * w * t2 * t2 * small_angle::cyc4(th),
            cos,
            sin,
        }
    }
}

/// Velocity at time `t` in uniform static fields.
///
/// `v = cos(ω_c t) v0 + sin(ω_c t)/ω_c Q + (n·ℓ)n − n × m`, with
/// `ℓ = (1 − cos) v0 + (t − sin/ω_c) Q` and `m = ℓ'/ω_c`.
pub fn lorentz_velocity(p: &Particle, f: &UniformFields, v0: Vec3, t: f64) -> Vec3 {
    let q = f.q(p);
    let Some(n) = f.b.normalized() else {
        return v0 + q * t;
    };
    let w = f.cyclotron_frequency(p);
    let k = GyroCoefficients::new(w, t);
    let ell = v0 * small_angle::one_minus_cos(w * t) + q * k.s2;
    let m = v0 * k.sin + q * k.c1;
    v0 * k.cos + q * k.s1 + ell.parallel_to(n) - n.cross(m)
}

/// Position at time `state0.t + t` in uniform static fields.
///
/// `r = r0 + sin/ω_c v0 + (1 − cos)/ω_c² Q + (n·o)n − (1/ω_c) n × ℓ`, with
/// `o = (t − sin/ω_c) v0 + (t²/2 − (1 − cos)/ω_c²) Q`.
pub fn lorentz_position(p: &Particle, f: &UniformFields, state0: &ParticleState, t: f64) -> Vec3 {
    let q = f.q(p);
    let (r0, v0) = (state0.r, state0.v);
    let Some(n) = f.b.normalized() else {
        return r0 + v0 * t + q * (0.5 * t * t);
    };
    let w = f.cyclotron_frequency(p);
    let k = GyroCoefficients::new(w, t);
    // ℓ/ω_c, with each coefficient already divided through
    let ell_over_w = v0 * k.c1 + q * (w * t * t * t * small_angle::cyc3(w * t));
    let o = v0 * k.s2 + q * k.c3;
    r0 + v0 * k.s1 + q * k.c2 + o.parallel_to(n) - n.cross(ell_over_w)
}

/// Full state after `t` seconds from `state0`.
pub fn lorentz_state(p: &Particle, f: &UniformFields, state0: &ParticleState, t: f64) -> ParticleState {
    ParticleState {
        t: state0.t + t,
        r: lorentz_position(p, f, state0, t),
        v: lorentz_velocity(p, f, state0.v, t),
    }
}

/// `E × B / B²`.
pub fn drift_velocity(e: Vec3, b: Vec3) -> Result<Vec3, DynamicsError> {
    let b2 = b.norm_squared();
    if b2 == 0.0 {
        return Err(DynamicsError::ZeroField);
    }
    Ok(e.cross(b) / b2)
}

/// `(E + E′) × B / B²`, the drift under an additional force `eE′`.
pub fn composed_drift(e: Vec3, e_prime: Vec3, b: Vec3) -> Result<Vec3, DynamicsError> {
    drift_velocity(e + e_prime, b)
}

/// `m(v − v_d) + e(B × r − tE)`, conserved along uniform-field motion.
pub fn pseudo_momentum(p: &Particle, f: &UniformFields, s: &ParticleState) -> Result<Vec3, DynamicsError> {
    let vd = drift_velocity(f.e, f.b)?;
    Ok((s.v - vd) * p.mass + (f.b.cross(s.r) - f.e * s.t) * p.charge)
}

/// `(eʷ − 1)/w`.
pub fn phi1(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        taylor_phi(w, 1)
    } else {
        cexpm1(w) / w
    }
}

/// `(eʷ − 1 − w)/w²`.
pub fn phi2(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        taylor_phi(w, 2)
    } else {
        (cexpm1(w) - w) / (w * w)
    }
}

/// `Σ_k wᵏ/(k + first)!`
fn taylor_phi(w: Complex64, first: u32) -> Complex64 {
    let mut fact: f64 = (1..=first).map(f64::from).product();
    let mut power = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..18u32 {
        sum += power / fact;
        power *= w;
        fact *= f64::from(k + first + 1);
    }
    sum
}

/// `eᶻ − 1` without cancellation for small `|z|`.
pub fn cexpm1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let em1 = z.re.exp_m1();
    let half = (0.5 * z.im).sin();
    Complex64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// Shared solution of `dv/dt = −W × v − γv + N` with constant `W`, `γ`, `N`:
/// returns `(v(t), r(t) − r0)`. Both terms are spectral functions of the VOP
/// with torque `−W`, so no `1/γ` or `1/|W|` ever appears.
fn damped_rotation(w_vec: Vec3, gamma: f64, n_vec: Vec3, v0: Vec3, t: f64) -> Result<(Vec3, Vec3), EvalError> {
    let op = Vop::new(-w_vec);
    let g = Complex64::new(gamma, 0.0);
    let decay = |z: Complex64| ((z - g) * t).exp();
    let p1 = |z: Complex64| phi1((z - g) * t) * t;
    let p2 = |z: Complex64| phi2((z - g) * t) * (t * t);
    let v = analytic_function_apply(decay, &op, v0)? + analytic_function_apply(p1, &op, n_vec)?;
    let dr = analytic_function_apply(p1, &op, v0)? + analytic_function_apply(p2, &op, n_vec)?;
    Ok((v, dr))
}

fn check_tau(tau: f64) -> Result<(), DynamicsError> {
    if tau > 0.0 {
        Ok(())
    } else {
        Err(DynamicsError::InvalidParameter { name: "tau", reason: "must be positive" })
    }
}

/// Velocity for the Drude-damped equation `dv/dt = −Ω × v + Q − v/τ`.
pub fn drude_velocity(p: &Particle, f: &UniformFields, tau: f64, v0: Vec3, t: f64) -> Result<Vec3, DynamicsError> {
    check_tau(tau)?;
    Ok(damped_rotation(f.omega(p), 1.0 / tau, f.q(p), v0, t)?.0)
}

/// Full Drude-damped state after `t` seconds.
pub fn drude_state(
    p: &Particle,
    f: &UniformFields,
    tau: f64,
    state0: &ParticleState,
    t: f64,
) -> Result<ParticleState, DynamicsError> {
    check_tau(tau)?;
    let (v, dr) = damped_rotation(f.omega(p), 1.0 / tau, f.q(p), state0.v, t)?;
    Ok(ParticleState { t: state0.t + t, r: state0.r + dr, v })
}

/// Stationary Drude velocity `(1/τ + Ω̂)⁻¹ Q`.
pub fn drude_stationary_velocity(p: &Particle, f: &UniformFields, tau: f64) -> Result<Vec3, DynamicsError> {
    check_tau(tau)?;
    let g = 1.0 / tau;
    Ok(analytic_function_apply(|z| 1.0 / (z + g), &Vop::new(f.omega(p)), f.q(p))?)
}

/// Velocity of a body under Coriolis force, gravity and linear friction.
///
/// For `η < 1e-10·2|ω|` the friction is treated as exactly zero; the closed
/// form used here is regular at `η = 0`, so this only removes a contribution
/// below rounding.
pub fn coriolis_velocity(env: &CoriolisEnv, v0: Vec3, t: f64) -> Vec3 {
    coriolis_solution(env, v0, t).0
}

/// Position of the falling body; `state0.t` is the start time.
pub fn coriolis_position(env: &CoriolisEnv, state0: &ParticleState, t: f64) -> Vec3 {
    state0.r + coriolis_solution(env, state0.v, t).1
}

pub fn coriolis_state(env: &CoriolisEnv, state0: &ParticleState, t: f64) -> ParticleState {
    let (v, dr) = coriolis_solution(env, state0.v, t);
    ParticleState { t: state0.t + t, r: state0.r + dr, v }
}

fn coriolis_solution(env: &CoriolisEnv, v0: Vec3, t: f64) -> (Vec3, Vec3) {
    damped_rotation(env.omega * 2.0, env.effective_eta(), env.g, v0, t)
        .expect("entire functions evaluated at finite points")
}

/// Terminal velocity solving `2ω × v + ηv = g`.
pub fn limit_velocity(env: &CoriolisEnv) -> Result<Vec3, DynamicsError> {
    let eta = env.eta;
    if !(eta > 0.0) {
        return Err(DynamicsError::NoLimit);
    }
    let w = env.omega;
    let g = env.g;
    let denom = eta * eta + 4.0 * w.norm_squared();
    Ok((g * eta - w.cross(g) * 2.0 + w * (4.0 / eta * w.dot(g))) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::rk4_integrate;
    use std::f64::consts::{PI, TAU};

    fn proton_in(e: Vec3, b: Vec3) -> (Particle, UniformFields) {
        (Particle::proton(), UniformFields::new(e, b))
    }

    #[test]
    fn velocity_along_b_is_constant() {
        let (p, f) = proton_in(Vec3::ZERO, Vec3::new(0.0, 0.0, 1e-3));
        let v0 = Vec3::new(0.0, 0.0, 1e4);
        assert_eq!(lorentz_velocity(&p, &f, v0, 1.234), v0);
    }

    #[test]
    fn full_gyration_restores_velocity_and_position() {
        let (p, f) = proton_in(Vec3::ZERO, Vec3::new(0.3, -0.2, 0.9) * 1e-3);
        let v0 = Vec3::new(1e4, 2e3, -5e3);
        let n = f.b.normalized().unwrap();
        let v_perp = v0 - v0.parallel_to(n);
        let period = f.gyro_period(&p).unwrap();
        let v = lorentz_velocity(&p, &f, v_perp, period);
        assert!((v - v_perp).norm() < 1e-9 * v0.norm());
        let s0 = ParticleState::new(0.0, Vec3::new(1.0, 2.0, 3.0), v_perp);
        let r = lorentz_position(&p, &f, &s0, period);
        assert!((r - s0.r).norm() < 1e-12 * (1.0 + v0.norm() * period));
    }

    #[test]
    fn literal_transcription_agrees() {
        // direct, unguarded evaluation of the printed ℓ, m, o formulas
        let p = Particle::electron();
        let f = UniformFields::new(Vec3::new(3.0, -10.0, 2.0), Vec3::new(1e-4, 3e-4, 8e-4));
        let v0 = Vec3::new(1e5, -2e4, 3e4);
        let r0 = Vec3::new(0.1, 0.0, -0.2);
        let w = f.cyclotron_frequency(&p);
        let n = f.b.normalized().unwrap();
        let q = f.q(&p);
        let t = 2.7 / w.abs();
        let (s, c) = (w * t).sin_cos();
        let ell = v0 * (1.0 - c) + q * (t - s / w);
        let m = v0 * s + q * ((1.0 - c) / w);
        let v_lit = v0 * c + q * (s / w) + n * n.dot(ell) - n.cross(m);
        let o = v0 * (t - s / w) + q * (t * t / 2.0 - (1.0 - c) / (w * w));
        let r_lit = r0 + v0 * (s / w) + q * ((1.0 - c) / (w * w)) + n * n.dot(o) - n.cross(ell) / w;
        let s0 = ParticleState::new(0.0, r0, v0);
        assert!((lorentz_velocity(&p, &f, v0, t) - v_lit).norm() < 1e-9 * v0.norm());
        assert!((lorentz_position(&p, &f, &s0, t) - r_lit).norm() < 1e-12);
    }

    #[test]
    fn matches_rk4_in_crossed_fields() {
        // electron, B along z, E along −y, v0 along x
        let p = Particle::electron();
        let f = UniformFields::new(Vec3::new(0.0, -10.0, 0.0), Vec3::new(0.0, 0.0, 1e-3));
        let v0 = Vec3::new(1e5, 0.0, 0.0);
        let period = f.gyro_period(&p).unwrap();
        let (om, q) = (f.omega(&p), f.q(&p));
        let rhs = |_t: f64, s: &[f64]| {
            let v = [s[3], s[4], s[5]];
            let oxv = [om.y * v[2] - om.z * v[1], om.z * v[0] - om.x * v[2], om.x * v[1] - om.y * v[0]];
            vec![v[0], v[1], v[2], q.x - oxv[0], q.y - oxv[1], q.z - oxv[2]]
        };
        let res = rk4_integrate(rhs, &[0.0, 0.0, 0.0, v0.x, v0.y, v0.z], 5.0 * period, period / 2000.0).unwrap();
        let end = res.last_state();
        let v = lorentz_velocity(&p, &f, v0, 5.0 * period);
        let dv = (Vec3::new(end[3], end[4], end[5]) - v).norm();
        assert!(dv < 1e-9 * v0.norm(), "dv = {dv}");
    }

    #[test]
    fn position_derivative_is_velocity() {
        let (p, f) = proton_in(Vec3::new(5.0, 1.0, -2.0), Vec3::new(1e-3, 2e-3, -1e-3));
        let s0 = ParticleState::new(0.0, Vec3::new(1.0, -1.0, 0.5), Vec3::new(3e4, 1e4, -2e4));
        let period = f.gyro_period(&p).unwrap();
        let t = 0.37 * period;
        let h = 1e-6 * period;
        let d = (lorentz_position(&p, &f, &s0, t + h) - lorentz_position(&p, &f, &s0, t - h)) / (2.0 * h);
        let v = lorentz_velocity(&p, &f, s0.v, t);
        assert!((d - v).norm() < 1e-6 * v.norm());
    }

    #[test]
    fn zero_field_branch_is_uniform_acceleration() {
        let (p, f) = proton_in(Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO);
        let s0 = ParticleState::new(0.0, Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0));
        let q = f.q(&p);
        assert_eq!(lorentz_velocity(&p, &f, s0.v, 2.0), s0.v + q * 2.0);
        assert_eq!(lorentz_position(&p, &f, &s0, 2.0), s0.v * 2.0 + q * 2.0);
    }

    #[test]
    fn drift_examples() {
        let vd = drift_velocity(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!(vd, Vec3::new(0.0, -0.5, 0.0));
        assert_eq!(drift_velocity(Vec3::new(0.0, 0.0, 3.0), Vec3::Z).unwrap(), Vec3::ZERO);
        assert_eq!(drift_velocity(Vec3::X, Vec3::ZERO), Err(DynamicsError::ZeroField));
        let e = Vec3::new(1.0, 2.0, 0.0);
        assert_eq!(composed_drift(e, -e, Vec3::Z).unwrap(), Vec3::ZERO);
        assert_eq!(composed_drift(e, Vec3::ZERO, Vec3::Z).unwrap(), drift_velocity(e, Vec3::Z).unwrap());
    }

    #[test]
    fn pseudo_momentum_is_conserved() {
        let p = Particle::electron();
        let f = UniformFields::new(Vec3::new(2.0, -7.0, 1.0), Vec3::new(2e-4, -1e-4, 9e-4));
        let s0 = ParticleState::new(0.0, Vec3::new(0.01, 0.02, -0.01), Vec3::new(4e4, 1e4, 2e4));
        let w = f.cyclotron_frequency(&p).abs();
        let a = pseudo_momentum(&p, &f, &s0).unwrap();
        let b = pseudo_momentum(&p, &f, &lorentz_state(&p, &f, &s0, 3.7 / w)).unwrap();
        let scale = p.mass * s0.v.norm();
        assert!((a - b).norm() < 1e-9 * scale);
        let at_rest = pseudo_momentum(&p, &UniformFields::new(Vec3::ZERO, Vec3::Z), &ParticleState::default());
        assert_eq!(at_rest.unwrap(), Vec3::ZERO);
    }

    #[test]
    fn phi_functions_continuous_at_switch() {
        for &r in &[0.4999, 0.5001] {
            for k in 0..8 {
                let w = Complex64::from_polar(r, k as f64 * PI / 4.0);
                let d1 = (w.exp() - 1.0) / w;
                let d2 = (w.exp() - 1.0 - w) / (w * w);
                assert!((phi1(w) - d1).norm() < 1e-14);
                assert!((phi2(w) - d2).norm() < 1e-13);
            }
        }
        assert_eq!(phi1(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        assert_eq!(phi2(Complex64::new(0.0, 0.0)), Complex64::new(0.5, 0.0));
    }

    #[test]
    fn drude_pure_relaxation_and_stationary_limit() {
        let (p, f0) = proton_in(Vec3::ZERO, Vec3::ZERO);
        let v0 = Vec3::new(1.0, 2.0, 3.0);
        let v = drude_velocity(&p, &f0, 0.5, v0, 1.3).unwrap();
        assert!((v - v0 * (-1.3f64 / 0.5).exp()).norm() < 1e-15);

        let (p, f) = proton_in(Vec3::new(1e-3, -2e-3, 5e-4), Vec3::new(1e-4, 3e-4, -2e-4));
        let tau = 2.0 / f.cyclotron_frequency(&p).abs();
        let stat = drude_stationary_velocity(&p, &f, tau).unwrap();
        let late = drude_velocity(&p, &f, tau, v0, 60.0 * tau).unwrap();
        assert!((late - stat).norm() < 1e-9 * stat.norm());
        // balance: −Ω×v − v/τ + Q = 0
        let res = -f.omega(&p).cross(stat) - stat / tau + f.q(&p);
        assert!(res.norm() < 1e-12 * f.q(&p).norm());
    }

    #[test]
    fn drude_matches_rk4() {
        let (p, f) = proton_in(Vec3::new(4e-3, 1e-3, -2e-3), Vec3::new(-1e-4, 2e-4, 3e-4));
        let w = f.cyclotron_frequency(&p).abs();
        let tau = 3.0 / w;
        let s0 = ParticleState::new(0.0, Vec3::new(0.1, 0.0, 0.0), Vec3::new(10.0, -5.0, 2.0));
        let (om, q) = (f.omega(&p), f.q(&p));
        let rhs = |_t: f64, s: &[f64]| {
            let v = [s[3], s[4], s[5]];
            let oxv = [om.y * v[2] - om.z * v[1], om.z * v[0] - om.x * v[2], om.x * v[1] - om.y * v[0]];
            vec![
                v[0],
                v[1],
                v[2],
                q.x - oxv[0] - v[0] / tau,
                q.y - oxv[1] - v[1] / tau,
                q.z - oxv[2] - v[2] / tau,
            ]
        };
        let t_end = 4.0 * TAU / w;
        let mut y0 = s0.to_flat();
        y0.truncate(6);
        let res = rk4_integrate(rhs, &y0, t_end, TAU / w / 2000.0).unwrap();
        let end = res.last_state();
        let s = drude_state(&p, &f, tau, &s0, t_end).unwrap();
        assert!((Vec3::new(end[3], end[4], end[5]) - s.v).norm() < 1e-9 * s0.v.norm());
        assert!((Vec3::new(end[0], end[1], end[2]) - s.r).norm() < 1e-9 * (s0.v.norm() * t_end));
    }

    /// Unguarded transcription of the printed Coriolis velocity and position.
    fn coriolis_literal(env: &CoriolisEnv, s0: &ParticleState, t: f64) -> (Vec3, Vec3) {
        let (eta, g, v0, r0) = (env.eta, env.g, s0.v, s0.r);
        let w = env.omega.norm();
        let n = env.omega / w;
        let (a, b) = (env.a(), env.b());
        let e = (-eta * t).exp();
        let (s, c) = (2.0 * w * t).sin_cos();
        let ell = v0 * (e * (1.0 - c)) + g * (1.0 / eta - a - e * (1.0 / eta - a * c + b * s));
        let m = v0 * (e * s) + g * (b - e * (a * s + b * c));
        let v = v0 * (e * c) + g * (a - e * (a * c - b * s)) + n * n.dot(ell) - n.cross(m);
        let o = v0 * (1.0 / eta - a - e * (1.0 / eta - a * c + b * s))
            + g * ((1.0 / eta - a) * t - 1.0 / (eta * eta) + a * a - b * b
                + e * (1.0 / (eta * eta) - (a * a - b * b) * c + 2.0 * a * b * s));
        let pv = v0 * (b - e * (a * s + b * c)) + g * (b * t - 2.0 * a * b + e * ((a * a - b * b) * s + 2.0 * a * b * c));
        let r = r0
            + v0 * (a - e * (a * c - b * s))
            + g * (a * t - a * a + b * b + e * ((a * a - b * b) * c - 2.0 * a * b * s))
            + n * n.dot(o)
            - n.cross(pv);
        (v, r)
    }

    #[test]
    fn coriolis_agrees_with_printed_closed_form() {
        let env = CoriolisEnv::at_latitude(45f64.to_radians(), 7.292e-5, 9.81, 0.15).unwrap();
        let s0 = ParticleState::new(0.0, Vec3::new(0.0, 0.0, 1000.0), Vec3::new(1.0, -2.0, 0.5));
        for &t in &[0.1, 1.0, 7.5, 40.0] {
            let (v_lit, r_lit) = coriolis_literal(&env, &s0, t);
            let s = coriolis_state(&env, &s0, t);
            assert!((s.v - v_lit).norm() < 1e-10 * v_lit.norm(), "v at {t}");
            assert!((s.r - r_lit).norm() < 1e-9 * r_lit.norm(), "r at {t}");
        }
    }

    #[test]
    fn coriolis_trivial_limits() {
        let env = CoriolisEnv { omega: Vec3::ZERO, g: Vec3::new(0.0, 0.0, -9.81), eta: 0.0 };
        let s0 = ParticleState::new(0.0, Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.5, 0.0, 2.0));
        let t = 3.0;
        assert!((coriolis_velocity(&env, s0.v, t) - (s0.v + env.g * t)).norm() < 1e-13);
        let r = coriolis_position(&env, &s0, t);
        assert!((r - (s0.r + s0.v * t + env.g * (0.5 * t * t))).norm() < 1e-12);
        assert_eq!(coriolis_position(&env, &s0, 0.0), s0.r);
    }

    #[test]
    fn coriolis_zero_friction_matches_rotation_solution() {
        // η = 0: same equation as a charge in uniform fields with Ω = 2ω
        let env = CoriolisEnv::at_latitude(0.7, 7.292e-5, 9.81, 0.0).unwrap();
        let p = Particle::new(1.0, 1.0);
        let f = UniformFields::new(env.g, env.omega * 2.0);
        let s0 = ParticleState::new(0.0, Vec3::ZERO, Vec3::new(3.0, 0.0, 1.0));
        let t = 5000.0;
        let a = coriolis_state(&env, &s0, t);
        let b = lorentz_state(&p, &f, &s0, t);
        assert!((a.v - b.v).norm() < 1e-9 * b.v.norm());
        assert!((a.r - b.r).norm() < 1e-9 * b.r.norm());
    }

    #[test]
    fn coriolis_approaches_limit_velocity() {
        let env = CoriolisEnv::at_latitude(45f64.to_radians(), 7.292e-5, 9.81, 0.2).unwrap();
        let vl = limit_velocity(&env).unwrap();
        let v = coriolis_velocity(&env, Vec3::ZERO, 20.0 / env.eta);
        assert!((v - vl).norm() < 1e-8 * vl.norm());
    }

    #[test]
    fn limit_velocity_cases() {
        let g = Vec3::new(0.0, 1.0, -9.8);
        let env = CoriolisEnv { omega: Vec3::ZERO, g, eta: 0.5 };
        assert!((limit_velocity(&env).unwrap() - g / 0.5).norm() < 1e-15);
        let env = CoriolisEnv { omega: g * 0.01, g, eta: 0.5 };
        assert!((limit_velocity(&env).unwrap() - g / 0.5).norm() < 1e-14);
        let env = CoriolisEnv { omega: Vec3::new(0.3, -0.1, 0.2), g, eta: 0.4 };
        let v = limit_velocity(&env).unwrap();
        let res = env.omega.cross(v) * 2.0 + v * env.eta - g;
        assert!(res.norm() < 1e-12 * g.norm());
        let env = CoriolisEnv { eta: 0.0, ..env };
        assert_eq!(limit_velocity(&env), Err(DynamicsError::NoLimit));
    }

    #[test]
    fn spectral_limit_velocity_from_core() {
        // (η + 2ω̂)⁻¹ g through the generic spectral evaluator, torque ω
        let env = CoriolisEnv { omega: Vec3::new(0.3, -0.1, 0.2), g: Vec3::new(0.0, 1.0, -9.8), eta: 0.4 };
        let eta = env.eta;
        let v = analytic_function_apply(|z| 1.0 / (eta + 2.0 * z), &Vop::new(env.omega), env.g).unwrap();
        assert!((v - limit_velocity(&env).unwrap()).norm() < 1e-12 * v.norm());
    }
}
