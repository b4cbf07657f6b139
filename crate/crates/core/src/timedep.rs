//! Time-dependent fields: fixed-direction sinusoidal fields, the resolvent
//! solution for a static magnetic field with a driven electric field, and the
//! second-order Magnus propagator for torques that change direction.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::Particle;
use crate::quad::{adaptive_simpson, GaussLegendre, QuadOptions, QuadratureFailure};
use crate::special::bessel_j_symmetric;
use crate::vec3::Vec3;
use crate::vop::{rodrigues_propagate, small_angle, Vop};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TimedepError {
    #[error("initial velocity must be perpendicular to the field direction")]
    NotPerpendicular,
    #[error("series form requires phase pi/2, got {phi}")]
    UnsupportedPhase { phi: f64 },
    #[error("magnetic field is zero")]
    ZeroField,
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error(transparent)]
    Quadrature(#[from] QuadratureFailure),
}

/// `E = E₀ sin(ωt + φ) e_x`, `B = B₀ sin(ωt + φ) e_y` acting on `particle`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinusoidalField {
    /// V/m
    pub e0: f64,
    /// T
    pub b0: f64,
    /// rad/s
    pub omega: f64,
    /// rad
    pub phi: f64,
    pub particle: Particle,
}

impl SinusoidalField {
    /// `Ω₀ = (e/m) B₀ e_y`.
    pub fn omega0(&self) -> Vec3 {
        Vec3::Y * (self.particle.charge_to_mass() * self.b0)
    }

    /// `Q₀ = (e/m) E₀ e_x`.
    pub fn q0(&self) -> Vec3 {
        Vec3::X * (self.particle.charge_to_mass() * self.e0)
    }

    /// Signed modulation index `ζ = (e/m)B₀/ω`.
    pub fn zeta(&self) -> f64 {
        self.particle.charge_to_mass() * self.b0 / self.omega
    }

    pub fn q_at(&self, t: f64) -> Vec3 {
        self.q0() * (self.omega * t + self.phi).sin()
    }

    pub fn omega_at(&self, t: f64) -> Vec3 {
        self.omega0() * (self.omega * t + self.phi).sin()
    }

    fn require_quarter_phase(&self) -> Result<(), TimedepError> {
        if (self.phi - FRAC_PI_2).abs() > 1e-12 {
            return Err(TimedepError::UnsupportedPhase { phi: self.phi });
        }
        Ok(())
    }
}

/// Accumulated rotation `Φ(t) = (1/ω)[cos(ωt + φ) − cos φ] Ω₀`, the torque of
/// the propagator `exp(Φ̂(t))` of `dv/dt = −Ω(t) × v`.
pub fn phase_vector(f: &SinusoidalField, t: f64) -> Vec3 {
    // cos(a + b) − cos(a) = −2 sin(b/2) sin(a + b/2), accurate for small ωt
    let half = 0.5 * f.omega * t;
    f.omega0() * (-2.0 * half.sin() * (f.phi + half).sin() / f.omega)
}

/// Velocity in the oscillating magnetic field alone (`E₀` ignored).
pub fn oscillating_b_velocity(f: &SinusoidalField, v0: Vec3, t: f64) -> Vec3 {
    rodrigues_propagate(&Vop::new(phase_vector(f, t)), 1.0, v0)
}

/// Harmonic (Jacobi–Anger) form of [`oscillating_b_velocity`] for `φ = π/2`:
/// `J₀ v0 + 2Σ J_{2n} cos(2nωt) v0 − 2Σ J_{2n+1} sin((2n+1)ωt) n × v0`.
///
/// Orders up to `n_max` are kept; [`jacobi_anger_order`] gives a safe choice.
pub fn jacobi_anger_velocity(f: &SinusoidalField, v0: Vec3, t: f64, n_max: usize) -> Result<Vec3, TimedepError> {
    f.require_quarter_phase()?;
    if v0.dot(Vec3::Y).abs() > 1e-12 * v0.norm() {
        return Err(TimedepError::NotPerpendicular);
    }
    let j = bessel_j_symmetric(n_max, f.zeta());
    let jn = |k: usize| j[n_max + k];
    let wt = f.omega * t;
    let mut even = jn(0);
    let mut odd = 0.0;
    for k in 1..=n_max {
        let term = 2.0 * jn(k);
        if k % 2 == 0 {
            even += term * (k as f64 * wt).cos();
        } else {
            odd += term * (k as f64 * wt).sin();
        }
    }
    Ok(v0 * even - Vec3::Y.cross(v0) * odd)
}

/// Bessel order cutoff `⌈|ζ|⌉ + 20`.
pub fn jacobi_anger_order(f: &SinusoidalField) -> usize {
    f.zeta().abs().ceil() as usize + 20
}

/// Electric-field contribution `w(t) = ∫₀ᵗ exp(Φ̂(t) − Φ̂(t′)) Q(t′) dt′`.
///
/// The two propagators combine into one rotation because all `Φ` share the
/// axis `e_y`. Evaluated by adaptive Simpson with absolute tolerance
/// `quad_tol` (m/s).
pub fn inhomogeneous_term(f: &SinusoidalField, t: f64, quad_tol: f64) -> Result<Vec3, TimedepError> {
    if f.e0 == 0.0 || t == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let phi_t = phase_vector(f, t);
    let cycles = (f.omega * t.abs() / std::f64::consts::PI) * (f.zeta().abs() + 1.0);
    let opts = QuadOptions::with_tol(quad_tol).panels(8 + cycles.ceil() as usize);
    let integrand = |tp: f64| rodrigues_propagate(&Vop::new(phi_t - phase_vector(f, tp)), 1.0, f.q_at(tp));
    Ok(adaptive_simpson(integrand, 0.0, t, opts)?)
}

/// Double Bessel series for [`inhomogeneous_term`] at `φ = π/2`.
///
/// Writes `w = Re(C) Q₀ + Im(C) n × Q₀` with
/// `C = (t/2) Σ_k Σ_n J_k(ζ) J_n(ζ) e^{ikωt/2} e^{−inωt} F_k(t)` and
/// `F_k = e^{iωt/2} sinc((k+1)ωt/2) + e^{−iωt/2} sinc((k−1)ωt/2)`.
/// The double sum factorises into two single sums over `[−n_max, n_max]`.
pub fn inhomogeneous_term_series(f: &SinusoidalField, t: f64, n_max: usize) -> Result<Vec3, TimedepError> {
    f.require_quarter_phase()?;
    let j = bessel_j_symmetric(n_max, f.zeta());
    let wt = f.omega * t;
    let half = Complex64::from_polar(1.0, 0.5 * wt);
    let mut outer = Complex64::new(0.0, 0.0);
    let mut inner = Complex64::new(0.0, 0.0);
    for (idx, &jk) in j.iter().enumerate() {
        let k = idx as f64 - n_max as f64;
        outer += Complex64::from_polar(jk, -k * wt);
        let fk = half * small_angle::sinc(0.5 * (k + 1.0) * wt) + half.conj() * small_angle::sinc(0.5 * (k - 1.0) * wt);
        inner += Complex64::from_polar(jk, 0.5 * k * wt) * fk;
    }
    let c = outer * inner * (0.5 * t);
    let q0 = f.q0();
    Ok(q0 * c.re + Vec3::Y.cross(q0) * c.im)
}

/// Full velocity `exp(Φ̂(t)) v0 + w(t)` in the sinusoidal fields.
pub fn sinusoidal_velocity(f: &SinusoidalField, v0: Vec3, t: f64, quad_tol: f64) -> Result<Vec3, TimedepError> {
    Ok(oscillating_b_velocity(f, v0, t) + inhomogeneous_term(f, t, quad_tol)?)
}

/// Velocity from rest under a static field `B` and a driven acceleration
/// `Q(t)` (zero for `t < 0`): `v = c + (n·f)n + n × s` with
/// `c = ∫cos[Ω(t′−t)]Q`, `s = ∫sin[Ω(t′−t)]Q`, `f = ∫{1 − cos[Ω(t′−t)]}Q`.
pub fn resolvent_velocity<F>(p: &Particle, b: Vec3, q_of_t: F, t: f64, quad_tol: f64) -> Result<Vec3, TimedepError>
where
    F: Fn(f64) -> Vec3,
{
    let wc = p.charge_to_mass() * b.norm();
    let Some(n) = b.normalized() else {
        return Ok(adaptive_simpson(&q_of_t, 0.0, t, QuadOptions::with_tol(quad_tol))?);
    };
    let panels = 8 + (wc.abs() * t.abs() / std::f64::consts::PI).ceil() as usize;
    let opts = QuadOptions::with_tol(quad_tol / 3.0).panels(panels);
    let c = adaptive_simpson(|tp| q_of_t(tp) * (wc * (tp - t)).cos(), 0.0, t, opts)?;
    let s = adaptive_simpson(|tp| q_of_t(tp) * (wc * (tp - t)).sin(), 0.0, t, opts)?;
    let fv = adaptive_simpson(|tp| q_of_t(tp) * small_angle::one_minus_cos(wc * (tp - t)), 0.0, t, opts)?;
    Ok(c + fv.parallel_to(n) + n.cross(s))
}

/// Torque of the commutator `[T̂₁, T̂₂]`: by the Jacobi identity
/// `T₁×(T₂×v) − T₂×(T₁×v) = (T₁×T₂)×v`.
pub fn vop_commutator(t1_vec: Vec3, t2_vec: Vec3) -> Vec3 {
    t1_vec.cross(t2_vec)
}

/// A torque vector prescribed as a function of time.
pub struct TimeTorque {
    pub omega_of_t: Box<dyn Fn(f64) -> Vec3 + Send + Sync>,
}

impl TimeTorque {
    pub fn new(f: impl Fn(f64) -> Vec3 + Send + Sync + 'static) -> Self {
        Self { omega_of_t: Box::new(f) }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        (self.omega_of_t)(t)
    }
}

/// `(Γ, Δ)` over `[a, b]`: `Γ = ∫Ω`, `Δ = ½∫dt₁∫_a^{t₁}dt₂ Ω(t₁)×Ω(t₂)`, by
/// nested Gauss–Legendre quadrature.
pub fn magnus_terms(tt: &TimeTorque, a: f64, b: f64, rule: &GaussLegendre) -> (Vec3, Vec3) {
    let mut gamma = Vec3::ZERO;
    let mut delta = Vec3::ZERO;
    for (t1, w1) in rule.points(a, b) {
        let om1 = tt.at(t1);
        gamma += om1 * w1;
        let inner: Vec3 = rule.integrate(|t2| tt.at(t2), a, t1);
        delta += vop_commutator(om1, inner) * (0.5 * w1);
    }
    (gamma, delta)
}

/// Second-order Magnus propagator of `dv/dt = −Ω(t) × v` over `[0, t]`:
/// a single rotation with torque `−Γ + Δ`.
pub fn magnus2_propagate(tt: &TimeTorque, t: f64, s0: Vec3, n_quad: usize) -> Result<Vec3, TimedepError> {
    magnus2_evolve(tt, t, 1, s0, n_quad)
}

/// Composite Magnus-2 over `n_steps` equal sub-intervals of `[0, t_end]`.
pub fn magnus2_evolve(
    tt: &TimeTorque,
    t_end: f64,
    n_steps: usize,
    s0: Vec3,
    n_quad: usize,
) -> Result<Vec3, TimedepError> {
    if n_quad < 8 {
        return Err(TimedepError::InvalidParameter { name: "n_quad", reason: "needs at least 8 nodes" });
    }
    if n_steps == 0 {
        return Err(TimedepError::InvalidParameter { name: "n_steps", reason: "must be positive" });
    }
    let rule = GaussLegendre::new(n_quad);
    let h = t_end / n_steps as f64;
    let mut s = s0;
    for k in 0..n_steps {
        let a = k as f64 * h;
        let b = if k + 1 == n_steps { t_end } else { a + h };
        let (gamma, delta) = magnus_terms(tt, a, b, &rule);
        s = rodrigues_propagate(&Vop::new(delta - gamma), 1.0, s);
    }
    Ok(s)
}

/// Leading Magnus correction `Ω² ω t³/12 · u` for a torque of constant
/// modulus `Ω` turning at rate `ω` about the unit vector `u`
/// (`u` along `Ω(t₁) × Ω(t₂)` for `t₁ > t₂`).
pub fn adiabatic_delta(omega_mag: f64, omega_rot: f64, t: f64, u: Vec3) -> Vec3 {
    u * (omega_mag * omega_mag * omega_rot * t * t * t / 12.0)
}

/// Turning rate `B_y Ḃ_z / B²` of a field with a fixed y-component and a
/// slowly changing z-component.
pub fn adiabatic_frequency(b_y: f64, bdot_z: f64, b_mag: f64) -> Result<f64, TimedepError> {
    if b_mag == 0.0 {
        return Err(TimedepError::ZeroField);
    }
    Ok(b_y * bdot_z / (b_mag * b_mag))
}
