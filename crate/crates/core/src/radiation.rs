//! Radiation from a charge gyrating in a uniform magnetic field: the
//! Liénard–Wiechert spectral vector, its harmonic expansion in generalized
//! Bessel functions, harmonic and undulator wavelengths, and the chirped
//! lineshape produced by an added electric field.
//!
//! The charge follows `dv/dt = −Ω n × v` with signed `Ω` (positive for a
//! positive charge), starting at the origin with velocity `β₀c`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::{lorentz_state, Particle, ParticleState, UniformFields, ELEMENTARY_CHARGE};
use crate::quad::{adaptive_simpson, GaussLegendre, QuadOptions, QuadratureFailure};
use crate::secondorder::VACUUM_PERMITTIVITY;
use crate::special::{bessel_j, bessel_j_symmetric};
use crate::vec3::{CVec3, ComplexScalar, Vec3};
use crate::vop::small_angle::sinc;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RadiationError {
    #[error("invalid geometry: {reason}")]
    InvalidGeometry { reason: &'static str },
    #[error("1 − (q·n)(n·β₀) vanishes")]
    DegenerateGeometry,
    #[error("harmonic sum truncated: tail {tail:e} against |S| = {norm:e}")]
    Truncation { tail: f64, norm: f64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error(transparent)]
    Quadrature(#[from] QuadratureFailure),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiationGeometry {
    /// unit observation direction
    pub q: Vec3,
    /// unit field direction
    pub n: Vec3,
    /// `v₀/c`
    pub beta0: Vec3,
    /// signed gyration rate, rad/s
    pub omega_g: f64,
    /// acceleration time, s
    pub t_obs: f64,
    /// m/s
    pub c: f64,
}

impl RadiationGeometry {
    pub fn validate(&self) -> Result<(), RadiationError> {
        if ((self.q.norm() - 1.0).abs()) > 1e-12 {
            return Err(RadiationError::InvalidGeometry { reason: "q must be a unit vector" });
        }
        if ((self.n.norm() - 1.0).abs()) > 1e-12 {
            return Err(RadiationError::InvalidGeometry { reason: "n must be a unit vector" });
        }
        if !(self.beta0.norm() < 1.0) {
            return Err(RadiationError::InvalidGeometry { reason: "|beta0| must be below 1" });
        }
        if self.omega_g == 0.0 || !self.omega_g.is_finite() {
            return Err(RadiationError::InvalidGeometry { reason: "gyration rate must be nonzero" });
        }
        if !(self.t_obs > 0.0) || !(self.c > 0.0) {
            return Err(RadiationError::InvalidGeometry { reason: "t_obs and c must be positive" });
        }
        Ok(())
    }

    /// `(r(t), β(t))` on the gyration orbit from the origin.
    pub fn orbit(&self, t: f64) -> (Vec3, Vec3) {
        let p = Particle::new(1.0, self.omega_g);
        let f = UniformFields::new(Vec3::ZERO, self.n);
        let s = lorentz_state(&p, &f, &ParticleState::new(0.0, Vec3::ZERO, self.beta0 * self.c), t);
        (s.r, s.v / self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicCoefficients {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub a: Vec3,
    pub b_c: Vec3,
    pub b_s: Vec3,
}

impl HarmonicCoefficients {
    /// `b = b_c + i b_s`.
    pub fn b_complex(&self) -> CVec3 {
        CVec3::from_parts(self.b_c, self.b_s)
    }

    /// `q × (q × β(t)) = a + b_c cos Ωt − b_s sin Ωt` at phase `Ωt`.
    pub fn transverse_beta(&self, phase: f64) -> Vec3 {
        let (s, c) = phase.sin_cos();
        self.a + self.b_c * c - self.b_s * s
    }
}

/// Coefficients of the retarded phase and of `q × (q × β)` along the orbit:
/// `c₁ = q·(n×β₀)`, `c₂ = 1 − (n·β₀)(q·n)`, `c₃ = (n·β₀)(q·n) − q·β₀`,
/// `a = (n·β₀)[(q·n)q − n]`, `b_c = (q·β₀)q − β₀ − a`,
/// `b_s = [q·(n×β₀)]q − n×β₀`.
pub fn harmonic_coefficients(geom: &RadiationGeometry) -> HarmonicCoefficients {
    let (q, n, b0) = (geom.q, geom.n, geom.beta0);
    let nb = n.dot(b0);
    let qn = q.dot(n);
    let nxb = n.cross(b0);
    let a = ((q * qn) - n) * nb;
    HarmonicCoefficients {
        c1: q.dot(nxb),
        c2: 1.0 - nb * qn,
        c3: nb * qn - q.dot(b0),
        a,
        b_c: q * q.dot(b0) - b0 - a,
        b_s: q * q.dot(nxb) - nxb,
    }
}

/// `B_n(x, iy) = e^{in·atan2(y, x)} J_n(√(x² + y²))`, the coefficient of
/// `e^{inθ}` in `exp(i(x sin θ + y cos θ))`.
pub fn generalized_bessel(n: i64, x: f64, y: f64) -> ComplexScalar {
    let r = x.hypot(y);
    let j = bessel_j(n, r);
    if r == 0.0 {
        return Complex64::new(j, 0.0);
    }
    Complex64::from_polar(j, n as f64 * y.atan2(x))
}

/// Bessel arguments `(X, Y) = (ω/Ω)(c₃, c₁)` of the expansion
/// `exp(i(X sin Ωt − Y cos Ωt)) = Σ_k B_k(X, −iY) e^{ikΩt}`.
fn bessel_arguments(geom: &RadiationGeometry, hc: &HarmonicCoefficients, omega: f64) -> (f64, f64) {
    let k = omega / geom.omega_g;
    (k * hc.c3, k * hc.c1)
}

/// `⌈√(X² + Y²)⌉ + 25`, enough Bessel orders for the harmonic sum.
pub fn default_r_max(geom: &RadiationGeometry, omega: f64) -> usize {
    let hc = harmonic_coefficients(geom);
    let (x, y) = bessel_arguments(geom, &hc, omega);
    x.hypot(y).ceil() as usize + 25
}

/// Harmonic sum for the spectral vector
/// `S = (T/2) e^{iY} Σ_r [2a B_r + b B_{r−1} + b* B_{r+1}] e^{iφ_rT/2} sinc(φ_rT/2)`
/// with `φ_r = rΩ + ωc₂`, `r ∈ [−r_max, r_max]`.
pub fn s_vector(geom: &RadiationGeometry, omega: f64, r_max: usize) -> Result<CVec3, RadiationError> {
    geom.validate()?;
    let hc = harmonic_coefficients(geom);
    let (x, y) = bessel_arguments(geom, &hc, omega);
    let big_r = x.hypot(y);
    let order = r_max + 1;
    let j = bessel_j_symmetric(order, big_r);
    let psi = (-y).atan2(x);
    let g = |k: i64| -> Complex64 {
        let jk = j[(k + order as i64) as usize];
        if big_r == 0.0 {
            Complex64::new(jk, 0.0)
        } else {
            Complex64::from_polar(jk, k as f64 * psi)
        }
    };
    let a = hc.a.to_complex();
    let b = hc.b_complex();
    let bc = b.conj();
    let t = geom.t_obs;
    let term = |r: i64| {
        let phi = r as f64 * geom.omega_g + omega * hc.c2;
        let shape = Complex64::from_polar(sinc(0.5 * phi * t), 0.5 * phi * t);
        (a.scale(g(r) * 2.0) + b.scale(g(r - 1)) + bc.scale(g(r + 1))).scale(shape)
    };
    let mut sum = CVec3::ZERO;
    let rm = r_max as i64;
    for r in -rm..=rm {
        sum = sum + term(r);
    }
    let prefactor = Complex64::from_polar(0.5 * t, y);
    let s = sum.scale(prefactor);
    let tail = 0.5 * t * (term(rm).norm() + term(-rm).norm());
    if tail > 1e-8 * s.norm() && tail > 1e-300 {
        return Err(RadiationError::Truncation { tail, norm: s.norm() });
    }
    Ok(s)
}

/// `S = ∫₀ᵀ q × (q × β) exp(iω(t − q·r/c)) dt` evaluated directly on the
/// orbit by composite Gauss–Legendre with `nodes_per_period` nodes per
/// gyration period.
pub fn s_vector_direct(geom: &RadiationGeometry, omega: f64, nodes_per_period: usize) -> Result<CVec3, RadiationError> {
    geom.validate()?;
    let rule = GaussLegendre::new(8);
    let period = 2.0 * PI / geom.omega_g.abs();
    let panels = ((geom.t_obs / period) * nodes_per_period as f64 / 8.0).ceil().max(1.0) as usize;
    let h = geom.t_obs / panels as f64;
    let q = geom.q;
    let mut s = CVec3::ZERO;
    for k in 0..panels {
        let a = k as f64 * h;
        let b = if k + 1 == panels { geom.t_obs } else { a + h };
        for (t, w) in rule.points(a, b) {
            let (r, beta) = geom.orbit(t);
            let phase = omega * (t - q.dot(r) / geom.c);
            let tb = q.cross(q.cross(beta));
            s = s + tb * Complex64::from_polar(w, phase);
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSample {
    /// rad/s
    pub omega: f64,
    pub s: CVec3,
    /// J·s per steradian
    pub intensity: f64,
}

/// `d²I/dΩdω = e²ω²|S|²/(16π³ε₀c)`.
pub fn intensity(omega: f64, s: CVec3, c: f64) -> f64 {
    let e2 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
    e2 * omega * omega * s.norm_squared() / (16.0 * PI * PI * PI * VACUUM_PERMITTIVITY * c)
}

/// Spectral vector and intensity on each grid frequency. `r_max = None`
/// picks [`default_r_max`] per frequency.
pub fn spectrum(
    geom: &RadiationGeometry,
    omega_grid: &[f64],
    r_max: Option<usize>,
) -> Result<Vec<SpectrumSample>, RadiationError> {
    if omega_grid.is_empty() {
        return Err(RadiationError::InvalidParameter { name: "omega_grid", reason: "must not be empty" });
    }
    omega_grid
        .iter()
        .map(|&w| {
            let s = s_vector(geom, w, r_max.unwrap_or_else(|| default_r_max(geom, w)))?;
            Ok(SpectrumSample { omega: w, s, intensity: intensity(w, s, geom.c) })
        })
        .collect()
}

/// `ω_r = r|Ω|/(1 − (q·n)(n·β₀))`, `r = 1..=r_max`.
pub fn harmonic_frequencies(geom: &RadiationGeometry, r_max: usize) -> Result<Vec<f64>, RadiationError> {
    let c2 = harmonic_coefficients(geom).c2;
    if c2.abs() < 1e-15 {
        return Err(RadiationError::DegenerateGeometry);
    }
    Ok((1..=r_max).map(|r| r as f64 * geom.omega_g.abs() / c2).collect())
}

/// `(λ_c, λ_r)` for a solenoid seen as an undulator: `λ_c = γ·2πc/ω_{c,0}`
/// and `λ_r = λ_c/(2rγ²)`, with `ω_{c,0} = |e|B/m₀`.
pub fn undulator_wavelengths(gamma: f64, b: f64, p: &Particle, r: u32, c: f64) -> Result<(f64, f64), RadiationError> {
    if !(gamma >= 1.0) {
        return Err(RadiationError::InvalidParameter { name: "gamma", reason: "must be at least 1" });
    }
    if r == 0 {
        return Err(RadiationError::InvalidParameter { name: "r", reason: "must be at least 1" });
    }
    let wc0 = (p.charge_to_mass() * b).abs();
    if wc0 == 0.0 {
        return Err(RadiationError::InvalidParameter { name: "b", reason: "cyclotron frequency is zero" });
    }
    let lambda_c = gamma * 2.0 * PI * c / wc0;
    Ok((lambda_c, lambda_c / (2.0 * r as f64 * gamma * gamma)))
}

/// `F_r = ∫₀ᵀ exp(i(φ_r t − ω(Q·q/c)t²)) dt`, the line profile of harmonic
/// `r` when an acceleration `Q` chirps the phase.
pub fn lineshape_with_field(
    phi_r: f64,
    omega: f64,
    q_acc: Vec3,
    q: Vec3,
    t_obs: f64,
    c: f64,
    quad_tol: f64,
) -> Result<ComplexScalar, RadiationError> {
    if !(t_obs > 0.0) {
        return Err(RadiationError::InvalidParameter { name: "t_obs", reason: "must be positive" });
    }
    let chirp = omega * q_acc.dot(q) / c;
    let cycles = (phi_r.abs() * t_obs + chirp.abs() * t_obs * t_obs) / PI;
    let opts = QuadOptions::with_tol(quad_tol).panels(8 + cycles.ceil() as usize);
    Ok(adaptive_simpson(|t: f64| Complex64::from_polar(1.0, phi_r * t - chirp * t * t), 0.0, t_obs, opts)?)
}
