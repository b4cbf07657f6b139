//! Second-order and quadratic generators: two-variable Hermite polynomials,
//! the Ch/Sh functions of `exp(tT̂ + λtT̂²)`, the radiation-reaction equation
//! `(−τ d²/dt² + d/dt + Ω̂) v = Q` and the Liouville reduction of
//! `s'' + Â s' + B̂ s = 0`.

use num_complex::Complex64;
use thiserror::Error;
use twofloat::TwoFloat;

use crate::dynamics::{cexpm1, Particle, ELEMENTARY_CHARGE, SPEED_OF_LIGHT};
use crate::quad::{adaptive_simpson, QuadOptions, QuadratureFailure};
use crate::vec3::Vec3;
use crate::vop::{analytic_function_apply, rodrigues_propagate, EvalError, Vop};

/// F/m
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SecondOrderError {
    #[error("H_{n} overflows f64")]
    Overflow { n: usize },
    #[error("order {n} exceeds the supported maximum 400")]
    OrderTooLarge { n: usize },
    #[error("series not converged at n_max = {n_max}: tail bound {tail:e}")]
    NotConverged { n_max: usize, tail: f64 },
    #[error("torques do not commute: |A × B| = {cross:e}")]
    NonCommuting { cross: f64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error(transparent)]
    Quadrature(#[from] QuadratureFailure),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Arguments `(a, b)` of `H_n(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteArgs {
    pub a: f64,
    pub b: f64,
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Product of double-double factors, rescaled by exact powers of two so that
/// intermediate values never leave the f64 range.
fn scaled_product(factors: impl Iterator<Item = TwoFloat>) -> f64 {
    const STEP: i32 = 128;
    let up = 2f64.powi(STEP);
    let mut acc = TwoFloat::from(1.0);
    let mut exp2 = 0i32;
    for f in factors {
        acc *= f;
        let mag = acc.hi().abs();
        if mag > up {
            acc /= up;
            exp2 += STEP;
        } else if mag != 0.0 && mag < 1.0 / up {
            acc *= up;
            exp2 -= STEP;
        }
    }
    let mut v = f64::from(acc);
    while exp2 > 0 {
        v *= up;
        exp2 -= STEP;
    }
    while exp2 < 0 {
        v /= up;
        exp2 += STEP;
    }
    v
}

/// `H_n(a, b) = n! Σ_k a^{n−2k} b^k / ((n−2k)! k!)`.
///
/// The terms are generated by their ratio outwards from the largest one, so
/// every scaled term is at most 1, and summed in double-double to absorb the
/// cancellation for `b < 0`. Only the common scale is handled in the log
/// domain.
pub fn hermite2(n: usize, args: HermiteArgs) -> Result<f64, SecondOrderError> {
    if n > 400 {
        return Err(SecondOrderError::OrderTooLarge { n });
    }
    let HermiteArgs { a, b } = args;
    let ln_nf = ln_factorial(n);
    // single term n!/(p! k!) a^p b^k; the log only screens for overflow
    let single = |k: usize| -> Result<f64, SecondOrderError> {
        let p = n - 2 * k;
        let ln_mag = ln_nf - ln_factorial(p) - ln_factorial(k)
            + if p > 0 { p as f64 * a.abs().ln() } else { 0.0 }
            + if k > 0 { k as f64 * b.abs().ln() } else { 0.0 };
        if ln_mag > f64::MAX.ln() + 1.0 {
            return Err(SecondOrderError::Overflow { n });
        }
        let factors = (0..p)
            .map(|_| TwoFloat::from(a))
            .chain((1..=k).map(|j| TwoFloat::from(b) * ((p + 2 * j - 1) * (p + 2 * j)) as f64 / j as f64));
        let value = scaled_product(factors);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(SecondOrderError::Overflow { n })
        }
    };
    if a == 0.0 {
        return if n % 2 == 1 { Ok(0.0) } else { single(n / 2) };
    }
    if b == 0.0 || n < 2 {
        return single(0);
    }
    // t_{k+1}/t_k = b (n−2k)(n−2k−1) / (a² (k+1)), decreasing in k
    let ratio = |k: usize| {
        let m = ((n - 2 * k) * (n - 2 * k - 1)) as f64;
        // divisions by f64 only: twofloat's dd/dd quotient is f64-accurate
        TwoFloat::from(b) * m / a / a / (k + 1) as f64
    };
    let k_last = n / 2;
    let k_top = (0..k_last).find(|&k| f64::from(ratio(k)).abs() < 1.0).unwrap_or(k_last);
    let mut sum = TwoFloat::from(1.0);
    let mut t = TwoFloat::from(1.0);
    for k in k_top..k_last {
        t *= ratio(k);
        sum += t;
    }
    t = TwoFloat::from(1.0);
    for k in (0..k_top).rev() {
        let m = ((n - 2 * k) * (n - 2 * k - 1)) as f64;
        t *= TwoFloat::from(a) * a * (k + 1) as f64 / b / m;
        sum += t;
    }
    let top = single(k_top)?;
    let scaled = f64::from(sum);
    if scaled == 0.0 {
        return Ok(0.0);
    }
    let h = top * scaled;
    if !h.is_finite() {
        return Err(SecondOrderError::Overflow { n });
    }
    Ok(h)
}

/// `(Ch, Sh)` of the quadratic generator: the even and odd alternating parts
/// of `Σ Tⁿ H_n(t, λt)/n!`, truncated at `n_max`.
///
/// With `x = Tt`, `y = λT²t` the scaled terms `h_n = Tⁿ H_n/n!` obey
/// `h_{n+1} = (x h_n + 2y h_{n−1})/(n+1)`. The alternating sums cancel down
/// to `e^{−y}`, so the recurrence runs in double-double arithmetic.
pub fn ch_sh(t_mag: f64, t: f64, lambda: f64, n_max: usize) -> Result<(f64, f64), SecondOrderError> {
    let x = t_mag * t;
    let y = lambda * t_mag * t_mag * t;
    let mut ch = TwoFloat::from(1.0);
    let mut sh = TwoFloat::from(0.0);
    let mut prev = TwoFloat::from(0.0);
    let mut cur = TwoFloat::from(1.0);
    // majorant: coefficients of exp(|x|ξ + |y|ξ²)
    let (mut g_prev, mut g_cur) = (0.0f64, 1.0f64);
    let mut n = 0;
    while n < n_max {
        let next = (cur * x + prev * (2.0 * y)) / (n + 1) as f64;
        let g_next = (x.abs() * g_cur + 2.0 * y.abs() * g_prev) / (n + 1) as f64;
        n += 1;
        match n % 4 {
            0 => ch += next,
            1 => sh += next,
            2 => ch -= next,
            _ => sh -= next,
        }
        prev = cur;
        cur = next;
        g_prev = g_cur;
        g_cur = g_next;
        if g_cur + g_prev < 1e-30 && n as f64 > x.abs() {
            break;
        }
    }
    let tail = g_cur + g_prev;
    if n == n_max && tail > 1e-12 {
        return Err(SecondOrderError::NotConverged { n_max, tail });
    }
    Ok((f64::from(ch), f64::from(sh)))
}

/// A truncation order for [`ch_sh`] that comfortably covers `(x, y)`.
pub fn ch_sh_order(t_mag: f64, t: f64, lambda: f64) -> usize {
    let x = (t_mag * t).abs();
    let y = (lambda * t_mag * t_mag * t).abs();
    60 + (3.0 * x + 6.0 * y).ceil() as usize
}

/// Solution of `dS/dt = T × S + λ T × (T × S)`: the rotation template with
/// `cos → Ch`, `sin → Sh` on the plane normal to `T`; the axis component is
/// left unchanged.
pub fn quadratic_vop_evolve(t_vec: Vec3, lambda: f64, t: f64, s0: Vec3) -> Result<Vec3, SecondOrderError> {
    let Some(n) = t_vec.normalized() else {
        return Ok(s0);
    };
    let t_mag = t_vec.norm();
    let (ch, sh) = ch_sh(t_mag, t, lambda, ch_sh_order(t_mag, t, lambda))?;
    let along = s0.parallel_to(n);
    Ok(along + (s0 - along) * ch + n.cross(s0) * sh)
}

/// Parameters of `(−τ d²/dt² + d/dt + Ω̂) v = Q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiationReactionParams {
    /// s
    pub tau: f64,
    /// m
    pub r0: f64,
    /// rad/s, acting as `Ω̂ v = Ω × v`
    pub omega: Vec3,
}

impl RadiationReactionParams {
    /// `τ` given directly; `r0` is set to the matching `(3/2)cτ`.
    pub fn new(tau: f64, omega: Vec3) -> Result<Self, SecondOrderError> {
        if !(tau > 0.0) {
            return Err(SecondOrderError::InvalidParameter { name: "tau", reason: "must be positive" });
        }
        Ok(Self { tau, r0: 1.5 * SPEED_OF_LIGHT * tau, omega })
    }

    /// `r0 = e²/(4πε₀mc²)`, `τ = (2/3) r0/c` for a particle in the field `B`.
    pub fn for_particle(p: &Particle, b: Vec3) -> Result<Self, SecondOrderError> {
        let r0 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE
            / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * p.mass * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
        let tau = 2.0 * r0 / (3.0 * SPEED_OF_LIGHT);
        Ok(Self { tau, r0, omega: b * p.charge_to_mass() })
    }

    fn op(&self) -> Vop {
        Vop::new(self.omega)
    }

    /// `α(z) = √(1 + 4τz)`, principal branch.
    pub fn alpha(&self, z: Complex64) -> Complex64 {
        (Complex64::new(1.0, 0.0) + z * (4.0 * self.tau)).sqrt()
    }

    /// `A±(z) = (1 ± α(z))/(2τ)`.
    pub fn a_plus(&self, z: Complex64) -> Complex64 {
        (self.alpha(z) + 1.0) / (2.0 * self.tau)
    }

    pub fn a_minus(&self, z: Complex64) -> Complex64 {
        (-self.alpha(z) + 1.0) / (2.0 * self.tau)
    }

    /// Largest real part of `A+` over the spectrum `{0, ±i|Ω|}`: the growth
    /// rate of a generic homogeneous solution.
    pub fn runaway_rate(&self) -> f64 {
        let z = Complex64::new(0.0, self.omega.norm());
        self.a_plus(z).re.max(self.a_plus(Complex64::new(0.0, 0.0)).re)
    }

    /// Green kernel `−(e^{sA+} − e^{sA−})/α` at eigenvalue `z`.
    fn green(&self, z: Complex64, s: f64) -> Complex64 {
        let al = self.alpha(z);
        -(self.a_minus(z) * s).exp() * cexpm1(al * (s / self.tau)) / al
    }

    /// Time derivative of [`Self::green`].
    fn green_rate(&self, z: Complex64, s: f64) -> Complex64 {
        let al = self.alpha(z);
        -((self.a_plus(z) * s).exp() * self.a_plus(z) - (self.a_minus(z) * s).exp() * self.a_minus(z)) / al
    }
}

/// Driven solution from rest, `v(0) = v̇(0) = 0`:
/// `v = −(1/α̂)[e^{tÂ+}∫e^{−ξÂ+}Q − e^{tÂ−}∫e^{−ξÂ−}Q]`.
///
/// The two convolutions are merged into one kernel `−(e^{sÂ+} − e^{sÂ−})/α̂`
/// with `s = t − ξ`, evaluated by the spectral calculus of `Ω̂`.
pub fn rr_forced_velocity<F>(
    params: &RadiationReactionParams,
    q_of_t: F,
    t: f64,
    quad_tol: f64,
) -> Result<Vec3, SecondOrderError>
where
    F: Fn(f64) -> Vec3,
{
    Ok(rr_forced_state(params, q_of_t, t, quad_tol)?.0)
}

fn rr_forced_state<F>(
    params: &RadiationReactionParams,
    q_of_t: F,
    t: f64,
    quad_tol: f64,
) -> Result<(Vec3, Vec3), SecondOrderError>
where
    F: Fn(f64) -> Vec3,
{
    if t == 0.0 {
        return Ok((Vec3::ZERO, Vec3::ZERO));
    }
    let op = params.op();
    let panels = 8 + (params.omega.norm() * t.abs() / std::f64::consts::PI).ceil() as usize;
    let opts = QuadOptions::with_tol(quad_tol).panels(panels);
    let mut failure = None;
    let mut kernel = |tp: f64, rate: bool| {
        let s = t - tp;
        let q = q_of_t(tp);
        let r = if rate {
            analytic_function_apply(|z| params.green_rate(z, s), &op, q)
        } else {
            analytic_function_apply(|z| params.green(z, s), &op, q)
        };
        r.unwrap_or_else(|e| {
            failure.get_or_insert(e);
            Vec3::ZERO
        })
    };
    let v = adaptive_simpson(|tp| kernel(tp, false), 0.0, t, opts)?;
    let a = adaptive_simpson(|tp| kernel(tp, true), 0.0, t, opts)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok((v, a))
}

/// Spectral entries of `exp(tM̂)` for `M̂ = (1/τ)[[0, τ], [Ω̂, 1]]`, returned as
/// `(U_vv, U_va, U_av, U_aa)` at eigenvalue `z`:
/// `e^σ[cosh − sinh/α, 2τ sinh/α; 2z sinh/α, cosh + sinh/α](σα)`, `σ = t/2τ`.
fn matrix_entries(p: &RadiationReactionParams, z: Complex64, t: f64) -> [Complex64; 4] {
    let sigma = t / (2.0 * p.tau);
    let al = p.alpha(z);
    let arg = al * sigma;
    let (ch, sh) = (arg.cosh(), arg.sinh());
    // sinh(σα)/α, regular as α → 0
    let sh_over = if arg.norm() < 1e-8 { Complex64::new(sigma, 0.0) * (Complex64::new(1.0, 0.0) + arg * arg / 6.0) } else { sh / al };
    let e = sigma.exp();
    [
        (ch - sh_over) * e,
        sh_over * (2.0 * p.tau * e),
        z * sh_over * (2.0 * e),
        (ch + sh_over) * e,
    ]
}

/// `(v(t), a(t))` from `(v0, a0)` by the 2×2 operator-matrix exponential,
/// plus `∫₀ᵗ Û(t − t′) K(t′) dt′` with `K = −(1/τ)(0, Q)`.
pub fn rr_matrix_propagate<F>(
    params: &RadiationReactionParams,
    v0: Vec3,
    a0: Vec3,
    q_of_t: F,
    t: f64,
    quad_tol: f64,
) -> Result<(Vec3, Vec3), SecondOrderError>
where
    F: Fn(f64) -> Vec3,
{
    let op = params.op();
    let entry = |k: usize, v: Vec3| analytic_function_apply(|z| matrix_entries(params, z, t)[k], &op, v);
    let v = entry(0, v0)? + entry(1, a0)?;
    let a = entry(2, v0)? + entry(3, a0)?;
    let (fv, fa) = rr_forced_state(params, q_of_t, t, quad_tol)?;
    Ok((v + fv, a + fa))
}

/// Homogeneous solution `e^{tÂ+} c1 + e^{tÂ−} c2` with
/// `(Â+ − Â−)c1 = −Â− v0 + a0`, `(Â+ − Â−)c2 = Â+ v0 − a0`.
pub fn rr_homogeneous(params: &RadiationReactionParams, v0: Vec3, a0: Vec3, t: f64) -> Result<Vec3, SecondOrderError> {
    let op = params.op();
    let tau = params.tau;
    let c1 = analytic_function_apply(|z| -params.a_minus(z) * tau / params.alpha(z), &op, v0)?
        + analytic_function_apply(|z| tau / params.alpha(z), &op, a0)?;
    let c2 = analytic_function_apply(|z| params.a_plus(z) * tau / params.alpha(z), &op, v0)?
        - analytic_function_apply(|z| tau / params.alpha(z), &op, a0)?;
    Ok(analytic_function_apply(|z| (params.a_plus(z) * t).exp(), &op, c1)?
        + analytic_function_apply(|z| (params.a_minus(z) * t).exp(), &op, c2)?)
}

/// Non-runaway branch `e^{tÂ−} v0`, the solution with `c1 = 0`.
pub fn rr_stable_branch(params: &RadiationReactionParams, v0: Vec3, t: f64) -> Result<Vec3, SecondOrderError> {
    Ok(analytic_function_apply(|z| (params.a_minus(z) * t).exp(), &params.op(), v0)?)
}

/// Substitution `s(t) = exp(−(t/2)Â) u(t)`, a rotation about `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiouvilleTransform {
    pub a_torque: Vec3,
}

impl LiouvilleTransform {
    /// `s = exp(−(t/2)Â) u`.
    pub fn to_original(&self, t: f64, u: Vec3) -> Vec3 {
        rodrigues_propagate(&Vop::new(self.a_torque * -0.5), t, u)
    }

    /// `u = exp((t/2)Â) s`.
    pub fn to_reduced(&self, t: f64, s: Vec3) -> Vec3 {
        rodrigues_propagate(&Vop::new(self.a_torque * 0.5), t, s)
    }

    /// `(s, s′)` from `(u, u′)`: `s′ = e^{−tÂ/2}(u′ − ½Âu)`.
    pub fn state_to_original(&self, t: f64, u: Vec3, du: Vec3) -> (Vec3, Vec3) {
        (self.to_original(t, u), self.to_original(t, du - self.a_torque.cross(u) * 0.5))
    }

    /// `(u, u′)` from `(s, s′)`: `u′ = e^{tÂ/2}(s′ + ½Âs)`.
    pub fn state_to_reduced(&self, t: f64, s: Vec3, ds: Vec3) -> (Vec3, Vec3) {
        (self.to_reduced(t, s), self.to_reduced(t, ds + self.a_torque.cross(s) * 0.5))
    }
}

/// Coefficient operator `R̂ = B̂ − ¼Â²` of `u'' + R̂u = 0` for parallel `A`, `B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedOperator {
    pub a_torque: Vec3,
    pub b_torque: Vec3,
}

impl ReducedOperator {
    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.b_torque.cross(v) - self.a_torque.cross(self.a_torque.cross(v)) * 0.25
    }

    /// Common unit axis and the signed components `(a, b)` along it.
    fn axis_data(&self) -> Option<(Vec3, f64, f64)> {
        let n = self.a_torque.normalized().or_else(|| self.b_torque.normalized())?;
        Some((n, self.a_torque.dot(n), self.b_torque.dot(n)))
    }

    /// `(u(t), u′(t))` for `u'' + R̂u = 0`:
    /// `u = cos(t√R̂) u0 + (sin(t√R̂)/√R̂) u0′`, spectral in the unit VOP `n̂`.
    pub fn solve(&self, u0: Vec3, du0: Vec3, t: f64) -> Result<(Vec3, Vec3), SecondOrderError> {
        let Some((n, a, b)) = self.axis_data() else {
            return Ok((u0 + du0 * t, du0));
        };
        let op = Vop::new(n);
        let rho = move |z: Complex64| z * b - z * z * (0.25 * a * a);
        let cos_f = move |z: Complex64| (rho(z).sqrt() * t).cos();
        let sinc_f = move |z: Complex64| {
            let w = rho(z).sqrt();
            let wt = w * t;
            if wt.norm() < 1e-4 {
                (Complex64::new(1.0, 0.0) - wt * wt / 6.0) * t
            } else {
                wt.sin() / w
            }
        };
        let u = analytic_function_apply(cos_f, &op, u0)? + analytic_function_apply(sinc_f, &op, du0)?;
        let du = analytic_function_apply(move |z| -rho(z) * sinc_f(z), &op, u0)? + analytic_function_apply(cos_f, &op, du0)?;
        Ok((u, du))
    }
}

/// Splits `s'' + Â s' + B̂ s = 0` into the rotation `s = e^{−tÂ/2}u` and the
/// reduced equation `u'' + (B̂ − ¼Â²)u = 0`; requires `A × B = 0`.
pub fn liouville_reduce(a_vec: Vec3, b_vec: Vec3) -> Result<(LiouvilleTransform, ReducedOperator), SecondOrderError> {
    let cross = a_vec.cross(b_vec).norm();
    if cross > 1e-12 * a_vec.norm() * b_vec.norm() {
        return Err(SecondOrderError::NonCommuting { cross });
    }
    Ok((LiouvilleTransform { a_torque: a_vec }, ReducedOperator { a_torque: a_vec, b_torque: b_vec }))
}

/// `(s(t), s′(t))` for `s'' + Â s' + B̂ s = 0` through the Liouville reduction.
pub fn liouville_solve(a_vec: Vec3, b_vec: Vec3, s0: Vec3, ds0: Vec3, t: f64) -> Result<(Vec3, Vec3), SecondOrderError> {
    let (tr, red) = liouville_reduce(a_vec, b_vec)?;
    let (u0, du0) = tr.state_to_reduced(0.0, s0, ds0);
    let (u, du) = red.solve(u0, du0, t)?;
    Ok(tr.state_to_original(t, u, du))
}
