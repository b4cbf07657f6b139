//! Steppers built from exact frozen-field rotations.
//!
//! Each step solves a constant-coefficient sub-problem exactly (so the
//! quantity that sub-problem conserves is conserved to rounding) and refreshes
//! the coefficients between steps.

use thiserror::Error;

use crate::dynamics::{drift_velocity, lorentz_state, Particle, ParticleState, UniformFields};
use crate::trajectory::{TimedState, Trajectory};
use crate::vec3::Vec3;
use crate::vop::{rodrigues_propagate, Vop};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SteppingError {
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("initial velocity is not perpendicular to the field")]
    NotPerpendicular,
    #[error("magnetic field is zero")]
    ZeroField,
    #[error("invalid step size {delta}")]
    InvalidStep { delta: f64 },
}

type VectorField = Box<dyn Fn(Vec3) -> Vec3 + Send + Sync>;

/// Position-dependent static fields.
pub struct FieldMap {
    /// Magnetic field, T.
    pub b_of_r: VectorField,
    /// Optional electric field, V/m.
    pub e_of_r: Option<VectorField>,
}

impl FieldMap {
    pub fn magnetic(b: impl Fn(Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        Self { b_of_r: Box::new(b), e_of_r: None }
    }

    pub fn with_electric(mut self, e: impl Fn(Vec3) -> Vec3 + Send + Sync + 'static) -> Self {
        self.e_of_r = Some(Box::new(e));
        self
    }

    pub fn uniform(fields: UniformFields) -> Self {
        Self::magnetic(move |_| fields.b).with_electric(move |_| fields.e)
    }

    pub fn sample(&self, r: Vec3) -> UniformFields {
        UniformFields { e: self.e_of_r.as_ref().map_or(Vec3::ZERO, |e| e(r)), b: (self.b_of_r)(r) }
    }
}

/// Where the field is sampled within a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FieldSampling {
    /// At the position the step starts from (explicit scheme).
    #[default]
    StepStart,
    /// At the position reached after half a step with the start-of-step field.
    Midpoint,
}

/// One step with the magnetic field frozen at `b_k`.
pub fn step_uniform(p: &Particle, b_k: Vec3, state: &ParticleState, delta: f64) -> ParticleState {
    lorentz_state(p, &UniformFields::new(Vec3::ZERO, b_k), state, delta)
}

/// Iterates frozen-field steps, re-sampling the field map at every step.
pub fn propagate_field_map(
    p: &Particle,
    f: &FieldMap,
    state0: &ParticleState,
    delta: f64,
    n_steps: usize,
) -> Result<Trajectory<ParticleState>, SteppingError> {
    propagate_field_map_with(p, f, state0, delta, n_steps, FieldSampling::StepStart)
}

pub fn propagate_field_map_with(
    p: &Particle,
    f: &FieldMap,
    state0: &ParticleState,
    delta: f64,
    n_steps: usize,
    sampling: FieldSampling,
) -> Result<Trajectory<ParticleState>, SteppingError> {
    if !(delta > 0.0) {
        return Err(SteppingError::InvalidStep { delta });
    }
    let mut traj = Trajectory::with_capacity(delta, "frozen-field", n_steps + 1);
    traj.push(*state0);
    let mut s = *state0;
    for k in 1..=n_steps {
        let fields = match sampling {
            FieldSampling::StepStart => f.sample(s.r),
            FieldSampling::Midpoint => {
                let half = lorentz_state(p, &f.sample(s.r), &s, 0.5 * delta);
                f.sample(half.r)
            }
        };
        let mut next = lorentz_state(p, &fields, &s, delta);
        // keep the time grid exact rather than accumulated
        next.t = state0.t + k as f64 * delta;
        if !next.is_finite() {
            return Err(SteppingError::NonFiniteState { t: next.t });
        }
        traj.push(next);
        s = next;
    }
    Ok(traj)
}

/// Cycle-averaged extra force `−e⟨(δr·∇)B₀ × v⟩` on a gyrating charge.
///
/// `grad_b[i][j] = ∂B_i/∂x_j`. With `δr` measured from the guiding centre the
/// average over one period of the unperturbed circular orbit is
/// `−(e/2)[(G δr₀) × v₀ − (G v₀) × δr₀]`, `δr₀ = n × v₀/ω_c = n × r_L`,
/// which for a curl-free field reduces to the familiar `−μ∇B`.
pub fn grad_b_drift_force(p: &Particle, b0: Vec3, grad_b: [[f64; 3]; 3], v0: Vec3) -> Result<Vec3, SteppingError> {
    let n = b0.normalized().ok_or(SteppingError::ZeroField)?;
    if v0.dot(n).abs() > 1e-9 * v0.norm() {
        return Err(SteppingError::NotPerpendicular);
    }
    let wc = p.charge_to_mass() * b0.norm();
    let dr0 = n.cross(v0) / wc;
    let apply = |x: Vec3| {
        Vec3::new(
            grad_b[0][0] * x.x + grad_b[0][1] * x.y + grad_b[0][2] * x.z,
            grad_b[1][0] * x.x + grad_b[1][1] * x.y + grad_b[1][2] * x.z,
            grad_b[2][0] * x.x + grad_b[2][1] * x.y + grad_b[2][2] * x.z,
        )
    };
    Ok((apply(dr0).cross(v0) - apply(v0).cross(dr0)) * (-0.5 * p.charge))
}

/// Guiding-centre drift `F × B/(eB²)` produced by [`grad_b_drift_force`].
pub fn grad_b_drift_velocity(p: &Particle, b0: Vec3, grad_b: [[f64; 3]; 3], v0: Vec3) -> Result<Vec3, SteppingError> {
    let force = grad_b_drift_force(p, b0, grad_b, v0)?;
    drift_velocity(force / p.charge, b0).map_err(|_| SteppingError::ZeroField)
}

/// Relativistic state: position and `Λ = γv`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RelState {
    pub t: f64,
    pub r: Vec3,
    /// γv, m/s
    pub lambda: Vec3,
}

impl RelState {
    pub fn from_velocity(t: f64, r: Vec3, v: Vec3, c: f64) -> Self {
        let beta2 = v.norm_squared() / (c * c);
        Self { t, r, lambda: v / (1.0 - beta2).sqrt() }
    }

    /// `γ = √(1 + Λ²/c²)`.
    pub fn gamma(&self, c: f64) -> f64 {
        (1.0 + self.lambda.norm_squared() / (c * c)).sqrt()
    }

    pub fn velocity(&self, c: f64) -> Vec3 {
        self.lambda / self.gamma(c)
    }
}

impl TimedState for RelState {
    fn time(&self) -> f64 {
        self.t
    }

    fn to_flat(&self) -> Vec<f64> {
        vec![self.r.x, self.r.y, self.r.z, self.lambda.x, self.lambda.y, self.lambda.z]
    }
}

/// One frozen-γ step of `dΛ/dt = −(Ω/γ) × Λ + Q`, `dr/dt = Λ/γ`.
///
/// γ is taken from the incoming state for the whole step; the returned state
/// carries the γ implied by its own `Λ`.
pub fn relativistic_step(p: &Particle, f: &UniformFields, state: &RelState, delta: f64, c: f64) -> RelState {
    let gamma = state.gamma(c);
    let frozen = UniformFields::new(f.e, f.b / gamma);
    let s = lorentz_state(p, &frozen, &ParticleState::new(state.t, Vec3::ZERO, state.lambda), delta);
    RelState { t: state.t + delta, r: state.r + s.r / gamma, lambda: s.v }
}

/// `n_steps` relativistic steps from `state0`.
pub fn relativistic_trajectory(
    p: &Particle,
    f: &UniformFields,
    state0: &RelState,
    delta: f64,
    n_steps: usize,
    c: f64,
) -> Result<Trajectory<RelState>, SteppingError> {
    if !(delta > 0.0) {
        return Err(SteppingError::InvalidStep { delta });
    }
    let mut traj = Trajectory::with_capacity(delta, "relativistic-frozen-gamma", n_steps + 1);
    traj.push(*state0);
    let mut s = *state0;
    for k in 1..=n_steps {
        let mut next = relativistic_step(p, f, &s, delta, c);
        next.t = state0.t + k as f64 * delta;
        if !(next.r.is_finite() && next.lambda.is_finite()) {
            return Err(SteppingError::NonFiniteState { t: next.t });
        }
        traj.push(next);
        s = next;
    }
    Ok(traj)
}

/// `max_t |Λ²(t) − Λ₀² − 2∫₀ᵗ Q·Λ dt′|` with the integral by the trapezoid
/// rule over the trajectory samples.
pub fn kinetic_energy_check(traj: &Trajectory<RelState>, q: Vec3) -> f64 {
    let Some(first) = traj.samples.first() else {
        return 0.0;
    };
    let l0 = first.lambda.norm_squared();
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for w in traj.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        integral += 0.5 * (b.t - a.t) * (q.dot(a.lambda) + q.dot(b.lambda));
        worst = worst.max((b.lambda.norm_squared() - l0 - 2.0 * integral).abs());
    }
    worst
}

/// Parameters of `∂ₜM = −(α + β M×)(M × H)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LlgParams {
    /// Precession coefficient.
    pub alpha: f64,
    /// Damping-like coefficient.
    pub beta: f64,
    /// Effective field.
    pub h: Vec3,
}

impl LlgParams {
    /// Torque `P = (α + β M×) H` of the frozen step.
    pub fn torque(&self, m: Vec3) -> Vec3 {
        self.h * self.alpha + m.cross(self.h) * self.beta
    }
}

/// `M_n = exp(δ P̂) M_{n−1}` with `P` frozen at `M_{n−1}`; since
/// `P × M = −(α + βM×)(M × H)`, each step is an exact rotation of the
/// linearised equation.
pub fn llg_step(m: Vec3, params: &LlgParams, delta: f64) -> Vec3 {
    rodrigues_propagate(&Vop::new(params.torque(m)), delta, m)
}

/// Magnetisation after each of `n_steps` LLG steps, starting with `m0`.
pub fn llg_evolve(m0: Vec3, params: &LlgParams, delta: f64, n_steps: usize) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(m0);
    let mut m = m0;
    for _ in 0..n_steps {
        m = llg_step(m, params, delta);
        out.push(m);
    }
    out
}
