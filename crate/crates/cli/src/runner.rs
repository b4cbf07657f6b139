//! Scenario dispatch: runs the physics, collects diagnostics, writes tables.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;
use torque_prop_core::disentangle::{exact, symmetric_split, zassenhaus_first_order, DisentangleError, TorquePair};
use torque_prop_core::dynamics::{
    coriolis_state, drift_velocity, limit_velocity, lorentz_state, lorentz_velocity, pseudo_momentum, CoriolisEnv,
    DynamicsError, Particle, ParticleState, UniformFields,
};
use torque_prop_core::oracle::{rk4_integrate, OracleError};
use torque_prop_core::quad::GaussLegendre;
use torque_prop_core::radiation::{
    harmonic_coefficients, lineshape_with_field, s_vector_direct, spectrum, RadiationError, RadiationGeometry,
};
use torque_prop_core::secondorder::{
    rr_forced_velocity, rr_homogeneous, rr_matrix_propagate, RadiationReactionParams, SecondOrderError,
};
use torque_prop_core::stepping::{
    kinetic_energy_check, llg_evolve, propagate_field_map_with, relativistic_trajectory, FieldMap, FieldSampling,
    LlgParams, RelState, SteppingError,
};
use torque_prop_core::timedep::{
    jacobi_anger_order, jacobi_anger_velocity, magnus_terms, oscillating_b_velocity, sinusoidal_velocity,
    SinusoidalField, TimeTorque, TimedepError,
};
use torque_prop_core::vop::small_angle::sinc;
use torque_prop_core::{rodrigues_propagate, ComplexScalar, EvalError, Vec3, Vop};

use crate::config::{require, vector, ConfigError, RadiationSection, ScenarioConfig, ScenarioKind};
use crate::output::{self, write_csv, Table};
use crate::report::{Bound, Diagnostic, RunReport};

/// Failure inside a physics module.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PhysicsError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Stepping(#[from] SteppingError),
    #[error(transparent)]
    Timedep(#[from] TimedepError),
    #[error(transparent)]
    SecondOrder(#[from] SecondOrderError),
    #[error(transparent)]
    Radiation(#[from] RadiationError),
    #[error(transparent)]
    Disentangle(#[from] DisentangleError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario {scenario}: {source}")]
    Physics {
        scenario: &'static str,
        #[source]
        source: PhysicsError,
    },
    #[error("writing {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Either a configuration problem found while running or a physics failure.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Failure {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

macro_rules! physics_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Physics(e.into())
            }
        }
    )*};
}

physics_from!(
    DynamicsError,
    SteppingError,
    TimedepError,
    SecondOrderError,
    RadiationError,
    DisentangleError,
    OracleError,
    EvalError
);

/// Data table and raw diagnostics of one run, before bounds are applied.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub diagnostics: Vec<(&'static str, f64)>,
}

/// Runs the scenario without touching the filesystem.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    use ScenarioKind::*;
    match cfg.scenario {
        LorentzStatic => lorentz_static(cfg),
        CoriolisFall => coriolis_fall(cfg),
        FieldMap => field_map(cfg),
        Relativistic => relativistic(cfg),
        SpectrumSolenoid => spectrum_solenoid(cfg),
        Lineshape => lineshape(cfg),
        ZassenhausOrder => zassenhaus_order(cfg),
        MagnusDemo => magnus_demo(cfg),
        LlgDemo => llg_demo(cfg),
        RadiationReaction => radiation_reaction(cfg),
        OscillatingB => oscillating_b(cfg),
    }
}

/// Runs the scenario, writes its table under `out_dir` and checks every
/// diagnostic against its bound.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let name = cfg.scenario.name();
    let outcome = simulate(cfg).map_err(|e| match e {
        Failure::Config(c) => RunError::Config(c),
        Failure::Physics(source) => RunError::Physics { scenario: name, source },
    })?;
    let path = out_dir.join(&cfg.output.path);
    let io = |source| RunError::Io { path: path.clone(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io)?;
    }
    write_csv(&path, &outcome.table).map_err(io)?;
    let diagnostics = outcome
        .diagnostics
        .into_iter()
        .map(|(name, value)| {
            let default = Bound::default_for(name).unwrap_or(Bound::None);
            let bound = cfg.bounds.get(name).map_or(default, |&x| default.with_threshold(x));
            Diagnostic { name, value, bound }
        })
        .collect();
    Ok(RunReport { scenario: name.to_string(), duration: start.elapsed(), outputs: vec![path], diagnostics })
}

fn times(t_end: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| t_end * k as f64 / n as f64)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn state_row(s: &ParticleState) -> Vec<f64> {
    vec![s.t, s.r.x, s.r.y, s.r.z, s.v.x, s.v.y, s.v.z]
}

fn initial_state(cfg: &ScenarioConfig) -> ParticleState {
    ParticleState::new(0.0, vector(cfg.initial.r), vector(cfg.initial.v))
}

fn lorentz_static(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let p = cfg.particle()?;
    let f = UniformFields::new(vector(cfg.e_field()), vector(cfg.b_field()?));
    let s0 = initial_state(cfg);
    let period = f.gyro_period(&p);
    let t_end = cfg.span(period)?;
    let states: Vec<ParticleState> = times(t_end, cfg.numerics.n_steps).map(|t| lorentz_state(&p, &f, &s0, t)).collect();
    let mut diagnostics = Vec::new();

    let v0 = s0.v.norm();
    if f.e == Vec3::ZERO && v0 > 0.0 {
        diagnostics.push(("speed_drift", max_of(states.iter().map(|s| (s.v.norm() - v0).abs())) / v0));
    }
    if let Some(period) = period {
        let p0 = pseudo_momentum(&p, &f, &s0)?;
        let vd = drift_velocity(f.e, f.b)?;
        let r_max = max_of(states.iter().map(|s| s.r.norm()));
        let scale = p.mass * (v0 + vd.norm())
            + (p.charge * f.b.norm()).abs() * r_max
            + (p.charge * f.e.norm()).abs() * t_end;
        let mut worst: f64 = 0.0;
        for s in &states {
            worst = worst.max((pseudo_momentum(&p, &f, s)? - p0).norm());
        }
        diagnostics.push(("pseudo_momentum_drift", worst / scale));

        let whole = (t_end / period).floor();
        if vd.norm() > 0.0 && whole >= 1.0 {
            let tp = whole * period;
            let n = f.b.normalized().expect("field is nonzero");
            let mean = (lorentz_state(&p, &f, &s0, tp).r - s0.r) / tp;
            let perp = mean - mean.parallel_to(n);
            diagnostics.push(("drift_velocity_error", (perp - vd).norm() / vd.norm()));
        }
    }

    let table = Table { header: output::TRAJECTORY, rows: states.iter().map(state_row).collect() };
    Ok(Outcome { table, diagnostics })
}

fn coriolis_fall(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let c = require(&cfg.coriolis, "coriolis")?;
    let env = CoriolisEnv::at_latitude(c.latitude_deg.to_radians(), c.omega, c.g, c.eta)?;
    let s0 = initial_state(cfg);
    let t_end = cfg.span((c.eta > 0.0).then(|| 1.0 / c.eta))?;
    let states: Vec<ParticleState> =
        times(t_end, cfg.numerics.n_steps).map(|t| coriolis_state(&env, &s0, t)).collect();
    let mut diagnostics = Vec::new();
    let last = states.last().expect("at least two samples");

    if c.eta > 0.0 {
        let vl = limit_velocity(&env)?;
        let residual = (env.omega.cross(vl) * 2.0 + vl * env.eta - env.g).norm() / env.g.norm();
        diagnostics.push(("limit_velocity_residual", residual));
        diagnostics.push(("limit_velocity_gap", (last.v - vl).norm() / vl.norm()));
        diagnostics.push(("limit_speed", vl.norm()));
    }

    let rhs = |_: f64, y: &[f64]| {
        let v = Vec3::new(y[3], y[4], y[5]);
        let a = -(env.omega.cross(v) * 2.0) - v * env.eta + env.g;
        vec![v.x, v.y, v.z, a.x, a.y, a.z]
    };
    let y0 = state_row(&s0)[1..].to_vec();
    let rk = rk4_integrate(rhs, &y0, t_end, t_end / 4000.0)?;
    let end = rk.last_state();
    let r_scale = max_of(states.iter().map(|s| s.r.norm())).max(f64::MIN_POSITIVE);
    let v_scale = max_of(states.iter().map(|s| s.v.norm())).max(f64::MIN_POSITIVE);
    let dr = (Vec3::new(end[0], end[1], end[2]) - last.r).norm() / r_scale;
    let dv = (Vec3::new(end[3], end[4], end[5]) - last.v).norm() / v_scale;
    diagnostics.push(("coriolis_rk4_deviation", dr.max(dv)));

    let table = Table { header: output::TRAJECTORY, rows: states.iter().map(state_row).collect() };
    Ok(Outcome { table, diagnostics })
}

fn gradient_map(gradient: f64, offset: Vec3, e: Vec3) -> FieldMap {
    FieldMap::magnetic(move |r: Vec3| Vec3::new(gradient * r.x, -gradient * r.y, 0.0) + offset).with_electric(move |_| e)
}

fn field_map(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let p = cfg.particle()?;
    let m = require(&cfg.field_map, "field_map")?;
    let e = vector(cfg.e_field());
    let map = gradient_map(m.gradient, vector(m.offset), e);
    let s0 = initial_state(cfg);
    let t_end = cfg.span(map.sample(s0.r).gyro_period(&p))?;
    let n = cfg.numerics.n_steps;
    let sampling = if m.midpoint { FieldSampling::Midpoint } else { FieldSampling::StepStart };
    let traj = propagate_field_map_with(&p, &map, &s0, t_end / n as f64, n, sampling)?;
    let fine = propagate_field_map_with(&p, &map, &s0, t_end / (2 * n) as f64, 2 * n, sampling)?;
    let mut diagnostics = Vec::new();

    let v0 = s0.v.norm();
    if e == Vec3::ZERO && v0 > 0.0 {
        diagnostics.push(("speed_drift", max_of(traj.samples.iter().map(|s| (s.v.norm() - v0).abs())) / v0));
    }
    let excursion = max_of(traj.samples.iter().map(|s| (s.r - s0.r).norm())).max(f64::MIN_POSITIVE);
    let end = traj.last().expect("trajectory holds the initial state").r;
    let end_fine = fine.last().expect("trajectory holds the initial state").r;
    diagnostics.push(("step_halving_gap", (end - end_fine).norm() / excursion));

    let table = Table { header: output::TRAJECTORY, rows: traj.samples.iter().map(state_row).collect() };
    Ok(Outcome { table, diagnostics })
}

fn relativistic(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let p = cfg.particle()?;
    let f = UniformFields::new(vector(cfg.e_field()), vector(cfg.b_field()?));
    let c = cfg.numerics.c;
    let v0 = vector(cfg.initial.v);
    let s0 = RelState::from_velocity(0.0, vector(cfg.initial.r), v0, c);
    let t_end = cfg.span(f.gyro_period(&p).map(|t| t * s0.gamma(c)))?;
    let n = cfg.numerics.n_steps;
    let traj = relativistic_trajectory(&p, &f, &s0, t_end / n as f64, n, c)?;
    let mut diagnostics = Vec::new();

    let q = f.q(&p);
    let scale = max_of(traj.samples.iter().map(|s| s.lambda.norm_squared())).max(f64::MIN_POSITIVE);
    let residual = kinetic_energy_check(&traj, q);
    diagnostics.push(("energy_residual", residual / scale));
    if q != Vec3::ZERO {
        let fine = relativistic_trajectory(&p, &f, &s0, t_end / (2 * n) as f64, 2 * n, c)?;
        let order = (residual / kinetic_energy_check(&fine, q)).log2();
        diagnostics.push(("energy_residual_order", order));
    }
    if v0.norm() > 0.0 {
        let gap = max_of(traj.samples.iter().map(|s| (s.velocity(c) - lorentz_velocity(&p, &f, v0, s.t)).norm()));
        diagnostics.push(("nonrelativistic_gap", gap / v0.norm()));
    }

    let rows = traj
        .samples
        .iter()
        .map(|s| {
            let v = s.velocity(c);
            vec![s.t, s.r.x, s.r.y, s.r.z, v.x, v.y, v.z, s.gamma(c)]
        })
        .collect();
    Ok(Outcome { table: Table { header: output::RELATIVISTIC, rows }, diagnostics })
}

fn geometry(cfg: &ScenarioConfig) -> Result<(RadiationGeometry, &RadiationSection, Particle), Failure> {
    let p = cfg.particle()?;
    let r = require(&cfg.radiation, "radiation")?;
    let b = vector(cfg.b_field()?);
    let n = b.normalized().ok_or_else(|| ConfigError::invalid("fields.b", "must be nonzero"))?;
    let q = vector(r.direction)
        .normalized()
        .ok_or_else(|| ConfigError::invalid("radiation.direction", "must be nonzero"))?;
    let c = cfg.numerics.c;
    let period = UniformFields::new(Vec3::ZERO, b).gyro_period(&p);
    let geom = RadiationGeometry {
        q,
        n,
        beta0: vector(cfg.initial.v) / c,
        omega_g: p.charge_to_mass() * b.norm(),
        t_obs: cfg.span(period)?,
        c,
    };
    geom.validate()?;
    Ok((geom, r, p))
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn spectrum_solenoid(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let (geom, r, _) = geometry(cfg)?;
    let wc = geom.omega_g.abs();
    let omegas = grid(r.omega_min * wc, r.omega_max * wc, r.n_omega);
    let samples = spectrum(&geom, &omegas, r.r_max)?;
    let mut diagnostics = Vec::new();

    let c2 = harmonic_coefficients(&geom).c2;
    let first = wc / c2;
    let step = omegas[1] - omegas[0];
    let nearest = |w: f64| ((w - omegas[0]) / step).round().clamp(0.0, (omegas.len() - 1) as f64) as usize;
    let mut checks: Vec<usize> = grid(0.0, (omegas.len() - 1) as f64, r.check_points.max(2))
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    let mut h = 1.0;
    while h * first <= omegas[omegas.len() - 1] {
        if h * first >= omegas[0] {
            checks.push(nearest(h * first));
        }
        h += 1.0;
    }
    checks.sort_unstable();
    checks.dedup();
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for &k in &checks {
        let direct = s_vector_direct(&geom, omegas[k], r.nodes_per_period)?;
        worst = worst.max((samples[k].s - direct).norm());
        peak = peak.max(samples[k].s.norm());
    }
    diagnostics.push(("direct_oracle_error", worst / peak.max(f64::MIN_POSITIVE)));

    if first >= omegas[0] && first <= omegas[omegas.len() - 1] {
        let window = 0.5 * first;
        let best = samples
            .iter()
            .filter(|s| (s.omega - first).abs() <= window)
            .max_by(|a, b| a.intensity.total_cmp(&b.intensity))
            .expect("the first harmonic lies inside the grid");
        diagnostics.push(("peak_offset_steps", (best.omega - first).abs() / step));
    }

    let rows = samples
        .iter()
        .map(|s| vec![s.omega, s.intensity, s.s.x.re, s.s.x.im, s.s.y.re, s.s.y.im, s.s.z.re, s.s.z.im])
        .collect();
    Ok(Outcome { table: Table { header: output::SPECTRUM, rows }, diagnostics })
}

/// Lineshape of one harmonic with the chirp of the uniform electric field.
/// `numerics.quad_tol` is taken relative to the observation time.
fn lineshape(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let (geom, r, p) = geometry(cfg)?;
    let harmonic = r.harmonic.ok_or_else(|| ConfigError::invalid("radiation.harmonic", "missing"))? as f64;
    let c2 = harmonic_coefficients(&geom).c2;
    let rate = harmonic * geom.omega_g.abs();
    let w_r = rate / c2;
    let q_acc = vector(cfg.e_field()) * p.charge_to_mass();
    let t = geom.t_obs;
    let tol = cfg.numerics.quad_tol * t;
    let mut rows = Vec::with_capacity(r.n_omega);
    let mut chirp_free: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for w in grid(r.omega_min * w_r, r.omega_max * w_r, r.n_omega) {
        let phi = w * c2 - rate;
        let f = lineshape_with_field(phi, w, q_acc, geom.q, t, geom.c, tol)?;
        let f0 = lineshape_with_field(phi, w, Vec3::ZERO, geom.q, t, geom.c, tol)?;
        let exact = ComplexScalar::from_polar(t * sinc(0.5 * phi * t), 0.5 * phi * t);
        chirp_free = chirp_free.max((f0 - exact).norm() / t);
        peak = peak.max(f.norm_sqr() / (t * t));
        rows.push(vec![w, f.norm_sqr(), f.re, f.im]);
    }
    let diagnostics = vec![("chirp_free_error", chirp_free), ("peak_intensity_ratio", peak)];
    Ok(Outcome { table: Table { header: output::LINESHAPE, rows }, diagnostics })
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn zassenhaus_order(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let s = require(&cfg.splitting, "splitting")?;
    let (o1, o2, v0) = (vector(s.omega1), vector(s.omega2), vector(s.v0));
    let pair = TorquePair::new(o1, o2);
    let steps: Vec<f64> = (0..s.levels).map(|k| s.t_max / 2f64.powi(k as i32)).collect();
    let mut rows = Vec::new();
    let (mut ez, mut es) = (Vec::new(), Vec::new());
    for &t in &steps {
        let e = exact(&pair, t, v0);
        ez.push((zassenhaus_first_order(&pair, t, v0) - e).norm());
        es.push((symmetric_split(&pair, t, v0) - e).norm());
        rows.push(vec![t, ez[ez.len() - 1], es[es.len() - 1]]);
    }
    let mut diagnostics = Vec::new();
    if ez.iter().chain(&es).all(|&e| e > 0.0) {
        diagnostics.push(("slope_zassenhaus", log_slope(&steps, &ez)));
        diagnostics.push(("slope_symmetric", log_slope(&steps, &es)));
    }
    let along = if o1 == Vec3::ZERO { o2 } else { o1 };
    let commuting = TorquePair::new(o1, along * 0.7);
    let mut worst: f64 = 0.0;
    for &t in &steps {
        let e = exact(&commuting, t, v0);
        worst = worst
            .max((zassenhaus_first_order(&commuting, t, v0) - e).norm())
            .max((symmetric_split(&commuting, t, v0) - e).norm());
    }
    diagnostics.push(("commuting_error", worst / v0.norm()));
    Ok(Outcome { table: Table { header: output::SPLITTING, rows }, diagnostics })
}

fn magnus_demo(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let r = require(&cfg.rotating_torque, "rotating_torque")?;
    let (mag, rate) = (r.magnitude, r.rate);
    let (st, ct) = r.tilt_deg.to_radians().sin_cos();
    let torque = move |t: f64| Vec3::new(st * (rate * t).cos(), st * (rate * t).sin(), ct) * mag;
    let tt = TimeTorque::new(torque);
    let s0 = vector(r.s0);
    let t_end = cfg.span(Some(TAU / mag))?;
    let n = cfg.numerics.n_steps;
    let rule = GaussLegendre::new(cfg.numerics.n_quad);
    let h = t_end / n as f64;
    let mut s = s0;
    let mut rows = vec![vec![0.0, s.x, s.y, s.z]];
    let mut drift: f64 = 0.0;
    for k in 0..n {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let (gamma, delta) = magnus_terms(&tt, a, b, &rule);
        s = rodrigues_propagate(&Vop::new(delta - gamma), 1.0, s);
        drift = drift.max((s.norm() - s0.norm()).abs());
        rows.push(vec![b, s.x, s.y, s.z]);
    }
    let rhs = |t: f64, y: &[f64]| {
        let d = -torque(t).cross(Vec3::new(y[0], y[1], y[2]));
        vec![d.x, d.y, d.z]
    };
    let rk = rk4_integrate(rhs, &s0.to_array(), t_end, h / 20.0)?;
    let end = rk.last_state();
    let deviation = (Vec3::new(end[0], end[1], end[2]) - s).norm() / s0.norm();
    let diagnostics = vec![("norm_drift", drift / s0.norm()), ("magnus_rk4_deviation", deviation)];
    Ok(Outcome { table: Table { header: output::VELOCITY, rows }, diagnostics })
}

fn llg_demo(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let l = require(&cfg.llg, "llg")?;
    let params = LlgParams { alpha: l.alpha, beta: l.beta, h: vector(l.h) };
    let m0 = vector(l.m0);
    let ms = llg_evolve(m0, &params, l.delta, cfg.numerics.n_steps);
    let step_drift = max_of(ms.windows(2).map(|w| (w[1].norm() - w[0].norm()).abs())) / m0.norm();
    let mut diagnostics = vec![("norm_step_drift", step_drift)];
    if let (Some(h), Some(m)) = (params.h.normalized(), ms.last().and_then(|m| m.normalized())) {
        diagnostics.push(("alignment", m.dot(h)));
    }
    let rows = ms.iter().enumerate().map(|(k, m)| vec![k as f64 * l.delta, m.x, m.y, m.z]).collect();
    Ok(Outcome { table: Table { header: output::MAGNETISATION, rows }, diagnostics })
}

fn radiation_reaction(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let r = require(&cfg.radiation_reaction, "radiation_reaction")?;
    let params = RadiationReactionParams::new(r.tau, vector(r.omega))?;
    let (q, v0, a0) = (vector(r.acceleration), vector(r.v0), vector(r.a0));
    let t_end = cfg.span(Some(r.tau))?;
    let tol = cfg.numerics.quad_tol;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    let mut scale: f64 = 0.0;
    for t in times(t_end, cfg.numerics.n_steps) {
        let (v, a) = rr_matrix_propagate(&params, v0, a0, |_| q, t, tol)?;
        let two_step = rr_homogeneous(&params, v0, a0, t)? + rr_forced_velocity(&params, |_| q, t, tol)?;
        gaps.push((v - two_step).norm());
        scale = scale.max(v.norm());
        rows.push(vec![t, v.x, v.y, v.z, a.x, a.y, a.z]);
    }
    let scale = scale.max(f64::MIN_POSITIVE);

    let (omega, tau) = (params.omega, params.tau);
    let rhs = |_: f64, y: &[f64]| {
        let v = Vec3::new(y[0], y[1], y[2]);
        let a = Vec3::new(y[3], y[4], y[5]);
        let da = (a + omega.cross(v) - q) / tau;
        vec![a.x, a.y, a.z, da.x, da.y, da.z]
    };
    let y0 = [v0.x, v0.y, v0.z, a0.x, a0.y, a0.z];
    let rk = rk4_integrate(rhs, &y0, t_end, tau / 2000.0)?;
    let end = rk.last_state();
    let last = &rows[rows.len() - 1];
    let rk_dev = (Vec3::new(end[0], end[1], end[2]) - Vec3::new(last[1], last[2], last[3])).norm() / scale;

    let diagnostics = vec![
        ("formulation_gap", max_of(gaps) / scale),
        ("rr_rk4_deviation", rk_dev),
        ("runaway_rate_tau", params.runaway_rate() * tau),
    ];
    Ok(Outcome { table: Table { header: output::VELOCITY_ACCELERATION, rows }, diagnostics })
}

fn oscillating_b(cfg: &ScenarioConfig) -> Result<Outcome, Failure> {
    let o = require(&cfg.oscillating, "oscillating")?;
    let f = SinusoidalField { e0: o.e0, b0: o.b0, omega: o.omega, phi: o.phi, particle: cfg.particle()? };
    let v0 = vector(cfg.initial.v);
    let t_end = cfg.span(Some(TAU / o.omega))?;
    let tol = cfg.numerics.quad_tol;
    let mut rows = Vec::new();
    for t in times(t_end, cfg.numerics.n_steps) {
        let v = sinusoidal_velocity(&f, v0, t, tol)?;
        rows.push(vec![t, v.x, v.y, v.z]);
    }
    let mut diagnostics = Vec::new();
    let speed = v0.norm();
    if o.e0 == 0.0 && speed > 0.0 {
        let drift = max_of(rows.iter().map(|r| (Vec3::new(r[1], r[2], r[3]).norm() - speed).abs()));
        diagnostics.push(("speed_drift", drift / speed));
        if (o.phi - FRAC_PI_2).abs() <= 1e-12 && v0.dot(Vec3::Y).abs() <= 1e-12 * speed {
            let order = jacobi_anger_order(&f);
            let mut worst: f64 = 0.0;
            for t in times(t_end, cfg.numerics.n_steps) {
                let series = jacobi_anger_velocity(&f, v0, t, order)?;
                worst = worst.max((series - oscillating_b_velocity(&f, v0, t)).norm());
            }
            diagnostics.push(("jacobi_anger_gap", worst / speed));
        }
    }
    Ok(Outcome { table: Table { header: output::VELOCITY, rows }, diagnostics })
}
