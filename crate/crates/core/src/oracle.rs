//! Fixed-step classical Runge–Kutta reference integrator.
//!
//! This module is the yardstick for every closed form in the crate, so it
//! works on flat `&[f64]` states and does not touch `Vec3`, `Vop` or any
//! propagator.

use thiserror::Error;

use crate::trajectory::{TimedState, Trajectory};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid step: dt = {dt}, t_end = {t_end}")]
    InvalidStep { dt: f64, t_end: f64 },
    #[error("time grids differ at sample {index}")]
    GridMismatch { index: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Largest per-step difference between the RK4 and an embedded
    /// third-order (Kutta) solution.
    pub max_step_error_estimate: f64,
}

impl OracleResult {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("oracle result always holds the initial state")
    }
}

/// Integrates `ds/dt = f(t, s)` from 0 to `t_end` with step `dt`.
///
/// Grid points are `k·dt`; a final shortened step lands exactly on `t_end`.
pub fn rk4_integrate<F>(mut f: F, state0: &[f64], t_end: f64, dt: f64) -> Result<OracleResult, OracleError>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    if !(dt > 0.0) || !(t_end >= 0.0) || !dt.is_finite() || !t_end.is_finite() {
        return Err(OracleError::InvalidStep { dt, t_end });
    }
    let dim = state0.len();
    let n_full = (t_end / dt).floor() as usize;
    let mut times = Vec::with_capacity(n_full + 2);
    let mut states = Vec::with_capacity(n_full + 2);
    times.push(0.0);
    states.push(state0.to_vec());

    let mut y = state0.to_vec();
    let mut tmp = vec![0.0; dim];
    let mut max_err: f64 = 0.0;
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        let mut t_next = (k + 1) as f64 * dt;
        if t_next > t_end * (1.0 - 1e-12) {
            t_next = t_end;
        }
        let h = t_next - t;
        if h <= 0.0 {
            break;
        }

        let k1 = f(t, &y);
        axpy(&mut tmp, &y, 0.5 * h, &k1);
        let k2 = f(t + 0.5 * h, &tmp);
        axpy(&mut tmp, &y, 0.5 * h, &k2);
        let k3 = f(t + 0.5 * h, &tmp);
        axpy(&mut tmp, &y, h, &k3);
        let k4 = f(t + h, &tmp);
        // Kutta's third-order stage: y − h k1 + 2h k2
        for i in 0..dim {
            tmp[i] = y[i] - h * k1[i] + 2.0 * h * k2[i];
        }
        let k3k = f(t + h, &tmp);

        let mut err_sq = 0.0;
        for i in 0..dim {
            let y4 = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            let y3 = y[i] + h / 6.0 * (k1[i] + 4.0 * k2[i] + k3k[i]);
            err_sq += (y4 - y3) * (y4 - y3);
            y[i] = y4;
        }
        max_err = max_err.max(err_sq.sqrt());

        if y.iter().any(|v| !v.is_finite()) {
            return Err(OracleError::NonFiniteState { t: t_next });
        }
        times.push(t_next);
        states.push(y.clone());
        if t_next >= t_end {
            break;
        }
        k += 1;
    }

    Ok(OracleResult { times, states, max_step_error_estimate: max_err })
}

fn axpy(out: &mut [f64], y: &[f64], a: f64, x: &[f64]) {
    for ((o, yi), xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

/// Largest Euclidean distance between corresponding flat states.
pub fn max_deviation<S: TimedState>(a: &OracleResult, b: &Trajectory<S>) -> Result<f64, OracleError> {
    if a.times.len() != b.samples.len() {
        return Err(OracleError::GridMismatch { index: a.times.len().min(b.samples.len()) });
    }
    let mut worst: f64 = 0.0;
    for (index, ((&ta, sa), sb)) in a.times.iter().zip(&a.states).zip(&b.samples).enumerate() {
        let tb = sb.time();
        if (ta - tb).abs() > 1e-10 * ta.abs().max(tb.abs()) {
            return Err(OracleError::GridMismatch { index });
        }
        let flat = sb.to_flat();
        if flat.len() != sa.len() {
            return Err(OracleError::GridMismatch { index });
        }
        let d: f64 = sa.iter().zip(&flat).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        worst = worst.max(d);
    }
    Ok(worst)
}
