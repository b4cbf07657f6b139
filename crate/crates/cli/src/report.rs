//! Run diagnostics and their bounds.

use std::fmt;
use std::path::PathBuf;
use std::time::Duration;

/// Acceptance rule of a diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    /// Reported only.
    None,
}

/// Default bound of every known diagnostic, by name.
const DEFAULTS: &[(&str, Bound)] = &[
    ("speed_drift", Bound::AtMost(1e-12)),
    ("pseudo_momentum_drift", Bound::AtMost(1e-9)),
    ("drift_velocity_error", Bound::AtMost(1e-9)),
    ("limit_velocity_residual", Bound::AtMost(1e-12)),
    ("limit_velocity_gap", Bound::None),
    ("limit_speed", Bound::None),
    ("coriolis_rk4_deviation", Bound::AtMost(1e-8)),
    ("step_halving_gap", Bound::None),
    ("energy_residual", Bound::AtMost(1e-4)),
    ("energy_residual_order", Bound::AtLeast(1.8)),
    ("nonrelativistic_gap", Bound::None),
    ("direct_oracle_error", Bound::AtMost(1e-6)),
    ("peak_offset_steps", Bound::AtMost(1.0)),
    ("chirp_free_error", Bound::AtMost(1e-8)),
    ("peak_intensity_ratio", Bound::None),
    ("slope_zassenhaus", Bound::AtLeast(2.9)),
    ("slope_symmetric", Bound::AtLeast(2.9)),
    ("commuting_error", Bound::AtMost(1e-13)),
    ("norm_drift", Bound::AtMost(1e-12)),
    ("magnus_rk4_deviation", Bound::AtMost(1e-4)),
    ("norm_step_drift", Bound::AtMost(1e-13)),
    ("alignment", Bound::None),
    ("formulation_gap", Bound::AtMost(1e-8)),
    ("rr_rk4_deviation", Bound::AtMost(1e-7)),
    ("runaway_rate_tau", Bound::None),
    ("jacobi_anger_gap", Bound::AtMost(1e-10)),
];

impl Bound {
    pub fn default_for(name: &str) -> Option<Bound> {
        DEFAULTS.iter().find(|(n, _)| *n == name).map(|(_, b)| *b)
    }

    /// Same direction with a new threshold; an unbounded diagnostic becomes
    /// an upper bound.
    pub fn with_threshold(self, x: f64) -> Bound {
        match self {
            Bound::AtLeast(_) => Bound::AtLeast(x),
            Bound::AtMost(_) | Bound::None => Bound::AtMost(x),
        }
    }

    pub fn accepts(self, value: f64) -> bool {
        match self {
            Bound::AtMost(x) => value <= x,
            Bound::AtLeast(x) => value >= x,
            Bound::None => true,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(x) => write!(f, "<= {x:e}"),
            Bound::AtLeast(x) => write!(f, ">= {x}"),
            Bound::None => write!(f, "reported"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub name: &'static str,
    pub value: f64,
    pub bound: Bound,
}

impl Diagnostic {
    /// NaN never passes a bound.
    pub fn ok(&self) -> bool {
        !self.value.is_nan() && self.bound.accepts(self.value)
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.ok() { "ok" } else { "EXCEEDED" };
        write!(f, "{:<26} {:>14.6e}  ({}) {}", self.name, self.value, self.bound, status)
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub scenario: String,
    pub duration: Duration,
    pub outputs: Vec<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.diagnostics.iter().all(Diagnostic::ok)
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {} finished in {:.3} s", self.scenario, self.duration.as_secs_f64())?;
        for p in &self.outputs {
            writeln!(f, "  wrote {}", p.display())?;
        }
        for d in &self.diagnostics {
            writeln!(f, "  {d}")?;
        }
        Ok(())
    }
}
