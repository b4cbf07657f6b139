//! Scenario configuration: TOML sections, defaults and validation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use torque_prop_core::dynamics::{Particle, SPEED_OF_LIGHT};

use crate::report::Bound;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Validation { key: key.into(), reason: reason.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    LorentzStatic,
    CoriolisFall,
    FieldMap,
    Relativistic,
    SpectrumSolenoid,
    Lineshape,
    ZassenhausOrder,
    MagnusDemo,
    LlgDemo,
    RadiationReaction,
    OscillatingB,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::LorentzStatic => "lorentz-static",
            Self::CoriolisFall => "coriolis-fall",
            Self::FieldMap => "field-map",
            Self::Relativistic => "relativistic",
            Self::SpectrumSolenoid => "spectrum-solenoid",
            Self::Lineshape => "lineshape",
            Self::ZassenhausOrder => "zassenhaus-order",
            Self::MagnusDemo => "magnus-demo",
            Self::LlgDemo => "llg-demo",
            Self::RadiationReaction => "radiation-reaction",
            Self::OscillatingB => "oscillating-b",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Species {
    Electron,
    Proton,
}

/// Either a named species or an explicit mass (kg) and signed charge (C).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub species: Option<Species>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<f64>,
}

impl ParticleSection {
    pub fn particle(&self) -> Result<Particle, ConfigError> {
        match (self.species, self.mass, self.charge) {
            (Some(Species::Electron), None, None) => Ok(Particle::electron()),
            (Some(Species::Proton), None, None) => Ok(Particle::proton()),
            (Some(_), _, _) => Err(ConfigError::invalid("particle.species", "give either species or mass and charge")),
            (None, Some(m), Some(q)) => {
                if !(m > 0.0) || !m.is_finite() {
                    return Err(ConfigError::invalid("particle.mass", "must be positive"));
                }
                if !q.is_finite() {
                    return Err(ConfigError::invalid("particle.charge", "must be finite"));
                }
                Ok(Particle::new(m, q))
            }
            (None, None, _) => Err(ConfigError::invalid("particle.mass", "missing")),
            (None, Some(_), None) => Err(ConfigError::invalid("particle.charge", "missing")),
        }
    }
}

/// Uniform fields: `e` in V/m, `b` in T.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSection {
    #[serde(default)]
    pub e: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<[f64; 3]>,
}

/// Initial position (m) and velocity (m/s).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub r: [f64; 3],
    #[serde(default)]
    pub v: [f64; 3],
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

fn default_quad_tol() -> f64 {
    1e-10
}

fn default_n_steps() -> usize {
    1000
}

fn default_n_quad() -> usize {
    8
}

/// Time span, sampling and tolerances. The span is either `t_end` (s) or
/// `periods` of the scenario's natural time scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<f64>,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    #[serde(default = "default_n_quad")]
    pub n_quad: usize,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_c")]
    pub c: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            t_end: None,
            periods: None,
            n_steps: default_n_steps(),
            n_quad: default_n_quad(),
            quad_tol: default_quad_tol(),
            c: default_c(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
}

fn default_path() -> String {
    "output.csv".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// File name, relative to the output directory.
    #[serde(default = "default_path")]
    pub path: String,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { path: default_path(), format: OutputFormat::Csv }
    }
}

fn earth_rotation() -> f64 {
    7.292_115e-5
}

fn standard_gravity() -> f64 {
    9.806_65
}

/// Falling body in a rotating frame (x east, y north, z up).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoriolisSection {
    pub latitude_deg: f64,
    /// rad/s
    #[serde(default = "earth_rotation")]
    pub omega: f64,
    /// m/s²
    #[serde(default = "standard_gravity")]
    pub g: f64,
    /// 1/s
    #[serde(default)]
    pub eta: f64,
}

/// `B(r) = gradient·(x, −y, 0) + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMapSection {
    /// T/m
    pub gradient: f64,
    /// T
    #[serde(default)]
    pub offset: [f64; 3],
    /// Sample the field at the half-step position instead of the step start.
    #[serde(default)]
    pub midpoint: bool,
}

fn default_check_points() -> usize {
    5
}

fn default_nodes_per_period() -> usize {
    64
}

/// Observation direction and frequency grid. The grid bounds are in units
/// of the cyclotron frequency for spectra and of the harmonic frequency for
/// lineshapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiationSection {
    pub direction: [f64; 3],
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_omega: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<u32>,
    #[serde(default = "default_check_points")]
    pub check_points: usize,
    #[serde(default = "default_nodes_per_period")]
    pub nodes_per_period: usize,
}

fn default_levels() -> usize {
    7
}

/// Two angular velocities (rad/s) split against each other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingSection {
    pub omega1: [f64; 3],
    pub omega2: [f64; 3],
    pub v0: [f64; 3],
    /// Largest step, s.
    pub t_max: f64,
    #[serde(default = "default_levels")]
    pub levels: usize,
}

/// Torque of constant modulus precessing about z:
/// `magnitude·(sin θ cos ωt, sin θ sin ωt, cos θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotatingTorqueSection {
    pub magnitude: f64,
    pub rate: f64,
    pub tilt_deg: f64,
    pub s0: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlgSection {
    pub alpha: f64,
    pub beta: f64,
    pub h: [f64; 3],
    pub m0: [f64; 3],
    /// Step size.
    pub delta: f64,
}

/// Second-order equation with radiation reaction in reduced units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiationReactionSection {
    /// s
    pub tau: f64,
    /// rad/s
    pub omega: [f64; 3],
    /// Constant driving acceleration, m/s².
    #[serde(default)]
    pub acceleration: [f64; 3],
    pub v0: [f64; 3],
    #[serde(default)]
    pub a0: [f64; 3],
}

/// `E = e0 sin(ωt + φ) e_x`, `B = b0 sin(ωt + φ) e_y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatingSection {
    #[serde(default)]
    pub e0: f64,
    pub b0: f64,
    pub omega: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle: Option<ParticleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<FieldsSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coriolis: Option<CoriolisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_map: Option<FieldMapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radiation: Option<RadiationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitting: Option<SplittingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotating_torque: Option<RotatingTorqueSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llg: Option<LlgSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radiation_reaction: Option<RadiationReactionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oscillating: Option<OscillatingSection>,
    /// Overrides of diagnostic bounds, keyed by diagnostic name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bounds: BTreeMap<String, f64>,
}

/// Parses and validates a configuration document, filling defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical text of a configuration: defaults filled, comments and layout
/// dropped.
pub fn normalize(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("configuration types always serialise")
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

pub(crate) fn vector(a: [f64; 3]) -> torque_prop_core::Vec3 {
    torque_prop_core::Vec3::from_array(a)
}

fn finite(key: &str, a: [f64; 3]) -> Result<(), ConfigError> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "components must be finite"))
    }
}

fn positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "must be positive"))
    }
}

fn nonzero(key: &str, a: [f64; 3]) -> Result<(), ConfigError> {
    finite(key, a)?;
    if vector(a).norm() > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(key, "must be nonzero"))
    }
}

pub(crate) fn require<'a, T>(section: &'a Option<T>, key: &str) -> Result<&'a T, ConfigError> {
    section.as_ref().ok_or_else(|| ConfigError::invalid(key, "missing"))
}

impl ScenarioConfig {
    pub fn particle(&self) -> Result<Particle, ConfigError> {
        require(&self.particle, "particle")?.particle()
    }

    /// The magnetic field `[fields].b`, required.
    pub fn b_field(&self) -> Result<[f64; 3], ConfigError> {
        self.fields.as_ref().and_then(|f| f.b).ok_or_else(|| ConfigError::invalid("fields.b", "missing"))
    }

    pub fn e_field(&self) -> [f64; 3] {
        self.fields.as_ref().map_or([0.0; 3], |f| f.e)
    }

    /// Span of the run: `t_end`, or `periods` times `natural` when the
    /// scenario has a natural time scale.
    pub fn span(&self, natural: Option<f64>) -> Result<f64, ConfigError> {
        match (self.numerics.t_end, self.numerics.periods, natural) {
            (Some(t), None, _) => Ok(t),
            (None, Some(n), Some(p)) => Ok(n * p),
            (None, Some(_), None) => Err(ConfigError::invalid("numerics.periods", "no natural period; give t_end")),
            (None, None, _) => Err(ConfigError::invalid("numerics.t_end", "missing (or give periods)")),
            (Some(_), Some(_), _) => Err(ConfigError::invalid("numerics.periods", "give either t_end or periods")),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = &self.numerics;
        if let Some(t) = n.t_end {
            positive("numerics.t_end", t)?;
        }
        if let Some(p) = n.periods {
            positive("numerics.periods", p)?;
        }
        if n.t_end.is_some() && n.periods.is_some() {
            return Err(ConfigError::invalid("numerics.periods", "give either t_end or periods"));
        }
        if n.n_steps == 0 {
            return Err(ConfigError::invalid("numerics.n_steps", "must be at least 1"));
        }
        if n.n_quad < 8 {
            return Err(ConfigError::invalid("numerics.n_quad", "must be at least 8"));
        }
        positive("numerics.quad_tol", n.quad_tol)?;
        positive("numerics.c", n.c)?;
        if self.output.path.trim().is_empty() {
            return Err(ConfigError::invalid("output.path", "must not be empty"));
        }
        if let Some(f) = &self.fields {
            finite("fields.e", f.e)?;
            if let Some(b) = f.b {
                finite("fields.b", b)?;
            }
        }
        finite("initial.r", self.initial.r)?;
        finite("initial.v", self.initial.v)?;
        for (name, value) in &self.bounds {
            if Bound::default_for(name).is_none() {
                return Err(ConfigError::invalid(format!("bounds.{name}"), "unknown diagnostic"));
            }
            if !value.is_finite() {
                return Err(ConfigError::invalid(format!("bounds.{name}"), "must be finite"));
            }
        }
        self.validate_scenario()
    }

    fn validate_scenario(&self) -> Result<(), ConfigError> {
        use ScenarioKind::*;
        match self.scenario {
            LorentzStatic => {
                self.particle()?;
                self.b_field()?;
            }
            CoriolisFall => {
                let c = require(&self.coriolis, "coriolis")?;
                if !(c.latitude_deg.abs() <= 90.0) {
                    return Err(ConfigError::invalid("coriolis.latitude_deg", "must lie in [-90, 90]"));
                }
                positive("coriolis.omega", c.omega)?;
                positive("coriolis.g", c.g)?;
                if !(c.eta >= 0.0) || !c.eta.is_finite() {
                    return Err(ConfigError::invalid("coriolis.eta", "must be non-negative"));
                }
            }
            FieldMap => {
                self.particle()?;
                let m = require(&self.field_map, "field_map")?;
                if !m.gradient.is_finite() {
                    return Err(ConfigError::invalid("field_map.gradient", "must be finite"));
                }
                finite("field_map.offset", m.offset)?;
            }
            Relativistic => {
                self.particle()?;
                nonzero("fields.b", self.b_field()?)?;
                if !(vector(self.initial.v).norm() < self.numerics.c) {
                    return Err(ConfigError::invalid("initial.v", "speed must be below numerics.c"));
                }
            }
            SpectrumSolenoid | Lineshape => {
                self.particle()?;
                nonzero("fields.b", self.b_field()?)?;
                if !(vector(self.initial.v).norm() < self.numerics.c) {
                    return Err(ConfigError::invalid("initial.v", "speed must be below numerics.c"));
                }
                let r = require(&self.radiation, "radiation")?;
                nonzero("radiation.direction", r.direction)?;
                positive("radiation.omega_min", r.omega_min)?;
                if !(r.omega_max > r.omega_min) || !r.omega_max.is_finite() {
                    return Err(ConfigError::invalid("radiation.omega_max", "must exceed omega_min"));
                }
                if r.n_omega < 2 {
                    return Err(ConfigError::invalid("radiation.n_omega", "must be at least 2"));
                }
                if r.nodes_per_period < 8 {
                    return Err(ConfigError::invalid("radiation.nodes_per_period", "must be at least 8"));
                }
                if self.scenario == Lineshape && r.harmonic.map_or(true, |h| h == 0) {
                    return Err(ConfigError::invalid("radiation.harmonic", "must be at least 1"));
                }
            }
            ZassenhausOrder => {
                let s = require(&self.splitting, "splitting")?;
                finite("splitting.omega1", s.omega1)?;
                finite("splitting.omega2", s.omega2)?;
                nonzero("splitting.v0", s.v0)?;
                positive("splitting.t_max", s.t_max)?;
                if s.levels < 2 {
                    return Err(ConfigError::invalid("splitting.levels", "must be at least 2"));
                }
            }
            MagnusDemo => {
                let r = require(&self.rotating_torque, "rotating_torque")?;
                positive("rotating_torque.magnitude", r.magnitude)?;
                if !r.rate.is_finite() || !r.tilt_deg.is_finite() {
                    return Err(ConfigError::invalid("rotating_torque.rate", "must be finite"));
                }
                nonzero("rotating_torque.s0", r.s0)?;
            }
            LlgDemo => {
                let l = require(&self.llg, "llg")?;
                finite("llg.h", l.h)?;
                nonzero("llg.m0", l.m0)?;
                positive("llg.delta", l.delta)?;
            }
            RadiationReaction => {
                let r = require(&self.radiation_reaction, "radiation_reaction")?;
                positive("radiation_reaction.tau", r.tau)?;
                finite("radiation_reaction.omega", r.omega)?;
                finite("radiation_reaction.acceleration", r.acceleration)?;
                finite("radiation_reaction.v0", r.v0)?;
                finite("radiation_reaction.a0", r.a0)?;
            }
            OscillatingB => {
                self.particle()?;
                let o = require(&self.oscillating, "oscillating")?;
                positive("oscillating.omega", o.omega)?;
                if !o.b0.is_finite() || !o.e0.is_finite() || !o.phi.is_finite() {
                    return Err(ConfigError::invalid("oscillating.b0", "amplitudes and phase must be finite"));
                }
            }
        }
        Ok(())
    }
}
