//! Scenario-driven front end: TOML configuration in, CSV tables and
//! conservation diagnostics out.

pub mod config;
pub mod output;
pub mod presets;
pub mod report;
pub mod runner;

pub use config::{normalize, parse_config, ConfigError, ScenarioConfig, ScenarioKind};
pub use presets::{list_scenarios, preset, preset_text, PRESETS};
pub use report::{Bound, Diagnostic, RunReport};
pub use runner::{run_scenario, simulate, Failure, Outcome, PhysicsError, RunError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const DIAGNOSTICS_EXCEEDED: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const NUMERICAL_FAILURE: i32 = 3;
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => exit::CONFIG_ERROR,
            RunError::Physics { .. } | RunError::Io { .. } => exit::NUMERICAL_FAILURE,
        }
    }
}
