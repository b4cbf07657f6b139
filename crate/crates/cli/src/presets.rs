//! Built-in presets, one TOML file per figure or template.

use crate::config::{parse_config, ScenarioConfig};

pub const PRESETS: &[(&str, &str)] = &[
    ("fig_bdfall", include_str!("../presets/fig_bdfall.toml")),
    ("fig_compv", include_str!("../presets/fig_compv.toml")),
    ("fig_lines_field", include_str!("../presets/fig_lines_field.toml")),
    ("fig_lines_solenoid", include_str!("../presets/fig_lines_solenoid.toml")),
    ("fig_nonhom", include_str!("../presets/fig_nonhom.toml")),
    ("fig_relat", include_str!("../presets/fig_relat.toml")),
    ("fig_spectrum_solenoid", include_str!("../presets/fig_spectrum_solenoid.toml")),
    ("fig_traj_lower_left", include_str!("../presets/fig_traj_lower_left.toml")),
    ("fig_traj_lower_right", include_str!("../presets/fig_traj_lower_right.toml")),
    ("fig_traj_upper_left", include_str!("../presets/fig_traj_upper_left.toml")),
    ("fig_traj_upper_middle", include_str!("../presets/fig_traj_upper_middle.toml")),
    ("fig_traj_upper_right", include_str!("../presets/fig_traj_upper_right.toml")),
    ("fig_veltim_lat15", include_str!("../presets/fig_veltim_lat15.toml")),
    ("fig_veltim_lat45", include_str!("../presets/fig_veltim_lat45.toml")),
    ("fig_veltim_lat75", include_str!("../presets/fig_veltim_lat75.toml")),
    ("fig_vlim", include_str!("../presets/fig_vlim.toml")),
    ("llg_demo", include_str!("../presets/llg_demo.toml")),
    ("magnus_demo", include_str!("../presets/magnus_demo.toml")),
    ("oscillating_b", include_str!("../presets/oscillating_b.toml")),
    ("radiation_reaction", include_str!("../presets/radiation_reaction.toml")),
    ("zassenhaus_order", include_str!("../presets/zassenhaus_order.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    preset_text(name).map(|t| parse_config(t).expect("built-in presets are valid"))
}

/// `(name, description)` of every built-in preset.
pub fn list_scenarios() -> Vec<(&'static str, String)> {
    PRESETS.iter().map(|(n, t)| (*n, parse_config(t).expect("built-in presets are valid").description)).collect()
}
