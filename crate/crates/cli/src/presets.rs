use chess_billiard::DomainSpec;
use serde::Deserialize;

use crate::error::CliError;

/// Named run configuration shipped with the binary.
#[derive(Debug, Clone, Deserialize)]
pub struct Preset {
    #[allow(dead_code)]
    pub description: String,
    pub command: String,
    pub domain: Option<DomainSpec>,
    pub angles: Option<Vec<f64>>,
    pub grid_size: usize,
    pub full_grid_size: usize,
    pub n: usize,
    pub s0: f64,
    pub plateau_tol: Option<f64>,
    pub min_run: Option<usize>,
    pub q_max: Option<u64>,
    pub epsilons: Option<Vec<f64>>,
}

const PRESETS: [(&str, &str); 5] = [
    ("fig5", include_str!("../presets/fig5.json")),
    ("fig7-trapezoid", include_str!("../presets/fig7-trapezoid.json")),
    ("fig7-tilted", include_str!("../presets/fig7-tilted.json")),
    ("fig7-rounded", include_str!("../presets/fig7-rounded.json")),
    ("fig8", include_str!("../presets/fig8.json")),
];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn load(name: &str, command: &str) -> Result<Preset, CliError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        CliError::Usage(format!("unknown preset {name:?}; available: {}", names().join(", ")))
    })?;
    let preset: Preset = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("preset {name} is malformed: {e}")))?;
    if preset.command != command {
        return Err(CliError::Usage(format!(
            "preset {name} is for the {} command, not {command}",
            preset.command
        )));
    }
    Ok(preset)
}
