//! Experiment configuration.
//!
//! TOML with the top-level tables `generator`, `sector`, `coupling`,
//! `feedback`, `sampling`, `simulation`, `scans` and `output`. Complex
//! numbers are `[re, im]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type Pair = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Law {
    pub scale: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub lambda: Pair,
    pub b: Pair,
    #[serde(default)]
    pub f: Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraModeSpec {
    pub lambda: Pair,
    pub b: Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Explicit {
        modes: Vec<ModeSpec>,
    },
    SyntheticPolynomial {
        n_trunc: usize,
        alpha: f64,
        upsilon_scale: f64,
        b_law: Law,
        #[serde(default = "zero_law")]
        f_law: Law,
    },
    WavePerturbed {
        n_pairs: usize,
        upsilon: f64,
        #[serde(default = "two")]
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b0_law: Option<Law>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b0_coeffs: Option<Vec<f64>>,
        #[serde(default)]
        extra_modes: Vec<ExtraModeSpec>,
        #[serde(default = "zero_law")]
        f2_law: Law,
    },
}

fn zero_law() -> Law {
    Law { scale: 0.0, q: 1.0 }
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorConfig {
    pub alpha: f64,
    pub upsilon: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeedbackConfig {
    /// Use the coefficients supplied by the generator.
    Given,
    /// Replace the coefficients on the unstable modes by pole placement.
    Designed { targets: Vec<Pair> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Fixed period; when absent `tau_fraction * tau_star` is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "half")]
    pub tau_fraction: f64,
    /// `a:b:n`, `n` points from `a` to `b` inclusive.
    pub tau_grid: String,
    #[serde(default = "circle_nodes")]
    pub circle_nodes: usize,
    /// Defaults to half the continuous margin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_d_floor: Option<f64>,
    #[serde(default = "axis_points")]
    pub axis_points: usize,
    /// Half-width of the imaginary-axis grid; defaults beyond the spectrum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_max: Option<f64>,
}

fn half() -> f64 {
    0.5
}
fn circle_nodes() -> usize {
    1024
}
fn axis_points() -> usize {
    8001
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub scale: f64,
    pub q: f64,
    #[serde(default)]
    pub log_power: f64,
    /// Initial value on the extra (unstable) modes of the wave family.
    #[serde(default)]
    pub extra: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub t_end: f64,
    #[serde(default = "substeps")]
    pub substeps: usize,
    /// Recorded sampling intervals per decade; 0 records all of them.
    #[serde(default = "per_decade")]
    pub per_decade: usize,
    pub x0: InitialConfig,
    pub fit_window: Pair,
}

fn substeps() -> usize {
    2
}
fn per_decade() -> usize {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Decay order of the scaled scan; 0 means the unscaled `(r - 1)` weight.
    #[serde(default = "half")]
    pub delta: f64,
    #[serde(default = "j_max")]
    pub j_max: u32,
    #[serde(default = "scan_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub adjoint: bool,
    #[serde(default = "exterior_samples")]
    pub exterior_samples: usize,
    #[serde(default = "seed")]
    pub seed: u64,
}

fn j_max() -> u32 {
    12
}
fn scan_tol() -> f64 {
    sampled_modal::resolvent::DEFAULT_SCAN_TOL
}
fn exterior_samples() -> usize {
    100_000
}
fn seed() -> u64 {
    7
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            delta: half(),
            j_max: j_max(),
            tolerance: scan_tol(),
            adjoint: false,
            exterior_samples: exterior_samples(),
            seed: seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub generator: GeneratorConfig,
    pub sector: SectorConfig,
    pub coupling: CouplingConfig,
    pub feedback: FeedbackConfig,
    pub sampling: SamplingConfig,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub scans: ScanConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// Serialization with every default spelled out.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), CliError> {
        parse_grid(&self.sampling.tau_grid)?;
        if let GeneratorConfig::WavePerturbed { b0_law, b0_coeffs, .. } = &self.generator {
            if b0_law.is_some() == b0_coeffs.is_some() {
                return Err(CliError::Config("wave generator needs exactly one of b0_law, b0_coeffs".into()));
            }
        }
        let [lo, hi] = self.simulation.fit_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(CliError::Config(format!("fit window [{lo}, {hi}] is empty")));
        }
        Ok(())
    }
}

/// `a:b:n` into `n` evenly spaced points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Config(format!("grid '{spec}' is not a:b:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !(a > 0.0) || (n > 1 && !(b > a)) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

/// Built-in configuration of the wave demonstration.
pub const WAVE_DEMO: &str = r#"
[generator]
kind = "wave_perturbed"
n_pairs = 600
upsilon = 0.005
alpha = 2.0
b0_law = { scale = 1.0, q = 2.0 }
extra_modes = [
    { lambda = [0.5, 1.0], b = [1.0, 0.0] },
    { lambda = [0.5, -1.0], b = [1.0, 0.0] },
]

[sector]
alpha = 2.0
upsilon = 0.005
omega = 1.0

[coupling]
beta = 1.0
gamma = 1.0

[feedback]
source = "designed"
targets = [[-1.0, 1.0], [-1.0, -1.0]]

[sampling]
tau_fraction = 0.5
tau_grid = "0.05:3.0:60"

[simulation]
t_end = 1e4
substeps = 2
x0 = { scale = 1.0, q = 1.5, log_power = 0.75, extra = 1.0 }
fit_window = [1e2, 1e4]

[output]
dir = "wave-demo-out"
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_config_parses() {
        let cfg = Config::parse(WAVE_DEMO).unwrap();
        assert!(matches!(cfg.generator, GeneratorConfig::WavePerturbed { n_pairs: 600, .. }));
        assert_eq!(cfg.scans, ScanConfig::default());
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let first = Config::parse(WAVE_DEMO).unwrap().canonical();
        let second = Config::parse(&first).unwrap().canonical();
        assert_eq!(first, second);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1:0.3:3").unwrap().len(), 3);
        assert!((parse_grid("0.1:0.3:3").unwrap()[1] - 0.2).abs() < 1e-15);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("0.1:0.3").is_err());
        assert!(parse_grid("0.3:0.1:4").is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_ambiguous_input() {
        let bad = WAVE_DEMO.replace("[output]", "[output]\ncolour = 1");
        assert!(Config::parse(&bad).is_err());
        let both = WAVE_DEMO.replace("b0_law = { scale = 1.0, q = 2.0 }", "b0_law = { scale = 1.0, q = 2.0 }\nb0_coeffs = [1.0]");
        assert!(Config::parse(&both).is_err());
    }
}
