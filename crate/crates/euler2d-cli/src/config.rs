//! Experiment configuration: strict JSON documents, one schema per command.
//!
//! Unknown keys are rejected at parse time; range checks run afterwards and
//! report every violation, not just the first.

use serde::{Deserialize, Serialize};

fn default_dt() -> f64 {
    1e-3
}

fn default_record_every() -> usize {
    100
}

fn default_snapshot_every() -> usize {
    100
}

fn default_seed() -> u64 {
    0
}

fn default_paths() -> usize {
    10_000
}

fn default_scheme() -> SchemeConfig {
    SchemeConfig::Rk4
}

fn default_noise_profile() -> NoiseProfileConfig {
    NoiseProfileConfig::Uniform
}

fn default_drift() -> DriftConfig {
    DriftConfig::Euler
}

fn default_constraint() -> ConstraintConfig {
    ConstraintConfig::None
}

fn default_measures() -> Vec<MeasureConfig> {
    vec![MeasureConfig::Enstrophy, MeasureConfig::Energy]
}

fn default_condensation_seeds() -> usize {
    10
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    Rk4,
    EulerMaruyama,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum NoiseProfileConfig {
    Uniform,
    InverseK2,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MeasureConfig {
    Enstrophy,
    Energy,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DriftConfig {
    Euler,
    EulerPlusOu(MeasureConfig),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub k1: i64,
    pub k2: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum InitialConfig {
    SingleMode { k1: i64, k2: i64, re: f64, im: f64 },
    Sample(MeasureConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintConfig {
    None,
    Box { psi_max: f64 },
    Pinning { rows: Vec<usize>, cols: Vec<usize> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DomainConfig {
    Box { half_widths: Vec<f64> },
    Ball { radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConfig {
    Constant(f64),
    Coordinate(usize),
    Enstrophy,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ComponentConfig {
    Re,
    Im,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CoordConfig {
    pub k1: i64,
    pub k2: i64,
    pub component: ComponentConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSpectralConfig {
    pub truncation: u32,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_noise_profile")]
    pub noise_profile: NoiseProfileConfig,
    #[serde(default = "default_drift")]
    pub drift: DriftConfig,
    pub initial: InitialConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateGridConfig {
    pub n: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub steps: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_constraint")]
    pub constraint: ConstraintConfig,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    pub initial_mode: ModeConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckInvarianceConfig {
    pub truncation: u32,
    pub states: usize,
    #[serde(default = "default_measures")]
    pub measures: Vec<MeasureConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateDensityConfig {
    pub truncation: u32,
    pub coords: Vec<CoordConfig>,
    pub domain: DomainConfig,
    pub boundary: BoundaryConfig,
    pub epsilon: f64,
    pub z0: Vec<f64>,
    #[serde(default = "default_paths")]
    pub paths: usize,
    pub dt: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEpsilonConfig {
    pub truncation: u32,
    pub coords: Vec<CoordConfig>,
    pub domain: DomainConfig,
    pub boundary: BoundaryConfig,
    pub epsilons: Vec<f64>,
    pub z_points: Vec<Vec<f64>>,
    #[serde(default = "default_paths")]
    pub paths: usize,
    pub dt0: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondensationConfig {
    pub n: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub steps: usize,
    pub epsilon: f64,
    #[serde(default = "default_condensation_seeds")]
    pub seeds: usize,
    pub initial_mode: ModeConfig,
    #[serde(default = "default_constraint")]
    pub constraint: ConstraintConfig,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// One parsed experiment document.
#[derive(Debug, Clone)]
pub enum ExperimentConfig {
    SimulateSpectral(SimulateSpectralConfig),
    SimulateGrid(SimulateGridConfig),
    CheckInvariance(CheckInvarianceConfig),
    EstimateDensity(EstimateDensityConfig),
    SweepEpsilon(SweepEpsilonConfig),
    Condensation(CondensationConfig),
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        match self {
            Self::SimulateSpectral(c) => c.seed,
            Self::SimulateGrid(c) => c.seed,
            Self::CheckInvariance(c) => c.seed,
            Self::EstimateDensity(c) => c.seed,
            Self::SweepEpsilon(c) => c.seed,
            Self::Condensation(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Self::SimulateSpectral(c) => c.seed = seed,
            Self::SimulateGrid(c) => c.seed = seed,
            Self::CheckInvariance(c) => c.seed = seed,
            Self::EstimateDensity(c) => c.seed = seed,
            Self::SweepEpsilon(c) => c.seed = seed,
            Self::Condensation(c) => c.seed = seed,
        }
    }

    /// Every range violation in the document, empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let positive = |v: &mut Vec<String>, name: &str, x: f64| {
            if !(x > 0.0) || !x.is_finite() {
                v.push(format!("{name} must be > 0 (got {x})"));
            }
        };
        let nonneg = |v: &mut Vec<String>, name: &str, x: f64| {
            if !(x >= 0.0) || !x.is_finite() {
                v.push(format!("{name} must be >= 0 (got {x})"));
            }
        };
        match self {
            Self::SimulateSpectral(c) => {
                if c.truncation == 0 {
                    v.push("truncation must be >= 1".into());
                }
                positive(&mut v, "dt", c.dt);
                if c.steps == 0 {
                    v.push("steps must be >= 1".into());
                }
                if c.record_every == 0 {
                    v.push("record_every must be >= 1".into());
                }
                nonneg(&mut v, "epsilon", c.epsilon);
                if c.scheme == SchemeConfig::Rk4 && c.epsilon > 0.0 {
                    v.push("scheme rk4 requires epsilon = 0".into());
                }
                if let NoiseProfileConfig::Custom(s) = &c.noise_profile {
                    if s.iter().any(|x| !(*x > 0.0)) {
                        v.push("noise_profile.custom entries must be > 0".into());
                    }
                }
            }
            Self::SimulateGrid(c) => {
                if c.n < 8 {
                    v.push(format!("n must be >= 8 (got {})", c.n));
                }
                positive(&mut v, "dt", c.dt);
                if c.steps == 0 {
                    v.push("steps must be >= 1".into());
                }
                nonneg(&mut v, "epsilon", c.epsilon);
                if c.snapshot_every == 0 {
                    v.push("snapshot_every must be >= 1".into());
                }
                constraint_violations(&c.constraint, c.n, &mut v);
            }
            Self::CheckInvariance(c) => {
                if c.truncation == 0 {
                    v.push("truncation must be >= 1".into());
                }
                if c.states == 0 {
                    v.push("states must be >= 1".into());
                }
                if c.measures.is_empty() {
                    v.push("measures must not be empty".into());
                }
            }
            Self::EstimateDensity(c) => {
                density_common_violations(
                    c.truncation,
                    &c.coords,
                    &c.domain,
                    c.paths,
                    &mut v,
                );
                positive(&mut v, "epsilon", c.epsilon);
                positive(&mut v, "dt", c.dt);
                if c.z0.len() != c.coords.len() {
                    v.push(format!(
                        "z0 length {} must match coords length {}",
                        c.z0.len(),
                        c.coords.len()
                    ));
                }
            }
            Self::SweepEpsilon(c) => {
                density_common_violations(
                    c.truncation,
                    &c.coords,
                    &c.domain,
                    c.paths,
                    &mut v,
                );
                positive(&mut v, "dt0", c.dt0);
                if c.epsilons.is_empty() {
                    v.push("epsilons must not be empty".into());
                }
                if c.epsilons.iter().any(|e| !(*e > 0.0)) {
                    v.push("epsilons must all be > 0".into());
                }
                if c.epsilons.windows(2).any(|w| w[1] >= w[0]) {
                    v.push("epsilons must be strictly decreasing".into());
                }
                if c.z_points.is_empty() {
                    v.push("z_points must not be empty".into());
                }
                for (i, z) in c.z_points.iter().enumerate() {
                    if z.len() != c.coords.len() {
                        v.push(format!(
                            "z_points[{i}] length {} must match coords length {}",
                            z.len(),
                            c.coords.len()
                        ));
                    }
                }
            }
            Self::Condensation(c) => {
                if c.n < 8 {
                    v.push(format!("n must be >= 8 (got {})", c.n));
                }
                positive(&mut v, "dt", c.dt);
                if c.steps == 0 {
                    v.push("steps must be >= 1".into());
                }
                nonneg(&mut v, "epsilon", c.epsilon);
                if c.seeds == 0 {
                    v.push("seeds must be >= 1".into());
                }
                if c.snapshot_every == 0 {
                    v.push("snapshot_every must be >= 1".into());
                }
                constraint_violations(&c.constraint, c.n, &mut v);
            }
        }
        v
    }
}

fn constraint_violations(c: &ConstraintConfig, n: usize, v: &mut Vec<String>) {
    match c {
        ConstraintConfig::None => {}
        ConstraintConfig::Box { psi_max } => {
            if !(*psi_max > 0.0) || !psi_max.is_finite() {
                v.push(format!("constraint.box.psi_max must be > 0 (got {psi_max})"));
            }
        }
        ConstraintConfig::Pinning { rows, cols } => {
            if rows.is_empty() && cols.is_empty() {
                v.push("constraint.pinning needs at least one line".into());
            }
            if rows.iter().chain(cols).any(|&l| l >= n) {
                v.push(format!("constraint.pinning lines must be < n ({n})"));
            }
        }
    }
}

fn density_common_violations(
    truncation: u32,
    coords: &[CoordConfig],
    domain: &DomainConfig,
    paths: usize,
    v: &mut Vec<String>,
) {
    if truncation == 0 {
        v.push("truncation must be >= 1".into());
    }
    if coords.is_empty() {
        v.push("coords must not be empty".into());
    }
    if paths == 0 {
        v.push("paths must be >= 1".into());
    }
    match domain {
        DomainConfig::Box { half_widths } => {
            if half_widths.len() != coords.len() {
                v.push(format!(
                    "domain.box.half_widths length {} must match coords length {}",
                    half_widths.len(),
                    coords.len()
                ));
            }
            if half_widths.iter().any(|r| !(*r > 0.0)) {
                v.push("domain.box.half_widths must all be > 0".into());
            }
        }
        DomainConfig::Ball { radius } => {
            if !(*radius > 0.0) {
                v.push(format!("domain.ball.radius must be > 0 (got {radius})"));
            }
        }
    }
}

/// Parses the named command's document, rejecting unknown keys and listing
/// every semantic violation.
pub fn parse_config(command: &str, text: &str) -> Result<ExperimentConfig, String> {
    let config = match command {
        "simulate-spectral" => serde_json::from_str::<SimulateSpectralConfig>(text)
            .map(ExperimentConfig::SimulateSpectral),
        "simulate-grid" => {
            serde_json::from_str::<SimulateGridConfig>(text).map(ExperimentConfig::SimulateGrid)
        }
        "check-invariance" => serde_json::from_str::<CheckInvarianceConfig>(text)
            .map(ExperimentConfig::CheckInvariance),
        "estimate-density" => serde_json::from_str::<EstimateDensityConfig>(text)
            .map(ExperimentConfig::EstimateDensity),
        "sweep-epsilon" => {
            serde_json::from_str::<SweepEpsilonConfig>(text).map(ExperimentConfig::SweepEpsilon)
        }
        "condensation" => {
            serde_json::from_str::<CondensationConfig>(text).map(ExperimentConfig::Condensation)
        }
        other => return Err(format!("unknown command {other}")),
    }
    .map_err(|e| format!("config parse error: {e}"))?;
    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(format!("config validation failed:\n  - {}", violations.join("\n  - ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_spectral_config_fills_defaults() {
        let text = r#"{"truncation": 4, "steps": 10,
                       "initial": {"single_mode": {"k1":1,"k2":0,"re":1.0,"im":0.0}}}"#;
        let config = parse_config("simulate-spectral", text).unwrap();
        match config {
            ExperimentConfig::SimulateSpectral(c) => {
                assert_eq!(c.dt, 1e-3);
                assert_eq!(c.record_every, 100);
                assert_eq!(c.scheme, SchemeConfig::Rk4);
                assert_eq!(c.epsilon, 0.0);
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn negative_dt_is_named_in_the_error() {
        let text = r#"{"truncation": 4, "steps": 10, "dt": -1.0,
                       "initial": {"sample": "enstrophy"}}"#;
        let err = parse_config("simulate-spectral", text).unwrap_err();
        assert!(err.contains("dt"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"truncation": 4, "steps": 10, "viscocity": 1.0,
                       "initial": {"sample": "enstrophy"}}"#;
        let err = parse_config("simulate-spectral", text).unwrap_err();
        assert!(err.contains("viscocity"), "{err}");
    }

    #[test]
    fn all_violations_are_listed() {
        let text = r#"{"n": 4, "dt": -1.0, "steps": 0, "epsilon": -2.0,
                       "initial_mode": {"k1": 1, "k2": 1}}"#;
        let err = parse_config("simulate-grid", text).unwrap_err();
        for needle in ["n must be >= 8", "dt", "steps", "epsilon"] {
            assert!(err.contains(needle), "missing {needle} in {err}");
        }
    }

    #[test]
    fn roundtrip_preserves_the_document() {
        let text = r#"{"truncation": 2,
                       "coords": [{"k1":1,"k2":0,"component":"re"},
                                   {"k1":0,"k2":1,"component":"re"}],
                       "domain": {"box": {"half_widths": [2.0, 2.0]}},
                       "boundary": "enstrophy",
                       "epsilons": [0.4, 0.2],
                       "z_points": [[0.3, -0.4]],
                       "dt0": 2e-4,
                       "seed": 9}"#;
        let config = parse_config("sweep-epsilon", text).unwrap();
        let ExperimentConfig::SweepEpsilon(c) = config else { panic!() };
        let serialized = serde_json::to_string(&c).unwrap();
        let back: SweepEpsilonConfig = serde_json::from_str(&serialized).unwrap();
        assert_eq!(back.epsilons, c.epsilons);
        assert_eq!(back.z_points, c.z_points);
        assert_eq!(back.paths, c.paths);
        assert_eq!(back.seed, 9);
    }
}
