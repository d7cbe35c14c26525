//! Flat, namespaced configuration files for sweep scenarios.
//!
//! The format is one `key = value` pair per line with `#` comments; keys are
//! namespaced (`model.*`, `detector.*`, `protocol.*`, `sweep.*`, `bounds.*`,
//! `entropy.*`, `output.*`). Unknown keys are errors.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use qscramble::bounds::BoundMethod;
use qscramble::models::{ChainVariant, SpinChainModel};
use qscramble::weakmeas::DetectorModel;

/// Initial-state selector.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum StateSpec {
    Gibbs { beta: f64 },
    WEigenstate { t_star: f64, which: usize },
    MaximallyMixed,
    PureComputational { index: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct Protocol {
    pub v1: f64,
    pub v2: f64,
    pub state: StateSpec,
    pub fine_grained: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_steps: usize,
}

impl SweepGrid {
    pub fn times(&self) -> Vec<f64> {
        if self.n_steps <= 1 {
            return vec![self.t_min];
        }
        let step = (self.t_max - self.t_min) / (self.n_steps - 1) as f64;
        (0..self.n_steps).map(|k| self.t_min + k as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub model: SpinChainModel,
    pub detector: DetectorModel,
    pub protocol: Protocol,
    pub sweep: SweepGrid,
    pub bound_methods: Vec<BoundMethod>,
    pub alphas: Vec<f64>,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| anyhow!("model: {e}"))?;
        self.detector.validate().map_err(|e| anyhow!("detector: {e}"))?;
        if self.sweep.t_min > self.sweep.t_max {
            bail!("sweep: t_min {} exceeds t_max {}", self.sweep.t_min, self.sweep.t_max);
        }
        if self.sweep.n_steps < 1 {
            bail!("sweep: n_steps must be at least 1");
        }
        for v in [self.protocol.v1, self.protocol.v2] {
            if v != 1.0 && v != -1.0 {
                bail!("protocol: v labels must be +1 or -1, got {v}");
            }
        }
        if self.bound_methods.is_empty() {
            bail!("bounds: at least one method required");
        }
        for &a in &self.alphas {
            if a <= 0.5 || a.is_nan() {
                bail!("entropy: Rényi order {a} must exceed 1/2 to admit a conjugate");
            }
        }
        Ok(())
    }
}

/// The simulation configuration behind the time-sweep figures: the 8-site
/// power-law chain at `β = 1` with the Gaussian detector.
pub fn chain8_config() -> ExperimentConfig {
    ExperimentConfig {
        model: SpinChainModel {
            n_sites: 8,
            coupling_j: 1.0,
            zeta: 6.0,
            range: 5,
            h_x: 1.05,
            h_z_amp: 0.375,
            variant: ChainVariant::PowerLaw,
        },
        detector: DetectorModel { delta: 0.1, length: 0.1, x0: 10.0, gtilde: 0.02, tail_mass: 1e-12 },
        protocol: Protocol {
            v1: 1.0,
            v2: -1.0,
            state: StateSpec::Gibbs { beta: 1.0 },
            fine_grained: false,
        },
        sweep: SweepGrid { t_min: 0.0, t_max: 10.0, n_steps: 101 },
        bound_methods: vec![BoundMethod::Taylor, BoundMethod::ExactTrace],
        alphas: vec![1.0, f64::INFINITY],
        output: OutputSpec { path: PathBuf::from("sweep.csv"), format: OutputFormat::Csv },
    }
}

/// Exceptional-regime configuration: fine-grained `W(t)` measurements, a
/// `W(t*)` eigenstate, and `g̃ = 0.16` (second-order expansion invalid, so
/// only the exact trace bound runs).
pub fn fig4_config() -> ExperimentConfig {
    let mut config = chain8_config();
    config.detector.gtilde = 0.16;
    config.protocol.fine_grained = true;
    config.protocol.state = StateSpec::WEigenstate { t_star: 4.0, which: 0 };
    config.bound_methods = vec![BoundMethod::ExactTrace];
    config.output.path = PathBuf::from("fig4.csv");
    config
}

/// Integrable comparison: nearest-neighbor transverse-field chain, no
/// longitudinal field.
pub fn integrable_config() -> ExperimentConfig {
    let mut config = chain8_config();
    config.model.variant = ChainVariant::TransverseFieldOnly;
    config.output.path = PathBuf::from("integrable.csv");
    config
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => bail!("expected a boolean, got '{other}'"),
    }
}

fn parse_alpha(v: &str) -> Result<f64> {
    match v {
        "inf" | "infinity" => Ok(f64::INFINITY),
        other => other.parse::<f64>().with_context(|| format!("bad Rényi order '{other}'")),
    }
}

/// Parses the flat `key = value` format; every key must be known.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = chain8_config();
    let mut seen = BTreeSet::new();
    let mut state_kind: Option<String> = None;
    let mut beta = 1.0f64;
    let mut t_star = 4.0f64;
    let mut which = 0usize;
    let mut pure_index = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected 'key = value'", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            bail!("line {}: duplicate key '{}'", lineno + 1, key);
        }
        let parse_err = |e: anyhow::Error| anyhow!("line {}: key '{}': {}", lineno + 1, key, e);
        match key {
            "model.n_sites" => config.model.n_sites = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "model.j" => config.model.coupling_j = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "model.zeta" => config.model.zeta = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "model.range" => config.model.range = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "model.hx" => config.model.h_x = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "model.hz_amp" => config.model.h_z_amp = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "model.variant" => {
                config.model.variant = match value {
                    "power_law" => ChainVariant::PowerLaw,
                    "transverse_field_only" => ChainVariant::TransverseFieldOnly,
                    other => return Err(parse_err(anyhow!("unknown variant '{other}'"))),
                }
            }
            "detector.delta" => config.detector.delta = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "detector.length" => config.detector.length = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "detector.x0" => config.detector.x0 = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "detector.gtilde" => config.detector.gtilde = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "detector.tail_mass" => config.detector.tail_mass = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "protocol.v1" => config.protocol.v1 = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "protocol.v2" => config.protocol.v2 = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "protocol.state" => state_kind = Some(value.to_string()),
            "protocol.beta" => beta = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "protocol.t_star" => t_star = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "protocol.which" => which = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "protocol.index" => pure_index = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "protocol.fine_grained" => {
                config.protocol.fine_grained = parse_bool(value).map_err(parse_err)?
            }
            "sweep.t_min" => config.sweep.t_min = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "sweep.t_max" => config.sweep.t_max = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "sweep.n_steps" => config.sweep.n_steps = value.parse().map_err(|e| parse_err(anyhow!("{e}")))?,
            "bounds.methods" => {
                let mut methods = Vec::new();
                for m in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    methods.push(match m {
                        "taylor" => BoundMethod::Taylor,
                        "exact_trace" => BoundMethod::ExactTrace,
                        "exact_c" => BoundMethod::ExactOverlap,
                        other => return Err(parse_err(anyhow!("unknown bound method '{other}'"))),
                    });
                }
                config.bound_methods = methods;
            }
            "entropy.alphas" => {
                let mut alphas = Vec::new();
                for a in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    alphas.push(parse_alpha(a).map_err(parse_err)?);
                }
                config.alphas = alphas;
            }
            "output.path" => config.output.path = PathBuf::from(value),
            "output.format" => {
                config.output.format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => return Err(parse_err(anyhow!("unknown output format '{other}'"))),
                }
            }
            other => bail!("line {}: unknown key '{}'", lineno + 1, other),
        }
    }

    if let Some(kind) = state_kind {
        config.protocol.state = match kind.as_str() {
            "gibbs" => StateSpec::Gibbs { beta },
            "w_eigenstate" => StateSpec::WEigenstate { t_star, which },
            "maximally_mixed" => StateSpec::MaximallyMixed,
            "pure" => StateSpec::PureComputational { index: pure_index },
            other => bail!("unknown protocol.state '{other}'"),
        };
    } else if seen.contains("protocol.beta") {
        config.protocol.state = StateSpec::Gibbs { beta };
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_roundtrip_keys() {
        let text = "\
# comment
model.n_sites = 4
model.j = 1.0
model.zeta = 6.0
model.range = 3
model.hx = 1.05
model.hz_amp = 0.375
model.variant = power_law
detector.gtilde = 0.05
protocol.v1 = 1
protocol.v2 = -1
protocol.state = gibbs
protocol.beta = 0.5
sweep.t_min = 0.0
sweep.t_max = 2.0
sweep.n_steps = 5
bounds.methods = taylor, exact_trace
entropy.alphas = 1, inf
output.path = out.csv
output.format = csv
";
        let config = parse_config(text).unwrap();
        assert_eq!(config.model.n_sites, 4);
        assert_eq!(config.sweep.n_steps, 5);
        assert_eq!(config.protocol.state, StateSpec::Gibbs { beta: 0.5 });
        assert_eq!(config.bound_methods.len(), 2);
        assert!(config.alphas[1].is_infinite());
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = parse_config("model.n_site = 4\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn rejects_duplicates_and_bad_values() {
        assert!(parse_config("sweep.n_steps = 3\nsweep.n_steps = 4\n").is_err());
        assert!(parse_config("protocol.v1 = 2\n").is_err());
        assert!(parse_config("sweep.t_min = 5\nsweep.t_max = 1\n").is_err());
    }

    #[test]
    fn sweep_times_endpoints() {
        let grid = SweepGrid { t_min: 0.0, t_max: 10.0, n_steps: 101 };
        let times = grid.times();
        assert_eq!(times.len(), 101);
        assert!((times[0] - 0.0).abs() < 1e-15);
        assert!((times[100] - 10.0).abs() < 1e-12);
        assert!((times[40] - 4.0).abs() < 1e-12);
    }
}
