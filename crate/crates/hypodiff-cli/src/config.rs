//! JSON problem configuration: a versioned schema with an expression tree
//! of atoms and combinators, solver selection, verification checks and
//! analysis constants.

use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub version: u32,
    pub name: String,
    pub dimension: usize,
    pub problem: ExprNode,
    pub x0: Vec<f64>,
    #[serde(default, rename = "box")]
    pub feasible_box: Option<BoxSpec>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub solver: Option<SolverSpec>,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExprNode {
    pub op: String,
    #[serde(default)]
    pub args: Vec<ExprNode>,
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Analysis constants used by step-size validation and rate
/// certification. Values present here override the metadata the
/// expression tree derived on its own.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(rename = "L")]
    pub l: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub epsilon: Option<f64>,
    pub f_star: Option<f64>,
    pub x_star: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverSpec {
    MhdConstant {
        alpha: f64,
        stop: StopSpec,
        tol_sub: Option<f64>,
    },
    MhdExactStep {
        stop: StopSpec,
        tol_sub: Option<f64>,
    },
    MhdLineSearch {
        stop: StopSpec,
        tol_sub: Option<f64>,
        tol_ls: Option<f64>,
    },
    Phd {
        gamma: f64,
        alpha: f64,
        stop: StopSpec,
        tol_sub: Option<f64>,
    },
    Aphd {
        alpha0: f64,
        stop: StopSpec,
        tol_sub: Option<f64>,
    },
}

impl SolverSpec {
    pub fn method_name(&self) -> &'static str {
        match self {
            SolverSpec::MhdConstant { .. } => "mhd_constant",
            SolverSpec::MhdExactStep { .. } => "mhd_exact_step",
            SolverSpec::MhdLineSearch { .. } => "mhd_line_search",
            SolverSpec::Phd { .. } => "phd",
            SolverSpec::Aphd { .. } => "aphd",
        }
    }

    pub fn tol_sub(&self) -> Option<f64> {
        match self {
            SolverSpec::MhdConstant { tol_sub, .. }
            | SolverSpec::MhdExactStep { tol_sub, .. }
            | SolverSpec::MhdLineSearch { tol_sub, .. }
            | SolverSpec::Phd { tol_sub, .. }
            | SolverSpec::Aphd { tol_sub, .. } => *tol_sub,
        }
    }

    pub fn stop(&self) -> &StopSpec {
        match self {
            SolverSpec::MhdConstant { stop, .. }
            | SolverSpec::MhdExactStep { stop, .. }
            | SolverSpec::MhdLineSearch { stop, .. }
            | SolverSpec::Phd { stop, .. }
            | SolverSpec::Aphd { stop, .. } => stop,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    #[serde(default)]
    pub eps_value: Option<f64>,
    #[serde(default)]
    pub eps_dist: Option<f64>,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Any of "fd", "consistency", "lip_approx", "lip_map", "rate",
    /// "optimality".
    pub checks: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_mesh_directions")]
    pub mesh_directions: usize,
    #[serde(default = "default_mesh_slack")]
    pub mesh_slack: f64,
}

fn default_samples() -> usize {
    1000
}

fn default_mesh_directions() -> usize {
    16
}

fn default_mesh_slack() -> f64 {
    0.02
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Trace CSV filename, relative to the output directory; defaults to
    /// "<name>.trace.csv".
    pub trace_csv: Option<String>,
    /// Summary JSON filename; defaults to "<name>.summary.json".
    pub summary_json: Option<String>,
}

pub const KNOWN_CHECKS: [&str; 6] = [
    "fd",
    "consistency",
    "lip_approx",
    "lip_map",
    "rate",
    "optimality",
];

/// Parse and validate a configuration file; schema violations are
/// collected with their locations rather than failing one at a time.
pub fn parse_config(path: &std::path::Path) -> Result<ProblemConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let config: ProblemConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(vec![format!("{}: {e}", path.display())]))?;
    let mut errors = Vec::new();
    if config.version != SCHEMA_VERSION {
        errors.push(format!(
            "version: expected {SCHEMA_VERSION}, got {}",
            config.version
        ));
    }
    if config.x0.len() != config.dimension {
        errors.push(format!(
            "x0: length {} does not match dimension {}",
            config.x0.len(),
            config.dimension
        ));
    }
    if let Some(b) = &config.feasible_box {
        if b.lower.len() != config.dimension || b.upper.len() != config.dimension {
            errors.push("box: bound lengths must match dimension".into());
        }
    }
    if let Some(xs) = &config.constants.x_star {
        if xs.len() != config.dimension {
            errors.push("constants.x_star: length must match dimension".into());
        }
    }
    if let Some(v) = &config.verify {
        for c in &v.checks {
            if !KNOWN_CHECKS.contains(&c.as_str()) {
                errors.push(format!(
                    "verify.checks: unknown check {c:?} (known: {KNOWN_CHECKS:?})"
                ));
            }
        }
        if v.lower.len() != config.dimension || v.upper.len() != config.dimension {
            errors.push("verify: box bound lengths must match dimension".into());
        }
    }
    if let Some(SolverSpec::MhdConstant { alpha, .. }) = &config.solver {
        if let Some(l) = config.constants.l {
            if l > 0.0 && *alpha >= 2.0 / l {
                errors.push(format!("solver.alpha: alpha ≥ 2/L ({alpha} ≥ {})", 2.0 / l));
            }
        }
    }
    if let Some(s) = &config.solver {
        if s.stop().max_iters == 0 {
            errors.push("solver.stop.max_iters: must be ≥ 1".into());
        }
    }
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(CliError::Schema(errors))
    }
}
