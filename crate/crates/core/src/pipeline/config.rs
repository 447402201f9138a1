//! Experiment configuration: JSON schema, validation and derived scales.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dyadic::{GridSet, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::fractals::{generate_ifs, generate_percolation, generate_product_cantor, DigitPattern, PercolationSpec};
use crate::visibility::Scales;

/// Finest level the pipelines are sized for on a single machine.
pub const DESK_MAX_LEVEL: u32 = 12;

const TOL: f64 = 1e-9;

/// Constants standing in for the unspecified implicit constants; set once
/// by a calibration run and never tuned automatically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    /// `C` in the good-line tube bound `N ≤ C·δ^{ε−1}`.
    #[serde(alias = "C_form9")]
    pub good_line_constant: f64,
    /// `C` in the exceptional-fraction bound `fraction ≤ C·δ^ε`.
    #[serde(alias = "C_form6")]
    pub exceptional_constant: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            good_line_constant: 8.0,
            exceptional_constant: 1.0,
        }
    }
}

/// Test-set generator; the depth is always the config's `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Full,
    /// Self-similar digit set, e.g. `{"kind": "ifs", "digits": ["00", "01", "10"]}`.
    Ifs { digits: Vec<String> },
    /// Per-level child subsets, cycled.
    Pattern { levels: Vec<Vec<usize>> },
    /// Fractal percolation; the seed defaults to the config seed.
    Percolation {
        p: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Per-axis digit subsets.
    Product { axes: Vec<Vec<u32>> },
    /// A set stored in the grid text format.
    File { path: PathBuf },
}

impl GeneratorSpec {
    pub fn generate(&self, n: usize, depth: u32, seed: u64) -> Result<GridSet> {
        let set = match self {
            GeneratorSpec::Full => GridSet::full(n, depth)?,
            GeneratorSpec::Ifs { digits } => generate_ifs(&DigitPattern::from_digit_strings(n, digits)?, depth)?,
            GeneratorSpec::Pattern { levels } => generate_ifs(
                &DigitPattern {
                    dim: n,
                    levels: levels.clone(),
                },
                depth,
            )?,
            GeneratorSpec::Percolation { p, seed: own } => generate_percolation(&PercolationSpec {
                dim: n,
                p: *p,
                depth,
                seed: own.unwrap_or(seed),
            })?,
            GeneratorSpec::Product { axes } => {
                if axes.len() != n {
                    return Err(Error::Config(format!("product generator has {} axes, n = {n}", axes.len())));
                }
                generate_product_cantor(axes, depth)?
            }
            GeneratorSpec::File { path } => GridSet::read(path)?,
        };
        if set.dim() != n || set.level() != depth {
            return Err(Error::Config(format!(
                "generated set lives at n = {}, J = {} but the config asks for n = {n}, J = {depth}",
                set.dim(),
                set.level()
            )));
        }
        Ok(set)
    }
}

/// The JSON document accepted by `certify` and `experiment`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    #[serde(rename = "J")]
    pub j: u32,
    pub tau: f64,
    pub epsilon: f64,
    pub s: f64,
    pub generator: GeneratorSpec,
    pub directions: usize,
    pub seed: u64,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Explicit coarse level; required when `ε·J` is not an integer.
    #[serde(default)]
    pub coarse_level: Option<u32>,
    /// Radial cutoff for directional energies (default `2^{J+2}`).
    #[serde(default, rename = "R")]
    pub cutoff: Option<f64>,
    /// Radial quadrature steps (default `2^12`).
    #[serde(default)]
    pub steps: Option<usize>,
    /// Line-net level (default `J + 2`).
    #[serde(default)]
    pub net_level: Option<u32>,
}

/// Validated parameters with every derived quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentParams {
    pub n: usize,
    #[serde(rename = "J")]
    pub j: u32,
    pub tau: f64,
    pub epsilon: f64,
    pub s: f64,
    pub coarse_level: u32,
    pub heavy_threshold: f64,
    pub stack_threshold: f64,
    pub energy_threshold: f64,
    pub directions: usize,
    pub seed: u64,
    #[serde(rename = "R")]
    pub cutoff: f64,
    pub steps: usize,
    pub net_level: u32,
    pub calibration: Calibration,
    /// Accepted-but-noteworthy conditions, e.g. a desk-infeasible scale.
    pub warnings: Vec<String>,
}

impl ExperimentParams {
    pub fn scales(&self) -> Scales {
        Scales {
            n: self.n,
            fine: self.j,
            coarse: self.coarse_level,
            epsilon: self.epsilon,
        }
    }

    pub fn delta(&self) -> f64 {
        (-(self.j as f64)).exp2()
    }

    /// Exponent of the Frostman measure, `n − τ`.
    pub fn frostman_exponent(&self) -> f64 {
        self.n as f64 - self.tau
    }

    pub fn from_config(cfg: &ConfigFile) -> Result<ExperimentParams> {
        let ConfigFile { n, j, tau, epsilon, s, .. } = *cfg;
        let nf = n as f64;
        let mut warnings = Vec::new();
        if !(2..=3).contains(&n) {
            return Err(Error::Config(format!("n = {n} unsupported (the pipelines need n = 2 or 3)")));
        }
        if j == 0 {
            return Err(Error::Config("J must be at least 1".into()));
        }
        if !(tau > 0.0 && tau < 0.5) {
            return Err(Error::Config(format!("tau = {tau} must lie in (0, 1/2)")));
        }
        if (epsilon - 2.0 * tau).abs() > TOL {
            return Err(Error::Config(format!("epsilon = 2 tau violated (epsilon = {epsilon}, tau = {tau})")));
        }
        if !(nf - 0.5 + tau < s && s < nf - tau) {
            return Err(Error::Config(format!(
                "exponent window n - 1/2 + tau < s < n - tau violated: need {} < s < {}, got s = {s}",
                nf - 0.5 + tau,
                nf - tau
            )));
        }
        let ej = epsilon * j as f64;
        let coarse_level = match cfg.coarse_level {
            Some(c) => {
                if c >= j {
                    return Err(Error::Config(format!("coarse level {c} must be below J = {j}")));
                }
                if (ej - c as f64).abs() > TOL {
                    warnings.push(format!(
                        "coarse level {c} set explicitly; epsilon*J = {ej} (delta^epsilon is not dyadic)"
                    ));
                }
                c
            }
            None => {
                if (ej - ej.round()).abs() > TOL {
                    return Err(Error::Config(format!(
                        "epsilon*J = {ej} is not an integer, so delta^epsilon is not dyadic; choose J or set coarse_level"
                    )));
                }
                ej.round() as u32
            }
        };
        if cfg.directions == 0 {
            return Err(Error::Config("directions must be at least 1".into()));
        }
        if j > DESK_MAX_LEVEL {
            warnings.push(format!(
                "desk-infeasible scale: J = {j} exceeds {DESK_MAX_LEVEL}{}",
                if j > MAX_LEVEL { " and the grid limit" } else { "" }
            ));
        }
        let delta = (-(j as f64)).exp2();
        let stack_threshold = delta.powf(2.0 * epsilon - 1.0);
        if stack_threshold < 1.0 {
            return Err(Error::Config(format!("stack threshold delta^(2 epsilon - 1) = {stack_threshold} < 1")));
        }
        let cutoff = cfg.cutoff.unwrap_or_else(|| (j as f64 + 2.0).exp2());
        let steps = cfg.steps.unwrap_or(crate::transforms::DEFAULT_DIRECTIONAL_STEPS);
        if !(cutoff > 0.0) || steps < 8 {
            return Err(Error::Config(format!("quadrature R = {cutoff}, steps = {steps} invalid")));
        }
        let net_level = cfg.net_level.unwrap_or(j + 2);
        if net_level < j {
            return Err(Error::Config(format!("net level {net_level} is coarser than J = {j}")));
        }
        let cal = cfg.calibration;
        if !(cal.good_line_constant > 0.0 && cal.exceptional_constant > 0.0) {
            return Err(Error::Config("calibration constants must be positive".into()));
        }
        Ok(ExperimentParams {
            n,
            j,
            tau,
            epsilon,
            s,
            coarse_level,
            heavy_threshold: delta.powf(nf + epsilon),
            stack_threshold,
            energy_threshold: delta.powf(-epsilon * (nf + 1.0)),
            directions: cfg.directions,
            seed: cfg.seed,
            cutoff,
            steps,
            net_level,
            calibration: cal,
            warnings,
        })
    }
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Config {
    pub params: ExperimentParams,
    pub generator: GeneratorSpec,
    pub out_dir: Option<PathBuf>,
}

impl Config {
    pub fn from_file(cfg: ConfigFile) -> Result<Config> {
        Ok(Config {
            params: ExperimentParams::from_config(&cfg)?,
            generator: cfg.generator,
            out_dir: cfg.out_dir,
        })
    }

    pub fn from_json(text: &str) -> Result<Config> {
        let cfg: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Config::from_file(cfg)
    }

    pub fn generate(&self) -> Result<GridSet> {
        self.generator.generate(self.params.n, self.params.j, self.params.seed)
    }
}

/// Read and validate a config file. Relative generator file paths resolve
/// against the config's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: ConfigFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if let GeneratorSpec::File { path: p } = &mut cfg.generator {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Config::from_file(cfg)
}
