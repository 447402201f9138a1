use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vispart::dimension::{box_counts, dim_estimate};
use vispart::dyadic::GridSet;
use vispart::measures::{
    default_lower_constant, frostman_build_with, heavy_light_split, verify_frostman_lower, verify_frostman_upper,
    FrostmanOptions, GridMeasure,
};
use vispart::pipeline::{load_config, run_certificate_check, run_visibility_experiment, GeneratorSpec};
use vispart::transforms::{
    directional_energy, fourier_energy, spatial_energy, Direction, DEFAULT_DIRECTIONAL_STEPS,
};
use vispart::visibility::{classify_lines, visible_cells_general};

#[derive(Parser)]
#[command(name = "vispart", version, about = "Visible parts of dyadic grid sets")]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnergyMode {
    Spatial,
    Fourier,
    Directional,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test set; the generator parameters are echoed to `<out>.json`.
    Generate {
        #[arg(long)]
        kind: String,
        /// Kind-specific JSON fields, e.g. '{"p": 0.9, "seed": 42}'.
        #[arg(long, default_value = "{}")]
        params: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the Frostman measure of a set and check its bounds.
    Frostman {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        out: PathBuf,
        /// Write the construction trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Riesz energy of a measure.
    Energy {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        e: Option<Vec<f64>>,
        #[arg(long = "R")]
        r: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum)]
        mode: EnergyMode,
    },
    /// Visible cells along a direction.
    Visible {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        e: Vec<f64>,
        #[arg(long)]
        net_level: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Good/bad line classification.
    Classify {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        measure: PathBuf,
        /// Experiment config supplying the scale ladder.
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        e: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Box-counting dimension estimate.
    Dim {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, default_value_t = 2)]
        drop: usize,
    },
    /// Run the certificate pipeline on a set (or the config's generator).
    Certify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        set: Option<PathBuf>,
        /// Report path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the configured set and sweep directions; writes CSV and JSON.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's out_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Returns whether every hard assertion held.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate {
            kind,
            params,
            dim,
            depth,
            seed,
            out,
        } => {
            let mut spec: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(&params).context("--params must be a JSON object")?;
            spec.insert("kind".into(), kind.into());
            let generator: GeneratorSpec = serde_json::from_value(spec.clone().into())?;
            let set = generator.generate(dim, depth, seed)?;
            set.write(&out)?;
            let sidecar = serde_json::json!({
                "generator": spec,
                "dim": dim,
                "depth": depth,
                "seed": seed,
                "cells": set.len(),
            });
            let mut side = out.clone().into_os_string();
            side.push(".json");
            write_text(Path::new(&side), &(serde_json::to_string_pretty(&sidecar)? + "\n"))?;
            print_json(&sidecar)?;
            Ok(true)
        }
        Command::Frostman { set, s, out, trace } => {
            let set = GridSet::read(&set)?;
            let built = frostman_build_with(
                &set,
                s,
                FrostmanOptions {
                    trace: trace.is_some(),
                    ..Default::default()
                },
            )?;
            built.measure.write(&out)?;
            if let Some(path) = trace {
                write_text(&path, &(serde_json::to_string_pretty(&built.trace)? + "\n"))?;
            }
            let upper = verify_frostman_upper(&built.measure, s)?;
            let lower = verify_frostman_lower(&built.measure, &set, s, default_lower_constant(set.dim()))?;
            let ok = upper.passed() && lower.passed();
            print_json(&serde_json::json!({
                "total_mass": built.measure.total_mass(),
                "upper": upper,
                "lower": lower,
                "passed": ok,
            }))?;
            Ok(ok)
        }
        Command::Energy {
            measure,
            s,
            e,
            r,
            steps,
            mode,
        } => {
            let m = GridMeasure::read(&measure)?;
            let default_r = (m.level() as f64 + 2.0).exp2();
            let report = match mode {
                EnergyMode::Spatial => spatial_energy(&m, s)?,
                EnergyMode::Fourier => {
                    let r = r.unwrap_or(default_r);
                    // node spacing 1/4 resolves the unit cube
                    let steps = steps.unwrap_or_else(|| ((8.0 * r).ceil() as usize).next_power_of_two().max(8));
                    fourier_energy(&m, s, r, steps)?
                }
                EnergyMode::Directional => {
                    let Some(e) = e else { bail!("--mode directional needs --e") };
                    let d = Direction::new(&e)?;
                    directional_energy(&m, &d, s, r.unwrap_or(default_r), steps.unwrap_or(DEFAULT_DIRECTIONAL_STEPS))?
                }
            };
            print_json(&report)?;
            Ok(true)
        }
        Command::Visible {
            set,
            e,
            net_level,
            out,
        } => {
            let set = GridSet::read(&set)?;
            let d = Direction::new(&e)?;
            let v = visible_cells_general(&set, &d, net_level.unwrap_or(set.level() + 2))?;
            v.write(&out)?;
            print_json(&serde_json::json!({ "direction": d.e(), "visible_cells": v.len(), "set_cells": set.len() }))?;
            Ok(true)
        }
        Command::Classify {
            set,
            measure,
            params,
            e,
            out,
        } => {
            let config = load_config(&params)?;
            let p = &config.params;
            let set = GridSet::read(&set)?;
            let mu = GridMeasure::read(&measure)?;
            let split = heavy_light_split(&mu, p.heavy_threshold);
            let coarse = set.ancestors(p.coarse_level)?;
            let d = Direction::new(&e)?;
            let cl = classify_lines(
                &set,
                &coarse,
                &split.heavy_by_ancestor(p.coarse_level),
                &d,
                &p.scales(),
                p.net_level,
            )?;
            write_text(&out, &(serde_json::to_string_pretty(&cl)? + "\n"))?;
            print_json(&serde_json::json!({ "lines": cl.lines.len(), "bad_lines": cl.bad_count() }))?;
            Ok(true)
        }
        Command::Dim { set, drop } => {
            let set = GridSet::read(&set)?;
            let ladder = box_counts(&set, 0..=set.level())?;
            let d = dim_estimate(&ladder, drop)?;
            print_json(&serde_json::json!({ "slope": d.slope, "stderr": d.stderr, "ladder": ladder.counts }))?;
            Ok(true)
        }
        Command::Certify { config, set, out } => {
            let config = load_config(&config)?;
            for w in &config.params.warnings {
                eprintln!("warning: {w}");
            }
            let set = match set {
                Some(path) => GridSet::read(&path)?,
                None => config.generate()?,
            };
            let report = run_certificate_check(&config.params, &set)?;
            match out {
                Some(path) => write_text(&path, &report.to_json())?,
                None => print!("{}", report.to_json()),
            }
            for f in &report.hard_failures {
                eprintln!("FAIL: {f}");
            }
            Ok(report.passed())
        }
        Command::Experiment { config, out_dir } => {
            let config = load_config(&config)?;
            for w in &config.params.warnings {
                eprintln!("warning: {w}");
            }
            let Some(dir) = out_dir.or_else(|| config.out_dir.clone()) else {
                bail!("no output directory: set out_dir in the config or pass --out-dir");
            };
            let out = run_visibility_experiment(&config, &dir)?;
            eprintln!("wrote {} and {}", out.csv.display(), out.json.display());
            for f in &out.report.hard_failures {
                eprintln!("FAIL: {f}");
            }
            Ok(out.report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
