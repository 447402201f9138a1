//! End-to-end runs: the per-direction certificate pipeline and the
//! visibility experiment, with their JSON and CSV reports.

mod config;

pub use config::{load_config, Calibration, Config, ConfigFile, ExperimentParams, GeneratorSpec, DESK_MAX_LEVEL};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::dimension::{box_counts, dim_estimate, DimEstimate, DEFAULT_DROP};
use crate::dyadic::{dyadic_content, CubeId, GridSet};
use crate::error::{Error, Result};
use crate::measures::{
    default_lower_constant, frostman_build, heavy_light_split, verify_frostman_lower, verify_frostman_upper,
    GridMeasure,
};
use crate::transforms::{exceptional_directions, Direction};
use crate::visibility::{
    badline_mass_audit, badline_projection_content, classify_lines, good_line_cover_check, visible_cells_general,
};

#[derive(Clone, Debug, Serialize)]
pub struct FrostmanSummary {
    pub s: f64,
    pub total_mass: f64,
    pub worst_dyadic_ratio: f64,
    pub dyadic_violations: usize,
    pub worst_ball_ratio: f64,
    pub ball_constant: f64,
    pub ball_violations: usize,
    pub lower_constant: f64,
    pub lower_min_ratio: Option<f64>,
    pub lower_violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionRecord {
    pub direction: Vec<f64>,
    pub visible_cells: usize,
    pub dim: Option<f64>,
    pub stderr: Option<f64>,
    pub exceptional: bool,
    /// Largest directional energy over the coarse cubes.
    pub max_energy: f64,
    pub bad_lines: usize,
    pub audit_min_slack: Option<f64>,
    pub audit_violations: usize,
    pub cover_max_count: usize,
    pub cover_bound: f64,
    pub cover_passed: bool,
    /// Content at `n − 1 − τ` of the projected bad lines.
    pub badline_content: f64,
    /// Content at `n − τ` of the visible cover; omitted for exceptional
    /// directions.
    pub visible_content: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub directions: usize,
    pub mean_dim: Option<f64>,
    pub max_dim: Option<f64>,
    pub set_dim: Option<f64>,
    pub flagged_fraction: f64,
    /// `C·δ^ε` with the calibrated constant.
    pub flagged_bound: f64,
    /// `δ^{1/4}`, the reference for `badline_content`.
    pub badline_reference: f64,
    /// `δ^{ε/2}`, the reference for `visible_content`.
    pub visible_reference: f64,
    pub cover_passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub params: ExperimentParams,
    pub set_cells: usize,
    pub frostman: FrostmanSummary,
    pub records: Vec<DirectionRecord>,
    pub summary: Summary,
    /// Violations of exact invariants; any entry is a failed run.
    pub hard_failures: Vec<String>,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.hard_failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Columns `e_1..e_n, visible_cells, dim, stderr, exceptional,
    /// badline_content, visible_content`; missing values are empty fields.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (1..=self.params.n).map(|i| format!("e_{i}")).collect();
        header.extend(
            ["visible_cells", "dim", "stderr", "exceptional", "badline_content", "visible_content"].map(String::from),
        );
        w.write_record(&header).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let mut row: Vec<String> = r.direction.iter().map(|x| x.to_string()).collect();
            row.push(r.visible_cells.to_string());
            row.push(opt(r.dim));
            row.push(opt(r.stderr));
            row.push(r.exceptional.to_string());
            row.push(r.badline_content.to_string());
            row.push(opt(r.visible_content));
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invariant(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invariant(format!("csv: {e}"))
}

/// Box-dimension estimate over the ladder `0..=J` with the default drop;
/// `None` when there are too few occupied levels.
pub fn ladder_dimension(set: &GridSet) -> Result<Option<DimEstimate>> {
    let ladder = box_counts(set, 0..=set.level())?;
    match dim_estimate(&ladder, DEFAULT_DROP) {
        Ok(d) => Ok(Some(d)),
        Err(Error::InsufficientPoints(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Visible cells along `e` and the dimension estimate of their ancestors.
pub fn visible_dimension(set: &GridSet, e: &Direction, net_level: u32) -> Result<(GridSet, Option<DimEstimate>)> {
    let visible = visible_cells_general(set, e, net_level)?;
    let dim = ladder_dimension(&visible)?;
    Ok((visible, dim))
}

/// Run every stage on `set` for each direction of the config's net.
///
/// Hard failures (recorded, never panicking): Frostman upper or lower bound
/// violations and bad-line audit violations. The tube bound, the exceptional
/// fraction and the two content comparisons are recorded only.
pub fn run_certificate_check(params: &ExperimentParams, set: &GridSet) -> Result<ExperimentReport> {
    if set.dim() != params.n || set.level() != params.j {
        return Err(Error::GridMismatch(format!(
            "set lives at n = {}, J = {}; params expect n = {}, J = {}",
            set.dim(),
            set.level(),
            params.n,
            params.j
        )));
    }
    let scales = params.scales();
    let s_mu = params.frostman_exponent();
    let mu = frostman_build(set, s_mu)?;
    let upper = verify_frostman_upper(&mu, s_mu)?;
    let a = default_lower_constant(params.n);
    let lower = verify_frostman_lower(&mu, set, s_mu, a)?;
    let mut hard_failures = Vec::new();
    if !upper.passed() {
        hard_failures.push(format!(
            "Frostman upper bound: {} cube and {} ball violations",
            upper.violations.len(),
            upper.ball_violations
        ));
    }
    if !lower.passed() {
        hard_failures.push(format!("Frostman lower bound: {} violations", lower.violations.len()));
    }
    let frostman = FrostmanSummary {
        s: s_mu,
        total_mass: mu.total_mass(),
        worst_dyadic_ratio: upper.worst_dyadic_ratio,
        dyadic_violations: upper.violations.len(),
        worst_ball_ratio: upper.worst_ball_ratio,
        ball_constant: upper.ball_constant,
        ball_violations: upper.ball_violations,
        lower_constant: a,
        lower_min_ratio: lower.min_ratio.is_finite().then_some(lower.min_ratio),
        lower_violations: lower.violations.len(),
    };

    let split = heavy_light_split(&mu, params.heavy_threshold);
    let heavy_map = split.heavy_by_ancestor(params.coarse_level);
    let coarse = set.ancestors(params.coarse_level)?;
    let mu_q: BTreeMap<CubeId, GridMeasure> = coarse.iter().map(|q| (*q, mu.restrict(q))).collect();
    let family: Vec<GridMeasure> = mu_q.values().cloned().collect();

    let dirs = Direction::net(params.n, params.directions)?;
    let exceptional = exceptional_directions(
        &family,
        &dirs,
        params.energy_threshold,
        params.s,
        params.cutoff,
        params.steps,
    )?;
    let root = CubeId::root(params.n)?;
    let s_proj = params.n as f64 - 1.0 - params.tau;
    let records: Vec<(DirectionRecord, Vec<String>)> = dirs
        .par_iter()
        .enumerate()
        .map(|(k, e)| {
            let (visible, dim) = visible_dimension(set, e, params.net_level)?;
            let cl = classify_lines(set, &coarse, &heavy_map, e, &scales, params.net_level)?;
            let cover = good_line_cover_check(
                &visible,
                &cl,
                &split.heavy,
                &scales,
                params.calibration.good_line_constant,
            )?;
            let audit = badline_mass_audit(&mu_q, &cl, &scales)?;
            let badline_content = badline_projection_content(&cl, s_proj)?.union;
            let flagged = exceptional.flags[k];
            let visible_content = if flagged {
                None
            } else {
                Some(dyadic_content(&visible, s_mu, &root)?)
            };
            let mut failures = Vec::new();
            if !audit.passed() {
                failures.push(format!(
                    "bad-line audit: {} violations in direction {:?}",
                    audit.violations.len(),
                    e.e()
                ));
            }
            Ok((
                DirectionRecord {
                    direction: e.e().to_vec(),
                    visible_cells: visible.len(),
                    dim: dim.map(|d| d.slope),
                    stderr: dim.map(|d| d.stderr),
                    exceptional: flagged,
                    max_energy: exceptional.max_energy[k],
                    bad_lines: audit.bad_lines,
                    audit_min_slack: audit.min_slack,
                    audit_violations: audit.violations.len(),
                    cover_max_count: cover.max_count,
                    cover_bound: cover.bound,
                    cover_passed: cover.passed,
                    badline_content,
                    visible_content,
                },
                failures,
            ))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(records.len());
    for (r, f) in records {
        hard_failures.extend(f);
        out.push(r);
    }

    let dims: Vec<f64> = out.iter().filter_map(|r| r.dim).collect();
    let summary = Summary {
        directions: out.len(),
        mean_dim: (!dims.is_empty()).then(|| dims.iter().sum::<f64>() / dims.len() as f64),
        max_dim: dims.iter().copied().reduce(f64::max),
        set_dim: ladder_dimension(set)?.map(|d| d.slope),
        flagged_fraction: exceptional.fraction,
        flagged_bound: params.calibration.exceptional_constant * params.delta().powf(params.epsilon),
        badline_reference: params.delta().powf(0.25),
        visible_reference: params.delta().powf(params.epsilon / 2.0),
        cover_passed: out.iter().all(|r| r.cover_passed),
    };
    Ok(ExperimentReport {
        params: params.clone(),
        set_cells: set.len(),
        frostman,
        records: out,
        summary,
        hard_failures,
    })
}

/// Files written by [`run_visibility_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Generate the configured set, run the direction sweep, and write
/// `experiment.csv` and `experiment.json` into `out_dir`.
pub fn run_visibility_experiment(config: &Config, out_dir: &Path) -> Result<ExperimentOutput> {
    let set = config.generate()?;
    let report = run_certificate_check(&config.params, &set)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv = out_dir.join("experiment.csv");
    let json = out_dir.join("experiment.json");
    std::fs::write(&csv, report.to_csv()?).map_err(|e| Error::io(&csv, e))?;
    std::fs::write(&json, report.to_json()).map_err(|e| Error::io(&json, e))?;
    Ok(ExperimentOutput { report, csv, json })
}
