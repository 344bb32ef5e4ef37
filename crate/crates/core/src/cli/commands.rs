//! The four subcommands. Each writes its artifacts under an output directory
//! and returns a [`CommandError`] carrying the process exit code on failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, SkorokhodConfig};
use crate::analysis::{convergence_study, disk_tangential_endpoint, remark4_report, Remark4Report, Remark4Setup, RateTable};
use crate::error::Error;
use crate::io::{read_path_csv, write_output_csv, write_path_csv, write_solution_csv};
use crate::schemes::{run_scheme, RunMeta, SchemeOutput};
use crate::skorokhod::{check_lemma1, solve_skorokhod, Lemma1Report};
use crate::Point;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const REMARK4_SUBSTEPS: [usize; 5] = [64, 128, 256, 512, 1024];
pub const REMARK4_CELLS_PER_UNIT: [usize; 4] = [1, 2, 4, 8];

/// Machine-readable failure, printed as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandError {
    #[serde(skip)]
    pub code: i32,
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<u64>,
}

impl CommandError {
    pub fn config(e: &Error) -> Self {
        Self { code: EXIT_CONFIG, error: e.kind().into(), message: e.to_string(), path: None }
    }

    pub fn runtime(e: &Error, path: Option<u64>) -> Self {
        Self { code: EXIT_RUNTIME, error: e.kind().into(), message: e.to_string(), path }
    }

    /// Exit 2 for errors in the inputs, 3 for failures while computing.
    pub fn classify(e: &Error, path: Option<u64>) -> Self {
        match e {
            Error::Parse(_)
            | Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::StartOutsideDomain
            | Error::EmptyDomain(_)
            | Error::Io(_) => Self { path, ..Self::config(e) },
            _ => Self::runtime(e, path),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

type CmdResult<T> = std::result::Result<T, CommandError>;

fn io_err(e: std::io::Error) -> CommandError {
    CommandError::config(&Error::Io(e))
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
}

impl Provenance {
    fn new(command: &'static str, config_hash: String) -> Self {
        Self { tool: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION"), command, config_hash }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(io_err)
}

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err)
}

fn pool(jobs: usize) -> CmdResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CommandError::config(&Error::InvalidParameter(format!("thread pool: {e}"))))
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateRun {
    pub path: u64,
    pub file: String,
    pub driver_file: String,
    pub meta: RunMeta,
    pub k_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateSummary {
    pub provenance: Provenance,
    pub seed: u64,
    pub mesh: f64,
    pub n_paths: usize,
    pub runs: Vec<SimulateRun>,
}

/// One scheme run per path index. Writes `driver_NNNN.csv`,
/// `path_NNNN.csv` and `simulate.json`. Nothing is written when a run
/// fails; the lowest failing path index is reported.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> CmdResult<SimulateSummary> {
    let exp = cfg.experiment().map_err(|e| CommandError::classify(&e, None))?;
    let mesh = cfg.simulate_mesh();
    let results: Vec<CmdResult<(crate::driver::GridPath, SchemeOutput)>> = pool(jobs)?.install(|| {
        (0..exp.n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let run = || {
                    let z = exp.sample_driver(i)?;
                    let spec = exp.scheme_spec(mesh, &z)?;
                    let o = run_scheme(&exp.domain, &exp.coefficient, &exp.x0, &z, &spec)?;
                    Ok((z, o))
                };
                run().map_err(|e: Error| CommandError::runtime(&e, Some(i)))
            })
            .collect()
    });
    let outputs = results.into_iter().collect::<CmdResult<Vec<_>>>()?;
    fs::create_dir_all(out).map_err(io_err)?;
    let mut runs = Vec::with_capacity(outputs.len());
    for (i, (z, o)) in outputs.iter().enumerate() {
        let file = format!("path_{i:04}.csv");
        let driver_file = format!("driver_{i:04}.csv");
        write_output_csv(o, create(&out.join(&file))?).map_err(|e| CommandError::classify(&e, None))?;
        write_path_csv(z, create(&out.join(&driver_file))?).map_err(|e| CommandError::classify(&e, None))?;
        runs.push(SimulateRun { path: i as u64, file, driver_file, meta: o.meta.clone(), k_total: o.k_total() });
    }
    let summary = SimulateSummary {
        provenance: Provenance::new("simulate", cfg.hash()),
        seed: cfg.seed,
        mesh,
        n_paths: cfg.n_paths,
        runs,
    };
    write_json(&out.join("simulate.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SkorokhodSummary {
    pub provenance: Provenance,
    pub x0: Vec<f64>,
    pub pushes: usize,
    pub k_total: f64,
    pub lemma1: Lemma1Report,
}

/// Solves the Skorokhod problem for a driver CSV. Writes `solution.csv` and
/// `lemma1.json` (variation check over the whole horizon).
pub fn cmd_skorokhod(input: &Path, cfg_text: &str, out: &Path) -> CmdResult<SkorokhodSummary> {
    let cfg = SkorokhodConfig::from_toml(cfg_text).map_err(|e| CommandError::config(&e))?;
    let domain = cfg.domain.build().map_err(|e| CommandError::config(&e))?;
    let file = File::open(input).map_err(io_err)?;
    let y = read_path_csv(file).map_err(|e| CommandError::config(&e))?;
    let x0 = cfg.x0.as_deref().map(Point::from_column_slice).unwrap_or_else(|| y.values()[0].clone());
    let sol = solve_skorokhod(&domain, &y, &x0).map_err(|e| CommandError::classify(&e, None))?;
    let lemma1 = check_lemma1(&domain, &sol.y, &sol, &[(0.0, y.horizon())]).map_err(|e| CommandError::runtime(&e, None))?;
    fs::create_dir_all(out).map_err(io_err)?;
    write_solution_csv(&sol, create(&out.join("solution.csv"))?).map_err(|e| CommandError::classify(&e, None))?;
    let hash = hex::encode(<sha2::Sha256 as sha2::Digest>::digest(cfg_text.as_bytes()));
    let summary = SkorokhodSummary {
        provenance: Provenance::new("skorokhod", hash),
        x0: x0.iter().copied().collect(),
        pushes: sol.pushes.len(),
        k_total: *sol.k_variation.last().expect("nonempty"),
        lemma1,
    };
    write_json(&out.join("lemma1.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergeSummary {
    pub provenance: Provenance,
    pub table: RateTable,
}

/// Convergence study. Writes `rate_table.csv` and `rate_table.json`. Per-path
/// failures are recorded in the JSON, not fatal.
pub fn cmd_converge(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> CmdResult<ConvergeSummary> {
    let exp = cfg.experiment().map_err(|e| CommandError::classify(&e, None))?;
    let table = convergence_study(&exp, jobs).map_err(|e| CommandError::classify(&e, None))?;
    fs::create_dir_all(out).map_err(io_err)?;
    table.write_csv(create(&out.join("rate_table.csv"))?).map_err(|e| CommandError::classify(&e, None))?;
    let summary = ConvergeSummary { provenance: Provenance::new("converge", cfg.hash()), table };
    write_json(&out.join("rate_table.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct Remark4Summary {
    pub provenance: Provenance,
    /// Closed-form endpoint of the reflected Wong-Zakai limit.
    pub oracle_bar_endpoint: Vec<f64>,
    pub report: Remark4Report,
}

/// Tangential jump on the unit disk. Writes `remark4.json` and returns the
/// report; the caller prints it.
pub fn cmd_remark4(out: &Path) -> CmdResult<Remark4Summary> {
    let report = remark4_report(&Remark4Setup::disk(), &REMARK4_SUBSTEPS, &REMARK4_CELLS_PER_UNIT)
        .map_err(|e| CommandError::runtime(&e, None))?;
    fs::create_dir_all(out).map_err(io_err)?;
    let summary = Remark4Summary {
        provenance: Provenance::new("remark4", String::new()),
        oracle_bar_endpoint: disk_tangential_endpoint().iter().copied().collect(),
        report,
    };
    write_json(&out.join("remark4.json"), &summary)?;
    Ok(summary)
}

pub fn render_remark4(s: &Remark4Summary) -> String {
    let r = &s.report;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
    let mut lines = vec![
        format!("projection endpoint  ({})", fmt(&r.projection_endpoint)),
        format!("wong-zakai endpoint   ({})", fmt(&r.bar_endpoint)),
        format!("closed-form endpoint  ({})", fmt(&s.oracle_bar_endpoint)),
        format!("gap                   {:.6}", r.gap),
        "cells/unit  substeps  gap".to_string(),
    ];
    for row in r.mesh_rows.iter().chain(&r.substep_rows) {
        lines.push(format!("{:>10}  {:>8}  {:.6}", row.cells_per_unit, row.substeps_bar, row.gap));
    }
    lines.push(format!("gap spread {:.2e} (tol {:.0e}): {}", r.gap_spread, r.tolerance, if r.stable { "stable" } else { "unstable" }));
    lines.join("\n")
}

pub fn default_out(cfg: Option<&ExperimentConfig>) -> PathBuf {
    PathBuf::from(cfg.map(|c| c.output_dir.as_str()).unwrap_or("out"))
}
