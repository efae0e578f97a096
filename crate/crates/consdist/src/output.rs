//! File emission for runs and the six-cell ablation grid.
//!
//! All files are UTF-8 with `\n` line endings, `.` decimal separators, and
//! fixed header rows; numbers use the shortest round-trip decimal form, so
//! emitting the same `RunResult` twice produces byte-identical files.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::distill::{run_distillation, Mode, RunConfig, RunResult};
use crate::error::Error as LibError;
use crate::geometry::CameraPose;
use crate::toyworld::similarity_profile;

/// Emission failures: file I/O, or a run inside `ablate` failing.
#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Run(#[from] LibError),
}

/// Executes one run. Pure delegation; all file output happens in
/// [`emit`] / [`emit_profile`].
pub fn run(config: &RunConfig) -> Result<RunResult, LibError> {
    run_distillation(config)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, OutputError> {
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn profile_csv(result: &RunResult) -> String {
    let reference = CameraPose::from_degrees(0.0).expect("finite");
    let samples = result.world.bins().max(8);
    let mut out = String::from("azimuth,similarity\n");
    for (azimuth, similarity) in similarity_profile(&result.world, reference, samples) {
        out.push_str(&format!("{azimuth},{similarity}\n"));
    }
    out
}

fn manifest_text(result: &RunResult) -> String {
    let m = &result.manifest;
    let c = &m.config;
    let w = c.weights;
    format!(
        "version = {}\nseed = {}\niterations = {}\nbatch = {}\nkappa = {}\n\
         w1 = {}\nw2 = {}\nw3 = {}\nbeta = {}\nmode = {}\nlp_enabled = {}\n\
         bins = {}\ndims = {}\nlr = {}\nsnapshot_interval = {}\n\
         final_score_loss = {}\nfinal_lp_value = {}\nfinal_janus_metric = {}\n\
         final_violations = {}\n",
        m.version,
        m.seed,
        c.iterations,
        c.batch,
        c.kappa,
        w.w1(),
        w.w2(),
        w.w3(),
        c.beta,
        c.mode,
        c.lp_enabled,
        c.bins,
        c.dims,
        c.lr,
        c.snapshot_interval,
        m.final_score_loss,
        m.final_lp_value,
        m.final_janus_metric,
        m.final_violations,
    )
}

/// Writes `loss_trace.csv`, `profile.csv`, `metrics.csv`, `world.csv`, and
/// `manifest.txt` into `out_dir` (created if absent). Returns the manifest
/// path.
pub fn emit(result: &RunResult, out_dir: &Path) -> Result<PathBuf, OutputError> {
    ensure_dir(out_dir)?;

    let mut trace = String::from("iteration,score_loss,lp_value\n");
    for (i, point) in result.trace.iter().enumerate() {
        trace.push_str(&format!("{},{},{}\n", i + 1, point.score_loss, point.lp_value));
    }
    write_file(out_dir, "loss_trace.csv", &trace)?;

    write_file(out_dir, "profile.csv", &profile_csv(result))?;

    let mut metrics = String::from("iteration,janus_metric,violations\n");
    for s in &result.snapshots {
        metrics.push_str(&format!("{},{},{}\n", s.iteration, s.janus_metric, s.violations));
    }
    write_file(out_dir, "metrics.csv", &metrics)?;

    let mut world = String::from("bin,dim,value\n");
    for k in 0..result.world.bins() {
        for (d, value) in result.world.row(k).iter().enumerate() {
            world.push_str(&format!("{k},{d},{value}\n"));
        }
    }
    write_file(out_dir, "world.csv", &world)?;

    write_file(out_dir, "manifest.txt", &manifest_text(result))
}

/// Writes only `profile.csv` into `out_dir`. Returns its path.
pub fn emit_profile(result: &RunResult, out_dir: &Path) -> Result<PathBuf, OutputError> {
    ensure_dir(out_dir)?;
    write_file(out_dir, "profile.csv", &profile_csv(result))
}

/// The six ablation cells, in emission order.
const CELLS: [(Mode, bool); 6] = [
    (Mode::Baseline, false),
    (Mode::Baseline, true),
    (Mode::PerpNeg, false),
    (Mode::PerpNeg, true),
    (Mode::Vdm, false),
    (Mode::Vdm, true),
];

/// Runs the full mode x partial-order grid, every cell with the same seed
/// so the camera stream is identical across cells, and writes
/// `ablation.csv`. Returns its path.
pub fn ablate(base: &RunConfig, out_dir: &Path) -> Result<PathBuf, OutputError> {
    if base.batch < 2 {
        return Err(OutputError::Run(LibError::ConfigInvalid(
            "batch must be at least 2 for ablation (half the grid enables the partial-order loss)"
                .into(),
        )));
    }
    ensure_dir(out_dir)?;
    let mut csv = String::from("mode,lp_enabled,janus_metric,lp_value,violations\n");
    for (mode, lp_enabled) in CELLS {
        let cell = RunConfig { mode, lp_enabled, ..base.clone() };
        let result = run_distillation(&cell)?;
        let m = &result.manifest;
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            mode, lp_enabled, m.final_janus_metric, m.final_lp_value, m.final_violations
        ));
    }
    write_file(out_dir, "ablation.csv", &csv)
}
