use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::config::{Command, RunConfig};
use crate::harness::{csvio, report, selftest};
use crate::maskplan::{self, MaskPlan, MaskRatios, PlanDims};
use crate::metrics2d::{self, Eval2dOptions, SsimParams};
use crate::metrics3d::{self, Eval3dOptions};
use crate::occluder::{self, SampleStatus, SilhouetteLibrary, LIBRARY_MANIFEST};
use crate::poses::pose_to_matrix;

pub const CONFIG_FILE: &str = "config.json";
pub const LOG_FILE: &str = "run.log";
pub const STATUS_FILE: &str = "status.json";
pub const LIBRARY_DIR: &str = "library";
pub const DATASET_DIR: &str = "dataset";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitStatus {
    Success,
    Partial,
    Error,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Partial => 2,
            ExitStatus::Error => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusFile {
    pub command: String,
    pub status: ExitStatus,
    pub exit_code: i32,
    pub flagged: usize,
    pub message: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: ExitStatus,
    /// Run directory, or the output file for single-file commands.
    pub output: PathBuf,
    pub flagged: usize,
    pub summary: String,
}

/// What a command produced inside its run directory.
struct Produced {
    flagged: usize,
    outputs: Vec<String>,
    log: Vec<String>,
    summary: String,
}

fn run_dir_name(run_name: Option<&str>) -> String {
    match run_name {
        Some(n) => fsutil::sanitize_component(n),
        None => chrono::Utc::now().format("run-%Y%m%dT%H%M%SZ").to_string(),
    }
}

/// Picks a fresh directory under `root`. Explicit names must not exist yet;
/// timestamped names get a numeric suffix on collision.
fn fresh_dir(root: &Path, run_name: Option<&str>) -> Result<PathBuf> {
    let base = run_dir_name(run_name);
    let first = root.join(&base);
    if !first.exists() {
        return Ok(first);
    }
    if run_name.is_some() {
        return Err(Error::Config(format!("run directory {} already exists", first.display())));
    }
    (1..)
        .map(|i| root.join(format!("{base}-{i}")))
        .find(|p| !p.exists())
        .ok_or_else(|| Error::Config("no free run directory name".into()))
}

/// Accepts a library directory or a run directory holding `library/`.
pub fn resolve_library(path: &Path) -> PathBuf {
    if !path.join(LIBRARY_MANIFEST).is_file() && path.join(LIBRARY_DIR).join(LIBRARY_MANIFEST).is_file() {
        path.join(LIBRARY_DIR)
    } else {
        path.to_path_buf()
    }
}

/// Runs a command. Directory-producing commands build a staging directory
/// under `out` and rename it into place when done, so a run directory is
/// never observed half-written. `gen-poses` and `mask-plan` write the single
/// file (or sweep directory) named by `out` instead.
pub fn execute(cfg: &RunConfig, out: &Path, run_name: Option<&str>) -> Result<RunOutcome> {
    match &cfg.command {
        Command::GenPoses { .. } | Command::MaskPlan { .. } => execute_file(cfg, out),
        _ => execute_dir(cfg, out, run_name),
    }
}

fn execute_file(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let summary = match &cfg.command {
        Command::GenPoses {
            set,
            radius,
            reference_azimuth_deg,
            with_matrices,
        } => {
            let vs = set.build(*reference_azimuth_deg, *radius)?;
            fsutil::write_json_atomic(out, &vs)?;
            if *with_matrices {
                let m: Vec<[[f64; 4]; 4]> = vs.poses.iter().map(|p| pose_to_matrix(p).0).collect();
                fsutil::write_json_atomic(&matrices_path(out), &m)?;
            }
            format!("{} poses in view set {}", vs.len(), vs.name)
        }
        Command::MaskPlan {
            b,
            t,
            l,
            p_view,
            row_ratio,
            area_ratio,
            epoch,
            sweep,
        } => {
            let dims = PlanDims {
                batch: *b,
                views_per_sample: *t,
                feature_len: *l,
            };
            match sweep {
                Some(grid) => {
                    let paths = maskplan::sweep_ratios(grid, *area_ratio, *p_view, dims, cfg.seed, out)?;
                    format!("{} plans", paths.len())
                }
                None => {
                    let ratios = MaskRatios {
                        p_view: *p_view,
                        row_ratio: *row_ratio,
                        area_ratio: *area_ratio,
                    };
                    let plan = MaskPlan::generate(dims, ratios, cfg.seed, *epoch)?;
                    plan.write(out)?;
                    format!("{} of {} rows feature-masked", plan.selected_row_count(), dims.rows())
                }
            }
        }
        _ => unreachable!("directory command routed to execute_file"),
    };
    Ok(RunOutcome {
        status: ExitStatus::Success,
        output: out.to_path_buf(),
        flagged: 0,
        summary,
    })
}

/// `poses.json` -> `poses.matrices.json`
pub fn matrices_path(poses: &Path) -> PathBuf {
    let stem = poses.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    poses.with_file_name(format!("{stem}.matrices.json"))
}

fn execute_dir(cfg: &RunConfig, out: &Path, run_name: Option<&str>) -> Result<RunOutcome> {
    fsutil::create_dir_all(out)?;
    let final_dir = fresh_dir(out, run_name)?;
    let name = final_dir.file_name().unwrap().to_string_lossy().into_owned();
    let staging = out.join(format!(".{name}.partial"));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fsutil::create_dir_all(&staging)?;
    fsutil::write_json_atomic(&staging.join(CONFIG_FILE), cfg)?;

    let result = run_command(cfg, &staging);
    let (status, produced, message) = match result {
        Ok(p) => {
            let st = if p.flagged > 0 { ExitStatus::Partial } else { ExitStatus::Success };
            let msg = p.summary.clone();
            (st, Some(p), msg)
        }
        Err(e) => (ExitStatus::Error, None, e.to_string()),
    };
    let mut log = vec![format!("command: {}", cfg.command.name()), format!("seed: {}", cfg.seed)];
    if let Some(p) = &produced {
        log.extend(p.log.iter().cloned());
    }
    log.push(format!("status: {}", status_str(status)));
    log.push(format!("message: {message}"));
    let mut text = log.join("\n");
    text.push('\n');
    fsutil::write_atomic(&staging.join(LOG_FILE), text.as_bytes())?;
    let flagged = produced.as_ref().map_or(0, |p| p.flagged);
    let status_file = StatusFile {
        command: cfg.command.name().to_string(),
        status,
        exit_code: status.code(),
        flagged,
        message: message.clone(),
        outputs: produced.map(|p| p.outputs).unwrap_or_default(),
    };
    fsutil::write_json_atomic(&staging.join(STATUS_FILE), &status_file)?;
    fs::rename(&staging, &final_dir).map_err(|e| Error::io(&final_dir, e))?;
    Ok(RunOutcome {
        status,
        output: final_dir,
        flagged,
        summary: message,
    })
}

fn status_str(s: ExitStatus) -> &'static str {
    match s {
        ExitStatus::Success => "success",
        ExitStatus::Partial => "partial",
        ExitStatus::Error => "error",
    }
}

/// Re-executes a stored `config.json` into a new run directory.
pub fn rerun(config_path: &Path, out: &Path, run_name: Option<&str>) -> Result<RunOutcome> {
    let cfg: RunConfig = fsutil::read_json(config_path)?;
    execute(&cfg, out, run_name)
}

fn run_command(cfg: &RunConfig, dir: &Path) -> Result<Produced> {
    match &cfg.command {
        Command::BuildLibrary {
            renders,
            alpha_threshold,
        } => {
            let (lib, skipped) = SilhouetteLibrary::build_from_renders(renders, *alpha_threshold)?;
            let manifest = lib.save(&dir.join(LIBRARY_DIR))?;
            let mut log = vec![format!("silhouettes: {}", lib.len()), format!("library_hash: {}", manifest.library_hash)];
            log.extend(skipped.iter().map(|(p, why)| format!("skipped {p}: {why}")));
            Ok(Produced {
                flagged: 0,
                outputs: vec![LIBRARY_DIR.into()],
                log,
                summary: format!("{} silhouettes, {} renders skipped", lib.len(), skipped.len()),
            })
        }
        Command::GenOcclusions { input, library, dataset } | Command::MakeOccnvs { input, library, dataset } => {
            let rows = occluder::read_input_manifest(input)?;
            let lib = SilhouetteLibrary::load(&resolve_library(library))?;
            let samples = occluder::build_paired_dataset(
                &rows,
                &fsutil::parent_dir(input),
                &lib,
                dataset,
                cfg.seed,
                &dir.join(DATASET_DIR),
                cfg.workers,
            )?;
            let count = |s: SampleStatus| samples.iter().filter(|x| x.status == s).count();
            let occluded = samples.iter().filter(|s| s.occluded_flag).count();
            let flagged = samples.len() - count(SampleStatus::Ok);
            let log = vec![
                format!("rows: {}", samples.len()),
                format!("occluded: {occluded}"),
                format!("placement_failed: {}", count(SampleStatus::PlacementFailed)),
                format!("empty_object: {}", count(SampleStatus::EmptyObject)),
                format!("unreadable: {}", count(SampleStatus::Unreadable)),
            ];
            Ok(Produced {
                flagged,
                outputs: vec![DATASET_DIR.into()],
                log,
                summary: format!("{} rows, {occluded} occluded, {flagged} flagged", samples.len()),
            })
        }
        Command::Eval2d {
            pred,
            gt,
            mode,
            background,
            on_missing,
            import_scores,
        } => {
            let opts = Eval2dOptions {
                mode: *mode,
                background: *background,
                on_missing: *on_missing,
                ssim: SsimParams::default(),
                workers: cfg.workers,
            };
            let mut res = metrics2d::evaluate_2d(pred, gt, &opts)?;
            let mut log = Vec::new();
            if let Some(csv) = import_scores {
                let cols = metrics2d::import_scores(&mut res.records, csv)?;
                log.push(format!("imported: {}", cols.join(",")));
            }
            csvio::write(&dir.join(csvio::METRICS_2D), &csvio::metrics_2d_csv(&res.records)?)?;
            let mut outputs = vec![csvio::METRICS_2D.to_string()];
            outputs.extend(report::write_report(dir, Some(&res.records), None, &crate::harness::DEFAULT_REF_VIEWS)?);
            let flagged = res.flagged();
            log.push(format!("rows: {}", res.records.len()));
            log.push(format!("flagged: {flagged}"));
            log.extend(flagged_lines_2d(&res.records));
            Ok(Produced {
                flagged,
                outputs,
                log,
                summary: format!("{} rows, {flagged} flagged", res.records.len()),
            })
        }
        Command::Eval3d {
            pred,
            gt,
            dataset,
            n_ref_views,
            pre_rotation_deg,
            pre_rotation_axis,
            points,
            resolution,
            squared,
        } => {
            let opts = Eval3dOptions {
                dataset: dataset.clone(),
                n_ref_views: *n_ref_views,
                pre_rotation_deg: *pre_rotation_deg,
                pre_rotation_axis: *pre_rotation_axis,
                n_points: *points,
                resolution: *resolution,
                squared: *squared,
                seed: cfg.seed,
                workers: cfg.workers,
            };
            let res = metrics3d::evaluate_3d(pred, gt, &opts)?;
            csvio::write(&dir.join(csvio::METRICS_3D), &csvio::metrics_3d_csv(&res.records)?)?;
            let mut outputs = vec![csvio::METRICS_3D.to_string()];
            outputs.extend(report::write_report(dir, None, Some(&res.records), &crate::harness::DEFAULT_REF_VIEWS)?);
            let flagged = res.flagged();
            let mut log = vec![format!("rows: {}", res.records.len()), format!("flagged: {flagged}")];
            log.extend(
                res.records
                    .iter()
                    .filter(|r| r.status != metrics3d::MeshStatus::Ok)
                    .map(|r| format!("flagged {}/ref{}/{}: {}", r.dataset, r.n_ref_views, r.object_id, r.status.as_str())),
            );
            Ok(Produced {
                flagged,
                outputs,
                log,
                summary: format!("{} meshes, {flagged} flagged", res.records.len()),
            })
        }
        Command::Report { inputs, ref_views } => {
            let rows = report::collect_rows(inputs)?;
            let mut outputs = Vec::new();
            let r2 = (!rows.records_2d.is_empty()).then_some(rows.records_2d.as_slice());
            let r3 = (!rows.records_3d.is_empty()).then_some(rows.records_3d.as_slice());
            if let Some(r) = r2 {
                csvio::write(&dir.join(csvio::METRICS_2D), &csvio::metrics_2d_csv(r)?)?;
                outputs.push(csvio::METRICS_2D.to_string());
            }
            if let Some(r) = r3 {
                csvio::write(&dir.join(csvio::METRICS_3D), &csvio::metrics_3d_csv(r)?)?;
                outputs.push(csvio::METRICS_3D.to_string());
            }
            outputs.extend(report::write_report(dir, r2, r3, ref_views)?);
            let log = vec![
                format!("sources: {}", rows.sources.len()),
                format!("rows_2d: {}", rows.records_2d.len()),
                format!("rows_3d: {}", rows.records_3d.len()),
            ];
            Ok(Produced {
                flagged: 0,
                outputs,
                log,
                summary: format!("{} 2D rows, {} 3D rows", rows.records_2d.len(), rows.records_3d.len()),
            })
        }
        Command::Selftest => {
            let r = selftest::run_selftest(dir, cfg.seed, cfg.workers)?;
            let flagged = r.mismatches.len();
            let mut log = vec![format!("files_compared: {}", r.files_compared)];
            log.extend(r.mismatches.iter().map(|m| format!("mismatch: {m}")));
            Ok(Produced {
                flagged,
                outputs: vec![selftest::PASS1.into(), selftest::PASS2.into()],
                log,
                summary: if flagged == 0 {
                    format!("{} files byte-identical across passes", r.files_compared)
                } else {
                    format!("{flagged} differences between passes")
                },
            })
        }
        Command::GenPoses { .. } | Command::MaskPlan { .. } => {
            Err(Error::Config("single-file command has no run directory".into()))
        }
    }
}

fn flagged_lines_2d(records: &[metrics2d::MetricRecord]) -> Vec<String> {
    records
        .iter()
        .filter(|r| r.status != metrics2d::RowStatus::Ok)
        .map(|r| {
            format!(
                "flagged {}/{}/ref{}/{}: {}",
                r.dataset,
                r.object_id,
                r.n_ref_views,
                r.view_index,
                r.status.as_str()
            )
        })
        .collect()
}
