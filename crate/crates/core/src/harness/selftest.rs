//! Runs every subcommand twice on generated fixtures and compares the two
//! output trees byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::harness::config::{Command, RunConfig};
use crate::harness::run::{self, ExitStatus, CONFIG_FILE};
use crate::harness::{fixtures, DEFAULT_REF_VIEWS};
use crate::maskplan::{DEFAULT_AREA_RATIO, DEFAULT_P_VIEW, DEFAULT_ROW_RATIO, DEFAULT_ROW_RATIO_GRID};
use crate::metrics2d::{Background, EvalMode, MissingPolicy};
use crate::occluder::{DatasetConfig, DEFAULT_ALPHA_THRESHOLD};
use crate::poses::ViewSetKind;

pub const FIXTURES: &str = "fixtures";
pub const PASS1: &str = "pass1";
pub const PASS2: &str = "pass2";
const WORK: &str = "work";

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub files_compared: usize,
    pub mismatches: Vec<String>,
}

/// The command sequence of one pass, as `(run name, command)`. Runs named
/// after earlier runs consume their outputs.
fn steps(fx: &fixtures::FixturePaths, root: &Path) -> Vec<(String, Command)> {
    let occnvs = DatasetConfig {
        p_occlude: 1.0,
        split: "test".into(),
        ..DatasetConfig::default()
    };
    let eval2d = |mode| Command::Eval2d {
        pred: fx.pred_2d.clone(),
        gt: fx.gt_2d.clone(),
        mode,
        background: Background::default(),
        on_missing: MissingPolicy::Skip,
        import_scores: None,
    };
    let mut s = vec![
        (
            "build-library".to_string(),
            Command::BuildLibrary {
                renders: fx.renders.clone(),
                alpha_threshold: DEFAULT_ALPHA_THRESHOLD,
            },
        ),
        (
            "gen-occlusions".into(),
            Command::GenOcclusions {
                input: fx.inputs.clone(),
                library: root.join("build-library"),
                dataset: DatasetConfig::default(),
            },
        ),
        (
            "make-occnvs".into(),
            Command::MakeOccnvs {
                input: fx.inputs.clone(),
                library: root.join("build-library"),
                dataset: occnvs,
            },
        ),
    ];
    for set in [ViewSetKind::Neus36, ViewSetKind::Zero123pp, ViewSetKind::Enhanced42] {
        s.push((
            format!("poses/{}.json", set.name()),
            Command::GenPoses {
                set,
                radius: 1.5,
                reference_azimuth_deg: 0.0,
                with_matrices: true,
            },
        ));
    }
    let plan = |sweep| Command::MaskPlan {
        b: 8,
        t: 6,
        l: 196,
        p_view: DEFAULT_P_VIEW,
        row_ratio: DEFAULT_ROW_RATIO,
        area_ratio: DEFAULT_AREA_RATIO,
        epoch: 0,
        sweep,
    };
    s.push(("plans/plan.json".into(), plan(None)));
    s.push(("plans/sweep".into(), plan(Some(DEFAULT_ROW_RATIO_GRID.to_vec()))));
    s.push(("eval-2d-nvs".into(), eval2d(EvalMode::Nvs)));
    s.push(("eval-2d-amodal".into(), eval2d(EvalMode::Amodal)));
    s.push((
        "eval-3d".into(),
        Command::Eval3d {
            pred: fx.pred_3d.clone(),
            gt: fx.gt_3d.clone(),
            dataset: "synth3d".into(),
            n_ref_views: 1,
            pre_rotation_deg: 0.0,
            pre_rotation_axis: 2,
            points: 20_000,
            resolution: 48,
            squared: false,
        },
    ));
    s.push((
        "report".into(),
        Command::Report {
            inputs: vec![root.join("eval-2d-nvs"), root.join("eval-3d")],
            ref_views: DEFAULT_REF_VIEWS.to_vec(),
        },
    ));
    s
}

fn run_pass(fx: &fixtures::FixturePaths, root: &Path, seed: u64, workers: usize) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    fsutil::create_dir_all(root)?;
    for (name, command) in steps(fx, root) {
        let cfg = RunConfig::new(command, seed, workers);
        let outcome = match &cfg.command {
            Command::GenPoses { .. } | Command::MaskPlan { .. } => run::execute(&cfg, &root.join(&name), None),
            _ => run::execute(&cfg, root, Some(&name)),
        };
        match outcome {
            Ok(o) if o.status == ExitStatus::Error => failures.push(format!("{name}: {}", o.summary)),
            Ok(_) => {}
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    // Replaying a stored config must reproduce the original run exactly.
    let replay = run::rerun(&root.join("gen-occlusions").join(CONFIG_FILE), root, Some("gen-occlusions-rerun"));
    if let Err(e) = replay {
        failures.push(format!("rerun: {e}"));
    } else {
        failures.extend(diff_trees(&root.join("gen-occlusions"), &root.join("gen-occlusions-rerun"))?.1);
    }
    Ok(failures)
}

/// Compares two directory trees. Returns the number of files compared and a
/// description of every difference.
pub fn diff_trees(a: &Path, b: &Path) -> Result<(usize, Vec<String>)> {
    let fa = fsutil::list_files_recursive(a)?;
    let fb = fsutil::list_files_recursive(b)?;
    let mut diffs = Vec::new();
    for p in fa.iter().filter(|p| !fb.contains(p)) {
        diffs.push(format!("only in {}: {}", a.display(), p.display()));
    }
    for p in fb.iter().filter(|p| !fa.contains(p)) {
        diffs.push(format!("only in {}: {}", b.display(), p.display()));
    }
    let mut compared = 0;
    for p in fa.iter().filter(|p| fb.contains(p)) {
        let (x, y) = (a.join(p), b.join(p));
        let bx = fs::read(&x).map_err(|e| Error::io(&x, e))?;
        let by = fs::read(&y).map_err(|e| Error::io(&y, e))?;
        compared += 1;
        if bx != by {
            diffs.push(format!("content differs: {}", p.display()));
        }
    }
    Ok((compared, diffs))
}

/// Writes fixtures under `dir/fixtures`, runs both passes and diffs them.
pub fn run_selftest(dir: &Path, seed: u64, workers: usize) -> Result<SelftestReport> {
    let fx = fixtures::write_all(&dir.join(FIXTURES), seed)?;
    let mut report = SelftestReport::default();
    // Both passes run at the same path so stored configs can match exactly.
    let work: PathBuf = dir.join(WORK);
    for pass in [PASS1, PASS2] {
        let failures = run_pass(&fx, &work, seed, workers)?;
        report.mismatches.extend(failures.into_iter().map(|m| format!("{pass}: {m}")));
        let dest = dir.join(pass);
        fs::rename(&work, &dest).map_err(|e| Error::io(&dest, e))?;
    }
    let (n, diffs) = diff_trees(&dir.join(PASS1), &dir.join(PASS2))?;
    report.files_compared = n;
    report.mismatches.extend(diffs);
    Ok(report)
}
