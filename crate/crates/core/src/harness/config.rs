use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::metrics2d::{Background, EvalMode, MissingPolicy};
use crate::occluder::DatasetConfig;
use crate::poses::ViewSetKind;

pub const CONFIG_VERSION: u32 = 1;

/// Parameters of one command. Input paths are stored exactly as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    BuildLibrary {
        renders: PathBuf,
        alpha_threshold: u8,
    },
    GenOcclusions {
        input: PathBuf,
        library: PathBuf,
        dataset: DatasetConfig,
    },
    MakeOccnvs {
        input: PathBuf,
        library: PathBuf,
        dataset: DatasetConfig,
    },
    GenPoses {
        set: ViewSetKind,
        radius: f64,
        reference_azimuth_deg: f64,
        with_matrices: bool,
    },
    MaskPlan {
        b: usize,
        t: usize,
        l: usize,
        p_view: f64,
        row_ratio: f64,
        area_ratio: f64,
        epoch: u64,
        /// When set, one plan per row ratio instead of a single plan.
        sweep: Option<Vec<f64>>,
    },
    #[serde(rename = "eval-2d")]
    Eval2d {
        pred: PathBuf,
        gt: PathBuf,
        mode: EvalMode,
        background: Background,
        on_missing: MissingPolicy,
        import_scores: Option<PathBuf>,
    },
    #[serde(rename = "eval-3d")]
    Eval3d {
        pred: PathBuf,
        gt: PathBuf,
        dataset: String,
        n_ref_views: u32,
        pre_rotation_deg: f64,
        pre_rotation_axis: usize,
        points: usize,
        resolution: usize,
        squared: bool,
    },
    Report {
        inputs: Vec<PathBuf>,
        ref_views: Vec<u32>,
    },
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BuildLibrary { .. } => "build-library",
            Command::GenOcclusions { .. } => "gen-occlusions",
            Command::MakeOccnvs { .. } => "make-occnvs",
            Command::GenPoses { .. } => "gen-poses",
            Command::MaskPlan { .. } => "mask-plan",
            Command::Eval2d { .. } => "eval-2d",
            Command::Eval3d { .. } => "eval-3d",
            Command::Report { .. } => "report",
            Command::Selftest => "selftest",
        }
    }
}

/// Serialized into every run directory as `config.json`. The output root is
/// deliberately not part of it, so replays into another root match byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub workers: usize,
    #[serde(flatten)]
    pub command: Command,
}

impl RunConfig {
    pub fn new(command: Command, seed: u64, workers: usize) -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            seed,
            workers,
            command,
        }
    }
}
