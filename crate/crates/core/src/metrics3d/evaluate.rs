use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::{load_mesh, normalize_mesh};
use super::pointcloud::{chamfer_points, sample_surface};
use super::voxel::{volume_iou, DEFAULT_RESOLUTION};
use crate::error::{Error, Result};
use crate::parallel;
use crate::seed::SeedKey;

pub const DEFAULT_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eval3dOptions {
    pub dataset: String,
    /// Used when the prediction directory has no `ref<N>` subdirectories.
    pub n_ref_views: u32,
    /// Rigid rotation applied to predictions before normalization.
    pub pre_rotation_deg: f64,
    /// 0 = x, 1 = y, 2 = z.
    pub pre_rotation_axis: usize,
    pub n_points: usize,
    pub resolution: usize,
    pub squared: bool,
    pub seed: u64,
    pub workers: usize,
}

impl Default for Eval3dOptions {
    fn default() -> Self {
        Eval3dOptions {
            dataset: "default".into(),
            n_ref_views: 1,
            pre_rotation_deg: 0.0,
            pre_rotation_axis: 2,
            n_points: DEFAULT_POINTS,
            resolution: DEFAULT_RESOLUTION,
            squared: false,
            seed: 0,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MeshStatus {
    Ok,
    MissingPrediction,
    MissingGroundTruth,
    PredLoadError,
    GtLoadError,
    MetricError,
}

impl MeshStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MeshStatus::Ok => "ok",
            MeshStatus::MissingPrediction => "missing_prediction",
            MeshStatus::MissingGroundTruth => "missing_ground_truth",
            MeshStatus::PredLoadError => "pred_load_error",
            MeshStatus::GtLoadError => "gt_load_error",
            MeshStatus::MetricError => "metric_error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            MeshStatus::Ok,
            MeshStatus::MissingPrediction,
            MeshStatus::MissingGroundTruth,
            MeshStatus::PredLoadError,
            MeshStatus::GtLoadError,
            MeshStatus::MetricError,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshRecord {
    pub dataset: String,
    pub object_id: String,
    pub n_ref_views: u32,
    pub chamfer: Option<f64>,
    pub volume_iou: Option<f64>,
    /// `None` when the prediction could not be loaded.
    pub watertight_pred: Option<bool>,
    pub status: MeshStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate3d {
    pub dataset: String,
    pub n_ref_views: u32,
    pub mean_chamfer: f64,
    pub mean_volume_iou: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct Eval3dOutput {
    pub records: Vec<MeshRecord>,
    pub aggregates: Vec<Aggregate3d>,
}

impl Eval3dOutput {
    pub fn flagged(&self) -> usize {
        self.records.iter().filter(|r| r.status != MeshStatus::Ok).count()
    }
}

/// Dataset means per (dataset, n_ref_views), summed in sorted key order.
pub fn aggregate_3d(records: &[MeshRecord]) -> Vec<Aggregate3d> {
    let mut ok: Vec<&MeshRecord> = records.iter().filter(|r| r.status == MeshStatus::Ok).collect();
    ok.sort_by(|a, b| (&a.dataset, a.n_ref_views, &a.object_id).cmp(&(&b.dataset, b.n_ref_views, &b.object_id)));
    let mut groups: BTreeMap<(String, u32), (f64, f64, usize)> = BTreeMap::new();
    for r in ok {
        let g = groups.entry((r.dataset.clone(), r.n_ref_views)).or_insert((0.0, 0.0, 0));
        g.0 += r.chamfer.unwrap_or(f64::NAN);
        g.1 += r.volume_iou.unwrap_or(f64::NAN);
        g.2 += 1;
    }
    groups
        .into_iter()
        .map(|((dataset, n_ref_views), (c, v, n))| Aggregate3d {
            dataset,
            n_ref_views,
            mean_chamfer: c / n as f64,
            mean_volume_iou: v / n as f64,
            count: n,
        })
        .collect()
}

fn is_mesh_file(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("obj") | Some("ply")
    )
}

/// Mesh files in `dir` keyed by file stem.
fn mesh_index(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_mesh_file(&path) {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
            if let Some(prev) = out.insert(stem.clone(), path.clone()) {
                return Err(Error::Config(format!(
                    "two meshes share object id {stem:?}: {} and {}",
                    prev.display(),
                    path.display()
                )));
            }
        }
    }
    Ok(out)
}

/// `ref<N>` subdirectories, or the directory itself under `default_n`.
fn prediction_groups(pred_dir: &Path, default_n: u32) -> Result<Vec<(u32, PathBuf)>> {
    let mut groups = Vec::new();
    for entry in fs::read_dir(pred_dir).map_err(|e| Error::io(pred_dir, e))? {
        let path = entry.map_err(|e| Error::io(pred_dir, e))?.path();
        if path.is_dir() {
            if let Some(n) = path
                .file_name()
                .and_then(|s| s.to_str())
                .and_then(|s| s.strip_prefix("ref"))
                .and_then(|s| s.parse::<u32>().ok())
            {
                groups.push((n, path));
            }
        }
    }
    if groups.is_empty() {
        groups.push((default_n, pred_dir.to_path_buf()));
    }
    groups.sort();
    Ok(groups)
}

struct Job {
    n_ref_views: u32,
    object_id: String,
    pred: Option<PathBuf>,
    gt: Option<PathBuf>,
}

fn evaluate_job(job: &Job, opts: &Eval3dOptions) -> MeshRecord {
    let mut rec = MeshRecord {
        dataset: opts.dataset.clone(),
        object_id: job.object_id.clone(),
        n_ref_views: job.n_ref_views,
        chamfer: None,
        volume_iou: None,
        watertight_pred: None,
        status: MeshStatus::Ok,
    };
    let (pred_path, gt_path) = match (&job.pred, &job.gt) {
        (Some(p), Some(g)) => (p, g),
        (None, _) => {
            rec.status = MeshStatus::MissingPrediction;
            return rec;
        }
        (_, None) => {
            rec.status = MeshStatus::MissingGroundTruth;
            return rec;
        }
    };
    let pred = match load_mesh(pred_path) {
        Ok(m) => m,
        Err(_) => {
            rec.status = MeshStatus::PredLoadError;
            return rec;
        }
    };
    rec.watertight_pred = Some(pred.is_watertight());
    let gt = match load_mesh(gt_path) {
        Ok(m) => m,
        Err(_) => {
            rec.status = MeshStatus::GtLoadError;
            return rec;
        }
    };
    let pred = if opts.pre_rotation_deg != 0.0 {
        pred.rotated(opts.pre_rotation_axis, opts.pre_rotation_deg)
    } else {
        pred
    };
    let metrics = (|| -> Result<(f64, f64)> {
        let pred = normalize_mesh(&pred)?;
        let gt = normalize_mesh(&gt)?;
        // Both meshes share the sampling stream for an object, so identical
        // inputs yield identical point sets.
        let key = SeedKey::new(opts.seed).derive("surface").derive(&job.object_id);
        let ps = sample_surface(&pred, opts.n_points, key)?;
        let gs = sample_surface(&gt, opts.n_points, key)?;
        let cd = chamfer_points(&ps.points, &gs.points, opts.squared)?;
        let iou = volume_iou(&pred, &gt, opts.resolution)?;
        Ok((cd, iou))
    })();
    match metrics {
        Ok((cd, iou)) => {
            rec.chamfer = Some(cd);
            rec.volume_iou = Some(iou);
        }
        Err(_) => rec.status = MeshStatus::MetricError,
    }
    rec
}

/// Pairs predictions with ground truth by object id (file stem) and scores
/// each pair after normalizing both meshes.
pub fn evaluate_3d(pred_dir: &Path, gt_dir: &Path, opts: &Eval3dOptions) -> Result<Eval3dOutput> {
    if opts.n_points == 0 {
        return Err(Error::Config("point count must be >= 1".into()));
    }
    let gt = mesh_index(gt_dir)?;
    let mut jobs = Vec::new();
    for (n_ref_views, dir) in prediction_groups(pred_dir, opts.n_ref_views)? {
        let preds = mesh_index(&dir)?;
        let mut ids: Vec<&String> = gt.keys().chain(preds.keys()).collect();
        ids.sort();
        ids.dedup();
        for id in ids {
            jobs.push(Job {
                n_ref_views,
                object_id: id.clone(),
                pred: preds.get(id).cloned(),
                gt: gt.get(id).cloned(),
            });
        }
    }
    if jobs.iter().all(|j| j.pred.is_none() || j.gt.is_none()) {
        return Err(Error::NoEvaluablePairs);
    }
    let pool = parallel::pool(opts.workers)?;
    let records: Vec<MeshRecord> = pool.install(|| jobs.par_iter().map(|j| evaluate_job(j, opts)).collect());
    let aggregates = aggregate_3d(&records);
    Ok(Eval3dOutput { records, aggregates })
}
