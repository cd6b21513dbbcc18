//! PSNR and SSIM over RGB images, with RGBA compositing and the per-view /
//! per-group evaluation used for NVS and amodal-completion tables.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::parallel;
use crate::raster::{read_rgba_png, RgbImage, RgbaImage};

/// `α·fg + (1−α)·bg` per channel with integer round-half-up.
pub fn composite_background(image: &RgbaImage, background: [u8; 3]) -> RgbImage {
    let mut out = Vec::with_capacity(image.width() as usize * image.height() as usize * 3);
    for p in image.pixels().chunks_exact(4) {
        let a = p[3] as u32;
        for c in 0..3 {
            let num = a * p[c] as u32 + (255 - a) * background[c] as u32;
            out.push(((2 * num + 255) / 510) as u8);
        }
    }
    RgbImage::new(image.width(), image.height(), out).expect("dimensions come from a valid image")
}

fn check_same_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Mean squared error over all channels.
pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    check_same_dims(a, b)?;
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.pixels().len() as f64)
}

/// PSNR in dB. Identical images give `f64::INFINITY`.
pub fn psnr(a: &RgbImage, b: &RgbImage, max_val: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_val * max_val / m).log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: 255.0,
        }
    }
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - c;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Valid-region separable filtering of a single plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let ow = w - n + 1;
    let oh = h - n + 1;
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|j| k[j] * horiz[(y + j) * ow + x]).sum();
        }
    }
    out
}

/// Mean local SSIM with a Gaussian window over the valid region, averaged
/// over the three channels.
pub fn ssim(a: &RgbImage, b: &RgbImage, params: &SsimParams) -> Result<f64> {
    check_same_dims(a, b)?;
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < params.window || h < params.window {
        return Err(Error::DimensionMismatch(format!(
            "image {w}x{h} smaller than the {}x{} SSIM window",
            params.window, params.window
        )));
    }
    let kernel = gaussian_kernel(params.window, params.sigma);
    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);
    let mut total = 0.0;
    for ch in 0..3 {
        let pa: Vec<f64> = a.pixels().iter().skip(ch).step_by(3).map(|&v| v as f64).collect();
        let pb: Vec<f64> = b.pixels().iter().skip(ch).step_by(3).map(|&v| v as f64).collect();
        let aa: Vec<f64> = pa.iter().map(|v| v * v).collect();
        let bb: Vec<f64> = pb.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let mu_a = filter_valid(&pa, w, h, &kernel);
        let mu_b = filter_valid(&pb, w, h, &kernel);
        let e_aa = filter_valid(&aa, w, h, &kernel);
        let e_bb = filter_valid(&bb, w, h, &kernel);
        let e_ab = filter_valid(&ab, w, h, &kernel);
        let mut sum = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            sum += num / den;
        }
        total += sum / mu_a.len() as f64;
    }
    Ok(total / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Novel target views only.
    Nvs,
    /// Predictions at the input viewpoints.
    Amodal,
}

impl FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nvs" => Ok(EvalMode::Nvs),
            "amodal" => Ok(EvalMode::Amodal),
            o => Err(Error::Config(format!("unknown eval mode {o:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    Error,
    Skip,
}

impl FromStr for MissingPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(MissingPolicy::Error),
            "skip" => Ok(MissingPolicy::Skip),
            o => Err(Error::Config(format!("unknown missing policy {o:?}"))),
        }
    }
}

/// Compositing background; serialized as `white`, `black` or `rgb:r,g,b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Background(pub [u8; 3]);

impl Default for Background {
    fn default() -> Self {
        Background([255, 255, 255])
    }
}

impl FromStr for Background {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white" => Ok(Background([255, 255, 255])),
            "black" => Ok(Background([0, 0, 0])),
            _ => {
                let body = s
                    .strip_prefix("rgb:")
                    .ok_or_else(|| Error::Config(format!("bad background {s:?}")))?;
                let parts: Vec<&str> = body.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::Config(format!("bad background {s:?}")));
                }
                let mut rgb = [0u8; 3];
                for (slot, p) in rgb.iter_mut().zip(parts) {
                    *slot = p
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad background {s:?}")))?;
                }
                Ok(Background(rgb))
            }
        }
    }
}

impl fmt::Display for Background {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            [255, 255, 255] => f.write_str("white"),
            [0, 0, 0] => f.write_str("black"),
            [r, g, b] => write!(f, "rgb:{r},{g},{b}"),
        }
    }
}

impl Serialize for Background {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Background {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One ground-truth row of an evaluation manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtRow {
    pub dataset: String,
    pub object_id: String,
    pub view_index: u32,
    pub n_ref_views: u32,
    /// Relative to the manifest's directory.
    pub gt_path: String,
    /// True when this view is one of the (possibly occluded) inputs.
    #[serde(default)]
    pub input_view: bool,
    /// Relative to the prediction directory; defaults to [`default_pred_path`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_path: Option<String>,
}

/// `<dataset>/<object_id>/ref<n>/<view_index>.png`
pub fn default_pred_path(dataset: &str, object_id: &str, n_ref_views: u32, view_index: u32) -> PathBuf {
    PathBuf::from(fsutil::sanitize_component(dataset))
        .join(fsutil::sanitize_component(object_id))
        .join(format!("ref{n_ref_views}"))
        .join(format!("{view_index:03}.png"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    MissingPrediction,
    UnreadablePrediction,
    UnreadableGroundTruth,
    DimensionMismatch,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::MissingPrediction => "missing_prediction",
            RowStatus::UnreadablePrediction => "unreadable_prediction",
            RowStatus::UnreadableGroundTruth => "unreadable_ground_truth",
            RowStatus::DimensionMismatch => "dimension_mismatch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            RowStatus::Ok,
            RowStatus::MissingPrediction,
            RowStatus::UnreadablePrediction,
            RowStatus::UnreadableGroundTruth,
            RowStatus::DimensionMismatch,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
    }
}

/// One per-view evaluation row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub dataset: String,
    pub object_id: String,
    pub view_index: u32,
    pub n_ref_views: u32,
    /// `INFINITY` for identical images; `None` when the row failed.
    pub psnr_db: Option<f64>,
    pub ssim: Option<f64>,
    pub status: RowStatus,
    /// Externally computed scores merged by key (e.g. a perceptual metric).
    pub extra: BTreeMap<String, f64>,
}

impl MetricRecord {
    pub fn sort_key(&self) -> (&str, u32, &str, u32) {
        (&self.dataset, self.n_ref_views, &self.object_id, self.view_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate2d {
    pub dataset: String,
    pub n_ref_views: u32,
    /// Mean over finite PSNR rows; `INFINITY` when every row was identical.
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub count: usize,
    pub inf_count: usize,
    pub extra_means: BTreeMap<String, f64>,
}

/// Group means per (dataset, n_ref_views). Rows are summed in sorted key
/// order, so the result does not depend on input order.
pub fn aggregate_2d(records: &[MetricRecord]) -> Vec<Aggregate2d> {
    let mut sorted: Vec<&MetricRecord> = records.iter().filter(|r| r.status == RowStatus::Ok).collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut groups: BTreeMap<(String, u32), Vec<&MetricRecord>> = BTreeMap::new();
    for r in sorted {
        groups
            .entry((r.dataset.clone(), r.n_ref_views))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((dataset, n_ref_views), rows)| {
            let mut psnr_sum = 0.0;
            let mut finite = 0usize;
            let mut inf_count = 0usize;
            let mut ssim_sum = 0.0;
            let mut extra_sum: BTreeMap<String, (f64, usize)> = BTreeMap::new();
            for r in &rows {
                match r.psnr_db {
                    Some(v) if v.is_finite() => {
                        psnr_sum += v;
                        finite += 1;
                    }
                    _ => inf_count += 1,
                }
                ssim_sum += r.ssim.unwrap_or(f64::NAN);
                for (k, v) in &r.extra {
                    let e = extra_sum.entry(k.clone()).or_insert((0.0, 0));
                    e.0 += v;
                    e.1 += 1;
                }
            }
            Aggregate2d {
                dataset,
                n_ref_views,
                mean_psnr: if finite == 0 {
                    f64::INFINITY
                } else {
                    psnr_sum / finite as f64
                },
                mean_ssim: ssim_sum / rows.len() as f64,
                count: rows.len(),
                inf_count,
                extra_means: extra_sum
                    .into_iter()
                    .map(|(k, (s, n))| (k, s / n as f64))
                    .collect(),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Eval2dOptions {
    pub mode: EvalMode,
    pub background: Background,
    pub on_missing: MissingPolicy,
    pub ssim: SsimParams,
    pub workers: usize,
}

impl Default for Eval2dOptions {
    fn default() -> Self {
        Eval2dOptions {
            mode: EvalMode::Nvs,
            background: Background::default(),
            on_missing: MissingPolicy::Skip,
            ssim: SsimParams::default(),
            workers: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eval2dOutput {
    pub records: Vec<MetricRecord>,
    pub aggregates: Vec<Aggregate2d>,
}

impl Eval2dOutput {
    pub fn flagged(&self) -> usize {
        self.records.iter().filter(|r| r.status != RowStatus::Ok).count()
    }
}

pub fn read_gt_manifest(path: &Path) -> Result<Vec<GtRow>> {
    let rows: Vec<GtRow> = fsutil::read_json(path)?;
    let mut seen = HashSet::new();
    for r in &rows {
        if !seen.insert((r.dataset.clone(), r.object_id.clone(), r.n_ref_views, r.view_index)) {
            return Err(Error::Config(format!(
                "duplicate ground-truth row {}/{}/ref{}/{}",
                r.dataset, r.object_id, r.n_ref_views, r.view_index
            )));
        }
    }
    Ok(rows)
}

fn evaluate_row(row: &GtRow, gt_base: &Path, pred_dir: &Path, opts: &Eval2dOptions) -> MetricRecord {
    let mut rec = MetricRecord {
        dataset: row.dataset.clone(),
        object_id: row.object_id.clone(),
        view_index: row.view_index,
        n_ref_views: row.n_ref_views,
        psnr_db: None,
        ssim: None,
        status: RowStatus::Ok,
        extra: BTreeMap::new(),
    };
    let pred_path = match &row.pred_path {
        Some(p) => fsutil::resolve(pred_dir, p),
        None => pred_dir.join(default_pred_path(&row.dataset, &row.object_id, row.n_ref_views, row.view_index)),
    };
    if !pred_path.is_file() {
        rec.status = RowStatus::MissingPrediction;
        return rec;
    }
    let pred = match read_rgba_png(&pred_path) {
        Ok(p) => p,
        Err(_) => {
            rec.status = RowStatus::UnreadablePrediction;
            return rec;
        }
    };
    let gt = match read_rgba_png(&fsutil::resolve(gt_base, &row.gt_path)) {
        Ok(g) => g,
        Err(_) => {
            rec.status = RowStatus::UnreadableGroundTruth;
            return rec;
        }
    };
    let bg = opts.background.0;
    let (p, g) = (composite_background(&pred, bg), composite_background(&gt, bg));
    match (psnr(&p, &g, 255.0), ssim(&p, &g, &opts.ssim)) {
        (Ok(ps), Ok(ss)) => {
            rec.psnr_db = Some(ps);
            rec.ssim = Some(ss);
        }
        _ => rec.status = RowStatus::DimensionMismatch,
    }
    rec
}

/// Evaluates every manifest row selected by the mode against its prediction.
pub fn evaluate_2d(pred_dir: &Path, gt_manifest: &Path, opts: &Eval2dOptions) -> Result<Eval2dOutput> {
    let rows = read_gt_manifest(gt_manifest)?;
    let gt_base = fsutil::parent_dir(gt_manifest);
    evaluate_rows(pred_dir, &rows, &gt_base, opts)
}

pub fn evaluate_rows(pred_dir: &Path, rows: &[GtRow], gt_base: &Path, opts: &Eval2dOptions) -> Result<Eval2dOutput> {
    let want_input = opts.mode == EvalMode::Amodal;
    let selected: Vec<&GtRow> = rows.iter().filter(|r| r.input_view == want_input).collect();
    let pool = parallel::pool(opts.workers)?;
    let mut records: Vec<MetricRecord> = pool.install(|| {
        selected
            .par_iter()
            .map(|r| evaluate_row(r, gt_base, pred_dir, opts))
            .collect()
    });
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    if records.iter().all(|r| r.status == RowStatus::MissingPrediction) {
        return Err(Error::NoEvaluablePairs);
    }
    if opts.on_missing == MissingPolicy::Error {
        if let Some(r) = records.iter().find(|r| r.status == RowStatus::MissingPrediction) {
            return Err(Error::Config(format!(
                "missing prediction for {}/{}/ref{}/{}",
                r.dataset, r.object_id, r.n_ref_views, r.view_index
            )));
        }
    }
    let aggregates = aggregate_2d(&records);
    Ok(Eval2dOutput { records, aggregates })
}

/// Merges numeric columns from an external CSV keyed by
/// `dataset,object_id,view_index,n_ref_views`. Returns the imported column names.
pub fn import_scores(records: &mut [MetricRecord], csv_path: &Path) -> Result<Vec<String>> {
    let ctx = csv_path.display().to_string();
    let mut rdr = csv::Reader::from_path(csv_path).map_err(|e| Error::csv(&ctx, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(&ctx, e))?.clone();
    let key_cols = ["dataset", "object_id", "view_index", "n_ref_views"];
    let mut idx = [0usize; 4];
    for (slot, name) in idx.iter_mut().zip(key_cols) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::csv(&ctx, format!("missing column {name}")))?;
    }
    let value_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !key_cols.contains(h))
        .map(|(i, h)| (i, h.to_string()))
        .collect();
    let mut table: BTreeMap<(String, String, u32, u32), Vec<(String, f64)>> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(&ctx, e))?;
        let parse_u32 = |i: usize| -> Result<u32> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| Error::csv(&ctx, format!("row {}: bad integer {:?}", line + 2, &rec[i])))
        };
        let key = (rec[idx[0]].to_string(), rec[idx[1]].to_string(), parse_u32(idx[2])?, parse_u32(idx[3])?);
        let mut vals = Vec::new();
        for (i, name) in &value_cols {
            let v: f64 = rec[*i]
                .trim()
                .parse()
                .map_err(|_| Error::csv(&ctx, format!("row {}: bad number {:?}", line + 2, &rec[*i])))?;
            vals.push((name.clone(), v));
        }
        table.insert(key, vals);
    }
    for r in records.iter_mut() {
        let key = (r.dataset.clone(), r.object_id.clone(), r.view_index, r.n_ref_views);
        if let Some(vals) = table.get(&key) {
            for (k, v) in vals {
                r.extra.insert(k.clone(), *v);
            }
        }
    }
    Ok(value_cols.into_iter().map(|(_, n)| n).collect())
}
