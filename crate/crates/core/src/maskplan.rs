//! Input-level and feature-level masking schedules over a `[B·T, L]` layout.
//!
//! The view mask is Bernoulli per view. The feature mask is exact-count:
//! `round(row_ratio·B·T)` rows are chosen without replacement and, within each
//! chosen row, `round(area_ratio·L)` positions. Plans only carry booleans;
//! the consumer decides what a masked feature is replaced with (zero-fill is
//! the usual choice). The channel dimension is never masked.

use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::seed::SeedKey;

pub const PLAN_VERSION: u32 = 1;

/// Row ratios of the feature-level ablation, largest first.
pub const DEFAULT_ROW_RATIO_GRID: [f64; 5] = [1.0, 0.75, 0.5, 0.25, 0.0];
pub const DEFAULT_ROW_RATIO: f64 = 0.25;
pub const DEFAULT_AREA_RATIO: f64 = 0.5;
pub const DEFAULT_P_VIEW: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanDims {
    pub batch: usize,
    pub views_per_sample: usize,
    pub feature_len: usize,
}

impl PlanDims {
    pub fn rows(&self) -> usize {
        self.batch * self.views_per_sample
    }

    fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.views_per_sample == 0 || self.feature_len == 0 {
            return Err(Error::InvalidPlan(format!(
                "dimensions must be >= 1, got B={} T={} L={}",
                self.batch, self.views_per_sample, self.feature_len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskRatios {
    pub p_view: f64,
    pub row_ratio: f64,
    pub area_ratio: f64,
}

impl Default for MaskRatios {
    fn default() -> Self {
        MaskRatios {
            p_view: DEFAULT_P_VIEW,
            row_ratio: DEFAULT_ROW_RATIO,
            area_ratio: DEFAULT_AREA_RATIO,
        }
    }
}

impl MaskRatios {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_view", self.p_view),
            ("row_ratio", self.row_ratio),
            ("area_ratio", self.area_ratio),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidPlan(format!("{name}={v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskPlan {
    pub dims: PlanDims,
    pub ratios: MaskRatios,
    pub seed: u64,
    pub epoch: u64,
    /// B×T, row-major; `true` = the view is input-masked.
    pub view_mask: Vec<bool>,
    /// B·T entries; `true` = the row receives feature masking.
    pub feature_rows_selected: Vec<bool>,
    /// (B·T)×L, row-major; `true` = the feature position is masked.
    pub feature_mask: Vec<bool>,
}

/// Round half up on a non-negative product, as an element count.
pub fn ratio_count(ratio: f64, n: usize) -> usize {
    let c = (ratio * n as f64 + 0.5).floor() as usize;
    c.min(n)
}

/// Independent Bernoulli(p_view) draw for each of `views` inputs.
pub fn sample_input_mask(views: usize, p_view: f64, key: SeedKey) -> Result<Vec<bool>> {
    if views == 0 {
        return Err(Error::InvalidPlan("view count must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p_view) {
        return Err(Error::InvalidPlan(format!("p_view={p_view} outside [0, 1]")));
    }
    let mut rng = key.rng();
    Ok((0..views).map(|_| rng.gen_bool(p_view)).collect())
}

/// Selected rows and the flattened (B·T)×L feature mask.
pub fn sample_feature_mask(
    dims: PlanDims,
    row_ratio: f64,
    area_ratio: f64,
    key: SeedKey,
) -> Result<(Vec<bool>, Vec<bool>)> {
    dims.validate()?;
    MaskRatios {
        p_view: 0.0,
        row_ratio,
        area_ratio,
    }
    .validate()?;
    let rows = dims.rows();
    let l = dims.feature_len;
    let n_rows = ratio_count(row_ratio, rows);
    let n_area = ratio_count(area_ratio, l);

    let mut row_rng = key.derive("rows").rng();
    let mut selected = vec![false; rows];
    for r in index::sample(&mut row_rng, rows, n_rows) {
        selected[r] = true;
    }

    let area_key = key.derive("area");
    let mut mask = vec![false; rows * l];
    for (r, _) in selected.iter().enumerate().filter(|(_, s)| **s) {
        // one stream per row so a row's pattern does not depend on which other rows were chosen
        let mut rng = area_key.derive_index(r as u64).rng();
        for pos in index::sample(&mut rng, l, n_area) {
            mask[r * l + pos] = true;
        }
    }
    Ok((selected, mask))
}

impl MaskPlan {
    /// Builds a full plan. View and feature masks use disjoint subkeys of
    /// `(seed, epoch)`.
    pub fn generate(dims: PlanDims, ratios: MaskRatios, seed: u64, epoch: u64) -> Result<Self> {
        dims.validate()?;
        ratios.validate()?;
        let base = SeedKey::new(seed).derive("maskplan").derive_index(epoch);
        let view_key = base.derive("view");
        let mut view_mask = Vec::with_capacity(dims.rows());
        for b in 0..dims.batch {
            view_mask.extend(sample_input_mask(
                dims.views_per_sample,
                ratios.p_view,
                view_key.derive_index(b as u64),
            )?);
        }
        let (feature_rows_selected, feature_mask) =
            sample_feature_mask(dims, ratios.row_ratio, ratios.area_ratio, base.derive("feature"))?;
        Ok(MaskPlan {
            dims,
            ratios,
            seed,
            epoch,
            view_mask,
            feature_rows_selected,
            feature_mask,
        })
    }

    pub fn feature_row(&self, row: usize) -> &[bool] {
        let l = self.dims.feature_len;
        &self.feature_mask[row * l..(row + 1) * l]
    }

    pub fn selected_row_count(&self) -> usize {
        self.feature_rows_selected.iter().filter(|&&b| b).count()
    }

    pub fn to_file(&self) -> PlanFile {
        PlanFile {
            b: self.dims.batch,
            t: self.dims.views_per_sample,
            l: self.dims.feature_len,
            p_view: self.ratios.p_view,
            row_ratio: self.ratios.row_ratio,
            area_ratio: self.ratios.area_ratio,
            seed: self.seed,
            epoch: self.epoch,
            version: PLAN_VERSION,
            view_mask: BASE64.encode(pack_bits(&self.view_mask)),
            feature_rows: BASE64.encode(pack_bits(&self.feature_rows_selected)),
            feature_mask: BASE64.encode(pack_bits(&self.feature_mask)),
        }
    }

    pub fn from_file(file: &PlanFile) -> Result<Self> {
        if file.version != PLAN_VERSION {
            return Err(Error::InvalidPlan(format!(
                "unsupported plan version {}",
                file.version
            )));
        }
        let dims = PlanDims {
            batch: file.b,
            views_per_sample: file.t,
            feature_len: file.l,
        };
        dims.validate()?;
        let ratios = MaskRatios {
            p_view: file.p_view,
            row_ratio: file.row_ratio,
            area_ratio: file.area_ratio,
        };
        ratios.validate()?;
        let decode = |name: &str, s: &str, n: usize| -> Result<Vec<bool>> {
            let bytes = BASE64
                .decode(s)
                .map_err(|e| Error::InvalidPlan(format!("{name}: {e}")))?;
            unpack_bits(&bytes, n).ok_or_else(|| {
                Error::InvalidPlan(format!("{name}: expected {n} bits, got {} bytes", bytes.len()))
            })
        };
        let rows = dims.rows();
        let plan = MaskPlan {
            dims,
            ratios,
            seed: file.seed,
            epoch: file.epoch,
            view_mask: decode("view_mask", &file.view_mask, rows)?,
            feature_rows_selected: decode("feature_rows", &file.feature_rows, rows)?,
            feature_mask: decode("feature_mask", &file.feature_mask, rows * dims.feature_len)?,
        };
        plan.check_consistency()?;
        Ok(plan)
    }

    fn check_consistency(&self) -> Result<()> {
        for r in 0..self.dims.rows() {
            if !self.feature_rows_selected[r] && self.feature_row(r).iter().any(|&b| b) {
                return Err(Error::InvalidPlan(format!(
                    "row {r} has masked features but is not selected"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(&self.to_file())
            .map_err(|e| Error::json("mask plan", e))?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self> {
        let file: PlanFile =
            serde_json::from_slice(bytes).map_err(|e| Error::json("mask plan", e))?;
        MaskPlan::from_file(&file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic(path, &self.to_json_bytes()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        MaskPlan::from_json_bytes(&bytes)
    }
}

/// On-disk plan: a JSON header plus base64 bit fields (row-major, LSB-first
/// within each byte).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub p_view: f64,
    pub row_ratio: f64,
    pub area_ratio: f64,
    pub seed: u64,
    #[serde(default)]
    pub epoch: u64,
    pub version: u32,
    pub view_mask: String,
    pub feature_rows: String,
    pub feature_mask: String,
}

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

/// `None` when `bytes` is not exactly `ceil(n/8)` long or padding bits are set.
pub fn unpack_bits(bytes: &[u8], n: usize) -> Option<Vec<bool>> {
    if bytes.len() != n.div_ceil(8) {
        return None;
    }
    let bits: Vec<bool> = (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect();
    if n % 8 != 0 && bytes[n / 8] >> (n % 8) != 0 {
        return None;
    }
    Some(bits)
}

/// File name for one sweep entry, e.g. `plan_row0.25.json`.
pub fn sweep_file_name(row_ratio: f64) -> String {
    format!("plan_row{row_ratio:.2}.json")
}

/// One plan per row ratio, all sharing the same seed, area ratio and p_view.
pub fn sweep_ratios(
    grid: &[f64],
    area_ratio: f64,
    p_view: f64,
    dims: PlanDims,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if grid.is_empty() {
        return Err(Error::Config("ratio grid is empty".into()));
    }
    let mut names: Vec<String> = grid.iter().map(|&r| sweep_file_name(r)).collect();
    names.sort();
    names.dedup();
    if names.len() != grid.len() {
        return Err(Error::Config("ratio grid has entries that collide at 2 decimals".into()));
    }
    let mut paths = Vec::with_capacity(grid.len());
    for &row_ratio in grid {
        let plan = MaskPlan::generate(
            dims,
            MaskRatios {
                p_view,
                row_ratio,
                area_ratio,
            },
            seed,
            0,
        )?;
        let path = out_dir.join(sweep_file_name(row_ratio));
        plan.write(&path)?;
        paths.push(path);
    }
    Ok(paths)
}
