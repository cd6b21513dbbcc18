//! Silhouette-based synthetic occlusion.
//!
//! Silhouettes are cut from rendered RGBA views, grouped into patterns
//! (several rescaled and shifted silhouettes), and overlaid on clean views.
//! Every output records the exact occluder mask, so clean and occluded
//! images differ only where the mask is set.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::parallel;
use crate::poses::SphericalPose;
use crate::raster::{self, BinaryMask, RgbaImage};
use crate::seed::{row_key, SeedKey};

pub const DEFAULT_ALPHA_THRESHOLD: u8 = 127;
pub const DEFAULT_FILL_RGB: [u8; 3] = [128, 128, 128];
pub const DEFAULT_MAX_TRIES: u32 = 100;
pub const LIBRARY_MANIFEST: &str = "library.json";
pub const LIBRARY_VERSION: u32 = 1;

/// Bit set iff alpha is strictly above `alpha_threshold`.
pub fn extract_silhouette(image: &RgbaImage, alpha_threshold: u8) -> BinaryMask {
    let bits = image.alpha().map(|a| a > alpha_threshold).collect();
    BinaryMask::new(image.width(), image.height(), bits).expect("dimensions come from a valid image")
}

/// `|mask ∧ object| / |object|`.
pub fn occlusion_fraction(mask: &BinaryMask, object: &BinaryMask) -> Result<f64> {
    let total = object.popcount();
    if total == 0 {
        return Err(Error::EmptyObject);
    }
    Ok(mask.intersection_count(object)? as f64 / total as f64)
}

/// A silhouette cropped to its bounding box, with the donor's pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    pub id: String,
    pub source: String,
    pub mask: BinaryMask,
    pub donor: RgbaImage,
    pub content_hash: String,
}

fn silhouette_hash(mask: &BinaryMask, donor: &RgbaImage) -> String {
    let mut h = blake3::Hasher::new();
    h.update(&mask.width().to_le_bytes());
    h.update(&mask.height().to_le_bytes());
    h.update(&crate::maskplan::pack_bits(mask.bits()));
    h.update(donor.pixels());
    h.finalize().to_hex().to_string()
}

impl Silhouette {
    /// Crops the alpha silhouette of `image`; `None` if nothing is above the threshold.
    pub fn from_render(id: &str, source: &str, image: &RgbaImage, alpha_threshold: u8) -> Option<Self> {
        let full = extract_silhouette(image, alpha_threshold);
        let (x0, y0, w, h) = full.bounding_box()?;
        let mask = full.crop(x0, y0, w, h).ok()?;
        let donor = image.crop(x0, y0, w, h).ok()?;
        let content_hash = silhouette_hash(&mask, &donor);
        Some(Silhouette {
            id: id.to_string(),
            source: source.to_string(),
            mask,
            donor,
            content_hash,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub id: String,
    pub source: String,
    pub mask_file: String,
    pub donor_file: String,
    pub width: u32,
    pub height: u32,
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryManifest {
    pub version: u32,
    pub alpha_threshold: u8,
    pub library_hash: String,
    pub entries: Vec<LibraryEntry>,
}

/// Read-only silhouette collection, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteLibrary {
    pub alpha_threshold: u8,
    entries: Vec<Silhouette>,
}

impl SilhouetteLibrary {
    pub fn new(alpha_threshold: u8, mut entries: Vec<Silhouette>) -> Result<Self> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.clone()) {
                return Err(Error::Config(format!("duplicate silhouette id {:?}", e.id)));
            }
        }
        Ok(SilhouetteLibrary {
            alpha_threshold,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Silhouette] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&Silhouette> {
        self.entries
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Hash over the ordered per-silhouette hashes.
    pub fn content_hash(&self) -> String {
        let mut h = blake3::Hasher::new();
        for e in &self.entries {
            h.update(e.id.as_bytes());
            h.update(&[0]);
            h.update(e.content_hash.as_bytes());
        }
        h.finalize().to_hex().to_string()
    }

    /// Extracts one silhouette per PNG under `renders` (recursively). Files
    /// that fail to decode or have no foreground are returned as skipped.
    pub fn build_from_renders(renders: &Path, alpha_threshold: u8) -> Result<(Self, Vec<(String, String)>)> {
        let mut entries = Vec::new();
        let mut skipped = Vec::new();
        for rel in fsutil::list_files_recursive(renders)? {
            let is_png = rel
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("png"));
            if !is_png {
                continue;
            }
            let source = rel.to_string_lossy().replace('\\', "/");
            let id = fsutil::sanitize_component(&source.trim_end_matches(".png").replace('/', "__"));
            match raster::read_rgba_png(&renders.join(&rel)) {
                Ok(img) => match Silhouette::from_render(&id, &source, &img, alpha_threshold) {
                    Some(s) => entries.push(s),
                    None => skipped.push((source, "no foreground pixels".to_string())),
                },
                Err(e) => skipped.push((source, e.to_string())),
            }
        }
        Ok((SilhouetteLibrary::new(alpha_threshold, entries)?, skipped))
    }

    pub fn save(&self, dir: &Path) -> Result<LibraryManifest> {
        let sil_dir = dir.join("silhouettes");
        fsutil::create_dir_all(&sil_dir)?;
        let mut entries = Vec::with_capacity(self.entries.len());
        for s in &self.entries {
            let mask_file = format!("silhouettes/{}_mask.png", s.id);
            let donor_file = format!("silhouettes/{}_donor.png", s.id);
            fsutil::write_atomic(&dir.join(&mask_file), &raster::encode_mask_png(&s.mask)?)?;
            fsutil::write_atomic(&dir.join(&donor_file), &raster::encode_rgba_png(&s.donor)?)?;
            entries.push(LibraryEntry {
                id: s.id.clone(),
                source: s.source.clone(),
                mask_file,
                donor_file,
                width: s.mask.width(),
                height: s.mask.height(),
                content_hash: s.content_hash.clone(),
            });
        }
        let manifest = LibraryManifest {
            version: LIBRARY_VERSION,
            alpha_threshold: self.alpha_threshold,
            library_hash: self.content_hash(),
            entries,
        };
        fsutil::write_json_atomic(&dir.join(LIBRARY_MANIFEST), &manifest)?;
        Ok(manifest)
    }

    /// Loads a saved library and verifies every content hash.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: LibraryManifest = fsutil::read_json(&dir.join(LIBRARY_MANIFEST))?;
        if manifest.version != LIBRARY_VERSION {
            return Err(Error::Config(format!("unsupported library version {}", manifest.version)));
        }
        let mut entries = Vec::with_capacity(manifest.entries.len());
        for e in &manifest.entries {
            let mask = raster::read_mask_png(&dir.join(&e.mask_file))?;
            let donor = raster::read_rgba_png(&dir.join(&e.donor_file))?;
            let hash = silhouette_hash(&mask, &donor);
            if hash != e.content_hash {
                return Err(Error::Config(format!("silhouette {:?} does not match its content hash", e.id)));
            }
            entries.push(Silhouette {
                id: e.id.clone(),
                source: e.source.clone(),
                mask,
                donor,
                content_hash: hash,
            });
        }
        let lib = SilhouetteLibrary::new(manifest.alpha_threshold, entries)?;
        if lib.content_hash() != manifest.library_hash {
            return Err(Error::Config("library hash mismatch".into()));
        }
        Ok(lib)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillPolicy {
    SolidColor([u8; 3]),
    /// Paste the donor render's colour under each silhouette pixel.
    SourceTexture,
}

impl Default for FillPolicy {
    fn default() -> Self {
        FillPolicy::SolidColor(DEFAULT_FILL_RGB)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternPart {
    pub silhouette_id: String,
    pub scale: f64,
    pub shift: (i32, i32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcclusionPattern {
    pub parts: Vec<PatternPart>,
    pub fill: FillPolicy,
}

/// Inclusive sampling ranges for pattern composition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternParams {
    pub count_range: (u32, u32),
    pub scale_range: (f64, f64),
    pub shift_range: (i32, i32),
}

impl Default for PatternParams {
    fn default() -> Self {
        PatternParams {
            count_range: (1, 3),
            scale_range: (0.4, 0.9),
            shift_range: (-40, 40),
        }
    }
}

impl PatternParams {
    pub fn validate(&self) -> Result<()> {
        let (c0, c1) = self.count_range;
        let (s0, s1) = self.scale_range;
        let (d0, d1) = self.shift_range;
        if c0 == 0 || c0 > c1 {
            return Err(Error::Config(format!("bad count range [{c0}, {c1}]")));
        }
        if !(s0 > 0.0 && s0 <= s1 && s1.is_finite()) {
            return Err(Error::Config(format!("bad scale range [{s0}, {s1}]")));
        }
        if d0 > d1 {
            return Err(Error::Config(format!("bad shift range [{d0}, {d1}]")));
        }
        Ok(())
    }
}

/// Draws a pattern: part count, then per part a silhouette, scale and shift.
pub fn compose_pattern(
    library: &SilhouetteLibrary,
    params: &PatternParams,
    fill: FillPolicy,
    key: SeedKey,
) -> Result<OcclusionPattern> {
    if library.is_empty() {
        return Err(Error::Config("silhouette library is empty".into()));
    }
    params.validate()?;
    let mut rng = key.rng();
    let count = rng.gen_range(params.count_range.0..=params.count_range.1);
    let parts = (0..count)
        .map(|_| {
            let idx = rng.gen_range(0..library.len());
            let (s0, s1) = params.scale_range;
            let scale = if s0 == s1 { s0 } else { rng.gen_range(s0..=s1) };
            let (d0, d1) = params.shift_range;
            let dx = rng.gen_range(d0..=d1);
            let dy = rng.gen_range(d0..=d1);
            PatternPart {
                silhouette_id: library.entries[idx].id.clone(),
                scale,
                shift: (dx, dy),
            }
        })
        .collect();
    Ok(OcclusionPattern { parts, fill })
}

/// Pattern rendered onto a canvas: occluder mask plus the RGBA value each
/// set pixel takes.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternRaster {
    pub mask: BinaryMask,
    pub fill: Vec<[u8; 4]>,
}

/// Nearest-neighbour rasterization. Each part is centred at the canvas
/// centre plus `offset` plus its own shift; later parts paint over earlier ones.
pub fn rasterize_pattern(
    pattern: &OcclusionPattern,
    library: &SilhouetteLibrary,
    width: u32,
    height: u32,
    offset: (i32, i32),
) -> Result<PatternRaster> {
    let mut mask = BinaryMask::empty(width, height)?;
    let mut fill = vec![[0u8; 4]; width as usize * height as usize];
    for part in &pattern.parts {
        let sil = library
            .get(&part.silhouette_id)
            .ok_or_else(|| Error::Config(format!("unknown silhouette {:?}", part.silhouette_id)))?;
        if !(part.scale > 0.0) {
            return Err(Error::Config("pattern scale must be > 0".into()));
        }
        let (sw0, sh0) = (sil.mask.width() as i64, sil.mask.height() as i64);
        let sw = ((sw0 as f64 * part.scale).round() as i64).max(1);
        let sh = ((sh0 as f64 * part.scale).round() as i64).max(1);
        let cx = width as i64 / 2 + offset.0 as i64 + part.shift.0 as i64;
        let cy = height as i64 / 2 + offset.1 as i64 + part.shift.1 as i64;
        let left = cx - sw / 2;
        let top = cy - sh / 2;
        for ty in top.max(0)..(top + sh).min(height as i64) {
            let sy = ((2 * (ty - top) + 1) * sh0 / (2 * sh)) as u32;
            for tx in left.max(0)..(left + sw).min(width as i64) {
                let sx = ((2 * (tx - left) + 1) * sw0 / (2 * sw)) as u32;
                if !sil.mask.get(sx, sy) {
                    continue;
                }
                let i = ty as usize * width as usize + tx as usize;
                mask.bits_mut()[i] = true;
                fill[i] = match pattern.fill {
                    FillPolicy::SolidColor([r, g, b]) => [r, g, b, 255],
                    FillPolicy::SourceTexture => {
                        let [r, g, b, _] = sil.donor.get(sx, sy);
                        [r, g, b, 255]
                    }
                };
            }
        }
    }
    Ok(PatternRaster { mask, fill })
}

/// Copies `clean` and replaces every masked pixel with its fill value.
pub fn apply_raster(clean: &RgbaImage, raster: &PatternRaster) -> Result<RgbaImage> {
    if clean.width() != raster.mask.width() || clean.height() != raster.mask.height() {
        return Err(Error::DimensionMismatch("pattern raster does not match image".into()));
    }
    let mut out = clean.clone();
    let px = out.pixels_mut();
    for (i, &set) in raster.mask.bits().iter().enumerate() {
        if set {
            px[i * 4..i * 4 + 4].copy_from_slice(&raster.fill[i]);
        }
    }
    Ok(out)
}

/// Re-applies a solid fill under `mask`.
pub fn apply_solid_fill(clean: &RgbaImage, mask: &BinaryMask, rgb: [u8; 3]) -> Result<RgbaImage> {
    let fill = vec![[rgb[0], rgb[1], rgb[2], 255]; mask.bits().len()];
    apply_raster(
        clean,
        &PatternRaster {
            mask: mask.clone(),
            fill,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionBounds {
    pub f_min: f64,
    pub f_max: f64,
}

impl Default for OcclusionBounds {
    fn default() -> Self {
        OcclusionBounds { f_min: 0.1, f_max: 0.6 }
    }
}

impl OcclusionBounds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.f_min) || !(0.0..=1.0).contains(&self.f_max) || self.f_min > self.f_max {
            return Err(Error::Config(format!(
                "bad occlusion bounds [{}, {}]",
                self.f_min, self.f_max
            )));
        }
        Ok(())
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_min && f <= self.f_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayOutcome {
    pub image: RgbaImage,
    pub mask: BinaryMask,
    pub occlusion_fraction: f64,
    pub placed: bool,
    pub tries: u32,
}

/// Rejection-samples a placement whose occlusion fraction lies within
/// `bounds`. Each try centres the pattern on a uniformly chosen object
/// pixel. After `max_tries` failures the clean image is returned with an
/// empty mask and `placed = false`.
pub fn overlay_occlusion(
    clean: &RgbaImage,
    pattern: &OcclusionPattern,
    library: &SilhouetteLibrary,
    bounds: OcclusionBounds,
    max_tries: u32,
    alpha_threshold: u8,
    key: SeedKey,
) -> Result<OverlayOutcome> {
    bounds.validate()?;
    let object = extract_silhouette(clean, alpha_threshold);
    let object_pixels: Vec<usize> = object
        .bits()
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    if object_pixels.is_empty() {
        return Err(Error::EmptyObject);
    }
    let (w, h) = (clean.width(), clean.height());
    for t in 0..max_tries {
        let mut rng = key.derive_index(t as u64).rng();
        let anchor = object_pixels[rng.gen_range(0..object_pixels.len())];
        let ax = (anchor % w as usize) as i32;
        let ay = (anchor / w as usize) as i32;
        let offset = (ax - (w / 2) as i32, ay - (h / 2) as i32);
        let raster = rasterize_pattern(pattern, library, w, h, offset)?;
        let fraction = occlusion_fraction(&raster.mask, &object)?;
        if bounds.contains(fraction) {
            return Ok(OverlayOutcome {
                image: apply_raster(clean, &raster)?,
                mask: raster.mask,
                occlusion_fraction: fraction,
                placed: true,
                tries: t + 1,
            });
        }
    }
    Ok(OverlayOutcome {
        image: clean.clone(),
        mask: BinaryMask::empty(w, h)?,
        occlusion_fraction: 0.0,
        placed: false,
        tries: max_tries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewRole {
    /// Input view; eligible for occlusion.
    #[default]
    Reference,
    /// Target / ground-truth view; always kept clean.
    Target,
}

/// One row of an input (clean) manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRow {
    pub object_id: String,
    pub view_index: u32,
    /// Relative to the manifest's directory.
    pub image_path: String,
    pub pose: SphericalPose,
    #[serde(default)]
    pub role: ViewRole,
}

/// Reads an input manifest. Rows without a pose, or with an invalid one, are
/// hard errors, as are duplicate `(object_id, view_index)` pairs.
pub fn read_input_manifest(path: &Path) -> Result<Vec<InputRow>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let rows: Vec<InputRow> =
        serde_json::from_slice(&bytes).map_err(|e| Error::json(path.display().to_string(), e))?;
    check_rows(&rows)?;
    Ok(rows)
}

fn check_rows(rows: &[InputRow]) -> Result<()> {
    let mut seen = HashSet::new();
    for r in rows {
        r.pose.validated().map_err(|e| {
            Error::Config(format!("row {}/{}: {e}", r.object_id, r.view_index))
        })?;
        if !seen.insert((r.object_id.as_str(), r.view_index)) {
            return Err(Error::Config(format!(
                "duplicate row {}/{}",
                r.object_id, r.view_index
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Ok,
    PlacementFailed,
    EmptyObject,
    Unreadable,
}

/// One manifest row of a paired dataset. Paths are relative to the dataset
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairedSample {
    pub object_id: String,
    pub view_index: u32,
    pub pose: SphericalPose,
    pub clean_path: String,
    pub occluded_path: String,
    pub mask_path: String,
    pub occlusion_fraction: f64,
    pub occluded_flag: bool,
    pub seed_key: u64,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Occlusion probability for reference views.
    pub p_occlude: f64,
    pub bounds: OcclusionBounds,
    pub pattern: PatternParams,
    pub fill: FillPolicy,
    pub max_tries: u32,
    pub alpha_threshold: u8,
    /// Namespaces every row key, so train and test draws never collide.
    pub split: String,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            p_occlude: 0.5,
            bounds: OcclusionBounds::default(),
            pattern: PatternParams::default(),
            fill: FillPolicy::default(),
            max_tries: DEFAULT_MAX_TRIES,
            alpha_threshold: DEFAULT_ALPHA_THRESHOLD,
            split: "train".into(),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_occlude) {
            return Err(Error::Config(format!("p_occlude {} outside [0, 1]", self.p_occlude)));
        }
        self.bounds.validate()?;
        self.pattern.validate()
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Fresh patterns drawn for a row before it is flagged as a placement failure.
pub const PATTERN_REDRAWS: u64 = 4;

fn sample_stem(object_id: &str, view_index: u32) -> String {
    format!("{}/{view_index:03}.png", fsutil::sanitize_component(object_id))
}

/// Bernoulli draw deciding whether a row is occluded.
pub fn draw_occlusion_flag(key: SeedKey, p: f64) -> bool {
    key.derive("occlude").unit() < p
}

fn process_row(
    row: &InputRow,
    manifest_dir: &Path,
    library: &SilhouetteLibrary,
    cfg: &DatasetConfig,
    base_seed: u64,
    out_dir: &Path,
) -> Result<PairedSample> {
    let key = row_key(base_seed, &cfg.split, &row.object_id, row.view_index);
    let stem = sample_stem(&row.object_id, row.view_index);
    let mut sample = PairedSample {
        object_id: row.object_id.clone(),
        view_index: row.view_index,
        pose: row.pose,
        clean_path: String::new(),
        occluded_path: String::new(),
        mask_path: String::new(),
        occlusion_fraction: 0.0,
        occluded_flag: false,
        seed_key: key.value(),
        status: SampleStatus::Ok,
    };
    let src = fsutil::resolve(manifest_dir, &row.image_path);
    let decoded = fs::read(&src)
        .map_err(|e| Error::io(&src, e))
        .and_then(|bytes| raster::decode_png_rgba(&bytes, &src).map(|img| (bytes, img)));
    let (bytes, clean) = match decoded {
        Ok(v) => v,
        Err(_) => {
            sample.status = SampleStatus::Unreadable;
            return Ok(sample);
        }
    };

    let p = match row.role {
        ViewRole::Reference => cfg.p_occlude,
        ViewRole::Target => 0.0,
    };
    let mut occluded: Option<(RgbaImage, BinaryMask, f64)> = None;
    if draw_occlusion_flag(key, p) {
        sample.status = SampleStatus::PlacementFailed;
        for attempt in 0..PATTERN_REDRAWS {
            let pattern = compose_pattern(library, &cfg.pattern, cfg.fill, key.derive("pattern").derive_index(attempt))?;
            match overlay_occlusion(
                &clean,
                &pattern,
                library,
                cfg.bounds,
                cfg.max_tries,
                cfg.alpha_threshold,
                key.derive("place").derive_index(attempt),
            ) {
                Ok(o) if o.placed => {
                    occluded = Some((o.image, o.mask, o.occlusion_fraction));
                    sample.status = SampleStatus::Ok;
                    break;
                }
                Ok(_) => {}
                Err(Error::EmptyObject) => {
                    sample.status = SampleStatus::EmptyObject;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }

    sample.clean_path = format!("clean/{stem}");
    sample.occluded_path = format!("occluded/{stem}");
    sample.mask_path = format!("masks/{stem}");
    fsutil::write_atomic(&out_dir.join(&sample.clean_path), &bytes)?;
    match occluded {
        Some((img, mask, fraction)) => {
            fsutil::write_atomic(&out_dir.join(&sample.occluded_path), &raster::encode_rgba_png(&img)?)?;
            fsutil::write_atomic(&out_dir.join(&sample.mask_path), &raster::encode_mask_png(&mask)?)?;
            sample.occluded_flag = true;
            sample.occlusion_fraction = fraction;
        }
        None => {
            fsutil::write_atomic(&out_dir.join(&sample.occluded_path), &bytes)?;
            let empty = BinaryMask::empty(clean.width(), clean.height())?;
            fsutil::write_atomic(&out_dir.join(&sample.mask_path), &raster::encode_mask_png(&empty)?)?;
        }
    }
    Ok(sample)
}

/// Curates one paired sample per input row and writes `manifest.json` to
/// `out_dir`. Output is sorted by `(object_id, view_index)` and does not
/// depend on row order or worker count.
pub fn build_paired_dataset(
    rows: &[InputRow],
    manifest_dir: &Path,
    library: &SilhouetteLibrary,
    cfg: &DatasetConfig,
    base_seed: u64,
    out_dir: &Path,
    workers: usize,
) -> Result<Vec<PairedSample>> {
    cfg.validate()?;
    check_rows(rows)?;
    if library.is_empty() && rows.iter().any(|r| r.role == ViewRole::Reference) && cfg.p_occlude > 0.0 {
        return Err(Error::Config("silhouette library is empty".into()));
    }
    fsutil::create_dir_all(out_dir)?;
    let pool = parallel::pool(workers)?;
    let mut samples = pool.install(|| {
        rows.par_iter()
            .map(|r| process_row(r, manifest_dir, library, cfg, base_seed, out_dir))
            .collect::<Result<Vec<_>>>()
    })?;
    samples.sort_by(|a, b| (&a.object_id, a.view_index).cmp(&(&b.object_id, b.view_index)));
    fsutil::write_json_atomic(&out_dir.join(MANIFEST_NAME), &samples)?;
    Ok(samples)
}

pub fn read_paired_manifest(path: &Path) -> Result<Vec<PairedSample>> {
    fsutil::read_json(path)
}

/// Full path of a manifest entry.
pub fn sample_path(dataset_dir: &Path, rel: &str) -> PathBuf {
    dataset_dir.join(rel)
}
