//! Deterministic synthetic inputs for the self-test and integration tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::Result;
use crate::fsutil;
use crate::metrics2d::GtRow;
use crate::metrics3d::mesh::{box_mesh, uv_sphere};
use crate::metrics3d::TriMesh;
use crate::occluder::{InputRow, ViewRole};
use crate::poses::viewset_neus36;
use crate::raster::{encode_rgba_png, RgbaImage};
use crate::seed::SeedKey;

/// An opaque ellipse with a colour gradient and a half-transparent rim, on a
/// fully transparent background.
pub fn synthetic_render(width: u32, height: u32, key: SeedKey) -> RgbaImage {
    let mut rng = key.rng();
    let (w, h) = (width as f64, height as f64);
    let cx = w * rng.gen_range(0.4..0.6);
    let cy = h * rng.gen_range(0.4..0.6);
    let rx = w * rng.gen_range(0.2..0.34);
    let ry = h * rng.gen_range(0.2..0.34);
    let base: [f64; 3] = [rng.gen_range(40.0..215.0), rng.gen_range(40.0..215.0), rng.gen_range(40.0..215.0)];
    let grad: [f64; 3] = [rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0)];
    let mut img = RgbaImage::filled(width, height, [0, 0, 0, 0]).expect("non-zero size");
    for y in 0..height {
        for x in 0..width {
            let dx = (x as f64 + 0.5 - cx) / rx;
            let dy = (y as f64 + 0.5 - cy) / ry;
            let r = (dx * dx + dy * dy).sqrt();
            let alpha = if r <= 0.95 {
                255
            } else if r <= 1.05 {
                128
            } else {
                continue;
            };
            let t = (dx + dy) * 0.5;
            let mut px = [0u8; 4];
            for c in 0..3 {
                px[c] = (base[c] + grad[c] * t).round().clamp(0.0, 255.0) as u8;
            }
            px[3] = alpha;
            img.put(x, y, px);
        }
    }
    img
}

/// Adds independent uniform noise in `[-amplitude, amplitude]` to RGB.
pub fn perturb(img: &RgbaImage, amplitude: u8, key: SeedKey) -> RgbaImage {
    let mut rng = key.rng();
    let mut out = img.clone();
    let a = amplitude as i32;
    for px in out.pixels_mut().chunks_exact_mut(4) {
        for v in &mut px[..3] {
            *v = (*v as i32 + rng.gen_range(-a..=a)).clamp(0, 255) as u8;
        }
    }
    out
}

fn write_png(path: &Path, img: &RgbaImage) -> Result<()> {
    fsutil::write_atomic(path, &encode_rgba_png(img)?)
}

/// `count` renders named `rNNN.png` in `dir`.
pub fn write_renders(dir: &Path, count: usize, size: u32, key: SeedKey) -> Result<()> {
    for i in 0..count {
        let img = synthetic_render(size, size, key.derive_index(i as u64));
        write_png(&dir.join(format!("r{i:03}.png")), &img)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusSpec {
    pub objects: usize,
    pub views_per_object: u32,
    /// The first `reference_views` views of each object are references.
    pub reference_views: u32,
    pub size: u32,
}

pub const INPUT_MANIFEST: &str = "inputs.json";

/// Writes `images/objNNN/VVV.png` and `inputs.json` with poses cycled
/// through the 36-view grid. Returns the manifest path.
pub fn write_input_corpus(dir: &Path, layout: CorpusSpec, key: SeedKey) -> Result<PathBuf> {
    let poses = viewset_neus36(1.5)?.poses;
    let mut rows = Vec::new();
    for o in 0..layout.objects {
        let object_id = format!("obj{o:03}");
        let okey = key.derive(&object_id);
        for v in 0..layout.views_per_object {
            let rel = format!("images/{object_id}/{v:03}.png");
            write_png(&dir.join(&rel), &synthetic_render(layout.size, layout.size, okey.derive_index(v as u64)))?;
            rows.push(InputRow {
                object_id: object_id.clone(),
                view_index: v,
                image_path: rel,
                pose: poses[v as usize % poses.len()],
                role: if v < layout.reference_views {
                    ViewRole::Reference
                } else {
                    ViewRole::Target
                },
            });
        }
    }
    let manifest = dir.join(INPUT_MANIFEST);
    fsutil::write_json_atomic(&manifest, &rows)?;
    Ok(manifest)
}

pub const EVAL_DATASET: &str = "synth";
pub const GT_MANIFEST: &str = "gt.json";

/// Ground truth for three objects and predictions for reference counts 1 and
/// 3, noisier with fewer references. One prediction equals its ground truth
/// exactly. Returns `(pred_dir, gt_manifest)`.
pub fn write_eval_2d(dir: &Path, size: u32, key: SeedKey) -> Result<(PathBuf, PathBuf)> {
    let pred_dir = dir.join("pred");
    let mut rows = Vec::new();
    for o in 0..3u32 {
        let object_id = format!("obj{o:03}");
        for n in [1u32, 3] {
            for view in 0..n + 3 {
                let gt_key = key.derive(&object_id).derive_index(view as u64);
                let gt = synthetic_render(size, size, gt_key);
                let gt_rel = format!("gt/{object_id}/{view:03}.png");
                write_png(&dir.join(&gt_rel), &gt)?;
                let exact = o == 2 && n == 3 && view == 4;
                let pred = if exact {
                    gt
                } else {
                    let amp = (24 / n) as u8;
                    perturb(&gt, amp, gt_key.derive("pred").derive_index(n as u64))
                };
                let pred_rel = crate::metrics2d::default_pred_path(EVAL_DATASET, &object_id, n, view);
                write_png(&pred_dir.join(pred_rel), &pred)?;
                rows.push(GtRow {
                    dataset: EVAL_DATASET.into(),
                    object_id: object_id.clone(),
                    view_index: view,
                    n_ref_views: n,
                    gt_path: gt_rel,
                    input_view: view < n,
                    pred_path: None,
                });
            }
        }
    }
    let manifest = dir.join(GT_MANIFEST);
    fsutil::write_json_atomic(&manifest, &rows)?;
    Ok((pred_dir, manifest))
}

pub fn to_ply_ascii(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.faces.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

/// A box and a sphere as ground truth, with coarser or distorted predictions
/// under `pred/ref1` and `pred/ref3`. Returns `(pred_dir, gt_dir)`.
pub fn write_eval_3d(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let gt = dir.join("gt");
    let pred = dir.join("pred");
    fsutil::write_atomic(&gt.join("box.obj"), box_mesh([-0.5; 3], [0.5; 3]).to_obj_string().as_bytes())?;
    fsutil::write_atomic(&gt.join("ball.ply"), to_ply_ascii(&uv_sphere([0.0; 3], 0.5, 16, 24)).as_bytes())?;
    for (n, top, stacks) in [(1u32, 0.2, 6u32), (3, 0.4, 10)] {
        let sub = pred.join(format!("ref{n}"));
        let b = box_mesh([-0.5; 3], [0.5, 0.5, top]);
        fsutil::write_atomic(&sub.join("box.obj"), b.to_obj_string().as_bytes())?;
        let s = uv_sphere([0.05, 0.0, 0.0], 0.5, stacks, stacks * 2);
        fsutil::write_atomic(&sub.join("ball.obj"), s.to_obj_string().as_bytes())?;
    }
    Ok((pred, gt))
}

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub renders: PathBuf,
    pub inputs: PathBuf,
    pub pred_2d: PathBuf,
    pub gt_2d: PathBuf,
    pub pred_3d: PathBuf,
    pub gt_3d: PathBuf,
}

/// Writes the full fixture set under `dir`.
pub fn write_all(dir: &Path, seed: u64) -> Result<FixturePaths> {
    let key = SeedKey::new(seed).derive("fixtures");
    let renders = dir.join("renders");
    write_renders(&renders, 12, 64, key.derive("renders"))?;
    let inputs = write_input_corpus(
        &dir.join("corpus"),
        CorpusSpec {
            objects: 4,
            views_per_object: 6,
            reference_views: 3,
            size: 64,
        },
        key.derive("corpus"),
    )?;
    let (pred_2d, gt_2d) = write_eval_2d(&dir.join("eval2d"), 48, key.derive("eval2d"))?;
    let (pred_3d, gt_3d) = write_eval_3d(&dir.join("eval3d"))?;
    Ok(FixturePaths {
        renders,
        inputs,
        pred_2d,
        gt_2d,
        pred_3d,
        gt_3d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_are_deterministic_and_nonempty() {
        let a = synthetic_render(32, 32, SeedKey::new(3));
        let b = synthetic_render(32, 32, SeedKey::new(3));
        assert_eq!(a, b);
        let opaque = a.alpha().filter(|&v| v == 255).count();
        assert!(opaque > 100, "{opaque}");
        assert_ne!(a, synthetic_render(32, 32, SeedKey::new(4)));
    }
}
