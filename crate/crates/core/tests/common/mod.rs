#![allow(dead_code)]

use std::path::{Path, PathBuf};

use occkit::harness::fixtures::{self, CorpusSpec};
use occkit::occluder::{
    extract_silhouette, occlusion_fraction, read_paired_manifest, sample_path, PairedSample, SampleStatus,
    SilhouetteLibrary, DEFAULT_ALPHA_THRESHOLD, MANIFEST_NAME,
};
use occkit::raster::{read_mask_png, read_rgba_png};
use occkit::seed::SeedKey;

pub fn library(dir: &Path, seed: u64) -> SilhouetteLibrary {
    let renders = dir.join("renders");
    fixtures::write_renders(&renders, 16, 64, SeedKey::new(seed).derive("renders")).unwrap();
    SilhouetteLibrary::build_from_renders(&renders, DEFAULT_ALPHA_THRESHOLD).unwrap().0
}

pub fn corpus(dir: &Path, objects: usize, views: u32, references: u32, seed: u64) -> PathBuf {
    fixtures::write_input_corpus(
        dir,
        CorpusSpec {
            objects,
            views_per_object: views,
            reference_views: references,
            size: 64,
        },
        SeedKey::new(seed).derive("corpus"),
    )
    .unwrap()
}

/// Checks byte fidelity outside the mask and exact fraction accounting for
/// every sample. Returns a description of the first violation.
pub fn verify_samples(out: &Path, samples: &[PairedSample]) -> Result<(), String> {
    let on_disk = read_paired_manifest(&out.join(MANIFEST_NAME)).map_err(|e| e.to_string())?;
    if on_disk != samples {
        return Err("manifest on disk differs from returned samples".into());
    }
    for s in samples {
        if s.status == SampleStatus::Unreadable {
            continue;
        }
        let clean = read_rgba_png(&sample_path(out, &s.clean_path)).map_err(|e| e.to_string())?;
        let occl = read_rgba_png(&sample_path(out, &s.occluded_path)).map_err(|e| e.to_string())?;
        let mask = read_mask_png(&sample_path(out, &s.mask_path)).map_err(|e| e.to_string())?;
        let id = format!("{}/{}", s.object_id, s.view_index);
        for (i, &m) in mask.bits().iter().enumerate() {
            if !m && clean.pixels()[i * 4..i * 4 + 4] != occl.pixels()[i * 4..i * 4 + 4] {
                return Err(format!("{id}: pixel {i} changed outside the mask"));
            }
        }
        let object = extract_silhouette(&clean, DEFAULT_ALPHA_THRESHOLD);
        let f = if mask.popcount() == 0 {
            0.0
        } else {
            occlusion_fraction(&mask, &object).map_err(|e| e.to_string())?
        };
        if f != s.occlusion_fraction {
            return Err(format!("{id}: fraction {f} vs manifest {}", s.occlusion_fraction));
        }
        if s.occluded_flag != (mask.popcount() > 0) {
            return Err(format!("{id}: flag disagrees with mask"));
        }
    }
    Ok(())
}
