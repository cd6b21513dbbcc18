mod common;

use std::fs;

use occkit::fsutil;
use occkit::harness::{execute, Command, ExitStatus, RunConfig};
use occkit::occluder::{
    apply_solid_fill, build_paired_dataset, draw_occlusion_flag, read_input_manifest, read_paired_manifest,
    sample_path, DatasetConfig, FillPolicy, InputRow, SampleStatus, ViewRole, DEFAULT_FILL_RGB, MANIFEST_NAME,
};
use occkit::raster::{read_mask_png, read_rgba_png};
use occkit::seed::row_key;
use rand::seq::SliceRandom;

#[test]
fn zero_probability_copies_inputs_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let lib = common::library(dir.path(), 1);
    let manifest = common::corpus(&dir.path().join("c"), 3, 4, 4, 1);
    let rows = read_input_manifest(&manifest).unwrap();
    let cfg = DatasetConfig {
        p_occlude: 0.0,
        ..DatasetConfig::default()
    };
    let out = dir.path().join("out");
    let samples = build_paired_dataset(&rows, &dir.path().join("c"), &lib, &cfg, 3, &out, 2).unwrap();
    assert_eq!(samples.len(), rows.len());
    for s in &samples {
        let row = rows.iter().find(|r| r.object_id == s.object_id && r.view_index == s.view_index).unwrap();
        let src = fs::read(dir.path().join("c").join(&row.image_path)).unwrap();
        assert_eq!(fs::read(sample_path(&out, &s.clean_path)).unwrap(), src);
        assert_eq!(fs::read(sample_path(&out, &s.occluded_path)).unwrap(), src);
        assert_eq!(s.occlusion_fraction, 0.0);
        assert!(!s.occluded_flag);
    }
    common::verify_samples(&out, &samples).unwrap();
}

#[test]
fn certain_occlusion_respects_bounds_and_mask_soundness() {
    let dir = tempfile::tempdir().unwrap();
    let lib = common::library(dir.path(), 2);
    let manifest = common::corpus(&dir.path().join("c"), 6, 5, 5, 2);
    let rows = read_input_manifest(&manifest).unwrap();
    let cfg = DatasetConfig {
        p_occlude: 1.0,
        ..DatasetConfig::default()
    };
    let out = dir.path().join("out");
    let samples = build_paired_dataset(&rows, &dir.path().join("c"), &lib, &cfg, 4, &out, 4).unwrap();
    common::verify_samples(&out, &samples).unwrap();
    for s in samples.iter().filter(|s| s.status == SampleStatus::Ok) {
        assert!(s.occluded_flag);
        assert!((0.1..=0.6).contains(&s.occlusion_fraction), "{}", s.occlusion_fraction);
        let clean = read_rgba_png(&sample_path(&out, &s.clean_path)).unwrap();
        let mask = read_mask_png(&sample_path(&out, &s.mask_path)).unwrap();
        let refill = apply_solid_fill(&clean, &mask, DEFAULT_FILL_RGB).unwrap();
        assert_eq!(refill, read_rgba_png(&sample_path(&out, &s.occluded_path)).unwrap());
    }
    let failed = samples.iter().filter(|s| s.status != SampleStatus::Ok).count();
    assert!(failed * 10 <= samples.len(), "{failed} failures");
}

#[test]
fn source_texture_fill_changes_only_masked_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let lib = common::library(dir.path(), 3);
    let manifest = common::corpus(&dir.path().join("c"), 3, 3, 3, 3);
    let rows = read_input_manifest(&manifest).unwrap();
    let cfg = DatasetConfig {
        p_occlude: 1.0,
        fill: FillPolicy::SourceTexture,
        ..DatasetConfig::default()
    };
    let out = dir.path().join("out");
    let samples = build_paired_dataset(&rows, &dir.path().join("c"), &lib, &cfg, 4, &out, 2).unwrap();
    common::verify_samples(&out, &samples).unwrap();
    assert!(samples.iter().any(|s| s.occluded_flag));
}

#[test]
fn bernoulli_draw_rate_over_ten_thousand_rows() {
    let n = 10_000;
    let hits = (0..n)
        .filter(|&i| draw_occlusion_flag(row_key(42, "train", &format!("obj{}", i / 12), i % 12), 0.5))
        .count();
    let share = hits as f64 / n as f64;
    assert!((share - 0.5).abs() <= 0.02, "{share}");
}

#[test]
fn output_ignores_worker_count_and_row_order() {
    let dir = tempfile::tempdir().unwrap();
    let lib = common::library(dir.path(), 4);
    let base = dir.path().join("c");
    let manifest = common::corpus(&base, 5, 6, 3, 4);
    let rows = read_input_manifest(&manifest).unwrap();
    let mut shuffled = rows.clone();
    shuffled.shuffle(&mut occkit::seed::SeedKey::new(9).rng());
    let cfg = DatasetConfig::default();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    build_paired_dataset(&rows, &base, &lib, &cfg, 5, &a, 1).unwrap();
    build_paired_dataset(&shuffled, &base, &lib, &cfg, 5, &b, 8).unwrap();
    let (n, diffs) = occkit::harness::selftest::diff_trees(&a, &b).unwrap();
    assert!(n > rows.len());
    assert!(diffs.is_empty(), "{diffs:?}");
}

#[test]
fn unreadable_images_are_flagged_and_missing_poses_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let lib = common::library(dir.path(), 5);
    let base = dir.path().join("c");
    let manifest = common::corpus(&base, 2, 2, 2, 5);
    let rows = read_input_manifest(&manifest).unwrap();
    fs::write(base.join(&rows[1].image_path), b"garbage").unwrap();
    let out = dir.path().join("out");
    let samples = build_paired_dataset(&rows, &base, &lib, &DatasetConfig::default(), 1, &out, 2).unwrap();
    assert_eq!(samples.len(), rows.len());
    assert_eq!(samples.iter().filter(|s| s.status == SampleStatus::Unreadable).count(), 1);

    let mut json: serde_json::Value = fsutil::read_json(&manifest).unwrap();
    json[0].as_object_mut().unwrap().remove("pose");
    let broken = dir.path().join("broken.json");
    fsutil::write_json_atomic(&broken, &json).unwrap();
    assert!(read_input_manifest(&broken).is_err());
}

#[test]
fn manifest_has_exact_keys() {
    let dir = tempfile::tempdir().unwrap();
    let lib = common::library(dir.path(), 6);
    let base = dir.path().join("c");
    let manifest = common::corpus(&base, 1, 2, 2, 6);
    let rows = read_input_manifest(&manifest).unwrap();
    let out = dir.path().join("out");
    build_paired_dataset(&rows, &base, &lib, &DatasetConfig::default(), 1, &out, 1).unwrap();
    let json: serde_json::Value = fsutil::read_json(&out.join(MANIFEST_NAME)).unwrap();
    let mut keys: Vec<&String> = json[0].as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "clean_path",
            "mask_path",
            "object_id",
            "occluded_flag",
            "occluded_path",
            "occlusion_fraction",
            "pose",
            "seed_key",
            "status",
            "view_index"
        ]
    );
    let mut pose_keys: Vec<&String> = json[0]["pose"].as_object().unwrap().keys().collect();
    pose_keys.sort();
    assert_eq!(pose_keys, ["azimuth_deg", "elevation_deg", "radius", "roll_deg"]);
}

fn occnvs_run(dir: &std::path::Path, manifest: &std::path::Path, split: &str, name: &str) -> Vec<occkit::occluder::PairedSample> {
    let dataset = DatasetConfig {
        p_occlude: 1.0,
        split: split.into(),
        ..DatasetConfig::default()
    };
    let cfg = RunConfig::new(
        Command::MakeOccnvs {
            input: manifest.to_path_buf(),
            library: dir.join("lib"),
            dataset,
        },
        11,
        2,
    );
    let outcome = execute(&cfg, &dir.join("runs"), Some(name)).unwrap();
    assert_ne!(outcome.status, ExitStatus::Error, "{}", outcome.summary);
    read_paired_manifest(&outcome.output.join("dataset").join(MANIFEST_NAME)).unwrap()
}

#[test]
fn occnvs_split_occludes_references_and_keeps_targets_clean() {
    let dir = tempfile::tempdir().unwrap();
    let lib = common::library(dir.path(), 7);
    lib.save(&dir.path().join("lib")).unwrap();
    let base = dir.path().join("c");
    let manifest = common::corpus(&base, 4, 6, 3, 7);
    let rows: Vec<InputRow> = read_input_manifest(&manifest).unwrap();
    let test = occnvs_run(dir.path(), &manifest, "test", "test");
    assert_eq!(test.len(), rows.len());
    for (s, r) in test.iter().zip(rows.iter()) {
        assert_eq!((&s.object_id, s.view_index), (&r.object_id, r.view_index));
        match r.role {
            ViewRole::Reference => assert!(s.occluded_flag || s.status != SampleStatus::Ok),
            ViewRole::Target => {
                assert!(!s.occluded_flag);
                assert_eq!(
                    fs::read(base.join(&r.image_path)).unwrap(),
                    fs::read(dir.path().join("runs/test/dataset").join(&s.occluded_path)).unwrap()
                );
            }
        }
    }
    let train = occnvs_run(dir.path(), &manifest, "train", "train");
    let differing = test
        .iter()
        .zip(&train)
        .filter(|(a, b)| a.occluded_flag && b.occluded_flag)
        .filter(|(a, b)| {
            fs::read(dir.path().join("runs/test/dataset").join(&a.mask_path)).unwrap()
                != fs::read(dir.path().join("runs/train/dataset").join(&b.mask_path)).unwrap()
        })
        .count();
    assert!(differing > 0);
    assert!(test.iter().zip(&train).all(|(a, b)| a.seed_key != b.seed_key));
}
