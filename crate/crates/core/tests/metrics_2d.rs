use std::path::Path;

use occkit::harness::{csvio, fixtures};
use occkit::metrics2d::{
    aggregate_2d, composite_background, evaluate_2d, evaluate_rows, psnr, ssim, Eval2dOptions, EvalMode, GtRow,
    SsimParams,
};
use occkit::raster::{encode_rgba_png, RgbImage, RgbaImage};
use occkit::seed::SeedKey;
use occkit::{fsutil, Error};
use rand::seq::SliceRandom;
use rand::Rng;

fn pattern_image(w: u32, h: u32) -> RgbImage {
    let mut px = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                px.push(((x * 7 + y * 13 + c * 50 + (x * y) % 17) % 256) as u8);
            }
        }
    }
    RgbImage::new(w, h, px).unwrap()
}

fn map_pixels(img: &RgbImage, f: impl Fn(usize, u8) -> u8) -> RgbImage {
    let px = img.pixels().iter().enumerate().map(|(i, &v)| f(i, v)).collect();
    RgbImage::new(img.width(), img.height(), px).unwrap()
}

// Values from skimage 0.25.2 structural_similarity with gaussian_weights=True,
// sigma=1.5, use_sample_covariance=False, data_range=255, channel_axis=2, on
// the same generated 36x40 image.
const SKIMAGE_NEGATIVE: f64 = -0.6771552347063027;
const SKIMAGE_NOISY: f64 = 0.9750449478258086;

#[test]
fn ssim_negative_matches_reference_implementation() {
    let a = pattern_image(36, 40);
    let neg = map_pixels(&a, |_, v| 255 - v);
    let s = ssim(&a, &neg, &SsimParams::default()).unwrap();
    assert!(s < 0.0);
    assert!((s - SKIMAGE_NEGATIVE).abs() < 1e-9, "{s}");
}

#[test]
fn ssim_structured_noise_matches_reference_implementation() {
    let a = pattern_image(36, 40);
    let (w, _) = (36usize, 40usize);
    let d = map_pixels(&a, |i, v| {
        let c = i % 3;
        let x = (i / 3) % w;
        let y = (i / 3) / w;
        let n = ((x * 3 + y * 5 + c * 11) % 23) as i32 - 11;
        (v as i32 + n).clamp(0, 255) as u8
    });
    let s = ssim(&a, &d, &SsimParams::default()).unwrap();
    assert!((s - SKIMAGE_NOISY).abs() < 1e-9, "{s}");
}

/// Full 2D window sums at every valid position, no separability.
fn ssim_direct(a: &RgbImage, b: &RgbImage) -> f64 {
    let (w, h) = (a.width() as usize, a.height() as usize);
    let g: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / 4.5).exp()).collect();
    let mut win = [[0.0f64; 11]; 11];
    let mut total = 0.0;
    for j in 0..11 {
        for i in 0..11 {
            win[j][i] = g[i] * g[j];
            total += win[j][i];
        }
    }
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let mut acc = 0.0;
    for ch in 0..3 {
        let at = |img: &RgbImage, x: usize, y: usize| img.pixels()[(y * w + x) * 3 + ch] as f64;
        let mut s = 0.0;
        for y0 in 0..=h - 11 {
            for x0 in 0..=w - 11 {
                let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for j in 0..11 {
                    for i in 0..11 {
                        let k = win[j][i] / total;
                        let (va, vb) = (at(a, x0 + i, y0 + j), at(b, x0 + i, y0 + j));
                        ma += k * va;
                        mb += k * vb;
                        aa += k * va * va;
                        bb += k * vb * vb;
                        ab += k * va * vb;
                    }
                }
                let (sa, sb, sab) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
                s += (2.0 * ma * mb + c1) * (2.0 * sab + c2) / ((ma * ma + mb * mb + c1) * (sa + sb + c2));
            }
        }
        acc += s / ((w - 10) * (h - 10)) as f64;
    }
    acc / 3.0
}

#[test]
fn ssim_matches_direct_window_computation() {
    let mut rng = SeedKey::new(11).rng();
    for _ in 0..5 {
        let (w, h) = (rng.gen_range(11..30u32), rng.gen_range(11..30u32));
        let n = (w * h * 3) as usize;
        let a = RgbImage::new(w, h, (0..n).map(|_| rng.gen()).collect()).unwrap();
        let b = map_pixels(&a, |i, v| v.saturating_add((i * 37 % 40) as u8) / 2 + 20);
        let fast = ssim(&a, &b, &SsimParams::default()).unwrap();
        let slow = ssim_direct(&a, &b);
        assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
    }
}

#[test]
fn ssim_symmetry_and_translation_sensitivity() {
    let a = pattern_image(30, 30);
    let b = map_pixels(&a, |i, v| v.wrapping_add((i % 7) as u8));
    let p = SsimParams::default();
    assert_eq!(ssim(&a, &b, &p).unwrap().to_bits(), ssim(&b, &a, &p).unwrap().to_bits());
    assert!((ssim(&a, &a, &p).unwrap() - 1.0).abs() < 1e-9);
    let shifted = map_pixels(&a, |i, _| {
        let (x, y) = ((i / 3) % 30, (i / 3) / 30);
        a.pixels()[(y * 30 + (x + 1).min(29)) * 3 + i % 3]
    });
    assert!(ssim(&a, &shifted, &p).unwrap() < 1.0);
    let small = pattern_image(10, 30);
    assert!(ssim(&small, &small, &p).is_err());
}

#[test]
fn psnr_offset_and_symmetry() {
    let a = RgbImage::new(8, 8, vec![100; 192]).unwrap();
    let b = RgbImage::new(8, 8, vec![116; 192]).unwrap();
    let expected = 10.0 * (255.0f64 * 255.0 / 256.0).log10();
    let v = psnr(&a, &b, 255.0).unwrap();
    assert!((v - expected).abs() < 1e-12);
    assert!((v - 24.05).abs() < 0.01);
    assert_eq!(v.to_bits(), psnr(&b, &a, 255.0).unwrap().to_bits());
    assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
    let c = RgbImage::new(4, 8, vec![0; 96]).unwrap();
    assert!(matches!(psnr(&a, &c, 255.0), Err(Error::DimensionMismatch(_))));
}

#[test]
fn compositing_examples() {
    let half = RgbaImage::filled(2, 2, [0, 0, 0, 128]).unwrap();
    assert_eq!(composite_background(&half, [255; 3]).pixels(), &[127u8; 12][..]);
    let clear = RgbaImage::filled(2, 2, [9, 9, 9, 0]).unwrap();
    assert_eq!(composite_background(&clear, [255; 3]).pixels(), &[255u8; 12][..]);
    let opaque = RgbaImage::filled(1, 1, [1, 2, 3, 255]).unwrap();
    assert_eq!(composite_background(&opaque, [255; 3]).pixels(), &[1u8, 2, 3][..]);
}

fn write_rgba(path: &Path, img: &RgbaImage) {
    fsutil::write_atomic(path, &encode_rgba_png(img).unwrap()).unwrap();
}

#[test]
fn identical_predictions_give_perfect_scores() {
    let dir = tempfile::tempdir().unwrap();
    let (_, gt) = fixtures::write_eval_2d(dir.path(), 24, SeedKey::new(5)).unwrap();
    // The ground-truth files themselves serve as predictions.
    let rows: Vec<GtRow> = fsutil::read_json(&gt).unwrap();
    let pred = dir.path().join("same");
    for r in &rows {
        let img = occkit::raster::read_rgba_png(&dir.path().join(&r.gt_path)).unwrap();
        let rel = occkit::metrics2d::default_pred_path(&r.dataset, &r.object_id, r.n_ref_views, r.view_index);
        write_rgba(&pred.join(rel), &img);
    }
    for mode in [EvalMode::Nvs, EvalMode::Amodal] {
        let opts = Eval2dOptions {
            mode,
            ..Eval2dOptions::default()
        };
        let out = evaluate_2d(&pred, &gt, &opts).unwrap();
        assert_eq!(out.flagged(), 0);
        for a in &out.aggregates {
            assert!((a.mean_ssim - 1.0).abs() < 1e-9);
            assert_eq!(a.mean_psnr, f64::INFINITY);
            assert_eq!(a.inf_count, a.count);
        }
    }
}

#[test]
fn empty_intersection_is_a_hard_error() {
    let dir = tempfile::tempdir().unwrap();
    let (_, gt) = fixtures::write_eval_2d(dir.path(), 24, SeedKey::new(5)).unwrap();
    let empty = dir.path().join("nothing");
    std::fs::create_dir_all(&empty).unwrap();
    let err = evaluate_2d(&empty, &gt, &Eval2dOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NoEvaluablePairs));
    assert_eq!(err.to_string(), "no evaluable pairs");
}

#[test]
fn unreadable_prediction_is_flagged_and_excluded() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gt) = fixtures::write_eval_2d(dir.path(), 24, SeedKey::new(5)).unwrap();
    let rows: Vec<GtRow> = fsutil::read_json(&gt).unwrap();
    let victim = rows.iter().find(|r| !r.input_view).unwrap();
    let p = pred.join(occkit::metrics2d::default_pred_path(
        &victim.dataset,
        &victim.object_id,
        victim.n_ref_views,
        victim.view_index,
    ));
    std::fs::write(&p, b"not a png").unwrap();
    let out = evaluate_rows(&pred, &rows, dir.path(), &Eval2dOptions::default()).unwrap();
    assert_eq!(out.flagged(), 1);
    let total: usize = out.aggregates.iter().map(|a| a.count).sum();
    assert_eq!(total, out.records.len() - 1);
}

#[test]
fn aggregation_is_order_independent() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gt) = fixtures::write_eval_2d(dir.path(), 24, SeedKey::new(8)).unwrap();
    let out = evaluate_2d(&pred, &gt, &Eval2dOptions::default()).unwrap();
    let mut rng = SeedKey::new(1).rng();
    for _ in 0..10 {
        let mut recs = out.records.clone();
        recs.shuffle(&mut rng);
        let again = aggregate_2d(&recs);
        assert_eq!(again.len(), out.aggregates.len());
        for (x, y) in again.iter().zip(&out.aggregates) {
            assert_eq!(x.mean_psnr.to_bits(), y.mean_psnr.to_bits());
            assert_eq!(x.mean_ssim.to_bits(), y.mean_ssim.to_bits());
        }
    }
}

#[test]
fn aggregates_recompute_from_row_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gt) = fixtures::write_eval_2d(dir.path(), 24, SeedKey::new(9)).unwrap();
    let out = evaluate_2d(&pred, &gt, &Eval2dOptions::default()).unwrap();
    let bytes = csvio::metrics_2d_csv(&out.records).unwrap();
    // Plain recomputation from CSV text, in file order.
    let mut rdr = csv::Reader::from_reader(&bytes[..]);
    let mut sums: std::collections::BTreeMap<(String, String), (f64, usize, f64, usize, usize)> = Default::default();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[6] != "ok" {
            continue;
        }
        let e = sums.entry((rec[0].to_string(), rec[3].to_string())).or_default();
        if &rec[4] == "inf" {
            e.4 += 1;
        } else {
            e.0 += rec[4].parse::<f64>().unwrap();
            e.1 += 1;
        }
        e.2 += rec[5].parse::<f64>().unwrap();
        e.3 += 1;
    }
    assert_eq!(sums.len(), out.aggregates.len());
    for a in &out.aggregates {
        let s = sums[&(a.dataset.clone(), a.n_ref_views.to_string())];
        assert_eq!(a.mean_psnr, s.0 / s.1 as f64);
        assert_eq!(a.mean_ssim, s.2 / s.3 as f64);
        assert_eq!(a.count, s.3);
        assert_eq!(a.inf_count, s.4);
    }
}
