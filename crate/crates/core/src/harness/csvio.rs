//! Row and aggregate CSVs. Floats are written in shortest round-trip form,
//! so values read back are bit-identical; identical-image PSNR is `inf`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::metrics2d::{Aggregate2d, MetricRecord, RowStatus};
use crate::metrics3d::{Aggregate3d, MeshRecord, MeshStatus};

pub const METRICS_2D: &str = "metrics.csv";
pub const AGGREGATE_2D: &str = "aggregate.csv";
pub const METRICS_3D: &str = "metrics_3d.csv";
pub const AGGREGATE_3D: &str = "aggregate_3d.csv";

pub const HEADER_2D: [&str; 7] = ["dataset", "object_id", "view_index", "n_ref_views", "psnr_db", "ssim", "status"];
pub const HEADER_AGG_2D: [&str; 6] = ["dataset", "n_ref_views", "mean_psnr", "mean_ssim", "count", "inf_count"];
pub const HEADER_3D: [&str; 7] = ["dataset", "object_id", "n_ref_views", "chamfer", "volume_iou", "watertight_pred", "status"];
pub const HEADER_AGG_3D: [&str; 5] = ["dataset", "n_ref_views", "mean_chamfer", "mean_volume_iou", "count"];

pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn parse_opt(s: &str, ctx: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::csv(ctx, format!("bad number {s:?}")))
}

fn to_bytes(header: Vec<String>, rows: Vec<Vec<String>>, ctx: &str) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&header).map_err(|e| Error::csv(ctx, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::csv(ctx, e))?;
    }
    w.into_inner().map_err(|e| Error::csv(ctx, e))
}

/// Extra score columns appear after the fixed columns, in sorted order.
fn extra_names_2d<'a>(names: impl Iterator<Item = &'a String>) -> Vec<String> {
    let mut v: Vec<String> = names.cloned().collect();
    v.sort();
    v.dedup();
    v
}

pub fn metrics_2d_csv(records: &[MetricRecord]) -> Result<Vec<u8>> {
    let extras = extra_names_2d(records.iter().flat_map(|r| r.extra.keys()));
    let mut header: Vec<String> = HEADER_2D.iter().map(|s| s.to_string()).collect();
    header.extend(extras.iter().cloned());
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![
                r.dataset.clone(),
                r.object_id.clone(),
                r.view_index.to_string(),
                r.n_ref_views.to_string(),
                fmt_opt(r.psnr_db),
                fmt_opt(r.ssim),
                r.status.as_str().to_string(),
            ];
            row.extend(extras.iter().map(|k| fmt_opt(r.extra.get(k).copied())));
            row
        })
        .collect();
    to_bytes(header, rows, METRICS_2D)
}

pub fn aggregate_2d_csv(aggs: &[Aggregate2d]) -> Result<Vec<u8>> {
    let extras = extra_names_2d(aggs.iter().flat_map(|a| a.extra_means.keys()));
    let mut header: Vec<String> = HEADER_AGG_2D.iter().map(|s| s.to_string()).collect();
    header.extend(extras.iter().map(|k| format!("mean_{k}")));
    let rows = aggs
        .iter()
        .map(|a| {
            let mut row = vec![
                a.dataset.clone(),
                a.n_ref_views.to_string(),
                fmt_f64(a.mean_psnr),
                fmt_f64(a.mean_ssim),
                a.count.to_string(),
                a.inf_count.to_string(),
            ];
            row.extend(extras.iter().map(|k| fmt_opt(a.extra_means.get(k).copied())));
            row
        })
        .collect();
    to_bytes(header, rows, AGGREGATE_2D)
}

pub fn metrics_3d_csv(records: &[MeshRecord]) -> Result<Vec<u8>> {
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.dataset.clone(),
                r.object_id.clone(),
                r.n_ref_views.to_string(),
                fmt_opt(r.chamfer),
                fmt_opt(r.volume_iou),
                r.watertight_pred.map(|b| b.to_string()).unwrap_or_default(),
                r.status.as_str().to_string(),
            ]
        })
        .collect();
    to_bytes(HEADER_3D.iter().map(|s| s.to_string()).collect(), rows, METRICS_3D)
}

pub fn aggregate_3d_csv(aggs: &[Aggregate3d]) -> Result<Vec<u8>> {
    let rows = aggs
        .iter()
        .map(|a| {
            vec![
                a.dataset.clone(),
                a.n_ref_views.to_string(),
                fmt_f64(a.mean_chamfer),
                fmt_f64(a.mean_volume_iou),
                a.count.to_string(),
            ]
        })
        .collect();
    to_bytes(HEADER_AGG_3D.iter().map(|s| s.to_string()).collect(), rows, AGGREGATE_3D)
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let ctx = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(&ctx, e))?;
    let header: Vec<String> = rdr.headers().map_err(|e| Error::csv(&ctx, e))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(&ctx, e))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn check_prefix(header: &[String], expected: &[&str], ctx: &str) -> Result<()> {
    if header.len() < expected.len() || header.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(Error::csv(ctx, format!("unexpected header {header:?}")));
    }
    Ok(())
}

fn parse_u32(s: &str, ctx: &str) -> Result<u32> {
    s.parse().map_err(|_| Error::csv(ctx, format!("bad integer {s:?}")))
}

pub fn read_metrics_2d(path: &Path) -> Result<Vec<MetricRecord>> {
    let ctx = path.display().to_string();
    let (header, rows) = read_table(path)?;
    check_prefix(&header, &HEADER_2D, &ctx)?;
    rows.into_iter()
        .map(|r| {
            let mut extra = std::collections::BTreeMap::new();
            for (name, v) in header.iter().zip(&r).skip(HEADER_2D.len()) {
                if let Some(x) = parse_opt(v, &ctx)? {
                    extra.insert(name.clone(), x);
                }
            }
            Ok(MetricRecord {
                dataset: r[0].clone(),
                object_id: r[1].clone(),
                view_index: parse_u32(&r[2], &ctx)?,
                n_ref_views: parse_u32(&r[3], &ctx)?,
                psnr_db: parse_opt(&r[4], &ctx)?,
                ssim: parse_opt(&r[5], &ctx)?,
                status: RowStatus::parse(&r[6]).ok_or_else(|| Error::csv(&ctx, format!("bad status {:?}", r[6])))?,
                extra,
            })
        })
        .collect()
}

pub fn read_metrics_3d(path: &Path) -> Result<Vec<MeshRecord>> {
    let ctx = path.display().to_string();
    let (header, rows) = read_table(path)?;
    check_prefix(&header, &HEADER_3D, &ctx)?;
    rows.into_iter()
        .map(|r| {
            Ok(MeshRecord {
                dataset: r[0].clone(),
                object_id: r[1].clone(),
                n_ref_views: parse_u32(&r[2], &ctx)?,
                chamfer: parse_opt(&r[3], &ctx)?,
                volume_iou: parse_opt(&r[4], &ctx)?,
                watertight_pred: match r[5].as_str() {
                    "" => None,
                    "true" => Some(true),
                    "false" => Some(false),
                    o => return Err(Error::csv(&ctx, format!("bad boolean {o:?}"))),
                },
                status: MeshStatus::parse(&r[6]).ok_or_else(|| Error::csv(&ctx, format!("bad status {:?}", r[6])))?,
            })
        })
        .collect()
}

/// Raw aggregate table as strings, used verbatim by the markdown report.
pub fn read_raw(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    read_table(path)
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fsutil::write_atomic(path, bytes)
}
