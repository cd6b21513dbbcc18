//! Markdown summaries. Every number in the markdown is copied verbatim from
//! the aggregate CSV text, so the two can never disagree.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::csvio;
use crate::metrics2d::{aggregate_2d, MetricRecord};
use crate::metrics3d::{aggregate_3d, MeshRecord};

pub const SUMMARY: &str = "summary.md";
const MISSING: &str = "-";

/// A parsed CSV table kept as raw strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(bytes);
        let header = rdr
            .headers()
            .map_err(|e| Error::csv("aggregate", e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec.map_err(|e| Error::csv("aggregate", e))?.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::csv("aggregate", format!("missing column {name}")))
    }
}

fn label(column: &str) -> String {
    match column {
        "mean_psnr" => "PSNR".into(),
        "mean_ssim" => "SSIM".into(),
        "mean_chamfer" => "Chamfer".into(),
        "mean_volume_iou" => "Volume IoU".into(),
        "count" => "Count".into(),
        "inf_count" => "Inf".into(),
        other => other.strip_prefix("mean_").unwrap_or(other).to_uppercase(),
    }
}

/// One markdown table per dataset. Rows follow `ref_views`; groups present
/// in the CSV but not in the grid are appended in CSV order.
pub fn markdown_tables(title: &str, table: &Table, ref_views: &[u32]) -> Result<String> {
    let ds = table.column("dataset")?;
    let nr = table.column("n_ref_views")?;
    let value_cols: Vec<usize> = (0..table.header.len()).filter(|&i| i != ds && i != nr).collect();
    let mut datasets: Vec<&str> = Vec::new();
    for r in &table.rows {
        if !datasets.contains(&r[ds].as_str()) {
            datasets.push(&r[ds]);
        }
    }
    let mut out = String::new();
    for d in datasets {
        let _ = writeln!(out, "## {d} ({title})\n");
        let mut head = vec!["# Ref. Views".to_string()];
        head.extend(value_cols.iter().map(|&i| label(&table.header[i])));
        let _ = writeln!(out, "| {} |", head.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(head.len()));
        let rows: Vec<&Vec<String>> = table.rows.iter().filter(|r| r[ds] == d).collect();
        let grid: BTreeSet<String> = ref_views.iter().map(|v| v.to_string()).collect();
        let mut emit = |group: &str, row: Option<&Vec<String>>| {
            let mut cells = vec![group.to_string()];
            cells.extend(value_cols.iter().map(|&i| row.map_or(MISSING.to_string(), |r| r[i].clone())));
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        };
        for v in ref_views {
            let g = v.to_string();
            emit(&g, rows.iter().find(|r| r[nr] == g).copied());
        }
        for r in rows.iter().filter(|r| !grid.contains(&r[nr])) {
            emit(&r[nr], Some(r));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes aggregate CSVs and `summary.md` for whichever record sets are given.
/// Returns the written file names.
pub fn write_report(
    dir: &Path,
    records_2d: Option<&[MetricRecord]>,
    records_3d: Option<&[MeshRecord]>,
    ref_views: &[u32],
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let mut md = String::from("# Evaluation summary\n\n");
    if let Some(recs) = records_2d {
        let agg = csvio::aggregate_2d_csv(&aggregate_2d(recs))?;
        csvio::write(&dir.join(csvio::AGGREGATE_2D), &agg)?;
        written.push(csvio::AGGREGATE_2D.to_string());
        md.push_str(&markdown_tables("2D", &Table::from_csv(&agg)?, ref_views)?);
    }
    if let Some(recs) = records_3d {
        let agg = csvio::aggregate_3d_csv(&aggregate_3d(recs))?;
        csvio::write(&dir.join(csvio::AGGREGATE_3D), &agg)?;
        written.push(csvio::AGGREGATE_3D.to_string());
        md.push_str(&markdown_tables("3D", &Table::from_csv(&agg)?, ref_views)?);
    }
    csvio::write(&dir.join(SUMMARY), md.as_bytes())?;
    written.push(SUMMARY.to_string());
    Ok(written)
}

/// Row CSVs gathered from report inputs.
#[derive(Debug, Default)]
pub struct CollectedRows {
    pub records_2d: Vec<MetricRecord>,
    pub records_3d: Vec<MeshRecord>,
    pub sources: Vec<PathBuf>,
}

fn header_of(path: &Path) -> Result<Vec<String>> {
    let ctx = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(&ctx, e))?;
    Ok(rdr.headers().map_err(|e| Error::csv(&ctx, e))?.iter().map(str::to_string).collect())
}

/// Accepts row CSV files or directories containing `metrics.csv` /
/// `metrics_3d.csv`. Duplicate row keys across inputs are an error.
pub fn collect_rows(inputs: &[PathBuf]) -> Result<CollectedRows> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            for name in [csvio::METRICS_2D, csvio::METRICS_3D] {
                if p.join(name).is_file() {
                    files.push(p.join(name));
                }
            }
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(Error::Config(format!("report input {} does not exist", p.display())));
        }
    }
    let mut out = CollectedRows::default();
    for f in files {
        let header = header_of(&f)?;
        if header.iter().any(|h| h == "view_index") {
            out.records_2d.extend(csvio::read_metrics_2d(&f)?);
        } else if header.iter().any(|h| h == "chamfer") {
            out.records_3d.extend(csvio::read_metrics_3d(&f)?);
        } else {
            return Err(Error::csv(f.display().to_string(), "not a row metrics CSV"));
        }
        out.sources.push(f);
    }
    if out.sources.is_empty() {
        return Err(Error::Config("no metric CSVs among report inputs".into()));
    }
    out.records_2d.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    for w in out.records_2d.windows(2) {
        if w[0].sort_key() == w[1].sort_key() {
            return Err(Error::Config(format!(
                "duplicate 2D row {}/{}/ref{}/{}",
                w[0].dataset, w[0].object_id, w[0].n_ref_views, w[0].view_index
            )));
        }
    }
    let key3 = |r: &MeshRecord| (r.dataset.clone(), r.n_ref_views, r.object_id.clone());
    out.records_3d.sort_by_key(key3);
    for w in out.records_3d.windows(2) {
        if key3(&w[0]) == key3(&w[1]) {
            return Err(Error::Config(format!(
                "duplicate 3D row {}/ref{}/{}",
                w[0].dataset, w[0].n_ref_views, w[0].object_id
            )));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markdown_has_grid_rows_and_verbatim_values() {
        let csv = b"dataset,n_ref_views,mean_psnr,mean_ssim,count,inf_count\n\
gso,1,18.25,0.8125,30,0\ngso,3,inf,1,4,4\ngso,4,20.5,0.9,2,0\nrtmv,2,12.0000001,0.5,1,0\n";
        let t = Table::from_csv(csv).unwrap();
        let md = markdown_tables("2D", &t, &[1, 2, 3, 5, 10]).unwrap();
        assert!(md.contains("## gso (2D)"));
        assert!(md.contains("| # Ref. Views | PSNR | SSIM | Count | Inf |"));
        assert!(md.contains("| 1 | 18.25 | 0.8125 | 30 | 0 |"));
        assert!(md.contains("| 2 | - | - | - | - |"));
        assert!(md.contains("| 3 | inf | 1 | 4 | 4 |"));
        assert!(md.contains("| 4 | 20.5 | 0.9 | 2 | 0 |"));
        assert!(md.contains("| 2 | 12.0000001 | 0.5 | 1 | 0 |"));
        let gso = md.split("## rtmv").next().unwrap();
        let order: Vec<usize> = ["\n| 1 |", "\n| 2 |", "\n| 3 |", "\n| 5 |", "\n| 10 |", "\n| 4 |"]
            .iter()
            .map(|p| gso.find(p).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }
}
