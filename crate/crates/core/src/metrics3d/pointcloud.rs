//! Area-weighted surface sampling and Chamfer distance.

use rand::Rng;
use rayon::prelude::*;

use super::kdtree::KdTree;
use super::mesh::{Point3, TriMesh};
use crate::error::{Error, Result};
use crate::seed::SeedKey;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub points: Vec<Point3>,
    pub source_area: f64,
}

/// Draws exactly `n` points uniformly over the surface: triangles by area,
/// then uniform barycentric coordinates within the triangle.
pub fn sample_surface(mesh: &TriMesh, n: usize, key: SeedKey) -> Result<PointSample> {
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.triangle_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("mesh area is zero".into()));
    }
    let mut rng = key.rng();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.gen::<f64>() * total;
        let f = cumulative
            .partition_point(|&c| c <= target)
            .min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let s = r1.sqrt();
        let (wa, wb, wc) = (1.0 - s, s * (1.0 - r2), s * r2);
        points.push([
            wa * a[0] + wb * b[0] + wc * c[0],
            wa * a[1] + wb * b[1] + wc * c[1],
            wa * a[2] + wb * b[2] + wc * c[2],
        ]);
    }
    Ok(PointSample {
        points,
        source_area: total,
    })
}

/// Nearest-neighbour distance from each query point to `tree`, in query order.
pub fn nearest_distances(queries: &[Point3], tree: &KdTree, squared: bool) -> Vec<f64> {
    queries
        .par_iter()
        .map(|q| {
            let d2 = tree.nearest_dist2(q).expect("tree is non-empty");
            if squared {
                d2
            } else {
                d2.sqrt()
            }
        })
        .collect()
}

fn mean_sequential(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `½·(mean_a min_b d(a,b) + mean_b min_a d(a,b))` with unsquared distances,
/// or squared distances when `squared` is set.
pub fn chamfer_points(pred: &[Point3], gt: &[Point3], squared: bool) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let gt_tree = KdTree::build(gt);
    let pred_tree = KdTree::build(pred);
    let forward = mean_sequential(&nearest_distances(pred, &gt_tree, squared));
    let backward = mean_sequential(&nearest_distances(gt, &pred_tree, squared));
    Ok(0.5 * (forward + backward))
}

pub fn chamfer(pred: &PointSample, gt: &PointSample) -> Result<f64> {
    chamfer_points(&pred.points, &gt.points, false)
}
