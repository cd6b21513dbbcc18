//! Occupancy grids by ray parity and volume IoU.
//!
//! Each (y, z) column of voxel centres casts one ray along +x. A centre is
//! inside when the number of surface crossings beyond it is odd. Columns
//! whose ray grazes an edge or vertex are re-cast from a slightly jittered
//! origin; the jitter is a hash of the column index so results are
//! reproducible.

use rayon::prelude::*;

use super::mesh::{Aabb, TriMesh};
use crate::error::{Error, Result};
use crate::seed::SeedKey;

pub const DEFAULT_RESOLUTION: usize = 64;
pub const BOUNDS_PADDING: f64 = 0.05;
const JITTER_ATTEMPTS: u64 = 8;
const JITTER_SCALE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub resolution: usize,
    pub bounds: Aabb,
    /// Index `x + N·(y + N·z)`.
    pub occupancy: Vec<bool>,
    /// Columns that needed a jittered ray.
    pub jittered_columns: usize,
}

impl VoxelGrid {
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        let n = self.resolution;
        x + n * (y + n * z)
    }

    pub fn occupied(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.occupied() as f64 / self.occupancy.len() as f64
    }

    pub fn voxel_volume(&self) -> f64 {
        let e = self.bounds.extent();
        let n = self.resolution as f64;
        (e[0] / n) * (e[1] / n) * (e[2] / n)
    }

    pub fn occupied_volume(&self) -> f64 {
        self.occupied() as f64 * self.voxel_volume()
    }
}

#[derive(Debug, Clone, Copy)]
struct Projected {
    /// (y, z) of each vertex
    yz: [[f64; 2]; 3],
    x: [f64; 3],
    ids: [u32; 3],
}

enum Hit {
    Miss,
    Cross(f64),
    Degenerate,
}

/// Signed area term of edge (u→v) against p, evaluated with the endpoints in
/// canonical (vertex id) order so triangles sharing an edge get exactly
/// negated values.
fn edge_fn(u: [f64; 2], uid: u32, v: [f64; 2], vid: u32, p: [f64; 2]) -> f64 {
    let (a, b, sign) = if uid <= vid { (u, v, 1.0) } else { (v, u, -1.0) };
    sign * ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))
}

fn intersect(t: &Projected, p: [f64; 2]) -> Hit {
    let [a, b, c] = t.yz;
    let [ia, ib, ic] = t.ids;
    let e0 = edge_fn(b, ib, c, ic, p);
    let e1 = edge_fn(c, ic, a, ia, p);
    let e2 = edge_fn(a, ia, b, ib, p);
    let area2 = e0 + e1 + e2;
    if area2 == 0.0 {
        // triangle is edge-on to the ray
        return Hit::Miss;
    }
    let pos = e0 > 0.0 && e1 > 0.0 && e2 > 0.0;
    let neg = e0 < 0.0 && e1 < 0.0 && e2 < 0.0;
    if pos || neg {
        let x = (e0 * t.x[0] + e1 * t.x[1] + e2 * t.x[2]) / area2;
        return Hit::Cross(x);
    }
    let nonneg = e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0;
    let nonpos = e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0;
    if nonneg || nonpos {
        Hit::Degenerate
    } else {
        Hit::Miss
    }
}

fn axis_centers(min: f64, max: f64, n: usize) -> Vec<f64> {
    let step = (max - min) / n as f64;
    (0..n).map(|i| min + (i as f64 + 0.5) * step).collect()
}

/// Index range of centres that may fall within `[lo, hi]`, widened by one
/// cell on each side to cover jittered rays.
fn center_range(lo: f64, hi: f64, min: f64, step: f64, n: usize) -> Option<(usize, usize)> {
    let a = ((lo - min) / step - 0.5).floor() as i64 - 1;
    let b = ((hi - min) / step - 0.5).ceil() as i64 + 1;
    let a = a.max(0);
    let b = b.min(n as i64 - 1);
    (a <= b).then_some((a as usize, b as usize))
}

fn fill_column(crossings: &mut [f64], xs: &[f64], out: &mut [bool]) {
    crossings.sort_by(|a, b| a.total_cmp(b));
    // number of crossings strictly greater than the centre
    let mut idx = 0;
    for (i, &cx) in xs.iter().enumerate() {
        while idx < crossings.len() && crossings[idx] <= cx {
            idx += 1;
        }
        out[i] = (crossings.len() - idx) % 2 == 1;
    }
}

/// Marks voxel centres inside the (assumed closed) mesh. Open meshes still
/// produce a grid but parity artifacts are possible; check
/// [`TriMesh::is_watertight`] to flag them.
pub fn voxelize(mesh: &TriMesh, resolution: usize, bounds: Aabb) -> Result<VoxelGrid> {
    if resolution == 0 {
        return Err(Error::Config("voxel resolution must be >= 1".into()));
    }
    let e = bounds.extent();
    if !(e[0] > 0.0 && e[1] > 0.0 && e[2] > 0.0) {
        return Err(Error::Degenerate("voxel bounds have zero extent".into()));
    }
    let n = resolution;
    let xs = axis_centers(bounds.min[0], bounds.max[0], n);
    let ys = axis_centers(bounds.min[1], bounds.max[1], n);
    let zs = axis_centers(bounds.min[2], bounds.max[2], n);
    let step_y = e[1] / n as f64;
    let step_z = e[2] / n as f64;

    let tris: Vec<Projected> = mesh
        .faces
        .iter()
        .enumerate()
        .map(|(f, ids)| {
            let [a, b, c] = mesh.triangle(f);
            Projected {
                yz: [[a[1], a[2]], [b[1], b[2]], [c[1], c[2]]],
                x: [a[0], b[0], c[0]],
                ids: *ids,
            }
        })
        .collect();

    let mut slabs: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (ti, t) in tris.iter().enumerate() {
        let zlo = t.yz.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let zhi = t.yz.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        if let Some((k0, k1)) = center_range(zlo, zhi, bounds.min[2], step_z, n) {
            for slab in &mut slabs[k0..=k1] {
                slab.push(ti as u32);
            }
        }
    }

    let per_slab: Vec<(Vec<bool>, usize)> = slabs
        .par_iter()
        .enumerate()
        .map(|(k, members)| {
            let mut occ = vec![false; n * n];
            let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); n];
            let mut degenerate = vec![false; n];
            for &ti in members {
                let t = &tris[ti as usize];
                let ylo = t.yz.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                let yhi = t.yz.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                let Some((j0, j1)) = center_range(ylo, yhi, bounds.min[1], step_y, n) else {
                    continue;
                };
                for j in j0..=j1 {
                    match intersect(t, [ys[j], zs[k]]) {
                        Hit::Cross(x) => crossings[j].push(x),
                        Hit::Degenerate => degenerate[j] = true,
                        Hit::Miss => {}
                    }
                }
            }
            let mut jittered = 0;
            for j in 0..n {
                if degenerate[j] {
                    jittered += 1;
                    crossings[j] = jitter_column(&tris, members, j, k, n, ys[j], zs[k], step_y, step_z);
                }
                fill_column(&mut crossings[j], &xs, &mut occ[j * n..(j + 1) * n]);
            }
            (occ, jittered)
        })
        .collect();

    let mut occupancy = Vec::with_capacity(n * n * n);
    let mut jittered_columns = 0;
    for (slab, j) in per_slab {
        occupancy.extend(slab);
        jittered_columns += j;
    }
    Ok(VoxelGrid {
        resolution,
        bounds,
        occupancy,
        jittered_columns,
    })
}

#[allow(clippy::too_many_arguments)]
fn jitter_column(
    tris: &[Projected],
    members: &[u32],
    j: usize,
    k: usize,
    n: usize,
    y: f64,
    z: f64,
    step_y: f64,
    step_z: f64,
) -> Vec<f64> {
    let column_key = SeedKey::new(0x766f_7865_6c00_0000).derive_index((k * n + j) as u64);
    let mut last = Vec::new();
    for attempt in 0..JITTER_ATTEMPTS {
        let key = column_key.derive_index(attempt);
        let dy = (key.derive("y").unit() - 0.5) * 2.0 * JITTER_SCALE * step_y;
        let dz = (key.derive("z").unit() - 0.5) * 2.0 * JITTER_SCALE * step_z;
        let p = [y + dy, z + dz];
        let mut xs = Vec::new();
        let mut clean = true;
        for &ti in members {
            match intersect(&tris[ti as usize], p) {
                Hit::Cross(x) => xs.push(x),
                Hit::Degenerate => clean = false,
                Hit::Miss => {}
            }
        }
        if clean {
            return xs;
        }
        last = xs;
    }
    last
}

/// Union of both bounding boxes, padded by 5% of the longest extent.
pub fn shared_bounds(a: &TriMesh, b: &TriMesh) -> Aabb {
    a.bounds().union(&b.bounds()).padded(BOUNDS_PADDING)
}

/// `|A ∧ B| / |A ∨ B|` on a shared grid.
pub fn grid_iou(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if a.resolution != b.resolution || a.bounds != b.bounds {
        return Err(Error::DimensionMismatch("voxel grids do not share a lattice".into()));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.occupancy.iter().zip(&b.occupancy) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        return Err(Error::NoOccupiedVoxels);
    }
    Ok(inter as f64 / union as f64)
}

/// Volume IoU of two meshes in their current frames.
pub fn volume_iou(a: &TriMesh, b: &TriMesh, resolution: usize) -> Result<f64> {
    let bounds = shared_bounds(a, b);
    let ga = voxelize(a, resolution, bounds)?;
    let gb = voxelize(b, resolution, bounds)?;
    grid_iou(&ga, &gb)
}
