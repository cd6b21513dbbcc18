//! Static 3-D kd-tree for exact nearest-neighbour distance queries.

use super::mesh::Point3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point3>,
    nodes: Vec<Node>,
}

/// Squared Euclidean distance; the summation order is fixed so every caller
/// gets bit-identical values for the same pair.
#[inline]
pub fn dist2(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn build(points: &[Point3]) -> KdTree {
        let mut pts = points.to_vec();
        let mut nodes = Vec::new();
        if !pts.is_empty() {
            let n = pts.len();
            build_rec(&mut pts, 0, n, &mut nodes);
        }
        KdTree { points: pts, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance to the nearest stored point, `None` for an empty tree.
    pub fn nearest_dist2(&self, q: &Point3) -> Option<f64> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &Point3, best: &mut f64) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for p in &self.points[start..end] {
                    let d = dist2(p, q);
                    if d < *best {
                        *best = d;
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= *best {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build_rec(pts: &mut [Point3], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let slice = &mut pts[start..end];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in slice.iter() {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap_or(0);
    if hi[axis] - lo[axis] == 0.0 {
        // all points coincide
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    let value = slice[mid][axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    // left holds [start, start+mid) with coords <= value, right the rest with coords >= value
    let left = build_rec(pts, start, start + mid, nodes);
    let right = build_rec(pts, start + mid, end, nodes);
    nodes[id] = Node::Split { axis, value, left, right };
    id
}
