//! Mesh evaluation: loading, normalization, surface sampling, Chamfer
//! distance and volume IoU.

pub mod evaluate;
pub mod kdtree;
pub mod mesh;
pub mod pointcloud;
pub mod voxel;

pub use evaluate::{aggregate_3d, evaluate_3d, Aggregate3d, Eval3dOptions, Eval3dOutput, MeshRecord, MeshStatus};
pub use kdtree::KdTree;
pub use mesh::{load_mesh, normalize_mesh, Aabb, Point3, TriMesh};
pub use pointcloud::{chamfer, chamfer_points, sample_surface, PointSample};
pub use voxel::{volume_iou, voxelize, VoxelGrid};
