//! Object-centric camera poses and the named view sets used by
//! reconstruction backends.
//!
//! Convention: z-up world, azimuth measured in the xy-plane from +x
//! counter-clockwise, elevation positive above the xy-plane. The camera looks
//! at the origin. Camera-to-world matrices use the OpenGL camera frame: the
//! columns of the rotation block are (right, up, back), so the camera looks
//! along its local -z.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four degrees of freedom: azimuth, elevation, radius, roll.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPose {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub radius: f64,
    pub roll_deg: f64,
}

impl SphericalPose {
    /// Validating constructor. Azimuth wraps into [0, 360) and roll into
    /// [-180, 180); elevation outside [-90, 90] is rejected.
    pub fn new(azimuth_deg: f64, elevation_deg: f64, radius: f64, roll_deg: f64) -> Result<Self> {
        if !azimuth_deg.is_finite() || !roll_deg.is_finite() {
            return Err(Error::InvalidPose("non-finite angle".into()));
        }
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::InvalidPose(format!(
                "elevation {elevation_deg} outside [-90, 90]"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidPose(format!("radius {radius} must be > 0")));
        }
        Ok(SphericalPose {
            azimuth_deg: wrap_azimuth(azimuth_deg),
            elevation_deg,
            radius,
            roll_deg: wrap_roll(roll_deg),
        })
    }

    /// Re-checks the invariants of a deserialized pose.
    pub fn validated(self) -> Result<Self> {
        SphericalPose::new(self.azimuth_deg, self.elevation_deg, self.radius, self.roll_deg)
    }

    /// Camera centre in world coordinates.
    pub fn position(&self) -> [f64; 3] {
        let (az, el) = (self.azimuth_deg.to_radians(), self.elevation_deg.to_radians());
        [
            self.radius * el.cos() * az.cos(),
            self.radius * el.cos() * az.sin(),
            self.radius * el.sin(),
        ]
    }
}

pub fn wrap_azimuth(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

fn wrap_roll(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0);
    let w = if w >= 360.0 { 0.0 } else { w };
    w - 180.0
}

/// 4×4 camera-to-world transform, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CameraMatrix(pub [[f64; 4]; 4]);

impl CameraMatrix {
    pub fn rotation(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[0][0], m[0][1], m[0][2]],
            [m[1][0], m[1][1], m[1][2]],
            [m[2][0], m[2][1], m[2][2]],
        ]
    }

    pub fn translation(&self) -> [f64; 3] {
        [self.0[0][3], self.0[1][3], self.0[2][3]]
    }

    fn column(&self, c: usize) -> [f64; 3] {
        [self.0[0][c], self.0[1][c], self.0[2][c]]
    }

    pub fn right(&self) -> [f64; 3] {
        self.column(0)
    }

    pub fn up(&self) -> [f64; 3] {
        self.column(1)
    }

    /// Viewing direction (negated local z axis).
    pub fn forward(&self) -> [f64; 3] {
        scale(self.column(2), -1.0)
    }

    /// Largest deviation of `RᵀR` from identity.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rotation();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    pub fn determinant(&self) -> f64 {
        let r = self.rotation();
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    scale(a, 1.0 / dot(a, a).sqrt())
}

/// Unrolled (right, up, forward) frame for a pose.
fn base_frame(pose: &SphericalPose) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (az, el) = (pose.azimuth_deg.to_radians(), pose.elevation_deg.to_radians());
    // Unit direction computed from angles so the frame does not depend on radius.
    let dir = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
    let forward = scale(dir, -1.0);
    let up_hint = if pose.elevation_deg.abs() >= 90.0 {
        // look-at is singular at the poles; use +x rotated by azimuth
        [az.cos(), az.sin(), 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let right = normalize(cross(forward, up_hint));
    let up = cross(right, forward);
    (right, up, forward)
}

/// Look-at construction toward the origin, roll applied about the viewing axis.
pub fn pose_to_matrix(pose: &SphericalPose) -> CameraMatrix {
    let (right0, up0, forward) = base_frame(pose);
    let roll = pose.roll_deg.to_radians();
    let (s, c) = roll.sin_cos();
    let right = [
        c * right0[0] + s * up0[0],
        c * right0[1] + s * up0[1],
        c * right0[2] + s * up0[2],
    ];
    let up = [
        -s * right0[0] + c * up0[0],
        -s * right0[1] + c * up0[1],
        -s * right0[2] + c * up0[2],
    ];
    let back = scale(forward, -1.0);
    let p = pose.position();
    CameraMatrix([
        [right[0], up[0], back[0], p[0]],
        [right[1], up[1], back[1], p[1]],
        [right[2], up[2], back[2], p[2]],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

/// Inverse of [`pose_to_matrix`] for matrices it produced.
pub fn matrix_to_pose(m: &CameraMatrix) -> Result<SphericalPose> {
    let t = m.translation();
    let radius = dot(t, t).sqrt();
    if !(radius > 0.0) {
        return Err(Error::InvalidPose("camera at the origin".into()));
    }
    let elevation_deg = (t[2] / radius).clamp(-1.0, 1.0).asin().to_degrees();
    let azimuth_deg = t[1].atan2(t[0]).to_degrees();
    let unrolled = SphericalPose::new(azimuth_deg, elevation_deg, radius, 0.0)?;
    let (right0, up0, _) = base_frame(&unrolled);
    let right = m.right();
    let roll_deg = dot(right, up0).atan2(dot(right, right0)).to_degrees();
    SphericalPose::new(azimuth_deg, elevation_deg, radius, roll_deg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSet {
    pub name: String,
    pub poses: Vec<SphericalPose>,
}

impl ViewSet {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn matrices(&self) -> Vec<CameraMatrix> {
        self.poses.iter().map(pose_to_matrix).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewSetKind {
    Neus36,
    Zero123pp,
    Enhanced42,
}

impl ViewSetKind {
    pub fn name(self) -> &'static str {
        match self {
            ViewSetKind::Neus36 => "neus36",
            ViewSetKind::Zero123pp => "zero123pp",
            ViewSetKind::Enhanced42 => "enhanced42",
        }
    }

    pub fn build(self, reference_azimuth_deg: f64, radius: f64) -> Result<ViewSet> {
        match self {
            ViewSetKind::Neus36 => viewset_neus36(radius),
            ViewSetKind::Zero123pp => viewset_zero123pp(reference_azimuth_deg, radius),
            ViewSetKind::Enhanced42 => viewset_enhanced42(reference_azimuth_deg, radius),
        }
    }
}

impl fmt::Display for ViewSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ViewSetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neus36" => Ok(ViewSetKind::Neus36),
            "zero123pp" => Ok(ViewSetKind::Zero123pp),
            "enhanced42" => Ok(ViewSetKind::Enhanced42),
            other => Err(Error::Config(format!("unknown view set {other:?}"))),
        }
    }
}

pub const NEUS_ELEVATIONS_DEG: [f64; 3] = [-30.0, 0.0, 30.0];
pub const NEUS_AZIMUTH_STEP_DEG: f64 = 30.0;
pub const ZERO123PP_ELEVATIONS_DEG: [f64; 2] = [20.0, -10.0];
pub const ZERO123PP_FIRST_AZIMUTH_DEG: f64 = 30.0;
pub const ZERO123PP_AZIMUTH_STEP_DEG: f64 = 60.0;

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPose(format!("radius {radius} must be > 0")))
    }
}

/// 12 azimuths × 3 elevations, elevation-major.
pub fn viewset_neus36(radius: f64) -> Result<ViewSet> {
    check_radius(radius)?;
    let steps = (360.0 / NEUS_AZIMUTH_STEP_DEG) as u32;
    let mut poses = Vec::with_capacity(36);
    for &el in &NEUS_ELEVATIONS_DEG {
        for i in 0..steps {
            poses.push(SphericalPose::new(
                i as f64 * NEUS_AZIMUTH_STEP_DEG,
                el,
                radius,
                0.0,
            )?);
        }
    }
    Ok(ViewSet {
        name: ViewSetKind::Neus36.name().into(),
        poses,
    })
}

/// Six views at alternating absolute elevations, azimuths relative to the
/// reference view.
pub fn viewset_zero123pp(reference_azimuth_deg: f64, radius: f64) -> Result<ViewSet> {
    check_radius(radius)?;
    let poses = (0..6)
        .map(|i| {
            let az = reference_azimuth_deg
                + ZERO123PP_FIRST_AZIMUTH_DEG
                + i as f64 * ZERO123PP_AZIMUTH_STEP_DEG;
            SphericalPose::new(az, ZERO123PP_ELEVATIONS_DEG[i % 2], radius, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViewSet {
        name: ViewSetKind::Zero123pp.name().into(),
        poses,
    })
}

/// The six feed-forward views first, then the 36-view grid.
pub fn viewset_enhanced42(reference_azimuth_deg: f64, radius: f64) -> Result<ViewSet> {
    let mut poses = viewset_zero123pp(reference_azimuth_deg, radius)?.poses;
    poses.extend(viewset_neus36(radius)?.poses);
    Ok(ViewSet {
        name: ViewSetKind::Enhanced42.name().into(),
        poses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    #[test]
    fn canonical_pose_looks_down_negative_x() {
        let p = SphericalPose::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let m = pose_to_matrix(&p);
        assert!(close(m.translation(), [1.0, 0.0, 0.0], 1e-15));
        assert!(close(m.forward(), [-1.0, 0.0, 0.0], 1e-15));
        assert!(close(m.up(), [0.0, 0.0, 1.0], 1e-15));
    }

    #[test]
    fn azimuth_90_radius_2() {
        let p = SphericalPose::new(90.0, 0.0, 2.0, 0.0).unwrap();
        let m = pose_to_matrix(&p);
        // (2 cos0 cos90, 2 cos0 sin90, 0)
        assert!(close(m.translation(), [0.0, 2.0, 0.0], 1e-12));
    }

    #[test]
    fn validation() {
        assert!(SphericalPose::new(0.0, 90.5, 1.0, 0.0).is_err());
        assert!(SphericalPose::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(SphericalPose::new(f64::NAN, 0.0, 1.0, 0.0).is_err());
        let p = SphericalPose::new(-30.0, 0.0, 1.0, 190.0).unwrap();
        assert_eq!(p.azimuth_deg, 330.0);
        assert_eq!(p.roll_deg, -170.0);
        assert_eq!(SphericalPose::new(720.0, 0.0, 1.0, 0.0).unwrap().azimuth_deg, 0.0);
        assert_eq!(SphericalPose::new(-1e-20, 0.0, 1.0, 0.0).unwrap().azimuth_deg, 0.0);
    }

    #[test]
    fn poles_use_fallback_up() {
        for el in [90.0, -90.0] {
            for az in [0.0, 45.0, 200.0] {
                let m = pose_to_matrix(&SphericalPose::new(az, el, 1.5, 0.0).unwrap());
                assert!(m.orthonormality_error() < 1e-9);
                assert!((m.determinant() - 1.0).abs() < 1e-9);
                let a = f64::to_radians(az);
                let hint = [a.cos(), a.sin(), 0.0];
                // up lies along the fallback axis (sign depends on hemisphere)
                assert!((dot(m.up(), hint).abs() - 1.0).abs() < 1e-12, "el {el} az {az}");
            }
        }
    }

    #[test]
    fn neus36_grid() {
        let vs = viewset_neus36(1.5).unwrap();
        assert_eq!(vs.len(), 36);
        assert!(vs.poses.iter().any(|p| p.azimuth_deg == 330.0 && p.elevation_deg == 30.0));
        assert!(vs.poses.iter().all(|p| p.azimuth_deg < 360.0));
        // elevation-major
        assert_eq!(vs.poses[11].elevation_deg, -30.0);
        assert_eq!(vs.poses[12].elevation_deg, 0.0);
        assert_eq!(vs.poses[12].azimuth_deg, 0.0);
    }

    #[test]
    fn zero123pp_layout() {
        let vs = viewset_zero123pp(0.0, 1.0).unwrap();
        let az: Vec<f64> = vs.poses.iter().map(|p| p.azimuth_deg).collect();
        let el: Vec<f64> = vs.poses.iter().map(|p| p.elevation_deg).collect();
        assert_eq!(az, vec![30.0, 90.0, 150.0, 210.0, 270.0, 330.0]);
        assert_eq!(el, vec![20.0, -10.0, 20.0, -10.0, 20.0, -10.0]);
        let shifted = viewset_zero123pp(350.0, 1.0).unwrap();
        assert_eq!(shifted.poses[0].azimuth_deg, 20.0);
    }

    #[test]
    fn enhanced42_layout() {
        let vs = viewset_enhanced42(0.0, 2.0).unwrap();
        assert_eq!(vs.len(), 42);
        assert_eq!(vs.poses[..6], viewset_zero123pp(0.0, 2.0).unwrap().poses[..]);
        let mut keys: Vec<(i64, i64)> = vs
            .poses
            .iter()
            .map(|p| (p.azimuth_deg.round() as i64, p.elevation_deg.round() as i64))
            .collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 42);
        assert!(vs.poses.iter().all(|p| p.radius == 2.0));
    }

    #[test]
    fn viewset_json_roundtrip() {
        let vs = viewset_enhanced42(17.0, 1.2).unwrap();
        let s = serde_json::to_string(&vs).unwrap();
        let back: ViewSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vs);
    }

    proptest! {
        #[test]
        fn matrices_are_rotations(az in 0.0f64..360.0, el in -90.0f64..=90.0, r in 0.01f64..100.0, roll in -180.0f64..180.0) {
            let m = pose_to_matrix(&SphericalPose::new(az, el, r, roll).unwrap());
            prop_assert!(m.orthonormality_error() < 1e-9);
            prop_assert!((m.determinant() - 1.0).abs() < 1e-9);
            // forward points at the origin
            let t = m.translation();
            let f = m.forward();
            let n = dot(t, t).sqrt();
            prop_assert!(close(f, scale(t, -1.0 / n), 1e-9));
        }

        #[test]
        fn matrix_roundtrip(az in 0.0f64..360.0, el in -89.0f64..89.0, r in 0.1f64..10.0, roll in -179.0f64..179.0) {
            let p = SphericalPose::new(az, el, r, roll).unwrap();
            let q = matrix_to_pose(&pose_to_matrix(&p)).unwrap();
            let daz = (q.azimuth_deg - p.azimuth_deg).abs();
            prop_assert!(daz.min(360.0 - daz) < 1e-9);
            prop_assert!((q.elevation_deg - p.elevation_deg).abs() < 1e-9);
            prop_assert!((q.radius - p.radius).abs() < 1e-9);
            prop_assert!((q.roll_deg - p.roll_deg).abs() < 1e-9);
        }
    }
}
