//! Rigid transforms, camera intrinsics and the tactile sensor's pinhole model.
//!
//! All lengths are millimetres. Pixel coordinates are continuous with integer
//! values at pixel centres, so pixel `(col, row)` of a raster sits at
//! `u = col`, `v = row`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormality tolerance accepted when constructing a rotation.
pub const ROTATION_TOL: f64 = 1e-9;

/// Coordinate frame a point is expressed in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Sensor,
    EndEffector,
    #[default]
    World,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2Px {
    pub u: f64,
    pub v: f64,
}

impl Point2Px {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point3mm {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default)]
    pub frame: Frame,
}

impl Point3mm {
    pub fn new(x: f64, y: f64, z: f64, frame: Frame) -> Self {
        Self { x, y, z, frame }
    }

    pub fn world(x: f64, y: f64, z: f64) -> Self {
        Self::new(x, y, z, Frame::World)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Euclidean distance, ignoring frame tags.
    pub fn distance(&self, other: &Point3mm) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    /// Distance in the xy plane.
    pub fn planar_distance(&self, other: &Point3mm) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

/// A proper rigid motion `p -> R p + t` mapping points from `from` into `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformDoc", into = "TransformDoc")]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
    pub from: Frame,
    pub to: Frame,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
            from: Frame::World,
            to: Frame::World,
        }
    }

    /// Row-major rotation plus translation. Rejects matrices that are not
    /// orthonormal with determinant +1.
    pub fn from_parts(rotation: [[f64; 3]; 3], translation: [f64; 3]) -> Result<Self> {
        let r = Matrix3::from_fn(|i, j| rotation[i][j]);
        let ortho_err = (r.transpose() * r - Matrix3::identity()).abs().max();
        if !ortho_err.is_finite() || ortho_err > ROTATION_TOL {
            return Err(Error::config(
                "rotation",
                format!("not orthonormal (max |R^T R - I| = {ortho_err:e})"),
            ));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::config("rotation", format!("determinant {det} != +1")));
        }
        if translation.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("translation", "non-finite component"));
        }
        Ok(Self {
            rotation: r,
            translation: Vector3::from(translation),
            from: Frame::World,
            to: Frame::World,
        })
    }

    pub fn translation(x: f64, y: f64, z: f64) -> Self {
        Self {
            translation: Vector3::new(x, y, z),
            ..Self::identity()
        }
    }

    pub fn rotation_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            ..Self::identity()
        }
    }

    pub fn rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            ..Self::identity()
        }
    }

    /// Planar pose: rotation by `yaw` about +z, then translation to `position`.
    pub fn planar_pose(position: Point3mm, yaw: f64) -> Self {
        let mut t = Self::rotation_z(yaw);
        t.translation = position.vector();
        t
    }

    pub fn with_frames(mut self, from: Frame, to: Frame) -> Self {
        self.from = from;
        self.to = to;
        self
    }

    pub fn rotation_rows(&self) -> [[f64; 3]; 3] {
        let r = &self.rotation;
        [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ]
    }

    pub fn translation_vec(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    pub fn apply(&self, p: Point3mm) -> Point3mm {
        let q = self.rotation * p.vector() + self.translation;
        Point3mm::new(q.x, q.y, q.z, self.to)
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn then_after(&self, inner: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * inner.rotation,
            translation: self.rotation * inner.translation + self.translation,
            from: inner.from,
            to: self.to,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
            from: self.to,
            to: self.from,
        }
    }

    /// Largest absolute entry difference against another transform.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        let dr = (self.rotation - other.rotation).abs().max();
        let dt = (self.translation - other.translation).abs().max();
        dr.max(dt)
    }
}

pub fn transform_point(p: Point3mm, t: &RigidTransform) -> Point3mm {
    t.apply(p)
}

/// `outer ∘ inner`.
pub fn compose(outer: &RigidTransform, inner: &RigidTransform) -> RigidTransform {
    outer.then_after(inner)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.inverse()
}

/// `P_W = T_E^W · T_C^E · P`.
pub fn sensor_point_to_world(p: Point3mm, sensor_to_ee: &RigidTransform, ee_to_world: &RigidTransform) -> Point3mm {
    ee_to_world.apply(sensor_to_ee.apply(p))
}

/// Distance from `(px, py)` to the segment `a`–`b` in the plane.
pub fn segment_distance_xy(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - (a.0 + t * dx)).hypot(py - (a.1 + t * dy))
}

/// Distance from `p` to the segment `a`–`b` in 3D.
pub fn segment_distance(p: &Point3mm, a: &Point3mm, b: &Point3mm) -> f64 {
    let d = b.vector() - a.vector();
    let len2 = d.norm_squared();
    let t = if len2 > 0.0 {
        ((p.vector() - a.vector()).dot(&d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.vector() - (a.vector() + d * t)).norm()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TransformDoc {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    #[serde(default)]
    from: Frame,
    #[serde(default)]
    to: Frame,
}

impl TryFrom<TransformDoc> for RigidTransform {
    type Error = Error;

    fn try_from(doc: TransformDoc) -> Result<Self> {
        Ok(RigidTransform::from_parts(doc.rotation, doc.translation)?.with_frames(doc.from, doc.to))
    }
}

impl From<RigidTransform> for TransformDoc {
    fn from(t: RigidTransform) -> Self {
        TransformDoc {
            rotation: t.rotation_rows(),
            translation: t.translation_vec(),
            from: t.from,
            to: t.to,
        }
    }
}

/// Pinhole intrinsics: `fx = f/d_x`, `fy = f/d_y` in pixels, principal point
/// `(u0, v0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, u0: f64, v0: f64) -> Result<Self> {
        let k = Self { fx, fy, u0, v0 };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fx.is_finite()) {
            return Err(Error::config("intrinsics.fx", "must be > 0"));
        }
        if !(self.fy > 0.0 && self.fy.is_finite()) {
            return Err(Error::config("intrinsics.fy", "must be > 0"));
        }
        if !self.u0.is_finite() || !self.v0.is_finite() {
            return Err(Error::config("intrinsics", "principal point must be finite"));
        }
        Ok(())
    }
}

/// Geometric model of a GelSight-style sensor: a pinhole webcam looking at a
/// flat elastomer held `standoff_mm` in front of the optical centre.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub view_width_mm: f64,
    pub view_height_mm: f64,
    pub image_width: usize,
    pub image_height: usize,
    pub standoff_mm: f64,
    pub intrinsics: CameraIntrinsics,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self::from_view(14.0, 10.5, 640, 480, 20.0).expect("default sensor is valid")
    }
}

impl SensorModel {
    /// Derives intrinsics so the image exactly spans the view on the
    /// elastomer plane, principal point at the image centre.
    pub fn from_view(
        view_width_mm: f64,
        view_height_mm: f64,
        image_width: usize,
        image_height: usize,
        standoff_mm: f64,
    ) -> Result<Self> {
        if image_width == 0 || image_height == 0 {
            return Err(Error::config("sensor.image_width/height", "must be > 0"));
        }
        if !(view_width_mm > 0.0 && view_height_mm > 0.0) {
            return Err(Error::config("sensor.view", "view size must be > 0"));
        }
        if !(standoff_mm > 0.0) {
            return Err(Error::config("sensor.standoff_mm", "must be > 0"));
        }
        let intrinsics = CameraIntrinsics::new(
            image_width as f64 * standoff_mm / view_width_mm,
            image_height as f64 * standoff_mm / view_height_mm,
            (image_width as f64 - 1.0) / 2.0,
            (image_height as f64 - 1.0) / 2.0,
        )?;
        Ok(Self {
            view_width_mm,
            view_height_mm,
            image_width,
            image_height,
            standoff_mm,
            intrinsics,
        })
    }

    /// Builds a sensor from explicit intrinsics; the view size follows from
    /// them.
    pub fn from_intrinsics(
        intrinsics: CameraIntrinsics,
        image_width: usize,
        image_height: usize,
        standoff_mm: f64,
    ) -> Result<Self> {
        intrinsics.validate()?;
        if !(standoff_mm > 0.0) {
            return Err(Error::config("sensor.standoff_mm", "must be > 0"));
        }
        Ok(Self {
            view_width_mm: image_width as f64 * standoff_mm / intrinsics.fx,
            view_height_mm: image_height as f64 * standoff_mm / intrinsics.fy,
            image_width,
            image_height,
            standoff_mm,
            intrinsics,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::config("sensor.image_width/height", "must be > 0"));
        }
        if !(self.standoff_mm > 0.0) {
            return Err(Error::config("sensor.standoff_mm", "must be > 0"));
        }
        let w = self.image_width as f64 * self.standoff_mm / self.intrinsics.fx;
        let h = self.image_height as f64 * self.standoff_mm / self.intrinsics.fy;
        if (w - self.view_width_mm).abs() > 1e-6 {
            return Err(Error::config(
                "sensor.view_width_mm",
                format!("inconsistent with intrinsics ({w} mm implied)"),
            ));
        }
        if (h - self.view_height_mm).abs() > 1e-6 {
            return Err(Error::config(
                "sensor.view_height_mm",
                format!("inconsistent with intrinsics ({h} mm implied)"),
            ));
        }
        Ok(())
    }

    /// Elastomer-plane spacing between adjacent pixel centres, (x, y) in mm.
    pub fn pixel_pitch_mm(&self) -> (f64, f64) {
        (
            self.view_width_mm / self.image_width as f64,
            self.view_height_mm / self.image_height as f64,
        )
    }

    pub fn pixel_count(&self) -> usize {
        self.image_width * self.image_height
    }

    /// Sensor-to-end-effector mount. The end-effector frame has its origin
    /// at the centre of the elastomer contact patch with +z pointing away
    /// from the surface; the camera sits `standoff_mm` above it looking down.
    pub fn mount_transform(&self) -> RigidTransform {
        // Exact half-turn about x; rotation_x(PI) would leave sin(PI) residue.
        RigidTransform {
            rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0),
            translation: Vector3::new(0.0, 0.0, self.standoff_mm),
            from: Frame::Sensor,
            to: Frame::EndEffector,
        }
    }
}

/// Pinhole projection `Z_c [u v 1]^T = K [X Y Z 1]^T`.
pub fn project_sensor_to_image(p: Point3mm, sensor: &SensorModel) -> Result<Point2Px> {
    if !(p.z > 0.0) {
        return Err(Error::NonProjectablePoint { z: p.z });
    }
    let k = &sensor.intrinsics;
    Ok(Point2Px::new(k.fx * p.x / p.z + k.u0, k.fy * p.y / p.z + k.v0))
}

/// Inverse projection onto the elastomer plane `z = standoff_mm`.
pub fn backproject_image_to_sensor(px: Point2Px, sensor: &SensorModel) -> Point3mm {
    let k = &sensor.intrinsics;
    let z = sensor.standoff_mm;
    Point3mm::new((px.u - k.u0) * z / k.fx, (px.v - k.v0) * z / k.fy, z, Frame::Sensor)
}
