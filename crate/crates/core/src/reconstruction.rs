//! World-space crack profiles from tactile frames and from the overhead
//! camera.
//!
//! Tactile boundary pixels are backprojected onto the elastomer plane and
//! carried to the world through the sensor mount and the contact pose.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{backproject_image_to_sensor, Point2Px, Point3mm, RigidTransform, SensorModel};
use crate::planner::{pixel_to_world, ContactPose, TouchPlan};
use crate::raster::{GrayImage, Mask, RasterMeta, NEIGHBORS_8};
use crate::tactile::{contact_transform, TactileFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vision,
    AlignedVision,
    PassiveTactile,
    ActiveTactile,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Vision,
        Method::AlignedVision,
        Method::PassiveTactile,
        Method::ActiveTactile,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Vision => "vision",
            Method::AlignedVision => "aligned-vision",
            Method::PassiveTactile => "passive-tactile",
            Method::ActiveTactile => "active-tactile",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config("method", format!("unknown method `{s}`")))
    }
}

/// Where a reconstructed point came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    /// Index into the frame list; `None` for overhead-image points.
    pub frame_id: Option<usize>,
    pub pixel: Point2Px,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedProfile {
    pub points: Vec<Point3mm>,
    pub method: Method,
    pub provenance: Vec<PointSource>,
}

impl ReconstructedProfile {
    pub fn empty(method: Method) -> Self {
        Self {
            points: Vec::new(),
            method,
            provenance: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Which crack pixels of a frame get lifted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LiftMode {
    #[default]
    Boundary,
    /// Every crack pixel; for visualisation.
    All,
}

const NEIGHBORS_4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

fn boundary_pixels(mask: &Mask, ring: &[(isize, isize)], border_is_background: bool) -> Vec<Point2Px> {
    mask.set_pixels()
        .into_iter()
        .filter(|p| {
            ring.iter().any(
                |(dr, dc)| match mask.get_signed(p.row as isize + dr, p.col as isize + dc) {
                    Some(v) => !v,
                    None => border_is_background,
                },
            )
        })
        .map(|p| p.to_px())
        .collect()
}

/// Crack pixels with a non-crack 8-neighbour. Pixels on the image border
/// count as boundary.
pub fn extract_boundary_pixels(mask: &Mask) -> Vec<Point2Px> {
    boundary_pixels(mask, &NEIGHBORS_8, true)
}

/// Contour used for tactile lifting: crack pixels with a non-crack
/// 4-neighbour, ignoring the image border. The footprint border is not a
/// crack wall, and a 4-neighbour contour pixel is never more than one pitch
/// from the wall (an 8-neighbour one can be up to sqrt(2) pitches away).
pub fn extract_wall_pixels(mask: &Mask) -> Vec<Point2Px> {
    boundary_pixels(mask, &NEIGHBORS_4, false)
}

/// Backprojects sensor pixels and maps them to the world: `T_E^W · T_C^E · P`.
pub fn lift_sensor_pixels(
    pixels: &[Point2Px],
    sensor: &SensorModel,
    tce: &RigidTransform,
    tew: &RigidTransform,
) -> Vec<Point3mm> {
    let chain = tew.then_after(tce);
    pixels
        .iter()
        .map(|&px| chain.apply(backproject_image_to_sensor(px, sensor)))
        .collect()
}

fn frame_pixels(image: &Mask, mode: LiftMode) -> Vec<Point2Px> {
    match mode {
        LiftMode::Boundary => extract_wall_pixels(image),
        LiftMode::All => image.set_pixels().into_iter().map(|p| p.to_px()).collect(),
    }
}

/// World points of a tactile frame's detected crack boundary.
pub fn reconstruct_frame(frame: &TactileFrame, sensor: &SensorModel, tce: &RigidTransform) -> Vec<Point3mm> {
    reconstruct_frame_with(&frame.image, &frame.pose, sensor, tce, LiftMode::Boundary)
}

pub fn reconstruct_frame_with(
    image: &Mask,
    pose: &ContactPose,
    sensor: &SensorModel,
    tce: &RigidTransform,
    mode: LiftMode,
) -> Vec<Point3mm> {
    lift_sensor_pixels(&frame_pixels(image, mode), sensor, tce, &contact_transform(pose))
}

/// Union of frame reconstructions, skipping frames whose edge is listed in
/// `rejected`. Points keep plan order, then pixel order.
pub fn reconstruct_tactile(
    frames: &[TactileFrame],
    rejected: &std::collections::BTreeSet<usize>,
    sensor: &SensorModel,
    method: Method,
) -> ReconstructedProfile {
    let tce = sensor.mount_transform();
    let per_frame: Vec<(Vec<Point3mm>, Vec<PointSource>)> = frames
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            if f.edge_id.is_some_and(|e| rejected.contains(&e)) {
                return (Vec::new(), Vec::new());
            }
            let pixels = frame_pixels(&f.image, LiftMode::Boundary);
            let pts = lift_sensor_pixels(&pixels, sensor, &tce, &contact_transform(&f.pose));
            let src = pixels
                .into_iter()
                .map(|pixel| PointSource {
                    frame_id: Some(i),
                    pixel,
                })
                .collect();
            (pts, src)
        })
        .collect();
    let mut out = ReconstructedProfile::empty(method);
    for (pts, src) in per_frame {
        out.points.extend(pts);
        out.provenance.extend(src);
    }
    out
}

fn check_grid(a: &RasterMeta, b: &RasterMeta) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    Ok(())
}

/// Every crack pixel lifted with the depth image.
pub fn reconstruct_vision(mask: &Mask, depth: &GrayImage) -> Result<ReconstructedProfile> {
    check_grid(mask.meta(), depth.meta())?;
    let mut out = ReconstructedProfile::empty(Method::Vision);
    for p in mask.set_pixels() {
        out.points.push(pixel_to_world(p.to_px(), depth)?);
        out.provenance.push(PointSource {
            frame_id: None,
            pixel: p.to_px(),
        });
    }
    Ok(out)
}

/// Every crack pixel placed on the table plane `z = table_z`.
pub fn reconstruct_aligned_vision(mask: &Mask, meta: &RasterMeta, table_z: f64) -> Result<ReconstructedProfile> {
    check_grid(mask.meta(), meta)?;
    let mut out = ReconstructedProfile::empty(Method::AlignedVision);
    for p in mask.set_pixels() {
        let (x, y) = meta.pixel_xy(p.col as f64, p.row as f64);
        out.points.push(Point3mm::world(x, y, table_z));
        out.provenance.push(PointSource {
            frame_id: None,
            pixel: p.to_px(),
        });
    }
    Ok(out)
}

fn raster_axis(extent: f64, view: f64, stride: f64) -> Vec<f64> {
    if extent <= view {
        return vec![extent / 2.0];
    }
    let n = ((extent - view) / stride - 1e-9).ceil().max(0.0) as usize + 1;
    (0..n)
        .map(|i| (view / 2.0 + i as f64 * stride).min(extent - view / 2.0))
        .collect()
}

/// Exhaustive grid of presses over a `width_mm` by `height_mm` plate, rows
/// of increasing `y`, each row in increasing `x`.
pub fn passive_raster_plan(width_mm: f64, height_mm: f64, sensor: &SensorModel, overlap: f64) -> Result<TouchPlan> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::config("passive.overlap", "must lie in [0, 1)"));
    }
    let (vw, vh) = (sensor.view_width_mm, sensor.view_height_mm);
    let xs = raster_axis(width_mm, vw, vw * (1.0 - overlap));
    let ys = raster_axis(height_mm, vh, vh * (1.0 - overlap));
    let contacts = ys
        .iter()
        .flat_map(|&y| {
            xs.iter().map(move |&x| ContactPose {
                position: Point3mm::world(x, y, 0.0),
                yaw: 0.0,
                source_edge: None,
                source_pixel: None,
            })
        })
        .collect();
    Ok(TouchPlan { contacts })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    x: f64,
    y: f64,
    z: f64,
    method: Method,
    frame_id: Option<usize>,
}

/// Point cloud CSV with columns `x,y,z,method,frame_id`.
pub fn write_profiles_csv(profiles: &[ReconstructedProfile], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for prof in profiles {
        for (i, p) in prof.points.iter().enumerate() {
            w.serialize(CsvRow {
                x: p.x,
                y: p.y,
                z: p.z,
                method: prof.method,
                frame_id: prof.provenance.get(i).and_then(|s| s.frame_id),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a point cloud CSV back, one profile per method in first-seen order.
/// Pixel provenance is not stored in the CSV and comes back as the origin.
pub fn read_profiles_csv(path: &Path) -> Result<Vec<ReconstructedProfile>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<ReconstructedProfile> = Vec::new();
    for row in r.deserialize() {
        let row: CsvRow = row?;
        let idx = match out.iter().position(|p| p.method == row.method) {
            Some(i) => i,
            None => {
                out.push(ReconstructedProfile::empty(row.method));
                out.len() - 1
            }
        };
        out[idx].points.push(Point3mm::world(row.x, row.y, row.z));
        out[idx].provenance.push(PointSource {
            frame_id: row.frame_id,
            pixel: Point2Px::new(0.0, 0.0),
        });
    }
    Ok(out)
}

/// ASCII PLY vertex cloud.
pub fn write_ply(profile: &ReconstructedProfile, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "comment method {}", profile.method)?;
    writeln!(w, "element vertex {}", profile.points.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    writeln!(w, "end_header")?;
    for p in &profile.points {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}
