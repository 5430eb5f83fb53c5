//! Simulated tactile presses, tactile crack detection and false-positive
//! rejection.
//!
//! A press images the elastomer footprint under a contact pose. A sensor
//! pixel reads as crack when its backprojected world point lies over a real
//! groove; painted marks have no relief and never register.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    backproject_image_to_sensor, project_sensor_to_image, segment_distance_xy, Point2Px, Point3mm, RigidTransform,
    SensorModel,
};
use crate::planner::{ContactPose, TouchPlan};
use crate::raster::{self, GrayImage, Mask, Pixel, RasterMeta};
use crate::scene::CrackScene;
use crate::segmentation::{segment_baseline, SegmenterConfig};
use crate::skeleton::SkeletonGraph;

#[derive(Clone, Debug, PartialEq)]
pub struct TactileFrame {
    /// Realised pose; `z` sits on the plate top.
    pub pose: ContactPose,
    pub image: Mask,
    pub crack_area_fraction: f64,
    pub edge_id: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RejectionConfig {
    pub area_threshold: f64,
    pub min_low_frames: usize,
}

impl Default for RejectionConfig {
    fn default() -> Self {
        Self {
            area_threshold: 1.0 / 50.0,
            min_low_frames: 2,
        }
    }
}

impl RejectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.area_threshold > 0.0 && self.area_threshold < 1.0) {
            return Err(Error::config("rejection.area_threshold", "must lie in (0, 1)"));
        }
        if self.min_low_frames < 1 {
            return Err(Error::config("rejection.min_low_frames", "must be >= 1"));
        }
        Ok(())
    }
}

/// End-effector pose in the world for a contact: tool axis along the plate
/// normal, rotated by the contact yaw.
pub fn contact_transform(pose: &ContactPose) -> RigidTransform {
    RigidTransform::planar_pose(pose.position, pose.yaw)
}

/// Sensor raster placement. Positions in the sensor raster are pixel indices,
/// the scale records the pitch along `u`.
pub fn sensor_meta(sensor: &SensorModel) -> RasterMeta {
    RasterMeta::new(
        sensor.image_width,
        sensor.image_height,
        sensor.pixel_pitch_mm().0,
        Point3mm::default(),
    )
}

pub fn press(scene: &CrackScene, pose: &ContactPose, sensor: &SensorModel) -> Result<TactileFrame> {
    let (x, y) = (pose.position.x, pose.position.y);
    if !(x.is_finite() && y.is_finite() && scene.contains_xy(x, y)) {
        return Err(Error::OffSurface { x, y });
    }
    let mut pose = pose.clone();
    pose.position = Point3mm::world(x, y, scene.top_z());

    let tce = sensor.mount_transform();
    let chain = contact_transform(&pose).then_after(&tce);
    let (w, h) = (sensor.image_width, sensor.image_height);

    // Footprint bounds in the world, used to skip distant segments.
    let corners = [
        (0.0, 0.0),
        (w as f64 - 1.0, 0.0),
        (0.0, h as f64 - 1.0),
        (w as f64 - 1.0, h as f64 - 1.0),
    ]
    .map(|(u, v)| chain.apply(backproject_image_to_sensor(Point2Px::new(u, v), sensor)));
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for c in &corners {
        lo_x = lo_x.min(c.x);
        lo_y = lo_y.min(c.y);
        hi_x = hi_x.max(c.x);
        hi_y = hi_y.max(c.y);
    }
    // Capsules (axis start, axis end, radius) that may reach the view.
    let mut segments = Vec::new();
    for crack in scene.real_cracks() {
        let r = crack.half_width();
        for (a, b) in crack.segments() {
            let overlaps = a.0.min(b.0) - r <= hi_x
                && a.0.max(b.0) + r >= lo_x
                && a.1.min(b.1) - r <= hi_y
                && a.1.max(b.1) + r >= lo_y;
            if overlaps {
                segments.push((a, b, r));
            }
        }
    }

    let mut image = Mask::empty(sensor_meta(sensor));
    let inverse = chain.inverse();
    for &(a, b, r) in &segments {
        let Some((u_lo, u_hi, v_lo, v_hi)) = pixel_window(&inverse, sensor, a, b, r, scene.top_z()) else {
            continue;
        };
        for v in v_lo..=v_hi {
            for u in u_lo..=u_hi {
                if image.get(v, u) {
                    continue;
                }
                let p = chain.apply(backproject_image_to_sensor(Point2Px::new(u as f64, v as f64), sensor));
                if segment_distance_xy(p.x, p.y, a, b) <= r {
                    image.set(v, u, true);
                }
            }
        }
    }
    let crack_area_fraction = image.count() as f64 / image.meta().len() as f64;
    let edge_id = pose.source_edge;
    Ok(TactileFrame {
        pose,
        image,
        crack_area_fraction,
        edge_id,
    })
}

/// Sensor pixel range that can see the capsule around segment `a`-`b`,
/// padded by one pixel; `None` when it misses the image.
fn pixel_window(
    world_to_sensor: &RigidTransform,
    sensor: &SensorModel,
    a: (f64, f64),
    b: (f64, f64),
    r: f64,
    z: f64,
) -> Option<(usize, usize, usize, usize)> {
    let (mut u_lo, mut u_hi, mut v_lo, mut v_hi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for x in [a.0.min(b.0) - r, a.0.max(b.0) + r] {
        for y in [a.1.min(b.1) - r, a.1.max(b.1) + r] {
            let px = project_sensor_to_image(world_to_sensor.apply(Point3mm::world(x, y, z)), sensor).ok()?;
            u_lo = u_lo.min(px.u);
            u_hi = u_hi.max(px.u);
            v_lo = v_lo.min(px.v);
            v_hi = v_hi.max(px.v);
        }
    }
    let (w, h) = (sensor.image_width as f64, sensor.image_height as f64);
    if u_hi < -1.0 || v_hi < -1.0 || u_lo > w || v_lo > h {
        return None;
    }
    let clamp = |lo: f64, hi: f64, n: f64| {
        (
            (lo - 1.0).floor().max(0.0) as usize,
            (hi + 1.0).ceil().min(n - 1.0) as usize,
        )
    };
    let (u0, u1) = clamp(u_lo, u_hi, w);
    let (v0, v1) = clamp(v_lo, v_hi, h);
    Some((u0, u1, v0, v1))
}

/// Presses every contact of a plan, in parallel, returned in plan order.
pub fn press_plan(scene: &CrackScene, plan: &TouchPlan, sensor: &SensorModel) -> Result<Vec<TactileFrame>> {
    plan.contacts.par_iter().map(|c| press(scene, c, sensor)).collect()
}

/// Simulated frames are already binary.
pub fn detect_tactile_crack(image: &Mask) -> Mask {
    image.clone()
}

/// Entry point for externally captured grayscale tactile images.
pub fn detect_tactile_crack_gray(image: &GrayImage, cfg: &SegmenterConfig) -> Mask {
    segment_baseline(image, cfg)
}

/// Edges with at least `min_low_frames` frames below the area threshold.
pub fn reject_false_edges(frames: &[TactileFrame], cfg: &RejectionConfig) -> BTreeSet<usize> {
    let mut low: BTreeMap<usize, usize> = BTreeMap::new();
    for f in frames {
        if let Some(e) = f.edge_id {
            let n = low.entry(e).or_default();
            if f.crack_area_fraction < cfg.area_threshold {
                *n += 1;
            }
        }
    }
    low.into_iter()
        .filter(|&(_, n)| n >= cfg.min_low_frames)
        .map(|(e, _)| e)
        .collect()
}

/// Vision mask with the regions of rejected edges removed. Every mask pixel
/// is attributed to its geodesically nearest skeleton pixel; skeleton pixels
/// shared by several edges stay if any of those edges is kept.
pub fn refine_mask(mask: &Mask, graph: &SkeletonGraph, rejected: &BTreeSet<usize>) -> Mask {
    let (w, h) = (mask.width(), mask.height());
    let idx = |p: Pixel| p.row * w + p.col;
    // None: unlabelled, Some(true): keep.
    let mut label: Vec<Option<bool>> = vec![None; w * h];
    for (e, edge) in graph.edges.iter().enumerate() {
        let keep = !rejected.contains(&e);
        for &p in &edge.pixels {
            let slot = &mut label[idx(p)];
            *slot = Some(slot.unwrap_or(false) || keep);
        }
    }
    let mut queue: VecDeque<Pixel> = graph
        .skeleton
        .set_pixels()
        .into_iter()
        .filter(|&p| label[idx(p)].is_some() && mask.get_pixel(p))
        .collect();
    while let Some(p) = queue.pop_front() {
        let l = label[idx(p)];
        for q in mask.neighbors(p) {
            if label[idx(q)].is_none() {
                label[idx(q)] = l;
                queue.push_back(q);
            }
        }
    }
    let mut out = mask.clone();
    for p in mask.set_pixels() {
        if label[idx(p)] == Some(false) {
            out.set(p.row, p.col, false);
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct FrameExtra {
    pose: ContactPose,
    edge_id: Option<usize>,
    crack_area_fraction: f64,
}

pub fn save_frame(frame: &TactileFrame, path: &Path) -> Result<()> {
    let extra = FrameExtra {
        pose: frame.pose.clone(),
        edge_id: frame.edge_id,
        crack_area_fraction: frame.crack_area_fraction,
    };
    raster::save_mask(&frame.image, path, Some(serde_json::to_value(extra)?))
}

pub fn load_frame(path: &Path) -> Result<TactileFrame> {
    let (image, sidecar) = raster::load_mask(path)?;
    let extra = sidecar
        .extra
        .ok_or_else(|| Error::MissingSidecar(raster::sidecar_path(path)))?;
    let extra: FrameExtra = serde_json::from_value(extra)?;
    Ok(TactileFrame {
        pose: extra.pose,
        image,
        crack_area_fraction: extra.crack_area_fraction,
        edge_id: extra.edge_id,
    })
}
