//! Contact planning along skeleton edges.
//!
//! Starting from the first keypoint of each minimal edge, the next contact is
//! the later edge point farthest from the current contact whose straight-line
//! world distance stays strictly below `step_d_mm`. Each contact's yaw points
//! along the planar vector to its nearest other contact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2Px, Point3mm};
use crate::raster::{GrayImage, Pixel, RasterMeta};
use crate::skeleton::SkeletonGraph;

/// Default sensor view length used to derive the step.
const DEFAULT_VIEW_LENGTH_MM: f64 = 14.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Upper bound (exclusive) on the world distance between consecutive
    /// contacts of one edge.
    pub step_d_mm: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            step_d_mm: 0.8 * DEFAULT_VIEW_LENGTH_MM,
        }
    }
}

impl PlannerConfig {
    /// Four fifths of the sensor's longer view side.
    pub fn for_view_length(view_length_mm: f64) -> Self {
        Self {
            step_d_mm: 0.8 * view_length_mm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_d_mm > 0.0 && self.step_d_mm.is_finite()) {
            return Err(Error::config("planner.step_d_mm", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPose {
    /// World position of the elastomer centre.
    pub position: Point3mm,
    /// Rotation about the surface normal, in (-pi, pi].
    pub yaw: f64,
    /// Skeleton edge this contact was planned on; `None` for raster plans.
    pub source_edge: Option<usize>,
    pub source_pixel: Option<Point2Px>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TouchPlan {
    pub contacts: Vec<ContactPose>,
}

impl TouchPlan {
    pub fn len(&self) -> usize {
        self.contacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contacts.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    if w <= -PI {
        w += TAU;
    }
    w
}

/// Lifts a pixel of the overhead grid to the world: planar position from the
/// raster placement, height from the nearest height-image sample.
pub fn pixel_to_world(px: Point2Px, depth: &GrayImage) -> Result<Point3mm> {
    let meta = depth.meta();
    let (col, row) = (px.u.round(), px.v.round());
    if !(col >= 0.0 && row >= 0.0 && (col as usize) < meta.width && (row as usize) < meta.height) {
        return Err(Error::OutOfBounds {
            u: px.u,
            v: px.v,
            width: meta.width,
            height: meta.height,
        });
    }
    let (x, y) = meta.pixel_xy(px.u, px.v);
    let z = meta.origin.z + depth.get(row as usize, col as usize) as f64;
    Ok(Point3mm::world(x, y, z))
}

pub fn world_to_pixel(p: &Point3mm, meta: &RasterMeta) -> Point2Px {
    let (u, v) = meta.xy_pixel(p.x, p.y);
    Point2Px::new(u, v)
}

/// Indices of the greedy contact sequence over ordered edge points.
pub fn select_contacts(points: &[Point3mm], step_d_mm: f64) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let last = points.len() - 1;
    let mut out = vec![0];
    let mut cur = 0;
    while cur < last {
        let mut best: Option<(f64, usize)> = None;
        for k in cur + 1..=last {
            let d = points[cur].distance(&points[k]);
            // `>=` lets later points win ties.
            if d < step_d_mm && best.is_none_or(|(bd, _)| d >= bd) {
                best = Some((d, k));
            }
        }
        match best {
            Some((_, k)) => {
                out.push(k);
                cur = k;
            }
            None => {
                out.push(last);
                break;
            }
        }
    }
    out
}

fn edge_points(edge: &[Pixel], depth: &GrayImage) -> Result<Vec<Point3mm>> {
    edge.iter().map(|p| pixel_to_world(p.to_px(), depth)).collect()
}

/// Contact positions for one ordered edge.
pub fn plan_edge(edge: &[Pixel], depth: &GrayImage, cfg: &PlannerConfig) -> Result<Vec<Point3mm>> {
    let pts = edge_points(edge, depth)?;
    Ok(select_contacts(&pts, cfg.step_d_mm)
        .into_iter()
        .map(|i| pts[i])
        .collect())
}

/// Yaw of each contact toward its nearest distinct neighbour (ties to the
/// lowest index). Contacts with no distinct neighbour get yaw 0.
pub fn assign_yaw(contacts: &[Point3mm]) -> Vec<f64> {
    (0..contacts.len())
        .map(|i| {
            let mut best: Option<(f64, usize)> = None;
            for (j, c) in contacts.iter().enumerate() {
                let d = contacts[i].planar_distance(c);
                if j != i && d > 1e-9 && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
            match best {
                Some((_, j)) => wrap_angle((contacts[j].y - contacts[i].y).atan2(contacts[j].x - contacts[i].x)),
                None => 0.0,
            }
        })
        .collect()
}

/// Contacts for every minimal edge in edge-index order, then yaws.
pub fn plan_scene(graph: &SkeletonGraph, depth: &GrayImage, cfg: &PlannerConfig) -> Result<TouchPlan> {
    cfg.validate()?;
    let mut positions = Vec::new();
    let mut provenance = Vec::new();
    for (edge_id, edge) in graph.edges.iter().enumerate() {
        let pts = edge_points(&edge.pixels, depth)?;
        for i in select_contacts(&pts, cfg.step_d_mm) {
            positions.push(pts[i]);
            provenance.push((edge_id, edge.pixels[i].to_px()));
        }
    }
    let yaws = assign_yaw(&positions);
    let contacts = positions
        .into_iter()
        .zip(yaws)
        .zip(provenance)
        .map(|((position, yaw), (source_edge, source_pixel))| ContactPose {
            position,
            yaw,
            source_edge: Some(source_edge),
            source_pixel: Some(source_pixel),
        })
        .collect();
    Ok(TouchPlan { contacts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Mask;
    use crate::skeleton::extract_graph;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn flat_depth(w: usize, h: usize, scale: f64, z0: f64) -> GrayImage {
        GrayImage::filled(RasterMeta::new(w, h, scale, Point3mm::world(0.0, 0.0, z0)), 0.0)
    }

    #[test]
    fn pixel_to_world_examples() {
        let d = flat_depth(20, 10, 0.5, 10.0);
        let p = pixel_to_world(Point2Px::new(0.0, 0.0), &d).unwrap();
        assert_eq!((p.x, p.y, p.z), (0.0, 0.0, 10.0));
        let p = pixel_to_world(Point2Px::new(10.0, 0.0), &d).unwrap();
        assert_eq!(p.x, 5.0);
        let mut d2 = d.clone();
        d2.set(3, 4, 1.5);
        assert_eq!(pixel_to_world(Point2Px::new(4.0, 3.0), &d2).unwrap().z, 11.5);
        assert!(pixel_to_world(Point2Px::new(20.0, 0.0), &d).is_err());
        assert!(pixel_to_world(Point2Px::new(-0.6, 0.0), &d).is_err());
    }

    #[test]
    fn pixel_world_round_trip() {
        let d = flat_depth(40, 30, 0.5, 2.0);
        for (u, v) in [(0.0, 0.0), (3.2, 7.7), (39.0, 29.0)] {
            let w = pixel_to_world(Point2Px::new(u, v), &d).unwrap();
            let back = world_to_pixel(&w, d.meta());
            assert!((back.u - u).abs() <= 0.5 && (back.v - v).abs() <= 0.5);
        }
    }

    #[test]
    fn straight_edge_contacts() {
        let pts: Vec<Point3mm> = (0..=60).map(|i| Point3mm::world(i as f64 * 0.5, 0.0, 0.0)).collect();
        let idx = select_contacts(&pts, 11.2);
        let arclength: Vec<f64> = idx.iter().map(|&i| pts[i].x).collect();
        assert_eq!(arclength, vec![0.0, 11.0, 22.0, 30.0]);
    }

    #[test]
    fn straight_pixel_edge_matches_points() {
        let d = flat_depth(80, 3, 0.5, 5.0);
        let edge: Vec<Pixel> = (0..=60).map(|c| Pixel::new(1, c)).collect();
        let contacts = plan_edge(&edge, &d, &PlannerConfig::default()).unwrap();
        let xs: Vec<f64> = contacts.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 11.0, 22.0, 30.0]);
    }

    #[test]
    fn short_and_single_edges() {
        let pts: Vec<Point3mm> = (0..=16).map(|i| Point3mm::world(i as f64 * 0.5, 0.0, 0.0)).collect();
        assert_eq!(select_contacts(&pts, 11.2), vec![0, 16]);
        assert_eq!(select_contacts(&pts[..1], 11.2), vec![0]);
        assert!(select_contacts(&[], 11.2).is_empty());
    }

    #[test]
    fn unreachable_next_point_still_ends_at_last() {
        let pts = [Point3mm::world(0.0, 0.0, 0.0), Point3mm::world(50.0, 0.0, 0.0)];
        assert_eq!(select_contacts(&pts, 11.2), vec![0, 1]);
    }

    #[test]
    fn ties_prefer_later_points() {
        // Points 1 and 2 are both 5 mm from the start.
        let pts = [
            Point3mm::world(0.0, 0.0, 0.0),
            Point3mm::world(5.0, 0.0, 0.0),
            Point3mm::world(0.0, 5.0, 0.0),
            Point3mm::world(0.0, 30.0, 0.0),
        ];
        assert_eq!(select_contacts(&pts, 6.0)[1], 2);
    }

    #[test]
    fn step_bound_is_strict() {
        let pts: Vec<Point3mm> = (0..=4).map(|i| Point3mm::world(i as f64 * 5.0, 0.0, 0.0)).collect();
        // 10 mm is not < 10 mm, so the walk advances 5 mm at a time.
        assert_eq!(select_contacts(&pts, 10.0), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn yaw_examples() {
        let on_x = [Point3mm::world(0.0, 0.0, 0.0), Point3mm::world(3.0, 0.0, 0.0)];
        let y = assign_yaw(&on_x);
        assert_eq!(y[0], 0.0);
        assert_eq!(y[1], PI);
        let on_y = [Point3mm::world(0.0, 0.0, 0.0), Point3mm::world(0.0, 5.0, 0.0)];
        let y = assign_yaw(&on_y);
        assert!((y[0] - FRAC_PI_2).abs() < 1e-12 && (y[1] + FRAC_PI_2).abs() < 1e-12);
        assert_eq!(assign_yaw(&[Point3mm::world(1.0, 1.0, 0.0)]), vec![0.0]);
    }

    #[test]
    fn yaw_uses_contacts_across_edges() {
        let pts = [
            Point3mm::world(0.0, 0.0, 0.0),
            Point3mm::world(10.0, 0.0, 0.0),
            Point3mm::world(0.0, 1.0, 0.0),
        ];
        assert!((assign_yaw(&pts)[0] - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn scene_plan_composes_edges() {
        let meta = RasterMeta::new(80, 5, 0.5, Point3mm::world(0.0, 0.0, 0.0));
        let empty = extract_graph(&Mask::empty(meta.clone())).unwrap();
        let depth = GrayImage::filled(meta.clone(), 3.0);
        assert!(plan_scene(&empty, &depth, &PlannerConfig::default())
            .unwrap()
            .is_empty());

        let mut m = Mask::empty(meta);
        for c in 0..=60 {
            m.set(2, c, true);
        }
        let g = extract_graph(&m).unwrap();
        let plan = plan_scene(&g, &depth, &PlannerConfig::default()).unwrap();
        let direct = plan_edge(&g.edges[0].pixels, &depth, &PlannerConfig::default()).unwrap();
        let positions: Vec<Point3mm> = plan.contacts.iter().map(|c| c.position).collect();
        assert_eq!(positions, direct);
        assert!(plan.contacts.iter().all(|c| c.source_edge == Some(0)));
        assert_eq!(plan, plan_scene(&g, &depth, &PlannerConfig::default()).unwrap());
    }

    #[test]
    fn invalid_step_is_rejected() {
        assert!(PlannerConfig { step_d_mm: 0.0 }.validate().is_err());
    }
}
