//! Detection and reconstruction metrics, the exploration-cost model and the
//! four-method benchmark harness.
//!
//! Reference values reported for the physical experiment, kept for side by
//! side comparison with synthetic runs:
//!
//! | method          | meanD (mm) | SD (mm) | maxD (mm) | time (s) |
//! |-----------------|-----------:|--------:|----------:|---------:|
//! | vision          | 0.82       | 0.92    | 4.87      | 1        |
//! | aligned vision  | 0.55       | 0.53    | 3.78      | 1        |
//! | passive tactile | 0.20       | 0.17    | 0.99      | 400      |
//! | active tactile  | 0.24       | 0.16    | 0.82      | 35       |
//!
//! | mask                         | pixAcc | IoU   |
//! |------------------------------|-------:|------:|
//! | vision, real cracks only     | 0.899  | 0.504 |
//! | vision, with painted fakes   | 0.866  | 0.376 |
//! | after tactile rejection      | 0.909  | 0.636 |

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_distance, Point3mm, SensorModel};
use crate::planner::{plan_scene, PlannerConfig, TouchPlan};
use crate::raster::{GrayImage, Mask};
use crate::reconstruction::{
    passive_raster_plan, reconstruct_aligned_vision, reconstruct_tactile, reconstruct_vision, Method,
    ReconstructedProfile,
};
use crate::scene::{
    generate_random_scene, ground_truth_mask, render_depth, render_top_view, CrackScene, RenderOptions, SceneParams,
};
use crate::segmentation::{segment_baseline, SegmenterConfig};
use crate::skeleton::{extract_graph_with, thin, GraphOptions, SkeletonGraph};
use crate::tactile::{press_plan, refine_mask, reject_false_edges, RejectionConfig, TactileFrame};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub pix_acc: f64,
    pub iou: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconMetrics {
    pub mean_d: f64,
    pub sd: f64,
    pub max_d: f64,
    pub n_points: usize,
}

fn same_dims(a: &Mask, b: &Mask) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    Ok(())
}

/// Fraction of pixels whose class agrees.
pub fn pixacc(pred: &Mask, gt: &Mask) -> Result<f64> {
    same_dims(pred, gt)?;
    let total = pred.data().len();
    if total == 0 {
        return Ok(1.0);
    }
    let correct = pred.data().iter().zip(gt.data()).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / total as f64)
}

/// Crack-class intersection over union; 1 when both masks are empty.
pub fn iou(pred: &Mask, gt: &Mask) -> Result<f64> {
    same_dims(pred, gt)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in pred.data().iter().zip(gt.data()) {
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

pub fn detection_metrics(pred: &Mask, gt: &Mask) -> Result<DetectionMetrics> {
    Ok(DetectionMetrics {
        pix_acc: pixacc(pred, gt)?,
        iou: iou(pred, gt)?,
    })
}

/// Uniform planar grid over polyline segments for nearest-segment queries.
/// Distances are full 3D; the grid only prunes by planar position.
pub struct SegmentIndex {
    segments: Vec<(Point3mm, Point3mm)>,
    cell: f64,
    origin: (f64, f64),
    dims: (i64, i64),
    cells: Vec<Vec<usize>>,
}

impl SegmentIndex {
    pub fn new(polylines: &[Vec<Point3mm>], cell_mm: f64) -> Self {
        let mut segments = Vec::new();
        for line in polylines {
            match line.len() {
                0 => {}
                1 => segments.push((line[0], line[0])),
                _ => segments.extend(line.windows(2).map(|w| (w[0], w[1]))),
            }
        }
        Self::from_segments(segments, cell_mm)
    }

    pub fn from_points(points: &[Point3mm], cell_mm: f64) -> Self {
        Self::from_segments(points.iter().map(|&p| (p, p)).collect(), cell_mm)
    }

    fn from_segments(segments: Vec<(Point3mm, Point3mm)>, cell: f64) -> Self {
        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for (a, b) in &segments {
            lo_x = lo_x.min(a.x.min(b.x));
            lo_y = lo_y.min(a.y.min(b.y));
            hi_x = hi_x.max(a.x.max(b.x));
            hi_y = hi_y.max(a.y.max(b.y));
        }
        if segments.is_empty() {
            (lo_x, lo_y, hi_x, hi_y) = (0.0, 0.0, 0.0, 0.0);
        }
        let origin = (lo_x, lo_y);
        let dims = (
            ((hi_x - lo_x) / cell).floor() as i64 + 1,
            ((hi_y - lo_y) / cell).floor() as i64 + 1,
        );
        let mut idx = Self {
            segments,
            cell,
            origin,
            dims,
            cells: vec![Vec::new(); (dims.0 * dims.1) as usize],
        };
        for (i, (a, b)) in idx.segments.iter().enumerate() {
            let (c0, r0) = idx.cell_of(a.x.min(b.x), a.y.min(b.y));
            let (c1, r1) = idx.cell_of(a.x.max(b.x), a.y.max(b.y));
            for r in r0..=r1 {
                for c in c0..=c1 {
                    idx.cells[(r * dims.0 + c) as usize].push(i);
                }
            }
        }
        idx
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin.0) / self.cell).floor() as i64,
            ((y - self.origin.1) / self.cell).floor() as i64,
        )
    }

    /// Shortest distance from `p` to any indexed segment (infinite when empty).
    pub fn distance(&self, p: &Point3mm) -> f64 {
        if self.segments.is_empty() {
            return f64::INFINITY;
        }
        let (qc, qr) = self.cell_of(p.x, p.y);
        let (nc, nr) = self.dims;
        // Rings before k_min miss the grid; ring k_max covers all of it.
        let k_min = [-qc, qc - (nc - 1), -qr, qr - (nr - 1), 0]
            .into_iter()
            .max()
            .unwrap_or(0);
        let k_max = [qc, nc - 1 - qc, qr, nr - 1 - qr]
            .into_iter()
            .map(i64::abs)
            .max()
            .unwrap_or(0);
        let mut best = f64::INFINITY;
        let visit = |c: i64, r: i64, best: &mut f64| {
            if (0..nc).contains(&c) && (0..nr).contains(&r) {
                for &i in &self.cells[(r * nc + c) as usize] {
                    let (a, b) = &self.segments[i];
                    *best = best.min(segment_distance(p, a, b));
                }
            }
        };
        for k in k_min..=k_max {
            // Segments not seen yet lie in cells at ring >= k, which are at
            // least (k - 1) cells away in the plane.
            if k > 0 && best <= (k - 1) as f64 * self.cell {
                break;
            }
            for r in (qr - k).max(0)..=(qr + k).min(nr - 1) {
                if (r - qr).abs() == k {
                    for c in (qc - k).max(0)..=(qc + k).min(nc - 1) {
                        visit(c, r, &mut best);
                    }
                } else {
                    visit(qc - k, r, &mut best);
                    if k > 0 {
                        visit(qc + k, r, &mut best);
                    }
                }
            }
        }
        best
    }
}

fn aggregate(d: &[f64]) -> ReconMetrics {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    ReconMetrics {
        mean_d: mean,
        sd: var.sqrt(),
        max_d: d.iter().cloned().fold(0.0, f64::max),
        n_points: d.len(),
    }
}

/// Shortest distance of every reconstructed point to the truth polylines,
/// summarised as mean, population SD and max.
pub fn distance_metrics(points: &[Point3mm], truth: &[Vec<Point3mm>]) -> Result<ReconMetrics> {
    distance_metrics_with(points, truth, false)
}

/// With `symmetric`, truth vertices are also scored against the point set
/// and both distance sets are pooled.
pub fn distance_metrics_with(points: &[Point3mm], truth: &[Vec<Point3mm>], symmetric: bool) -> Result<ReconMetrics> {
    if points.is_empty() {
        return Err(Error::NoReconstruction);
    }
    let index = SegmentIndex::new(truth, 1.0);
    if index.is_empty() {
        return Err(Error::config("truth", "no truth polylines to score against"));
    }
    let mut d: Vec<f64> = points.par_iter().map(|p| index.distance(p)).collect();
    if symmetric {
        let back = SegmentIndex::from_points(points, 1.0);
        let truth_pts: Vec<&Point3mm> = truth.iter().flatten().collect();
        d.extend(truth_pts.par_iter().map(|p| back.distance(p)).collect::<Vec<_>>());
    }
    Ok(aggregate(&d))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingModel {
    pub per_touch_s: f64,
    pub travel_mm_per_s: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            per_touch_s: 1.0,
            travel_mm_per_s: 50.0,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.per_touch_s >= 0.0 && self.travel_mm_per_s > 0.0) {
            return Err(Error::config(
                "timing",
                "per_touch_s must be >= 0 and travel_mm_per_s > 0",
            ));
        }
        Ok(())
    }
}

/// Touch time plus straight-line travel between consecutive contacts.
pub fn timing_model(plan: &TouchPlan, per_touch_s: f64, travel_mm_per_s: f64) -> f64 {
    let tour: f64 = plan
        .contacts
        .windows(2)
        .map(|w| w[0].position.distance(&w[1].position))
        .sum();
    plan.len() as f64 * per_touch_s + tour / travel_mm_per_s
}

/// What the reconstructions are scored against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthShape {
    /// Outline of the real grooves on the top surface.
    #[default]
    Boundary,
    Centerline,
}

pub fn truth_polylines(scene: &CrackScene, shape: TruthShape, step_mm: f64) -> Vec<Vec<Point3mm>> {
    match shape {
        TruthShape::Boundary => scene.boundary_polylines(step_mm),
        TruthShape::Centerline => scene.centerlines(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub scene: SceneParams,
    pub render: RenderOptions,
    pub segmenter: SegmenterConfig,
    pub graph: GraphOptions,
    pub planner: PlannerConfig,
    pub sensor: SensorModel,
    pub rejection: RejectionConfig,
    pub timing: TimingModel,
    pub passive_overlap: f64,
    pub truth: TruthShape,
    pub truth_step_mm: f64,
    pub symmetric_distance: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            scene: SceneParams::default(),
            render: RenderOptions::default(),
            segmenter: SegmenterConfig::default(),
            graph: GraphOptions::default(),
            planner: PlannerConfig::default(),
            sensor: SensorModel::default(),
            rejection: RejectionConfig::default(),
            timing: TimingModel::default(),
            passive_overlap: 0.0,
            truth: TruthShape::Boundary,
            truth_step_mm: 0.02,
            symmetric_distance: false,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.render.validate()?;
        self.segmenter.validate()?;
        self.planner.validate()?;
        self.sensor.validate()?;
        self.rejection.validate()?;
        self.timing.validate()?;
        if !(0.0..1.0).contains(&self.passive_overlap) {
            return Err(Error::config("passive_overlap", "must lie in [0, 1)"));
        }
        if !(self.truth_step_mm > 0.0) {
            return Err(Error::config("truth_step_mm", "must be > 0"));
        }
        Ok(())
    }
}

/// Everything produced for one scene.
#[derive(Clone, Debug)]
pub struct SceneRun {
    pub seed: u64,
    pub scene: CrackScene,
    pub top_view: GrayImage,
    pub depth: GrayImage,
    pub vision_mask: Mask,
    pub refined_mask: Mask,
    /// Real cracks only.
    pub truth_mask: Mask,
    pub graph: SkeletonGraph,
    pub plan: TouchPlan,
    pub frames: Vec<TactileFrame>,
    pub rejected: BTreeSet<usize>,
    pub passive_plan: TouchPlan,
    pub passive_frames: Vec<TactileFrame>,
    pub profiles: Vec<ReconstructedProfile>,
    pub rows: Vec<BenchmarkRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub seed: u64,
    pub method: Method,
    pub detection: Option<DetectionMetrics>,
    pub recon: Option<ReconMetrics>,
    pub n_touches: usize,
    pub time_s: f64,
}

/// Runs the guided pipeline and all four reconstruction methods on a given
/// scene.
pub fn run_scene_on(seed: u64, scene: CrackScene, cfg: &BenchmarkConfig) -> Result<SceneRun> {
    cfg.validate()?;
    let top_view = render_top_view(&scene, &cfg.render);
    let depth = render_depth(&scene, &cfg.render);
    let vision_mask = segment_baseline(&top_view, &cfg.segmenter);
    let truth_mask = ground_truth_mask(&scene, cfg.render.mm_per_px, false);
    let graph = extract_graph_with(&thin(&vision_mask), &cfg.graph)?;
    let plan = plan_scene(&graph, &depth, &cfg.planner)?;
    let frames = press_plan(&scene, &plan, &cfg.sensor)?;
    let rejected = reject_false_edges(&frames, &cfg.rejection);
    let refined_mask = refine_mask(&vision_mask, &graph, &rejected);
    let passive_plan = passive_raster_plan(scene.width_mm, scene.height_mm, &cfg.sensor, cfg.passive_overlap)?;
    let passive_frames = press_plan(&scene, &passive_plan, &cfg.sensor)?;

    let profiles = vec![
        reconstruct_vision(&vision_mask, &depth)?,
        reconstruct_aligned_vision(&vision_mask, vision_mask.meta(), scene.top_z())?,
        reconstruct_tactile(&passive_frames, &BTreeSet::new(), &cfg.sensor, Method::PassiveTactile),
        reconstruct_tactile(&frames, &rejected, &cfg.sensor, Method::ActiveTactile),
    ];

    let truth = truth_polylines(&scene, cfg.truth, cfg.truth_step_mm);
    let vision_det = detection_metrics(&vision_mask, &truth_mask)?;
    let refined_det = detection_metrics(&refined_mask, &truth_mask)?;
    let mut rows = Vec::new();
    for prof in &profiles {
        let recon = match distance_metrics_with(&prof.points, &truth, cfg.symmetric_distance) {
            Ok(m) => Some(m),
            Err(Error::NoReconstruction) | Err(Error::InvalidConfig { .. }) => None,
            Err(e) => return Err(e),
        };
        let (detection, touches) = match prof.method {
            Method::Vision | Method::AlignedVision => (Some(vision_det), None),
            Method::PassiveTactile => (None, Some(&passive_plan)),
            Method::ActiveTactile => (Some(refined_det), Some(&plan)),
        };
        let (n_touches, time_s) = match touches {
            Some(p) => (
                p.len(),
                timing_model(p, cfg.timing.per_touch_s, cfg.timing.travel_mm_per_s),
            ),
            None => (0, 0.0),
        };
        rows.push(BenchmarkRow {
            seed,
            method: prof.method,
            detection,
            recon,
            n_touches,
            time_s,
        });
    }
    Ok(SceneRun {
        seed,
        scene,
        top_view,
        depth,
        vision_mask,
        refined_mask,
        truth_mask,
        graph,
        plan,
        frames,
        rejected,
        passive_plan,
        passive_frames,
        profiles,
        rows,
    })
}

pub fn run_scene(seed: u64, cfg: &BenchmarkConfig) -> Result<SceneRun> {
    cfg.validate()?;
    let scene = generate_random_scene(seed, &cfg.scene)?;
    run_scene_on(seed, scene, cfg)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub n_scored: usize,
    pub mean_d: Option<f64>,
    pub mean_iou: Option<f64>,
    pub mean_touches: f64,
}

fn mean_of(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl BenchmarkReport {
    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &BenchmarkRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn summary(&self, method: Method) -> MethodSummary {
        let rows: Vec<&BenchmarkRow> = self.rows_for(method).collect();
        MethodSummary {
            method,
            n_scored: rows.iter().filter(|r| r.recon.is_some()).count(),
            mean_d: mean_of(rows.iter().filter_map(|r| r.recon.map(|m| m.mean_d))),
            mean_iou: mean_of(rows.iter().filter_map(|r| r.detection.map(|d| d.iou))),
            mean_touches: mean_of(rows.iter().map(|r| r.n_touches as f64)).unwrap_or(0.0),
        }
    }

    /// Active tactile beats aligned vision, which beats vision, on mean meanD.
    pub fn ordering_holds(&self) -> bool {
        let m = |k| self.summary(k).mean_d;
        match (m(Method::ActiveTactile), m(Method::AlignedVision), m(Method::Vision)) {
            (Some(a), Some(b), Some(c)) => a < b && b < c,
            _ => false,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,method,pix_acc,iou,mean_d_mm,sd_mm,max_d_mm,n_points,n_touches,time_s\n");
        let na = || "NA".to_string();
        for r in &self.rows {
            let (pa, io) = match r.detection {
                Some(d) => (format!("{:.6}", d.pix_acc), format!("{:.6}", d.iou)),
                None => (na(), na()),
            };
            let (m, s, x, n) = match r.recon {
                Some(m) => (
                    format!("{:.6}", m.mean_d),
                    format!("{:.6}", m.sd),
                    format!("{:.6}", m.max_d),
                    m.n_points.to_string(),
                ),
                None => (na(), na(), na(), "0".to_string()),
            };
            let _ = writeln!(
                out,
                "{},{},{pa},{io},{m},{s},{x},{n},{},{:.3}",
                r.seed, r.method, r.n_touches, r.time_s
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("method,n_scored,mean_mean_d_mm,mean_iou,mean_touches\n");
        let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.6}"));
        for m in Method::ALL {
            let s = self.summary(m);
            let _ = writeln!(
                out,
                "{},{},{},{},{:.3}",
                m,
                s.n_scored,
                fmt(s.mean_d),
                fmt(s.mean_iou),
                s.mean_touches
            );
        }
        let _ = writeln!(out, "ordering_active<aligned<vision,{}", self.ordering_holds());
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Scenes are evaluated in parallel; rows come back in seed order.
pub fn run_benchmark(seeds: &[u64], cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let runs: Vec<Vec<BenchmarkRow>> = seeds
        .par_iter()
        .map(|&s| run_scene(s, cfg).map(|r| r.rows))
        .collect::<Result<_>>()?;
    Ok(BenchmarkReport {
        rows: runs.into_iter().flatten().collect(),
    })
}

fn method_color(m: Method) -> &'static str {
    match m {
        Method::Vision => "#d62728",
        Method::AlignedVision => "#ff7f0e",
        Method::PassiveTactile => "#1f77b4",
        Method::ActiveTactile => "#2ca02c",
    }
}

/// Top-down overlay of truth outlines and reconstructed points, one colour
/// per method. Dense clouds are decimated to keep files small.
pub fn overlay_svg(scene: &CrackScene, truth: &[Vec<Point3mm>], profiles: &[ReconstructedProfile]) -> String {
    const SCALE: f64 = 6.0;
    const MAX_DOTS: usize = 4000;
    let (w, h) = (scene.width_mm * SCALE, scene.height_mm * SCALE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect width="{w:.1}" height="{h:.1}" fill="#f4f4f4" stroke="#999"/>"##
    );
    for c in &scene.cracks {
        let pts: Vec<String> = c
            .polyline
            .iter()
            .map(|p| format!("{:.2},{:.2}", p.x * SCALE, p.y * SCALE))
            .collect();
        let color = if c.is_real() { "#cccccc" } else { "#e8d8f0" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{:.2}" stroke-linecap="round"/>"#,
            pts.join(" "),
            c.width_mm * SCALE
        );
    }
    for line in truth {
        let pts: Vec<String> = line
            .iter()
            .map(|p| format!("{:.2},{:.2}", p.x * SCALE, p.y * SCALE))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="0.6"/>"#,
            pts.join(" ")
        );
    }
    for prof in profiles {
        let step = prof.points.len().div_ceil(MAX_DOTS).max(1);
        let _ = writeln!(s, r#"<g fill="{}" fill-opacity="0.7">"#, method_color(prof.method));
        for p in prof.points.iter().step_by(step) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="0.9"/>"#,
                p.x * SCALE,
                p.y * SCALE
            );
        }
        let _ = writeln!(s, "</g>");
    }
    for (i, m) in Method::ALL.iter().enumerate() {
        let y = 14.0 + i as f64 * 14.0;
        let _ = writeln!(
            s,
            r#"<circle cx="10" cy="{:.0}" r="4" fill="{}"/><text x="18" y="{:.0}" font-size="11" font-family="sans-serif">{}</text>"#,
            y - 4.0,
            method_color(*m),
            y,
            m
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::ContactPose;
    use crate::raster::RasterMeta;

    fn meta(w: usize, h: usize) -> RasterMeta {
        RasterMeta::new(w, h, 1.0, Point3mm::default())
    }

    #[test]
    fn identical_masks() {
        let mut m = Mask::empty(meta(10, 10));
        m.set(3, 3, true);
        assert_eq!(pixacc(&m, &m).unwrap(), 1.0);
        assert_eq!(iou(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_tenth_masks() {
        let mut a = Mask::empty(meta(10, 10));
        let mut b = Mask::empty(meta(10, 10));
        for c in 0..10 {
            a.set(0, c, true);
            b.set(9, c, true);
        }
        assert_eq!(iou(&a, &b).unwrap(), 0.0);
        assert!((pixacc(&a, &b).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_masks_and_mismatch() {
        let e = Mask::empty(meta(4, 4));
        assert_eq!(iou(&e, &e).unwrap(), 1.0);
        assert!(matches!(
            iou(&e, &Mask::empty(meta(4, 5))),
            Err(Error::DimensionMismatch(..))
        ));
        assert!(pixacc(&e, &Mask::empty(meta(5, 4))).is_err());
    }

    #[test]
    fn distance_examples() {
        let line = vec![vec![Point3mm::world(0.0, 0.0, 0.0), Point3mm::world(10.0, 0.0, 0.0)]];
        let on: Vec<Point3mm> = (0..=10).map(|i| Point3mm::world(i as f64, 0.0, 0.0)).collect();
        let m = distance_metrics(&on, &line).unwrap();
        assert_eq!((m.mean_d, m.sd, m.max_d), (0.0, 0.0, 0.0));
        let m = distance_metrics(&[Point3mm::world(4.0, 1.0, 0.0)], &line).unwrap();
        assert_eq!((m.mean_d, m.sd, m.max_d), (1.0, 0.0, 1.0));
        assert!(matches!(distance_metrics(&[], &line), Err(Error::NoReconstruction)));
    }

    #[test]
    fn far_and_outside_queries() {
        let line = vec![vec![Point3mm::world(0.0, 0.0, 0.0), Point3mm::world(3.0, 4.0, 0.0)]];
        let idx = SegmentIndex::new(&line, 1.0);
        assert!((idx.distance(&Point3mm::world(-30.0, 0.0, 0.0)) - 30.0).abs() < 1e-12);
        assert!((idx.distance(&Point3mm::world(3.0, 4.0, 12.0)) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_option_penalises_missing_coverage() {
        let line = vec![vec![Point3mm::world(0.0, 0.0, 0.0), Point3mm::world(10.0, 0.0, 0.0)]];
        let pts = [Point3mm::world(0.0, 0.0, 0.0)];
        assert_eq!(distance_metrics(&pts, &line).unwrap().max_d, 0.0);
        let sym = distance_metrics_with(&pts, &line, true).unwrap();
        assert_eq!(sym.max_d, 10.0);
    }

    #[test]
    fn timing_examples() {
        assert_eq!(timing_model(&TouchPlan::default(), 1.0, 50.0), 0.0);
        let c = ContactPose {
            position: Point3mm::world(1.0, 1.0, 0.0),
            yaw: 0.0,
            source_edge: None,
            source_pixel: None,
        };
        let plan = TouchPlan { contacts: vec![c; 10] };
        assert_eq!(timing_model(&plan, 1.0, 50.0), 10.0);
    }

    #[test]
    fn blank_scene_rows_are_na() {
        let cfg = BenchmarkConfig {
            scene: SceneParams {
                n_real: 0,
                n_fake: 0,
                ..SceneParams::default()
            },
            ..BenchmarkConfig::default()
        };
        let run = run_scene(4, &cfg).unwrap();
        assert_eq!(run.rows.len(), 4);
        assert!(run.rows.iter().all(|r| r.recon.is_none()));
        let report = BenchmarkReport { rows: run.rows };
        assert!(report.to_csv().lines().nth(1).unwrap().contains("NA"));
    }

    #[test]
    fn svg_has_all_layers() {
        let mut scene = CrackScene::blank(20.0, 20.0, 2.0, 0);
        scene.cracks.push(crate::scene::CrackPath {
            polyline: vec![Point3mm::world(2.0, 2.0, 2.0), Point3mm::world(18.0, 18.0, 2.0)],
            width_mm: 1.0,
            kind: crate::scene::CrackKind::Real { depth_mm: 1.0 },
        });
        let prof = ReconstructedProfile {
            points: vec![Point3mm::world(5.0, 5.0, 2.0)],
            method: Method::ActiveTactile,
            provenance: Vec::new(),
        };
        let svg = overlay_svg(&scene, &scene.boundary_polylines(0.5), &[prof]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("#2ca02c") && svg.contains("<circle cx=\"30.00\""));
    }
}
