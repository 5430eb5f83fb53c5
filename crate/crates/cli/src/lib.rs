//! File-based driver for the crackprobe pipeline.
//!
//! Every stage reads its inputs from and writes its outputs to an output
//! directory, so stages can be run one at a time or all at once:
//!
//! ```text
//! out/
//!   scenes/   scene.json, top.pgm, depth.pgm
//!   masks/    truth.pgm, vision.pgm, skeleton.pgm, graph.json, refined.pgm
//!   frames/   plan.json, passive_plan.json, frame_NNNN.pgm, rejected.json
//!   profiles/ profiles.csv, <method>.ply
//!   reports/  report.csv, overlay.svg, compare.csv, compare_summary.csv
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use crackprobe::evaluation::{
    detection_metrics, distance_metrics_with, overlay_svg, run_benchmark, timing_model, truth_polylines,
    BenchmarkConfig, BenchmarkReport, BenchmarkRow, DetectionMetrics, TimingModel, TruthShape,
};
use crackprobe::geometry::SensorModel;
use crackprobe::planner::{plan_scene, PlannerConfig, TouchPlan};
use crackprobe::raster::{self, GrayImage, Mask};
use crackprobe::reconstruction::{
    passive_raster_plan, read_profiles_csv, reconstruct_aligned_vision, reconstruct_tactile, reconstruct_vision,
    write_ply, write_profiles_csv, Method, ReconstructedProfile,
};
use crackprobe::scene::{
    generate_random_scene, ground_truth_mask, render_depth, render_top_view, CrackScene, RenderOptions, SceneParams,
};
use crackprobe::segmentation::{segment_baseline, SegmenterConfig};
use crackprobe::skeleton::{extract_graph_with, thin, GraphDocument, GraphOptions, SkeletonGraph};
use crackprobe::tactile::{
    load_frame, press_plan, refine_mask, reject_false_edges, save_frame, RejectionConfig, TactileFrame,
};
use crackprobe::Error;

/// Everything a pipeline run needs. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Scenes scored by `compare`, seeded `seed..seed + n_scenes`.
    pub n_scenes: usize,
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

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::from_benchmark(0, PathBuf::from("out"), 20, BenchmarkConfig::default())
    }
}

impl PipelineConfig {
    pub fn from_benchmark(seed: u64, out_dir: PathBuf, n_scenes: usize, b: BenchmarkConfig) -> Self {
        Self {
            seed,
            out_dir,
            n_scenes,
            scene: b.scene,
            render: b.render,
            segmenter: b.segmenter,
            graph: b.graph,
            planner: b.planner,
            sensor: b.sensor,
            rejection: b.rejection,
            timing: b.timing,
            passive_overlap: b.passive_overlap,
            truth: b.truth,
            truth_step_mm: b.truth_step_mm,
            symmetric_distance: b.symmetric_distance,
        }
    }

    pub fn benchmark(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            scene: self.scene.clone(),
            render: self.render.clone(),
            segmenter: self.segmenter.clone(),
            graph: self.graph.clone(),
            planner: self.planner.clone(),
            sensor: self.sensor.clone(),
            rejection: self.rejection.clone(),
            timing: self.timing.clone(),
            passive_overlap: self.passive_overlap,
            truth: self.truth,
            truth_step_mm: self.truth_step_mm,
            symmetric_distance: self.symmetric_distance,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("invalid configuration")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.out_dir.as_os_str().is_empty() {
            return Err(Error::InvalidConfig {
                field: "out_dir".into(),
                message: "must not be empty".into(),
            }
            .into());
        }
        if self.n_scenes == 0 {
            return Err(Error::InvalidConfig {
                field: "n_scenes".into(),
                message: "must be >= 1".into(),
            }
            .into());
        }
        self.benchmark().validate()?;
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.out_dir)
    }
}

/// Command-line values that override the configuration file.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub n_scenes: Option<usize>,
    #[arg(long, global = true)]
    pub mm_per_px: Option<f64>,
    #[arg(long, global = true)]
    pub seg_threshold: Option<f32>,
    #[arg(long, global = true)]
    pub seg_open: Option<usize>,
    #[arg(long, global = true)]
    pub seg_close: Option<usize>,
    #[arg(long, global = true)]
    pub step_d_mm: Option<f64>,
    #[arg(long, global = true)]
    pub area_threshold: Option<f64>,
    #[arg(long, global = true)]
    pub min_low_frames: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.n_scenes {
            cfg.n_scenes = v;
        }
        if let Some(v) = self.mm_per_px {
            cfg.render.mm_per_px = v;
        }
        if let Some(v) = self.seg_threshold {
            cfg.segmenter.threshold = v;
        }
        if let Some(v) = self.seg_open {
            cfg.segmenter.open_radius = v;
        }
        if let Some(v) = self.seg_close {
            cfg.segmenter.close_radius = v;
        }
        if let Some(v) = self.step_d_mm {
            cfg.planner.step_d_mm = v;
        }
        if let Some(v) = self.area_threshold {
            cfg.rejection.area_threshold = v;
        }
        if let Some(v) = self.min_low_frames {
            cfg.rejection.min_low_frames = v;
        }
    }
}

/// Loads the configuration file (or defaults), applies overrides and
/// validates the result.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Paths of every artifact under an output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn scenes(&self) -> PathBuf {
        self.root.join("scenes")
    }
    pub fn masks(&self) -> PathBuf {
        self.root.join("masks")
    }
    pub fn frames(&self) -> PathBuf {
        self.root.join("frames")
    }
    pub fn profiles(&self) -> PathBuf {
        self.root.join("profiles")
    }
    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn scene_json(&self) -> PathBuf {
        self.scenes().join("scene.json")
    }
    pub fn top_view(&self) -> PathBuf {
        self.scenes().join("top.pgm")
    }
    pub fn depth(&self) -> PathBuf {
        self.scenes().join("depth.pgm")
    }
    pub fn truth_mask(&self) -> PathBuf {
        self.masks().join("truth.pgm")
    }
    pub fn vision_mask(&self) -> PathBuf {
        self.masks().join("vision.pgm")
    }
    pub fn skeleton_mask(&self) -> PathBuf {
        self.masks().join("skeleton.pgm")
    }
    pub fn graph_json(&self) -> PathBuf {
        self.masks().join("graph.json")
    }
    pub fn refined_mask(&self) -> PathBuf {
        self.masks().join("refined.pgm")
    }
    pub fn plan_json(&self) -> PathBuf {
        self.frames().join("plan.json")
    }
    pub fn passive_plan_json(&self) -> PathBuf {
        self.frames().join("passive_plan.json")
    }
    pub fn frame(&self, index: usize) -> PathBuf {
        self.frames().join(format!("frame_{index:04}.pgm"))
    }
    pub fn rejected_json(&self) -> PathBuf {
        self.frames().join("rejected.json")
    }
    pub fn profiles_csv(&self) -> PathBuf {
        self.profiles().join("profiles.csv")
    }
    pub fn ply(&self, method: Method) -> PathBuf {
        self.profiles().join(format!("{method}.ply"))
    }
    pub fn report_csv(&self) -> PathBuf {
        self.reports().join("report.csv")
    }
    pub fn overlay_svg(&self) -> PathBuf {
        self.reports().join("overlay.svg")
    }
    pub fn compare_csv(&self) -> PathBuf {
        self.reports().join("compare.csv")
    }
    pub fn compare_summary_csv(&self) -> PathBuf {
        self.reports().join("compare_summary.csv")
    }

    fn ensure(&self) -> Result<()> {
        for d in [
            self.scenes(),
            self.masks(),
            self.frames(),
            self.profiles(),
            self.reports(),
        ] {
            fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedEdges {
    pub rejected: Vec<usize>,
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_mask(path: &Path) -> Result<Mask> {
    let (mask, _) = raster::load_mask(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(mask)
}

fn read_gray(path: &Path) -> Result<GrayImage> {
    let (image, _) = raster::load_gray(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(image)
}

pub fn load_scene(path: &Path) -> Result<CrackScene> {
    let scene: CrackScene = read_json(path)?;
    scene.validate().with_context(|| format!("in {}", path.display()))?;
    Ok(scene)
}

pub fn load_graph(path: &Path) -> Result<SkeletonGraph> {
    let doc: GraphDocument = read_json(path)?;
    doc.into_graph().with_context(|| format!("in {}", path.display()))
}

pub fn load_frames(layout: &Layout, plan: &TouchPlan) -> Result<Vec<TactileFrame>> {
    (0..plan.len())
        .map(|i| {
            let p = layout.frame(i);
            load_frame(&p).with_context(|| format!("loading {}", p.display()))
        })
        .collect()
}

/// Generates the scene for `cfg.seed` and writes the scene, its renders and
/// the ground-truth mask.
pub fn cmd_gen_scene(cfg: &PipelineConfig) -> Result<CrackScene> {
    let layout = cfg.layout();
    layout.ensure()?;
    let scene = generate_random_scene(cfg.seed, &cfg.scene)?;
    write_json(&scene, &layout.scene_json())?;
    raster::save_gray(&render_top_view(&scene, &cfg.render), &layout.top_view())?;
    raster::save_gray(&render_depth(&scene, &cfg.render), &layout.depth())?;
    raster::save_mask(
        &ground_truth_mask(&scene, cfg.render.mm_per_px, false),
        &layout.truth_mask(),
        None,
    )?;
    Ok(scene)
}

/// Segments an overhead image (the generated one unless `input` is given).
pub fn cmd_segment(cfg: &PipelineConfig, input: Option<&Path>) -> Result<Mask> {
    let layout = cfg.layout();
    layout.ensure()?;
    let top = read_gray(input.unwrap_or(&layout.top_view()))?;
    let mask = segment_baseline(&top, &cfg.segmenter);
    raster::save_mask(&mask, &layout.vision_mask(), None)?;
    Ok(mask)
}

pub fn cmd_skeleton(cfg: &PipelineConfig) -> Result<SkeletonGraph> {
    let layout = cfg.layout();
    layout.ensure()?;
    let mask = read_mask(&layout.vision_mask())?;
    let graph = extract_graph_with(&thin(&mask), &cfg.graph)?;
    raster::save_mask(&graph.skeleton, &layout.skeleton_mask(), None)?;
    write_json(&GraphDocument::from(&graph), &layout.graph_json())?;
    Ok(graph)
}

/// Guided plan from the skeleton graph, plus the passive raster plan over
/// the whole plate.
pub fn cmd_plan(cfg: &PipelineConfig) -> Result<(TouchPlan, TouchPlan)> {
    let layout = cfg.layout();
    layout.ensure()?;
    let graph = load_graph(&layout.graph_json())?;
    let depth = read_gray(&layout.depth())?;
    let scene = load_scene(&layout.scene_json())?;
    let plan = plan_scene(&graph, &depth, &cfg.planner)?;
    let passive = passive_raster_plan(scene.width_mm, scene.height_mm, &cfg.sensor, cfg.passive_overlap)?;
    plan.save(&layout.plan_json())?;
    passive.save(&layout.passive_plan_json())?;
    Ok((plan, passive))
}

/// Presses the guided plan, rejects false edges and writes the refined mask.
pub fn cmd_touch(cfg: &PipelineConfig) -> Result<(Vec<TactileFrame>, BTreeSet<usize>)> {
    let layout = cfg.layout();
    layout.ensure()?;
    let scene = load_scene(&layout.scene_json())?;
    let plan = TouchPlan::load(&layout.plan_json())?;
    let frames = press_plan(&scene, &plan, &cfg.sensor)?;
    for (i, f) in frames.iter().enumerate() {
        save_frame(f, &layout.frame(i))?;
    }
    let rejected = reject_false_edges(&frames, &cfg.rejection);
    write_json(
        &RejectedEdges {
            rejected: rejected.iter().copied().collect(),
        },
        &layout.rejected_json(),
    )?;
    let vision = read_mask(&layout.vision_mask())?;
    let graph = load_graph(&layout.graph_json())?;
    raster::save_mask(&refine_mask(&vision, &graph, &rejected), &layout.refined_mask(), None)?;
    Ok((frames, rejected))
}

/// Builds all four reconstructions. Passive frames are pressed on the fly
/// rather than stored.
pub fn cmd_reconstruct(cfg: &PipelineConfig) -> Result<Vec<ReconstructedProfile>> {
    let layout = cfg.layout();
    layout.ensure()?;
    let scene = load_scene(&layout.scene_json())?;
    let vision = read_mask(&layout.vision_mask())?;
    let depth = read_gray(&layout.depth())?;
    let plan = TouchPlan::load(&layout.plan_json())?;
    let passive_plan = TouchPlan::load(&layout.passive_plan_json())?;
    let frames = load_frames(&layout, &plan)?;
    let rejected: RejectedEdges = read_json(&layout.rejected_json())?;
    let rejected: BTreeSet<usize> = rejected.rejected.into_iter().collect();
    let passive_frames = press_plan(&scene, &passive_plan, &cfg.sensor)?;

    let profiles = vec![
        reconstruct_vision(&vision, &depth)?,
        reconstruct_aligned_vision(&vision, vision.meta(), scene.top_z())?,
        reconstruct_tactile(&passive_frames, &BTreeSet::new(), &cfg.sensor, Method::PassiveTactile),
        reconstruct_tactile(&frames, &rejected, &cfg.sensor, Method::ActiveTactile),
    ];
    write_profiles_csv(&profiles, &layout.profiles_csv())?;
    for p in &profiles {
        write_ply(p, &layout.ply(p.method))?;
    }
    Ok(profiles)
}

fn optional_mask(path: &Path) -> Result<Option<Mask>> {
    if path.exists() {
        read_mask(path).map(Some)
    } else {
        Ok(None)
    }
}

fn optional_plan(path: &Path) -> Result<Option<TouchPlan>> {
    if path.exists() {
        Ok(Some(TouchPlan::load(path)?))
    } else {
        Ok(None)
    }
}

/// Scores a profile CSV against a scene. Detection metrics and touch counts
/// come from the masks and plans under `cfg.out_dir` when present.
pub fn cmd_eval(cfg: &PipelineConfig, profiles: &Path, scene: &Path, output: Option<&Path>) -> Result<BenchmarkReport> {
    let layout = cfg.layout();
    layout.ensure()?;
    let scene = load_scene(scene)?;
    let profiles = read_profiles_csv(profiles).with_context(|| format!("reading {}", profiles.display()))?;
    let truth = truth_polylines(&scene, cfg.truth, cfg.truth_step_mm);

    let truth_mask = optional_mask(&layout.truth_mask())?;
    let detect = |path: PathBuf| -> Result<Option<DetectionMetrics>> {
        match (optional_mask(&path)?, &truth_mask) {
            (Some(m), Some(t)) => Ok(Some(detection_metrics(&m, t)?)),
            _ => Ok(None),
        }
    };
    let vision_det = detect(layout.vision_mask())?;
    let refined_det = detect(layout.refined_mask())?;
    let plan = optional_plan(&layout.plan_json())?;
    let passive_plan = optional_plan(&layout.passive_plan_json())?;

    let mut rows = Vec::new();
    for method in Method::ALL {
        let points = profiles
            .iter()
            .find(|p| p.method == method)
            .map(|p| p.points.as_slice())
            .unwrap_or(&[]);
        let recon = match distance_metrics_with(points, &truth, cfg.symmetric_distance) {
            Ok(m) => Some(m),
            Err(Error::NoReconstruction) | Err(Error::InvalidConfig { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let (detection, touches) = match method {
            Method::Vision | Method::AlignedVision => (vision_det, None),
            Method::PassiveTactile => (None, passive_plan.as_ref()),
            Method::ActiveTactile => (refined_det, plan.as_ref()),
        };
        let (n_touches, time_s) = match touches {
            Some(p) => (
                p.len(),
                timing_model(p, cfg.timing.per_touch_s, cfg.timing.travel_mm_per_s),
            ),
            None => (0, 0.0),
        };
        rows.push(BenchmarkRow {
            seed: cfg.seed,
            method,
            detection,
            recon,
            n_touches,
            time_s,
        });
    }
    let report = BenchmarkReport { rows };
    let out = output.map(Path::to_path_buf).unwrap_or_else(|| layout.report_csv());
    report.write_csv(&out)?;
    Ok(report)
}

/// Full pipeline for one seed, every stage going through the files above.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<BenchmarkReport> {
    let layout = cfg.layout();
    let scene = cmd_gen_scene(cfg)?;
    cmd_segment(cfg, None)?;
    cmd_skeleton(cfg)?;
    cmd_plan(cfg)?;
    cmd_touch(cfg)?;
    let profiles = cmd_reconstruct(cfg)?;
    let report = cmd_eval(cfg, &layout.profiles_csv(), &layout.scene_json(), None)?;
    let truth = truth_polylines(&scene, cfg.truth, cfg.truth_step_mm);
    fs::write(layout.overlay_svg(), overlay_svg(&scene, &truth, &profiles))?;
    Ok(report)
}

/// Benchmarks all methods over `cfg.n_scenes` seeds in memory.
pub fn cmd_compare(cfg: &PipelineConfig) -> Result<BenchmarkReport> {
    let layout = cfg.layout();
    layout.ensure()?;
    let Some(end) = cfg.seed.checked_add(cfg.n_scenes as u64) else {
        bail!("seed range {} + {} overflows", cfg.seed, cfg.n_scenes);
    };
    let seeds: Vec<u64> = (cfg.seed..end).collect();
    let report = run_benchmark(&seeds, &cfg.benchmark())?;
    report.write_csv(&layout.compare_csv())?;
    fs::write(layout.compare_summary_csv(), report.summary_csv())?;
    Ok(report)
}
