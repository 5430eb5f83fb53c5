//! Synthetic cracked plates and their overhead renders.
//!
//! The world frame is the plate frame: x along the plate width, y along its
//! height, z up with the top surface at `z = thickness_mm`. The overhead
//! views are orthographic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_distance_xy, Point3mm, RigidTransform};
use crate::raster::{GrayImage, Mask, Raster, RasterMeta};

const TOP_NOISE_STREAM: u64 = 0x746f_705f_7669_6577;
const DEPTH_NOISE_STREAM: u64 = 0x6465_7074_685f_6e7a;
const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrackKind {
    /// A groove cut into the surface.
    Real { depth_mm: f64 },
    /// A dark marking with no relief.
    Painted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrackPath {
    pub polyline: Vec<Point3mm>,
    pub width_mm: f64,
    #[serde(flatten)]
    pub kind: CrackKind,
}

impl CrackPath {
    pub fn is_real(&self) -> bool {
        matches!(self.kind, CrackKind::Real { .. })
    }

    pub fn depth_mm(&self) -> f64 {
        match self.kind {
            CrackKind::Real { depth_mm } => depth_mm,
            CrackKind::Painted => 0.0,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.width_mm / 2.0
    }

    pub fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        self.polyline.windows(2).map(|w| ((w[0].x, w[0].y), (w[1].x, w[1].y)))
    }

    /// Planar distance from `(x, y)` to the centreline.
    pub fn distance_xy(&self, x: f64, y: f64) -> f64 {
        self.segments()
            .map(|(a, b)| segment_distance_xy(x, y, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn covers_xy(&self, x: f64, y: f64) -> bool {
        self.distance_xy(x, y) <= self.half_width()
    }

    pub fn length_mm(&self) -> f64 {
        self.polyline.windows(2).map(|w| w[0].planar_distance(&w[1])).sum()
    }

    /// Axis-aligned planar bounds of the painted/grooved region.
    pub fn bounds_xy(&self) -> [f64; 4] {
        let r = self.half_width();
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.polyline {
            b[0] = b[0].min(p.x - r);
            b[1] = b[1].min(p.y - r);
            b[2] = b[2].max(p.x + r);
            b[3] = b[3].max(p.y + r);
        }
        b
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let field = |f: &str| format!("cracks[{index}].{f}");
        if self.polyline.len() < 2 {
            return Err(Error::config(field("polyline"), "needs at least 2 points"));
        }
        if self.polyline.iter().any(|p| !p.is_finite()) {
            return Err(Error::config(field("polyline"), "non-finite point"));
        }
        if self.polyline.windows(2).any(|w| w[0].distance(&w[1]) == 0.0) {
            return Err(Error::config(field("polyline"), "consecutive points coincide"));
        }
        if !(self.width_mm > 0.0) {
            return Err(Error::config(field("width_mm"), "must be > 0"));
        }
        if let CrackKind::Real { depth_mm } = self.kind {
            if !(depth_mm > 0.0) {
                return Err(Error::config(field("depth_mm"), "real cracks need depth > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrackScene {
    pub width_mm: f64,
    pub height_mm: f64,
    pub thickness_mm: f64,
    pub cracks: Vec<CrackPath>,
    pub background_albedo: f32,
    pub crack_albedo: f32,
    pub paint_albedo: f32,
    pub rng_seed: u64,
}

impl CrackScene {
    pub fn blank(width_mm: f64, height_mm: f64, thickness_mm: f64, rng_seed: u64) -> Self {
        Self {
            width_mm,
            height_mm,
            thickness_mm,
            cracks: Vec::new(),
            background_albedo: 0.8,
            crack_albedo: 0.15,
            paint_albedo: 0.15,
            rng_seed,
        }
    }

    pub fn top_z(&self) -> f64 {
        self.thickness_mm
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width_mm).contains(&x) && (0.0..=self.height_mm).contains(&y)
    }

    pub fn real_cracks(&self) -> impl Iterator<Item = &CrackPath> {
        self.cracks.iter().filter(|c| c.is_real())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("width_mm", self.width_mm),
            ("height_mm", self.height_mm),
            ("thickness_mm", self.thickness_mm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be > 0"));
            }
        }
        for (name, a) in [
            ("background_albedo", self.background_albedo),
            ("crack_albedo", self.crack_albedo),
            ("paint_albedo", self.paint_albedo),
        ] {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::config(name, "must lie in [0, 1]"));
            }
        }
        for (i, c) in self.cracks.iter().enumerate() {
            c.validate(i)?;
            if c.polyline.iter().any(|p| !self.contains_xy(p.x, p.y)) {
                return Err(Error::config(
                    format!("cracks[{i}].polyline"),
                    "leaves the plate bounds",
                ));
            }
        }
        Ok(())
    }

    /// Applies a rigid motion to every crack polyline. Plate bounds are left
    /// untouched.
    pub fn transformed(&self, t: &RigidTransform) -> CrackScene {
        let mut out = self.clone();
        for c in &mut out.cracks {
            for p in &mut c.polyline {
                *p = t.apply(*p);
            }
        }
        out
    }

    /// Real-crack depth at a planar position (deepest groove wins), `None`
    /// outside every groove.
    pub fn groove_depth_at(&self, x: f64, y: f64) -> Option<f64> {
        self.real_cracks()
            .filter(|c| c.covers_xy(x, y))
            .map(CrackPath::depth_mm)
            .fold(None, |acc, d| Some(acc.map_or(d, |a: f64| a.max(d))))
    }

    pub fn centerlines(&self) -> Vec<Vec<Point3mm>> {
        let z = self.top_z();
        self.real_cracks()
            .map(|c| c.polyline.iter().map(|p| Point3mm::world(p.x, p.y, z)).collect())
            .collect()
    }

    /// Outline of the union of all real grooves on the top surface, sampled
    /// every `step_mm` and split into polylines wherever it dips inside
    /// another groove.
    pub fn boundary_polylines(&self, step_mm: f64) -> Vec<Vec<Point3mm>> {
        let z = self.top_z();
        let real: Vec<&CrackPath> = self.real_cracks().collect();
        let inside_union = |x: f64, y: f64| real.iter().any(|c| c.distance_xy(x, y) < c.half_width() - 1e-6);
        let mut curves: Vec<Vec<(f64, f64)>> = Vec::new();
        for c in &real {
            let r = c.half_width();
            for (a, b) in c.segments() {
                let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                let len = dx.hypot(dy);
                let (nx, ny) = (-dy / len * r, dx / len * r);
                let n = (len / step_mm).ceil().max(1.0) as usize;
                for sign in [1.0, -1.0] {
                    curves.push(
                        (0..=n)
                            .map(|i| {
                                let t = i as f64 / n as f64;
                                (a.0 + t * dx + sign * nx, a.1 + t * dy + sign * ny)
                            })
                            .collect(),
                    );
                }
            }
            for p in &c.polyline {
                let n = ((std::f64::consts::TAU * r) / step_mm).ceil().max(8.0) as usize;
                curves.push(
                    (0..=n)
                        .map(|i| {
                            let th = std::f64::consts::TAU * i as f64 / n as f64;
                            (p.x + r * th.cos(), p.y + r * th.sin())
                        })
                        .collect(),
                );
            }
        }
        let mut out = Vec::new();
        for curve in curves {
            let mut run: Vec<Point3mm> = Vec::new();
            for (x, y) in curve {
                if inside_union(x, y) {
                    if run.len() >= 2 {
                        out.push(std::mem::take(&mut run));
                    }
                    run.clear();
                } else {
                    run.push(Point3mm::world(x, y, z));
                }
            }
            if run.len() >= 2 {
                out.push(run);
            }
        }
        out
    }
}

/// Parameters of the random plate generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneParams {
    pub n_real: usize,
    pub n_fake: usize,
    pub width_range_mm: [f64; 2],
    pub depth_range_mm: [f64; 2],
    pub length_range_mm: [f64; 2],
    pub plate_width_mm: f64,
    pub plate_height_mm: f64,
    pub plate_thickness_mm: f64,
    /// Centreline step of the random walk.
    pub step_mm: f64,
    /// Largest heading change per step.
    pub max_turn_rad: f64,
    /// Minimum planar gap between different cracks.
    pub separation_mm: f64,
    /// Minimum gap between a centreline and the plate edge.
    pub margin_mm: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            n_real: 1,
            n_fake: 1,
            width_range_mm: [1.0, 3.0],
            depth_range_mm: [1.0, 3.0],
            length_range_mm: [15.0, 35.0],
            plate_width_mm: 140.0,
            plate_height_mm: 105.0,
            plate_thickness_mm: 10.0,
            step_mm: 5.0,
            max_turn_rad: 0.35,
            separation_mm: 15.0,
            margin_mm: 8.0,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("width_range_mm", self.width_range_mm),
            ("depth_range_mm", self.depth_range_mm),
            ("length_range_mm", self.length_range_mm),
        ] {
            if !(r[0] > 0.0 && r[1] >= r[0] && r[1].is_finite()) {
                return Err(Error::config(name, "must be a positive range [lo, hi]"));
            }
        }
        for (name, v) in [
            ("plate_width_mm", self.plate_width_mm),
            ("plate_height_mm", self.plate_height_mm),
            ("plate_thickness_mm", self.plate_thickness_mm),
            ("step_mm", self.step_mm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be > 0"));
            }
        }
        if !(self.max_turn_rad >= 0.0) {
            return Err(Error::config("max_turn_rad", "must be >= 0"));
        }
        if !(self.separation_mm >= 0.0 && self.margin_mm >= 0.0) {
            return Err(Error::config("separation_mm/margin_mm", "must be >= 0"));
        }
        if 2.0 * self.margin_mm >= self.plate_width_mm.min(self.plate_height_mm) {
            return Err(Error::config("margin_mm", "leaves no room on the plate"));
        }
        Ok(())
    }
}

fn sample_range(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn random_walk(rng: &mut ChaCha8Rng, p: &SceneParams, z: f64) -> Vec<Point3mm> {
    let length = sample_range(rng, p.length_range_mm);
    let n = (length / p.step_mm).ceil().max(1.0) as usize;
    let step = length / n as f64;
    let mut x = rng.random_range(p.margin_mm..p.plate_width_mm - p.margin_mm);
    let mut y = rng.random_range(p.margin_mm..p.plate_height_mm - p.margin_mm);
    let mut heading = rng.random_range(0.0..std::f64::consts::TAU);
    let mut pts = vec![Point3mm::world(x, y, z)];
    for _ in 0..n {
        if p.max_turn_rad > 0.0 {
            heading += rng.random_range(-p.max_turn_rad..p.max_turn_rad);
        }
        x += step * heading.cos();
        y += step * heading.sin();
        pts.push(Point3mm::world(x, y, z));
    }
    pts
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn polyline_gap(a: &[Point3mm], b: &[Point3mm]) -> f64 {
    let mut best = f64::INFINITY;
    for s in a.windows(2) {
        let (s0, s1) = ((s[0].x, s[0].y), (s[1].x, s[1].y));
        for t in b.windows(2) {
            let (t0, t1) = ((t[0].x, t[0].y), (t[1].x, t[1].y));
            if segments_intersect(s0, s1, t0, t1) {
                return 0.0;
            }
            best = best
                .min(segment_distance_xy(s0.0, s0.1, t0, t1))
                .min(segment_distance_xy(s1.0, s1.1, t0, t1))
                .min(segment_distance_xy(t0.0, t0.1, s0, s1))
                .min(segment_distance_xy(t1.0, t1.1, s0, s1));
        }
    }
    best
}

/// Random plate with `n_real` grooves followed by `n_fake` painted marks,
/// deterministic in `seed`.
pub fn generate_random_scene(seed: u64, params: &SceneParams) -> Result<CrackScene> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = CrackScene::blank(
        params.plate_width_mm,
        params.plate_height_mm,
        params.plate_thickness_mm,
        seed,
    );
    let z = scene.top_z();
    let lo_x = params.margin_mm;
    let hi_x = params.plate_width_mm - params.margin_mm;
    let lo_y = params.margin_mm;
    let hi_y = params.plate_height_mm - params.margin_mm;
    let mut attempts = 0;
    let kinds = std::iter::repeat_n(true, params.n_real).chain(std::iter::repeat_n(false, params.n_fake));
    for real in kinds {
        loop {
            attempts += 1;
            if attempts > MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::SceneGeneration(format!(
                    "could not place {} real + {} painted cracks within {MAX_PLACEMENT_ATTEMPTS} attempts",
                    params.n_real, params.n_fake
                )));
            }
            let polyline = random_walk(&mut rng, params, z);
            let width_mm = sample_range(&mut rng, params.width_range_mm);
            let kind = if real {
                CrackKind::Real {
                    depth_mm: sample_range(&mut rng, params.depth_range_mm),
                }
            } else {
                CrackKind::Painted
            };
            let inside = polyline
                .iter()
                .all(|p| (lo_x..=hi_x).contains(&p.x) && (lo_y..=hi_y).contains(&p.y));
            if !inside {
                continue;
            }
            let clear = scene
                .cracks
                .iter()
                .all(|c| polyline_gap(&c.polyline, &polyline) >= params.separation_mm);
            if !clear {
                continue;
            }
            scene.cracks.push(CrackPath {
                polyline,
                width_mm,
                kind,
            });
            break;
        }
    }
    Ok(scene)
}

/// Overhead noise and resolution settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    pub mm_per_px: f64,
    /// Additive Gaussian noise on the intensity image.
    pub intensity_noise: f64,
    /// Additive Gaussian noise on the height image, mm.
    pub depth_noise_mm: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            mm_per_px: 0.5,
            intensity_noise: 0.0,
            depth_noise_mm: 0.3,
        }
    }
}

impl RenderOptions {
    pub fn noiseless(mm_per_px: f64) -> Self {
        Self {
            mm_per_px,
            intensity_noise: 0.0,
            depth_noise_mm: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mm_per_px > 0.0 && self.mm_per_px.is_finite()) {
            return Err(Error::config("render.mm_per_px", "must be > 0"));
        }
        if !(self.intensity_noise >= 0.0 && self.depth_noise_mm >= 0.0) {
            return Err(Error::config("render", "noise levels must be >= 0"));
        }
        Ok(())
    }
}

/// Overhead raster grid covering the plate, pixel (0, 0) centred half a
/// pixel in from the plate corner.
pub fn overhead_meta(scene: &CrackScene, mm_per_px: f64, origin_z: f64) -> RasterMeta {
    let w = (scene.width_mm / mm_per_px - 1e-9).ceil().max(1.0) as usize;
    let h = (scene.height_mm / mm_per_px - 1e-9).ceil().max(1.0) as usize;
    RasterMeta::new(
        w,
        h,
        mm_per_px,
        Point3mm::world(mm_per_px / 2.0, mm_per_px / 2.0, origin_z),
    )
}

fn per_pixel<T: Copy>(meta: RasterMeta, f: impl Fn(f64, f64) -> T) -> Raster<T> {
    let data = (0..meta.len())
        .map(|i| {
            let (x, y) = meta.pixel_xy((i % meta.width) as f64, (i / meta.width) as f64);
            f(x, y)
        })
        .collect();
    Raster::from_vec(meta, data).expect("buffer sized from meta")
}

fn add_noise(image: &mut GrayImage, sigma: f64, seed: u64, clamp: Option<(f32, f32)>) {
    if sigma <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma > 0");
    for v in image.data_mut() {
        let n = normal.sample(&mut rng) as f32;
        *v += n;
        if let Some((lo, hi)) = clamp {
            *v = v.clamp(lo, hi);
        }
    }
}

/// Overhead intensity image. Grooves and painted marks are both dark.
pub fn render_top_view(scene: &CrackScene, opts: &RenderOptions) -> GrayImage {
    let meta = overhead_meta(scene, opts.mm_per_px, scene.top_z());
    let mut img = per_pixel(meta, |x, y| {
        let mut value = scene.background_albedo;
        for c in &scene.cracks {
            if c.covers_xy(x, y) {
                if c.is_real() {
                    return scene.crack_albedo;
                }
                value = scene.paint_albedo;
            }
        }
        value
    });
    add_noise(
        &mut img,
        opts.intensity_noise,
        scene.rng_seed ^ TOP_NOISE_STREAM,
        Some((0.0, 1.0)),
    );
    img
}

/// Overhead height image in mm (pixel value = surface z), grooves lowered
/// by their depth, painted marks invisible.
pub fn render_depth(scene: &CrackScene, opts: &RenderOptions) -> GrayImage {
    let meta = overhead_meta(scene, opts.mm_per_px, 0.0);
    let top = scene.top_z();
    let mut img = per_pixel(meta, |x, y| (top - scene.groove_depth_at(x, y).unwrap_or(0.0)) as f32);
    add_noise(&mut img, opts.depth_noise_mm, scene.rng_seed ^ DEPTH_NOISE_STREAM, None);
    img
}

pub fn ground_truth_mask(scene: &CrackScene, mm_per_px: f64, include_painted: bool) -> Mask {
    let meta = overhead_meta(scene, mm_per_px, scene.top_z());
    per_pixel(meta, |x, y| {
        scene
            .cracks
            .iter()
            .any(|c| (include_painted || c.is_real()) && c.covers_xy(x, y))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_scene(kind: CrackKind, width: f64) -> CrackScene {
        let mut s = CrackScene::blank(40.0, 30.0, 10.0, 3);
        s.cracks.push(CrackPath {
            polyline: vec![Point3mm::world(5.0, 12.3, 10.0), Point3mm::world(33.0, 17.9, 10.0)],
            width_mm: width,
            kind,
        });
        s
    }

    #[test]
    fn generation_is_deterministic() {
        let p = SceneParams::default();
        let a = generate_random_scene(7, &p).unwrap();
        let b = generate_random_scene(7, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = generate_random_scene(8, &p).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generation_honours_counts() {
        let p = SceneParams {
            n_real: 0,
            n_fake: 0,
            ..SceneParams::default()
        };
        assert!(generate_random_scene(1, &p).unwrap().cracks.is_empty());
        let p = SceneParams {
            n_real: 3,
            n_fake: 2,
            separation_mm: 5.0,
            ..SceneParams::default()
        };
        let s = generate_random_scene(11, &p).unwrap();
        assert_eq!(s.cracks.iter().filter(|c| c.is_real()).count(), 3);
        assert_eq!(s.cracks.iter().filter(|c| !c.is_real()).count(), 2);
        s.validate().unwrap();
        for c in &s.cracks {
            let (lo, hi) = (p.length_range_mm[0], p.length_range_mm[1]);
            assert!(c.length_mm() >= lo - 1e-9 && c.length_mm() <= hi + 1e-9);
        }
    }

    #[test]
    fn impossible_placement_errors() {
        let p = SceneParams {
            n_real: 40,
            separation_mm: 30.0,
            ..SceneParams::default()
        };
        assert!(matches!(generate_random_scene(1, &p), Err(Error::SceneGeneration(_))));
    }

    #[test]
    fn blank_renders_are_uniform() {
        let s = CrackScene::blank(20.0, 10.0, 4.0, 0);
        let top = render_top_view(&s, &RenderOptions::noiseless(0.5));
        assert_eq!((top.width(), top.height()), (40, 20));
        assert!(top.data().iter().all(|&v| v == s.background_albedo));
        let depth = render_depth(&s, &RenderOptions::noiseless(0.5));
        assert!(depth.data().iter().all(|&v| v == 4.0));
        assert_eq!(ground_truth_mask(&s, 0.5, true).count(), 0);
    }

    #[test]
    fn top_view_matches_distance_oracle() {
        let s = straight_scene(CrackKind::Real { depth_mm: 2.0 }, 1.7);
        let img = render_top_view(&s, &RenderOptions::noiseless(0.5));
        let (a, b) = ((5.0, 12.3), (33.0, 17.9));
        let mut dark = 0;
        for row in 0..img.height() {
            for col in 0..img.width() {
                let x = 0.25 + col as f64 * 0.5;
                let y = 0.25 + row as f64 * 0.5;
                // Brute force: direct projection onto the one segment.
                let (dx, dy) = (b.0 - a.0, b.1 - a.1);
                let t = (((x - a.0) * dx + (y - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
                let d = ((x - a.0 - t * dx).powi(2) + (y - a.1 - t * dy).powi(2)).sqrt();
                let expect = if d <= 0.85 { s.crack_albedo } else { s.background_albedo };
                assert_eq!(img.get(row, col), expect, "pixel ({row},{col})");
                dark += (d <= 0.85) as usize;
            }
        }
        assert!(dark > 50);
    }

    #[test]
    fn painted_and_real_look_identical() {
        let real = straight_scene(CrackKind::Real { depth_mm: 2.0 }, 1.2);
        let painted = straight_scene(CrackKind::Painted, 1.2);
        let o = RenderOptions::noiseless(0.5);
        assert_eq!(render_top_view(&real, &o), render_top_view(&painted, &o));
    }

    #[test]
    fn depth_reflects_grooves_only() {
        let o = RenderOptions::noiseless(0.5);
        let painted = straight_scene(CrackKind::Painted, 1.2);
        assert!(render_depth(&painted, &o).data().iter().all(|&v| v == 10.0));
        let real = straight_scene(CrackKind::Real { depth_mm: 2.0 }, 1.2);
        let d = render_depth(&real, &o);
        let min = d.data().iter().cloned().fold(f32::INFINITY, f32::min);
        assert_eq!(min, 8.0);
    }

    #[test]
    fn ground_truth_mask_rules() {
        let painted = straight_scene(CrackKind::Painted, 1.2);
        assert_eq!(ground_truth_mask(&painted, 0.5, false).count(), 0);
        assert!(ground_truth_mask(&painted, 0.5, true).count() > 0);
        let real = straight_scene(CrackKind::Real { depth_mm: 2.0 }, 1.2);
        let mask = ground_truth_mask(&real, 0.5, false);
        let top = render_top_view(&real, &RenderOptions::noiseless(0.5));
        let depth = render_depth(&real, &RenderOptions::noiseless(0.5));
        for p in mask.pixels() {
            let dark = top.get_pixel(p) == real.crack_albedo;
            assert_eq!(mask.get_pixel(p), dark);
            if mask.get_pixel(p) {
                assert!(depth.get_pixel(p) < real.top_z() as f32);
            }
        }
    }

    #[test]
    fn noisy_renders_are_reproducible() {
        let s = generate_random_scene(5, &SceneParams::default()).unwrap();
        let o = RenderOptions {
            intensity_noise: 0.05,
            ..RenderOptions::default()
        };
        assert_eq!(render_top_view(&s, &o), render_top_view(&s, &o));
        assert_eq!(render_depth(&s, &o), render_depth(&s, &o));
        assert_ne!(render_depth(&s, &o), render_depth(&s, &RenderOptions::noiseless(0.5)));
    }

    #[test]
    fn boundary_lies_at_half_width() {
        let s = generate_random_scene(21, &SceneParams::default()).unwrap();
        let real: Vec<_> = s.real_cracks().collect();
        let curves = s.boundary_polylines(0.05);
        assert!(!curves.is_empty());
        for curve in &curves {
            for p in curve {
                let d = real
                    .iter()
                    .map(|c| c.distance_xy(p.x, p.y) - c.half_width())
                    .fold(f64::INFINITY, f64::min);
                assert!(d.abs() < 1e-6, "boundary sample off by {d}");
            }
        }
    }

    #[test]
    fn scene_json_round_trip() {
        let s = generate_random_scene(2, &SceneParams::default()).unwrap();
        let back: CrackScene = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn validation_catches_bad_cracks() {
        let mut s = straight_scene(CrackKind::Real { depth_mm: 0.0 }, 1.0);
        assert!(s.validate().is_err());
        s.cracks[0].kind = CrackKind::Real { depth_mm: 1.0 };
        s.validate().unwrap();
        s.cracks[0].polyline[1].x = 100.0;
        assert!(s.validate().is_err());
    }
}
