use crackprobe::geometry::Point3mm;
use crackprobe::planner::{assign_yaw, plan_edge, select_contacts, PlannerConfig};
use crackprobe::raster::{GrayImage, Pixel, RasterMeta};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force reading of the contact rule: from the current contact, take
/// the farthest later point strictly closer than `d` (latest on ties), or
/// the final point when nothing qualifies.
fn greedy_oracle(pts: &[Point3mm], d: f64) -> Vec<usize> {
    let dist = |a: &Point3mm, b: &Point3mm| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt();
    let mut chosen = vec![0usize];
    let last = pts.len() - 1;
    while *chosen.last().unwrap() != last {
        let cur = *chosen.last().unwrap();
        let candidates: Vec<usize> = (cur + 1..=last).filter(|&k| dist(&pts[cur], &pts[k]) < d).collect();
        let next = candidates
            .iter()
            .copied()
            .max_by(|&a, &b| {
                dist(&pts[cur], &pts[a])
                    .partial_cmp(&dist(&pts[cur], &pts[b]))
                    .unwrap()
                    .then(a.cmp(&b))
            })
            .unwrap_or(last);
        chosen.push(next);
    }
    chosen
}

fn random_walk(rng: &mut ChaCha8Rng) -> Vec<Point3mm> {
    let n = rng.random_range(1..200);
    let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (mut x, mut y) = (0.0, 0.0);
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        pts.push(Point3mm::world(x, y, rng.random_range(-0.5..0.5)));
        heading += rng.random_range(-0.6..0.6);
        let step = rng.random_range(0.2..1.5);
        x += step * heading.cos();
        y += step * heading.sin();
    }
    pts
}

#[test]
fn greedy_matches_oracle_on_random_polylines() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let pts = random_walk(&mut rng);
        let d = rng.random_range(2.0..15.0);
        assert_eq!(select_contacts(&pts, d), greedy_oracle(&pts, d));
    }
}

fn pixel_walk(len: usize, seed: u64) -> Vec<Pixel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut r, mut c) = (100i64, 100i64);
    let mut out = vec![Pixel::new(r as usize, c as usize)];
    for _ in 1..len {
        let (dr, dc) = [(0, 1), (1, 1), (-1, 1), (1, 0)][rng.random_range(0..4)];
        r = (r + dr).clamp(0, 199);
        c = (c + dc).clamp(0, 399);
        out.push(Pixel::new(r as usize, c as usize));
    }
    out
}

fn depth() -> GrayImage {
    GrayImage::filled(RasterMeta::new(400, 200, 0.5, Point3mm::world(0.25, 0.25, 0.0)), 10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn consecutive_contacts_respect_step_unless_forced(len in 1usize..150, seed in any::<u64>(), d in 1.0f64..15.0) {
        let edge = pixel_walk(len, seed);
        let contacts = plan_edge(&edge, &depth(), &PlannerConfig { step_d_mm: d }).unwrap();
        prop_assert!(!contacts.is_empty());
        for w in contacts.windows(2) {
            // Unit-ish pixel steps are always below d >= 1 mm, so no forced jumps.
            prop_assert!(w[0].distance(&w[1]) < d);
        }
    }

    #[test]
    fn every_edge_pixel_is_near_a_contact(len in 1usize..150, seed in any::<u64>(), d in 5.0f64..15.0) {
        let edge = pixel_walk(len, seed);
        let dm = depth();
        let contacts = plan_edge(&edge, &dm, &PlannerConfig { step_d_mm: d }).unwrap();
        for p in &edge {
            let w = crackprobe::planner::pixel_to_world(p.to_px(), &dm).unwrap();
            prop_assert!(contacts.iter().any(|c| c.distance(&w) < d + 1e-9));
        }
    }

    #[test]
    fn smaller_step_never_needs_fewer_contacts(len in 1usize..150, seed in any::<u64>(), d in 1.5f64..15.0) {
        let edge = pixel_walk(len, seed);
        let dm = depth();
        let big = plan_edge(&edge, &dm, &PlannerConfig { step_d_mm: d }).unwrap().len();
        let small = plan_edge(&edge, &dm, &PlannerConfig { step_d_mm: d * 0.5 }).unwrap().len();
        prop_assert!(small >= big);
    }

    #[test]
    fn yaw_points_at_nearest_other_contact(n in 2usize..20, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point3mm> = (0..n)
            .map(|_| Point3mm::world(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0), 0.0))
            .collect();
        let yaws = assign_yaw(&pts);
        for (i, &yaw) in yaws.iter().enumerate() {
            prop_assert!(yaw > -std::f64::consts::PI && yaw <= std::f64::consts::PI);
            let nearest = pts.iter().enumerate().filter(|&(j, _)| j != i)
                .map(|(_, p)| pts[i].planar_distance(p)).fold(f64::INFINITY, f64::min);
            let (dx, dy) = (yaw.cos(), yaw.sin());
            prop_assert!(pts.iter().enumerate().any(|(j, p)| j != i
                && (pts[i].planar_distance(p) - nearest).abs() < 1e-9
                && ((p.x - pts[i].x) * dy - (p.y - pts[i].y) * dx).abs() < 1e-6));
        }
    }
}
