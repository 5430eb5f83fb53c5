use crackprobe::geometry::Point3mm;
use crackprobe::raster::{Mask, RasterMeta};
use crackprobe::skeleton::{extract_graph, thin, zhang_suen};
use proptest::prelude::*;

fn meta(w: usize, h: usize) -> RasterMeta {
    RasterMeta::new(w, h, 1.0, Point3mm::default())
}

/// Textbook parallel Zhang–Suen on a row-major grid, no extra guards.
fn reference_zhang_suen(mut img: Vec<Vec<u8>>) -> Vec<Vec<u8>> {
    let h = img.len() as isize;
    let w = img[0].len() as isize;
    let at = |img: &Vec<Vec<u8>>, r: isize, c: isize| -> u8 {
        if r < 0 || c < 0 || r >= h || c >= w {
            0
        } else {
            img[r as usize][c as usize]
        }
    };
    loop {
        let mut changed = false;
        for step in 0..2 {
            let mut kill = Vec::new();
            for r in 0..h {
                for c in 0..w {
                    if at(&img, r, c) == 0 {
                        continue;
                    }
                    let p = [
                        at(&img, r - 1, c),
                        at(&img, r - 1, c + 1),
                        at(&img, r, c + 1),
                        at(&img, r + 1, c + 1),
                        at(&img, r + 1, c),
                        at(&img, r + 1, c - 1),
                        at(&img, r, c - 1),
                        at(&img, r - 1, c - 1),
                    ];
                    let b: u8 = p.iter().sum();
                    let a = (0..8).filter(|&i| p[i] == 0 && p[(i + 1) % 8] == 1).count();
                    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
                    let cond = if step == 0 {
                        p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                    } else {
                        p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                    };
                    if (2..=6).contains(&b) && a == 1 && cond {
                        kill.push((r as usize, c as usize));
                    }
                }
            }
            changed |= !kill.is_empty();
            for (r, c) in kill {
                img[r][c] = 0;
            }
        }
        if !changed {
            return img;
        }
    }
}

fn to_grid(m: &Mask) -> Vec<Vec<u8>> {
    (0..m.height())
        .map(|r| (0..m.width()).map(|c| m.get(r, c) as u8).collect())
        .collect()
}

fn rectangle(w: usize, h: usize, rw: usize, rh: usize) -> Mask {
    let mut m = Mask::empty(meta(w, h));
    let (r0, c0) = ((h - rh) / 2, (w - rw) / 2);
    for r in r0..r0 + rh {
        for c in c0..c0 + rw {
            m.set(r, c, true);
        }
    }
    m
}

fn cross(size: usize, arm: usize, thick: usize) -> Mask {
    let mut m = Mask::empty(meta(size, size));
    let mid = size / 2;
    let lo = mid - thick / 2;
    for r in 0..size {
        for c in 0..size {
            let in_h = (lo..lo + thick).contains(&r) && c.abs_diff(mid) <= arm;
            let in_v = (lo..lo + thick).contains(&c) && r.abs_diff(mid) <= arm;
            if in_h || in_v {
                m.set(r, c, true);
            }
        }
    }
    m
}

fn oracle_shapes() -> Vec<Mask> {
    let mut shapes = Vec::new();
    for (rw, rh) in [
        (9, 3),
        (15, 5),
        (20, 7),
        (11, 11),
        (30, 4),
        (5, 17),
        (13, 6),
        (25, 9),
        (8, 8),
        (16, 3),
    ] {
        shapes.push(rectangle(rw + 4, rh + 4, rw, rh));
    }
    for (size, arm, thick) in [
        (21, 8, 3),
        (25, 10, 5),
        (31, 12, 4),
        (19, 7, 3),
        (27, 11, 6),
        (23, 9, 7),
        (33, 14, 3),
        (29, 12, 5),
        (17, 6, 4),
        (35, 15, 6),
    ] {
        shapes.push(cross(size, arm, thick));
    }
    shapes
}

#[test]
fn guarded_thinning_agrees_with_reference_rules() {
    for (i, m) in oracle_shapes().iter().enumerate() {
        let reference = reference_zhang_suen(to_grid(m));
        assert_eq!(to_grid(&zhang_suen(m)), reference, "shape {i}");
    }
}

#[test]
fn thin_agrees_with_reference_on_shapes() {
    for (i, m) in oracle_shapes().iter().enumerate() {
        let reference = reference_zhang_suen(to_grid(m));
        assert_eq!(to_grid(&thin(m)), reference, "shape {i}");
    }
}

fn blob(w: usize, h: usize, seed: u64) -> Mask {
    // A few random filled discs and bars.
    let mut state = seed | 1;
    let mut next = move |n: usize| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % n as u64) as usize
    };
    let mut m = Mask::empty(meta(w, h));
    for _ in 0..1 + next(4) {
        let (cr, cc, rad) = (next(h), next(w), 1 + next(5));
        for r in 0..h {
            for c in 0..w {
                let (dr, dc) = (r as isize - cr as isize, c as isize - cc as isize);
                if dr * dr + dc * dc <= (rad * rad) as isize {
                    m.set(r, c, true);
                }
            }
        }
    }
    for _ in 0..next(3) {
        let (r0, c0, len, thick) = (next(h), next(w), 3 + next(15), 1 + next(4));
        for r in r0..(r0 + thick).min(h) {
            for c in c0..(c0 + len).min(w) {
                m.set(r, c, true);
            }
        }
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thinning_invariants_on_blobs(w in 8usize..40, h in 8usize..40, seed in any::<u64>()) {
        let m = blob(w, h, seed);
        let t = thin(&m);
        for p in t.set_pixels() {
            prop_assert!(m.get_pixel(p));
        }
        prop_assert_eq!(thin(&t), t.clone());
        prop_assert_eq!(t.component_count(), m.component_count());
        prop_assert!(extract_graph(&t).is_ok());
    }
}

#[test]
fn one_pixel_line_is_unchanged() {
    let mut m = Mask::empty(meta(20, 5));
    for c in 2..18 {
        m.set(2, c, true);
    }
    assert_eq!(thin(&m), m);
}
