//! Crack segmentation of overhead intensity images.
//!
//! Any mask producer can drive the rest of the pipeline through [`Segmenter`]
//! or by writing a mask file that [`load_mask`] ingests. The shipped baseline
//! thresholds dark pixels and cleans the result with square-element opening
//! and closing.
//!
//! Note for learned segmenters: crack pixels are a small minority of an
//! overhead image, so class-weighted losses (crack pixels weighted ~10x) and
//! full-resolution inputs are what keep a network from predicting all
//! background.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{self, GrayImage, Mask, Sidecar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterConfig {
    /// Pixels darker than this are crack candidates.
    pub threshold: f32,
    pub open_radius: usize,
    pub close_radius: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            open_radius: 0,
            close_radius: 0,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config("segmenter.threshold", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

pub trait Segmenter {
    fn segment(&self, image: &GrayImage) -> Mask;
}

#[derive(Clone, Debug, Default)]
pub struct BaselineSegmenter {
    pub config: SegmenterConfig,
}

impl Segmenter for BaselineSegmenter {
    fn segment(&self, image: &GrayImage) -> Mask {
        segment_baseline(image, &self.config)
    }
}

pub fn segment_baseline(image: &GrayImage, cfg: &SegmenterConfig) -> Mask {
    let mask = image.map(|v| v < cfg.threshold);
    let opened = open(&mask, cfg.open_radius);
    close(&opened, cfg.close_radius)
}

/// Square-window min (erode) or max (dilate) filter over in-bounds pixels.
fn window_filter(mask: &Mask, radius: usize, dilate: bool) -> Mask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    // Separable: rows, then columns.
    let mut tmp = mask.clone();
    for row in 0..h {
        for col in 0..w {
            let lo = col.saturating_sub(radius);
            let hi = (col + radius).min(w - 1);
            let mut acc = !dilate;
            for c in lo..=hi {
                let v = mask.get(row, c);
                if dilate {
                    acc |= v;
                } else {
                    acc &= v;
                }
            }
            tmp.set(row, col, acc);
        }
    }
    let mut out = tmp.clone();
    for row in 0..h {
        let lo = row.saturating_sub(radius);
        let hi = (row + radius).min(h - 1);
        for col in 0..w {
            let mut acc = !dilate;
            for r in lo..=hi {
                let v = tmp.get(r, col);
                if dilate {
                    acc |= v;
                } else {
                    acc &= v;
                }
            }
            out.set(row, col, acc);
        }
    }
    out
}

pub fn erode(mask: &Mask, radius: usize) -> Mask {
    window_filter(mask, radius, false)
}

pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    window_filter(mask, radius, true)
}

pub fn open(mask: &Mask, radius: usize) -> Mask {
    dilate(&erode(mask, radius), radius)
}

pub fn close(mask: &Mask, radius: usize) -> Mask {
    erode(&dilate(mask, radius), radius)
}

pub fn save_mask(mask: &Mask, path: &Path) -> Result<()> {
    raster::save_mask(mask, path, None)
}

pub fn load_mask(path: &Path) -> Result<Mask> {
    let (mask, _): (Mask, Sidecar) = raster::load_mask(path)?;
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3mm;
    use crate::raster::RasterMeta;
    use crate::scene::{ground_truth_mask, render_top_view, CrackKind, CrackPath, CrackScene, RenderOptions};

    fn meta(w: usize, h: usize) -> RasterMeta {
        RasterMeta::new(w, h, 1.0, Point3mm::default())
    }

    #[test]
    fn bright_image_gives_empty_mask() {
        let img = GrayImage::filled(meta(10, 8), 0.9);
        assert_eq!(segment_baseline(&img, &SegmenterConfig::default()).count(), 0);
    }

    #[test]
    fn noiseless_render_matches_ground_truth() {
        let mut s = CrackScene::blank(30.0, 20.0, 5.0, 1);
        s.cracks.push(CrackPath {
            polyline: vec![
                Point3mm::world(3.0, 4.0, 5.0),
                Point3mm::world(15.0, 9.0, 5.0),
                Point3mm::world(26.0, 15.5, 5.0),
            ],
            width_mm: 1.4,
            kind: CrackKind::Real { depth_mm: 1.0 },
        });
        let img = render_top_view(&s, &RenderOptions::noiseless(0.5));
        let mask = segment_baseline(&img, &SegmenterConfig::default());
        assert_eq!(mask, ground_truth_mask(&s, 0.5, true));
    }

    #[test]
    fn opening_removes_isolated_pixel() {
        let mut img = GrayImage::filled(meta(9, 9), 0.9);
        img.set(4, 4, 0.1);
        let cfg = SegmenterConfig {
            open_radius: 1,
            ..SegmenterConfig::default()
        };
        assert_eq!(segment_baseline(&img, &cfg).count(), 0);
        assert_eq!(segment_baseline(&img, &SegmenterConfig::default()).count(), 1);
    }

    #[test]
    fn closing_fills_single_gap() {
        let mut m = Mask::empty(meta(9, 5));
        for c in 0..9 {
            if c != 4 {
                m.set(2, c, true);
            }
        }
        let closed = close(&m, 1);
        assert!(closed.get(2, 4));
    }

    #[test]
    fn binary_input_is_a_fixed_point() {
        let mut m = Mask::empty(meta(12, 7));
        for (r, c) in [(0, 0), (3, 4), (3, 5), (6, 11), (2, 2)] {
            m.set(r, c, true);
        }
        let img = m.map(|b| if b { 0.0 } else { 1.0 });
        for t in [0.01, 0.5, 0.99] {
            let cfg = SegmenterConfig {
                threshold: t,
                ..SegmenterConfig::default()
            };
            assert_eq!(segment_baseline(&img, &cfg), m);
        }
    }

    #[test]
    fn threshold_out_of_range_is_rejected() {
        let cfg = SegmenterConfig {
            threshold: 1.5,
            ..SegmenterConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mask_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vision.pgm");
        let mut m = Mask::empty(meta(6, 4));
        m.set(1, 2, true);
        save_mask(&m, &path).unwrap();
        assert_eq!(load_mask(&path).unwrap(), m);
    }
}
