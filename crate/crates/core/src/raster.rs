//! Row-major rasters with a world placement, plus PGM/PBM I/O with a JSON
//! sidecar (`<file>.json`) carrying scale, origin and value range.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3mm;

/// Integer pixel index. Orders lexicographically by `(row, col)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn to_px(self) -> crate::geometry::Point2Px {
        crate::geometry::Point2Px::new(self.col as f64, self.row as f64)
    }
}

/// 8-neighbour offsets as `(drow, dcol)` in lexicographic order.
pub const NEIGHBORS_8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterMeta {
    pub width: usize,
    pub height: usize,
    /// Millimetres per pixel.
    pub scale_mm_per_px: f64,
    /// Location of the centre of pixel (0, 0).
    pub origin: Point3mm,
}

impl RasterMeta {
    pub fn new(width: usize, height: usize, scale_mm_per_px: f64, origin: Point3mm) -> Self {
        Self {
            width,
            height,
            scale_mm_per_px,
            origin,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Planar position of continuous pixel coordinates `(u, v)`.
    pub fn pixel_xy(&self, u: f64, v: f64) -> (f64, f64) {
        (
            self.origin.x + u * self.scale_mm_per_px,
            self.origin.y + v * self.scale_mm_per_px,
        )
    }

    /// Continuous pixel coordinates of a planar position.
    pub fn xy_pixel(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin.x) / self.scale_mm_per_px,
            (y - self.origin.y) / self.scale_mm_per_px,
        )
    }

    pub fn same_grid(&self, other: &RasterMeta) -> bool {
        self.width == other.width && self.height == other.height
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Raster<T> {
    meta: RasterMeta,
    data: Vec<T>,
}

/// Grayscale raster (intensity in [0, 1], or heights in mm).
pub type GrayImage = Raster<f32>;
/// Binary raster; `true` marks crack pixels.
pub type Mask = Raster<bool>;

impl<T: Copy> Raster<T> {
    pub fn filled(meta: RasterMeta, value: T) -> Self {
        let data = vec![value; meta.len()];
        Self { meta, data }
    }

    pub fn from_vec(meta: RasterMeta, data: Vec<T>) -> Result<Self> {
        if data.len() != meta.len() {
            return Err(Error::config(
                "raster",
                format!("buffer length {} != {}x{}", data.len(), meta.width, meta.height),
            ));
        }
        if !(meta.scale_mm_per_px > 0.0) {
            return Err(Error::config("raster.scale_mm_per_px", "must be > 0"));
        }
        Ok(Self { meta, data })
    }

    pub fn meta(&self) -> &RasterMeta {
        &self.meta
    }

    pub fn width(&self) -> usize {
        self.meta.width
    }

    pub fn height(&self) -> usize {
        self.meta.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.meta.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let w = self.meta.width;
        self.data[row * w + col] = value;
    }

    #[inline]
    pub fn get_pixel(&self, p: Pixel) -> T {
        self.get(p.row, p.col)
    }

    /// Value at a signed offset, `None` outside the raster.
    #[inline]
    pub fn get_signed(&self, row: isize, col: isize) -> Option<T> {
        if row < 0 || col < 0 || row as usize >= self.meta.height || col as usize >= self.meta.width {
            None
        } else {
            Some(self.get(row as usize, col as usize))
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Raster<U> {
        Raster {
            meta: self.meta.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.meta.width;
        (0..self.data.len()).map(move |i| Pixel::new(i / w, i % w))
    }
}

impl Mask {
    pub fn empty(meta: RasterMeta) -> Self {
        Self::filled(meta, false)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Set pixels in raster (lexicographic) order.
    pub fn set_pixels(&self) -> Vec<Pixel> {
        let w = self.meta.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| Pixel::new(i / w, i % w))
            .collect()
    }

    /// Number of set 8-neighbours.
    pub fn neighbor_count(&self, p: Pixel) -> usize {
        NEIGHBORS_8
            .iter()
            .filter(|(dr, dc)| {
                self.get_signed(p.row as isize + dr, p.col as isize + dc)
                    .unwrap_or(false)
            })
            .count()
    }

    /// Set 8-neighbours in lexicographic order.
    pub fn neighbors(&self, p: Pixel) -> Vec<Pixel> {
        NEIGHBORS_8
            .iter()
            .filter_map(|(dr, dc)| {
                let r = p.row as isize + dr;
                let c = p.col as isize + dc;
                match self.get_signed(r, c) {
                    Some(true) => Some(Pixel::new(r as usize, c as usize)),
                    _ => None,
                }
            })
            .collect()
    }

    /// Number of 8-connected components.
    pub fn component_count(&self) -> usize {
        label_components(self).1
    }
}

/// 8-connected component labels (`usize::MAX` for background) and count.
pub fn label_components(mask: &Mask) -> (Vec<usize>, usize) {
    let w = mask.width();
    let mut labels = vec![usize::MAX; mask.data.len()];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..mask.data.len() {
        if !mask.data[start] || labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let p = Pixel::new(i / w, i % w);
            for q in mask.neighbors(p) {
                let j = q.row * w + q.col;
                if labels[j] == usize::MAX {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    (labels, next)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channels {
    Grayscale,
    Binary,
}

/// JSON document stored next to every raster file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub channels: Channels,
    #[serde(flatten)]
    pub meta: RasterMeta,
    /// Value mapped to 0 and to maxval for grayscale rasters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_range: Option<[f64; 2]>,
    /// Free-form annotations (e.g. tactile frame pose).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let json = serde_json::to_string_pretty(sidecar)?;
    fs::write(sidecar_path(path), json + "\n")?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let sc = sidecar_path(path);
    if !sc.exists() {
        return Err(Error::MissingSidecar(sc));
    }
    Ok(serde_json::from_str(&fs::read_to_string(sc)?)?)
}

/// Encodes a binary mask as P5 with maxval 255 (crack = 255).
pub fn encode_mask_pgm(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.data().iter().map(|&b| if b { 255u8 } else { 0u8 }));
    out
}

/// Encodes a grayscale raster as 16-bit P5, linearly mapping `range` onto
/// `0..=65535`.
pub fn encode_gray_pgm(image: &GrayImage, range: [f64; 2]) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", image.width(), image.height()).into_bytes();
    let span = range[1] - range[0];
    for &v in image.data() {
        let t = ((v as f64 - range[0]) / span).clamp(0.0, 1.0);
        let q = (t * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

pub fn gray_value_range(image: &GrayImage) -> [f64; 2] {
    let (lo, hi) = image
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v as f64), hi.max(v as f64))
        });
    if !lo.is_finite() {
        return [0.0, 1.0];
    }
    if hi > lo {
        [lo, hi]
    } else {
        [lo, lo + 1.0]
    }
}

pub fn save_mask(mask: &Mask, path: &Path, extra: Option<serde_json::Value>) -> Result<()> {
    fs::write(path, encode_mask_pgm(mask))?;
    write_sidecar(
        path,
        &Sidecar {
            channels: Channels::Binary,
            meta: mask.meta().clone(),
            value_range: None,
            extra,
        },
    )
}

pub fn save_gray(image: &GrayImage, path: &Path) -> Result<()> {
    let range = gray_value_range(image);
    fs::write(path, encode_gray_pgm(image, range))?;
    write_sidecar(
        path,
        &Sidecar {
            channels: Channels::Grayscale,
            meta: image.meta().clone(),
            value_range: Some(range),
            extra: None,
        },
    )
}

/// Loads a mask from P5 (nonzero = crack), P2 (nonzero = crack) or P1
/// (1 = crack). The sidecar is required.
pub fn load_mask(path: &Path) -> Result<(Mask, Sidecar)> {
    let sidecar = read_sidecar(path)?;
    let bytes = fs::read(path)?;
    let decoded = decode_pnm(&bytes)?;
    check_dims(&decoded, &sidecar)?;
    let data = decoded.samples.iter().map(|&s| s != 0).collect();
    Ok((Raster::from_vec(sidecar.meta.clone(), data)?, sidecar))
}

pub fn load_gray(path: &Path) -> Result<(GrayImage, Sidecar)> {
    let sidecar = read_sidecar(path)?;
    let bytes = fs::read(path)?;
    let decoded = decode_pnm(&bytes)?;
    check_dims(&decoded, &sidecar)?;
    let [lo, hi] = sidecar.value_range.unwrap_or([0.0, 1.0]);
    let maxval = decoded.maxval as f64;
    let data = decoded
        .samples
        .iter()
        .map(|&s| (lo + (s as f64 / maxval) * (hi - lo)) as f32)
        .collect();
    Ok((Raster::from_vec(sidecar.meta.clone(), data)?, sidecar))
}

fn check_dims(decoded: &Decoded, sidecar: &Sidecar) -> Result<()> {
    if decoded.width != sidecar.meta.width || decoded.height != sidecar.meta.height {
        return Err(Error::Parse {
            offset: decoded.dims_offset,
            message: format!(
                "header says {}x{} but sidecar says {}x{}",
                decoded.width, decoded.height, sidecar.meta.width, sidecar.meta.height
            ),
        });
    }
    Ok(())
}

struct Decoded {
    width: usize,
    height: usize,
    maxval: u32,
    samples: Vec<u32>,
    dims_offset: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(if self.pos >= self.bytes.len() {
                format!("unexpected end of file reading {what}")
            } else {
                format!("expected {what}")
            }));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| Error::Parse {
                offset: start,
                message: format!("{what} out of range"),
            })
    }

    /// Single 0/1 digit, as used by P1 bodies (digits need no separator).
    fn bit(&mut self) -> Result<u32> {
        self.skip_space();
        match self.bytes.get(self.pos) {
            Some(b'0') => {
                self.pos += 1;
                Ok(0)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(1)
            }
            Some(_) => Err(self.err("expected 0 or 1")),
            None => Err(self.err("unexpected end of file in pixel data")),
        }
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<Decoded> {
    let mut cur = Cursor { bytes, pos: 0 };
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(cur.err("missing P1/P2/P5 magic"));
    }
    let kind = bytes[1];
    if !matches!(kind, b'1' | b'2' | b'5') {
        return Err(Error::Parse {
            offset: 1,
            message: format!("unsupported format P{}", kind as char),
        });
    }
    cur.pos = 2;
    cur.skip_space();
    let dims_offset = cur.pos;
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = if kind == b'1' { 1 } else { cur.number("maxval")? };
    if maxval == 0 || maxval > 65535 {
        return Err(cur.err(format!("maxval {maxval} outside 1..=65535")));
    }
    let n = width * height;
    let mut samples = Vec::with_capacity(n);
    match kind {
        b'5' => {
            // Exactly one whitespace byte separates the header from the body.
            if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
                return Err(cur.err("expected whitespace after maxval"));
            }
            cur.pos += 1;
            let bps = if maxval < 256 { 1 } else { 2 };
            let need = n * bps;
            let avail = bytes.len() - cur.pos;
            if avail < need {
                return Err(Error::Parse {
                    offset: bytes.len(),
                    message: format!("truncated pixel data: need {need} bytes, found {avail}"),
                });
            }
            let body = &bytes[cur.pos..cur.pos + need];
            if bps == 1 {
                samples.extend(body.iter().map(|&b| b as u32));
            } else {
                samples.extend(body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u32));
            }
        }
        b'2' => {
            for _ in 0..n {
                samples.push(cur.number("pixel value")?);
            }
        }
        _ => {
            for _ in 0..n {
                samples.push(cur.bit()?);
            }
        }
    }
    if let Some((i, s)) = samples.iter().enumerate().find(|(_, &s)| s > maxval) {
        return Err(cur.err(format!("sample {i} value {s} exceeds maxval {maxval}")));
    }
    Ok(Decoded {
        width,
        height,
        maxval,
        samples,
        dims_offset,
    })
}
