//! Deterministic image augmentation.
//!
//! Color and noise operations work on channel values normalized to `[0, 1]`,
//! clamp to `[0, 1]` and re-quantize with round-half-up. Geometric operations
//! only permute pixels.
//!
//! Plan sizes per source image: none 1, color 8, transform 6, noise 2,
//! combined 15. The combined plan carries two independent gaussian-noise
//! draws; with a single draw it would hold 14 variants.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{ImageRecord, Lineage, Split};
use crate::seed::{derive_seed, rng};

/// 8-bit RGB image, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Image({}x{})", self.width, self.height)
    }
}

impl Image {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image dimensions must be positive, got {width}x{height}")));
        }
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::Dimension {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Interleaved RGB bytes.
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, row: u32, col: u32) -> [u8; 3] {
        let i = (row as usize * self.width as usize + col as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Binary PPM (P6, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Parse {
            line: 1,
            message: format!("PPM: {m}"),
        };
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            // skip whitespace and comments
            while pos < bytes.len() {
                if bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                } else if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    break;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
        }
        if fields[0] != "P6" {
            return Err(bad("only binary P6 is supported"));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| bad("bad header number"));
        let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval != 255 {
            return Err(bad("maxval must be 255"));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let len = w as usize * h as usize * 3;
        let raster = bytes.get(pos..pos + len).ok_or_else(|| bad("truncated raster"))?;
        Self::new(w, h, raster.to_vec())
    }

    /// Reads PPM, PNG or JPEG, chosen by extension (PPM) or content.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if is_ppm(path) || bytes.starts_with(b"P6") {
            return Self::from_ppm(&bytes).map_err(|e| Error::Decode {
                path: path.into(),
                message: e.to_string(),
            });
        }
        let img = image::load_from_memory(&bytes).map_err(|e| Error::Decode {
            path: path.into(),
            message: e.to_string(),
        })?;
        let rgb = img.to_rgb8();
        Self::new(rgb.width(), rgb.height(), rgb.into_raw())
    }

    /// Writes PPM for `.ppm`, PNG otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        if is_ppm(path) {
            return fs::write(path, self.to_ppm()).map_err(|e| Error::io(path, e));
        }
        let buf = image::RgbImage::from_raw(self.width, self.height, self.data.clone())
            .expect("buffer length checked at construction");
        buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| Error::Decode {
            path: path.into(),
            message: e.to_string(),
        })
    }

    /// Bilinear resize, e.g. to the 224x224 network input.
    pub fn resize_bilinear(&self, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("resize target must be positive"));
        }
        let buf = image::RgbImage::from_raw(self.width, self.height, self.data.clone())
            .expect("buffer length checked at construction");
        let out = image::imageops::resize(&buf, width, height, image::imageops::FilterType::Triangle);
        Self::new(width, height, out.into_raw())
    }
}

fn is_ppm(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"))
}

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

pub fn rgb_to_hsv(rgb: [u8; 3]) -> Hsv {
    let [r, g, b] = rgb.map(|x| x as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    Hsv {
        h: if h >= 360.0 { h - 360.0 } else { h },
        s,
        v: max,
    }
}

/// Hexcone inverse of [`rgb_to_hsv`], returning normalized channels.
pub fn hsv_to_rgb(hsv: Hsv) -> [f64; 3] {
    let h = hsv.h.rem_euclid(360.0) / 60.0;
    let c = hsv.v * hsv.s;
    let x = c * (1.0 - (h.rem_euclid(2.0) - 1.0).abs());
    let m = hsv.v - c;
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r + m, g + m, b + m]
}

/// Clamp to `[0, 1]`, scale to 255 and round half up.
pub fn quantize(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipAxis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AugOp {
    Identity,
    /// Additive delta in normalized space.
    Brightness { delta: f64 },
    HueShift { degrees: f64 },
    /// Stretch about 0.5 by `1 + delta`.
    Contrast { delta: f64 },
    /// Per-channel offsets drawn once per image from `U[-amplitude, amplitude]`
    /// on the 0..255 scale.
    ChannelShift { amplitude: f64 },
    /// Per-value noise in normalized space.
    GaussianNoise { mean: f64, stddev: f64 },
    /// Clockwise quarter turns, 1 to 3.
    Rotate { quarter_turns: u8 },
    Flip { axis: FlipAxis },
}

impl AugOp {
    pub fn name(&self) -> &'static str {
        match self {
            AugOp::Identity => "identity",
            AugOp::Brightness { .. } => "brightness",
            AugOp::HueShift { .. } => "hue_shift",
            AugOp::Contrast { .. } => "contrast",
            AugOp::ChannelShift { .. } => "channel_shift",
            AugOp::GaussianNoise { .. } => "gaussian_noise",
            AugOp::Rotate { .. } => "rotate",
            AugOp::Flip { .. } => "flip",
        }
    }

    pub fn is_geometric(&self) -> bool {
        matches!(self, AugOp::Rotate { .. } | AugOp::Flip { .. })
    }

    fn validate(&self) -> Result<()> {
        let finite = |x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{} parameter must be finite", self.name())))
            }
        };
        match *self {
            AugOp::Identity | AugOp::Flip { .. } => Ok(()),
            AugOp::Brightness { delta } | AugOp::Contrast { delta } => finite(delta),
            AugOp::HueShift { degrees } => finite(degrees),
            AugOp::ChannelShift { amplitude } => {
                finite(amplitude)?;
                if amplitude < 0.0 {
                    return Err(Error::invalid("channel_shift amplitude must be non-negative"));
                }
                Ok(())
            }
            AugOp::GaussianNoise { mean, stddev } => {
                finite(mean)?;
                finite(stddev)?;
                if stddev < 0.0 {
                    return Err(Error::invalid("gaussian_noise stddev must be non-negative"));
                }
                Ok(())
            }
            AugOp::Rotate { quarter_turns } => {
                if (1..=3).contains(&quarter_turns) {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("rotate takes 1..=3 quarter turns, got {quarter_turns}")))
                }
            }
        }
    }
}

impl fmt::Display for AugOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            AugOp::Identity => write!(f, "identity"),
            AugOp::Brightness { delta } => write!(f, "brightness({delta:+})"),
            AugOp::HueShift { degrees } => write!(f, "hue_shift({degrees:+})"),
            AugOp::Contrast { delta } => write!(f, "contrast({delta:+})"),
            AugOp::ChannelShift { amplitude } => write!(f, "channel_shift({amplitude})"),
            AugOp::GaussianNoise { mean, stddev } => write!(f, "gaussian_noise({mean},{stddev})"),
            AugOp::Rotate { quarter_turns } => write!(f, "rotate({quarter_turns})"),
            AugOp::Flip { axis: FlipAxis::Horizontal } => write!(f, "flip(horizontal)"),
            AugOp::Flip { axis: FlipAxis::Vertical } => write!(f, "flip(vertical)"),
        }
    }
}

impl FromStr for AugOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(AugOp::Identity);
        }
        let bad = || Error::invalid(format!("unrecognized augmentation `{s}`"));
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let args: Vec<&str> = rest.strip_suffix(')').ok_or_else(bad)?.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<f64> { args.get(i).and_then(|a| a.parse().ok()).ok_or_else(bad) };
        let op = match (name, args.len()) {
            ("brightness", 1) => AugOp::Brightness { delta: num(0)? },
            ("hue_shift", 1) => AugOp::HueShift { degrees: num(0)? },
            ("contrast", 1) => AugOp::Contrast { delta: num(0)? },
            ("channel_shift", 1) => AugOp::ChannelShift { amplitude: num(0)? },
            ("gaussian_noise", 2) => AugOp::GaussianNoise {
                mean: num(0)?,
                stddev: num(1)?,
            },
            ("rotate", 1) => AugOp::Rotate {
                quarter_turns: args[0].parse().map_err(|_| bad())?,
            },
            ("flip", 1) => AugOp::Flip {
                axis: match args[0] {
                    "horizontal" => FlipAxis::Horizontal,
                    "vertical" => FlipAxis::Vertical,
                    _ => return Err(bad()),
                },
            },
            _ => return Err(bad()),
        };
        op.validate()?;
        Ok(op)
    }
}

/// The exact noise stream [`apply_aug_op`] draws for `gaussian_noise`: one value
/// per channel, pixels in row-major order.
pub fn gaussian_noise_stream(stream_seed: u64, mean: f64, stddev: f64) -> Result<impl Iterator<Item = f64>> {
    let normal = Normal::new(mean, stddev).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng(stream_seed);
    Ok(std::iter::repeat_with(move || normal.sample(&mut rng)))
}

/// Per-channel offsets (0..255 scale) used by `channel_shift`.
pub fn channel_shift_offsets(stream_seed: u64, amplitude: f64) -> [f64; 3] {
    let mut rng = rng(stream_seed);
    if amplitude == 0.0 {
        return [0.0; 3];
    }
    std::array::from_fn(|_| rng.random_range(-amplitude..=amplitude))
}

fn map_values(img: &Image, mut f: impl FnMut(usize, f64) -> f64) -> Image {
    let data = img
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| quantize(f(i % 3, v as f64 / 255.0)))
        .collect();
    Image { data, ..*img }
}

fn rotate_cw(img: &Image) -> Image {
    let (w, h) = (img.width as usize, img.height as usize);
    // (r, c) -> (c, h - 1 - r); the result is h wide and w tall
    let mut data = vec![0u8; img.data.len()];
    for r in 0..h {
        for c in 0..w {
            let src = (r * w + c) * 3;
            let dst = (c * h + (h - 1 - r)) * 3;
            data[dst..dst + 3].copy_from_slice(&img.data[src..src + 3]);
        }
    }
    Image {
        width: img.height,
        height: img.width,
        data,
    }
}

fn flip(img: &Image, axis: FlipAxis) -> Image {
    let (w, h) = (img.width as usize, img.height as usize);
    let mut data = vec![0u8; img.data.len()];
    for r in 0..h {
        for c in 0..w {
            let (sr, sc) = match axis {
                FlipAxis::Horizontal => (r, w - 1 - c),
                FlipAxis::Vertical => (h - 1 - r, c),
            };
            let src = (sr * w + sc) * 3;
            let dst = (r * w + c) * 3;
            data[dst..dst + 3].copy_from_slice(&img.data[src..src + 3]);
        }
    }
    Image { data, ..*img }
}

/// Applies one augmentation. The same `(img, op, stream_seed)` always gives
/// the same bytes.
pub fn apply_aug_op(img: &Image, op: &AugOp, stream_seed: u64) -> Result<Image> {
    op.validate()?;
    Ok(match *op {
        AugOp::Identity => img.clone(),
        AugOp::Brightness { delta } => map_values(img, |_, x| x + delta),
        AugOp::Contrast { delta } => map_values(img, |_, x| 0.5 + (1.0 + delta) * (x - 0.5)),
        AugOp::ChannelShift { amplitude } => {
            let offsets = channel_shift_offsets(stream_seed, amplitude);
            map_values(img, |c, x| x + offsets[c] / 255.0)
        }
        AugOp::GaussianNoise { mean, stddev } => {
            let mut noise = gaussian_noise_stream(stream_seed, mean, stddev)?;
            map_values(img, |_, x| x + noise.next().expect("endless stream"))
        }
        AugOp::HueShift { degrees } => {
            let mut data = Vec::with_capacity(img.data.len());
            for px in img.pixels() {
                let mut hsv = rgb_to_hsv(px);
                hsv.h = (hsv.h + degrees).rem_euclid(360.0);
                data.extend(hsv_to_rgb(hsv).map(quantize));
            }
            Image { data, ..*img }
        }
        AugOp::Rotate { quarter_turns } => {
            let mut out = rotate_cw(img);
            for _ in 1..quarter_turns {
                out = rotate_cw(&out);
            }
            out
        }
        AugOp::Flip { axis } => flip(img, axis),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentationMode {
    None,
    Color,
    Noise,
    Transform,
    Combined,
}

impl AugmentationMode {
    pub const ALL: [AugmentationMode; 5] = [
        AugmentationMode::None,
        AugmentationMode::Color,
        AugmentationMode::Noise,
        AugmentationMode::Transform,
        AugmentationMode::Combined,
    ];

    /// Images produced per source image, the source itself included.
    pub fn multiplier(self) -> usize {
        match self {
            AugmentationMode::None => 1,
            AugmentationMode::Color => 8,
            AugmentationMode::Noise => 2,
            AugmentationMode::Transform => 6,
            AugmentationMode::Combined => 15,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AugmentationMode::None => "none",
            AugmentationMode::Color => "color",
            AugmentationMode::Noise => "noise",
            AugmentationMode::Transform => "transform",
            AugmentationMode::Combined => "combined",
        }
    }
}

impl FromStr for AugmentationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown augmentation mode `{s}`")))
    }
}

impl fmt::Display for AugmentationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Knobs for plan generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugConfig {
    pub noise_mean: f64,
    pub noise_stddev: f64,
}

impl Default for AugConfig {
    fn default() -> Self {
        Self {
            noise_mean: 0.0,
            noise_stddev: 1.0,
        }
    }
}

fn color_ops() -> [AugOp; 7] {
    [
        AugOp::Brightness { delta: -0.75 },
        AugOp::Brightness { delta: 0.75 },
        AugOp::HueShift { degrees: -20.0 },
        AugOp::HueShift { degrees: 20.0 },
        AugOp::Contrast { delta: -0.25 },
        AugOp::Contrast { delta: 0.25 },
        AugOp::ChannelShift { amplitude: 75.0 },
    ]
}

fn transform_ops() -> [AugOp; 5] {
    [
        AugOp::Rotate { quarter_turns: 1 },
        AugOp::Rotate { quarter_turns: 2 },
        AugOp::Rotate { quarter_turns: 3 },
        AugOp::Flip { axis: FlipAxis::Horizontal },
        AugOp::Flip { axis: FlipAxis::Vertical },
    ]
}

/// Operations applied to every source image for `mode`, identity first.
pub fn mode_ops(mode: AugmentationMode, cfg: &AugConfig) -> Vec<AugOp> {
    let noise = AugOp::GaussianNoise {
        mean: cfg.noise_mean,
        stddev: cfg.noise_stddev,
    };
    let mut ops = vec![AugOp::Identity];
    match mode {
        AugmentationMode::None => {}
        AugmentationMode::Color => ops.extend(color_ops()),
        AugmentationMode::Transform => ops.extend(transform_ops()),
        AugmentationMode::Noise => ops.push(noise),
        AugmentationMode::Combined => {
            ops.extend(color_ops());
            ops.extend(transform_ops());
            // two independent draws: the stream seeds differ by op index
            ops.extend([noise, noise]);
        }
    }
    debug_assert_eq!(ops.len(), mode.multiplier());
    ops
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub source_id: String,
    pub op_index: usize,
    pub op: AugOp,
    pub stream_seed: u64,
}

impl PlanEntry {
    /// Id of the produced image: the source id for identity, otherwise
    /// `source@NN`.
    pub fn output_id(&self) -> String {
        derived_id(&self.source_id, self.op_index)
    }
}

pub fn derived_id(source_id: &str, op_index: usize) -> String {
    if op_index == 0 {
        source_id.to_string()
    } else {
        format!("{source_id}@{op_index:02}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AugPlan {
    pub entries: Vec<PlanEntry>,
}

impl AugPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// The plan entry for op `op_index` of one source.
pub fn plan_entry(source_id: &str, op_index: usize, op: AugOp, global_seed: u64) -> PlanEntry {
    entry_with(source_id, op_index, op, &global_seed.to_string())
}

fn entry_with(source_id: &str, op_index: usize, op: AugOp, seed_str: &str) -> PlanEntry {
    PlanEntry {
        source_id: source_id.to_string(),
        op_index,
        op,
        stream_seed: derive_seed(&[seed_str, source_id, &op_index.to_string()]),
    }
}

pub fn build_plan(mode: AugmentationMode, source_ids: &[String], global_seed: u64) -> Result<AugPlan> {
    build_plan_with(mode, source_ids, global_seed, &AugConfig::default())
}

/// Builds the plan: for each source (in order) every op of `mode`, with the
/// stream seed derived from `global_seed/source_id/op_index`.
pub fn build_plan_with(
    mode: AugmentationMode,
    source_ids: &[String],
    global_seed: u64,
    cfg: &AugConfig,
) -> Result<AugPlan> {
    let mut seen = HashSet::with_capacity(source_ids.len());
    if let Some(dup) = source_ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::invalid(format!("duplicate source id `{dup}`")));
    }
    let ops = mode_ops(mode, cfg);
    let seed_str = global_seed.to_string();
    let entries = source_ids
        .iter()
        .flat_map(|id| {
            let seed_str = &seed_str;
            ops.iter().enumerate().map(move |(i, op)| entry_with(id, i, *op, seed_str))
        })
        .collect();
    Ok(AugPlan { entries })
}

pub trait ImageLoader: Sync {
    fn load(&self, id: &str) -> Result<Image>;

    /// Metadata of the source image, copied onto every derived row.
    fn record(&self, _id: &str) -> Option<ImageRecord> {
        None
    }
}

pub trait ImageSink: Sync {
    /// Stores an image under `id` and returns the path recorded in the manifest.
    fn store(&self, id: &str, img: &Image) -> Result<String>;
}

/// Replaces characters that are awkward in file names.
pub fn file_stem_for(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-@".contains(c) { c } else { '_' })
        .collect()
}

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "ppm"];

/// Loads every image file directly inside a directory; ids are file stems.
#[derive(Debug, Clone)]
pub struct DirLoader {
    entries: Vec<(String, PathBuf)>,
    source_dataset: String,
}

impl DirLoader {
    pub fn scan(dir: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                entries.push((stem, path));
            }
        }
        entries.sort();
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid(format!(
                "{} and {} map to the same id",
                w[0].1.display(),
                w[1].1.display()
            )));
        }
        let source_dataset = dir.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        Ok(Self { entries, source_dataset })
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|(id, _)| id.clone()).collect()
    }

    fn path(&self, id: &str) -> Option<&Path> {
        self.entries
            .binary_search_by(|(k, _)| k.as_str().cmp(id))
            .ok()
            .map(|i| self.entries[i].1.as_path())
    }
}

impl ImageLoader for DirLoader {
    fn load(&self, id: &str) -> Result<Image> {
        let path = self.path(id).ok_or_else(|| {
            Error::io(
                id,
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("no image with id `{id}`")),
            )
        })?;
        Image::load(path)
    }

    fn record(&self, id: &str) -> Option<ImageRecord> {
        let path = self.path(id)?;
        Some(ImageRecord {
            id: id.to_string(),
            source_dataset: self.source_dataset.clone(),
            original_class: String::new(),
            final_class: String::new(),
            split: Split::Unassigned,
            lineage: None,
            path: path.display().to_string(),
            width: 0,
            height: 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Png,
    Ppm,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Png => "png",
            OutputFormat::Ppm => "ppm",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "png" => Ok(OutputFormat::Png),
            "ppm" => Ok(OutputFormat::Ppm),
            _ => Err(Error::invalid(format!("unknown output format `{s}`"))),
        }
    }
}

/// Writes images into a directory as `<sanitized id>.<ext>`.
#[derive(Debug, Clone)]
pub struct DirSink {
    pub dir: PathBuf,
    pub format: OutputFormat,
}

impl DirSink {
    pub fn new(dir: impl Into<PathBuf>, format: OutputFormat) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir, format })
    }
}

impl ImageSink for DirSink {
    fn store(&self, id: &str, img: &Image) -> Result<String> {
        let path = self.dir.join(format!("{}.{}", file_stem_for(id), self.format.extension()));
        img.save(&path)?;
        Ok(path.display().to_string())
    }
}

/// Runs a plan: one output image and one manifest row per entry, rows in plan
/// order. Sources are processed in parallel on `jobs` threads (0 = all cores).
pub fn execute_plan(
    plan: &AugPlan,
    loader: &dyn ImageLoader,
    sink: &dyn ImageSink,
    jobs: usize,
) -> Result<Vec<ImageRecord>> {
    // group consecutive entries by source so each image is decoded once
    let mut groups: Vec<&[PlanEntry]> = Vec::new();
    let mut start = 0;
    for i in 1..=plan.entries.len() {
        if i == plan.entries.len() || plan.entries[i].source_id != plan.entries[start].source_id {
            groups.push(&plan.entries[start..i]);
            start = i;
        }
    }
    let run_group = |group: &&[PlanEntry]| -> Result<Vec<ImageRecord>> {
        let source_id = &group[0].source_id;
        let img = loader.load(source_id)?;
        let parent = loader.record(source_id);
        group
            .iter()
            .map(|entry| {
                let out = apply_aug_op(&img, &entry.op, entry.stream_seed)?;
                let id = entry.output_id();
                let path = sink.store(&id, &out)?;
                let lineage = (entry.op != AugOp::Identity).then(|| Lineage {
                    parent: source_id.clone(),
                    op: entry.op.to_string(),
                    seed: entry.stream_seed,
                });
                let (source_dataset, original_class, final_class) = parent
                    .as_ref()
                    .map(|p| (p.source_dataset.clone(), p.original_class.clone(), p.final_class.clone()))
                    .unwrap_or_default();
                Ok(ImageRecord {
                    id,
                    source_dataset,
                    original_class,
                    final_class,
                    split: Split::Unassigned,
                    lineage,
                    path,
                    width: out.width(),
                    height: out.height(),
                })
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    let per_group: Vec<Result<Vec<ImageRecord>>> = pool.install(|| groups.par_iter().map(run_group).collect());
    let mut rows = Vec::with_capacity(plan.len());
    for g in per_group {
        rows.extend(g?);
    }
    Ok(rows)
}

/// Reads a text file of ids, one per line; used for explicit source lists.
pub fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ids = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if !line.is_empty() {
            ids.push(line.to_string());
        }
    }
    Ok(ids)
}

/// Reads a whole file into bytes; helper for golden comparisons.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}
