//! File formats.
//!
//! - `.flo` (Middlebury): `f32` magic `202021.25`, `i32` width, `i32`
//!   height, then `height * width` interleaved `(dx, dy)` `f32` pairs,
//!   row-major, all little-endian.
//! - `MSK1` masks: ASCII `MSK1`, `i32` width, `i32` height, then
//!   `height * width` `f32` values, little-endian.
//! - Images: PNG or JPEG through the `image` crate, 8-bit samples divided
//!   by 255.
//! - Landmarks: JSON `{"image": path, "points": [[x, y], ...],
//!   "groups": {"left_eye": [idx, ...], ...}}`, or an array of such objects.
//!
//! Flow and mask samples are stored as `f32`, so a round trip is bit-exact
//! for values that are representable in `f32`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{ConsistencyMask, FlowField};
use crate::raster::Image;
use crate::synth::{LandmarkGroup, LandmarkMesh};

pub const FLO_MAGIC: f32 = 202021.25;
pub const MSK_MAGIC: &[u8; 4] = b"MSK1";
/// Refuse headers describing more samples than this.
const MAX_PIXELS: usize = 1 << 28;

fn format_err(format: &'static str, reason: impl Into<String>) -> Error {
    Error::Format {
        format,
        reason: reason.into(),
    }
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], format: &'static str, what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            format_err(format, format!("truncated while reading {what}"))
        } else {
            Error::Io(e)
        }
    })
}

fn read_dims<R: Read>(r: &mut R, format: &'static str) -> Result<(usize, usize)> {
    let mut b = [0u8; 8];
    read_exact_or(r, &mut b, format, "header")?;
    let width = i32::from_le_bytes(b[0..4].try_into().expect("4 bytes"));
    let height = i32::from_le_bytes(b[4..8].try_into().expect("4 bytes"));
    if width <= 0 || height <= 0 {
        return Err(format_err(format, format!("invalid dimensions {width}x{height}")));
    }
    let (w, h) = (width as usize, height as usize);
    if w.saturating_mul(h) > MAX_PIXELS {
        return Err(format_err(format, format!("dimensions {width}x{height} too large")));
    }
    Ok((h, w))
}

fn read_f32s<R: Read>(r: &mut R, n: usize, format: &'static str) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    read_exact_or(r, &mut bytes, format, "payload")?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect())
}

fn dims_i32(height: usize, width: usize) -> Result<(i32, i32)> {
    let w = i32::try_from(width).map_err(|_| Error::InvalidParameter("width overflows i32".into()))?;
    let h = i32::try_from(height).map_err(|_| Error::InvalidParameter("height overflows i32".into()))?;
    Ok((w, h))
}

pub fn write_flo_to<W: Write>(mut w: W, flow: &FlowField) -> Result<()> {
    let (width, height) = dims_i32(flow.height(), flow.width())?;
    let mut buf = Vec::with_capacity(12 + flow.len() * 8);
    buf.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    buf.extend_from_slice(&width.to_le_bytes());
    buf.extend_from_slice(&height.to_le_bytes());
    for (u, v) in flow.vectors() {
        buf.extend_from_slice(&(u as f32).to_le_bytes());
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_flo_from<R: Read>(mut r: R) -> Result<FlowField> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "flo", "magic")?;
    let m = f32::from_le_bytes(magic);
    if m != FLO_MAGIC {
        return Err(format_err("flo", format!("bad magic {m} (expected {FLO_MAGIC})")));
    }
    let (h, w) = read_dims(&mut r, "flo")?;
    let raw = read_f32s(&mut r, h * w * 2, "flo")?;
    let dx = raw.iter().step_by(2).map(|&v| f64::from(v)).collect();
    let dy = raw.iter().skip(1).step_by(2).map(|&v| f64::from(v)).collect();
    FlowField::new(h, w, dx, dy).map_err(|e| format_err("flo", e.to_string()))
}

pub fn write_flo(path: impl AsRef<Path>, flow: &FlowField) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_flo_to(&mut f, flow)?;
    f.flush()?;
    Ok(())
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    read_flo_from(BufReader::new(File::open(path)?))
}

pub fn write_msk_to<W: Write>(mut w: W, mask: &ConsistencyMask) -> Result<()> {
    let (width, height) = dims_i32(mask.height(), mask.width())?;
    let mut buf = Vec::with_capacity(12 + mask.values().len() * 4);
    buf.extend_from_slice(MSK_MAGIC);
    buf.extend_from_slice(&width.to_le_bytes());
    buf.extend_from_slice(&height.to_le_bytes());
    for &v in mask.values() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_msk_from<R: Read>(mut r: R) -> Result<ConsistencyMask> {
    let mut magic = [0u8; 4];
    read_exact_or(&mut r, &mut magic, "MSK1", "magic")?;
    if &magic != MSK_MAGIC {
        return Err(format_err("MSK1", format!("bad magic {magic:?}")));
    }
    let (h, w) = read_dims(&mut r, "MSK1")?;
    let values = read_f32s(&mut r, h * w, "MSK1")?
        .into_iter()
        .map(f64::from)
        .collect();
    ConsistencyMask::new(h, w, values).map_err(|e| format_err("MSK1", e.to_string()))
}

pub fn write_msk(path: impl AsRef<Path>, mask: &ConsistencyMask) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_msk_to(&mut f, mask)?;
    f.flush()?;
    Ok(())
}

pub fn read_msk(path: impl AsRef<Path>) -> Result<ConsistencyMask> {
    read_msk_from(BufReader::new(File::open(path)?))
}

/// Loads a PNG/JPEG (or any format the `image` crate was built with) as a
/// 3-channel image.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let rgb = image::open(path)?.to_rgb8();
    let (w, h) = rgb.dimensions();
    Image::from_u8(h as usize, w as usize, 3, rgb.as_raw())
}

/// Writes an 8-bit PNG (lossless for 8-bit-quantized images).
pub fn save_png(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let color = if img.channels() == 3 {
        image::ExtendedColorType::Rgb8
    } else {
        image::ExtendedColorType::L8
    };
    image::save_buffer_with_format(
        path,
        &img.to_u8(),
        img.width() as u32,
        img.height() as u32,
        color,
        image::ImageFormat::Png,
    )?;
    Ok(())
}

/// One landmark record as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRecord {
    pub image: PathBuf,
    pub points: Vec<[f64; 2]>,
    pub groups: BTreeMap<LandmarkGroup, Vec<usize>>,
}

impl LandmarkRecord {
    pub fn from_mesh(image: impl Into<PathBuf>, mesh: &LandmarkMesh) -> Self {
        Self {
            image: image.into(),
            points: mesh.points().iter().map(|&(x, y)| [x, y]).collect(),
            groups: mesh.groups().clone(),
        }
    }

    /// Builds the mesh for an image of the given size.
    pub fn to_mesh(&self, height: usize, width: usize) -> Result<LandmarkMesh> {
        LandmarkMesh::new(
            height,
            width,
            self.points.iter().map(|p| (p[0], p[1])).collect(),
            self.groups.clone(),
        )
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LandmarkFile {
    Many(Vec<LandmarkRecord>),
    One(LandmarkRecord),
}

pub fn parse_landmarks(json: &str) -> Result<Vec<LandmarkRecord>> {
    Ok(match serde_json::from_str(json)? {
        LandmarkFile::Many(v) => v,
        LandmarkFile::One(r) => vec![r],
    })
}

pub fn read_landmarks(path: impl AsRef<Path>) -> Result<Vec<LandmarkRecord>> {
    parse_landmarks(&std::fs::read_to_string(path)?)
}

pub fn write_landmarks(path: impl AsRef<Path>, records: &[LandmarkRecord]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, records)?;
    f.flush()?;
    Ok(())
}
