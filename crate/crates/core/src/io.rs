//! On-disk formats: FFLD field files, label PNG scenes with a JSON sidecar,
//! trajectory JSON, annotation bundles and JSONL manifests.
//!
//! FFLD layout, all little-endian: magic `FFLD`, `u32` version, `u32` width,
//! `u32` height, `u32` channels (1 or 2), then `width·height·channels`
//! `f32` values in row-major order with channels interleaved.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{AnnotationConfig, GoalSpec};
use crate::grid::{
    FlowFieldGrid, LabelMapping, ObjectInstance, Pixel, Raster, ScalarField, SemanticMap,
};
use crate::trajectory::Trajectory;

pub const FFLD_MAGIC: &[u8; 4] = b"FFLD";
pub const FFLD_VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn encode_ffld(
    width: usize,
    height: usize,
    channels: u32,
    values: impl Iterator<Item = f64>,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + width * height * channels as usize * 4);
    out.extend_from_slice(FFLD_MAGIC);
    for v in [FFLD_VERSION, width as u32, height as u32, channels] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn encode_scalar_field(field: &ScalarField) -> Vec<u8> {
    encode_ffld(
        field.width(),
        field.height(),
        1,
        field.as_slice().iter().copied(),
    )
}

pub fn encode_flow_field(field: &FlowFieldGrid) -> Vec<u8> {
    encode_ffld(
        field.width(),
        field.height(),
        2,
        field.as_slice().iter().flat_map(|v| *v),
    )
}

/// Decoded FFLD payload.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Flow(FlowFieldGrid),
}

pub fn decode_ffld(bytes: &[u8]) -> Result<FieldData> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != FFLD_MAGIC {
        return Err(Error::Format("missing FFLD magic".into()));
    }
    let word =
        |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes"));
    let (version, w, h, c) = (word(0), word(1) as usize, word(2) as usize, word(3));
    if version != FFLD_VERSION {
        return Err(Error::Format(format!("unsupported FFLD version {version}")));
    }
    if c != 1 && c != 2 {
        return Err(Error::Format(format!(
            "FFLD channel count must be 1 or 2 (got {c})"
        )));
    }
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(c as usize * 4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("FFLD dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "FFLD payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let vals: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(if c == 1 {
        FieldData::Scalar(Raster::from_vec(w, h, vals)?)
    } else {
        FieldData::Flow(Raster::from_vec(
            w,
            h,
            vals.chunks_exact(2).map(|p| [p[0], p[1]]).collect(),
        )?)
    })
}

pub fn write_scalar_field(path: &Path, field: &ScalarField) -> Result<()> {
    write_atomic(path, &encode_scalar_field(field))
}

pub fn write_flow_field(path: &Path, field: &FlowFieldGrid) -> Result<()> {
    write_atomic(path, &encode_flow_field(field))
}

pub fn read_field(path: &Path) -> Result<FieldData> {
    decode_ffld(&fs::read(path)?)
}

pub fn read_flow_field(path: &Path) -> Result<FlowFieldGrid> {
    match read_field(path)? {
        FieldData::Flow(f) => Ok(f),
        FieldData::Scalar(_) => Err(Error::Format(format!(
            "{} holds a scalar field",
            path.display()
        ))),
    }
}

pub fn read_scalar_field(path: &Path) -> Result<ScalarField> {
    match read_field(path)? {
        FieldData::Scalar(f) => Ok(f),
        FieldData::Flow(_) => Err(Error::Format(format!(
            "{} holds a flow field",
            path.display()
        ))),
    }
}

/// Everything about a scene that the label PNG cannot carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSidecar {
    pub width: usize,
    pub height: usize,
    pub mapping: LabelMapping,
    pub instances: Vec<ObjectInstance>,
}

/// Sidecar path for a scene PNG: same stem, `.json` extension.
pub fn sidecar_path(png: &Path) -> PathBuf {
    png.with_extension("json")
}

pub fn encode_label_png(labels: &Raster<u8>) -> Result<Vec<u8>> {
    let (w, h) = labels.dims();
    let img = image::GrayImage::from_raw(w as u32, h as u32, labels.as_slice().to_vec())
        .ok_or(Error::LengthMismatch(w * h, labels.len()))?;
    let mut buf = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut buf), image::ImageFormat::Png)?;
    Ok(buf)
}

pub fn decode_label_png(bytes: &[u8]) -> Result<Raster<u8>> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(Error::Format(format!(
                "scene PNG must be 8-bit single-channel (got {:?})",
                other.color()
            )))
        }
    };
    let (w, h) = gray.dimensions();
    Raster::from_vec(w as usize, h as usize, gray.into_raw())
}

/// Writes `png` and its JSON sidecar.
pub fn save_scene(png: &Path, map: &SemanticMap, mapping: &LabelMapping) -> Result<()> {
    let sidecar = SceneSidecar {
        width: map.width(),
        height: map.height(),
        mapping: mapping.clone(),
        instances: map.instances.clone(),
    };
    write_atomic(png, &encode_label_png(&map.labels)?)?;
    write_json(&sidecar_path(png), &sidecar)
}

pub fn load_scene(png: &Path) -> Result<(SemanticMap, LabelMapping)> {
    let labels = decode_label_png(&fs::read(png)?)?;
    let sidecar: SceneSidecar = read_json(&sidecar_path(png))?;
    labels.ensure_dims((sidecar.width, sidecar.height))?;
    sidecar.mapping.validate()?;
    let map = SemanticMap::new(labels, sidecar.instances)?;
    // reject labels the mapping does not classify
    crate::grid::extract_free(&map, &sidecar.mapping)?;
    Ok((map, sidecar.mapping))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Compact `[[u, v], ...]` text with a trailing newline.
pub fn trajectory_json(traj: &Trajectory) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec(traj)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    write_atomic(path, &trajectory_json(traj)?)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let pts: Vec<[f64; 2]> = read_json(path)?;
    if pts
        .iter()
        .flatten()
        .any(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
    {
        return Err(Error::Format(format!(
            "{}: points must lie in [0,1]²",
            path.display()
        )));
    }
    Ok(Trajectory::from_arrays(&pts))
}

/// Metadata stored next to an annotated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationMeta {
    /// Scene PNG the annotation was computed on.
    pub scene: PathBuf,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instruction: Option<String>,
    pub goal: GoalSpec,
    pub goal_pixels: Vec<Pixel>,
    pub start: Pixel,
    pub config: AnnotationConfig,
}

pub const BUNDLE_FIELD: &str = "field.ffld";
pub const BUNDLE_TRAJECTORY: &str = "trajectory.json";
pub const BUNDLE_META: &str = "meta.json";

/// An annotation as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationBundle {
    pub field: FlowFieldGrid,
    pub trajectory: Trajectory,
    pub meta: AnnotationMeta,
}

impl AnnotationBundle {
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_flow_field(&dir.join(BUNDLE_FIELD), &self.field)?;
        write_trajectory(&dir.join(BUNDLE_TRAJECTORY), &self.trajectory)?;
        write_json(&dir.join(BUNDLE_META), &self.meta)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let meta: AnnotationMeta = read_json(&dir.join(BUNDLE_META))?;
        let field = read_flow_field(&dir.join(BUNDLE_FIELD))?;
        field.ensure_dims((meta.width, meta.height))?;
        Ok(AnnotationBundle {
            field,
            trajectory: read_trajectory(&dir.join(BUNDLE_TRAJECTORY))?,
            meta,
        })
    }

    /// Scene path as recorded, resolved against the bundle directory when
    /// relative and not found from the working directory.
    pub fn scene_path(&self, dir: &Path) -> PathBuf {
        let p = &self.meta.scene;
        if p.is_relative() && !p.exists() {
            dir.join(p)
        } else {
            p.clone()
        }
    }
}

/// One episode of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub scene: PathBuf,
    pub instruction: String,
    pub goal: GoalSpec,
    pub seed: u64,
    /// Output directory of the annotation bundle.
    pub annotation: PathBuf,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn manifest_text(entries: &[ManifestEntry]) -> Result<String> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}
