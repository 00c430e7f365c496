//! Graph directory format.
//!
//! ```text
//! <dir>/manifest.json       format_version, encoder spec, nodes, edges
//! <dir>/imgs/<id>_f.vimg    front view
//! <dir>/imgs/<id>_b.vimg    back view
//! <dir>/world.json          optional world sidecar
//! ```
//!
//! A `.vimg` blob is the magic `VLNIMG1\n`, then little-endian `u32` H, W, C,
//! then H·W·C little-endian `f32` pixels, row-major and channel-fastest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Edge, NavGraph, NavNode, NodeId, Slot};
use crate::embedding::EncoderSpec;
use crate::error::{Error, Result, StoreError};
use crate::tensor::{ImageShape, ImageTensor};
use crate::worldgen::{WorldMeta, WorldSidecar};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const WORLD_FILE: &str = "world.json";
pub const IMAGE_MAGIC: &[u8; 8] = b"VLNIMG1\n";
const HEADER_LEN: usize = IMAGE_MAGIC.len() + 12;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    encoder: EncoderSpec,
    nodes: Vec<ManifestNode>,
    edges: Vec<Edge>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestNode {
    id: NodeId,
    x: f64,
    y: f64,
    front: String,
    back: String,
}

/// A loaded graph directory.
#[derive(Debug, Clone)]
pub struct StoredGraph {
    pub graph: NavGraph,
    pub encoder: EncoderSpec,
    pub world: Option<WorldMeta>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

fn blob_name(id: NodeId, slot: Slot) -> String {
    format!("imgs/{}_{}.vimg", id, slot.suffix())
}

pub fn encode_image(img: &ImageTensor) -> Vec<u8> {
    let s = img.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * img.len());
    out.extend_from_slice(IMAGE_MAGIC);
    for d in [s.height, s.width, s.channels] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in img.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_image(bytes: &[u8], node: NodeId, path: &Path) -> Result<ImageTensor, StoreError> {
    if bytes.len() < IMAGE_MAGIC.len() || &bytes[..IMAGE_MAGIC.len()] != IMAGE_MAGIC {
        return Err(StoreError::BadMagic { node, path: path.to_owned() });
    }
    if bytes.len() < HEADER_LEN {
        return Err(StoreError::TruncatedBlob {
            node,
            path: path.to_owned(),
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let dim = |k: usize| {
        let o = IMAGE_MAGIC.len() + 4 * k;
        u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"))
    };
    let (h, w, c) = (dim(0), dim(1), dim(2));
    let count = (h as usize)
        .checked_mul(w as usize)
        .and_then(|v| v.checked_mul(c as usize))
        .ok_or_else(|| StoreError::Validation(format!("node {node}: image dimensions overflow")))?;
    let expected = HEADER_LEN + 4 * count;
    if bytes.len() < expected {
        return Err(StoreError::TruncatedBlob {
            node,
            path: path.to_owned(),
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(StoreError::Validation(format!(
            "node {node}: {} has {} trailing bytes",
            path.display(),
            bytes.len() - expected
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    let shape = ImageShape::new(h as usize, w as usize, c as usize);
    ImageTensor::new(shape, data)
        .map_err(|e| StoreError::Validation(format!("node {node}: {}: {e}", path.display())))
}

/// Writes `g` (and the world sidecar, if given) into `dir`, creating it.
/// Output bytes depend only on the inputs.
pub fn save_graph(
    g: &NavGraph,
    encoder: &EncoderSpec,
    world: Option<&WorldMeta>,
    dir: &Path,
) -> Result<()> {
    let imgs = dir.join("imgs");
    fs::create_dir_all(&imgs).map_err(io_err(&imgs))?;
    let mut nodes = Vec::with_capacity(g.len());
    for n in g.nodes() {
        for slot in Slot::ALL {
            let path = dir.join(blob_name(n.id, slot));
            fs::write(&path, encode_image(n.image(slot))).map_err(io_err(&path))?;
        }
        nodes.push(ManifestNode {
            id: n.id,
            x: n.position[0],
            y: n.position[1],
            front: blob_name(n.id, Slot::Front),
            back: blob_name(n.id, Slot::Back),
        });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        encoder: *encoder,
        nodes,
        edges: g.edges().to_vec(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    if let Some(w) = world {
        write_json(&dir.join(WORLD_FILE), &w.to_sidecar())?;
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| StoreError::Validation(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))?;
    Ok(())
}

pub fn load_graph(dir: &Path) -> Result<StoredGraph> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let malformed = |reason: String| StoreError::MalformedManifest {
        path: manifest_path.clone(),
        reason,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| malformed("missing integer format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(StoreError::VersionMismatch {
            path: manifest_path.clone(),
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        }
        .into());
    }
    let manifest: Manifest = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;

    let mut nodes = Vec::with_capacity(manifest.nodes.len());
    let mut shape: Option<(NodeId, ImageShape)> = None;
    for mn in &manifest.nodes {
        let mut images = Vec::with_capacity(2);
        for rel in [&mn.front, &mn.back] {
            let path = resolve_blob(dir, rel, mn.id)?;
            let bytes = match fs::read(&path) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(StoreError::MissingBlob { node: mn.id, path }.into())
                }
                Err(e) => return Err(io_err(&path)(e).into()),
            };
            let img = decode_image(&bytes, mn.id, &path)?;
            match shape {
                None => shape = Some((mn.id, img.shape())),
                Some((_, s)) if s != img.shape() => {
                    return Err(StoreError::ImageDimensions {
                        node: mn.id,
                        expected: dims(s),
                        found: dims(img.shape()),
                    }
                    .into())
                }
                Some(_) => {}
            }
            images.push(img);
        }
        let back = images.pop().expect("two images");
        let front = images.pop().expect("two images");
        nodes.push(NavNode { id: mn.id, position: [mn.x, mn.y], images: [front, back] });
    }
    if let Some((node, s)) = shape {
        if s.len() != manifest.encoder.m {
            return Err(StoreError::Validation(format!(
                "node {node}: image has {} values but the encoder expects m = {}",
                s.len(),
                manifest.encoder.m
            ))
            .into());
        }
    }
    let graph = NavGraph::new(nodes, manifest.edges).map_err(|e| match e {
        Error::InvalidInput(msg) => StoreError::Validation(msg),
        other => StoreError::Validation(other.to_string()),
    })?;

    let world_path = dir.join(WORLD_FILE);
    let world = if world_path.exists() {
        let text = fs::read_to_string(&world_path).map_err(io_err(&world_path))?;
        let sidecar: WorldSidecar = serde_json::from_str(&text).map_err(|e| {
            StoreError::Validation(format!("{}: {e}", world_path.display()))
        })?;
        let meta = WorldMeta::from_sidecar(sidecar)
            .and_then(|m| m.check_graph(&graph).map(|_| m))
            .map_err(|e| StoreError::Validation(format!("{}: {e}", world_path.display())))?;
        Some(meta)
    } else {
        None
    };
    Ok(StoredGraph { graph, encoder: manifest.encoder, world })
}

fn resolve_blob(dir: &Path, rel: &str, node: NodeId) -> Result<PathBuf, StoreError> {
    let p = Path::new(rel);
    if p.is_absolute() || p.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
        return Err(StoreError::Validation(format!(
            "node {node}: image path {rel:?} escapes the graph directory"
        )));
    }
    Ok(dir.join(p))
}

fn dims(s: ImageShape) -> (u32, u32, u32) {
    (s.height as u32, s.width as u32, s.channels as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_round_trip_is_bit_exact() {
        let shape = ImageShape::new(2, 3, 2);
        let data: Vec<f32> = (0..12).map(|i| i as f32 / 11.0 + 1e-7).map(|v| v.min(1.0)).collect();
        let img = ImageTensor::new(shape, data).unwrap();
        let bytes = encode_image(&img);
        assert_eq!(&bytes[..8], IMAGE_MAGIC);
        assert_eq!(bytes.len(), 20 + 48);
        let back = decode_image(&bytes, NodeId(0), Path::new("x")).unwrap();
        assert!(back.bit_eq(&img));
    }

    #[test]
    fn decode_errors_are_distinct() {
        let img = ImageTensor::filled(ImageShape::new(2, 2, 1), 0.5).unwrap();
        let bytes = encode_image(&img);
        let p = Path::new("b");
        assert!(matches!(
            decode_image(&bytes[..bytes.len() - 1], NodeId(3), p),
            Err(StoreError::TruncatedBlob { node: NodeId(3), .. })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_image(&bad, NodeId(3), p), Err(StoreError::BadMagic { .. })));
        assert!(matches!(decode_image(&bytes[..4], NodeId(3), p), Err(StoreError::BadMagic { .. })));
        let mut long = bytes;
        long.push(0);
        assert!(matches!(decode_image(&long, NodeId(3), p), Err(StoreError::Validation(_))));
    }
}
