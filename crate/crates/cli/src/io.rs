//! PNG frame and mask sequences, JSON artifacts.
//!
//! Frames are RGB8 PNGs, masks are 8-bit grey PNGs written as 0/255 and read
//! with a threshold of 128. Sequences are `%05d.png` files numbered from 0.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, ImageFormat, RgbImage};
use reanchor::maskmedia::{BinaryMask, FrameImage};
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn frame_path(dir: &Path, idx: usize) -> PathBuf {
    dir.join(format!("{idx:05}.png"))
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn read_frame(path: &Path) -> CliResult<FrameImage> {
    let img = image::open(path).map_err(|e| CliError::io(path, e))?.to_rgb8();
    let (w, h) = img.dimensions();
    FrameImage::new(w, h, img.into_raw()).map_err(|e| CliError::io(path, e))
}

pub fn write_frame(path: &Path, frame: &FrameImage) -> CliResult<()> {
    let img = RgbImage::from_raw(frame.width(), frame.height(), frame.pixels().to_vec()).expect("buffer length checked");
    img.save_with_format(path, ImageFormat::Png).map_err(|e| CliError::io(path, e))
}

pub fn read_mask(path: &Path) -> CliResult<BinaryMask> {
    let img = image::open(path).map_err(|e| CliError::io(path, e))?.to_luma8();
    let (w, h) = img.dimensions();
    let bits: Vec<bool> = img.as_raw().iter().map(|&v| v >= 128).collect();
    BinaryMask::from_bools(w, h, &bits).map_err(|e| CliError::io(path, e))
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> CliResult<()> {
    let px: Vec<u8> = (0..mask.len()).map(|i| if mask.get_linear(i) { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(mask.width(), mask.height(), px).expect("buffer length checked");
    img.save_with_format(path, ImageFormat::Png).map_err(|e| CliError::io(path, e))
}

/// Number of frames in a `%05d.png` sequence. Files must be contiguous from
/// `00000.png`; other files are ignored.
pub fn sequence_len(dir: &Path) -> CliResult<usize> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut indices = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name();
        let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".png")) else {
            continue;
        };
        if stem.len() == 5 && stem.bytes().all(|b| b.is_ascii_digit()) {
            indices.push(stem.parse::<usize>().expect("five digits"));
        }
    }
    indices.sort_unstable();
    if indices.is_empty() {
        return Err(CliError::Data(format!("{}: no %05d.png frames", dir.display())));
    }
    if let Some(missing) = indices.iter().enumerate().find(|(i, v)| *i != **v).map(|(i, _)| i) {
        return Err(CliError::Data(format!(
            "{}: missing frame",
            frame_path(dir, missing).display()
        )));
    }
    Ok(indices.len())
}

pub fn read_frames(dir: &Path) -> CliResult<Vec<FrameImage>> {
    let n = sequence_len(dir)?;
    (0..n).map(|i| read_frame(&frame_path(dir, i))).collect()
}

pub fn write_frames(dir: &Path, frames: &[FrameImage]) -> CliResult<()> {
    create_dir(dir)?;
    frames.iter().enumerate().try_for_each(|(i, f)| write_frame(&frame_path(dir, i), f))
}

/// Reads `n` masks; a missing file is reported by name.
pub fn read_masks(dir: &Path, n: usize) -> CliResult<Vec<BinaryMask>> {
    (0..n)
        .map(|i| {
            let p = frame_path(dir, i);
            if !p.is_file() {
                return Err(CliError::Data(format!("{}: missing mask frame {i}", p.display())));
            }
            read_mask(&p)
        })
        .collect()
}

pub fn read_mask_sequence(dir: &Path) -> CliResult<Vec<BinaryMask>> {
    let n = sequence_len(dir)?;
    read_masks(dir, n)
}

pub fn write_masks(dir: &Path, masks: &[BinaryMask]) -> CliResult<()> {
    create_dir(dir)?;
    masks.iter().enumerate().try_for_each(|(i, m)| write_mask(&frame_path(dir, i), m))
}

/// Reads `<root>/<instance_id>/%05d.png` for every instance directory.
/// Returns per-frame maps, as the oracle detector expects.
pub fn read_instances(root: &Path) -> CliResult<Vec<BTreeMap<String, BinaryMask>>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| CliError::io(root, e))? {
        let entry = entry.map_err(|e| CliError::io(root, e))?;
        if entry.path().is_dir() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    if ids.is_empty() {
        return Err(CliError::Data(format!("{}: no instance directories", root.display())));
    }
    let mut frames: Vec<BTreeMap<String, BinaryMask>> = Vec::new();
    for id in ids {
        let masks = read_mask_sequence(&root.join(&id))?;
        if !frames.is_empty() && frames.len() != masks.len() {
            return Err(CliError::Data(format!(
                "{}: {} frames, other instances have {}",
                root.join(&id).display(),
                masks.len(),
                frames.len()
            )));
        }
        frames.resize_with(masks.len(), BTreeMap::new);
        for (f, m) in masks.into_iter().enumerate() {
            frames[f].insert(id.clone(), m);
        }
    }
    Ok(frames)
}

/// Pretty JSON with a trailing newline, written via a temporary file and a
/// rename.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
