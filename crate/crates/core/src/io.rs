//! PNG and JSON conventions shared by every stage.
//!
//! * Micrographs: 8-bit grayscale, `intensity * 255` rounded half up.
//! * Masks: 8-bit grayscale with values `{0, 255}` (255 = boundary).
//! * Instance maps: 16-bit grayscale, pixel value = label.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, InstanceMap, Micrograph, Result, SegmentationMask};

fn image_err(path: &Path, source: image::ImageError) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => image_err(path, other),
    })
}

pub fn write_micrograph(path: &Path, img: &Micrograph) -> Result<()> {
    ensure_parent(path)?;
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(img.width as u32, img.height as u32, img.to_u8())
            .expect("buffer length matches dimensions");
    buf.save(path).map_err(|e| image_err(path, e))
}

/// Reads any grayscale (or color, converted to luma) PNG into `[0, 1]`.
/// 16-bit sources keep their full precision.
pub fn read_micrograph(path: &Path) -> Result<Micrograph> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma16(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
        other => other
            .into_luma8()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 255.0)
            .collect(),
    };
    Ok(Micrograph::from_clamped(w, h, data))
}

pub fn write_mask(path: &Path, mask: &SegmentationMask) -> Result<()> {
    ensure_parent(path)?;
    let raw: Vec<u8> = mask.data.iter().map(|&v| if v != 0 { 255 } else { 0 }).collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width as u32, mask.height as u32, raw)
            .expect("buffer length matches dimensions");
    buf.save(path).map_err(|e| image_err(path, e))
}

/// Raw 8-bit pixel values of a mask file, for strict binary checks.
pub fn read_mask_raw(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = open(path)?.into_luma8();
    Ok((img.width() as usize, img.height() as usize, img.into_raw()))
}

/// Reads a mask; any pixel ≥ 128 counts as boundary.
pub fn read_mask(path: &Path) -> Result<SegmentationMask> {
    let (w, h, raw) = read_mask_raw(path)?;
    Ok(SegmentationMask {
        width: w,
        height: h,
        data: raw.into_iter().map(|v| (v >= 128) as u8).collect(),
    })
}

pub fn write_instances(path: &Path, map: &InstanceMap) -> Result<()> {
    ensure_parent(path)?;
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(map.width as u32, map.height as u32, map.labels.clone())
            .expect("buffer length matches dimensions");
    buf.save(path).map_err(|e| image_err(path, e))
}

pub fn read_instances(path: &Path) -> Result<InstanceMap> {
    let img = open(path)?.into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    InstanceMap::new(w, h, img.into_raw())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// PNG files directly inside `dir`, sorted by path.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("png"))
            .unwrap_or(false);
        if is_png && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn micrograph_quantization_rounds_half_up() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        // 0.5 * 255 = 127.5 -> 128
        let img = Micrograph::new(3, 1, vec![0.0, 0.5, 1.0]).unwrap();
        write_micrograph(&p, &img).unwrap();
        let (_, _, raw) = read_mask_raw(&p).unwrap();
        assert_eq!(raw, vec![0, 128, 255]);
    }

    #[test]
    fn instances_keep_16_bit_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.png");
        let map = InstanceMap::new(2, 2, vec![1, 300, 65535, 7]).unwrap();
        write_instances(&p, &map).unwrap();
        assert_eq!(read_instances(&p).unwrap(), map);
    }

    #[test]
    fn masks_are_written_as_0_255() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.png");
        let mask = SegmentationMask::new(2, 1, vec![1, 0]).unwrap();
        write_mask(&p, &mask).unwrap();
        assert_eq!(read_mask_raw(&p).unwrap().2, vec![255, 0]);
        assert_eq!(read_mask(&p).unwrap(), mask);
    }
}
