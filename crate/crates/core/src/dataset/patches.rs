use serde::{Deserialize, Serialize};

use crate::{Error, Micrograph, Result, SegmentationMask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchMode {
    /// Tiles from the top-left corner; partial tiles are discarded.
    NonOverlapping,
    Strided(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch<T> {
    pub x: usize,
    pub y: usize,
    pub data: T,
}

/// Top-left corners of all square `patch`-sized windows, row-major.
pub fn patch_origins(width: usize, height: usize, patch: usize, mode: PatchMode) -> Result<Vec<(usize, usize)>> {
    if patch == 0 {
        return Err(Error::InvalidParameter("patch size must be positive".into()));
    }
    if patch > width || patch > height {
        return Err(Error::ImageTooSmall { width, height, min: patch });
    }
    let stride = match mode {
        PatchMode::NonOverlapping => patch,
        PatchMode::Strided(0) => return Err(Error::InvalidParameter("stride must be positive".into())),
        PatchMode::Strided(s) => s,
    };
    let xs: Vec<usize> = (0..=width - patch).step_by(stride).collect();
    Ok((0..=height - patch)
        .step_by(stride)
        .flat_map(|y| xs.iter().map(move |&x| (x, y)))
        .collect())
}

pub fn extract_patches(img: &Micrograph, patch: usize, mode: PatchMode) -> Result<Vec<Patch<Micrograph>>> {
    Ok(patch_origins(img.width, img.height, patch, mode)?
        .into_iter()
        .map(|(x, y)| Patch { x, y, data: img.crop(x, y, patch, patch) })
        .collect())
}

pub fn extract_mask_patches(mask: &SegmentationMask, patch: usize, mode: PatchMode) -> Result<Vec<Patch<SegmentationMask>>> {
    Ok(patch_origins(mask.width, mask.height, patch, mode)?
        .into_iter()
        .map(|(x, y)| Patch { x, y, data: mask.crop(x, y, patch, patch) })
        .collect())
}
