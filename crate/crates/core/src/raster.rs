use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalar image with intensities in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Micrograph {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
    /// Physical length per pixel (µm/px) when known.
    pub pixel_scale: Option<f64>,
}

impl Micrograph {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "micrograph buffer has {} values for {width}x{height}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!(
                "intensity {v} outside [0, 1]"
            )));
        }
        Ok(Micrograph {
            width,
            height,
            data,
            pixel_scale: None,
        })
    }

    /// Builds an image from arbitrary values, clamping into `[0, 1]`.
    pub fn from_clamped(width: usize, height: usize, mut data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Micrograph {
            width,
            height,
            data,
            pixel_scale: None,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_clamped(width, height, vec![value; width * height])
    }

    pub fn with_pixel_scale(mut self, scale: Option<f64>) -> Self {
        self.pixel_scale = scale;
        self
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Micrograph {
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Micrograph {
            width: w,
            height: h,
            data,
            pixel_scale: self.pixel_scale,
        }
    }

    /// 8-bit quantization used by every on-disk and histogram path:
    /// `intensity * 255`, rounded half up.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }
}

#[inline]
pub(crate) fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Binary per-pixel class map: 1 = grain boundary, 0 = grain interior.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl SegmentationMask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "mask buffer has {} values for {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::InvalidInput("mask values must be 0 or 1".into()));
        }
        Ok(SegmentationMask {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        SegmentationMask {
            width,
            height,
            data: vec![value as u8; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn is_boundary(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn boundary_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> SegmentationMask {
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        SegmentationMask {
            width: w,
            height: h,
            data,
        }
    }
}

/// Per-pixel grain identifier. Label 0 marks unassigned or boundary pixels;
/// grains are numbered `1..=K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u16>,
}

impl InstanceMap {
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "instance buffer has {} labels for {width}x{height}",
                labels.len()
            )));
        }
        Ok(InstanceMap {
            width,
            height,
            labels,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.labels[y * self.width + x]
    }

    pub fn max_label(&self) -> u16 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Number of distinct non-zero labels.
    pub fn grain_count(&self) -> usize {
        let mut seen = vec![false; self.max_label() as usize + 1];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        seen.iter().skip(1).filter(|&&s| s).count()
    }

    /// Pixel count per label, indexed by label (index 0 counts unassigned).
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.max_label() as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    /// Renumbers the non-zero labels to `1..=K` in ascending order of their
    /// current value.
    pub fn compacted(&self) -> InstanceMap {
        let areas = self.areas();
        let mut remap = vec![0u16; areas.len()];
        let mut next = 0u16;
        for (label, &a) in areas.iter().enumerate().skip(1) {
            if a > 0 {
                next += 1;
                remap[label] = next;
            }
        }
        InstanceMap {
            width: self.width,
            height: self.height,
            labels: self.labels.iter().map(|&l| remap[l as usize]).collect(),
        }
    }
}
