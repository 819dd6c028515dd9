//! On-disk checkpoint: `header.json` plus one raw little-endian `f32`
//! raster per surviving field (row-major over its active box).
//!
//! Rasters are single precision, so a restored state agrees with the
//! original to about 1e-7 rather than bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActiveBox, GrainField, PhaseFieldState, SimParams};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointField {
    pub label: u32,
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub width: usize,
    pub height: usize,
    pub n_grains: usize,
    pub params: SimParams,
    pub time: f64,
    pub steps: u64,
    pub fields: Vec<CheckpointField>,
}

pub fn write_checkpoint(dir: &Path, state: &PhaseFieldState) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut fields = Vec::with_capacity(state.fields().len());
    for f in state.fields() {
        let file = format!("field_{:05}.f32", f.label);
        let mut bytes = Vec::with_capacity(f.data.len() * 4);
        for &v in &f.data {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        fields.push(CheckpointField {
            label: f.label,
            x0: f.bbox.x0,
            y0: f.bbox.y0,
            w: f.bbox.w,
            h: f.bbox.h,
            file,
        });
    }
    let header = CheckpointHeader {
        format_version: CHECKPOINT_VERSION,
        width: state.width(),
        height: state.height(),
        n_grains: state.n_grains(),
        params: *state.params(),
        time: state.time(),
        steps: state.steps(),
        fields,
    };
    crate::io::write_json(&dir.join("header.json"), &header)
}

pub fn read_checkpoint(dir: &Path) -> Result<PhaseFieldState> {
    let header: CheckpointHeader = crate::io::read_json(&dir.join("header.json"))?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported checkpoint version {}",
            header.format_version
        )));
    }
    let mut fields = Vec::with_capacity(header.fields.len());
    for cf in &header.fields {
        let path = dir.join(&cf.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() != cf.w * cf.h * 4 {
            return Err(Error::InvalidInput(format!(
                "{} holds {} bytes, expected {}",
                path.display(),
                bytes.len(),
                cf.w * cf.h * 4
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        let bbox = ActiveBox {
            x0: cf.x0,
            y0: cf.y0,
            w: cf.w,
            h: cf.h,
        };
        fields.push(GrainField { label: cf.label, bbox, data });
    }
    PhaseFieldState::from_fields(
        header.width,
        header.height,
        header.params,
        header.n_grains,
        fields,
        header.time,
        header.steps,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::InstanceMap;

    #[test]
    fn round_trip_within_single_precision() {
        let (w, h) = (24, 20);
        let labels: Vec<u16> = (0..w * h).map(|i| if i % w < 10 { 1 } else { 2 }).collect();
        let mut s = PhaseFieldState::from_labels(&InstanceMap::new(w, h, labels).unwrap(), SimParams::default()).unwrap();
        for _ in 0..15 {
            s.step();
        }
        let dir = tempfile::tempdir().unwrap();
        write_checkpoint(dir.path(), &s).unwrap();
        let r = read_checkpoint(dir.path()).unwrap();
        assert_eq!(r.fields().len(), s.fields().len());
        assert_eq!(r.steps(), 15);
        for (a, b) in r.fields().iter().zip(s.fields()) {
            assert_eq!(a.bbox, b.bbox);
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn truncated_raster_is_rejected() {
        let labels = InstanceMap::new(4, 4, vec![1; 16]).unwrap();
        let s = PhaseFieldState::from_labels(&labels, SimParams::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_checkpoint(dir.path(), &s).unwrap();
        fs::write(dir.path().join("field_00001.f32"), [0u8; 7]).unwrap();
        assert!(read_checkpoint(dir.path()).is_err());
    }
}
