//! Batch evaluation and report serialization.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{boundary_f1, histogram_overlap, iou, iou_interior, shannon_entropy, ssim};
use crate::{Exec, Micrograph, Result, SegmentationMask};

/// Scores for one image pair. Fields not produced by the evaluation are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iou: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iou_interior: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub iou_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub boundary_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ssim: Option<f64>,
    /// Entropy of the evaluated image.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub entropy_bits: Option<f64>,
    /// Entropy of the reference image.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_entropy_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub histogram_overlap: Option<f64>,
}

/// Means over all pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub sample_count: usize,
    #[serde(flatten)]
    pub mean: PairMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bf1_tolerance: Option<f64>,
    pub per_image: Vec<PairMetrics>,
    pub aggregate: AggregateMetrics,
}

const COLUMNS: [&str; 8] = [
    "iou",
    "iou_interior",
    "iou_mean",
    "boundary_f1",
    "ssim",
    "entropy_bits",
    "reference_entropy_bits",
    "histogram_overlap",
];

fn fields(m: &PairMetrics) -> [Option<f64>; 8] {
    [
        m.iou,
        m.iou_interior,
        m.iou_mean,
        m.boundary_f1,
        m.ssim,
        m.entropy_bits,
        m.reference_entropy_bits,
        m.histogram_overlap,
    ]
}

fn aggregate(per_image: &[PairMetrics]) -> AggregateMetrics {
    let n = per_image.len();
    let mut sums = [None::<f64>; 8];
    for m in per_image {
        for (s, v) in sums.iter_mut().zip(fields(m)) {
            if let Some(v) = v {
                *s = Some(s.unwrap_or(0.0) + v);
            }
        }
    }
    let mean = sums.map(|s| s.map(|v| v / n as f64));
    AggregateMetrics {
        sample_count: n,
        mean: PairMetrics {
            id: "aggregate".into(),
            iou: mean[0],
            iou_interior: mean[1],
            iou_mean: mean[2],
            boundary_f1: mean[3],
            ssim: mean[4],
            entropy_bits: mean[5],
            reference_entropy_bits: mean[6],
            histogram_overlap: mean[7],
        },
    }
}

/// IoU (boundary class, interior class, their mean) and Boundary F1 per pair.
pub fn evaluate_segmentation(
    pairs: &[(String, SegmentationMask, SegmentationMask)],
    theta: f64,
    exec: Exec,
) -> Result<MetricsReport> {
    let per_image = exec
        .map(pairs, |(id, pred, gt)| -> Result<PairMetrics> {
            let b = iou(pred, gt)?;
            let i = iou_interior(pred, gt)?;
            Ok(PairMetrics {
                id: id.clone(),
                iou: Some(b),
                iou_interior: Some(i),
                iou_mean: Some(0.5 * (b + i)),
                boundary_f1: Some(boundary_f1(pred, gt, theta)?),
                ..PairMetrics::default()
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        kind: "segmentation".into(),
        bf1_tolerance: Some(theta),
        aggregate: aggregate(&per_image),
        per_image,
    })
}

/// SSIM, entropy of both images and histogram overlap per (image, reference) pair.
pub fn evaluate_realism(pairs: &[(String, Micrograph, Micrograph)], exec: Exec) -> Result<MetricsReport> {
    let per_image = exec
        .map(pairs, |(id, img, reference)| -> Result<PairMetrics> {
            Ok(PairMetrics {
                id: id.clone(),
                ssim: Some(ssim(img, reference)?),
                entropy_bits: Some(shannon_entropy(img, 256)),
                reference_entropy_bits: Some(shannon_entropy(reference, 256)),
                histogram_overlap: Some(histogram_overlap(img, reference, 256)),
                ..PairMetrics::default()
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        kind: "realism".into(),
        bf1_tolerance: None,
        aggregate: aggregate(&per_image),
        per_image,
    })
}

impl MetricsReport {
    /// One row per pair plus a trailing `aggregate` row; absent values are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for c in COLUMNS {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for m in self.per_image.iter().chain(std::iter::once(&self.aggregate.mean)) {
            out.push_str(&m.id);
            for v in fields(m) {
                out.push(',');
                if let Some(v) = v {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, json_path: &Path, csv_path: &Path) -> Result<()> {
        crate::io::write_json(json_path, self)?;
        crate::io::write_text(csv_path, &self.to_csv())
    }
}
