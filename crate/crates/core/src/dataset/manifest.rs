use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::AugmentationDescriptor;
use crate::{io, Error, Exec, Result};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Per-entry outcome of ingesting an externally translated image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryValidation {
    pub score: Option<f64>,
    pub min_score: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub structure_id: String,
    pub variant: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub augmentation: Option<AugmentationDescriptor>,
    pub split: Split,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub validation: Option<EntryValidation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// Domain tag: `synthetic` for simulated morphologies, `experimental` for real images.
    pub domain: String,
    pub rng_seed: u64,
    /// (train, val, test).
    pub split_fractions: (f64, f64, f64),
    pub provenance: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

/// An image/mask pair awaiting split assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRecord {
    pub image: PathBuf,
    pub mask: PathBuf,
    pub structure_id: String,
    pub variant: usize,
    pub augmentation: Option<AugmentationDescriptor>,
}

/// `<structure>_<variant>.png`.
pub fn pair_file_name(structure_id: &str, variant: usize) -> String {
    format!("{structure_id}_{variant:03}.png")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn split_key(structure_id: &str, rng_seed: u64) -> u64 {
    let mut z = fnv1a(structure_id.as_bytes()) ^ rng_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Assigns whole structures to splits: structures are ordered by a seeded
/// hash of their id and cut at the rounded cumulative fractions, so every
/// variant of one structure lands in the same split.
pub fn build_manifest(pairs: &[PairRecord], split_fractions: (f64, f64, f64), rng_seed: u64) -> Result<DatasetManifest> {
    let (ft, fv, fs) = split_fractions;
    if [ft, fv, fs].iter().any(|f| !(0.0..=1.0).contains(f)) || (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "split fractions must be in [0, 1] and sum to 1, got {split_fractions:?}"
        )));
    }
    let mut structures: Vec<&str> = pairs.iter().map(|p| p.structure_id.as_str()).collect();
    structures.sort_unstable();
    structures.dedup();
    structures.sort_by_key(|s| (split_key(s, rng_seed), *s));
    let n = structures.len();
    let n_train = (ft * n as f64).round() as usize;
    let n_val = ((fv * n as f64).round() as usize).min(n - n_train);
    let n_test = n - n_train - n_val;
    for (name, f, count) in [("train", ft, n_train), ("val", fv, n_val), ("test", fs, n_test)] {
        if f > 0.0 && count == 0 {
            return Err(Error::InvalidInput(format!(
                "{name} split has fraction {f} but receives no structure out of {n}"
            )));
        }
    }
    let assigned: BTreeMap<&str, Split> = structures
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            (*s, split)
        })
        .collect();
    Ok(DatasetManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        domain: "synthetic".into(),
        rng_seed,
        split_fractions,
        provenance: vec![format!("grainforge {}", env!("CARGO_PKG_VERSION"))],
        entries: pairs
            .iter()
            .map(|p| ManifestEntry {
                image: p.image.clone(),
                mask: p.mask.clone(),
                structure_id: p.structure_id.clone(),
                variant: p.variant,
                augmentation: p.augmentation,
                split: assigned[p.structure_id.as_str()],
                validation: None,
            })
            .collect(),
    })
}

impl DatasetManifest {
    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }

    pub fn structures_in(&self, split: Split) -> usize {
        self.entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| e.structure_id.as_str())
            .collect::<HashSet<_>>()
            .len()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        io::read_json(path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    FormatVersion,
    DuplicatePath,
    MissingFile,
    UnreadableFile,
    DimensionMismatch,
    NonBinaryMask,
    SplitLeakage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub entry: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

fn check_entry(index: usize, entry: &ManifestEntry, root: &Path) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |kind, detail: String| out.push(Violation { kind, entry: Some(index), detail });
    let image = root.join(&entry.image);
    let mask = root.join(&entry.mask);
    let mut dims = [None, None];
    for (slot, path) in [&image, &mask].into_iter().enumerate() {
        if !path.is_file() {
            push(ViolationKind::MissingFile, path.display().to_string());
            continue;
        }
        match image::image_dimensions(path) {
            Ok(d) => dims[slot] = Some(d),
            Err(e) => push(ViolationKind::UnreadableFile, format!("{}: {e}", path.display())),
        }
    }
    if let [Some(a), Some(b)] = dims {
        if a != b {
            push(
                ViolationKind::DimensionMismatch,
                format!("image {}x{} vs mask {}x{}", a.0, a.1, b.0, b.1),
            );
        }
    }
    if dims[1].is_some() {
        match io::read_mask_raw(&mask) {
            Ok((_, _, data)) => {
                let bad = data.iter().filter(|&&v| v != 0 && v != 255).count();
                if bad > 0 {
                    push(ViolationKind::NonBinaryMask, format!("{}: {bad} pixels not in {{0, 255}}", mask.display()));
                }
            }
            Err(e) => push(ViolationKind::UnreadableFile, e.to_string()),
        }
    }
    out
}

/// Existence, readability, dimension, binary-mask, path-uniqueness and
/// split-leakage checks. Never fails; problems are report entries.
pub fn validate_manifest(manifest: &DatasetManifest, root: &Path, exec: Exec) -> ValidationReport {
    let mut violations = Vec::new();
    if manifest.format_version != MANIFEST_FORMAT_VERSION {
        violations.push(Violation {
            kind: ViolationKind::FormatVersion,
            entry: None,
            detail: format!("format_version {} (expected {MANIFEST_FORMAT_VERSION})", manifest.format_version),
        });
    }
    let mut seen = HashSet::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        for p in [&e.image, &e.mask] {
            if !seen.insert(p.clone()) {
                violations.push(Violation {
                    kind: ViolationKind::DuplicatePath,
                    entry: Some(i),
                    detail: p.display().to_string(),
                });
            }
        }
    }
    let indexed: Vec<(usize, &ManifestEntry)> = manifest.entries.iter().enumerate().collect();
    for v in exec.map(&indexed, |(i, e)| check_entry(*i, e, root)) {
        violations.extend(v);
    }
    let mut splits: BTreeMap<&str, Vec<Split>> = BTreeMap::new();
    for e in &manifest.entries {
        let s = splits.entry(&e.structure_id).or_default();
        if !s.contains(&e.split) {
            s.push(e.split);
        }
    }
    for (structure, s) in splits {
        if s.len() > 1 {
            violations.push(Violation {
                kind: ViolationKind::SplitLeakage,
                entry: None,
                detail: format!("structure {structure} appears in {s:?}"),
            });
        }
    }
    ValidationReport {
        entries_checked: manifest.entries.len(),
        violations,
    }
}
