//! Training-corpus assembly: patch extraction, paired augmentation,
//! structure-level splits, manifests and their validation.
//!
//! On disk a dataset lives under one root as
//! `<root>/{images,masks}/<structure>_<variant>.png` plus `manifest.json`;
//! manifest paths are relative to the root.

mod augment;
mod manifest;
mod patches;

pub use augment::{apply_descriptor, augment_pair, sample_descriptor, AugmentationDescriptor, MAX_TRANSLATION_FRACTION};
pub use manifest::{
    build_manifest, pair_file_name, validate_manifest, DatasetManifest, EntryValidation, ManifestEntry, PairRecord,
    Split, ValidationReport, Violation, ViolationKind, MANIFEST_FORMAT_VERSION,
};
pub use patches::{extract_mask_patches, extract_patches, patch_origins, Patch, PatchMode};
