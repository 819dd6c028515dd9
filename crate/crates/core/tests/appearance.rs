use std::path::PathBuf;

use grainforge::appearance::{ingest_translated, texturize, verify_morphology_preserved, AppearanceParams};
use grainforge::dataset::{build_manifest, PairRecord};
use grainforge::io::{write_mask, write_micrograph};
use grainforge::metrics::{histogram, shannon_entropy};
use grainforge::rendering::{boundary_mask, composite_field, instance_map, DEFAULT_TAU};
use grainforge::seeding::{generate_structure, CorpusOptions};
use grainforge::sim::{PhaseFieldState, SimParams, StepOptions};
use grainforge::{Exec, InstanceMap, Micrograph, SegmentationMask};

struct Sample {
    phi: Micrograph,
    labels: InstanceMap,
    mask: SegmentationMask,
}

/// Evolved structure with roughly paper-sized grains on a smaller grid.
fn sample(seed: u64) -> Sample {
    let size = 160;
    let init = generate_structure(11, size, size, seed, CorpusOptions::default()).unwrap();
    let mut s = PhaseFieldState::from_labels(&init, SimParams::default()).unwrap();
    for _ in 0..300 {
        s.step_with(StepOptions::default());
    }
    let phi = composite_field(&s);
    Sample {
        mask: boundary_mask(&phi, DEFAULT_TAU).unwrap(),
        labels: instance_map(&s).unwrap(),
        phi,
    }
}

fn textured(s: &Sample, seed: u64) -> Micrograph {
    texturize(&s.phi, &s.labels, &AppearanceParams { rng_seed: seed, ..AppearanceParams::default() }).unwrap()
}

#[test]
fn default_texture_adds_entropy_and_fills_the_histogram() {
    let s = sample(1);
    let out = textured(&s, 3);
    let (before, after) = (shannon_entropy(&s.phi, 256), shannon_entropy(&out, 256));
    assert!(after - before >= 1.0, "{before} -> {after}");
    let occupied = histogram(&out, 256).iter().filter(|&&p| p > 0.0).count();
    assert!(occupied >= 32, "{occupied} bins");
}

#[test]
fn boundaries_stay_the_darkest_feature_without_noise() {
    let s = sample(2);
    let quiet = AppearanceParams {
        speckle_strength: 0.0,
        detector_noise_sigma: 0.0,
        scanline_jitter: 0,
        rng_seed: 5,
        ..AppearanceParams::default()
    };
    let out = texturize(&s.phi, &s.labels, &quiet).unwrap();
    let (w, h) = out.dims();
    for y in 0..h {
        let Some(ridge_min) = (0..w)
            .filter(|&x| s.mask.is_boundary(x, y))
            .map(|x| out.get(x, y))
            .reduce(f64::min)
        else {
            continue;
        };
        for x in 0..w {
            let next_to_boundary = !s.mask.is_boundary(x, y)
                && (s.mask.is_boundary((x + 1) % w, y) || s.mask.is_boundary((x + w - 1) % w, y));
            if next_to_boundary {
                assert!(out.get(x, y) >= ridge_min, "row {y} col {x}");
            }
        }
    }
}

#[test]
fn matched_masks_outscore_mismatched_ones() {
    let samples: Vec<Sample> = (10..15).map(sample).collect();
    for (i, s) in samples.iter().enumerate() {
        let img = textured(s, i as u64);
        let own = verify_morphology_preserved(&s.mask, &img, 0.6).unwrap();
        let other = &samples[(i + 1) % samples.len()];
        let foreign = verify_morphology_preserved(&other.mask, &img, 0.6).unwrap();
        assert!(own.pass, "sample {i}: {}", own.score);
        assert!(foreign.score < own.score, "sample {i}: {} vs {}", foreign.score, own.score);
    }
}

#[test]
fn a_corpus_structure_keeps_its_morphology() {
    let init = generate_structure(112, 512, 512, 7, CorpusOptions::default()).unwrap();
    let mut state = PhaseFieldState::from_labels(&init, SimParams::default()).unwrap();
    for _ in 0..1000 {
        state.step_with(StepOptions::default());
    }
    let phi = composite_field(&state);
    let s = Sample {
        mask: boundary_mask(&phi, DEFAULT_TAU).unwrap(),
        labels: instance_map(&state).unwrap(),
        phi,
    };
    // Baseline 0.808 for this structure.
    let check = verify_morphology_preserved(&s.mask, &textured(&s, 0), 0.8).unwrap();
    assert!(check.pass, "{}", check.score);
    assert!((check.score - 0.808).abs() < 0.005, "{}", check.score);
}

#[test]
fn ingest_annotates_every_pair_and_isolates_a_corrupt_file() {
    let root = tempfile::tempdir().unwrap();
    let translated = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(root.path().join("images")).unwrap();
    std::fs::create_dir_all(root.path().join("masks")).unwrap();
    let mut pairs = Vec::new();
    for k in 0..10u64 {
        let s = sample(30 + k);
        let name = format!("s{k:04}_000.png");
        write_micrograph(&root.path().join("images").join(&name), &s.phi).unwrap();
        write_mask(&root.path().join("masks").join(&name), &s.mask).unwrap();
        write_micrograph(&translated.path().join(&name), &textured(&s, k)).unwrap();
        pairs.push(PairRecord {
            image: PathBuf::from("images").join(&name),
            mask: PathBuf::from("masks").join(&name),
            structure_id: format!("s{k:04}"),
            variant: 0,
            augmentation: None,
        });
    }
    let manifest = build_manifest(&pairs, (0.8, 0.1, 0.1), 0).unwrap();

    let out = ingest_translated(translated.path(), &manifest, root.path(), 0.6, Exec::Parallel);
    assert_eq!(out.entries.len(), 10);
    for e in &out.entries {
        let v = e.validation.as_ref().unwrap();
        assert!(v.pass, "{:?}", v);
        assert!(e.image.starts_with(translated.path()));
    }

    let broken = translated.path().join("s0003_000.png");
    let bytes = std::fs::read(&broken).unwrap();
    std::fs::write(&broken, &bytes[..bytes.len() / 3]).unwrap();
    let out = ingest_translated(translated.path(), &manifest, root.path(), 0.6, Exec::Sequential);
    for e in &out.entries {
        let v = e.validation.as_ref().unwrap();
        if e.structure_id == "s0003" {
            assert!(!v.pass && v.error.is_some() && v.score.is_none());
            assert!(e.image.starts_with("images"));
        } else {
            assert!(v.pass);
        }
    }
}

#[test]
fn ingesting_an_empty_manifest_yields_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut manifest = build_manifest(
        &[PairRecord {
            image: "a.png".into(),
            mask: "a.png".into(),
            structure_id: "a".into(),
            variant: 0,
            augmentation: None,
        }],
        (1.0, 0.0, 0.0),
        0,
    )
    .unwrap();
    manifest.entries.clear();
    let out = ingest_translated(dir.path(), &manifest, dir.path(), 0.6, Exec::Parallel);
    assert!(out.entries.is_empty());
}
