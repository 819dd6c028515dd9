use std::collections::HashMap;

use grainforge::morphometry::{connected_components, grain_stats, kinetics, size_distribution};
use grainforge::rendering::{boundary_mask, composite_field, instance_map, DEFAULT_TAU};
use grainforge::seeding::{generate_structure, voronoi, CorpusOptions, SeedSet};
use grainforge::sim::{evolve, PhaseFieldState, SimParams, StepOptions};
use grainforge::{InstanceMap, SegmentationMask};
use proptest::prelude::*;

fn evolved(grains: usize, size: usize, steps: usize, seed: u64) -> PhaseFieldState {
    let labels = generate_structure(grains, size, size, seed, CorpusOptions::default()).unwrap();
    let mut s = PhaseFieldState::from_labels(&labels, SimParams::default()).unwrap();
    for _ in 0..steps {
        s.step();
    }
    s
}

fn roll(mask: &SegmentationMask, dx: usize, dy: usize) -> SegmentationMask {
    let (w, h) = mask.dims();
    let mut data = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            data[((y + dy) % h) * w + (x + dx) % w] = mask.data[y * w + x];
        }
    }
    SegmentationMask::new(w, h, data).unwrap()
}

#[test]
fn instance_adjacency_lies_near_the_mask_boundary() {
    let s = evolved(16, 96, 200, 1);
    let mask = boundary_mask(&composite_field(&s), DEFAULT_TAU).unwrap();
    let inst = instance_map(&s).unwrap();
    let (w, h) = inst.dims();
    let near_boundary = |x: usize, y: usize| {
        (-2i64..=2).any(|dy| {
            (-2i64..=2).any(|dx| {
                let nx = (x as i64 + dx).rem_euclid(w as i64) as usize;
                let ny = (y as i64 + dy).rem_euclid(h as i64) as usize;
                dx * dx + dy * dy <= 4 && mask.is_boundary(nx, ny)
            })
        })
    };
    for y in 0..h {
        for x in 0..w {
            let l = inst.get(x, y);
            let spans = [((x + 1) % w, y), (x, (y + 1) % h)]
                .iter()
                .any(|&(nx, ny)| inst.get(nx, ny) != l);
            if spans {
                assert!(near_boundary(x, y), "pixel ({x}, {y})");
            }
        }
    }
}

#[test]
fn boundary_fraction_of_an_evolved_structure_is_moderate() {
    let s = evolved(16, 96, 200, 2);
    let mask = boundary_mask(&composite_field(&s), DEFAULT_TAU).unwrap();
    let frac = mask.boundary_count() as f64 / (96.0 * 96.0);
    assert!((0.05..=0.25).contains(&frac), "{frac}");
}

#[test]
fn components_of_the_mask_recover_the_simulated_grains() {
    let s = evolved(20, 128, 200, 3);
    let mask = boundary_mask(&composite_field(&s), DEFAULT_TAU).unwrap();
    let k_inst = instance_map(&s).unwrap().grain_count() as f64;
    let k_cc = connected_components(&mask, true).unwrap().grain_count() as f64;
    assert!((k_cc - k_inst).abs() <= 0.05 * k_inst, "{k_cc} vs {k_inst}");

    let stats = grain_stats(&connected_components(&mask, false).unwrap(), 1.0);
    let area: usize = stats.iter().map(|g| g.area_px).sum();
    assert_eq!(area + mask.boundary_count(), 128 * 128);
}

#[test]
fn regularized_sizes_are_tighter_than_raw_voronoi() {
    let spread = |map: &InstanceMap| {
        let stats = grain_stats(map, 1.0);
        let hist = size_distribution(&stats, 20).unwrap();
        assert_eq!(hist.total(), stats.len());
        let n = stats.len() as f64;
        let mean = stats.iter().map(|g| g.area_px as f64).sum::<f64>() / n;
        stats.iter().map(|g| (g.area_px as f64 - mean).powi(2)).sum::<f64>() / n
    };
    let raw = voronoi(&SeedSet::random(112, 512, 512, 8).unwrap());
    let relaxed = generate_structure(112, 512, 512, 8, CorpusOptions::default()).unwrap();
    assert!(spread(&relaxed) < spread(&raw));
}

#[test]
fn kinetics_mean_matches_a_direct_computation() {
    let labels = generate_structure(16, 80, 80, 6, CorpusOptions::default()).unwrap();
    let mut s = PhaseFieldState::from_labels(&labels, SimParams::default()).unwrap();
    let series = evolve(&mut s, 200, 50, StepOptions::default()).unwrap();
    let traj = kinetics(&series.as_pairs(), 1.0).unwrap();
    assert_eq!(traj.times.len(), 4);
    for (snap, mean) in series.snapshots.iter().zip(&traj.mean_size) {
        let stats = grain_stats(&snap.instances, 1.0);
        let direct = stats
            .iter()
            .map(|g| 2.0 * (g.area_px as f64 / std::f64::consts::PI).sqrt())
            .sum::<f64>()
            / stats.len() as f64;
        assert!((direct - mean).abs() <= 1e-9);
    }
}

fn blob_mask(w: usize, h: usize, blobs: &[(usize, usize, usize)]) -> SegmentationMask {
    // Interior where some disk covers the pixel, boundary elsewhere.
    let mut data = vec![1u8; w * h];
    for &(cx, cy, r) in blobs {
        for y in 0..h {
            for x in 0..w {
                let (dx, dy) = (x as i64 - cx as i64, y as i64 - cy as i64);
                if dx * dx + dy * dy <= (r * r) as i64 {
                    data[y * w + x] = 0;
                }
            }
        }
    }
    SegmentationMask::new(w, h, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn periodic_components_survive_translation(
        bits in proptest::collection::vec(prop::bool::weighted(0.35), 24 * 20),
        dx in 0usize..24,
        dy in 0usize..20,
    ) {
        let mask = SegmentationMask::new(24, 20, bits.iter().map(|&b| b as u8).collect()).unwrap();
        let a = connected_components(&mask, true).unwrap();
        let b = connected_components(&roll(&mask, dx, dy), true).unwrap();
        prop_assert_eq!(a.grain_count(), b.grain_count());
        let mut fwd = HashMap::new();
        let mut back = HashMap::new();
        for y in 0..20 {
            for x in 0..24 {
                let (la, lb) = (a.get(x, y), b.get((x + dx) % 24, (y + dy) % 20));
                prop_assert_eq!(*fwd.entry(la).or_insert(lb), lb);
                prop_assert_eq!(*back.entry(lb).or_insert(la), la);
            }
        }
    }

    #[test]
    fn circularity_stays_below_the_bound(
        bits in proptest::collection::vec(prop::bool::weighted(0.4), 16 * 16),
        blobs in proptest::collection::vec((0usize..64, 0usize..64, 1usize..20), 1..5),
    ) {
        let noisy = SegmentationMask::new(16, 16, bits.iter().map(|&b| b as u8).collect()).unwrap();
        for mask in [noisy, blob_mask(64, 64, &blobs)] {
            for g in grain_stats(&connected_components(&mask, false).unwrap(), 1.0) {
                prop_assert!(g.circularity <= 1.1, "{}", g.circularity);
            }
        }
    }
}
