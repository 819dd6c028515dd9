//! Clean renders of a phase-field state: the composite field φ = Σ η_i²,
//! thresholded boundary masks, and argmax instance maps.

use crate::sim::PhaseFieldState;
use crate::{Error, InstanceMap, Micrograph, Result, SegmentationMask};

/// Default boundary threshold on φ.
pub const DEFAULT_TAU: f64 = 0.8;

/// φ(r) = Σ_i η_i(r)², clamped to `[0, 1]`.
pub fn composite_field(state: &PhaseFieldState) -> Micrograph {
    Micrograph::from_clamped(state.width(), state.height(), state.sum_of_squares())
}

/// Boundary class wherever φ < τ.
pub fn boundary_mask(phi: &Micrograph, tau: f64) -> Result<SegmentationMask> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {tau}")));
    }
    Ok(SegmentationMask {
        width: phi.width,
        height: phi.height,
        data: phi.data.iter().map(|&v| (v < tau) as u8).collect(),
    })
}

/// Labels every pixel with the grain whose order parameter is largest, ties
/// going to the lowest grain id, then compacts labels to `1..=K`.
pub fn instance_map(state: &PhaseFieldState) -> Result<InstanceMap> {
    let (width, height) = (state.width(), state.height());
    let fields = state.fields();
    if fields.is_empty() {
        return Err(Error::NoSurvivingGrains);
    }
    // Fields are kept sorted by label, so "lowest index" == "lowest id".
    let n = width * height;
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut owner = vec![u32::MAX; n];
    let mut covered = vec![0u32; n];
    for (i, f) in fields.iter().enumerate() {
        let b = f.bbox;
        for ly in 0..b.h {
            let gy = (b.y0 + ly) % height;
            for lx in 0..b.w {
                let p = gy * width + (b.x0 + lx) % width;
                let v = f.data[ly * b.w + lx];
                covered[p] += 1;
                if v > best[p] {
                    best[p] = v;
                    owner[p] = i as u32;
                }
            }
        }
    }
    // Where no stored value is positive, an implicit zero outside some box
    // may win or tie; resolve those pixels exactly.
    for p in 0..n {
        if (covered[p] as usize) < fields.len() && best[p] <= 0.0 {
            let (x, y) = (p % width, p / width);
            let mut top = f64::NEG_INFINITY;
            for (i, f) in fields.iter().enumerate() {
                let v = f.value_at(x, y, width, height);
                if v > top {
                    top = v;
                    owner[p] = i as u32;
                }
            }
        }
    }
    let mut used = vec![false; fields.len()];
    for &o in &owner {
        used[o as usize] = true;
    }
    let mut remap = vec![0u16; fields.len()];
    let mut next = 0u16;
    for (i, u) in used.iter().enumerate() {
        if *u {
            next += 1;
            remap[i] = next;
        }
    }
    InstanceMap::new(width, height, owner.iter().map(|&o| remap[o as usize]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SimParams;

    fn labels(w: usize, h: usize, f: impl Fn(usize, usize) -> u16) -> InstanceMap {
        InstanceMap::new(w, h, (0..w * h).map(|i| f(i % w, i / w)).collect()).unwrap()
    }

    #[test]
    fn single_grain_renders_white() {
        let s = PhaseFieldState::from_labels(&labels(5, 5, |_, _| 1), SimParams::default()).unwrap();
        let phi = composite_field(&s);
        assert!(phi.data.iter().all(|&v| v == 1.0));
        assert_eq!(boundary_mask(&phi, 0.8).unwrap().boundary_count(), 0);
    }

    #[test]
    fn zero_state_renders_black_and_has_no_instances() {
        let s = PhaseFieldState::zeros(5, 5, 2, SimParams::default()).unwrap();
        let phi = composite_field(&s);
        assert!(phi.data.iter().all(|&v| v == 0.0));
        assert_eq!(boundary_mask(&phi, 0.8).unwrap().boundary_count(), 25);
        let mut dead = s.clone();
        dead.step();
        assert!(matches!(instance_map(&dead), Err(Error::NoSurvivingGrains)));
    }

    #[test]
    fn tau_must_be_inside_unit_interval() {
        let phi = Micrograph::constant(2, 2, 0.5);
        assert!(boundary_mask(&phi, 0.0).is_err());
        assert!(boundary_mask(&phi, 1.0).is_err());
    }

    #[test]
    fn instance_map_round_trips_initial_labels() {
        let m = labels(40, 30, |x, y| 1 + ((x / 10) + 4 * (y / 10)) as u16);
        let s = PhaseFieldState::from_labels(&m, SimParams::default()).unwrap();
        assert_eq!(instance_map(&s).unwrap(), m);
    }

    #[test]
    fn instance_map_has_contiguous_labels_after_evolution() {
        let m = labels(48, 48, |x, y| if (x as f64 - 24.0).hypot(y as f64 - 24.0) < 3.0 { 2 } else { 1 });
        let mut s = PhaseFieldState::from_labels(&m, SimParams::default()).unwrap();
        for _ in 0..400 {
            s.step();
        }
        // the small disk shrinks away; only the matrix remains, relabelled 1
        let inst = instance_map(&s).unwrap();
        assert_eq!(inst.grain_count(), inst.max_label() as usize);
    }
}
