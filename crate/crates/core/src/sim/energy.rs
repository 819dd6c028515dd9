use serde::{Deserialize, Serialize};

use super::PhaseFieldState;

/// Discrete free energy, split into its three contributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub bulk: f64,
    pub interaction: f64,
    pub gradient: f64,
    pub total: f64,
}

/// Evaluates the free energy of a state.
///
/// The gradient term uses forward differences with periodic wrap,
/// `(κ/2) Σ_r [(η(x+1) - η(x))² + (η(y+1) - η(y))²]`. This is the discrete
/// energy whose variational derivative is exactly the 5-point Laplacian
/// used by the stepper, so explicit steps below the stability bound
/// decrease it monotonically.
pub fn free_energy(state: &PhaseFieldState) -> EnergyReport {
    let (width, height) = (state.width(), state.height());
    let kappa = state.params().kappa;
    let dx = state.params().dx;
    let cell = dx * dx;

    let mut bulk = 0.0;
    let mut gradient = 0.0;
    let mut quartic = vec![0.0; width * height];
    for f in state.fields() {
        let b = f.bbox;
        for ly in 0..b.h {
            let gy = (b.y0 + ly) % height;
            for lx in 0..b.w {
                let gx = (b.x0 + lx) % width;
                let e2 = f.data[ly * b.w + lx] * f.data[ly * b.w + lx];
                bulk += -0.5 * e2 + 0.25 * e2 * e2;
                quartic[gy * width + gx] += e2 * e2;
            }
        }

        // Differences (x, x+1) for every pair touching the box. With a box
        // narrower than the grid the pair starting one pixel left of the box
        // also contributes.
        let get = |lx: isize, ly: isize| -> f64 {
            let lx = if b.w == width { lx.rem_euclid(width as isize) } else { lx };
            let ly = if b.h == height { ly.rem_euclid(height as isize) } else { ly };
            if lx < 0 || ly < 0 || lx >= b.w as isize || ly >= b.h as isize {
                0.0
            } else {
                f.data[ly as usize * b.w + lx as usize]
            }
        };
        let x_start = if b.w == width { 0 } else { -1 };
        let y_start = if b.h == height { 0 } else { -1 };
        let mut g = 0.0;
        for ly in 0..b.h as isize {
            for lx in x_start..b.w as isize {
                let d = get(lx + 1, ly) - get(lx, ly);
                g += d * d;
            }
        }
        for ly in y_start..b.h as isize {
            for lx in 0..b.w as isize {
                let d = get(lx, ly + 1) - get(lx, ly);
                g += d * d;
            }
        }
        gradient += 0.5 * kappa * g / (dx * dx);
    }

    let s = state.sum_of_squares();
    let interaction: f64 = s
        .iter()
        .zip(&quartic)
        .map(|(&s, &q)| 0.5 * (s * s - q))
        .sum();

    let bulk = bulk * cell;
    let interaction = interaction * cell;
    let gradient = gradient * cell;
    EnergyReport {
        bulk,
        interaction,
        gradient,
        total: bulk + interaction + gradient,
    }
}
