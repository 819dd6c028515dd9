use serde::{Deserialize, Serialize};

use super::field::{ActiveBox, GrainField};
use super::state::{accumulate_squares, PhaseFieldState};
use super::{
    SimParams, DEATH_THRESHOLD, GROW_STEP, GROW_THRESHOLD, RETIGHTEN_EVERY, RETIGHTEN_MARGIN,
    RETIGHTEN_THRESHOLD,
};
use crate::{rendering, Error, Exec, InstanceMap, Result};

/// Storage strategy for the stepper.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    /// Per-grain active boxes that follow the grain.
    #[default]
    Sparse,
    /// Every field spans the whole grid.
    Dense,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOptions {
    pub mode: StepMode,
    pub exec: Exec,
}

impl StepOptions {
    pub fn new(mode: StepMode, exec: Exec) -> Self {
        StepOptions { mode, exec }
    }
}

impl PhaseFieldState {
    /// One explicit Euler step with the default options (sparse, parallel).
    pub fn step(&mut self) {
        self.step_with(StepOptions::default());
    }

    pub fn step_with(&mut self, opts: StepOptions) {
        let (width, height) = (self.width, self.height);
        match opts.mode {
            StepMode::Dense => {
                if self.fields.iter().any(|f| !f.bbox.is_full(width, height)) {
                    self.densify();
                }
            }
            StepMode::Sparse => {
                opts.exec.for_each_mut(&mut self.fields, |_, f| {
                    let sides = f.edge_activity(GROW_THRESHOLD, width, height);
                    if sides.iter().any(|&s| s) {
                        let grown = f.grown_box(sides, GROW_STEP, width, height);
                        f.rebox(grown, width, height);
                    }
                });
            }
        }

        let mut s = vec![0.0; width * height];
        accumulate_squares(&self.fields, width, height, &mut s, opts.exec);

        let params = self.params;
        opts.exec.for_each_mut(&mut self.fields, |_, f| {
            f.data = advance_field(f, &s, width, height, &params);
        });

        self.time += params.dt;
        self.steps += 1;
        self.fields.retain(|f| f.max_value() >= DEATH_THRESHOLD);

        if opts.mode == StepMode::Sparse && self.steps.is_multiple_of(RETIGHTEN_EVERY) {
            opts.exec.for_each_mut(&mut self.fields, |_, f| {
                let tight = f
                    .support_box(RETIGHTEN_THRESHOLD, RETIGHTEN_MARGIN, width, height)
                    .unwrap_or(ActiveBox { x0: f.bbox.x0, y0: f.bbox.y0, w: 1, h: 1 });
                f.rebox(tight, width, height);
            });
        }
    }
}

/// New values of one field over its own box, reading the frozen Σ_j η_j².
fn advance_field(field: &GrainField, s: &[f64], width: usize, height: usize, p: &SimParams) -> Vec<f64> {
    let b = field.bbox;
    let (w, h) = (b.w, b.h);
    let pad = field.padded(width, height);
    let pw = w + 2;
    let rate = p.dt * p.mobility;
    let kappa = p.kappa / (p.dx * p.dx);
    let mut out = vec![0.0; w * h];
    for ly in 0..h {
        let gy = (b.y0 + ly) % height;
        let srow = &s[gy * width..(gy + 1) * width];
        let up = &pad[ly * pw..(ly + 1) * pw];
        let mid = &pad[(ly + 1) * pw..(ly + 2) * pw];
        let down = &pad[(ly + 2) * pw..(ly + 3) * pw];
        let dst = &mut out[ly * w..(ly + 1) * w];
        for lx in 0..w {
            let mut gx = b.x0 + lx;
            if gx >= width {
                gx -= width;
            }
            let eta = mid[lx + 1];
            let lap = mid[lx] + mid[lx + 2] + up[lx + 1] + down[lx + 1] - 4.0 * eta;
            let others = srow[gx] - eta * eta;
            let dfdeta = -eta + eta * eta * eta + 2.0 * eta * others - kappa * lap;
            dst[lx] = eta - rate * dfdeta;
        }
    }
    out
}

/// Instance map captured during an evolution run.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub time: f64,
    pub instances: InstanceMap,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolutionSeries {
    pub snapshots: Vec<Snapshot>,
}

impl EvolutionSeries {
    pub fn as_pairs(&self) -> Vec<(f64, InstanceMap)> {
        self.snapshots
            .iter()
            .map(|s| (s.time, s.instances.clone()))
            .collect()
    }
}

/// Applies `n_steps` steps, recording an instance map every
/// `snapshot_every` steps (counted from the start of this call).
pub fn evolve(
    state: &mut PhaseFieldState,
    n_steps: u64,
    snapshot_every: u64,
    opts: StepOptions,
) -> Result<EvolutionSeries> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
    }
    if snapshot_every == 0 {
        return Err(Error::InvalidParameter("snapshot_every must be >= 1".into()));
    }
    let mut series = EvolutionSeries::default();
    for k in 1..=n_steps {
        state.step_with(opts);
        if k % snapshot_every == 0 {
            series.snapshots.push(Snapshot {
                step: state.steps,
                time: state.time,
                instances: rendering::instance_map(state)?,
            });
        }
    }
    Ok(series)
}
