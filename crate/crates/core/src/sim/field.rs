use serde::{Deserialize, Serialize};

/// Rectangle on the periodic grid. `x0 < width`, `y0 < height`; the box
/// covers columns `x0, x0+1, … (mod width)` for `w` columns. A box with
/// `w == width` wraps onto itself along x (likewise for rows).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveBox {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl ActiveBox {
    pub fn full(width: usize, height: usize) -> Self {
        ActiveBox {
            x0: 0,
            y0: 0,
            w: width,
            h: height,
        }
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn is_full(&self, width: usize, height: usize) -> bool {
        self.w == width && self.h == height
    }

    #[inline]
    pub fn local_x(&self, gx: usize, width: usize) -> Option<usize> {
        local(self.x0, self.w, width, gx)
    }

    #[inline]
    pub fn local_y(&self, gy: usize, height: usize) -> Option<usize> {
        local(self.y0, self.h, height, gy)
    }
}

#[inline]
fn local(start: usize, len: usize, period: usize, g: usize) -> Option<usize> {
    let l = (g + period - start) % period;
    (l < len).then_some(l)
}

/// Smallest periodic interval `(start, len)` covering every occupied slot.
///
/// `occupied[k]` describes grid index `(origin + k) mod period`. When the
/// slice spans the whole period the largest circular gap is cut out;
/// otherwise the slice is treated as a line segment.
pub(crate) fn tight_interval(occupied: &[bool], origin: usize, period: usize) -> Option<(usize, usize)> {
    let n = occupied.len();
    let first = occupied.iter().position(|&o| o)?;
    if n < period {
        let last = occupied.iter().rposition(|&o| o).unwrap();
        return Some(((origin + first) % period, last - first + 1));
    }
    // Full circle: find the longest run of empty slots, wrapping around.
    let mut best_gap = 0usize;
    let mut best_gap_end = 0usize; // index just after the gap
    let mut run = 0usize;
    for k in 0..2 * n {
        if occupied[k % n] {
            run = 0;
        } else {
            run += 1;
            if run > best_gap && run <= n {
                best_gap = run;
                best_gap_end = (k + 1) % n;
            }
        }
    }
    if best_gap == 0 {
        return Some((0, period));
    }
    Some(((origin + best_gap_end) % period, n - best_gap))
}

/// Grows an interval by `margin` on both sides; saturates to the full period
/// with a canonical start of 0.
pub(crate) fn dilate_interval(start: usize, len: usize, margin: usize, period: usize) -> (usize, usize) {
    if len + 2 * margin >= period {
        (0, period)
    } else {
        ((start + period - margin) % period, len + 2 * margin)
    }
}

/// One grain's order parameter, stored inside its active box (row-major,
/// `bbox.w * bbox.h` values). Outside the box the field is exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GrainField {
    /// Grain identifier carried over from the seeding label map.
    pub label: u32,
    pub bbox: ActiveBox,
    pub data: Vec<f64>,
}

impl GrainField {
    pub fn new(label: u32, bbox: ActiveBox, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), bbox.area(), "field buffer must match its box");
        GrainField { label, bbox, data }
    }

    pub fn value_at(&self, gx: usize, gy: usize, width: usize, height: usize) -> f64 {
        match (self.bbox.local_x(gx, width), self.bbox.local_y(gy, height)) {
            (Some(lx), Some(ly)) => self.data[ly * self.bbox.w + lx],
            _ => 0.0,
        }
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Full-grid copy of the field.
    pub fn to_dense(&self, width: usize, height: usize) -> Vec<f64> {
        let mut out = vec![0.0; width * height];
        let b = self.bbox;
        for ly in 0..b.h {
            let gy = (b.y0 + ly) % height;
            for lx in 0..b.w {
                let gx = (b.x0 + lx) % width;
                out[gy * width + gx] = self.data[ly * b.w + lx];
            }
        }
        out
    }

    /// Moves the field into `new_box`. Values that fall outside are dropped.
    pub fn rebox(&mut self, new_box: ActiveBox, width: usize, height: usize) {
        if new_box == self.bbox {
            return;
        }
        let mut data = vec![0.0; new_box.area()];
        let b = self.bbox;
        for ly in 0..b.h {
            let gy = (b.y0 + ly) % height;
            let Some(ny) = new_box.local_y(gy, height) else {
                continue;
            };
            for lx in 0..b.w {
                let gx = (b.x0 + lx) % width;
                if let Some(nx) = new_box.local_x(gx, width) {
                    data[ny * new_box.w + nx] = self.data[ly * b.w + lx];
                }
            }
        }
        self.bbox = new_box;
        self.data = data;
    }

    /// Copy of the box with a one-pixel halo: zeros outside the box, or the
    /// periodic image when the box spans the whole grid along an axis.
    pub(crate) fn padded(&self, width: usize, height: usize) -> Vec<f64> {
        let (w, h) = (self.bbox.w, self.bbox.h);
        let pw = w + 2;
        let mut pad = vec![0.0; pw * (h + 2)];
        for ly in 0..h {
            let src = &self.data[ly * w..(ly + 1) * w];
            let row = &mut pad[(ly + 1) * pw..(ly + 2) * pw];
            row[1..=w].copy_from_slice(src);
            if w == width {
                row[0] = src[w - 1];
                row[w + 1] = src[0];
            }
        }
        if h == height {
            let (first, last) = (pw, h * pw);
            let top: Vec<f64> = pad[last..last + pw].to_vec();
            let bottom: Vec<f64> = pad[first..first + pw].to_vec();
            pad[..pw].copy_from_slice(&top);
            pad[(h + 1) * pw..].copy_from_slice(&bottom);
        }
        pad
    }

    /// Per-side growth request: (left, right, top, bottom).
    pub(crate) fn edge_activity(&self, threshold: f64, width: usize, height: usize) -> [bool; 4] {
        let b = self.bbox;
        let mut sides = [false; 4];
        if b.w < width {
            sides[0] = (0..b.h).any(|ly| self.data[ly * b.w].abs() > threshold);
            sides[1] = (0..b.h).any(|ly| self.data[ly * b.w + b.w - 1].abs() > threshold);
        }
        if b.h < height {
            sides[2] = self.data[..b.w].iter().any(|v| v.abs() > threshold);
            sides[3] = self.data[(b.h - 1) * b.w..].iter().any(|v| v.abs() > threshold);
        }
        sides
    }

    /// Box grown by `step` on the requested sides.
    pub(crate) fn grown_box(&self, sides: [bool; 4], step: usize, width: usize, height: usize) -> ActiveBox {
        let b = self.bbox;
        let (x0, w) = grow_axis(b.x0, b.w, sides[0], sides[1], step, width);
        let (y0, h) = grow_axis(b.y0, b.h, sides[2], sides[3], step, height);
        ActiveBox { x0, y0, w, h }
    }

    /// Bounding box of `|η| > threshold`, dilated by `margin`. `None` when the
    /// field has no such value.
    pub(crate) fn support_box(&self, threshold: f64, margin: usize, width: usize, height: usize) -> Option<ActiveBox> {
        let b = self.bbox;
        let mut cols = vec![false; b.w];
        let mut rows = vec![false; b.h];
        for ly in 0..b.h {
            for lx in 0..b.w {
                if self.data[ly * b.w + lx].abs() > threshold {
                    cols[lx] = true;
                    rows[ly] = true;
                }
            }
        }
        let (xs, xl) = tight_interval(&cols, b.x0, width)?;
        let (ys, yl) = tight_interval(&rows, b.y0, height)?;
        let (x0, w) = dilate_interval(xs, xl, margin, width);
        let (y0, h) = dilate_interval(ys, yl, margin, height);
        Some(ActiveBox { x0, y0, w, h })
    }
}

fn grow_axis(start: usize, len: usize, low: bool, high: bool, step: usize, period: usize) -> (usize, usize) {
    if len >= period || (!low && !high) {
        return (start, len);
    }
    let add = step * (low as usize + high as usize);
    if len + add >= period {
        return (0, period);
    }
    let start = if low { (start + period - step) % period } else { start };
    (start, len + add)
}
