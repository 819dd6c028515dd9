use super::field::{dilate_interval, tight_interval, ActiveBox, GrainField};
use super::{SimParams, INIT_MARGIN};
use crate::{Error, InstanceMap, Result};

/// Full simulation state: one sparse field per surviving grain.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseFieldState {
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) n_grains: usize,
    pub(crate) fields: Vec<GrainField>,
    pub(crate) time: f64,
    pub(crate) steps: u64,
    pub(crate) params: SimParams,
}

impl PhaseFieldState {
    /// Indicator initialization: η_i = 1 on the pixels labelled `i`, 0
    /// elsewhere. Labels must cover `1..=N` with every pixel assigned.
    pub fn from_labels(labels: &InstanceMap, params: SimParams) -> Result<Self> {
        params.validate()?;
        let (width, height) = labels.dims();
        if let Some(idx) = labels.labels.iter().position(|&l| l == 0) {
            return Err(Error::UnassignedPixel {
                x: idx % width,
                y: idx / width,
            });
        }
        let n = labels.max_label() as usize;
        let mut cols = vec![vec![false; width]; n + 1];
        let mut rows = vec![vec![false; height]; n + 1];
        for y in 0..height {
            for x in 0..width {
                let l = labels.get(x, y) as usize;
                cols[l][x] = true;
                rows[l][y] = true;
            }
        }
        let mut fields = Vec::with_capacity(n);
        for label in 1..=n {
            let (Some((xs, xl)), Some((ys, yl))) = (
                tight_interval(&cols[label], 0, width),
                tight_interval(&rows[label], 0, height),
            ) else {
                return Err(Error::EmptyGrain(label as u32));
            };
            let (x0, w) = dilate_interval(xs, xl, INIT_MARGIN, width);
            let (y0, h) = dilate_interval(ys, yl, INIT_MARGIN, height);
            let bbox = ActiveBox { x0, y0, w, h };
            let mut data = vec![0.0; bbox.area()];
            for ly in 0..h {
                let gy = (y0 + ly) % height;
                for lx in 0..w {
                    let gx = (x0 + lx) % width;
                    if labels.get(gx, gy) as usize == label {
                        data[ly * w + lx] = 1.0;
                    }
                }
            }
            fields.push(GrainField::new(label as u32, bbox, data));
        }
        Ok(PhaseFieldState {
            width,
            height,
            n_grains: n,
            fields,
            time: 0.0,
            steps: 0,
            params,
        })
    }

    /// State assembled from explicit fields, e.g. a restored checkpoint.
    pub fn from_fields(
        width: usize,
        height: usize,
        params: SimParams,
        n_grains: usize,
        fields: Vec<GrainField>,
        time: f64,
        steps: u64,
    ) -> Result<Self> {
        params.validate()?;
        for f in &fields {
            let b = f.bbox;
            if b.w == 0 || b.h == 0 || b.w > width || b.h > height || b.x0 >= width || b.y0 >= height {
                return Err(Error::InvalidInput(format!("field {} has an invalid box {b:?}", f.label)));
            }
            if f.data.len() != b.area() {
                return Err(Error::InvalidInput(format!("field {} buffer does not match its box", f.label)));
            }
        }
        Ok(PhaseFieldState {
            width,
            height,
            n_grains,
            fields,
            time,
            steps,
            params,
        })
    }

    /// `n` fields, each identically zero over the full grid.
    pub fn zeros(width: usize, height: usize, n: usize, params: SimParams) -> Result<Self> {
        let fields = (1..=n)
            .map(|l| GrainField::new(l as u32, ActiveBox::full(width, height), vec![0.0; width * height]))
            .collect();
        Self::from_fields(width, height, params, n, fields, 0.0, 0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Grain count the state was created with.
    pub fn n_grains(&self) -> usize {
        self.n_grains
    }

    /// Fields still alive (dead grains are dropped).
    pub fn fields(&self) -> &[GrainField] {
        &self.fields
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// Total number of stored field values.
    pub fn active_area(&self) -> usize {
        self.fields.iter().map(|f| f.bbox.area()).sum()
    }

    /// Expands every active box to the full grid.
    pub fn densify(&mut self) {
        let (w, h) = (self.width, self.height);
        for f in &mut self.fields {
            f.rebox(ActiveBox::full(w, h), w, h);
        }
    }

    pub fn dense_field(&self, index: usize) -> Vec<f64> {
        self.fields[index].to_dense(self.width, self.height)
    }

    /// Σ_i η_i² per pixel, accumulated in field order.
    pub fn sum_of_squares(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.width * self.height];
        accumulate_squares(&self.fields, self.width, self.height, &mut s, crate::Exec::Sequential);
        s
    }
}

/// Adds η_i² of every field into `s` (row-major, full grid). Each pixel
/// accumulates in field order whatever the execution strategy.
pub(crate) fn accumulate_squares(
    fields: &[GrainField],
    width: usize,
    height: usize,
    s: &mut [f64],
    exec: crate::Exec,
) {
    exec.for_each_chunk_mut(s, width, |gy, row| {
        row.iter_mut().for_each(|v| *v = 0.0);
        for f in fields {
            let b = f.bbox;
            let Some(ly) = b.local_y(gy, height) else {
                continue;
            };
            let src = &f.data[ly * b.w..(ly + 1) * b.w];
            let split = (width - b.x0).min(b.w);
            for (dst, v) in row[b.x0..b.x0 + split].iter_mut().zip(&src[..split]) {
                *dst += v * v;
            }
            for (dst, v) in row[..b.w - split].iter_mut().zip(&src[split..]) {
                *dst += v * v;
            }
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, labels: Vec<u16>) -> InstanceMap {
        InstanceMap::new(w, h, labels).unwrap()
    }

    #[test]
    fn single_grain_is_identically_one() {
        let s = PhaseFieldState::from_labels(&map(4, 4, vec![1; 16]), SimParams::default()).unwrap();
        assert_eq!(s.n_grains(), 1);
        assert!(s.dense_field(0).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn half_split_is_a_partition() {
        let labels: Vec<u16> = (0..64).map(|i| if i % 8 < 4 { 1 } else { 2 }).collect();
        let s = PhaseFieldState::from_labels(&map(8, 8, labels.clone()), SimParams::default()).unwrap();
        assert_eq!(s.n_grains(), 2);
        let a = s.dense_field(0);
        let b = s.dense_field(1);
        for i in 0..64 {
            assert_eq!(a[i] + b[i], 1.0);
            assert_eq!(a[i] == 1.0, labels[i] == 1);
        }
    }

    #[test]
    fn boxes_are_tight_plus_margin() {
        let (w, h) = (64, 64);
        let labels: Vec<u16> = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                if (20..30).contains(&x) && (10..15).contains(&y) {
                    2
                } else {
                    1
                }
            })
            .collect();
        let s = PhaseFieldState::from_labels(&map(w, h, labels), SimParams::default()).unwrap();
        let b = s.fields()[1].bbox;
        assert_eq!(b, ActiveBox { x0: 12, y0: 2, w: 26, h: 21 });
        assert!(s.fields()[0].bbox.is_full(w, h));
    }

    #[test]
    fn empty_grain_id_is_reported() {
        let err = PhaseFieldState::from_labels(&map(2, 2, vec![1, 3, 3, 1]), SimParams::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyGrain(2)));
    }

    #[test]
    fn unassigned_pixel_is_rejected() {
        let err = PhaseFieldState::from_labels(&map(2, 2, vec![1, 0, 1, 1]), SimParams::default()).unwrap_err();
        assert!(matches!(err, Error::UnassignedPixel { x: 1, y: 0 }));
    }
}
