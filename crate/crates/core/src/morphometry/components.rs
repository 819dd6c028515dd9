use std::collections::VecDeque;

use crate::{Error, InstanceMap, Result, SegmentationMask};

/// Labels interior (non-boundary) pixels by 4-connectivity. IDs run 1..K in
/// order of first encounter in a row-major scan; boundary pixels get 0.
/// With `periodic`, neighbours wrap across opposite image edges.
pub fn connected_components(mask: &SegmentationMask, periodic: bool) -> Result<InstanceMap> {
    let (w, h) = mask.dims();
    let mut labels = vec![0u16; w * h];
    let mut next: u32 = 0;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if mask.data[start] != 0 || labels[start] != 0 {
            continue;
        }
        next += 1;
        if next > u16::MAX as u32 {
            return Err(Error::InvalidInput(format!("more than {} components", u16::MAX)));
        }
        labels[start] = next as u16;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if mask.data[q] == 0 && labels[q] == 0 {
                    labels[q] = next as u16;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            } else if periodic {
                visit(p + w - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            } else if periodic {
                visit(p + 1 - w);
            }
            if y > 0 {
                visit(p - w);
            } else if periodic {
                visit(p + (h - 1) * w);
            }
            if y + 1 < h {
                visit(p + w);
            } else if periodic {
                visit(x);
            }
        }
    }
    InstanceMap::new(w, h, labels)
}
