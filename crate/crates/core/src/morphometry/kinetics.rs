use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, InstanceMap, Result};

/// Mean and spread of the equivalent-disk diameter `2·sqrt(A/π)` over time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticsTrajectory {
    pub times: Vec<f64>,
    pub mean_size: Vec<f64>,
    /// Population standard deviation.
    pub std_size: Vec<f64>,
    pub grain_count: Vec<usize>,
    pub pixel_scale: f64,
}

impl KineticsTrajectory {
    /// gnuplot-ready `time mean std count` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# time\tmean_size\tstd_size\tgrain_count\n");
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                self.times[i], self.mean_size[i], self.std_size[i], self.grain_count[i]
            );
        }
        out
    }
}

pub fn kinetics(series: &[(f64, InstanceMap)], pixel_scale: f64) -> Result<KineticsTrajectory> {
    if series.len() < 2 {
        return Err(Error::InvalidInput("kinetics needs at least two snapshots".into()));
    }
    if series.windows(2).any(|p| !(p[1].0 > p[0].0)) {
        return Err(Error::InvalidInput("snapshot times must be strictly increasing".into()));
    }
    let mut traj = KineticsTrajectory {
        times: Vec::with_capacity(series.len()),
        mean_size: Vec::with_capacity(series.len()),
        std_size: Vec::with_capacity(series.len()),
        grain_count: Vec::with_capacity(series.len()),
        pixel_scale,
    };
    for (t, map) in series {
        let diameters: Vec<f64> = map
            .areas()
            .iter()
            .skip(1)
            .filter(|&&a| a > 0)
            .map(|&a| 2.0 * (a as f64 / PI).sqrt() * pixel_scale)
            .collect();
        if diameters.is_empty() {
            return Err(Error::InvalidInput(format!("snapshot at t = {t} has no grains")));
        }
        let n = diameters.len() as f64;
        let mean = diameters.iter().sum::<f64>() / n;
        let var = diameters.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        traj.times.push(*t);
        traj.mean_size.push(mean);
        traj.std_size.push(var.sqrt());
        traj.grain_count.push(diameters.len());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphometry::grain_stats;

    fn quadrants(w: usize, split: usize) -> InstanceMap {
        InstanceMap::new(w, w, (0..w * w).map(|i| 1 + u16::from(i % w >= split) + 2 * u16::from(i / w >= split)).collect()).unwrap()
    }

    #[test]
    fn repeated_snapshot_is_flat() {
        let m = quadrants(20, 7);
        let k = kinetics(&[(0.0, m.clone()), (1.0, m.clone()), (2.0, m)], 1.0).unwrap();
        assert!(k.mean_size.windows(2).all(|p| p[0] == p[1]));
        assert_eq!(k.grain_count, vec![4, 4, 4]);
    }

    #[test]
    fn mean_matches_grain_stats() {
        let m = quadrants(30, 11);
        let k = kinetics(&[(0.0, m.clone()), (1.0, m.clone())], 0.7).unwrap();
        let s = grain_stats(&m, 0.7);
        let direct = s.iter().map(|g| 2.0 * (g.area_physical / PI).sqrt()).sum::<f64>() / s.len() as f64;
        assert!((k.mean_size[0] - direct).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_series() {
        let m = quadrants(10, 5);
        assert!(kinetics(&[(0.0, m.clone())], 1.0).is_err());
        assert!(kinetics(&[(1.0, m.clone()), (1.0, m.clone())], 1.0).is_err());
        let empty = InstanceMap::new(10, 10, vec![0; 100]).unwrap();
        assert!(kinetics(&[(0.0, m), (1.0, empty)], 1.0).is_err());
    }
}
