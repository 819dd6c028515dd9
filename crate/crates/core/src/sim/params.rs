use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    #[default]
    Periodic,
}

/// Numerical and physical parameters of the stepper.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// Gradient energy coefficient κ.
    pub kappa: f64,
    /// Kinetic coefficient L, shared by all grains.
    pub mobility: f64,
    pub dt: f64,
    pub dx: f64,
    pub boundary_condition: BoundaryCondition,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            kappa: 1.0,
            mobility: 1.0,
            dt: 0.1,
            dx: 1.0,
            boundary_condition: BoundaryCondition::Periodic,
        }
    }
}

impl SimParams {
    pub fn new(kappa: f64, mobility: f64, dt: f64) -> Result<Self> {
        let p = SimParams {
            kappa,
            mobility,
            dt,
            ..SimParams::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// Largest time step the explicit scheme tolerates: `dx² / (4 κ L)`.
    pub fn stability_bound(&self) -> f64 {
        self.dx * self.dx / (4.0 * self.kappa * self.mobility)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.mobility > 0.0 && self.mobility.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mobility must be > 0, got {}",
                self.mobility
            )));
        }
        if self.dx != 1.0 {
            return Err(Error::InvalidParameter(format!("dx is fixed at 1.0, got {}", self.dx)));
        }
        let bound = self.stability_bound();
        if !(self.dt > 0.0 && self.dt <= bound) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} violates the stability bound 0 < dt <= {bound}",
                self.dt
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = SimParams::default();
        p.validate().unwrap();
        assert_eq!(p.stability_bound(), 0.25);
    }

    #[test]
    fn rejects_unstable_dt() {
        assert!(SimParams::new(1.0, 1.0, 0.26).is_err());
        assert!(SimParams::new(1.0, 1.0, 0.25).is_ok());
        assert!(SimParams::new(2.0, 1.0, 0.2).is_err());
        assert!(SimParams::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_non_positive_coefficients() {
        assert!(SimParams::new(0.0, 1.0, 0.1).is_err());
        assert!(SimParams::new(1.0, -1.0, 0.1).is_err());
    }

    #[test]
    fn missing_json_fields_take_defaults() {
        let p: SimParams = serde_json::from_str(r#"{"dt": 0.05}"#).unwrap();
        assert_eq!(p.dt, 0.05);
        assert_eq!(p.kappa, 1.0);
    }
}
