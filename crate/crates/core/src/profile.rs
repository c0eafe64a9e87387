//! High-resolution azimuth reflectivity profiles.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::echo::WeatherScene;
use crate::{db_to_linear, Error, Result};

/// Profile sample spacing, degrees.
pub const PROFILE_STEP_DEG: f64 = 0.02;

/// Reflectivity sampled every [`PROFILE_STEP_DEG`] starting at `start_deg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityProfile {
    pub start_deg: f64,
    pub values_dbz: Vec<f64>,
    pub range_m: f64,
}

/// Shape of the built-in step profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepProfileSpec {
    pub half_span_deg: f64,
    pub baseline_dbz: f64,
    pub peak_dbz: f64,
    pub block_start_deg: f64,
    pub block_stop_deg: f64,
    pub range_m: f64,
}

impl Default for StepProfileSpec {
    fn default() -> Self {
        StepProfileSpec {
            half_span_deg: 20.0,
            baseline_dbz: 20.0,
            peak_dbz: 40.0,
            block_start_deg: -2.0,
            block_stop_deg: 2.0,
            range_m: 10_000.0,
        }
    }
}

impl ReflectivityProfile {
    pub fn new(start_deg: f64, values_dbz: Vec<f64>, range_m: f64) -> Result<Self> {
        if values_dbz.len() < 2 {
            return Err(Error::Experiment("profile needs at least two samples".into()));
        }
        if let Some(i) = values_dbz.iter().position(|v| !v.is_finite()) {
            return Err(Error::Experiment(format!("profile value {i} is not finite")));
        }
        if !start_deg.is_finite() || !(range_m > 0.0) {
            return Err(Error::Experiment("profile start and range must be finite and positive range".into()));
        }
        Ok(ReflectivityProfile {
            start_deg,
            values_dbz,
            range_m,
        })
    }

    /// Constant baseline with one flat block, sampled over `+-half_span_deg`.
    pub fn step(spec: &StepProfileSpec) -> Result<Self> {
        if !(spec.half_span_deg > 0.0) || spec.block_stop_deg < spec.block_start_deg {
            return Err(Error::Experiment("invalid step profile span".into()));
        }
        let n = (2.0 * spec.half_span_deg / PROFILE_STEP_DEG).round() as usize + 1;
        let start = -spec.half_span_deg;
        let values = (0..n)
            .map(|i| {
                let az = start + i as f64 * PROFILE_STEP_DEG;
                let inside = az >= spec.block_start_deg - 1e-9 && az <= spec.block_stop_deg + 1e-9;
                if inside {
                    spec.peak_dbz
                } else {
                    spec.baseline_dbz
                }
            })
            .collect();
        ReflectivityProfile::new(start, values, spec.range_m)
    }

    pub fn constant(half_span_deg: f64, dbz: f64) -> Result<Self> {
        let n = (2.0 * half_span_deg / PROFILE_STEP_DEG).round() as usize + 1;
        ReflectivityProfile::new(-half_span_deg, vec![dbz; n], 10_000.0)
    }

    pub fn len(&self) -> usize {
        self.values_dbz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_dbz.is_empty()
    }

    pub fn azimuth(&self, i: usize) -> f64 {
        self.start_deg + i as f64 * PROFILE_STEP_DEG
    }

    pub fn stop_deg(&self) -> f64 {
        self.azimuth(self.len() - 1)
    }

    pub fn azimuths(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.azimuth(i)).collect()
    }

    /// Index of the nearest sample; exact midpoints go to the lower index.
    pub fn nearest_index(&self, az_deg: f64) -> Result<usize> {
        let pos = (az_deg - self.start_deg) / PROFILE_STEP_DEG;
        let tol = 1e-9;
        if !(pos >= -0.5 - tol && pos <= (self.len() - 1) as f64 + 0.5 + tol) {
            return Err(Error::Experiment(format!(
                "azimuth {az_deg} deg outside profile span [{}, {}]",
                self.start_deg,
                self.stop_deg()
            )));
        }
        let i = (pos - 0.5 - tol).ceil().max(0.0) as usize;
        Ok(i.min(self.len() - 1))
    }

    pub fn value_at(&self, az_deg: f64) -> Result<f64> {
        Ok(self.values_dbz[self.nearest_index(az_deg)?])
    }

    /// Scene at `az_deg` with the mean power set from the profile.
    ///
    /// Reflectivity is `mean_power * radar_constant`.
    pub fn scene_at(&self, az_deg: f64, template: &WeatherScene, radar_constant: f64) -> Result<WeatherScene> {
        if !(radar_constant > 0.0) {
            return Err(Error::Experiment("radar constant must be positive".into()));
        }
        let dbz = self.value_at(az_deg)?;
        Ok(WeatherScene {
            mean_power: db_to_linear(dbz) / radar_constant,
            ..*template
        })
    }

    /// Reads `azimuth_deg,dbz` rows. Azimuths must be uniformly spaced at
    /// the profile step.
    pub fn load_csv(path: &Path, range_m: f64) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)?;
        let mut az = Vec::new();
        let mut vals = Vec::new();
        for row in rd.deserialize() {
            let (a, v): (f64, f64) = row?;
            az.push(a);
            vals.push(v);
        }
        if az.is_empty() {
            return Err(Error::Format(format!("{}: empty profile", path.display())));
        }
        for (i, w) in az.windows(2).enumerate() {
            if ((w[1] - w[0]) - PROFILE_STEP_DEG).abs() > 1e-6 {
                return Err(Error::Format(format!(
                    "{}: row {} breaks the {PROFILE_STEP_DEG} deg spacing",
                    path.display(),
                    i + 2
                )));
            }
        }
        ReflectivityProfile::new(az[0], vals, range_m)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["azimuth_deg", "dbz"])?;
        for (i, v) in self.values_dbz.iter().enumerate() {
            wr.write_record([format!("{:.2}", self.azimuth(i)), v.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}
