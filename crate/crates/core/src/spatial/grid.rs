use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform azimuth grid in degrees. Positive azimuths are to the listener's
/// left (counter-clockwise seen from above).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzimuthGrid {
    pub min_deg: f64,
    pub step_deg: f64,
    pub count: usize,
}

const ON_GRID_TOL: f64 = 1e-9;

impl AzimuthGrid {
    pub fn new(min_deg: f64, step_deg: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("azimuth grid needs at least one azimuth"));
        }
        if !(step_deg > 0.0) || !min_deg.is_finite() || !step_deg.is_finite() {
            return Err(Error::invalid(format!(
                "azimuth grid step must be positive and finite, got {step_deg}"
            )));
        }
        Ok(Self {
            min_deg,
            step_deg,
            count,
        })
    }

    /// −90° to +90° in 5° steps: 37 azimuths.
    pub fn frontal() -> Self {
        Self {
            min_deg: -90.0,
            step_deg: 5.0,
            count: 37,
        }
    }

    pub fn max_deg(&self) -> f64 {
        self.min_deg + self.step_deg * (self.count - 1) as f64
    }

    pub fn degrees(&self, index: usize) -> Result<f64> {
        if index >= self.count {
            return Err(Error::invalid(format!(
                "grid index {index} out of range for {} azimuths",
                self.count
            )));
        }
        Ok(self.min_deg + self.step_deg * index as f64)
    }

    pub fn azimuths(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.min_deg + self.step_deg * i as f64)
            .collect()
    }

    /// Index of an azimuth that lies exactly on the grid.
    pub fn index_of(&self, deg: f64) -> Option<usize> {
        let pos = (deg - self.min_deg) / self.step_deg;
        let idx = pos.round();
        if (pos - idx).abs() > ON_GRID_TOL || idx < 0.0 || idx as usize >= self.count {
            None
        } else {
            Some(idx as usize)
        }
    }

    /// Nearest grid index, ties toward the lower index.
    pub fn nearest_index(&self, deg: f64) -> usize {
        let pos = (deg - self.min_deg) / self.step_deg;
        let lower = pos.floor();
        let idx = if pos - lower > 0.5 { lower + 1.0 } else { lower };
        idx.clamp(0.0, (self.count - 1) as f64) as usize
    }
}
