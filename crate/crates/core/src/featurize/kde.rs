//! Gaussian kernel density estimates sampled on a fixed z-score grid.

use serde::{Deserialize, Serialize};

use crate::normal;

use super::FeaturizeError;

/// Densities below this are reported as exactly zero.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Spacing of the sampling grid over `[z_min, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridRule {
    /// `z_min + r (z_max - z_min) / (R - 1)`: both endpoints are sampled.
    #[default]
    Endpoints,
    /// `z_min + r (z_max - z_min) / R`: one point per 1/R of the range,
    /// starting at `z_min`.
    Decile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KdeConfig {
    /// Percentage of standard normal mass the grid covers, in (0, 100).
    pub mass_percent: f64,
    /// Number of grid points R, at least 2.
    pub grid_points: usize,
    #[serde(default)]
    pub grid_rule: GridRule,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            mass_percent: 99.0,
            grid_points: 10,
            grid_rule: GridRule::Endpoints,
        }
    }
}

impl KdeConfig {
    pub fn validate(&self) -> Result<(), FeaturizeError> {
        z_range(self.mass_percent)?;
        if self.grid_points < 2 {
            return Err(FeaturizeError::Config(format!(
                "grid_points must be at least 2, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }

    pub fn z_range(&self) -> Result<(f64, f64), FeaturizeError> {
        z_range(self.mass_percent)
    }

    /// The R evaluation points.
    pub fn grid(&self) -> Result<Vec<f64>, FeaturizeError> {
        self.validate()?;
        let (z_min, z_max) = self.z_range()?;
        let r_count = self.grid_points;
        let divisor = match self.grid_rule {
            GridRule::Endpoints => (r_count - 1) as f64,
            GridRule::Decile => r_count as f64,
        };
        let step = (z_max - z_min) / divisor;
        let mut grid: Vec<f64> = (0..r_count).map(|r| z_min + r as f64 * step).collect();
        if self.grid_rule == GridRule::Endpoints {
            grid[r_count - 1] = z_max;
        }
        Ok(grid)
    }
}

/// Scott's rule for unit-variance data: `H = Q^(-1/5)`.
pub fn scott_bandwidth(q: usize) -> Result<f64, FeaturizeError> {
    if q == 0 {
        return Err(FeaturizeError::Config(
            "bandwidth needs at least one value".into(),
        ));
    }
    let q = q as f64;
    let mut root = q.powf(0.2);
    // snap perfect fifth powers so that 1/root is correctly rounded
    if root.round().powi(5) == q {
        root = root.round();
    }
    Ok(1.0 / root)
}

/// Symmetric z interval holding `percent` of standard normal mass.
pub fn z_range(percent: f64) -> Result<(f64, f64), FeaturizeError> {
    if !(percent > 0.0 && percent < 100.0) {
        return Err(FeaturizeError::Config(format!(
            "mass percent must lie strictly between 0 and 100, got {percent}"
        )));
    }
    let z_max = normal::quantile(1.0 - (1.0 - percent / 100.0) / 2.0)
        .expect("probability inside (0, 1)");
    Ok((-z_max, z_max))
}

/// Density of the Gaussian KDE of `values` with bandwidth `h` at `at`.
pub fn kde_density(values: &[f64], h: f64, at: f64) -> f64 {
    let sum: f64 = values.iter().map(|&v| normal::pdf((at - v) / h)).sum();
    let density = sum / (values.len() as f64 * h);
    if density < DENSITY_FLOOR {
        0.0
    } else {
        density
    }
}

/// Samples the KDE of `values` on `grid` with an explicit bandwidth.
pub fn kde_sample_with_bandwidth(
    values: &[f64],
    grid: &[f64],
    h: f64,
) -> Result<Vec<f64>, FeaturizeError> {
    if values.is_empty() {
        return Err(FeaturizeError::Config("cannot estimate a density from no values".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(FeaturizeError::Config(format!("bandwidth must be positive, got {h}")));
    }
    Ok(grid.iter().map(|&a| kde_density(values, h, a)).collect())
}

/// Samples the KDE of `values` on the configured grid with Scott's bandwidth.
pub fn kde_sample(values: &[f64], config: &KdeConfig) -> Result<Vec<f64>, FeaturizeError> {
    let h = scott_bandwidth(values.len())?;
    kde_sample_with_bandwidth(values, &config.grid()?, h)
}
