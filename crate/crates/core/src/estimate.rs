//! Posterior density summaries shared by all three estimators.

use serde::{Deserialize, Serialize};

use crate::diagnostics::quantile_sorted;
use crate::sample::Interval;

/// Points in the evaluation grid.
pub const GRID_POINTS: usize = 512;
/// Keep every `DEFAULT_THIN`-th retained draw in the stored draw set.
pub const DEFAULT_THIN: usize = 10;
/// A draw whose unnormalized integral falls below this is discarded.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// Trapezoid rule on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub method: String,
    pub iterations: usize,
    pub burnin: usize,
    pub retained_draws: usize,
    pub degenerate_draws: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_abs_energy_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergences: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped_sticks: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Posterior-mean density on a uniform grid, with a pointwise 95% band and a
/// thinned subset of the per-draw densities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub draws: Vec<Vec<f64>>,
    pub diagnostics: FitDiagnostics,
}

impl DensityEstimate {
    /// Estimate without posterior spread, e.g. a known density tabulated on
    /// the grid.
    pub fn point(grid: Vec<f64>, values: Vec<f64>, method: &str) -> Self {
        Self {
            lower: values.clone(),
            upper: values.clone(),
            mean: values,
            grid,
            draws: Vec::new(),
            diagnostics: FitDiagnostics {
                method: method.to_string(),
                ..Default::default()
            },
        }
    }

    pub fn interval(&self) -> Interval {
        Interval {
            lower: self.grid[0],
            upper: self.grid[self.grid.len() - 1],
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.grid[self.grid.len() - 1] - self.grid[0]) / (self.grid.len() - 1) as f64
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.mean, self.spacing())
    }

    /// Linear interpolation of the mean density; `None` off the grid.
    pub fn try_evaluate(&self, x: f64) -> Option<f64> {
        interpolate(&self.grid, &self.mean, x)
    }

    /// Linear interpolation of the mean density, zero off the grid.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.try_evaluate(x).unwrap_or(0.0)
    }
}

pub(crate) fn interpolate(grid: &[f64], values: &[f64], x: f64) -> Option<f64> {
    let n = grid.len();
    let (lo, hi) = (grid[0], grid[n - 1]);
    if !(x >= lo && x <= hi) {
        return None;
    }
    let h = (hi - lo) / (n - 1) as f64;
    let pos = (x - lo) / h;
    let i = (pos.floor() as usize).min(n - 2);
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    Some(values[i] + t.clamp(0.0, 1.0) * (values[i + 1] - values[i]))
}

/// Collects per-draw densities, normalizing each on the grid.
#[derive(Clone, Debug)]
pub struct DrawAccumulator {
    grid: Vec<f64>,
    spacing: f64,
    thin: usize,
    draws: Vec<Vec<f64>>,
    degenerate: usize,
}

impl DrawAccumulator {
    pub fn new(interval: Interval, thin: usize) -> Self {
        let grid = interval.grid(GRID_POINTS);
        Self {
            spacing: interval.width() / (GRID_POINTS - 1) as f64,
            grid,
            thin: thin.max(1),
            draws: Vec::new(),
            degenerate: 0,
        }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Normalizes a nonnegative draw so it trapezoid-integrates to one.
    /// Returns `false` and counts the draw as degenerate when its mass is
    /// negligible.
    pub fn push(&mut self, mut values: Vec<f64>) -> bool {
        let mass = trapezoid(&values, self.spacing);
        if !(mass >= DEGENERATE_MASS) || !mass.is_finite() {
            self.degenerate += 1;
            return false;
        }
        values.iter_mut().for_each(|v| *v /= mass);
        self.draws.push(values);
        true
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn degenerate(&self) -> usize {
        self.degenerate
    }

    pub fn draws(&self) -> &[Vec<f64>] {
        &self.draws
    }

    /// Consumes the draws into a summary. Returns `None` if no draw survived.
    pub fn finish(self, mut diagnostics: FitDiagnostics) -> Option<DensityEstimate> {
        if self.draws.is_empty() {
            return None;
        }
        let m = self.grid.len();
        let count = self.draws.len() as f64;
        let mut mean = vec![0.0; m];
        for d in &self.draws {
            for (acc, v) in mean.iter_mut().zip(d) {
                *acc += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= count);

        let mut lower = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut column = Vec::with_capacity(self.draws.len());
        for j in 0..m {
            column.clear();
            column.extend(self.draws.iter().map(|d| d[j]));
            column.sort_by(f64::total_cmp);
            lower[j] = quantile_sorted(&column, 0.025);
            upper[j] = quantile_sorted(&column, 0.975);
        }

        diagnostics.retained_draws = self.draws.len();
        diagnostics.degenerate_draws = self.degenerate;
        let draws = self.draws.into_iter().step_by(self.thin).collect();
        Some(DensityEstimate {
            grid: self.grid,
            mean,
            lower,
            upper,
            draws,
            diagnostics,
        })
    }
}
