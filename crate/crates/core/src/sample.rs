use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the data range added on each side of the default interval.
pub const DEFAULT_PADDING: f64 = 0.05;

/// Closed working interval `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidInput(format!(
                "interval [{lower}, {upper}] is not a proper finite interval"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `[min - pad*range, max + pad*range]` around the data.
    pub fn padded(values: &[f64]) -> Result<Self> {
        let (min, max) = min_max(values)?;
        let range = max - min;
        if !(range > 0.0) {
            return Err(Error::InvalidInput(
                "data have zero range; supply an explicit interval".into(),
            ));
        }
        Self::new(min - DEFAULT_PADDING * range, max + DEFAULT_PADDING * range)
    }

    /// Padded interval whose lower end is fixed at a known support bound.
    pub fn padded_above(values: &[f64], lower: f64) -> Result<Self> {
        let (min, max) = min_max(values)?;
        if min < lower {
            return Err(Error::InvalidInput(format!(
                "value {min} lies below the support bound {lower}"
            )));
        }
        let range = max - min;
        Self::new(lower, max + DEFAULT_PADDING * range)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// `points` equally spaced abscissae covering the interval inclusively.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        assert!(points >= 2, "grid needs at least two points");
        let h = self.width() / (points - 1) as f64;
        (0..points)
            .map(|i| {
                if i + 1 == points {
                    self.upper
                } else {
                    self.lower + i as f64 * h
                }
            })
            .collect()
    }
}

fn min_max(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidInput("no values".into()));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite value {v}")));
        }
        min = min.min(v);
        max = max.max(v);
    }
    Ok((min, max))
}

/// Observed univariate sample together with its working interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    values: Vec<f64>,
    interval: Interval,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, interval: Interval) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !interval.contains(**v)) {
            return Err(Error::InvalidInput(format!(
                "value {v} lies outside [{}, {}]",
                interval.lower, interval.upper
            )));
        }
        Ok(Self { values, interval })
    }

    /// Uses the default padded interval.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let interval = Interval::padded(&values)?;
        Self::new(values, interval)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_interval() {
        let iv = Interval::padded(&[0.0, 10.0, 5.0]).unwrap();
        assert_eq!(iv, Interval { lower: -0.5, upper: 10.5 });
        let iv = Interval::padded_above(&[1.0, 3.0], 0.0).unwrap();
        assert_eq!(iv, Interval { lower: 0.0, upper: 3.1 });
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(Interval::padded(&[1.0, 1.0]).is_err());
        assert!(Interval::padded(&[]).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(SampleSet::from_values(vec![1.0]).is_err());
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert!(SampleSet::new(vec![0.5, 1.5], iv).is_err());
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = Interval::new(-1.3, 2.7).unwrap().grid(512);
        assert_eq!(g.len(), 512);
        assert_eq!(g[0], -1.3);
        assert_eq!(g[511], 2.7);
    }
}
