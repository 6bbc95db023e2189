//! Reference densities, error metrics and replicate orchestration for the
//! simulation benchmark.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dpmm::{fit_dpmm, DpmmConfig};
use crate::error::{Error, Result};
use crate::estimate::DensityEstimate;
use crate::lindsey::{fit_lindsey, LindseyConfig};
use crate::pgm::{fit_pgm, PgmConfig};
use crate::sample::{Interval, SampleSet};
use crate::stochastics::{draw_categorical, draw_gamma, draw_normal, RngStream};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityId {
    F1,
    F2,
    F3,
    F4,
    F5,
}

impl DensityId {
    pub const ALL: [DensityId; 5] = [Self::F1, Self::F2, Self::F3, Self::F4, Self::F5];

    fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for DensityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.index() + 1)
    }
}

impl FromStr for DensityId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            "f3" => Ok(Self::F3),
            "f4" => Ok(Self::F4),
            "f5" => Ok(Self::F5),
            other => Err(Error::param(format!("unknown density '{other}' (expected f1..f5)"))),
        }
    }
}

/// One of the five benchmark densities.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceDensity {
    /// `(weight, mean, variance)` triples.
    NormalMixture { id: DensityId, components: Vec<(f64, f64, f64)> },
    /// Gamma with the given shape and scale.
    Gamma { id: DensityId, shape: f64, scale: f64 },
}

impl ReferenceDensity {
    pub fn new(id: DensityId) -> Self {
        let mix = |components: Vec<(f64, f64, f64)>| Self::NormalMixture { id, components };
        match id {
            DensityId::F1 => mix(vec![(1.0, 0.0, 1.0)]),
            DensityId::F2 => mix(vec![(0.5, -0.5, 0.25), (0.5, 0.5, 0.25)]),
            DensityId::F3 => mix(vec![(0.5, -1.5, 1.0), (0.5, 1.5, 1.0)]),
            DensityId::F4 => mix(vec![
                (13.0 / 20.0, -1.0, 0.5),
                (2.0 / 20.0, -0.5, 0.5),
                (1.0 / 20.0, 0.0, 1.0),
                (3.0 / 20.0, 0.5, 0.5),
                (1.0 / 20.0, 1.0, 0.5),
            ]),
            DensityId::F5 => Self::Gamma {
                id,
                shape: 3.0,
                scale: 1.0,
            },
        }
    }

    pub fn id(&self) -> DensityId {
        match self {
            Self::NormalMixture { id, .. } | Self::Gamma { id, .. } => *id,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::NormalMixture { components, .. } => components
                .iter()
                .map(|&(w, m, v)| {
                    let s = v.sqrt();
                    let z = (x - m) / s;
                    w * INV_SQRT_2PI / s * (-0.5 * z * z).exp()
                })
                .sum(),
            Self::Gamma { shape, scale, .. } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let y = x / scale;
                ((shape - 1.0) * y.ln() - y - statrs::function::gamma::ln_gamma(*shape)).exp() / scale
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::NormalMixture { components, .. } => components
                .iter()
                .map(|&(w, m, v)| w * 0.5 * statrs::function::erf::erfc(-(x - m) / (2.0 * v).sqrt()))
                .sum(),
            Self::Gamma { shape, scale, .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    statrs::function::gamma::gamma_lr(*shape, x / scale)
                }
            }
        }
    }

    /// Picks a component by weight, then draws from it.
    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match self {
            Self::NormalMixture { components, .. } => {
                let j = if components.len() == 1 {
                    0
                } else {
                    let w: Vec<f64> = components.iter().map(|c| c.0).collect();
                    draw_categorical(rng, &w).expect("reference weights are valid")
                };
                let (_, m, v) = components[j];
                draw_normal(rng, m, v.sqrt()).expect("reference scale is positive")
            }
            Self::Gamma { shape, scale, .. } => {
                draw_gamma(rng, *shape, 1.0 / scale).expect("reference shape is positive")
            }
        }
    }

    /// `n` draws with the default working interval; the gamma density keeps
    /// its support bound at zero.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<SampleSet> {
        let values: Vec<f64> = (0..n).map(|_| self.draw(rng)).collect();
        let interval = match self {
            Self::NormalMixture { .. } => Interval::padded(&values)?,
            Self::Gamma { .. } => Interval::padded_above(&values, 0.0)?,
        };
        SampleSet::new(values, interval)
    }
}

pub fn reference_pdf(id: DensityId, x: f64) -> f64 {
    ReferenceDensity::new(id).pdf(x)
}

pub fn reference_sample(id: DensityId, n: usize, rng: &mut RngStream) -> Result<SampleSet> {
    ReferenceDensity::new(id).sample(n, rng)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MseValue {
    pub mse: f64,
    /// Evaluation points outside the estimate's grid, scored with a zero
    /// estimate.
    pub off_grid: usize,
}

/// Mean squared error of the estimate at `points`.
pub fn mse(truth: &ReferenceDensity, estimate: &DensityEstimate, points: &[f64]) -> MseValue {
    let mut off_grid = 0;
    let mut total = 0.0;
    for &x in points {
        let fhat = estimate.try_evaluate(x).unwrap_or_else(|| {
            off_grid += 1;
            0.0
        });
        let d = truth.pdf(x) - fhat;
        total += d * d;
    }
    MseValue {
        mse: if points.is_empty() { 0.0 } else { total / points.len() as f64 },
        off_grid,
    }
}

/// Mean squared error over the estimate's own grid.
pub fn mse_on_grid(truth: &ReferenceDensity, estimate: &DensityEstimate) -> f64 {
    let total: f64 = estimate
        .grid
        .iter()
        .zip(&estimate.mean)
        .map(|(&x, f)| (truth.pdf(x) - f).powi(2))
        .sum();
    total / estimate.grid.len() as f64
}

/// A configured estimator. Seeds inside the configs are replaced per
/// replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodSpec {
    Lindsey(LindseyConfig),
    Pgm(PgmConfig),
    Dpmm(DpmmConfig),
    /// Returns the true density; a sanity check for the harness.
    Oracle,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            Self::Lindsey(_) => "LM".into(),
            Self::Pgm(c) => format!("PGM(K={})", c.components),
            Self::Dpmm(c) => format!("DPMM(N={})", c.truncation),
            Self::Oracle => "oracle".into(),
        }
    }

    pub fn fit(&self, data: &SampleSet, truth: &ReferenceDensity, seed: u64) -> Result<DensityEstimate> {
        match self {
            Self::Lindsey(c) => {
                let cfg = LindseyConfig { seed, ..c.clone() };
                Ok(fit_lindsey(data, &cfg)?.estimate)
            }
            Self::Pgm(c) => {
                let cfg = PgmConfig { seed, ..c.clone() };
                Ok(fit_pgm(data, &cfg)?.estimate)
            }
            Self::Dpmm(c) => {
                let cfg = DpmmConfig { seed, ..c.clone() };
                Ok(fit_dpmm(data, &cfg)?.estimate)
            }
            Self::Oracle => {
                let grid = data.interval().grid(crate::estimate::GRID_POINTS);
                let values = grid.iter().map(|&x| truth.pdf(x)).collect();
                Ok(DensityEstimate::point(grid, values, "oracle"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub methods: Vec<MethodSpec>,
    pub densities: Vec<DensityId>,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Score on the 512-point grid instead of the sample points.
    pub mse_on_grid: bool,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

/// Base seed of one (density, sample size) cell. All methods share it, so
/// they see identical data sets.
pub fn cell_seed(base: u64, density: DensityId, n: usize) -> u64 {
    base.wrapping_add((density.index() << 40) ^ ((n as u64) << 20))
}

/// Data stream and fit seed of one replicate: the data come from substream
/// 1 of the replicate seed and the fitter uses stream 0 of the same seed.
pub fn replicate_streams(base: u64, density: DensityId, n: usize, replicate: usize) -> (RngStream, u64) {
    let seed = RngStream::for_replicate(cell_seed(base, density, n), replicate as u64).seed();
    (RngStream::new(seed).substream(1), seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub method: String,
    pub density: DensityId,
    pub n: usize,
    pub replicates: usize,
    /// MSE of each successful replicate, in replicate order.
    pub mse: Vec<f64>,
    /// Replicate index of each entry of `mse`.
    pub replicate_ids: Vec<usize>,
    pub imse: f64,
    pub failed_replicates: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    pub off_grid_points: usize,
    /// Total fitting time. Not serialized, so reruns write identical files.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

impl BenchmarkReport {
    pub fn imse_x1000(&self) -> f64 {
        self.imse * 1e3
    }
}

struct ReplicateOutcome {
    result: Result<MseValue>,
    secs: f64,
}

fn run_replicate(
    method: &MethodSpec,
    density: DensityId,
    n: usize,
    replicate: usize,
    base: u64,
    on_grid: bool,
) -> ReplicateOutcome {
    let start = Instant::now();
    let truth = ReferenceDensity::new(density);
    let (mut data_rng, fit_seed) = replicate_streams(base, density, n, replicate);
    let result = truth.sample(n, &mut data_rng).and_then(|data| {
        let est = method.fit(&data, &truth, fit_seed)?;
        Ok(if on_grid {
            MseValue {
                mse: mse_on_grid(&truth, &est),
                off_grid: 0,
            }
        } else {
            mse(&truth, &est, data.values())
        })
    });
    ReplicateOutcome {
        result,
        secs: start.elapsed().as_secs_f64(),
    }
}

/// Fits every method to `replicates` data sets per (density, size) cell and
/// aggregates the errors. Reports are ordered by method, density, size.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkReport>> {
    if spec.replicates == 0 {
        return Err(Error::param("replicates must be at least 1"));
    }
    if let Some(&n) = spec.sizes.iter().find(|&&n| n < 2) {
        return Err(Error::param(format!("sample size must be at least 2, got {n}")));
    }
    let mut cells = Vec::new();
    for (mi, _) in spec.methods.iter().enumerate() {
        for &d in &spec.densities {
            for &n in &spec.sizes {
                cells.push((mi, d, n));
            }
        }
    }
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.replicates).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::param(format!("cannot build worker pool: {e}")))?;
    let outcomes: Vec<ReplicateOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| {
                let (mi, d, n) = cells[c];
                run_replicate(&spec.methods[mi], d, n, r, spec.seed, spec.mse_on_grid)
            })
            .collect()
    });

    let mut reports = Vec::with_capacity(cells.len());
    for (c, chunk) in outcomes.chunks(spec.replicates).enumerate() {
        let (mi, density, n) = cells[c];
        let mut mse_values = Vec::with_capacity(spec.replicates);
        let mut replicate_ids = Vec::with_capacity(spec.replicates);
        let mut failures = Vec::new();
        let mut off_grid_points = 0;
        let mut secs = 0.0;
        for (r, out) in chunk.iter().enumerate() {
            secs += out.secs;
            match &out.result {
                Ok(v) => {
                    mse_values.push(v.mse);
                    replicate_ids.push(r);
                    off_grid_points += v.off_grid;
                }
                Err(e) => failures.push(format!("replicate {r}: {e}")),
            }
        }
        let imse = if mse_values.is_empty() {
            f64::NAN
        } else {
            mse_values.iter().sum::<f64>() / mse_values.len() as f64
        };
        reports.push(BenchmarkReport {
            method: spec.methods[mi].label(),
            density,
            n,
            replicates: spec.replicates,
            mse: mse_values,
            replicate_ids,
            imse,
            failed_replicates: failures.len(),
            failures,
            off_grid_points,
            wall_clock_secs: secs,
        });
    }
    Ok(reports)
}

/// IMSE x 10^3 laid out with one row per (density, size) and one column per
/// method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImseTable {
    pub methods: Vec<String>,
    pub rows: Vec<ImseRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImseRow {
    pub density: DensityId,
    pub n: usize,
    pub imse_x1000: Vec<Option<f64>>,
}

impl ImseTable {
    pub fn from_reports(reports: &[BenchmarkReport]) -> Self {
        let mut methods: Vec<String> = Vec::new();
        let mut keys: Vec<(DensityId, usize)> = Vec::new();
        for r in reports {
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
            if !keys.contains(&(r.density, r.n)) {
                keys.push((r.density, r.n));
            }
        }
        keys.sort();
        let rows = keys
            .into_iter()
            .map(|(density, n)| ImseRow {
                density,
                n,
                imse_x1000: methods
                    .iter()
                    .map(|m| {
                        reports
                            .iter()
                            .find(|r| &r.method == m && r.density == density && r.n == n)
                            .map(|r| r.imse_x1000())
                            .filter(|v| v.is_finite())
                    })
                    .collect(),
            })
            .collect();
        Self { methods, rows }
    }

    pub fn get(&self, method: &str, density: DensityId, n: usize) -> Option<f64> {
        let col = self.methods.iter().position(|m| m == method)?;
        let row = self.rows.iter().find(|r| r.density == density && r.n == n)?;
        row.imse_x1000[col]
    }
}

/// Posterior-mean weights of the mixture fitted under each half-t scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub density: DensityId,
    pub n: usize,
    pub components: usize,
    pub a_values: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    pub acceptance_rates: Vec<f64>,
    pub divergences: Vec<usize>,
}

impl SensitivityReport {
    /// Largest `|c_j - c'_j|` between the weight vectors of two runs.
    pub fn max_abs_difference(&self, i: usize, j: usize) -> f64 {
        self.weights[i]
            .iter()
            .zip(&self.weights[j])
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Fits the mixture to one fixed data set from `density` once per value of
/// the half-t scale `A`. Every fit uses the same sampler seed.
pub fn sensitivity_experiment(
    a_values: &[f64],
    density: DensityId,
    n: usize,
    base: &PgmConfig,
    seed: u64,
    jobs: usize,
) -> Result<SensitivityReport> {
    let truth = ReferenceDensity::new(density);
    let data = truth.sample(n, &mut RngStream::new(seed).substream(1))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param(format!("cannot build worker pool: {e}")))?;
    let fits: Vec<Result<_>> = pool.install(|| {
        a_values
            .par_iter()
            .map(|&a| {
                let cfg = PgmConfig {
                    scale_a: a,
                    seed,
                    ..base.clone()
                };
                fit_pgm(&data, &cfg)
            })
            .collect()
    });
    let mut weights = Vec::new();
    let mut acceptance_rates = Vec::new();
    let mut divergences = Vec::new();
    for fit in fits {
        let fit = fit?;
        acceptance_rates.push(fit.acceptance_rate);
        divergences.push(fit.estimate.diagnostics.divergences.unwrap_or(0));
        weights.push(fit.mean_weights);
    }
    Ok(SensitivityReport {
        density,
        n,
        components: base.components,
        a_values: a_values.to_vec(),
        weights,
        acceptance_rates,
        divergences,
    })
}
