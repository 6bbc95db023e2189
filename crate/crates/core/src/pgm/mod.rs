//! Penalized Gaussian mixture: fixed equally spaced Gaussian components with
//! a common scale, softmax weights and a second-difference prior on the
//! logits. The sampler cycles through an HMC update of the logits, the
//! smoothing variance, its half-t auxiliary variable and the component
//! indicators.

mod hmc;
mod penalty;

use log::warn;
use serde::{Deserialize, Serialize};

pub use hmc::{hamiltonian, hmc_transition, leapfrog, HmcConfig, HmcOutcome, HmcStats, Potential};
pub use penalty::PenaltyMatrix;

use crate::error::{Error, Result};
use crate::estimate::{DensityEstimate, DrawAccumulator, FitDiagnostics, DEFAULT_THIN};
use crate::sample::{Interval, SampleSet};
use crate::stochastics::{draw_categorical_log, draw_inverse_gamma, RngStream, SymMatrix};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Equally spaced component means covering `[a, b]` and their common scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgmGrid {
    pub means: Vec<f64>,
    pub sigma: f64,
}

impl PgmGrid {
    pub fn new(interval: Interval, components: usize) -> Result<Self> {
        if components < 4 {
            return Err(Error::param(format!(
                "mixture needs at least 4 components, got {components}"
            )));
        }
        let spacing = interval.width() / (components - 1) as f64;
        let means = (0..components)
            .map(|j| {
                if j + 1 == components {
                    interval.upper
                } else {
                    interval.lower + j as f64 * spacing
                }
            })
            .collect();
        Ok(Self {
            means,
            sigma: 2.0 / 3.0 * spacing,
        })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn log_component_pdf(&self, j: usize, x: f64) -> f64 {
        let z = (x - self.means[j]) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - LN_SQRT_2PI
    }

    pub fn component_pdf(&self, j: usize, x: f64) -> f64 {
        self.log_component_pdf(j, x).exp()
    }
}

/// Softmax weights of `(0, beta)`.
pub fn weights_from_beta(beta: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = beta.iter().find(|v| !v.is_finite()) {
        return Err(Error::param(format!("non-finite logit {v}")));
    }
    let mut c = vec![0.0; beta.len() + 1];
    softmax_into(beta, &mut c);
    Ok(c)
}

/// Softmax of `(0, beta)` into `out` (length `beta.len() + 1`); returns the
/// log normalizer.
pub(crate) fn softmax_into(beta: &[f64], out: &mut [f64]) -> f64 {
    let max = beta.iter().copied().fold(0.0_f64, f64::max);
    out[0] = (-max).exp();
    let mut total = out[0];
    for (o, &b) in out[1..].iter_mut().zip(beta) {
        *o = (b - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|v| *v /= total);
    max + total.ln()
}

pub fn mixture_pdf(grid: &PgmGrid, weights: &[f64], x: f64) -> f64 {
    weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(j, &w)| w * grid.component_pdf(j, x))
        .sum()
}

/// `U(beta) = -sum_j n_j log c_j + beta' P* beta / (2 tau2)`.
pub fn neg_log_posterior(beta: &[f64], counts: &[f64], tau2: f64, penalty: &PenaltyMatrix) -> f64 {
    PgmPotential::new(counts, tau2, &penalty.pstar).value(beta)
}

pub fn grad_neg_log_posterior(beta: &[f64], counts: &[f64], tau2: f64, penalty: &PenaltyMatrix) -> Vec<f64> {
    let mut g = vec![0.0; beta.len()];
    PgmPotential::new(counts, tau2, &penalty.pstar).gradient(beta, &mut g);
    g
}

/// Conditional potential of the free logits given the component counts.
#[derive(Clone, Debug)]
pub struct PgmPotential<'a> {
    counts: &'a [f64],
    n: f64,
    inv_tau2: f64,
    precision: &'a SymMatrix,
}

impl<'a> PgmPotential<'a> {
    /// `counts` has length `K`, `precision` is `(K-1) x (K-1)`.
    pub fn new(counts: &'a [f64], tau2: f64, precision: &'a SymMatrix) -> Self {
        debug_assert_eq!(counts.len(), precision.dim() + 1);
        Self {
            counts,
            n: counts.iter().sum(),
            inv_tau2: 1.0 / tau2,
            precision,
        }
    }
}

impl Potential for PgmPotential<'_> {
    fn dim(&self) -> usize {
        self.precision.dim()
    }

    fn value(&self, beta: &[f64]) -> f64 {
        let max = beta.iter().copied().fold(0.0_f64, f64::max);
        let total: f64 = (-max).exp() + beta.iter().map(|b| (b - max).exp()).sum::<f64>();
        let log_norm = max + total.ln();
        // sum_j n_j log c_j = sum_{j>=2} n_j beta_j - n log_norm
        let fit: f64 = self.counts[1..].iter().zip(beta).map(|(n, b)| n * b).sum();
        -(fit - self.n * log_norm) + 0.5 * self.inv_tau2 * self.precision.quad_form(beta)
    }

    fn gradient(&self, beta: &[f64], grad: &mut [f64]) {
        let mut c = vec![0.0; beta.len() + 1];
        softmax_into(beta, &mut c);
        self.precision.mul_vec_into(beta, grad);
        for (j, g) in grad.iter_mut().enumerate() {
            *g = *g * self.inv_tau2 - (self.counts[j + 1] - self.n * c[j + 1]);
        }
    }
}

/// Maximizer of the conditional posterior of the logits by damped Newton.
/// Returns the mode and the iteration count.
pub fn conditional_mode(counts: &[f64], tau2: f64, penalty: &PenaltyMatrix) -> Result<(Vec<f64>, usize)> {
    const MAX_ITER: usize = 200;
    let pot = PgmPotential::new(counts, tau2, &penalty.pstar);
    let dim = penalty.dim();
    let n = pot.n;
    let mut beta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut c = vec![0.0; dim + 1];
    let mut u = pot.value(&beta);
    for it in 1..=MAX_ITER {
        pot.gradient(&beta, &mut grad);
        let gmax = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gmax <= 1e-9 * (1.0 + n) {
            return Ok((beta, it - 1));
        }
        softmax_into(&beta, &mut c);
        let mut hess = penalty.pstar.scaled(1.0 / tau2);
        let dense = SymMatrix::from_upper(dim, |i, j| {
            let d = if i == j { c[i + 1] } else { 0.0 };
            n * (d - c[i + 1] * c[j + 1])
        });
        hess = hess.add(&dense);
        let step = hess.cholesky()?.solve(&grad);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b - t * s).collect();
            let ut = pot.value(&trial);
            if ut <= u {
                let moved = step.iter().fold(0.0_f64, |m, s| m.max((t * s).abs()));
                beta = trial;
                u = ut;
                improved = true;
                if moved <= 1e-13 * (1.0 + beta.iter().fold(0.0_f64, |m, b| m.max(b.abs()))) {
                    return Ok((beta, it));
                }
                break;
            }
            t *= 0.5;
        }
        if !improved {
            // no descent along the Newton direction: at the mode up to rounding
            return Ok((beta, it));
        }
    }
    Err(Error::numeric(format!("Newton did not converge in {MAX_ITER} iterations")))
}

/// Draws `tau2 ~ IG((K + nu - 1)/2, nu/a + beta' P* beta / 2)`.
pub fn sample_tau2(beta: &[f64], penalty: &PenaltyMatrix, a_aux: f64, nu: f64, rng: &mut RngStream) -> Result<f64> {
    let k = (penalty.dim() + 1) as f64;
    draw_inverse_gamma(rng, 0.5 * (k + nu - 1.0), nu / a_aux + 0.5 * penalty.quad_form(beta))
}

/// Draws `a ~ IG((nu + 1)/2, 1/A² + nu/tau2)`.
pub fn sample_a(tau2: f64, nu: f64, scale_a: f64, rng: &mut RngStream) -> Result<f64> {
    draw_inverse_gamma(rng, 0.5 * (nu + 1.0), 1.0 / (scale_a * scale_a) + nu / tau2)
}

/// Log component densities of every observation, row-major `n x K`.
#[derive(Clone, Debug)]
pub struct IndicatorTable {
    k: usize,
    log_pdf: Vec<f64>,
}

impl IndicatorTable {
    pub fn new(data: &[f64], grid: &PgmGrid) -> Self {
        let k = grid.k();
        let mut log_pdf = Vec::with_capacity(data.len() * k);
        for &x in data {
            log_pdf.extend((0..k).map(|j| grid.log_component_pdf(j, x)));
        }
        Self { k, log_pdf }
    }

    /// Fills `z` (0-based component indices) and returns the counts.
    pub fn sample(&self, weights: &[f64], z: &mut [usize], rng: &mut RngStream) -> Vec<f64> {
        let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        let mut counts = vec![0.0; self.k];
        let mut lw = vec![0.0; self.k];
        let mut scratch = Vec::with_capacity(self.k);
        for (zi, row) in z.iter_mut().zip(self.log_pdf.chunks_exact(self.k)) {
            for ((l, r), w) in lw.iter_mut().zip(row).zip(&log_w) {
                *l = r + w;
            }
            *zi = draw_categorical_log(rng, &lw, &mut scratch);
            counts[*zi] += 1.0;
        }
        counts
    }
}

/// Draws component indicators (0-based) for `data` under `weights`.
pub fn sample_indicators(data: &[f64], grid: &PgmGrid, weights: &[f64], rng: &mut RngStream) -> Result<Vec<usize>> {
    if weights.len() != grid.k() {
        return Err(Error::param(format!(
            "{} weights for {} components",
            weights.len(),
            grid.k()
        )));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::param("weights have no positive entry"));
    }
    let table = IndicatorTable::new(data, grid);
    let mut z = vec![0; data.len()];
    table.sample(weights, &mut z, rng);
    Ok(z)
}

/// Counts per component of 0-based indicators.
pub fn component_counts(z: &[usize], k: usize) -> Vec<f64> {
    let mut counts = vec![0.0; k];
    for &j in z {
        counts[j] += 1.0;
    }
    counts
}

#[derive(Clone, Debug, PartialEq)]
pub struct PgmState {
    pub beta: Vec<f64>,
    pub tau2: f64,
    pub a_aux: f64,
    /// 0-based component index of each observation.
    pub z: Vec<usize>,
}

impl PgmState {
    pub fn weights(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.beta.len() + 1];
        softmax_into(&self.beta, &mut c);
        c
    }
}

/// HMC update of the logits given the counts implied by `state.z`.
pub fn hmc_step(
    state: &PgmState,
    counts: &[f64],
    penalty: &PenaltyMatrix,
    cfg: &HmcConfig,
    rng: &mut RngStream,
) -> HmcOutcome {
    let pot = PgmPotential::new(counts, state.tau2, &penalty.pstar);
    hmc_transition(&pot, &state.beta, cfg, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgmConfig {
    pub components: usize,
    /// Prior constant for the first two free logits.
    pub c: f64,
    /// Half-t degrees of freedom.
    pub nu: f64,
    /// Half-t scale.
    pub scale_a: f64,
    pub hmc: HmcConfig,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    pub thin: usize,
}

impl Default for PgmConfig {
    fn default() -> Self {
        Self {
            components: 30,
            c: 100.0,
            nu: 2.0,
            scale_a: 10.0,
            hmc: HmcConfig::default(),
            iterations: 5000,
            burnin: 1000,
            seed: 0,
            thin: DEFAULT_THIN,
        }
    }
}

impl PgmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burnin {
            return Err(Error::param(format!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations, self.burnin
            )));
        }
        for (name, v) in [("c", self.c), ("nu", self.nu), ("A", self.scale_a)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        self.hmc.validate()
    }
}

#[derive(Clone, Debug)]
pub struct PgmFit {
    pub estimate: DensityEstimate,
    pub grid: PgmGrid,
    /// Retained logit draws.
    pub beta_trace: Vec<Vec<f64>>,
    pub tau2_trace: Vec<f64>,
    /// Posterior mean of the mixture weights.
    pub mean_weights: Vec<f64>,
    /// Posterior mean of the component counts.
    pub mean_counts: Vec<f64>,
    pub acceptance_rate: f64,
}

pub fn fit_pgm(data: &SampleSet, config: &PgmConfig) -> Result<PgmFit> {
    config.validate()?;
    let grid = PgmGrid::new(data.interval(), config.components)?;
    let penalty = PenaltyMatrix::new(config.components, config.c)?;
    let k = grid.k();
    let mut rng = RngStream::new(config.seed);
    let table = IndicatorTable::new(data.values(), &grid);
    let mut warnings = Vec::new();

    let mut z = vec![0; data.len()];
    let uniform = vec![1.0 / k as f64; k];
    let mut counts = table.sample(&uniform, &mut z, &mut rng);
    let tau2 = 1.0;
    let beta = match conditional_mode(&counts, tau2, &penalty) {
        Ok((b, _)) => b,
        Err(e) => {
            let msg = format!("starting at zero logits: {e}");
            warn!("{msg}");
            warnings.push(msg);
            vec![0.0; k - 1]
        }
    };
    let a_aux = sample_a(tau2, config.nu, config.scale_a, &mut rng)?;
    let mut state = PgmState { beta, tau2, a_aux, z };

    let mut acc = DrawAccumulator::new(data.interval(), config.thin);
    let basis: Vec<Vec<f64>> = acc
        .grid()
        .iter()
        .map(|&x| (0..k).map(|j| grid.component_pdf(j, x)).collect())
        .collect();

    let retained = config.iterations - config.burnin;
    let mut stats = HmcStats::default();
    let mut beta_trace = Vec::with_capacity(retained);
    let mut tau2_trace = Vec::with_capacity(retained);
    let mut mean_weights = vec![0.0; k];
    let mut mean_counts = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for it in 0..config.iterations {
        let out = hmc_step(&state, &counts, &penalty, &config.hmc, &mut rng);
        stats.record(&out);
        state.beta = out.position;
        state.tau2 = sample_tau2(&state.beta, &penalty, state.a_aux, config.nu, &mut rng)?;
        state.a_aux = sample_a(state.tau2, config.nu, config.scale_a, &mut rng)?;
        softmax_into(&state.beta, &mut weights);
        counts = table.sample(&weights, &mut state.z, &mut rng);
        if it < config.burnin {
            continue;
        }
        for (m, w) in mean_weights.iter_mut().zip(&weights) {
            *m += w;
        }
        for (m, c) in mean_counts.iter_mut().zip(&counts) {
            *m += c;
        }
        let draw: Vec<f64> = basis
            .iter()
            .map(|row| row.iter().zip(&weights).map(|(p, w)| p * w).sum())
            .collect();
        acc.push(draw);
        beta_trace.push(state.beta.clone());
        tau2_trace.push(state.tau2);
    }
    mean_weights.iter_mut().for_each(|v| *v /= retained as f64);
    mean_counts.iter_mut().for_each(|v| *v /= retained as f64);

    if stats.divergences > 0 {
        warnings.push(format!("{} divergent HMC trajectories were rejected", stats.divergences));
    }
    let diagnostics = FitDiagnostics {
        method: "pgm".into(),
        iterations: config.iterations,
        burnin: config.burnin,
        acceptance_rate: Some(stats.acceptance_rate()),
        mean_abs_energy_error: Some(stats.mean_abs_energy_error()),
        divergences: Some(stats.divergences),
        warnings,
        ..Default::default()
    };
    let estimate = acc
        .finish(diagnostics)
        .ok_or_else(|| Error::numeric("every mixture draw was degenerate"))?;
    Ok(PgmFit {
        estimate,
        grid,
        beta_trace,
        tau2_trace,
        mean_weights,
        mean_counts,
        acceptance_rate: stats.acceptance_rate(),
    })
}

/// HMC chain on the logits alone, with counts and `tau2` held fixed and
/// started at the conditional mode.
pub fn sample_logits_fixed(
    counts: &[f64],
    tau2: f64,
    penalty: &PenaltyMatrix,
    cfg: &HmcConfig,
    iterations: usize,
    burnin: usize,
    rng: &mut RngStream,
) -> Result<(Vec<Vec<f64>>, HmcStats)> {
    cfg.validate()?;
    if counts.len() != penalty.dim() + 1 {
        return Err(Error::param(format!(
            "{} counts for {} components",
            counts.len(),
            penalty.dim() + 1
        )));
    }
    let pot = PgmPotential::new(counts, tau2, &penalty.pstar);
    let (mut beta, _) = conditional_mode(counts, tau2, penalty)?;
    let mut stats = HmcStats::default();
    let mut draws = Vec::with_capacity(iterations.saturating_sub(burnin));
    for it in 0..iterations {
        let out = hmc_transition(&pot, &beta, cfg, rng);
        stats.record(&out);
        beta = out.position;
        if it >= burnin {
            draws.push(beta.clone());
        }
    }
    Ok((draws, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{integrate_adaptive, mean};
    use crate::stochastics::draw_normal;

    #[test]
    fn grid_layout() {
        let g = PgmGrid::new(Interval::new(0.0, 1.0).unwrap(), 5).unwrap();
        assert_eq!(g.means, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!((g.sigma - 1.0 / 6.0).abs() < 1e-15);
        assert!(PgmGrid::new(Interval::new(0.0, 1.0).unwrap(), 3).is_err());
        let g = PgmGrid::new(Interval::new(-2.0, 3.0).unwrap(), 37).unwrap();
        for w in g.means.windows(2) {
            assert!((w[1] - w[0] - 5.0 / 36.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_values() {
        assert_eq!(weights_from_beta(&[0.0; 3]).unwrap(), vec![0.25; 4]);
        let c = weights_from_beta(&[2f64.ln(), 3f64.ln()]).unwrap();
        for (a, b) in c.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(weights_from_beta(&[f64::NAN]).is_err());
        let big = weights_from_beta(&[800.0, 799.0]).unwrap();
        assert!(big.iter().all(|v| v.is_finite()));
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_pdf_properties() {
        let g = PgmGrid::new(Interval::new(0.0, 1.0).unwrap(), 5).unwrap();
        let mut w = vec![0.0; 5];
        w[2] = 1.0;
        let x = 0.6;
        let direct = (-0.5 * ((x - 0.5) / g.sigma).powi(2)).exp() / (g.sigma * (2.0 * std::f64::consts::PI).sqrt());
        assert!((mixture_pdf(&g, &w, x) - direct).abs() < 1e-14);

        let w = weights_from_beta(&[0.3, -0.2, 1.0, 0.1]).unwrap();
        let f = |x: f64| mixture_pdf(&g, &w, x);
        let total = integrate_adaptive(&f, -4.0 * g.sigma, 1.0 + 4.0 * g.sigma, 1e-10);
        assert!((total - 1.0).abs() < 1e-4, "{total}");

        let mut w = vec![0.0; 5];
        w[1] = 0.5;
        w[2] = 0.5;
        assert!(mixture_pdf(&g, &w, 0.375) > mixture_pdf(&g, &w, 1.0 + 3.0 * g.sigma));
    }

    #[test]
    fn potential_examples() {
        let pen = PenaltyMatrix::new(8, 100.0).unwrap();
        let beta: Vec<f64> = (2..=8).map(|j| j as f64).collect();
        let zero = vec![0.0; 8];
        let tau2 = 2.0;
        let u = neg_log_posterior(&beta, &zero, tau2, &pen);
        assert!((u - 13.0 / 100.0 / (2.0 * tau2)).abs() < 1e-12);

        let counts = vec![5.0, 1.0, 0.0, 7.0, 2.0, 3.0, 4.0, 8.0];
        let c = weights_from_beta(&beta).unwrap();
        let fit: f64 = counts.iter().zip(&c).map(|(n, c)| -n * c.ln()).sum();
        assert!((neg_log_posterior(&beta, &counts, 1e300, &pen) - fit).abs() < 1e-9);
    }

    #[test]
    fn gradient_stationary_points() {
        let pen = PenaltyMatrix::new(6, 100.0).unwrap();
        let counts = vec![10.0; 6];
        assert!(grad_neg_log_posterior(&[0.0; 5], &counts, 1.0, &pen).iter().all(|g| g.abs() < 1e-12));
        // MLE: beta_j = ln(n_j / n_1)
        let counts: Vec<f64> = vec![4.0, 8.0, 2.0, 6.0, 1.0, 9.0];
        let mle: Vec<f64> = counts[1..].iter().map(|n| (n / counts[0]).ln()).collect();
        let g = grad_neg_log_posterior(&mle, &counts, 1e300, &pen);
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn newton_finds_mode() {
        let pen = PenaltyMatrix::new(10, 100.0).unwrap();
        let counts = vec![3.0, 10.0, 25.0, 40.0, 52.0, 40.0, 20.0, 6.0, 3.0, 1.0];
        let (mode, iters) = conditional_mode(&counts, 0.5, &pen).unwrap();
        assert!(iters < 50);
        let g = grad_neg_log_posterior(&mode, &counts, 0.5, &pen);
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
        // with empty components and a weak penalty the mode is still finite
        let sparse = vec![0.0, 0.0, 50.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 50.0];
        let (mode, _) = conditional_mode(&sparse, 100.0, &pen).unwrap();
        assert!(mode.iter().all(|b| b.is_finite()));
    }

    #[test]
    fn indicators_pick_nearby_component() {
        let g = PgmGrid {
            means: vec![0.0, 10.0, 20.0, 30.0],
            sigma: 1.0,
        };
        let mut rng = RngStream::new(1);
        let z = sample_indicators(&[10.0; 200], &g, &[0.25; 4], &mut rng).unwrap();
        assert!(z.iter().all(|&j| j == 1));
        let z = sample_indicators(&[0.0, 5.0, 29.0], &g, &[0.0, 0.0, 1.0, 0.0], &mut rng).unwrap();
        assert_eq!(z, vec![2, 2, 2]);
        let counts = component_counts(&z, 4);
        assert_eq!(counts.iter().sum::<f64>(), 3.0);
        assert!(sample_indicators(&[1.0], &g, &[0.0; 4], &mut rng).is_err());
    }

    #[test]
    fn tau2_and_a_means() {
        let pen = PenaltyMatrix::new(10, 100.0).unwrap();
        let mut rng = RngStream::new(2);
        let beta: Vec<f64> = (0..9).map(|j| (j as f64 * 0.7).sin()).collect();
        let (nu, a) = (2.0, 0.5);
        let shape = 0.5 * (10.0 + nu - 1.0);
        let scale = nu / a + 0.5 * pen.quad_form(&beta);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_tau2(&beta, &pen, a, nu, &mut rng).unwrap())
            .collect();
        let expect = scale / (shape - 1.0);
        assert!((mean(&draws) - expect).abs() < 0.02 * expect);

        let (tau2, big_a) = (0.8, 10.0);
        let shape = 0.5 * (nu + 1.0);
        let scale = 1.0 / (big_a * big_a) + nu / tau2;
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_a(tau2, nu, big_a, &mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|&v| v > 0.0));
        // shape 1.5: the mean exists but the variance does not; compare medians
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        let med = crate::diagnostics::quantile_sorted(&sorted, 0.5);
        let g_med = statrs::distribution::ContinuousCDF::inverse_cdf(
            &statrs::distribution::Gamma::new(shape, 1.0).unwrap(),
            0.5,
        );
        assert!((med - scale / g_med).abs() < 0.02 * scale / g_med);
    }

    #[test]
    fn fit_integrates_and_mixes() {
        let mut rng = RngStream::new(3);
        let v: Vec<f64> = (0..400)
            .map(|i| {
                let m = if i % 2 == 0 { -1.5 } else { 1.5 };
                draw_normal(&mut rng, m, 1.0).unwrap()
            })
            .collect();
        let data = SampleSet::from_values(v).unwrap();
        let cfg = PgmConfig {
            iterations: 1500,
            burnin: 500,
            seed: 4,
            ..Default::default()
        };
        let fit = fit_pgm(&data, &cfg).unwrap();
        assert!((fit.estimate.integral() - 1.0).abs() < 1e-6);
        assert!(fit.acceptance_rate > 0.5 && fit.acceptance_rate < 0.999, "{}", fit.acceptance_rate);
        assert!((fit.mean_weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((fit.mean_counts.iter().sum::<f64>() - 400.0).abs() < 1e-6);
        assert_eq!(fit.beta_trace.len(), 1000);
        assert_eq!(fit.estimate.diagnostics.divergences, Some(0));
    }

    #[test]
    fn fit_rejects_bad_config() {
        let data = SampleSet::from_values(vec![0.0, 1.0, 2.0]).unwrap();
        let bad = [
            PgmConfig { components: 3, iterations: 10, burnin: 1, ..Default::default() },
            PgmConfig { iterations: 10, burnin: 10, ..Default::default() },
            PgmConfig { c: -1.0, iterations: 10, burnin: 1, ..Default::default() },
            PgmConfig {
                hmc: HmcConfig { step_size: 0.0, leapfrog_steps: 10 },
                iterations: 10,
                burnin: 1,
                ..Default::default()
            },
        ];
        for cfg in &bad {
            assert!(matches!(fit_pgm(&data, cfg), Err(Error::InvalidParameter(_))), "{cfg:?}");
        }
    }
}
