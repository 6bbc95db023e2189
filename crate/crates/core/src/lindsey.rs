//! Lindsey's method: bin counts, square-root transform, and a Bayesian cubic
//! smoothing spline fitted by Gibbs sampling.
//!
//! The regression function is `r(t) = b0 + b1 t + h(t)` with `h` a zero-mean
//! Gaussian process whose covariance is `tau2 * Omega`, `Omega` the cubic
//! smoothing-spline kernel on `[0, 1]`. Writing `h = Z u` with
//! `Z = Q_m D_m^{1/2}` from the leading eigenpairs of `Omega` turns the model
//! into a linear mixed model with `u ~ N(0, tau2 I)`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{DensityEstimate, DrawAccumulator, FitDiagnostics, DEFAULT_THIN};
use crate::sample::{Interval, SampleSet};
use crate::stochastics::{
    draw_mvn_canonical, draw_truncated_inverse_gamma, sym_eigen, Matrix, RngStream, SymMatrix,
};

/// Fraction of `trace(Omega)` retained by the automatic column choice.
pub const AUTO_EIGEN_MASS: f64 = 0.9999;

/// Default bin count: `max(10, ceil(sqrt(n)))`.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(10)
}

/// Counts on `k` equal-width bins and their transformed responses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedData {
    pub interval: Interval,
    pub n: usize,
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub responses: Vec<f64>,
    /// Approximate noise level `sqrt(k / 4n)` of the responses.
    pub sigma0: f64,
}

impl BinnedData {
    pub fn k(&self) -> usize {
        self.centers.len()
    }
}

/// Bins the data on `k` equal-width bins of the working interval.
///
/// Bins are right-closed: a value on an interior edge falls in the bin to
/// its left. The lower end of the interval belongs to the first bin.
pub fn bin_transform(data: &SampleSet, k: usize) -> Result<BinnedData> {
    if k < 2 {
        return Err(Error::param(format!("bin count must be at least 2, got {k}")));
    }
    let n = data.len();
    if k < 4 {
        warn!("bin count {k} is below the recommended minimum of 4");
    }
    if n < k {
        warn!("sample size {n} is smaller than the bin count {k}");
    }
    let iv = data.interval();
    let width = iv.width() / k as f64;
    let mut counts = vec![0u64; k];
    for &x in data.values() {
        let pos = ((x - iv.lower) / width).ceil();
        let j = if pos < 1.0 { 0 } else { (pos as usize - 1).min(k - 1) };
        counts[j] += 1;
    }
    let centers = (0..k).map(|j| iv.lower + (j as f64 + 0.5) * width).collect();
    let scale = (k as f64 / n as f64).sqrt();
    let responses = counts.iter().map(|&c| scale * (c as f64 + 0.25).sqrt()).collect();
    Ok(BinnedData {
        interval: iv,
        n,
        centers,
        counts,
        responses,
        sigma0: (k as f64 / (4.0 * n as f64)).sqrt(),
    })
}

/// Cubic smoothing-spline covariance on `[0, 1]`:
/// `½ s² (t − s/3)` for `s ≤ t`, symmetric otherwise.
pub fn spline_kernel(s: f64, t: f64) -> f64 {
    let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
    0.5 * lo * lo * (hi - lo / 3.0)
}

/// Design of the mixed-model form of the smoothing spline.
#[derive(Clone, Debug)]
pub struct SplineDesign {
    interval: Interval,
    /// Bin centers mapped affinely onto `[0, 1]`.
    pub scaled_centers: Vec<f64>,
    /// `k x 2` fixed-effect design `(1, t)`.
    pub x: Matrix,
    pub omega: SymMatrix,
    /// `k x m` random-effect design.
    pub z: Matrix,
    pub eigenvalues: Vec<f64>,
    /// `Q_m D_m^{-1/2}`: maps kernel evaluations to basis values off the bins.
    projection: Matrix,
}

impl SplineDesign {
    pub fn m(&self) -> usize {
        self.z.cols()
    }

    pub fn k(&self) -> usize {
        self.z.rows()
    }

    pub fn scale(&self, t: f64) -> f64 {
        (t - self.interval.lower) / self.interval.width()
    }

    /// Row of `(X | Z)` at an arbitrary abscissa. Off the bin centers the
    /// random part is the kernel interpolant `Omega(t, T) Q_m D_m^{-1/2}`,
    /// which reproduces `Z` at the centers.
    pub fn basis_row(&self, t: f64) -> Vec<f64> {
        let s = self.scale(t);
        let kern: Vec<f64> = self.scaled_centers.iter().map(|&c| spline_kernel(s, c)).collect();
        let mut row = Vec::with_capacity(2 + self.m());
        row.push(1.0);
        row.push(s);
        row.extend(self.projection.tr_mul_vec(&kern));
        row
    }

    /// Full `(X | Z)` matrix at the bin centers.
    pub fn full_design(&self) -> Matrix {
        let (k, m) = (self.k(), self.m());
        Matrix::from_fn(k, 2 + m, |i, j| if j < 2 { self.x[(i, j)] } else { self.z[(i, j - 2)] })
    }
}

/// Assembles `Omega` at the rescaled bin centers and keeps `columns`
/// eigen-directions, or the automatic choice when `None`.
pub fn build_spline_design(binned: &BinnedData, columns: Option<usize>) -> Result<SplineDesign> {
    let k = binned.k();
    let iv = binned.interval;
    let scaled: Vec<f64> = binned
        .centers
        .iter()
        .map(|&t| (t - iv.lower) / iv.width())
        .collect();
    let omega = SymMatrix::from_upper(k, |i, j| spline_kernel(scaled[i], scaled[j]));
    let eig = sym_eigen(&omega)?;
    let trace = omega.trace();
    if let Some(&min) = eig.values.last() {
        if min < -1e-10 * trace {
            return Err(Error::numeric(format!(
                "spline kernel is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
    }
    let m = match columns {
        Some(m) if m > k => {
            return Err(Error::param(format!("cannot retain {m} columns from {k} bins")))
        }
        Some(m) => m,
        None => auto_columns(&eig.values, trace).max(3).min(k),
    };
    let values: Vec<f64> = eig.values[..m].iter().map(|v| v.max(0.0)).collect();
    if let Some(i) = values.iter().position(|&v| v <= 1e-14 * trace) {
        return Err(Error::numeric(format!(
            "eigen-direction {} of the spline kernel is numerically null; retain fewer columns",
            i + 1
        )));
    }
    let z = Matrix::from_fn(k, m, |i, j| eig.vectors[(i, j)] * values[j].sqrt());
    let projection = Matrix::from_fn(k, m, |i, j| eig.vectors[(i, j)] / values[j].sqrt());
    let x = Matrix::from_fn(k, 2, |i, j| if j == 0 { 1.0 } else { scaled[i] });
    Ok(SplineDesign {
        interval: iv,
        scaled_centers: scaled,
        x,
        omega,
        z,
        eigenvalues: values,
        projection,
    })
}

fn auto_columns(desc_values: &[f64], trace: f64) -> usize {
    let mut acc = 0.0;
    for (i, &v) in desc_values.iter().enumerate() {
        acc += v.max(0.0);
        if acc >= AUTO_EIGEN_MASS * trace {
            return i + 1;
        }
    }
    desc_values.len()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindseyHyper {
    /// Prior variance of the intercept and slope.
    pub sigma_beta2: f64,
    /// Upper end of the uniform prior on `tau2`.
    pub c_tau2: f64,
    /// Upper end of the uniform prior on `sigma2`.
    pub c_sigma2: f64,
}

impl Default for LindseyHyper {
    fn default() -> Self {
        Self {
            sigma_beta2: 1e6,
            c_tau2: 1e5,
            c_sigma2: 1e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LindseyState {
    pub beta: [f64; 2],
    pub u: Vec<f64>,
    pub sigma2: f64,
    pub tau2: f64,
}

impl LindseyState {
    /// Concatenated `(beta, u)`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(2 + self.u.len());
        c.extend_from_slice(&self.beta);
        c.extend_from_slice(&self.u);
        c
    }
}

/// Precomputed sufficient quantities for one binned data set.
#[derive(Clone, Debug)]
pub struct LindseyModel {
    pub design: SplineDesign,
    pub binned: BinnedData,
    pub hyper: LindseyHyper,
    full: Matrix,
    gram: SymMatrix,
    xty: Vec<f64>,
    /// Sample size entering the shape of the `sigma2` update.
    shape_n: usize,
}

impl LindseyModel {
    pub fn new(binned: BinnedData, design: SplineDesign, hyper: LindseyHyper, shape_uses_raw_n: bool) -> Result<Self> {
        for (name, v) in [
            ("sigma_beta2", hyper.sigma_beta2),
            ("c_tau2", hyper.c_tau2),
            ("c_sigma2", hyper.c_sigma2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        let full = design.full_design();
        let gram = full.gram();
        let xty = full.tr_mul_vec(&binned.responses);
        let shape_n = if shape_uses_raw_n { binned.n } else { binned.k() };
        Ok(Self {
            design,
            binned,
            hyper,
            full,
            gram,
            xty,
            shape_n,
        })
    }

    pub fn sigma2_shape(&self) -> f64 {
        self.shape_n as f64 / 2.0 - 1.0
    }

    pub fn tau2_shape(&self) -> f64 {
        self.design.m() as f64 / 2.0 - 1.0
    }

    /// Draws `(beta, u)` jointly from their normal full conditional.
    pub fn sample_coefficients(&self, state: &mut LindseyState, rng: &mut RngStream) -> Result<()> {
        let p = 2 + self.design.m();
        let mut precision = self.gram.scaled(1.0 / state.sigma2);
        let mut prior = vec![1.0 / state.tau2; p];
        prior[0] = 1.0 / self.hyper.sigma_beta2;
        prior[1] = 1.0 / self.hyper.sigma_beta2;
        precision.add_diagonal(&prior);
        let linear: Vec<f64> = self.xty.iter().map(|v| v / state.sigma2).collect();
        let draw = draw_mvn_canonical(rng, &precision, &linear).map_err(|e| {
            Error::numeric(format!("coefficient precision is singular: {e}"))
        })?;
        state.beta = [draw[0], draw[1]];
        state.u = draw[2..].to_vec();
        Ok(())
    }

    pub fn residual_sum_of_squares(&self, state: &LindseyState) -> f64 {
        let fitted = self.full.mul_vec(&state.coefficients());
        self.binned
            .responses
            .iter()
            .zip(fitted)
            .map(|(y, f)| (y - f) * (y - f))
            .sum()
    }

    pub fn sample_sigma2(&self, state: &mut LindseyState, rng: &mut RngStream) -> Result<()> {
        let scale = (0.5 * self.residual_sum_of_squares(state)).max(f64::MIN_POSITIVE);
        state.sigma2 = draw_truncated_inverse_gamma(rng, self.sigma2_shape(), scale, self.hyper.c_sigma2)?;
        Ok(())
    }

    pub fn sample_tau2(&self, state: &mut LindseyState, rng: &mut RngStream) -> Result<()> {
        if state.u.is_empty() {
            return Ok(());
        }
        let uu: f64 = state.u.iter().map(|v| v * v).sum();
        let scale = (0.5 * uu).max(f64::MIN_POSITIVE);
        state.tau2 = draw_truncated_inverse_gamma(rng, self.tau2_shape(), scale, self.hyper.c_tau2)?;
        Ok(())
    }

    /// One Gibbs sweep: `(beta, u)`, then `sigma2`, then `tau2`.
    pub fn gibbs_step(&self, state: &mut LindseyState, rng: &mut RngStream) -> Result<()> {
        self.sample_coefficients(state, rng)?;
        self.sample_sigma2(state, rng)?;
        self.sample_tau2(state, rng)
    }

    /// Starting point: least-squares line, zero random effects.
    pub fn initial_state(&self) -> LindseyState {
        let x = &self.design.x;
        let gram = x.gram();
        let rhs = x.tr_mul_vec(&self.binned.responses);
        let beta = gram
            .cholesky()
            .map(|c| c.solve(&rhs))
            .unwrap_or_else(|_| vec![0.0, 0.0]);
        LindseyState {
            beta: [beta[0], beta[1]],
            u: vec![0.0; self.design.m()],
            sigma2: (self.binned.sigma0 * self.binned.sigma0).min(self.hyper.c_sigma2),
            tau2: 1.0_f64.min(self.hyper.c_tau2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LindseyConfig {
    /// Bin count; `None` uses [`default_bins`].
    pub bins: Option<usize>,
    /// Retained eigen-directions; `None` uses the automatic choice.
    pub columns: Option<usize>,
    pub iterations: usize,
    pub burnin: usize,
    pub hyper: LindseyHyper,
    pub seed: u64,
    /// Use the raw sample size instead of the bin count in the `sigma2`
    /// shape.
    pub shape_uses_raw_n: bool,
    pub thin: usize,
}

impl Default for LindseyConfig {
    fn default() -> Self {
        Self {
            bins: None,
            columns: None,
            iterations: 5000,
            burnin: 1000,
            hyper: LindseyHyper::default(),
            seed: 0,
            shape_uses_raw_n: false,
            thin: DEFAULT_THIN,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LindseyFit {
    pub estimate: DensityEstimate,
    pub sigma2_trace: Vec<f64>,
    pub tau2_trace: Vec<f64>,
    pub columns: usize,
    pub bins: usize,
}

pub fn fit_lindsey(data: &SampleSet, config: &LindseyConfig) -> Result<LindseyFit> {
    if config.iterations <= config.burnin {
        return Err(Error::param(format!(
            "iterations ({}) must exceed burn-in ({})",
            config.iterations, config.burnin
        )));
    }
    let k = config.bins.unwrap_or_else(|| default_bins(data.len()));
    let binned = bin_transform(data, k)?;
    let design = build_spline_design(&binned, config.columns)?;
    let model = LindseyModel::new(binned, design, config.hyper, config.shape_uses_raw_n)?;
    if model.sigma2_shape() <= 0.0 {
        return Err(Error::param(format!(
            "sigma2 update needs more than 2 regression points (shape {})",
            model.sigma2_shape()
        )));
    }
    if model.tau2_shape() <= 0.0 {
        return Err(Error::param(format!(
            "tau2 update needs at least 3 spline columns, got {}",
            model.design.m()
        )));
    }

    let mut rng = RngStream::new(config.seed);
    let mut acc = DrawAccumulator::new(data.interval(), config.thin);
    let basis: Vec<Vec<f64>> = acc.grid().iter().map(|&t| model.design.basis_row(t)).collect();

    let mut state = model.initial_state();
    let retained = config.iterations - config.burnin;
    let mut sigma2_trace = Vec::with_capacity(retained);
    let mut tau2_trace = Vec::with_capacity(retained);
    for it in 0..config.iterations {
        model.gibbs_step(&mut state, &mut rng)?;
        if it < config.burnin {
            continue;
        }
        sigma2_trace.push(state.sigma2);
        tau2_trace.push(state.tau2);
        let coef = state.coefficients();
        let draw: Vec<f64> = basis
            .iter()
            .map(|row| {
                let r: f64 = row.iter().zip(&coef).map(|(a, b)| a * b).sum();
                let r = r.max(0.0);
                r * r
            })
            .collect();
        acc.push(draw);
    }

    let degenerate = acc.degenerate();
    let mut diagnostics = FitDiagnostics {
        method: "lindsey".into(),
        iterations: config.iterations,
        burnin: config.burnin,
        ..Default::default()
    };
    if degenerate > 0 {
        diagnostics
            .warnings
            .push(format!("{degenerate} draws had a vanishing square-root fit and were excluded"));
    }
    let estimate = acc
        .finish(diagnostics)
        .ok_or_else(|| Error::numeric("every Lindsey draw was degenerate"))?;
    Ok(LindseyFit {
        estimate,
        sigma2_trace,
        tau2_trace,
        columns: model.design.m(),
        bins: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{mean, median};
    use crate::stochastics::draw_normal;

    fn unit_sample(values: Vec<f64>) -> SampleSet {
        SampleSet::new(values, Interval::new(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn response_formula() {
        // 100 values, 10 bins, 24 in the first bin
        let mut v = vec![0.05; 24];
        v.extend(std::iter::repeat_n(0.95, 76));
        let b = bin_transform(&unit_sample(v), 10).unwrap();
        assert_eq!(b.counts[0], 24);
        assert!((b.responses[0] - 1.55724).abs() < 1e-5, "{}", b.responses[0]);
        // empty bin: sqrt(k/n) * 0.5
        assert!((b.responses[4] - 0.1f64.sqrt() * 0.5).abs() < 1e-15);
        assert!((b.sigma0 - 0.158114).abs() < 1e-6);
    }

    #[test]
    fn bin_edges_are_right_closed() {
        let b = bin_transform(&unit_sample(vec![0.0, 0.25, 0.5, 0.75, 1.0, 0.3]), 4).unwrap();
        assert_eq!(b.counts, vec![2, 2, 1, 1]);
        assert_eq!(b.counts.iter().sum::<u64>(), 6);
        assert!((b.centers[0] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn too_few_bins() {
        assert!(bin_transform(&unit_sample(vec![0.1, 0.2]), 1).is_err());
    }

    #[test]
    fn kernel_values() {
        assert!((spline_kernel(0.5, 1.0) - 0.5 * 0.25 * (1.0 - 0.5 / 3.0)).abs() < 1e-15);
        assert!((spline_kernel(0.5, 1.0) - 0.104167).abs() < 1e-6);
        assert_eq!(spline_kernel(1.0, 0.5), spline_kernel(0.5, 1.0));
    }

    fn binned_normal(n: usize, k: usize, seed: u64) -> BinnedData {
        let mut rng = RngStream::new(seed);
        let v: Vec<f64> = (0..n).map(|_| draw_normal(&mut rng, 0.0, 1.0).unwrap()).collect();
        bin_transform(&SampleSet::from_values(v).unwrap(), k).unwrap()
    }

    #[test]
    fn full_rank_design_reconstructs_omega() {
        let b = binned_normal(200, 12, 1);
        let d = build_spline_design(&b, Some(12)).unwrap();
        let zzt = d.z.matmul(&d.z.transpose());
        let scale = d.omega.max_abs();
        for i in 0..12 {
            for j in 0..12 {
                assert!((zzt[(i, j)] - d.omega[(i, j)]).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn basis_row_matches_design_at_centers() {
        let b = binned_normal(200, 15, 2);
        let d = build_spline_design(&b, None).unwrap();
        assert!(d.m() >= 3 && d.m() <= 15);
        for (i, &t) in b.centers.iter().enumerate() {
            let row = d.basis_row(t);
            assert!((row[1] - d.scaled_centers[i]).abs() < 1e-14);
            for j in 0..d.m() {
                assert!((row[2 + j] - d.z[(i, j)]).abs() < 1e-9, "({i},{j})");
            }
        }
    }

    #[test]
    fn auto_columns_keep_eigen_mass() {
        let b = binned_normal(400, 20, 3);
        let d = build_spline_design(&b, None).unwrap();
        let kept: f64 = d.eigenvalues.iter().sum();
        assert!(kept >= AUTO_EIGEN_MASS * d.omega.trace() * (1.0 - 1e-12));
        assert!(build_spline_design(&b, Some(21)).is_err());
    }

    #[test]
    fn coefficients_shrink_at_tiny_tau2() {
        let b = binned_normal(400, 20, 4);
        let d = build_spline_design(&b, None).unwrap();
        let model = LindseyModel::new(b, d, LindseyHyper::default(), false).unwrap();
        let mut rng = RngStream::new(5);
        let mut state = model.initial_state();
        state.tau2 = 1e-8;
        let norms: Vec<f64> = (0..200)
            .map(|_| {
                model.sample_coefficients(&mut state, &mut rng).unwrap();
                state.u.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect();
        assert!(median(&norms) < 1e-3);
    }

    #[test]
    fn no_random_effects_recovers_least_squares() {
        let b = binned_normal(400, 20, 6);
        let d = build_spline_design(&b, Some(0)).unwrap();
        let hyper = LindseyHyper {
            sigma_beta2: 1e12,
            ..Default::default()
        };
        let model = LindseyModel::new(b.clone(), d, hyper, false).unwrap();
        let ols = model.initial_state().beta;
        let mut rng = RngStream::new(7);
        let mut state = model.initial_state();
        state.sigma2 = 0.01;
        let mut sums = [0.0; 2];
        let reps = 20_000;
        for _ in 0..reps {
            model.sample_coefficients(&mut state, &mut rng).unwrap();
            sums[0] += state.beta[0];
            sums[1] += state.beta[1];
        }
        // Monte Carlo error on the mean is ~ 0.1 / sqrt(reps) ~ 1e-3
        assert!((sums[0] / reps as f64 - ols[0]).abs() < 5e-3);
        assert!((sums[1] / reps as f64 - ols[1]).abs() < 1e-2);
    }

    #[test]
    fn sigma2_respects_truncation() {
        let b = binned_normal(400, 20, 8);
        let d = build_spline_design(&b, None).unwrap();
        let hyper = LindseyHyper {
            c_sigma2: 5e-3,
            ..Default::default()
        };
        let model = LindseyModel::new(b, d, hyper, false).unwrap();
        let mut rng = RngStream::new(9);
        let mut state = model.initial_state();
        for _ in 0..500 {
            model.gibbs_step(&mut state, &mut rng).unwrap();
            assert!(state.sigma2 > 0.0 && state.sigma2 <= 5e-3);
            assert!(state.tau2 > 0.0 && state.tau2 <= hyper.c_tau2);
        }
    }

    #[test]
    fn tau2_support_with_zero_coefficients() {
        let b = binned_normal(400, 20, 10);
        let d = build_spline_design(&b, None).unwrap();
        let model = LindseyModel::new(b, d, LindseyHyper::default(), false).unwrap();
        let mut rng = RngStream::new(11);
        let mut state = model.initial_state();
        state.beta = [0.0, 0.0];
        for _ in 0..200 {
            state.u.iter_mut().for_each(|v| *v = 0.0);
            model.sample_tau2(&mut state, &mut rng).unwrap();
            assert!(state.tau2 > 0.0 && state.tau2 <= 1e5);
        }
    }

    #[test]
    fn config_rejects_degenerate_shapes() {
        let mut rng = RngStream::new(12);
        let v: Vec<f64> = (0..100).map(|_| draw_normal(&mut rng, 0.0, 1.0).unwrap()).collect();
        let data = SampleSet::from_values(v).unwrap();
        let cfg = LindseyConfig {
            columns: Some(2),
            iterations: 20,
            burnin: 10,
            ..Default::default()
        };
        assert!(matches!(fit_lindsey(&data, &cfg), Err(Error::InvalidParameter(_))));
        let cfg = LindseyConfig {
            bins: Some(2),
            iterations: 20,
            burnin: 10,
            ..Default::default()
        };
        assert!(fit_lindsey(&data, &cfg).is_err());
        let cfg = LindseyConfig {
            iterations: 10,
            burnin: 10,
            ..Default::default()
        };
        assert!(fit_lindsey(&data, &cfg).is_err());
    }

    #[test]
    fn uniform_data_gives_flat_estimate() {
        let mut rng = RngStream::new(13);
        let v: Vec<f64> = (0..2000).map(|_| rng.uniform_open()).collect();
        let data = unit_sample(v);
        let cfg = LindseyConfig {
            iterations: 2000,
            burnin: 500,
            seed: 14,
            ..Default::default()
        };
        let fit = fit_lindsey(&data, &cfg).unwrap();
        let est = &fit.estimate;
        assert!((est.integral() - 1.0).abs() < 1e-6);
        for (x, f) in est.grid.iter().zip(&est.mean) {
            if (0.1..=0.9).contains(x) {
                assert!((f - 1.0).abs() < 0.15, "f({x}) = {f}");
            }
        }
        assert!(mean(&fit.sigma2_trace) > 0.0);
    }
}
