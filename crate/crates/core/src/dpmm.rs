//! Truncated Dirichlet process mixture of normals fitted by blocked Gibbs
//! sampling on the stick-breaking representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{DensityEstimate, DrawAccumulator, FitDiagnostics, DEFAULT_THIN};
use crate::sample::{Interval, SampleSet};
use crate::stochastics::{
    draw_beta, draw_categorical_log, draw_gamma, draw_inverse_gamma, draw_normal, RngStream,
};

/// Upper clamp for stick fractions below the last, so `ln(1 - v)` stays
/// finite.
pub const MAX_STICK: f64 = 1.0 - 1e-12;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Weights `pi_k = v_k prod_{l<k} (1 - v_l)`. The last fraction must be 1.
pub fn stick_break(v: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::param(format!("stick fraction {x} outside [0, 1]")));
    }
    match v.last() {
        Some(&1.0) => {}
        Some(&last) => return Err(Error::param(format!("last stick fraction must be 1, got {last}"))),
        None => return Err(Error::param("no stick fractions")),
    }
    let mut pi = vec![0.0; v.len()];
    stick_break_into(v, &mut pi);
    Ok(pi)
}

fn stick_break_into(v: &[f64], pi: &mut [f64]) {
    let mut rest = 1.0;
    for (p, &vk) in pi.iter_mut().zip(v) {
        *p = vk * rest;
        rest *= 1.0 - vk;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpmmHyper {
    /// Prior variance of the component means about `theta`.
    pub sigma_mu2: f64,
    /// Inverse-gamma shape and scale of the component variances.
    pub nu1: f64,
    pub nu2: f64,
    /// Gamma shape and rate of the concentration.
    pub eta1: f64,
    pub eta2: f64,
    /// Prior variance of `theta`.
    pub a: f64,
}

impl DpmmHyper {
    /// Weakly informative defaults scaled to the working interval.
    pub fn for_interval(interval: Interval) -> Self {
        let w = interval.width();
        Self {
            sigma_mu2: w * w,
            nu1: 2.0,
            nu2: (0.1 * w).powi(2),
            eta1: 1.0,
            eta2: 1.0,
            a: w * w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_mu2", self.sigma_mu2),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("A", self.a),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DpmmState {
    /// Stick fractions; the last is fixed at 1.
    pub v: Vec<f64>,
    pub pi: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// 0-based component of each observation.
    pub z: Vec<usize>,
    pub theta: f64,
    pub alpha: f64,
}

impl DpmmState {
    /// Equal weights, means spread over the data (or at `theta` without
    /// data), variances at the prior scale.
    pub fn initial(data: &[f64], truncation: usize, hyper: &DpmmHyper, rng: &mut RngStream) -> Result<Self> {
        if truncation < 2 {
            return Err(Error::param(format!("truncation must be at least 2, got {truncation}")));
        }
        let v: Vec<f64> = (0..truncation).map(|k| 1.0 / (truncation - k) as f64).collect();
        let mut pi = vec![0.0; truncation];
        stick_break_into(&v, &mut pi);
        let theta = if data.is_empty() {
            0.0
        } else {
            data.iter().sum::<f64>() / data.len() as f64
        };
        let mu = (0..truncation)
            .map(|_| {
                if data.is_empty() {
                    theta
                } else {
                    data[(rng.uniform_open() * data.len() as f64) as usize % data.len()]
                }
            })
            .collect();
        Ok(Self {
            v,
            pi,
            mu,
            sigma2: vec![hyper.nu2; truncation],
            z: vec![0; data.len()],
            theta,
            alpha: hyper.eta1 / hyper.eta2,
        })
    }

    pub fn truncation(&self) -> usize {
        self.v.len()
    }

    pub fn occupied(&self) -> usize {
        let mut seen = vec![false; self.truncation()];
        for &k in &self.z {
            seen[k] = true;
        }
        seen.iter().filter(|s| **s).count()
    }

    /// `sum_k pi_k N(x; mu_k, sigma2_k)`.
    pub fn density(&self, x: f64) -> f64 {
        self.pi
            .iter()
            .zip(&self.mu)
            .zip(&self.sigma2)
            .map(|((p, m), s2)| {
                let s = s2.sqrt();
                let z = (x - m) / s;
                p * (-0.5 * z * z - s.ln() - LN_SQRT_2PI).exp()
            })
            .sum()
    }

    /// Mixture density on a uniform grid; contributions beyond ten standard
    /// deviations of a component are dropped.
    pub fn density_on_grid(&self, grid: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let lo = grid[0];
        let h = (grid[grid.len() - 1] - lo) / (grid.len() - 1) as f64;
        for ((&p, &m), &s2) in self.pi.iter().zip(&self.mu).zip(&self.sigma2) {
            if p <= 0.0 {
                continue;
            }
            let s = s2.sqrt();
            let first = (((m - 10.0 * s - lo) / h).floor().max(0.0)) as usize;
            let last = (((m + 10.0 * s - lo) / h).ceil().min((grid.len() - 1) as f64)).max(-1.0);
            if last < 0.0 || first >= grid.len() {
                continue;
            }
            let norm = p / (s * (2.0 * std::f64::consts::PI).sqrt());
            for i in first..=last as usize {
                let z = (grid[i] - m) / s;
                out[i] += norm * (-0.5 * z * z).exp();
            }
        }
    }
}

/// One blocked Gibbs sweep, updating in order the indicators, stick
/// fractions, component means, component variances, `theta` and `alpha`.
/// Returns how many stick fractions had to be clamped below 1.
pub fn gibbs_sweep(state: &mut DpmmState, data: &[f64], hyper: &DpmmHyper, rng: &mut RngStream) -> Result<usize> {
    let n_comp = state.truncation();
    if data.len() != state.z.len() {
        return Err(Error::param(format!(
            "{} indicators for {} observations",
            state.z.len(),
            data.len()
        )));
    }

    // indicators
    let log_pi: Vec<f64> = state.pi.iter().map(|p| p.ln()).collect();
    let log_sd: Vec<f64> = state.sigma2.iter().map(|s| 0.5 * s.ln()).collect();
    let inv_var: Vec<f64> = state.sigma2.iter().map(|s| 1.0 / s).collect();
    let mut lw = vec![0.0; n_comp];
    let mut scratch = Vec::with_capacity(n_comp);
    for (zi, &x) in state.z.iter_mut().zip(data) {
        for k in 0..n_comp {
            let d = x - state.mu[k];
            lw[k] = log_pi[k] - log_sd[k] - 0.5 * d * d * inv_var[k];
        }
        *zi = draw_categorical_log(rng, &lw, &mut scratch);
    }
    let mut m = vec![0usize; n_comp];
    let mut sum = vec![0.0; n_comp];
    for (&k, &x) in state.z.iter().zip(data) {
        m[k] += 1;
        sum[k] += x;
    }

    // stick fractions
    let mut clamped = 0;
    let mut tail = data.len() - m[0];
    for k in 0..n_comp - 1 {
        let mut vk = draw_beta(rng, 1.0 + m[k] as f64, state.alpha + tail as f64)?;
        if vk > MAX_STICK {
            vk = MAX_STICK;
            clamped += 1;
        }
        state.v[k] = vk;
        tail -= m[k + 1];
    }
    state.v[n_comp - 1] = 1.0;
    stick_break_into(&state.v, &mut state.pi);

    // component means, then variances given the new means
    for k in 0..n_comp {
        let prec = m[k] as f64 / state.sigma2[k] + 1.0 / hyper.sigma_mu2;
        let lin = sum[k] / state.sigma2[k] + state.theta / hyper.sigma_mu2;
        state.mu[k] = draw_normal(rng, lin / prec, prec.recip().sqrt())?;
    }
    let mut ss = vec![0.0; n_comp];
    for (&k, &x) in state.z.iter().zip(data) {
        let d = x - state.mu[k];
        ss[k] += d * d;
    }
    for k in 0..n_comp {
        state.sigma2[k] = draw_inverse_gamma(rng, hyper.nu1 + 0.5 * m[k] as f64, hyper.nu2 + 0.5 * ss[k])?;
    }

    // theta
    let prec = n_comp as f64 / hyper.sigma_mu2 + 1.0 / hyper.a;
    let lin = state.mu.iter().sum::<f64>() / hyper.sigma_mu2;
    state.theta = draw_normal(rng, lin / prec, prec.recip().sqrt())?;

    // concentration
    let log_rest: f64 = state.v[..n_comp - 1].iter().map(|v| (-v).ln_1p()).sum();
    state.alpha = draw_gamma(rng, hyper.eta1 + n_comp as f64 - 1.0, hyper.eta2 - log_rest)?;
    Ok(clamped)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpmmConfig {
    pub truncation: usize,
    /// `None` uses [`DpmmHyper::for_interval`].
    pub hyper: Option<DpmmHyper>,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    pub thin: usize,
}

impl Default for DpmmConfig {
    fn default() -> Self {
        Self {
            truncation: 35,
            hyper: None,
            iterations: 5000,
            burnin: 1000,
            seed: 0,
            thin: DEFAULT_THIN,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DpmmFit {
    pub estimate: DensityEstimate,
    pub alpha_trace: Vec<f64>,
    pub occupied_trace: Vec<usize>,
    /// Largest mixture weight per retained draw.
    pub max_weight_trace: Vec<f64>,
    pub hyper: DpmmHyper,
}

pub fn fit_dpmm(data: &SampleSet, config: &DpmmConfig) -> Result<DpmmFit> {
    if config.iterations <= config.burnin {
        return Err(Error::param(format!(
            "iterations ({}) must exceed burn-in ({})",
            config.iterations, config.burnin
        )));
    }
    let hyper = config.hyper.unwrap_or_else(|| DpmmHyper::for_interval(data.interval()));
    hyper.validate()?;
    let mut rng = RngStream::new(config.seed);
    let x = data.values();
    let mut state = DpmmState::initial(x, config.truncation, &hyper, &mut rng)?;
    let mut acc = DrawAccumulator::new(data.interval(), config.thin);
    let grid = acc.grid().to_vec();
    let retained = config.iterations - config.burnin;
    let mut alpha_trace = Vec::with_capacity(retained);
    let mut occupied_trace = Vec::with_capacity(retained);
    let mut max_weight_trace = Vec::with_capacity(retained);
    let mut clamped = 0;
    for it in 0..config.iterations {
        clamped += gibbs_sweep(&mut state, x, &hyper, &mut rng)?;
        if it < config.burnin {
            continue;
        }
        let mut draw = vec![0.0; grid.len()];
        state.density_on_grid(&grid, &mut draw);
        acc.push(draw);
        alpha_trace.push(state.alpha);
        occupied_trace.push(state.occupied());
        max_weight_trace.push(state.pi.iter().copied().fold(0.0, f64::max));
    }
    let mut diagnostics = FitDiagnostics {
        method: "dpmm".into(),
        iterations: config.iterations,
        burnin: config.burnin,
        clamped_sticks: Some(clamped),
        ..Default::default()
    };
    if acc.degenerate() > 0 {
        diagnostics.warnings.push(format!(
            "{} draws put no mass on the working interval and were excluded",
            acc.degenerate()
        ));
    }
    let estimate = acc
        .finish(diagnostics)
        .ok_or_else(|| Error::numeric("every mixture draw was degenerate"))?;
    Ok(DpmmFit {
        estimate,
        alpha_trace,
        occupied_trace,
        max_weight_trace,
        hyper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{integrate_adaptive, ks_one_sample};

    #[test]
    fn stick_examples() {
        assert_eq!(stick_break(&[1.0, 0.3, 1.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(stick_break(&[0.5, 0.5, 0.5, 1.0]).unwrap(), vec![0.5, 0.25, 0.125, 0.125]);
        assert!(stick_break(&[0.5, 1.2, 1.0]).is_err());
        assert!(stick_break(&[0.5, 0.5]).is_err());
    }

    fn unit_hyper() -> DpmmHyper {
        DpmmHyper::for_interval(Interval::new(0.0, 10.0).unwrap())
    }

    #[test]
    fn empty_components_draw_from_prior() {
        // all data in component 0; component 1 sees only the prior
        let hyper = unit_hyper();
        let data = vec![5.0; 20];
        let mut rng = RngStream::new(1);
        let mut mus = Vec::new();
        let mut s2s = Vec::new();
        for _ in 0..4000 {
            let mut st = DpmmState::initial(&data, 2, &hyper, &mut rng).unwrap();
            st.mu = vec![5.0, 1e6];
            st.sigma2 = vec![1.0, 1.0];
            st.theta = 2.0;
            gibbs_sweep(&mut st, &data, &hyper, &mut rng).unwrap();
            assert!(st.z.iter().all(|&k| k == 0));
            mus.push(st.mu[1]);
            s2s.push(st.sigma2[1]);
        }
        let normal = statrs::distribution::Normal::new(2.0, hyper.sigma_mu2.sqrt()).unwrap();
        let ks = ks_one_sample(&mus, |x| statrs::distribution::ContinuousCDF::cdf(&normal, x));
        assert!(ks.p_value > 0.01, "{ks:?}");
        let gamma = statrs::distribution::Gamma::new(hyper.nu1, hyper.nu2).unwrap();
        let ks = ks_one_sample(&s2s, |x| statrs::distribution::ContinuousCDF::sf(&gamma, 1.0 / x));
        assert!(ks.p_value > 0.01, "{ks:?}");
    }

    #[test]
    fn isolated_point_picks_its_component() {
        let hyper = unit_hyper();
        let mut rng = RngStream::new(2);
        let mut hits = 0;
        for _ in 0..500 {
            let mut st = DpmmState::initial(&[3.0], 3, &hyper, &mut rng).unwrap();
            st.mu = vec![3.0, 13.0, -7.0];
            st.sigma2 = vec![1.0; 3];
            gibbs_sweep(&mut st, &[3.0], &hyper, &mut rng).unwrap();
            if st.z[0] == 0 {
                hits += 1;
            }
        }
        assert!(hits >= 495, "{hits}");
    }

    #[test]
    fn tight_cluster_dominates() {
        let mut rng = RngStream::new(3);
        let x: Vec<f64> = (0..200).map(|_| draw_normal(&mut rng, 5.0, 0.05).unwrap()).collect();
        let data = SampleSet::new(x, Interval::new(0.0, 10.0).unwrap()).unwrap();
        let fit = fit_dpmm(
            &data,
            &DpmmConfig {
                truncation: 20,
                iterations: 1000,
                burnin: 500,
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let big = fit.max_weight_trace.iter().filter(|&&w| w >= 0.9).count();
        assert!(big as f64 >= 0.95 * fit.max_weight_trace.len() as f64, "{big}");
    }

    #[test]
    fn density_is_label_invariant() {
        let hyper = unit_hyper();
        let mut rng = RngStream::new(5);
        let data: Vec<f64> = (0..50).map(|i| (i % 10) as f64).collect();
        let mut st = DpmmState::initial(&data, 6, &hyper, &mut rng).unwrap();
        for _ in 0..20 {
            gibbs_sweep(&mut st, &data, &hyper, &mut rng).unwrap();
        }
        let perm = [3, 0, 5, 1, 4, 2];
        let permuted = DpmmState {
            v: st.v.clone(),
            pi: perm.iter().map(|&k| st.pi[k]).collect(),
            mu: perm.iter().map(|&k| st.mu[k]).collect(),
            sigma2: perm.iter().map(|&k| st.sigma2[k]).collect(),
            z: st.z.clone(),
            theta: st.theta,
            alpha: st.alpha,
        };
        for x in [-1.0, 0.5, 3.3, 9.9] {
            let (a, b) = (st.density(x), permuted.density(x));
            assert!((a - b).abs() <= 1e-14 * a.max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn grid_density_matches_pointwise() {
        let hyper = unit_hyper();
        let mut rng = RngStream::new(6);
        let data: Vec<f64> = (0..30).map(|i| (i % 7) as f64 + 0.5).collect();
        let mut st = DpmmState::initial(&data, 8, &hyper, &mut rng).unwrap();
        for _ in 0..10 {
            gibbs_sweep(&mut st, &data, &hyper, &mut rng).unwrap();
        }
        let grid = Interval::new(-5.0, 15.0).unwrap().grid(512);
        let mut out = vec![0.0; 512];
        st.density_on_grid(&grid, &mut out);
        for (x, f) in grid.iter().zip(&out) {
            assert!((st.density(*x) - f).abs() < 1e-12);
        }
        let total = integrate_adaptive(&|x| st.density(x), -100.0, 110.0, 1e-10);
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_config() {
        let data = SampleSet::from_values(vec![0.0, 1.0]).unwrap();
        let cfg = DpmmConfig { truncation: 1, iterations: 10, burnin: 1, ..Default::default() };
        assert!(fit_dpmm(&data, &cfg).is_err());
        let cfg = DpmmConfig { iterations: 10, burnin: 10, ..Default::default() };
        assert!(fit_dpmm(&data, &cfg).is_err());
        let mut hyper = unit_hyper();
        hyper.eta2 = 0.0;
        let cfg = DpmmConfig { hyper: Some(hyper), iterations: 10, burnin: 1, ..Default::default() };
        assert!(matches!(fit_dpmm(&data, &cfg), Err(Error::InvalidParameter(_))));
    }
}
