//! Large-sample normal approximation to the posterior of the mixture logits.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{mean, median, std_dev};
use crate::error::{Error, Result};
use crate::pgm::{fit_pgm, sample_logits_fixed, softmax_into, PenaltyMatrix, PgmConfig};
use crate::sample::SampleSet;
use crate::stochastics::{RngStream, SymMatrix};

/// Pseudo-count added to every component when some component is empty.
pub const ZERO_COUNT_SMOOTHING: f64 = 0.5;

/// Multinomial logit MLE `beta_j = ln n_j - ln n_1`, together with the
/// counts it was computed from (smoothed if any count was zero).
pub fn multinomial_mle(counts: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if counts.len() < 2 {
        return Err(Error::param("need at least two components"));
    }
    if let Some(c) = counts.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(Error::param(format!("invalid count {c}")));
    }
    if !(counts.iter().sum::<f64>() > 0.0) {
        return Err(Error::param("counts sum to zero"));
    }
    let used: Vec<f64> = if counts.contains(&0.0) {
        warn!("empty components: adding {ZERO_COUNT_SMOOTHING} to every count");
        counts.iter().map(|c| c + ZERO_COUNT_SMOOTHING).collect()
    } else {
        counts.to_vec()
    };
    let base = used[0].ln();
    let beta = used[1..].iter().map(|c| c.ln() - base).collect();
    Ok((beta, used))
}

/// `J_jl = n (c_j delta_jl - c_j c_l)` over the free logits.
pub fn observed_information(beta_hat: &[f64], n: f64) -> SymMatrix {
    let mut c = vec![0.0; beta_hat.len() + 1];
    softmax_into(beta_hat, &mut c);
    SymMatrix::from_upper(beta_hat.len(), |i, j| {
        let d = if i == j { c[i + 1] } else { 0.0 };
        n * (d - c[i + 1] * c[j + 1])
    })
}

#[derive(Clone, Debug)]
pub struct LaplaceApprox {
    pub beta_hat: Vec<f64>,
    pub j_hat: SymMatrix,
    pub prior_precision: SymMatrix,
    pub prior_mean: Vec<f64>,
    /// Posterior precision `J_hat + A0inv`.
    pub j_n: SymMatrix,
    pub m_n: Vec<f64>,
    /// `J_n^{-1}`.
    pub covariance: SymMatrix,
    /// Whether zero counts were smoothed.
    pub smoothed: bool,
}

impl LaplaceApprox {
    pub fn posterior_sd(&self) -> Vec<f64> {
        self.covariance.diag().iter().map(|v| v.sqrt()).collect()
    }
}

/// Normal approximation `N(m_n, J_n^{-1})` for a normal prior with precision
/// `prior_precision` and mean `prior_mean`.
pub fn laplace_posterior(counts: &[f64], prior_mean: &[f64], prior_precision: &SymMatrix) -> Result<LaplaceApprox> {
    let (beta_hat, used) = multinomial_mle(counts)?;
    let dim = beta_hat.len();
    if prior_mean.len() != dim || prior_precision.dim() != dim {
        return Err(Error::param(format!(
            "prior has dimension {}/{}, expected {dim}",
            prior_mean.len(),
            prior_precision.dim()
        )));
    }
    let n: f64 = used.iter().sum();
    let j_hat = observed_information(&beta_hat, n);
    let j_n = j_hat.add(prior_precision);
    let chol = j_n
        .cholesky()
        .map_err(|e| Error::numeric(format!("posterior precision is singular: {e}")))?;
    let a = prior_precision.mul_vec(prior_mean);
    let b = j_hat.mul_vec(&beta_hat);
    let rhs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    // flat prior: J_n = J_hat and the mean is the MLE itself
    let m_n = if prior_precision.max_abs() == 0.0 {
        beta_hat.clone()
    } else {
        chol.solve(&rhs)
    };
    Ok(LaplaceApprox {
        smoothed: used.as_slice() != counts,
        covariance: chol.inverse(),
        beta_hat,
        j_hat,
        prior_precision: prior_precision.clone(),
        prior_mean: prior_mean.to_vec(),
        j_n,
        m_n,
    })
}

/// Approximation under the mixture penalty prior: zero mean, precision
/// `P* / tau2`.
pub fn laplace_penalized(counts: &[f64], penalty: &PenaltyMatrix, tau2: f64) -> Result<LaplaceApprox> {
    if !(tau2 > 0.0 && tau2.is_finite()) {
        return Err(Error::param(format!("tau2 must be positive, got {tau2}")));
    }
    laplace_posterior(counts, &vec![0.0; penalty.dim()], &penalty.pstar.scaled(1.0 / tau2))
}

/// Agreement between the approximation and an HMC chain at fixed `tau2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceReport {
    pub components: usize,
    pub tau2: f64,
    pub counts: Vec<f64>,
    pub m_n: Vec<f64>,
    pub laplace_sd: Vec<f64>,
    pub chain_mean: Vec<f64>,
    pub chain_sd: Vec<f64>,
    /// `(m_n - chain mean) / chain sd` per logit.
    pub z_scores: Vec<f64>,
    pub max_abs_z: f64,
    pub acceptance_rate: f64,
}

/// Compares the approximation with an HMC chain run on `counts` at `tau2`.
pub fn compare_with_chain(
    counts: &[f64],
    penalty: &PenaltyMatrix,
    tau2: f64,
    config: &PgmConfig,
    rng: &mut RngStream,
) -> Result<LaplaceReport> {
    let approx = laplace_penalized(counts, penalty, tau2)?;
    let (draws, stats) = sample_logits_fixed(
        counts,
        tau2,
        penalty,
        &config.hmc,
        config.iterations,
        config.burnin,
        rng,
    )?;
    let dim = penalty.dim();
    let mut chain_mean = Vec::with_capacity(dim);
    let mut chain_sd = Vec::with_capacity(dim);
    for j in 0..dim {
        let col: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        chain_mean.push(mean(&col));
        chain_sd.push(std_dev(&col));
    }
    let z_scores: Vec<f64> = approx
        .m_n
        .iter()
        .zip(&chain_mean)
        .zip(&chain_sd)
        .map(|((m, c), s)| (m - c) / s)
        .collect();
    Ok(LaplaceReport {
        components: dim + 1,
        tau2,
        counts: counts.to_vec(),
        laplace_sd: approx.posterior_sd(),
        m_n: approx.m_n,
        chain_mean,
        chain_sd,
        max_abs_z: z_scores.iter().fold(0.0_f64, |m, z| m.max(z.abs())),
        z_scores,
        acceptance_rate: stats.acceptance_rate(),
    })
}

/// Fits the full mixture chain, then checks the approximation at the chain's
/// posterior-median `tau2` and posterior-mean component counts.
pub fn laplace_check(data: &SampleSet, config: &PgmConfig) -> Result<LaplaceReport> {
    let fit = fit_pgm(data, config)?;
    let tau2 = median(&fit.tau2_trace);
    let penalty = PenaltyMatrix::new(config.components, config.c)?;
    let mut rng = RngStream::new(config.seed).substream(1);
    compare_with_chain(&fit.mean_counts, &penalty, tau2, config, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pgm::{neg_log_posterior, weights_from_beta};

    #[test]
    fn mle_examples() {
        let (b, _) = multinomial_mle(&[10.0, 10.0, 10.0]).unwrap();
        assert_eq!(b, vec![0.0, 0.0]);
        let (b, _) = multinomial_mle(&[10.0, 20.0, 30.0]).unwrap();
        assert!((b[0] - 2f64.ln()).abs() < 1e-15 && (b[1] - 3f64.ln()).abs() < 1e-15);
        let c = weights_from_beta(&b).unwrap();
        assert!((c[0] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn zero_counts_are_smoothed() {
        let (b, used) = multinomial_mle(&[0.0, 4.0, 2.0]).unwrap();
        assert_eq!(used, vec![0.5, 4.5, 2.5]);
        assert!(b.iter().all(|v| v.is_finite()));
        let c = weights_from_beta(&b).unwrap();
        for (ci, ui) in c.iter().zip(&used) {
            assert!((ci - ui / 7.5).abs() < 1e-15);
        }
        assert!(multinomial_mle(&[0.0, 0.0]).is_err());
        assert!(multinomial_mle(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn binomial_information() {
        let beta = [0.4];
        let c = weights_from_beta(&beta).unwrap();
        let j = observed_information(&beta, 50.0);
        assert!((j[(0, 0)] - 50.0 * c[1] * (1.0 - c[1])).abs() < 1e-12);
    }

    #[test]
    fn information_matches_finite_differences() {
        let beta = [0.3, -0.5, 1.1, 0.2];
        let n = 120.0;
        let counts = [20.0, 15.0, 50.0, 35.0, 0.0];
        let pen = PenaltyMatrix::new(5, 1.0).unwrap();
        // U with tau2 -> inf is -sum n_j log c_j, whose Hessian is J
        let u = |b: &[f64]| neg_log_posterior(b, &counts, 1e300, &pen);
        let j = observed_information(&beta, n);
        let h = 1e-4;
        for a in 0..4 {
            for b in 0..4 {
                let mut pp = beta.to_vec();
                let mut pm = beta.to_vec();
                let mut mp = beta.to_vec();
                let mut mm = beta.to_vec();
                pp[a] += h;
                pp[b] += h;
                pm[a] += h;
                pm[b] -= h;
                mp[a] -= h;
                mp[b] += h;
                mm[a] -= h;
                mm[b] -= h;
                let fd = (u(&pp) - u(&pm) - u(&mp) + u(&mm)) / (4.0 * h * h);
                assert!((fd - j[(a, b)]).abs() <= 1e-6 * j.max_abs().max(1.0) * 10.0, "({a},{b}) {fd} {}", j[(a, b)]);
            }
        }
        // row sums equal n c_j c_1
        let c = weights_from_beta(&beta).unwrap();
        for a in 0..4 {
            let s: f64 = (0..4).map(|b| j[(a, b)]).sum();
            assert!((s - n * c[a + 1] * c[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn flat_and_dogmatic_limits() {
        let counts = [30.0, 50.0, 10.0, 60.0];
        let flat = laplace_posterior(&counts, &[0.0; 3], &SymMatrix::zeros(3)).unwrap();
        assert_eq!(flat.m_n, flat.beta_hat);
        assert_eq!(flat.j_n, flat.j_hat);
        let prior_mean = [1.0, -2.0, 0.5];
        let strong = laplace_posterior(&counts, &prior_mean, &SymMatrix::identity(3).scaled(1e12)).unwrap();
        for (m, b) in strong.m_n.iter().zip(&prior_mean) {
            assert!((m - b).abs() < 1e-8);
        }
    }

    #[test]
    fn approximation_approaches_mle() {
        let pen = PenaltyMatrix::new(6, 100.0).unwrap();
        let c = [0.1, 0.15, 0.3, 0.25, 0.12, 0.08];
        let mut last = f64::INFINITY;
        for n in [1e2, 1e3, 1e4] {
            let counts: Vec<f64> = c.iter().map(|p| p * n).collect();
            let a = laplace_penalized(&counts, &pen, 1.0).unwrap();
            let gap = a
                .m_n
                .iter()
                .zip(&a.beta_hat)
                .map(|(m, b)| (m - b) * (m - b))
                .sum::<f64>()
                .sqrt();
            assert!(gap < last, "n={n}: {gap} >= {last}");
            last = gap;
        }
    }
}
