//! Seeded random draws and the dense linear algebra shared by the samplers.
//!
//! Inverse gamma draws use the shape/scale parameterization with density
//! proportional to `x^-(shape+1) exp(-scale/x)`. Gamma draws use shape/rate.

mod linalg;
mod rng;

pub use linalg::{dot, sym_eigen, Cholesky, Matrix, SymEigen, SymMatrix, SYMMETRY_TOL};
pub use rng::RngStream;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};

/// Tail mass below which a truncated inverse gamma is treated as degenerate.
pub const MIN_TRUNCATION_MASS: f64 = 1e-12;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn standard_normal(rng: &mut RngStream) -> f64 {
    StandardNormal.sample(rng)
}

pub fn draw_normal(rng: &mut RngStream, mean: f64, sd: f64) -> Result<f64> {
    check_positive("sd", sd)?;
    if !mean.is_finite() {
        return Err(Error::param(format!("mean must be finite, got {mean}")));
    }
    Ok(mean + sd * standard_normal(rng))
}

pub fn draw_gamma(rng: &mut RngStream, shape: f64, rate: f64) -> Result<f64> {
    check_positive("shape", shape)?;
    check_positive("rate", rate)?;
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::param(e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn draw_inverse_gamma(rng: &mut RngStream, shape: f64, scale: f64) -> Result<f64> {
    check_positive("shape", shape)?;
    check_positive("scale", scale)?;
    let g = Gamma::new(shape, 1.0).map_err(|e| Error::param(e.to_string()))?;
    Ok(scale / g.sample(rng))
}

pub fn draw_beta(rng: &mut RngStream, a: f64, b: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    let d = Beta::new(a, b).map_err(|e| Error::param(e.to_string()))?;
    Ok(d.sample(rng))
}

/// Inverse gamma restricted to `(0, upper]`, drawn by inverting the
/// regularized incomplete gamma function of the reciprocal.
///
/// If `X ~ IG(shape, scale)` then `scale / X ~ Gamma(shape, 1)`, and the
/// restriction `X <= upper` becomes `scale / X >= scale / upper`.
pub fn draw_truncated_inverse_gamma(
    rng: &mut RngStream,
    shape: f64,
    scale: f64,
    upper: f64,
) -> Result<f64> {
    check_positive("shape", shape)?;
    check_positive("scale", scale)?;
    if !(upper > 0.0) {
        return Err(Error::param(format!("upper bound must be positive, got {upper}")));
    }
    let g0 = scale / upper;
    let (p0, q0) = if g0 == 0.0 {
        (0.0, 1.0)
    } else {
        (gamma_lr(shape, g0), gamma_ur(shape, g0))
    };
    if !(q0 >= MIN_TRUNCATION_MASS) {
        return Err(Error::DegenerateTruncation { upper, mass: q0 });
    }
    let u = rng.uniform_open();
    // Target the tail through whichever of P/Q is better conditioned.
    let tail = u * q0;
    let target = if tail < 0.5 {
        Target::Upper(tail)
    } else {
        Target::Lower(p0 + (1.0 - u) * q0)
    };
    let g = invert_gamma_cdf(shape, g0, target)?;
    Ok((scale / g).min(upper))
}

#[derive(Clone, Copy, Debug)]
enum Target {
    /// Solve Q(a, g) = t.
    Upper(f64),
    /// Solve P(a, g) = t.
    Lower(f64),
}

/// Safeguarded Newton on the standard gamma CDF, restricted to `g >= lo`.
fn invert_gamma_cdf(shape: f64, lo: f64, target: Target) -> Result<f64> {
    let ln_gamma_shape = ln_gamma(shape);
    // residual is increasing in g for both targets
    let residual = |g: f64| -> f64 {
        match target {
            Target::Upper(t) => t - gamma_ur(shape, g),
            Target::Lower(t) => gamma_lr(shape, g) - t,
        }
    };
    let density = |g: f64| -> f64 { ((shape - 1.0) * g.ln() - g - ln_gamma_shape).exp() };

    let mut a = lo;
    let mut b = lo.max(shape).max(1.0);
    let mut grow = 0;
    while residual(b) < 0.0 {
        a = b;
        b *= 2.0;
        grow += 1;
        if grow > 2000 || !b.is_finite() {
            return Err(Error::numeric("failed to bracket gamma quantile"));
        }
    }

    let mut g = 0.5 * (a + b);
    for _ in 0..200 {
        let r = residual(g);
        if r == 0.0 {
            return Ok(g);
        }
        if r < 0.0 {
            a = g;
        } else {
            b = g;
        }
        let d = density(g);
        let mut next = if d > 0.0 && d.is_finite() { g - r / d } else { f64::NAN };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        if (next - g).abs() <= 1e-15 * g.abs().max(f64::MIN_POSITIVE) || b - a <= 1e-15 * b {
            return Ok(next.max(lo));
        }
        g = next;
    }
    Ok(g.max(lo))
}

/// Draws an index with probability proportional to `probs`.
pub fn draw_categorical(rng: &mut RngStream, probs: &[f64]) -> Result<usize> {
    let mut total = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::param(format!("probability {i} is invalid: {p}")));
        }
        total += p;
    }
    if !(total > 0.0) {
        return Err(Error::param("probabilities are all zero"));
    }
    Ok(pick_cumulative(rng, probs, total))
}

fn pick_cumulative(rng: &mut RngStream, weights: &[f64], total: f64) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Categorical draw from unnormalized log weights. `scratch` is resized as
/// needed; at least one weight must be finite.
pub fn draw_categorical_log(rng: &mut RngStream, log_weights: &[f64], scratch: &mut Vec<f64>) -> usize {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max.is_finite(), "no finite log weight");
    scratch.clear();
    let mut total = 0.0;
    for &lw in log_weights {
        let w = (lw - max).exp();
        total += w;
        scratch.push(w);
    }
    pick_cumulative(rng, scratch, total)
}

/// Multivariate normal draw. Falls back to an eigendecomposition when the
/// covariance is positive semidefinite but singular.
pub fn draw_mvn(rng: &mut RngStream, mean: &[f64], cov: &SymMatrix) -> Result<Vec<f64>> {
    let n = cov.dim();
    if mean.len() != n {
        return Err(Error::param(format!(
            "mean has length {}, covariance is {n}x{n}",
            mean.len()
        )));
    }
    let z: Vec<f64> = (0..n).map(|_| standard_normal(rng)).collect();
    match cov.cholesky() {
        Ok(ch) => {
            let lz = ch.mul_lower(&z);
            Ok(mean.iter().zip(lz).map(|(m, v)| m + v).collect())
        }
        Err(err @ Error::Decomposition { .. }) => {
            let eig = sym_eigen(cov)?;
            let scale = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if eig.values.iter().any(|&v| v < -1e-10 * scale) {
                return Err(err);
            }
            let mut out = mean.to_vec();
            for k in 0..n {
                let s = eig.values[k].max(0.0).sqrt() * z[k];
                if s == 0.0 {
                    continue;
                }
                for (i, o) in out.iter_mut().enumerate() {
                    *o += eig.vectors[(i, k)] * s;
                }
            }
            Ok(out)
        }
        Err(e) => Err(e),
    }
}

/// Normal draw given in canonical form: precision `Λ` and linear term `b`,
/// i.e. `N(Λ⁻¹ b, Λ⁻¹)`.
pub fn draw_mvn_canonical(rng: &mut RngStream, precision: &SymMatrix, linear: &[f64]) -> Result<Vec<f64>> {
    let ch = precision.cholesky()?;
    let mean = ch.solve(linear);
    let mut z: Vec<f64> = (0..precision.dim()).map(|_| standard_normal(rng)).collect();
    ch.solve_upper_in_place(&mut z);
    Ok(mean.iter().zip(z).map(|(m, v)| m + v).collect())
}
